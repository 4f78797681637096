//! WSDL/XSD ingestion.
//!
//! A jGASW service exposes one operation whose response wraps a single
//! composite element. Ingest keeps the composite as one grounded output but
//! also records every leaf of its type as an expansion, so the result can
//! be split apart later. Type annotations are left as XSD builtins; the
//! `annotate` step refines them with ontology classes.

mod wsdl;
mod xsd;

use indexmap::IndexMap;
use thiserror::Error;

use crate::iri::PrefixMap;
use crate::semodel::{
    default_base, Direction, Grounding, NlogParameter, OutputDecl, ParamRef, Parameter, Profile, ServiceAnnotation,
    TypeRef, XsdType,
};

pub use wsdl::{parse_wsdl, WsdlDoc, WsdlOperation};
pub use xsd::{flatten_type, parse_xsd, ElementType, LeafField, XsdElement, XsdSchema, XS_NS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("document declares no operation")]
    MissingOperation,
    #[error("several operations declared ({}); select one", .0.join(", "))]
    AmbiguousOperation(Vec<String>),
    #[error("no operation named `{0}`")]
    UnknownOperation(String),
    #[error("operation `{operation}` references unknown message `{message}`")]
    UnresolvedMessage { operation: String, message: String },
    #[error("unsupported schema construct: {0}")]
    UnsupportedConstruct(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("recursive type chain: {}", .0.join(" -> "))]
    Recursion(Vec<String>),
    #[error("leaf name `{0}` occurs more than once in the flattened type")]
    DuplicateLeafName(String),
    #[error("leaf `{leaf}` has builtin type `xs:{ty}`, only string and anyURI are supported")]
    UnsupportedBuiltin { leaf: String, ty: String },
}

fn leaf_type(leaf: &LeafField) -> Result<TypeRef, IngestError> {
    XsdType::from_local(&leaf.xsd_type)
        .map(TypeRef::Builtin)
        .ok_or_else(|| IngestError::UnsupportedBuiltin {
            leaf: leaf.name.clone(),
            ty: leaf.xsd_type.clone(),
        })
}

/// Build an annotation skeleton for the selected operation of `wsdl`.
///
/// Inputs become `input1..n` grounded to the request leaves. The response
/// becomes one output `output1` grounded to the composite part, with one
/// expansion per leaf (id and markup both equal to the leaf name).
pub fn generate_skeleton(
    wsdl: &WsdlDoc,
    schema: &XsdSchema,
    service_name: &str,
) -> Result<ServiceAnnotation, IngestError> {
    let op = wsdl.operation();
    let input_type = schema.element_type(&op.input_element)?;
    let output_type = schema.element_type(&op.output_element)?;

    let mut inputs = Vec::new();
    let mut input_parts = IndexMap::new();
    for (i, leaf) in flatten_type(schema, input_type)?.iter().enumerate() {
        let id = format!("input{}", i + 1);
        inputs.push(Parameter {
            id: ParamRef::new(service_name, &id),
            direction: Direction::Input,
            parameter_type: leaf_type(leaf)?,
            links: Vec::new(),
        });
        input_parts.insert(id, leaf.name.clone());
    }

    let expands_to = flatten_type(schema, output_type)?
        .iter()
        .map(|leaf| {
            Ok(NlogParameter {
                id: ParamRef::new(service_name, &leaf.name),
                has_id: leaf.name.clone(),
                has_label: String::new(),
                parameter_type: leaf_type(leaf)?,
                links: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>, IngestError>>()?;

    let direct = &schema.complex_types[output_type];
    let output_message_part = match direct.as_slice() {
        [single] => single.name.clone(),
        _ => op
            .output_element
            .rsplit_once(':')
            .map(|(_, l)| l)
            .unwrap_or(&op.output_element)
            .to_string(),
    };

    let output = OutputDecl {
        base: Parameter {
            id: ParamRef::new(service_name, "output1"),
            direction: Direction::Output,
            parameter_type: TypeRef::Builtin(XsdType::String),
            links: Vec::new(),
        },
        expands_to,
    };

    let namespace = if wsdl.target_ns.is_empty() {
        schema.target_ns.clone().unwrap_or_default()
    } else {
        wsdl.target_ns.clone()
    };

    Ok(ServiceAnnotation {
        name: service_name.to_string(),
        base: default_base(service_name),
        prefixes: PrefixMap::new(),
        profile: Profile {
            name: format!("{service_name}Profile"),
            refers_to: None,
            has_input: inputs.iter().map(|p| p.id.clone()).collect(),
            has_output: vec![output.base.id.clone()],
        },
        inputs,
        outputs: vec![output],
        grounding: Grounding {
            wsdl_uri: wsdl.endpoint.as_ref().map(|e| format!("{e}?wsdl")).unwrap_or_default(),
            namespace,
            operation: op.name.clone(),
            port_type: wsdl.port_type.clone(),
            input_parts,
            output_message_part,
        },
    })
}

/// Parse a WSDL that embeds its schema and generate the skeleton in one go.
pub fn ingest_wsdl(
    wsdl_text: &str,
    xsd_text: Option<&str>,
    operation: Option<&str>,
    service_name: &str,
) -> Result<ServiceAnnotation, IngestError> {
    let wsdl = parse_wsdl(wsdl_text, operation)?;
    let schema = parse_xsd(xsd_text.unwrap_or(wsdl_text))?;
    generate_skeleton(&wsdl, &schema, service_name)
}
