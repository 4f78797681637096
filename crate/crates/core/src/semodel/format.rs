//! TOML annotation files.
//!
//! ```toml
//! name = "Test1"
//! base = "http://localhost/kb/Test1_2.owl#"
//!
//! [prefixes]
//! ds = "http://localhost/dataset-owl-lite.owl#"
//!
//! [profile]
//! name = "Test1Profile"
//! refers_to = "dp:Segmentation"
//! has_input = ["input1"]
//! has_output = ["output1"]
//!
//! [[inputs]]
//! id = "input1"
//! type = "ds:Mr-dataset"
//!
//! [[outputs]]
//! id = "output1"
//! type = "xsd:string"
//!
//! [[outputs.expands]]
//! id = "simpleoutput"
//! has_id = "simpleoutput"
//! has_label = "registered image"
//! type = "ds:T1-weighted-MR-dataset"
//! links = ["ex002.input2"]
//!
//! [grounding]
//! wsdl_uri = "http://localhost:8080/Test1/jigsaw?wsdl"
//! namespace = "http://i3s.cnrs.fr/jigsaw"
//! operation = "local"
//! port_type = "jigsawPort"
//! output_message_part = "localResult"
//!
//! [grounding.input_parts]
//! input1 = "simpleinput"
//! ```
//!
//! Parameter ids are local to the service; `links` entries use the
//! `service.param` form (`WF.param` for workflow parameters).

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iri::{IriError, PrefixMap};
use crate::ontology::{ClassId, Ontology};

use super::{
    Direction, Grounding, NlogParameter, OutputDecl, ParamRef, Parameter, Profile, ServiceAnnotation, TypeRef,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid annotation document: {0}")]
    Toml(String),
    #[error("{context}: {source}")]
    Iri {
        context: String,
        #[source]
        source: IriError,
    },
    #[error("{0}")]
    Type(String),
    #[error(transparent)]
    ParamRef(#[from] super::ParamRefError),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("unknown class `{0}`")]
    UnknownClass(ClassId),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationDoc {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<String>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    prefixes: IndexMap<String, String>,
    profile: ProfileDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    inputs: Vec<ParamDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    outputs: Vec<OutputDoc>,
    grounding: GroundingDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    refers_to: Option<String>,
    #[serde(default)]
    has_input: Vec<String>,
    #[serde(default)]
    has_output: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamDoc {
    id: String,
    #[serde(rename = "type")]
    ty: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    links: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputDoc {
    id: String,
    #[serde(rename = "type")]
    ty: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    links: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    expands: Vec<ExpandDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpandDoc {
    id: String,
    has_id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    has_label: String,
    #[serde(rename = "type")]
    ty: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    links: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundingDoc {
    wsdl_uri: String,
    namespace: String,
    operation: String,
    port_type: String,
    output_message_part: String,
    #[serde(default)]
    input_parts: IndexMap<String, String>,
}

pub(crate) fn default_base(name: &str) -> String {
    format!("http://localhost/kb/{name}.owl#")
}

fn parse_type(term: &str, prefixes: &PrefixMap, context: &str) -> Result<TypeRef, FormatError> {
    let iri = prefixes.expand(term).map_err(|source| FormatError::Iri {
        context: context.to_string(),
        source,
    })?;
    TypeRef::from_iri(&iri).map_err(|m| FormatError::Type(format!("{context}: {m}")))
}

fn parse_links(links: &[String]) -> Result<Vec<ParamRef>, FormatError> {
    links.iter().map(|l| Ok(l.parse()?)).collect()
}

pub fn parse_annotation(text: &str) -> Result<ServiceAnnotation, FormatError> {
    let doc: AnnotationDoc = toml::from_str(text).map_err(|e| FormatError::Toml(e.to_string()))?;
    let mut prefixes = PrefixMap::new();
    for (p, ns) in &doc.prefixes {
        prefixes.insert(p.clone(), ns.clone());
    }
    let svc = doc.name.clone();
    let r = |param: &str| ParamRef::new(svc.clone(), param);

    let refers_to = match &doc.profile.refers_to {
        Some(term) => {
            let iri = prefixes.expand(term).map_err(|source| FormatError::Iri {
                context: "profile.refers_to".into(),
                source,
            })?;
            Some(ClassId::new(iri))
        }
        None => None,
    };

    let inputs = doc
        .inputs
        .iter()
        .map(|p| {
            Ok(Parameter {
                id: r(&p.id),
                direction: Direction::Input,
                parameter_type: parse_type(&p.ty, &prefixes, &format!("input `{}`", p.id))?,
                links: parse_links(&p.links)?,
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;

    let outputs = doc
        .outputs
        .iter()
        .map(|o| {
            let expands_to = o
                .expands
                .iter()
                .map(|e| {
                    Ok(NlogParameter {
                        id: r(&e.id),
                        has_id: e.has_id.clone(),
                        has_label: e.has_label.clone(),
                        parameter_type: parse_type(&e.ty, &prefixes, &format!("expansion `{}`", e.id))?,
                        links: parse_links(&e.links)?,
                    })
                })
                .collect::<Result<Vec<_>, FormatError>>()?;
            Ok(OutputDecl {
                base: Parameter {
                    id: r(&o.id),
                    direction: Direction::Output,
                    parameter_type: parse_type(&o.ty, &prefixes, &format!("output `{}`", o.id))?,
                    links: parse_links(&o.links)?,
                },
                expands_to,
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;

    let g = doc.grounding;
    Ok(ServiceAnnotation {
        base: doc.base.unwrap_or_else(|| default_base(&doc.name)),
        name: doc.name,
        prefixes,
        profile: Profile {
            name: doc.profile.name,
            refers_to,
            has_input: doc.profile.has_input.iter().map(|p| r(p)).collect(),
            has_output: doc.profile.has_output.iter().map(|p| r(p)).collect(),
        },
        inputs,
        outputs,
        grounding: Grounding {
            wsdl_uri: g.wsdl_uri,
            namespace: g.namespace,
            operation: g.operation,
            port_type: g.port_type,
            input_parts: g.input_parts,
            output_message_part: g.output_message_part,
        },
    })
}

/// Deterministic TOML rendering of an annotation.
pub fn serialize_annotation(s: &ServiceAnnotation) -> String {
    let px = &s.prefixes;
    let local = |r: &ParamRef| {
        if r.service == s.name {
            r.param.clone()
        } else {
            r.to_string()
        }
    };
    let links = |l: &[ParamRef]| l.iter().map(ToString::to_string).collect::<Vec<_>>();
    let doc = AnnotationDoc {
        name: s.name.clone(),
        base: Some(s.base.clone()),
        prefixes: px.iter().map(|(p, n)| (p.to_string(), n.to_string())).collect(),
        profile: ProfileDoc {
            name: s.profile.name.clone(),
            refers_to: s.profile.refers_to.as_ref().map(|c| px.compact(c.as_str())),
            has_input: s.profile.has_input.iter().map(local).collect(),
            has_output: s.profile.has_output.iter().map(local).collect(),
        },
        inputs: s
            .inputs
            .iter()
            .map(|p| ParamDoc {
                id: p.id.param.clone(),
                ty: p.parameter_type.display(px),
                links: links(&p.links),
            })
            .collect(),
        outputs: s
            .outputs
            .iter()
            .map(|o| OutputDoc {
                id: o.base.id.param.clone(),
                ty: o.base.parameter_type.display(px),
                links: links(&o.base.links),
                expands: o
                    .expands_to
                    .iter()
                    .map(|n| ExpandDoc {
                        id: n.id.param.clone(),
                        has_id: n.has_id.clone(),
                        has_label: n.has_label.clone(),
                        ty: n.parameter_type.display(px),
                        links: links(&n.links),
                    })
                    .collect(),
            })
            .collect(),
        grounding: GroundingDoc {
            wsdl_uri: s.grounding.wsdl_uri.clone(),
            namespace: s.grounding.namespace.clone(),
            operation: s.grounding.operation.clone(),
            port_type: s.grounding.port_type.clone(),
            output_message_part: s.grounding.output_message_part.clone(),
            input_parts: s.grounding.input_parts.clone(),
        },
    };
    toml::to_string(&doc).expect("annotation documents always serialize")
}

/// One user edit applied by [`apply_edits`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationEdit {
    SetType { param: String, type_term: String },
    RefersTo { class_term: String },
    AddLink { param: String, target: ParamRef },
    SetLabel { param: String, label: String },
}

/// Apply edits to an annotation document, preserving everything the edits
/// do not touch byte for byte. Applying the same edits twice yields the same
/// text. Class references must exist in `ontology`.
pub fn apply_edits(text: &str, edits: &[AnnotationEdit], ontology: &Ontology) -> Result<String, FormatError> {
    use toml_edit::{value, Array, DocumentMut, Item};

    let current = parse_annotation(text)?;
    let mut doc: DocumentMut = text
        .parse()
        .map_err(|e: toml_edit::TomlError| FormatError::Toml(e.to_string()))?;
    let mut prefixes = current.prefixes.clone();

    // Resolve a class or builtin term to the spelling written into the file.
    let mut resolve = |term: &str, doc: &mut DocumentMut| -> Result<(TypeRef, String), FormatError> {
        let iri = prefixes
            .expand(term)
            .or_else(|_| ontology.prefixes().expand(term))
            .map_err(|source| FormatError::Iri {
                context: format!("type `{term}`"),
                source,
            })?;
        let ty = TypeRef::from_iri(&iri).map_err(FormatError::Type)?;
        if let TypeRef::Class(c) = &ty {
            if !ontology.contains_class(c) {
                return Err(FormatError::UnknownClass(c.clone()));
            }
        }
        let mut written = prefixes.compact(&iri);
        if written.starts_with('<') {
            let borrowed = ontology
                .prefixes()
                .iter()
                .find(|(p, ns)| iri.starts_with(ns) && prefixes.get(p).is_none())
                .map(|(p, ns)| (p.to_string(), ns.to_string()));
            if let Some((p, ns)) = borrowed {
                prefixes.insert(p.clone(), ns.clone());
                let table = doc
                    .entry("prefixes")
                    .or_insert_with(toml_edit::table)
                    .as_table_mut()
                    .ok_or_else(|| FormatError::Toml("`prefixes` is not a table".into()))?;
                table.insert(&p, value(ns));
                written = prefixes.compact(&iri);
            }
        }
        Ok((ty, written))
    };

    for edit in edits {
        match edit {
            AnnotationEdit::RefersTo { class_term } => {
                let (ty, written) = resolve(class_term, &mut doc)?;
                if !matches!(ty, TypeRef::Class(_)) {
                    return Err(FormatError::Type(format!("`{class_term}` is not a class")));
                }
                doc["profile"]["refers_to"] = value(written);
            }
            AnnotationEdit::SetType { param, type_term } => {
                let (_, written) = resolve(type_term, &mut doc)?;
                let table = param_table(&mut doc, param)?;
                table["type"] = value(written);
            }
            AnnotationEdit::SetLabel { param, label } => {
                let table = param_table(&mut doc, param)?;
                if !table.contains_key("has_id") {
                    return Err(FormatError::Type(format!(
                        "`{param}` is not an expansion; only expansions carry labels"
                    )));
                }
                table["has_label"] = value(label.as_str());
            }
            AnnotationEdit::AddLink { param, target } => {
                let target = target.to_string();
                let table = param_table(&mut doc, param)?;
                let item = table.entry("links").or_insert(Item::Value(Array::new().into()));
                let arr = item
                    .as_array_mut()
                    .ok_or_else(|| FormatError::Toml(format!("`links` of `{param}` is not an array")))?;
                if !arr.iter().any(|v| v.as_str() == Some(target.as_str())) {
                    arr.push(target);
                }
            }
        }
    }

    let out = doc.to_string();
    parse_annotation(&out)?;
    Ok(out)
}

fn param_table<'d>(doc: &'d mut toml_edit::DocumentMut, param: &str) -> Result<&'d mut toml_edit::Table, FormatError> {
    let unknown = || FormatError::UnknownParameter(param.to_string());
    let is_match = |t: &toml_edit::Table| t.get("id").and_then(|v| v.as_str()) == Some(param);

    // locate first (immutable) so the mutable borrow is taken once
    let mut location: Option<(&str, usize, Option<usize>)> = None;
    if let Some(inputs) = doc.get("inputs").and_then(|i| i.as_array_of_tables()) {
        if let Some(i) = inputs.iter().position(is_match) {
            location = Some(("inputs", i, None));
        }
    }
    if location.is_none() {
        if let Some(outputs) = doc.get("outputs").and_then(|i| i.as_array_of_tables()) {
            for (i, out) in outputs.iter().enumerate() {
                if is_match(out) {
                    location = Some(("outputs", i, None));
                    break;
                }
                if let Some(exp) = out.get("expands").and_then(|e| e.as_array_of_tables()) {
                    if let Some(j) = exp.iter().position(is_match) {
                        location = Some(("outputs", i, Some(j)));
                        break;
                    }
                }
            }
        }
    }
    let (key, i, j) = location.ok_or_else(unknown)?;
    let outer = doc[key]
        .as_array_of_tables_mut()
        .and_then(|a| a.get_mut(i))
        .ok_or_else(unknown)?;
    match j {
        None => Ok(outer),
        Some(j) => outer["expands"]
            .as_array_of_tables_mut()
            .and_then(|a| a.get_mut(j))
            .ok_or_else(unknown),
    }
}
