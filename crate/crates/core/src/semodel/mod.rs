//! Extended OWL-S annotation model.
//!
//! A [`ServiceAnnotation`] carries the usual profile / process / grounding
//! layers. Composite outputs are decomposed through `expands_to` into
//! [`NlogParameter`]s, each naming the markup (`has_id`) under which its
//! value appears in the result envelope. Profiles point at a
//! data-processing class through `refers_to`, and any parameter may be wired
//! to another with `links`.

mod format;
mod store;
mod validate;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iri::{PrefixMap, XSD_NS};
use crate::ontology::ClassId;

pub(crate) use format::default_base;
pub use format::{apply_edits, parse_annotation, serialize_annotation, AnnotationEdit, FormatError};
pub use store::{
    build_store, parse_query, reconstruct, vocab, Binding, PatternTerm, Query, QueryError, StoreError, Term, Triple,
    TriplePattern, TripleStore,
};
pub use validate::validate_annotation;

/// Reserved service name for workflow-level parameters.
pub const WF: &str = "WF";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamRef {
    pub service: String,
    pub param: String,
}

impl ParamRef {
    pub fn new(service: impl Into<String>, param: impl Into<String>) -> Self {
        ParamRef {
            service: service.into(),
            param: param.into(),
        }
    }

    pub fn wf(param: impl Into<String>) -> Self {
        Self::new(WF, param)
    }

    pub fn is_workflow(&self) -> bool {
        self.service == WF
    }

    /// `ex001_simpleoutput` style name used for IRIs.
    pub fn iri_local(&self) -> String {
        format!("{}_{}", self.service, self.param)
    }
}

impl fmt::Display for ParamRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.service, self.param)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed parameter reference `{0}` (expected `service.param`)")]
pub struct ParamRefError(pub String);

impl FromStr for ParamRef {
    type Err = ParamRefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.split_once('.') {
            Some((svc, p))
                if !svc.is_empty() && !p.is_empty() && !s.contains(char::is_whitespace) && !p.contains('.') =>
            {
                Ok(ParamRef::new(svc, p))
            }
            _ => Err(ParamRefError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum XsdType {
    String,
    AnyUri,
}

impl XsdType {
    pub fn from_local(name: &str) -> Option<Self> {
        match name {
            "string" => Some(XsdType::String),
            "anyURI" => Some(XsdType::AnyUri),
            _ => None,
        }
    }

    pub fn local(&self) -> &'static str {
        match self {
            XsdType::String => "string",
            XsdType::AnyUri => "anyURI",
        }
    }

    pub fn iri(&self) -> String {
        format!("{XSD_NS}{}", self.local())
    }
}

/// Declared type of a parameter: a domain class or an XSD builtin.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeRef {
    Class(ClassId),
    Builtin(XsdType),
}

impl TypeRef {
    /// Classify an expanded IRI.
    pub fn from_iri(iri: &str) -> Result<Self, String> {
        match iri.strip_prefix(XSD_NS) {
            Some(local) => XsdType::from_local(local)
                .map(TypeRef::Builtin)
                .ok_or_else(|| format!("unsupported builtin type `xsd:{local}`")),
            None => Ok(TypeRef::Class(ClassId::new(iri))),
        }
    }

    pub fn iri(&self) -> String {
        match self {
            TypeRef::Class(c) => c.as_str().to_string(),
            TypeRef::Builtin(b) => b.iri(),
        }
    }

    pub fn as_class(&self) -> Option<&ClassId> {
        match self {
            TypeRef::Class(c) => Some(c),
            TypeRef::Builtin(_) => None,
        }
    }

    pub fn display(&self, prefixes: &PrefixMap) -> String {
        prefixes.compact(&self.iri())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub id: ParamRef,
    pub direction: Direction,
    pub parameter_type: TypeRef,
    pub links: Vec<ParamRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NlogParameter {
    pub id: ParamRef,
    pub has_id: String,
    pub has_label: String,
    pub parameter_type: TypeRef,
    pub links: Vec<ParamRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDecl {
    pub base: Parameter,
    pub expands_to: Vec<NlogParameter>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    pub refers_to: Option<ClassId>,
    pub has_input: Vec<ParamRef>,
    pub has_output: Vec<ParamRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grounding {
    pub wsdl_uri: String,
    pub namespace: String,
    pub operation: String,
    pub port_type: String,
    /// input parameter id -> WSDL element name, in request order
    pub input_parts: IndexMap<String, String>,
    pub output_message_part: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceAnnotation {
    pub name: String,
    /// Namespace used for this service's IRIs in the triple store.
    pub base: String,
    pub prefixes: PrefixMap,
    pub profile: Profile,
    pub inputs: Vec<Parameter>,
    pub outputs: Vec<OutputDecl>,
    pub grounding: Grounding,
}

/// Anything a link can start or end at, resolved inside one service.
#[derive(Debug, Clone, Copy)]
pub enum ParamSlot<'a> {
    Input(&'a Parameter),
    Output(&'a OutputDecl),
    Nlog(&'a OutputDecl, &'a NlogParameter),
}

impl<'a> ParamSlot<'a> {
    pub fn parameter_type(&self) -> &'a TypeRef {
        match self {
            ParamSlot::Input(p) => &p.parameter_type,
            ParamSlot::Output(o) => &o.base.parameter_type,
            ParamSlot::Nlog(_, n) => &n.parameter_type,
        }
    }

    pub fn links(&self) -> &'a [ParamRef] {
        match self {
            ParamSlot::Input(p) => &p.links,
            ParamSlot::Output(o) => &o.base.links,
            ParamSlot::Nlog(_, n) => &n.links,
        }
    }
}

impl ServiceAnnotation {
    pub fn find(&self, param: &str) -> Option<ParamSlot<'_>> {
        if let Some(p) = self.inputs.iter().find(|p| p.id.param == param) {
            return Some(ParamSlot::Input(p));
        }
        for out in &self.outputs {
            if out.base.id.param == param {
                return Some(ParamSlot::Output(out));
            }
            if let Some(n) = out.expands_to.iter().find(|n| n.id.param == param) {
                return Some(ParamSlot::Nlog(out, n));
            }
        }
        None
    }

    pub fn nlog_parameters(&self) -> impl Iterator<Item = &NlogParameter> {
        self.outputs.iter().flat_map(|o| o.expands_to.iter())
    }

    /// Every parameter id declared by the service, in declaration order.
    pub fn parameter_ids(&self) -> Vec<&ParamRef> {
        let mut ids: Vec<&ParamRef> = self.inputs.iter().map(|p| &p.id).collect();
        for out in &self.outputs {
            ids.push(&out.base.id);
            ids.extend(out.expands_to.iter().map(|n| &n.id));
        }
        ids
    }

    /// Copy of this annotation under another service name; every reference
    /// to the old name (own ids and link endpoints) is rewritten.
    pub fn renamed(&self, new_name: &str) -> ServiceAnnotation {
        let old = self.name.clone();
        let fix = |r: &ParamRef| {
            if r.service == old {
                ParamRef::new(new_name, r.param.clone())
            } else {
                r.clone()
            }
        };
        let fix_param = |p: &Parameter| Parameter {
            id: fix(&p.id),
            direction: p.direction,
            parameter_type: p.parameter_type.clone(),
            links: p.links.iter().map(fix).collect(),
        };
        ServiceAnnotation {
            name: new_name.to_string(),
            base: self.base.clone(),
            prefixes: self.prefixes.clone(),
            profile: Profile {
                name: self.profile.name.clone(),
                refers_to: self.profile.refers_to.clone(),
                has_input: self.profile.has_input.iter().map(fix).collect(),
                has_output: self.profile.has_output.iter().map(fix).collect(),
            },
            inputs: self.inputs.iter().map(fix_param).collect(),
            outputs: self
                .outputs
                .iter()
                .map(|o| OutputDecl {
                    base: fix_param(&o.base),
                    expands_to: o
                        .expands_to
                        .iter()
                        .map(|n| NlogParameter {
                            id: fix(&n.id),
                            has_id: n.has_id.clone(),
                            has_label: n.has_label.clone(),
                            parameter_type: n.parameter_type.clone(),
                            links: n.links.iter().map(fix).collect(),
                        })
                        .collect(),
                })
                .collect(),
            grounding: self.grounding.clone(),
        }
    }

    /// Mutable access to the link list of a parameter.
    pub fn links_mut(&mut self, param: &str) -> Option<&mut Vec<ParamRef>> {
        if let Some(p) = self.inputs.iter_mut().find(|p| p.id.param == param) {
            return Some(&mut p.links);
        }
        for out in &mut self.outputs {
            if out.base.id.param == param {
                return Some(&mut out.base.links);
            }
            if let Some(n) = out.expands_to.iter_mut().find(|n| n.id.param == param) {
                return Some(&mut n.links);
            }
        }
        None
    }
}
