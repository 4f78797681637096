use std::collections::{BTreeSet, HashMap};

use crate::diag::{DiagCode, Diagnostic};
use crate::ontology::Ontology;

use super::{ServiceAnnotation, TypeRef};

/// Check every structural invariant of an annotation plus type resolution
/// against `o`. An empty result means the annotation is well formed.
pub fn validate_annotation(s: &ServiceAnnotation, o: &Ontology) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let subject = |p: &str| format!("{}.{}", s.name, p);

    let mut seen = BTreeSet::new();
    for id in s.parameter_ids() {
        if !seen.insert(id.param.as_str()) {
            out.push(Diagnostic::error(
                DiagCode::DuplicateParameter,
                subject(&id.param),
                "parameter id declared more than once",
            ));
        }
        if id.service != s.name {
            out.push(Diagnostic::error(
                DiagCode::DuplicateParameter,
                id.to_string(),
                format!("parameter belongs to `{}`, not `{}`", id.service, s.name),
            ));
        }
    }

    let check_type = |param: &str, ty: &TypeRef, out: &mut Vec<Diagnostic>| {
        if let TypeRef::Class(c) = ty {
            if !o.contains_class(c) {
                out.push(Diagnostic::error(
                    DiagCode::UnknownType,
                    subject(param),
                    format!("type `{c}` is not declared in the ontology"),
                ));
            }
        }
    };
    for p in &s.inputs {
        check_type(&p.id.param, &p.parameter_type, &mut out);
    }
    let mut markups: HashMap<&str, usize> = HashMap::new();
    for output in &s.outputs {
        check_type(&output.base.id.param, &output.base.parameter_type, &mut out);
        if !output.expands_to.is_empty() && !output.base.links.is_empty() {
            out.push(Diagnostic::error(
                DiagCode::ExpandedOutputLinked,
                subject(&output.base.id.param),
                "an expanded output routes through its expansions and cannot carry links",
            ));
        }
        for n in &output.expands_to {
            check_type(&n.id.param, &n.parameter_type, &mut out);
            if n.has_id.trim().is_empty() {
                out.push(Diagnostic::error(
                    DiagCode::EmptyMarkup,
                    subject(&n.id.param),
                    "has_id is empty",
                ));
            }
            *markups.entry(n.has_id.as_str()).or_default() += 1;
        }
    }
    let mut dup: Vec<_> = markups.into_iter().filter(|(_, n)| *n > 1).collect();
    dup.sort();
    for (markup, n) in dup {
        out.push(Diagnostic::error(
            DiagCode::DuplicateMarkup,
            s.name.clone(),
            format!("markup `{markup}` used by {n} expansions"),
        ));
    }

    let declared_in: BTreeSet<_> = s.inputs.iter().map(|p| &p.id).collect();
    let declared_out: BTreeSet<_> = s.outputs.iter().map(|p| &p.base.id).collect();
    let profile_in: BTreeSet<_> = s.profile.has_input.iter().collect();
    let profile_out: BTreeSet<_> = s.profile.has_output.iter().collect();
    if declared_in != profile_in || declared_out != profile_out {
        out.push(Diagnostic::error(
            DiagCode::ProfileMismatch,
            s.profile.name.clone(),
            "profile has_input/has_output differ from the declared inputs/outputs",
        ));
    }

    for p in &s.inputs {
        if !s.grounding.input_parts.contains_key(&p.id.param) {
            out.push(Diagnostic::error(
                DiagCode::MissingPart,
                subject(&p.id.param),
                "input has no grounding message part",
            ));
        }
    }
    for part in s.grounding.input_parts.keys() {
        if !s.inputs.iter().any(|p| &p.id.param == part) {
            out.push(Diagnostic::error(
                DiagCode::UnknownPart,
                subject(part),
                "grounding part maps a parameter that is not an input",
            ));
        }
    }

    match &s.profile.refers_to {
        None => out.push(Diagnostic::error(
            DiagCode::MissingRefersTo,
            s.profile.name.clone(),
            "profile does not refer to a data-processing class",
        )),
        Some(c) if !o.contains_class(c) => out.push(Diagnostic::error(
            DiagCode::UnknownRefersTo,
            s.profile.name.clone(),
            format!("refers_to class `{c}` is not declared"),
        )),
        Some(c) => {
            if let Some(root) = o.class_by_local_name("data-processing") {
                if !o.is_subclass_of(c, root).unwrap_or(false) {
                    out.push(Diagnostic::error(
                        DiagCode::NotDataProcessing,
                        s.profile.name.clone(),
                        format!("`{c}` is outside the data-processing taxonomy"),
                    ));
                }
            }
        }
    }
    out
}
