//! Profile consistency check.
//!
//! A profile's ontology-typed parameters are grouped by class and turned into
//! exact-cardinality axioms on `has-for-data-at` (inputs) and
//! `has-for-result-at` (outputs). Those axioms describe a temporary subclass
//! of the data-processing class the profile refers to; the profile is valid
//! when the temporary class satisfies every restriction it inherits.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{ClassId, Ontology, OntologyError, PropertyId, Restriction, Violation};
use crate::semodel::{Direction, ServiceAnnotation};

pub const HAS_FOR_DATA_AT: &str = "has-for-data-at";
pub const HAS_FOR_RESULT_AT: &str = "has-for-result-at";
const FALLBACK_NS: &str = "urn:nlogflow:vocab#";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedAxiom {
    pub direction: Direction,
    pub property: PropertyId,
    pub qualifier: ClassId,
    pub count: u32,
}

impl DerivedAxiom {
    pub fn as_restriction(&self) -> Restriction {
        Restriction::exactly(self.property.clone(), self.count, self.qualifier.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileVerdict {
    pub profile: String,
    pub refers_to: ClassId,
    pub consistent: bool,
    pub tmp_class_name: String,
    pub derived: Vec<DerivedAxiom>,
    /// Every restriction the temporary class inherits.
    pub constraints: Vec<Restriction>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("profile `{0}` has no refers_to class")]
    MissingRefersTo(String),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

/// The ontology's property with the given local name, or a stand-in IRI
/// when the ontology does not declare it (no restriction can mention it
/// then, so it never affects the verdict).
fn property(o: &Ontology, local: &str) -> PropertyId {
    o.property_by_local_name(local)
        .cloned()
        .unwrap_or_else(|| PropertyId::new(format!("{FALLBACK_NS}{local}")))
}

fn derive_with(s: &ServiceAnnotation, data_at: &PropertyId, result_at: &PropertyId) -> Vec<DerivedAxiom> {
    let mut groups: IndexMap<(Direction, &ClassId), u32> = IndexMap::new();
    for p in &s.inputs {
        if let Some(c) = p.parameter_type.as_class() {
            *groups.entry((Direction::Input, c)).or_default() += 1;
        }
    }
    for out in &s.outputs {
        if out.expands_to.is_empty() {
            if let Some(c) = out.base.parameter_type.as_class() {
                *groups.entry((Direction::Output, c)).or_default() += 1;
            }
        }
        for n in &out.expands_to {
            if let Some(c) = n.parameter_type.as_class() {
                *groups.entry((Direction::Output, c)).or_default() += 1;
            }
        }
    }
    let mut axioms: Vec<_> = groups
        .into_iter()
        .map(|((direction, c), count)| DerivedAxiom {
            direction,
            property: match direction {
                Direction::Input => data_at.clone(),
                Direction::Output => result_at.clone(),
            },
            qualifier: c.clone(),
            count,
        })
        .collect();
    axioms.sort_by(|a, b| (a.direction, &a.qualifier).cmp(&(b.direction, &b.qualifier)));
    axioms
}

/// Group ontology-typed parameters by (direction, exact class). Builtin
/// typed parameters take no part; composite outputs count through their
/// expansions.
pub fn derive_axioms(s: &ServiceAnnotation, o: &Ontology) -> Vec<DerivedAxiom> {
    derive_with(s, &property(o, HAS_FOR_DATA_AT), &property(o, HAS_FOR_RESULT_AT))
}

pub fn tmp_class_name(s: &ServiceAnnotation, refers_to: &ClassId) -> String {
    format!("tmp_{}_{}", s.profile.name, refers_to.local_name())
}

pub fn check_profile(s: &ServiceAnnotation, o: &Ontology) -> Result<ProfileVerdict, ProfileError> {
    let refers_to = s
        .profile
        .refers_to
        .clone()
        .ok_or_else(|| ProfileError::MissingRefersTo(s.profile.name.clone()))?;
    let constraints = o.effective_restrictions(&refers_to)?;
    let derived = derive_axioms(s, o);

    let mut fillers = Vec::new();
    for a in &derived {
        if !o.contains_property(&a.property) {
            continue;
        }
        for _ in 0..a.count {
            fillers.push((a.property.clone(), a.qualifier.clone()));
        }
    }
    let verdict = o.check_filler_consistency(&constraints, &fillers)?;
    Ok(ProfileVerdict {
        profile: s.profile.name.clone(),
        tmp_class_name: tmp_class_name(s, &refers_to),
        refers_to,
        consistent: verdict.is_consistent(),
        derived,
        constraints,
        violations: verdict.violations().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semodel::parse_annotation;

    const ONTO: &str = "\
@prefix ds: <http://localhost/dataset-owl-lite.owl#>
@prefix dp: <http://localhost/data-processing-owl-lite.owl#>
property dp:has-for-data-at
property dp:has-for-result-at
class ds:Dataset
class ds:Mr-dataset subClassOf ds:Dataset
class ds:T1-weighted-MR-dataset subClassOf ds:Mr-dataset
class dp:data-processing
class dp:Registration subClassOf dp:data-processing
restrict dp:Registration dp:has-for-data-at exactly 2 ds:Mr-dataset
restrict dp:Registration dp:has-for-result-at exactly 1 ds:Mr-dataset
";

    fn svc(inputs: &[&str], outputs: &[&str], refers_to: &str) -> String {
        let mut t = format!(
            "name = \"S\"\n[prefixes]\nds = \"http://localhost/dataset-owl-lite.owl#\"\n\
             dp = \"http://localhost/data-processing-owl-lite.owl#\"\n\
             [profile]\nname = \"SProfile\"\nrefers_to = \"{refers_to}\"\nhas_input = [{}]\nhas_output = [\"output1\"]\n",
            (1..=inputs.len()).map(|i| format!("\"input{i}\"")).collect::<Vec<_>>().join(", ")
        );
        for (i, ty) in inputs.iter().enumerate() {
            t += &format!("[[inputs]]\nid = \"input{}\"\ntype = \"{ty}\"\n", i + 1);
        }
        t += "[[outputs]]\nid = \"output1\"\ntype = \"xsd:string\"\n";
        t += "[[outputs.expands]]\nid = \"stdout\"\nhas_id = \"stdout\"\ntype = \"xsd:string\"\n";
        for (i, ty) in outputs.iter().enumerate() {
            t += &format!("[[outputs.expands]]\nid = \"o{i}\"\nhas_id = \"o{i}\"\ntype = \"{ty}\"\n");
        }
        t += "[grounding]\nwsdl_uri = \"\"\nnamespace = \"urn:x\"\noperation = \"local\"\nport_type = \"p\"\noutput_message_part = \"localResult\"\n[grounding.input_parts]\n";
        for i in 1..=inputs.len() {
            t += &format!("input{i} = \"in{i}\"\n");
        }
        t
    }

    fn check(inputs: &[&str], outputs: &[&str]) -> ProfileVerdict {
        let o = Ontology::load(ONTO).unwrap();
        let s = parse_annotation(&svc(inputs, outputs, "dp:Registration")).unwrap();
        check_profile(&s, &o).unwrap()
    }

    #[test]
    fn two_inputs_one_output_is_consistent() {
        let v = check(&["ds:Mr-dataset", "ds:Mr-dataset"], &["ds:Mr-dataset"]);
        assert!(v.consistent);
        assert_eq!(v.tmp_class_name, "tmp_SProfile_Registration");
        assert_eq!(v.derived.len(), 2);
        assert_eq!(v.derived[0].count, 2);
        assert_eq!(v.derived[0].property.local_name(), HAS_FOR_DATA_AT);
        assert_eq!(v.derived[1].property.local_name(), HAS_FOR_RESULT_AT);
    }

    #[test]
    fn missing_input_violates() {
        let v = check(&["ds:Mr-dataset"], &["ds:Mr-dataset"]);
        assert!(!v.consistent);
        assert_eq!(v.violations.len(), 1);
        assert_eq!(v.violations[0].observed, 1);
        assert_eq!(v.violations[0].restriction.min, 2);
    }

    #[test]
    fn narrower_input_counts_toward_restriction() {
        let v = check(&["ds:T1-weighted-MR-dataset", "ds:Mr-dataset"], &["ds:Mr-dataset"]);
        assert!(v.consistent);
        // grouping stays by exact class
        assert_eq!(v.derived.iter().filter(|a| a.direction == Direction::Input).count(), 2);
        assert!(v.derived.iter().all(|a| a.count == 1));
    }

    #[test]
    fn builtins_do_not_participate() {
        let o = Ontology::load(ONTO).unwrap();
        let s = parse_annotation(&svc(&["xsd:string"], &[], "dp:data-processing")).unwrap();
        assert!(derive_axioms(&s, &o).is_empty());
        assert!(check_profile(&s, &o).unwrap().consistent);
    }

    #[test]
    fn missing_refers_to() {
        let o = Ontology::load(ONTO).unwrap();
        let mut s = parse_annotation(&svc(&[], &[], "dp:Registration")).unwrap();
        s.profile.refers_to = None;
        assert!(matches!(check_profile(&s, &o), Err(ProfileError::MissingRefersTo(_))));
        s.profile.refers_to = Some(ClassId::new("urn:nope"));
        assert!(matches!(
            check_profile(&s, &o),
            Err(ProfileError::Ontology(OntologyError::UnknownClass(_)))
        ));
    }
}
