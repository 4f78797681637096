//! Domain taxonomy: dataset and data-processing classes, qualified
//! cardinality restrictions, and the subsumption / counting checks built on
//! top of them.
//!
//! The native text format is line oriented:
//!
//! ```text
//! @prefix ds: <http://localhost/dataset-owl-lite.owl#>
//! property dp:has-for-data-at
//! class ds:Dataset
//! class ds:Mr-dataset subClassOf ds:Dataset
//! restrict dp:Registration dp:has-for-data-at exactly 2 ds:Mr-dataset
//! ```
//!
//! `restrict` accepts `exactly N`, `min N`, `max N` and `only`. Properties
//! used in a `restrict` line are declared implicitly.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iri::{self, IriError, PrefixMap};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(String);

impl ClassId {
    pub fn new(iri: impl Into<String>) -> Self {
        ClassId(iri.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn local_name(&self) -> &str {
        iri::local_name(&self.0)
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropertyId(String);

impl PropertyId {
    pub fn new(iri: impl Into<String>) -> Self {
        PropertyId(iri.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn local_name(&self) -> &str {
        iri::local_name(&self.0)
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RestrictionKind {
    Cardinality,
    AllValuesFrom,
}

/// A qualified restriction on one property. `max: None` is unbounded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Restriction {
    pub property: PropertyId,
    pub qualifier: ClassId,
    pub min: u32,
    pub max: Option<u32>,
    pub kind: RestrictionKind,
}

impl Restriction {
    pub fn exactly(property: PropertyId, n: u32, qualifier: ClassId) -> Self {
        Self::cardinality(property, qualifier, n, Some(n))
    }

    pub fn at_least(property: PropertyId, n: u32, qualifier: ClassId) -> Self {
        Self::cardinality(property, qualifier, n, None)
    }

    pub fn at_most(property: PropertyId, n: u32, qualifier: ClassId) -> Self {
        Self::cardinality(property, qualifier, 0, Some(n))
    }

    pub fn only(property: PropertyId, qualifier: ClassId) -> Self {
        Restriction {
            property,
            qualifier,
            min: 0,
            max: None,
            kind: RestrictionKind::AllValuesFrom,
        }
    }

    fn cardinality(property: PropertyId, qualifier: ClassId, min: u32, max: Option<u32>) -> Self {
        Restriction {
            property,
            qualifier,
            min,
            max,
            kind: RestrictionKind::Cardinality,
        }
    }

    /// Render with compacted names, e.g. `has-for-data-at exactly 2 Mr-dataset`.
    pub fn describe(&self, prefixes: &PrefixMap) -> String {
        let p = prefixes.compact(self.property.as_str());
        let q = prefixes.compact(self.qualifier.as_str());
        format!("{p} {} {q}", self.quantifier())
    }

    fn quantifier(&self) -> String {
        match (self.kind, self.min, self.max) {
            (RestrictionKind::AllValuesFrom, _, _) => "only".to_string(),
            (_, min, Some(max)) if min == max => format!("exactly {min}"),
            (_, 0, Some(max)) => format!("max {max}"),
            (_, min, None) => format!("min {min}"),
            // min/max pairs are written as two lines by the serializer
            (_, min, Some(max)) => format!("min {min} max {max}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub id: ClassId,
    pub parents: Vec<ClassId>,
    pub restrictions: Vec<Restriction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub restriction: Restriction,
    pub observed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Consistent,
    Inconsistent(Vec<Violation>),
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::Consistent)
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            Verdict::Consistent => &[],
            Verdict::Inconsistent(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown prefix `{prefix}`")]
    UnknownPrefix { line: usize, prefix: String },
    #[error("subclass cycle: {}", format_cycle(.cycle))]
    Cycle { cycle: Vec<ClassId> },
    #[error("line {line}: reference to undeclared class `{id}`")]
    DanglingRef { line: usize, id: ClassId },
    #[error("line {line}: class `{id}` declared twice")]
    DuplicateClass { line: usize, id: ClassId },
    #[error("unknown class `{0}`")]
    UnknownClass(ClassId),
    #[error("unknown property `{0}`")]
    UnknownProperty(PropertyId),
}

fn format_cycle(cycle: &[ClassId]) -> String {
    cycle.iter().map(ClassId::local_name).collect::<Vec<_>>().join(" -> ")
}

/// Immutable, fully resolved taxonomy.
#[derive(Debug, Clone)]
pub struct Ontology {
    classes: IndexMap<ClassId, ClassDef>,
    properties: IndexSet<PropertyId>,
    prefixes: PrefixMap,
    // strict ancestors of every class
    ancestors: HashMap<ClassId, BTreeSet<ClassId>>,
}

impl PartialEq for Ontology {
    fn eq(&self, other: &Self) -> bool {
        self.classes == other.classes && self.properties == other.properties && self.prefixes == other.prefixes
    }
}

impl Eq for Ontology {}

impl Ontology {
    /// Build from already-resolved parts; used by [`Ontology::load`] and by
    /// generators in tests.
    pub fn from_parts(
        classes: Vec<ClassDef>,
        properties: Vec<PropertyId>,
        prefixes: PrefixMap,
    ) -> Result<Self, OntologyError> {
        let mut map = IndexMap::new();
        for def in classes {
            if map.contains_key(&def.id) {
                return Err(OntologyError::DuplicateClass { line: 0, id: def.id });
            }
            map.insert(def.id.clone(), def);
        }
        let mut props: IndexSet<PropertyId> = properties.into_iter().collect();
        for def in map.values() {
            for parent in &def.parents {
                if !map.contains_key(parent) {
                    return Err(OntologyError::DanglingRef {
                        line: 0,
                        id: parent.clone(),
                    });
                }
            }
            for r in &def.restrictions {
                if !map.contains_key(&r.qualifier) {
                    return Err(OntologyError::DanglingRef {
                        line: 0,
                        id: r.qualifier.clone(),
                    });
                }
                props.insert(r.property.clone());
            }
        }
        check_acyclic(&map)?;
        let ancestors = compute_ancestors(&map);
        Ok(Ontology {
            classes: map,
            properties: props,
            prefixes,
            ancestors,
        })
    }

    pub fn load(text: &str) -> Result<Self, OntologyError> {
        parse(text)
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.values()
    }

    pub fn class(&self, id: &ClassId) -> Option<&ClassDef> {
        self.classes.get(id)
    }

    pub fn contains_class(&self, id: &ClassId) -> bool {
        self.classes.contains_key(id)
    }

    pub fn properties(&self) -> impl Iterator<Item = &PropertyId> {
        self.properties.iter()
    }

    pub fn contains_property(&self, id: &PropertyId) -> bool {
        self.properties.contains(id)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Resolve a CURIE or IRI against this ontology's prefixes.
    pub fn resolve_class(&self, term: &str) -> Result<ClassId, OntologyError> {
        let iri = self.prefixes.expand(term).map_err(|e| match e {
            IriError::UnknownPrefix(prefix) => OntologyError::UnknownPrefix { line: 0, prefix },
            IriError::Malformed(t) => OntologyError::Parse {
                line: 0,
                message: format!("malformed class reference `{t}`"),
            },
        })?;
        let id = ClassId::new(iri);
        if self.contains_class(&id) {
            Ok(id)
        } else {
            Err(OntologyError::UnknownClass(id))
        }
    }

    /// Unique class whose IRI local name equals `name`.
    pub fn class_by_local_name(&self, name: &str) -> Option<&ClassId> {
        unique(self.classes.keys().filter(|c| c.local_name() == name))
    }

    /// Unique property whose IRI local name equals `name`.
    pub fn property_by_local_name(&self, name: &str) -> Option<&PropertyId> {
        unique(self.properties.iter().filter(|p| p.local_name() == name))
    }

    /// Reflexive-transitive subsumption over declared parent edges.
    pub fn is_subclass_of(&self, sub: &ClassId, sup: &ClassId) -> Result<bool, OntologyError> {
        let ancestors = self
            .ancestors
            .get(sub)
            .ok_or_else(|| OntologyError::UnknownClass(sub.clone()))?;
        if !self.contains_class(sup) {
            return Err(OntologyError::UnknownClass(sup.clone()));
        }
        Ok(sub == sup || ancestors.contains(sup))
    }

    /// Strict ancestors of `c`.
    pub fn ancestors(&self, c: &ClassId) -> Result<&BTreeSet<ClassId>, OntologyError> {
        self.ancestors
            .get(c)
            .ok_or_else(|| OntologyError::UnknownClass(c.clone()))
    }

    /// Restrictions declared on `c` and all of its ancestors, ancestors first.
    pub fn effective_restrictions(&self, c: &ClassId) -> Result<Vec<Restriction>, OntologyError> {
        if !self.contains_class(c) {
            return Err(OntologyError::UnknownClass(c.clone()));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        self.collect_restrictions(c, &mut seen, &mut out);
        Ok(out)
    }

    fn collect_restrictions<'a>(&'a self, c: &'a ClassId, seen: &mut HashSet<&'a ClassId>, out: &mut Vec<Restriction>) {
        if !seen.insert(c) {
            return;
        }
        let def = &self.classes[c];
        for parent in &def.parents {
            self.collect_restrictions(parent, seen, out);
        }
        out.extend(def.restrictions.iter().cloned());
    }

    /// Count-with-subsumption consistency of a concrete filler multiset
    /// against a set of restrictions. Each restriction is evaluated on its
    /// own; a filler counts toward every restriction whose qualifier
    /// subsumes its class.
    pub fn check_filler_consistency(
        &self,
        constraints: &[Restriction],
        fillers: &[(PropertyId, ClassId)],
    ) -> Result<Verdict, OntologyError> {
        for r in constraints {
            self.require_property(&r.property)?;
            self.require_class(&r.qualifier)?;
        }
        for (p, c) in fillers {
            self.require_property(p)?;
            self.require_class(c)?;
        }

        let mut violations = Vec::new();
        for r in constraints {
            let on_property = fillers.iter().filter(|(p, _)| *p == r.property);
            match r.kind {
                RestrictionKind::Cardinality => {
                    let mut count = 0usize;
                    for (_, c) in on_property {
                        if self.is_subclass_of(c, &r.qualifier)? {
                            count += 1;
                        }
                    }
                    let above = r.max.is_some_and(|max| count > max as usize);
                    if count < r.min as usize || above {
                        violations.push(Violation {
                            restriction: r.clone(),
                            observed: count,
                        });
                    }
                }
                RestrictionKind::AllValuesFrom => {
                    let mut offending = 0usize;
                    for (_, c) in on_property {
                        if !self.is_subclass_of(c, &r.qualifier)? {
                            offending += 1;
                        }
                    }
                    if offending > 0 {
                        violations.push(Violation {
                            restriction: r.clone(),
                            observed: offending,
                        });
                    }
                }
            }
        }
        Ok(if violations.is_empty() {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent(violations)
        })
    }

    fn require_class(&self, c: &ClassId) -> Result<(), OntologyError> {
        if self.contains_class(c) {
            Ok(())
        } else {
            Err(OntologyError::UnknownClass(c.clone()))
        }
    }

    fn require_property(&self, p: &PropertyId) -> Result<(), OntologyError> {
        if self.contains_property(p) {
            Ok(())
        } else {
            Err(OntologyError::UnknownProperty(p.clone()))
        }
    }

    /// Serialize back to the native format. Restrictions with both a lower
    /// and a distinct upper bound are emitted as a `min` and a `max` line.
    pub fn serialize(&self) -> String {
        let px = &self.prefixes;
        let mut out = String::new();
        for (p, ns) in px.iter() {
            out.push_str(&format!("@prefix {p}: <{ns}>\n"));
        }
        for p in &self.properties {
            out.push_str(&format!("property {}\n", px.compact(p.as_str())));
        }
        for def in self.classes.values() {
            out.push_str(&format!("class {}", px.compact(def.id.as_str())));
            if !def.parents.is_empty() {
                let parents: Vec<_> = def.parents.iter().map(|p| px.compact(p.as_str())).collect();
                out.push_str(&format!(" subClassOf {}", parents.join(", ")));
            }
            out.push('\n');
        }
        for def in self.classes.values() {
            let class = px.compact(def.id.as_str());
            for r in &def.restrictions {
                let p = px.compact(r.property.as_str());
                let q = px.compact(r.qualifier.as_str());
                match (r.kind, r.min, r.max) {
                    (RestrictionKind::Cardinality, min, Some(max)) if min != 0 && min != max => {
                        // not representable on one line
                        out.push_str(&format!("restrict {class} {p} min {min} {q}\n"));
                        out.push_str(&format!("restrict {class} {p} max {max} {q}\n"));
                    }
                    _ => out.push_str(&format!("restrict {class} {p} {} {q}\n", r.quantifier())),
                }
            }
        }
        out
    }
}

fn unique<T>(mut it: impl Iterator<Item = T>) -> Option<T> {
    let first = it.next()?;
    if it.next().is_some() {
        None
    } else {
        Some(first)
    }
}

fn check_acyclic(classes: &IndexMap<ClassId, ClassDef>) -> Result<(), OntologyError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        c: &'a ClassId,
        classes: &'a IndexMap<ClassId, ClassDef>,
        marks: &mut HashMap<&'a ClassId, Mark>,
        path: &mut Vec<&'a ClassId>,
    ) -> Result<(), OntologyError> {
        match marks.get(c) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let start = path.iter().position(|p| *p == c).unwrap_or(0);
                let mut cycle: Vec<ClassId> = path[start..].iter().map(|c| (*c).clone()).collect();
                cycle.push(c.clone());
                return Err(OntologyError::Cycle { cycle });
            }
            None => {}
        }
        marks.insert(c, Mark::Active);
        path.push(c);
        for parent in &classes[c].parents {
            visit(parent, classes, marks, path)?;
        }
        path.pop();
        marks.insert(c, Mark::Done);
        Ok(())
    }

    let mut marks = HashMap::new();
    for c in classes.keys() {
        visit(c, classes, &mut marks, &mut Vec::new())?;
    }
    Ok(())
}

fn compute_ancestors(classes: &IndexMap<ClassId, ClassDef>) -> HashMap<ClassId, BTreeSet<ClassId>> {
    fn fill(c: &ClassId, classes: &IndexMap<ClassId, ClassDef>, memo: &mut HashMap<ClassId, BTreeSet<ClassId>>) {
        if memo.contains_key(c) {
            return;
        }
        let mut acc = BTreeSet::new();
        for parent in &classes[c].parents {
            fill(parent, classes, memo);
            acc.insert(parent.clone());
            acc.extend(memo[parent].iter().cloned());
        }
        memo.insert(c.clone(), acc);
    }

    let mut memo = HashMap::with_capacity(classes.len());
    for c in classes.keys() {
        fill(c, classes, &mut memo);
    }
    memo
}

struct PendingRestriction {
    line: usize,
    class: ClassId,
    restriction: Restriction,
}

fn parse(text: &str) -> Result<Ontology, OntologyError> {
    let mut prefixes = PrefixMap::new();
    let mut classes: IndexMap<ClassId, (usize, ClassDef)> = IndexMap::new();
    let mut properties: Vec<PropertyId> = Vec::new();
    let mut pending = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = iri::strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let (keyword, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
        let expand = |term: &str, prefixes: &PrefixMap| -> Result<String, OntologyError> {
            prefixes.expand(term).map_err(|e| match e {
                IriError::UnknownPrefix(prefix) => OntologyError::UnknownPrefix { line, prefix },
                IriError::Malformed(t) => OntologyError::Parse {
                    line,
                    message: format!("malformed term `{t}`"),
                },
            })
        };
        let malformed = |what: &str| OntologyError::Parse {
            line,
            message: format!("malformed {what} statement"),
        };

        match keyword {
            "@prefix" => {
                let (p, ns) = iri::parse_prefix_directive(rest).ok_or_else(|| malformed("@prefix"))?;
                prefixes.insert(p, ns);
            }
            "property" => {
                let tokens: Vec<_> = rest.split_whitespace().collect();
                if tokens.len() != 1 {
                    return Err(malformed("property"));
                }
                properties.push(PropertyId::new(expand(tokens[0], &prefixes)?));
            }
            "class" => {
                let (name, tail) = rest.trim().split_once(char::is_whitespace).unwrap_or((rest.trim(), ""));
                if name.is_empty() {
                    return Err(malformed("class"));
                }
                let id = ClassId::new(expand(name, &prefixes)?);
                let tail = tail.trim();
                let mut parents = Vec::new();
                if !tail.is_empty() {
                    let list = tail.strip_prefix("subClassOf").ok_or_else(|| malformed("class"))?;
                    for term in list.split(',') {
                        let term = term.trim();
                        if term.is_empty() || term.contains(char::is_whitespace) {
                            return Err(malformed("class"));
                        }
                        let parent = ClassId::new(expand(term, &prefixes)?);
                        if !parents.contains(&parent) {
                            parents.push(parent);
                        }
                    }
                    if parents.is_empty() {
                        return Err(malformed("class"));
                    }
                }
                if classes.contains_key(&id) {
                    return Err(OntologyError::DuplicateClass { line, id });
                }
                classes.insert(
                    id.clone(),
                    (
                        line,
                        ClassDef {
                            id,
                            parents,
                            restrictions: Vec::new(),
                        },
                    ),
                );
            }
            "restrict" => {
                let tokens: Vec<_> = rest.split_whitespace().collect();
                let (class, property, quant) = match tokens.as_slice() {
                    [c, p, q @ ..] => (*c, *p, q),
                    _ => return Err(malformed("restrict")),
                };
                let class = ClassId::new(expand(class, &prefixes)?);
                let property = PropertyId::new(expand(property, &prefixes)?);
                let count = |n: &str| n.parse::<u32>().map_err(|_| malformed("restrict"));
                let restriction = match quant {
                    ["only", q] => Restriction::only(property, ClassId::new(expand(q, &prefixes)?)),
                    ["exactly", n, q] => Restriction::exactly(property, count(n)?, ClassId::new(expand(q, &prefixes)?)),
                    ["min", n, q] => Restriction::at_least(property, count(n)?, ClassId::new(expand(q, &prefixes)?)),
                    ["max", n, q] => Restriction::at_most(property, count(n)?, ClassId::new(expand(q, &prefixes)?)),
                    _ => return Err(malformed("restrict")),
                };
                pending.push(PendingRestriction {
                    line,
                    class,
                    restriction,
                });
            }
            other => {
                return Err(OntologyError::Parse {
                    line,
                    message: format!("unknown statement `{other}`"),
                })
            }
        }
    }

    for (_, (line, def)) in &classes {
        for parent in &def.parents {
            if !classes.contains_key(parent) {
                return Err(OntologyError::DanglingRef {
                    line: *line,
                    id: parent.clone(),
                });
            }
        }
    }
    for p in pending {
        if !classes.contains_key(&p.restriction.qualifier) {
            return Err(OntologyError::DanglingRef {
                line: p.line,
                id: p.restriction.qualifier,
            });
        }
        if !properties.contains(&p.restriction.property) {
            properties.push(p.restriction.property.clone());
        }
        match classes.get_mut(&p.class) {
            Some((_, def)) => def.restrictions.push(p.restriction),
            None => {
                return Err(OntologyError::DanglingRef {
                    line: p.line,
                    id: p.class,
                })
            }
        }
    }

    Ontology::from_parts(
        classes.into_values().map(|(_, def)| def).collect(),
        properties,
        prefixes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const DS: &str = "http://localhost/dataset-owl-lite.owl#";
    const DP: &str = "http://localhost/data-processing-owl-lite.owl#";

    const FIXTURE: &str = "\
@prefix ds: <http://localhost/dataset-owl-lite.owl#>
@prefix dp: <http://localhost/data-processing-owl-lite.owl#>
property dp:has-for-data-at
property dp:has-for-result-at
class ds:Dataset
class ds:Mr-dataset subClassOf ds:Dataset
class ds:T1-weighted-MR-dataset subClassOf ds:Mr-dataset   # reconstructed
class dp:data-processing
class dp:Registration subClassOf dp:data-processing
restrict dp:Registration dp:has-for-data-at exactly 2 ds:Mr-dataset
restrict dp:Registration dp:has-for-result-at exactly 1 ds:Mr-dataset
";

    fn ds(name: &str) -> ClassId {
        ClassId::new(format!("{DS}{name}"))
    }

    fn data_at() -> PropertyId {
        PropertyId::new(format!("{DP}has-for-data-at"))
    }

    #[test]
    fn loads_fixture() {
        let o = Ontology::load(FIXTURE).unwrap();
        assert_eq!(o.len(), 5);
        assert!(o.contains_class(&ds("T1-weighted-MR-dataset")));
        assert!(o.contains_class(&ds("Mr-dataset")));
        assert_eq!(o.properties().count(), 2);
    }

    #[test]
    fn empty_ontology() {
        let o = Ontology::load("# nothing here\n\n").unwrap();
        assert!(o.is_empty());
    }

    #[test]
    fn cycle_is_rejected() {
        let err =
            Ontology::load("@prefix : <http://x#>\nclass :A subClassOf :B\nclass :B subClassOf :A\n").unwrap_err();
        match err {
            OntologyError::Cycle { cycle } => {
                assert_eq!(cycle.first(), cycle.last());
                assert_eq!(cycle.len(), 3);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let err = Ontology::load("@prefix : <http://x#>\nclass :A subClassOf :A\n").unwrap_err();
        assert!(matches!(err, OntologyError::Cycle { .. }));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            Ontology::load("class zz:A\n"),
            Err(OntologyError::UnknownPrefix { line: 1, .. })
        ));
        assert!(matches!(
            Ontology::load("@prefix : <http://x#>\nclass :A\nrestrict :A :p twice :A\n"),
            Err(OntologyError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            Ontology::load("@prefix : <http://x#>\nclass :A subClassOf :Missing\n"),
            Err(OntologyError::DanglingRef { line: 2, .. })
        ));
        assert!(matches!(
            Ontology::load("@prefix : <http://x#>\nclass :A\nrestrict :A :p exactly 1 :Nope\n"),
            Err(OntologyError::DanglingRef { line: 3, .. })
        ));
        assert!(matches!(
            Ontology::load("@prefix : <http://x#>\nclass :A\nclass :A\n"),
            Err(OntologyError::DuplicateClass { line: 3, .. })
        ));
        assert!(matches!(
            Ontology::load("frobnicate\n"),
            Err(OntologyError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn subsumption_on_fixture() {
        let o = Ontology::load(FIXTURE).unwrap();
        let t1 = ds("T1-weighted-MR-dataset");
        let mr = ds("Mr-dataset");
        assert!(o.is_subclass_of(&t1, &mr).unwrap());
        assert!(o.is_subclass_of(&mr, &mr).unwrap());
        assert!(!o.is_subclass_of(&mr, &t1).unwrap());
        assert!(o.is_subclass_of(&t1, &ds("Dataset")).unwrap());
        assert_eq!(
            o.is_subclass_of(&ds("Nope"), &mr),
            Err(OntologyError::UnknownClass(ds("Nope")))
        );
        assert_eq!(
            o.is_subclass_of(&mr, &ds("Nope")),
            Err(OntologyError::UnknownClass(ds("Nope")))
        );
    }

    #[test]
    fn filler_counting() {
        let o = Ontology::load(FIXTURE).unwrap();
        let c = [Restriction::exactly(data_at(), 2, ds("Mr-dataset"))];
        let mr = (data_at(), ds("Mr-dataset"));
        let t1 = (data_at(), ds("T1-weighted-MR-dataset"));

        assert!(o
            .check_filler_consistency(&c, &[mr.clone(), mr.clone()])
            .unwrap()
            .is_consistent());

        let v = o
            .check_filler_consistency(&c, &[mr.clone(), mr.clone(), mr.clone()])
            .unwrap();
        assert_eq!(v.violations().len(), 1);
        assert_eq!(v.violations()[0].observed, 3);

        assert!(o.check_filler_consistency(&c, &[t1, mr]).unwrap().is_consistent());
    }

    #[test]
    fn only_restriction() {
        let o = Ontology::load(FIXTURE).unwrap();
        let c = [Restriction::only(data_at(), ds("Mr-dataset"))];
        assert!(o
            .check_filler_consistency(&c, &[(data_at(), ds("T1-weighted-MR-dataset"))])
            .unwrap()
            .is_consistent());
        let v = o.check_filler_consistency(&c, &[(data_at(), ds("Dataset"))]).unwrap();
        assert_eq!(v.violations()[0].observed, 1);
    }

    #[test]
    fn unknown_filler_property() {
        let o = Ontology::load(FIXTURE).unwrap();
        let bogus = PropertyId::new("http://x#bogus");
        assert_eq!(
            o.check_filler_consistency(&[], &[(bogus.clone(), ds("Mr-dataset"))]),
            Err(OntologyError::UnknownProperty(bogus))
        );
    }

    #[test]
    fn effective_restrictions_no_parents() {
        let o = Ontology::load(
            "@prefix : <http://x#>\nclass :Q\nclass :A\nrestrict :A :p exactly 1 :Q\nrestrict :A :r min 2 :Q\n",
        )
        .unwrap();
        let r = o.effective_restrictions(&ClassId::new("http://x#A")).unwrap();
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn effective_restrictions_registration() {
        let o = Ontology::load(FIXTURE).unwrap();
        let reg = ClassId::new(format!("{DP}Registration"));
        let r = o.effective_restrictions(&reg).unwrap();
        assert_eq!(r, o.class(&reg).unwrap().restrictions);
    }

    #[test]
    fn effective_restrictions_diamond() {
        // A -> B, C -> D; B and D carry one restriction each
        let o = Ontology::load(
            "@prefix : <http://x#>\nclass :Q\nclass :D\nclass :B subClassOf :D\nclass :C subClassOf :D\n\
             class :A subClassOf :B, :C\nrestrict :B :p exactly 1 :Q\nrestrict :D :p max 3 :Q\n",
        )
        .unwrap();
        let r = o.effective_restrictions(&ClassId::new("http://x#A")).unwrap();
        assert_eq!(r.len(), 2);
        // ancestor-first: D before B
        assert_eq!(r[0].max, Some(3));
        assert_eq!(r[1].max, Some(1));
    }

    #[test]
    fn serialize_round_trip() {
        let o = Ontology::load(FIXTURE).unwrap();
        let again = Ontology::load(&o.serialize()).unwrap();
        assert_eq!(o, again);
    }

    #[test]
    fn min_max_pair_round_trips() {
        let src = "@prefix : <http://x#>\nclass :Q\nclass :A\nrestrict :A :p min 1 :Q\nrestrict :A :p max 3 :Q\n";
        let o = Ontology::load(src).unwrap();
        assert_eq!(Ontology::load(&o.serialize()).unwrap(), o);
    }

    #[test]
    fn local_name_lookup() {
        let o = Ontology::load(FIXTURE).unwrap();
        assert_eq!(o.property_by_local_name("has-for-data-at"), Some(&data_at()));
        assert_eq!(o.class_by_local_name("Mr-dataset"), Some(&ds("Mr-dataset")));
        assert_eq!(o.class_by_local_name("Nope"), None);
    }
}
