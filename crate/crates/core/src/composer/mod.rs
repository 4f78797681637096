//! Workflow assembly, link compatibility and structural validation.
//!
//! A workflow imports annotated services under local names and wires their
//! parameters, together with workflow-level `WF.*` inputs and outputs, with
//! `links`. Links may be written in the workflow file or carried by the
//! annotations themselves; both are merged.

mod format;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::{has_errors, DiagCode, Diagnostic};
use crate::iri::PrefixMap;
use crate::ontology::{ClassId, Ontology};
use crate::semodel::{
    build_store, validate_annotation, vocab, Direction, ParamRef, ParamSlot, Parameter, Profile, ServiceAnnotation,
    StoreError, Term, TripleStore, TypeRef,
};

pub use format::{load_workflow, parse_workflow, serialize_workflow};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub source: ParamRef,
    pub target: ParamRef,
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workflow {
    pub name: String,
    /// Namespace for every IRI of the workflow's triple store.
    pub base: String,
    pub prefixes: PrefixMap,
    /// local name -> annotation path as written in the workflow file
    pub imports: IndexMap<String, String>,
    /// local name -> annotation renamed to that local name
    pub services: IndexMap<String, ServiceAnnotation>,
    pub wf_inputs: Vec<Parameter>,
    pub wf_outputs: Vec<Parameter>,
    /// Links written in the workflow file.
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkflowError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// A workflow-side view of one parameter.
#[derive(Debug, Clone, Copy)]
pub enum Endpoint<'a> {
    WfInput(&'a Parameter),
    WfOutput(&'a Parameter),
    Service(&'a ServiceAnnotation, ParamSlot<'a>),
}

impl<'a> Endpoint<'a> {
    pub fn parameter_type(&self) -> &'a TypeRef {
        match self {
            Endpoint::WfInput(p) | Endpoint::WfOutput(p) => &p.parameter_type,
            Endpoint::Service(_, slot) => slot.parameter_type(),
        }
    }

    fn can_source(&self) -> bool {
        match self {
            Endpoint::WfInput(_) => true,
            Endpoint::WfOutput(_) => false,
            Endpoint::Service(_, ParamSlot::Input(_)) => false,
            Endpoint::Service(_, ParamSlot::Output(o)) => o.expands_to.is_empty(),
            Endpoint::Service(_, ParamSlot::Nlog(..)) => true,
        }
    }

    fn can_target(&self) -> bool {
        matches!(self, Endpoint::WfOutput(_) | Endpoint::Service(_, ParamSlot::Input(_)))
    }
}

impl Workflow {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        Workflow {
            base: crate::semodel::default_base(&name),
            name,
            prefixes: PrefixMap::new(),
            imports: IndexMap::new(),
            services: IndexMap::new(),
            wf_inputs: Vec::new(),
            wf_outputs: Vec::new(),
            links: Vec::new(),
        }
    }

    pub fn resolve(&self, r: &ParamRef) -> Option<Endpoint<'_>> {
        if r.is_workflow() {
            if let Some(p) = self.wf_inputs.iter().find(|p| p.id == *r) {
                return Some(Endpoint::WfInput(p));
            }
            return self.wf_outputs.iter().find(|p| p.id == *r).map(Endpoint::WfOutput);
        }
        let s = self.services.get(&r.service)?;
        s.find(&r.param).map(|slot| Endpoint::Service(s, slot))
    }

    pub fn param_type(&self, r: &ParamRef) -> Option<&TypeRef> {
        self.resolve(r).map(|e| e.parameter_type())
    }

    /// Annotation links followed by workflow-file links, duplicates dropped.
    pub fn all_links(&self) -> Vec<Link> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for s in self.services.values() {
            for id in s.parameter_ids() {
                let slot = s.find(&id.param).expect("declared id resolves");
                for t in slot.links() {
                    let l = Link {
                        source: id.clone(),
                        target: t.clone(),
                    };
                    if seen.insert(l.clone()) {
                        out.push(l);
                    }
                }
            }
        }
        for l in &self.links {
            if seen.insert(l.clone()) {
                out.push(l.clone());
            }
        }
        out
    }

    /// Sources feeding `target`, in link order.
    pub fn sources_of(&self, target: &ParamRef) -> Vec<ParamRef> {
        self.all_links()
            .into_iter()
            .filter(|l| l.target == *target)
            .map(|l| l.source)
            .collect()
    }

    /// Services with every workflow link attached to its source parameter
    /// and the workflow base applied, ready for the triple store.
    pub fn merged_services(&self) -> Vec<ServiceAnnotation> {
        let links = self.all_links();
        self.services
            .values()
            .map(|s| {
                let mut s = s.clone();
                s.base = self.base.clone();
                let name = s.name.clone();
                for l in links.iter().filter(|l| l.source.service == name) {
                    if let Some(list) = s.links_mut(&l.source.param) {
                        if !list.contains(&l.target) {
                            list.push(l.target.clone());
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// Triple store of all services plus the workflow parameters.
    pub fn store(&self) -> Result<TripleStore, StoreError> {
        let mut store = build_store(&self.merged_services())?;
        let iri = |r: &ParamRef| Term::iri(format!("{}{}", self.base, r.iri_local()));
        let profile = Term::iri(format!("{}{}_profile", self.base, crate::semodel::WF));
        store.insert(profile.clone(), vocab::SERVICE_NAME, Term::literal(&self.name));
        let links = self.all_links();
        for (p, pred) in self
            .wf_inputs
            .iter()
            .map(|p| (p, vocab::HAS_INPUT))
            .chain(self.wf_outputs.iter().map(|p| (p, vocab::HAS_OUTPUT)))
        {
            let me = iri(&p.id);
            store.insert(profile.clone(), pred, me.clone());
            store.insert(me.clone(), vocab::PARAM_REF, Term::literal(p.id.to_string()));
            store.insert(me.clone(), vocab::PARAMETER_TYPE, Term::iri(p.parameter_type.iri()));
            for l in links.iter().filter(|l| l.source == p.id) {
                store.insert(me.clone(), vocab::LINKS, iri(&l.target));
            }
        }
        Ok(store)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    Identical,
    SourceNarrower,
    SourceBroader,
    Incomparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkVerdict {
    pub kind: LinkKind,
    pub accepted: bool,
}

impl LinkVerdict {
    fn of(kind: LinkKind) -> Self {
        LinkVerdict {
            kind,
            accepted: matches!(kind, LinkKind::Identical | LinkKind::SourceNarrower),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown type `{0}`")]
pub struct UnknownType(pub ClassId);

/// Compatibility of a value of `source` type flowing into a `target` slot.
pub fn check_link(o: &Ontology, source: &TypeRef, target: &TypeRef) -> Result<LinkVerdict, UnknownType> {
    for t in [source, target] {
        if let TypeRef::Class(c) = t {
            if !o.contains_class(c) {
                return Err(UnknownType(c.clone()));
            }
        }
    }
    let kind = match (source, target) {
        (s, t) if s == t => LinkKind::Identical,
        (TypeRef::Class(s), TypeRef::Class(t)) => {
            if o.is_subclass_of(s, t).unwrap_or(false) {
                LinkKind::SourceNarrower
            } else if o.is_subclass_of(t, s).unwrap_or(false) {
                LinkKind::SourceBroader
            } else {
                LinkKind::Incomparable
            }
        }
        _ => LinkKind::Incomparable,
    };
    Ok(LinkVerdict::of(kind))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkCheck {
    pub link: Link,
    pub verdict: Option<LinkVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowReport {
    pub valid: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub links: Vec<LinkCheck>,
}

pub fn validate_workflow(w: &Workflow, o: &Ontology) -> WorkflowReport {
    let mut diags = Vec::new();

    for s in w.services.values() {
        diags.extend(validate_annotation(s, o));
    }

    let mut wf_ids = BTreeSet::new();
    for p in w.wf_inputs.iter().chain(&w.wf_outputs) {
        if !wf_ids.insert(&p.id) {
            diags.push(Diagnostic::error(
                DiagCode::DuplicateParameter,
                p.id.to_string(),
                "workflow parameter declared more than once",
            ));
        }
        if let TypeRef::Class(c) = &p.parameter_type {
            if !o.contains_class(c) {
                diags.push(Diagnostic::error(
                    DiagCode::UnknownType,
                    p.id.to_string(),
                    format!("type `{c}` is not declared in the ontology"),
                ));
            }
        }
    }

    let mut seen = BTreeSet::new();
    for l in &w.links {
        if !seen.insert(l) {
            diags.push(Diagnostic::error(
                DiagCode::DuplicateLink,
                l.to_string(),
                "link written more than once",
            ));
        }
    }

    let links = w.all_links();
    let mut checks = Vec::new();
    let mut bound: HashMap<&ParamRef, usize> = HashMap::new();
    let mut has_outgoing: BTreeSet<&ParamRef> = BTreeSet::new();
    for l in &links {
        has_outgoing.insert(&l.source);
        *bound.entry(&l.target).or_default() += 1;
        let src = w.resolve(&l.source);
        let dst = w.resolve(&l.target);
        let mut ok = true;
        for (end, r) in [(&src, &l.source), (&dst, &l.target)] {
            if end.is_none() {
                ok = false;
                diags.push(Diagnostic::error(
                    DiagCode::UnknownParameter,
                    l.to_string(),
                    format!("`{r}` is not declared"),
                ));
            }
        }
        if let Some(s) = &src {
            if !s.can_source() {
                ok = false;
                diags.push(Diagnostic::error(
                    DiagCode::InvalidLinkSource,
                    l.to_string(),
                    format!(
                        "`{}` cannot start a link (expansions, unexpanded outputs and WF inputs can)",
                        l.source
                    ),
                ));
            }
        }
        if let Some(d) = &dst {
            if !d.can_target() {
                ok = false;
                diags.push(Diagnostic::error(
                    DiagCode::InvalidLinkTarget,
                    l.to_string(),
                    format!("`{}` cannot end a link (service inputs and WF outputs can)", l.target),
                ));
            }
        }
        let verdict = match (&src, &dst) {
            (Some(s), Some(d)) if ok => check_link(o, s.parameter_type(), d.parameter_type()).ok(),
            _ => None,
        };
        if let Some(v) = verdict {
            if !v.accepted {
                diags.push(Diagnostic::error(
                    DiagCode::IncompatibleLink,
                    l.to_string(),
                    format!(
                        "{:?}: `{}` does not fit `{}`",
                        v.kind,
                        src.unwrap().parameter_type().display(o.prefixes()),
                        dst.unwrap().parameter_type().display(o.prefixes())
                    ),
                ));
            }
        }
        checks.push(LinkCheck {
            link: l.clone(),
            verdict,
        });
    }

    let mut require_bound = |r: &ParamRef, code: DiagCode, what: &str| match bound.get(r).copied().unwrap_or(0) {
        0 => diags.push(Diagnostic::error(
            code,
            r.to_string(),
            format!("{what} is not bound by any link"),
        )),
        1 => {}
        n => diags.push(Diagnostic::error(
            DiagCode::MultiplyBound,
            r.to_string(),
            format!("{what} is bound by {n} links"),
        )),
    };
    for s in w.services.values() {
        for p in &s.inputs {
            require_bound(&p.id, DiagCode::UnboundInput, "service input");
        }
    }
    for p in &w.wf_outputs {
        require_bound(&p.id, DiagCode::UnboundOutput, "workflow output");
    }

    for s in w.services.values() {
        for o in &s.outputs {
            let candidates: Vec<&ParamRef> = if o.expands_to.is_empty() {
                vec![&o.base.id]
            } else {
                o.expands_to.iter().map(|n| &n.id).collect()
            };
            for id in candidates {
                if !has_outgoing.contains(id) {
                    diags.push(Diagnostic::info(
                        DiagCode::UnlinkedParameter,
                        id.to_string(),
                        "output is not routed anywhere",
                    ));
                }
            }
        }
    }
    for p in &w.wf_inputs {
        if !has_outgoing.contains(&p.id) {
            diags.push(Diagnostic::info(
                DiagCode::UnlinkedParameter,
                p.id.to_string(),
                "workflow input is not used",
            ));
        }
    }

    if let Err(CycleError(cycle)) = topo_order(w) {
        diags.push(Diagnostic::error(
            DiagCode::DataflowCycle,
            w.name.clone(),
            format!("services form a cycle: {}", cycle.join(", ")),
        ));
    }

    WorkflowReport {
        valid: !has_errors(&diags),
        diagnostics: diags,
        links: checks,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dataflow cycle among services {}", .0.join(", "))]
pub struct CycleError(pub Vec<String>);

/// Service-level dataflow edges (source service -> target service).
fn service_edges(w: &Workflow) -> BTreeMap<&str, BTreeSet<&str>> {
    let mut edges: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for name in w.services.keys() {
        edges.entry(name.as_str()).or_default();
    }
    let links = w.all_links();
    for l in &links {
        if l.source.is_workflow() || l.target.is_workflow() {
            continue;
        }
        let (Some((s, _)), Some((t, _))) = (
            w.services.get_key_value(&l.source.service),
            w.services.get_key_value(&l.target.service),
        ) else {
            continue;
        };
        edges.entry(s.as_str()).or_default().insert(t.as_str());
    }
    edges
}

/// Services grouped by dataflow depth: every service in level `n` depends
/// only on services in levels `< n`. Names inside a level are sorted.
pub fn topo_levels(w: &Workflow) -> Result<Vec<Vec<String>>, CycleError> {
    let edges = service_edges(w);
    let mut indegree: BTreeMap<&str, usize> = edges.keys().map(|k| (*k, 0)).collect();
    for targets in edges.values() {
        for t in targets {
            *indegree.get_mut(t).expect("edge target is a service") += 1;
        }
    }
    let mut levels = Vec::new();
    let mut ready: Vec<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
    let mut done = 0;
    while !ready.is_empty() {
        let mut next = BTreeSet::new();
        for s in &ready {
            for t in &edges[s] {
                let d = indegree.get_mut(t).expect("edge target is a service");
                *d -= 1;
                if *d == 0 {
                    next.insert(*t);
                }
            }
        }
        done += ready.len();
        levels.push(ready.iter().map(|s| s.to_string()).collect());
        ready = next.into_iter().collect();
    }
    if done != edges.len() {
        let stuck = indegree
            .into_iter()
            .filter(|(_, d)| *d > 0)
            .map(|(k, _)| k.to_string())
            .collect();
        return Err(CycleError(stuck));
    }
    Ok(levels)
}

/// Kahn's algorithm with the lexicographically smallest ready service
/// taken first.
pub fn topo_order(w: &Workflow) -> Result<Vec<String>, CycleError> {
    let edges = service_edges(w);
    let mut indegree: BTreeMap<&str, usize> = edges.keys().map(|k| (*k, 0)).collect();
    for targets in edges.values() {
        for t in targets {
            *indegree.get_mut(t).expect("edge target is a service") += 1;
        }
    }
    let mut ready: BTreeSet<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
    let mut order = Vec::new();
    while let Some(s) = ready.pop_first() {
        order.push(s.to_string());
        for t in &edges[s] {
            let d = indegree.get_mut(t).expect("edge target is a service");
            *d -= 1;
            if *d == 0 {
                ready.insert(t);
            }
        }
    }
    if order.len() != edges.len() {
        let stuck = indegree
            .into_iter()
            .filter(|(_, d)| *d > 0)
            .map(|(k, _)| k.to_string())
            .collect();
        return Err(CycleError(stuck));
    }
    Ok(order)
}

/// The profile of a service that embeds the whole workflow.
pub fn derive_workflow_signature(w: &Workflow) -> Profile {
    Profile {
        name: format!("{}Profile", w.name),
        refers_to: None,
        has_input: w.wf_inputs.iter().map(|p| p.id.clone()).collect(),
        has_output: w.wf_outputs.iter().map(|p| p.id.clone()).collect(),
    }
}

/// Direction of a WF parameter, if `r` names one.
pub fn wf_direction(w: &Workflow, r: &ParamRef) -> Option<Direction> {
    match w.resolve(r)? {
        Endpoint::WfInput(_) => Some(Direction::Input),
        Endpoint::WfOutput(_) => Some(Direction::Output),
        Endpoint::Service(..) => None,
    }
}
