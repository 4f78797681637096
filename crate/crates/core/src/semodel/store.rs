//! In-memory triple store over service annotations and a small conjunctive
//! triple-pattern query language.
//!
//! Queries are a sequence of `subject predicate object` patterns, optionally
//! wrapped in `PREFIX` declarations and `SELECT ?a ?b WHERE { ... }`. The
//! `.` separator between patterns is optional. Bare names resolve to the
//! vocabulary (`nlogExpandsTo`, `hasID`, ...) or to the unique store IRI
//! with that local name.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iri::{local_name, PrefixMap};
use crate::ontology::ClassId;

use super::{NlogParameter, OutputDecl, ParamRef, Parameter, ServiceAnnotation, TypeRef};

pub mod vocab {
    pub const PROCESS_NS: &str = "http://localhost/Process.owl#";
    pub const NLOG_NS: &str = "http://localhost/ontoneurolog.owl#";
    pub const TOOL_NS: &str = "urn:nlogflow:vocab#";

    pub const NLOG_EXPANDS_TO: &str = "http://localhost/Process.owl#nlogExpandsTo";
    pub const HAS_ID: &str = "http://localhost/Process.owl#hasID";
    pub const HAS_LABEL: &str = "http://localhost/Process.owl#hasLabel";
    pub const PARAMETER_TYPE: &str = "http://localhost/Process.owl#parameterType";
    pub const LINKS: &str = "http://localhost/Process.owl#links";
    pub const HAS_INPUT: &str = "http://localhost/Process.owl#hasInput";
    pub const HAS_OUTPUT: &str = "http://localhost/Process.owl#hasOutput";
    pub const REFERS_TO: &str = "http://localhost/ontoneurolog.owl#refers-to";
    /// `service.param` spelling of a parameter IRI, so triples can be
    /// mapped back onto the annotation model.
    pub const PARAM_REF: &str = "urn:nlogflow:vocab#paramRef";
    pub const SERVICE_NAME: &str = "urn:nlogflow:vocab#serviceName";
    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

    pub(crate) const BARE: &[(&str, &str)] = &[
        ("nlogExpandsTo", NLOG_EXPANDS_TO),
        ("hasID", HAS_ID),
        ("hasLabel", HAS_LABEL),
        ("parameterType", PARAMETER_TYPE),
        ("links", LINKS),
        ("hasInput", HAS_INPUT),
        ("hasOutput", HAS_OUTPUT),
        ("refers-to", REFERS_TO),
        ("paramRef", PARAM_REF),
        ("serviceName", SERVICE_NAME),
        ("a", RDF_TYPE),
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Iri(String),
    Literal(String),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn literal(s: impl Into<String>) -> Self {
        Term::Literal(s.into())
    }

    pub fn as_str(&self) -> &str {
        match self {
            Term::Iri(s) | Term::Literal(s) => s,
        }
    }

    /// Local name for IRIs, the literal itself otherwise.
    pub fn short(&self) -> &str {
        match self {
            Term::Iri(s) => local_name(s),
            Term::Literal(s) => s,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(s) => write!(f, "<{s}>"),
            Term::Literal(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Var(String),
    Term(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

pub type Binding = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("service `{0}` appears twice")]
    DuplicateService(String),
}

/// A set of triples; insertion order is irrelevant and duplicates collapse.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripleStore {
    triples: BTreeSet<Triple>,
}

impl TripleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, subject: Term, predicate: &str, object: Term) {
        self.triples.insert(Triple {
            subject,
            predicate: Term::iri(predicate),
            object,
        });
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    /// Evaluate a conjunction of patterns. Results are sorted by binding.
    pub fn query(&self, patterns: &[TriplePattern]) -> Vec<Binding> {
        let mut results = vec![Binding::new()];
        for pattern in patterns {
            let mut next = Vec::new();
            for binding in &results {
                for t in &self.triples {
                    let mut b = binding.clone();
                    if unify(&pattern.subject, &t.subject, &mut b)
                        && unify(&pattern.predicate, &t.predicate, &mut b)
                        && unify(&pattern.object, &t.object, &mut b)
                    {
                        next.push(b);
                    }
                }
            }
            results = next;
            if results.is_empty() {
                break;
            }
        }
        results.sort();
        results
    }

    pub fn run(&self, query: &Query) -> Vec<Binding> {
        let rows = self.query(&query.patterns);
        match &query.select {
            None => rows,
            Some(vars) => rows
                .into_iter()
                .map(|b| b.into_iter().filter(|(k, _)| vars.contains(k)).collect::<Binding>())
                .collect(),
        }
    }

    /// Unique IRI in the store whose local name equals `name`, or else the
    /// unique parameter spelled `name` (as `service.param` or `param`).
    pub fn resolve_local(&self, name: &str) -> Option<String> {
        let mut found: BTreeSet<&str> = BTreeSet::new();
        for t in &self.triples {
            for term in [&t.subject, &t.object] {
                if let Term::Iri(s) = term {
                    if local_name(s) == name {
                        found.insert(s);
                    }
                }
            }
        }
        if found.is_empty() {
            // fall back to parameter references: `ex001.output1`, or a bare
            // `output1` when only one service declares it
            for t in &self.triples {
                if t.predicate.as_str() != vocab::PARAM_REF {
                    continue;
                }
                let lit = t.object.as_str();
                let param = lit.split_once('.').map_or(lit, |(_, p)| p);
                if lit == name || param == name {
                    if let Term::Iri(s) = &t.subject {
                        found.insert(s);
                    }
                }
            }
        }
        if found.len() == 1 {
            found.into_iter().next().map(str::to_string)
        } else {
            None
        }
    }
}

fn unify(p: &PatternTerm, t: &Term, b: &mut Binding) -> bool {
    match p {
        PatternTerm::Term(x) => x == t,
        PatternTerm::Var(v) => match b.get(v) {
            Some(bound) => bound == t,
            None => {
                b.insert(v.clone(), t.clone());
                true
            }
        },
    }
}

fn param_iri(base: &str, r: &ParamRef) -> Term {
    Term::Iri(format!("{base}{}", r.iri_local()))
}

fn profile_iri(s: &ServiceAnnotation) -> Term {
    Term::Iri(format!("{}{}_profile", s.base, s.name))
}

/// Build the annotation triple store for a set of services.
pub fn build_store(services: &[ServiceAnnotation]) -> Result<TripleStore, StoreError> {
    let mut seen = BTreeSet::new();
    let mut store = TripleStore::new();
    for s in services {
        if !seen.insert(s.name.as_str()) {
            return Err(StoreError::DuplicateService(s.name.clone()));
        }
        add_service(&mut store, s);
    }
    Ok(store)
}

fn add_service(store: &mut TripleStore, s: &ServiceAnnotation) {
    let base = &s.base;
    let profile = profile_iri(s);
    store.insert(profile.clone(), vocab::SERVICE_NAME, Term::literal(&s.name));
    if let Some(c) = &s.profile.refers_to {
        store.insert(profile.clone(), vocab::REFERS_TO, Term::iri(c.as_str()));
    }

    let param = |store: &mut TripleStore, r: &ParamRef, ty: &TypeRef, links: &[ParamRef]| {
        let me = param_iri(base, r);
        store.insert(me.clone(), vocab::PARAM_REF, Term::literal(r.to_string()));
        store.insert(me.clone(), vocab::PARAMETER_TYPE, Term::iri(ty.iri()));
        for l in links {
            let target = param_iri(base, l);
            store.insert(target.clone(), vocab::PARAM_REF, Term::literal(l.to_string()));
            store.insert(me.clone(), vocab::LINKS, target);
        }
        me
    };

    for p in &s.inputs {
        let me = param(store, &p.id, &p.parameter_type, &p.links);
        store.insert(profile.clone(), vocab::HAS_INPUT, me);
    }
    for o in &s.outputs {
        let out = param(store, &o.base.id, &o.base.parameter_type, &o.base.links);
        store.insert(profile.clone(), vocab::HAS_OUTPUT, out.clone());
        for n in &o.expands_to {
            let me = param(store, &n.id, &n.parameter_type, &n.links);
            store.insert(out.clone(), vocab::NLOG_EXPANDS_TO, me.clone());
            store.insert(me.clone(), vocab::HAS_ID, Term::literal(&n.has_id));
            if !n.has_label.is_empty() {
                store.insert(me, vocab::HAS_LABEL, Term::literal(&n.has_label));
            }
        }
    }
}

/// Process-layer content of a service as recovered from triples.
///
/// Ordering inside the store is lost, so every list here is sorted; use
/// [`ServiceAnnotation::process_content`] on the source side to compare.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ProcessContent {
    pub name: String,
    pub refers_to: Option<ClassId>,
    pub inputs: Vec<(ParamRef, TypeRef, Vec<ParamRef>)>,
    pub outputs: Vec<OutputContent>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OutputContent {
    pub id: ParamRef,
    pub parameter_type: TypeRef,
    pub links: Vec<ParamRef>,
    /// (id, has_id, has_label, type, links)
    pub expands_to: Vec<(ParamRef, String, String, TypeRef, Vec<ParamRef>)>,
}

impl ServiceAnnotation {
    pub fn process_content(&self) -> ProcessContent {
        let sorted = |l: &[ParamRef]| {
            let mut v = l.to_vec();
            v.sort();
            v.dedup();
            v
        };
        let input = |p: &Parameter| (p.id.clone(), p.parameter_type.clone(), sorted(&p.links));
        let nlog = |n: &NlogParameter| {
            (
                n.id.clone(),
                n.has_id.clone(),
                n.has_label.clone(),
                n.parameter_type.clone(),
                sorted(&n.links),
            )
        };
        let output = |o: &OutputDecl| {
            let mut expands_to: Vec<_> = o.expands_to.iter().map(nlog).collect();
            expands_to.sort();
            OutputContent {
                id: o.base.id.clone(),
                parameter_type: o.base.parameter_type.clone(),
                links: sorted(&o.base.links),
                expands_to,
            }
        };
        let mut inputs: Vec<_> = self.inputs.iter().map(input).collect();
        inputs.sort();
        let mut outputs: Vec<_> = self.outputs.iter().map(output).collect();
        outputs.sort();
        ProcessContent {
            name: self.name.clone(),
            refers_to: self.profile.refers_to.clone(),
            inputs,
            outputs,
        }
    }
}

/// Recover the process-layer content of every service in the store.
pub fn reconstruct(store: &TripleStore) -> Vec<ProcessContent> {
    let mut by_sp: HashMap<(&Term, &str), Vec<&Term>> = HashMap::new();
    for t in store.iter() {
        by_sp
            .entry((&t.subject, t.predicate.as_str()))
            .or_default()
            .push(&t.object);
    }
    let objects = |s: &Term, p: &str| by_sp.get(&(s, p)).cloned().unwrap_or_default();
    let one = |s: &Term, p: &str| objects(s, p).into_iter().next();
    let pref = |t: &Term| -> ParamRef {
        one(t, vocab::PARAM_REF)
            .and_then(|l| l.as_str().parse().ok())
            .expect("every parameter IRI carries its reference")
    };
    let ty = |t: &Term| -> TypeRef {
        let iri = one(t, vocab::PARAMETER_TYPE).expect("parameters are typed");
        TypeRef::from_iri(iri.as_str()).expect("stored types are valid")
    };
    let links = |t: &Term| -> Vec<ParamRef> {
        let mut v: Vec<_> = objects(t, vocab::LINKS).into_iter().map(pref).collect();
        v.sort();
        v
    };

    let mut out = Vec::new();
    for t in store.iter() {
        if t.predicate.as_str() != vocab::SERVICE_NAME {
            continue;
        }
        let profile = &t.subject;
        let mut inputs: Vec<_> = objects(profile, vocab::HAS_INPUT)
            .into_iter()
            .map(|p| (pref(p), ty(p), links(p)))
            .collect();
        inputs.sort();
        let mut outputs: Vec<_> = objects(profile, vocab::HAS_OUTPUT)
            .into_iter()
            .map(|o| {
                let mut expands_to: Vec<_> = objects(o, vocab::NLOG_EXPANDS_TO)
                    .into_iter()
                    .map(|n| {
                        (
                            pref(n),
                            one(n, vocab::HAS_ID)
                                .map(|l| l.as_str().to_string())
                                .unwrap_or_default(),
                            one(n, vocab::HAS_LABEL)
                                .map(|l| l.as_str().to_string())
                                .unwrap_or_default(),
                            ty(n),
                            links(n),
                        )
                    })
                    .collect();
                expands_to.sort();
                OutputContent {
                    id: pref(o),
                    parameter_type: ty(o),
                    links: links(o),
                    expands_to,
                }
            })
            .collect();
        outputs.sort();
        out.push(ProcessContent {
            name: t.object.as_str().to_string(),
            refers_to: one(profile, vocab::REFERS_TO).map(|c| ClassId::new(c.as_str())),
            inputs,
            outputs,
        });
    }
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub select: Option<Vec<String>>,
    pub patterns: Vec<TriplePattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query pattern count is not a multiple of three ({0} dangling terms)")]
    Dangling(usize),
    #[error("unknown prefix `{0}`")]
    UnknownPrefix(String),
    #[error("malformed query: {0}")]
    Malformed(String),
}

fn tokenize(text: &str) -> Result<Vec<String>, QueryError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut lit = String::from("\"");
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some('\\') => {
                        if let Some(e) = chars.next() {
                            lit.push(e);
                        }
                    }
                    Some(x) => lit.push(x),
                    None => return Err(QueryError::Malformed("unterminated literal".into())),
                }
            }
            tokens.push(lit);
        } else if c == '<' {
            let mut iri = String::new();
            for x in chars.by_ref() {
                iri.push(x);
                if x == '>' {
                    break;
                }
            }
            if !iri.ends_with('>') {
                return Err(QueryError::Malformed("unterminated IRI".into()));
            }
            tokens.push(iri);
        } else if matches!(c, '{' | '}') {
            chars.next();
            tokens.push(c.to_string());
        } else {
            let mut word = String::new();
            while let Some(&x) = chars.peek() {
                if x.is_whitespace() || matches!(x, '{' | '}' | '"' | '<') {
                    break;
                }
                word.push(x);
                chars.next();
            }
            tokens.push(word);
        }
    }
    Ok(tokens)
}

/// Parse a query; bare names are resolved against `store`.
pub fn parse_query(text: &str, store: &TripleStore) -> Result<Query, QueryError> {
    let mut tokens = tokenize(text)?.into_iter().peekable();
    let mut prefixes = PrefixMap::new();
    prefixes.insert("p2", vocab::PROCESS_NS);
    prefixes.insert("rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#");
    let mut select = None;
    let mut body = Vec::new();

    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "PREFIX" => {
                let p = tokens.next().ok_or_else(|| QueryError::Malformed("PREFIX".into()))?;
                let ns = tokens.next().ok_or_else(|| QueryError::Malformed("PREFIX".into()))?;
                let p = p
                    .strip_suffix(':')
                    .ok_or_else(|| QueryError::Malformed(format!("prefix `{p}`")))?;
                let ns = ns
                    .strip_prefix('<')
                    .and_then(|n| n.strip_suffix('>'))
                    .ok_or_else(|| QueryError::Malformed(format!("namespace `{ns}`")))?;
                prefixes.insert(p, ns);
            }
            "SELECT" => {
                let mut vars = Vec::new();
                while let Some(t) = tokens.peek() {
                    if let Some(v) = t.strip_prefix('?') {
                        vars.push(v.to_string());
                        tokens.next();
                    } else if t == "*" {
                        tokens.next();
                    } else {
                        break;
                    }
                }
                if !vars.is_empty() {
                    select = Some(vars);
                }
            }
            "WHERE" | "{" | "}" | "." => {}
            _ => body.push(tok),
        }
    }

    // Join `p1:` + `local` split by stray whitespace, and drop separators.
    let mut terms: Vec<String> = Vec::new();
    let mut iter = body.into_iter().peekable();
    while let Some(t) = iter.next() {
        if t.ends_with(':') && !t.starts_with('"') && !t.starts_with('<') {
            if let Some(next) = iter.next() {
                terms.push(format!("{t}{next}"));
                continue;
            }
        }
        let t = t
            .strip_suffix('.')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .unwrap_or(t);
        terms.push(t);
    }
    terms.retain(|t| t != ".");

    if !terms.len().is_multiple_of(3) {
        return Err(QueryError::Dangling(terms.len() % 3));
    }
    let term = |t: &str| -> Result<PatternTerm, QueryError> {
        if let Some(v) = t.strip_prefix('?') {
            return Ok(PatternTerm::Var(v.to_string()));
        }
        if let Some(lit) = t.strip_prefix('"') {
            return Ok(PatternTerm::Term(Term::literal(lit)));
        }
        if t.starts_with('<') || t.contains(':') {
            let iri = prefixes.expand(t).map_err(|e| match e {
                crate::iri::IriError::UnknownPrefix(p) => QueryError::UnknownPrefix(p),
                crate::iri::IriError::Malformed(m) => QueryError::Malformed(m),
            })?;
            return Ok(PatternTerm::Term(Term::Iri(iri)));
        }
        if let Some((_, iri)) = vocab::BARE.iter().find(|(name, _)| *name == t) {
            return Ok(PatternTerm::Term(Term::iri(*iri)));
        }
        let iri = store
            .resolve_local(t)
            .unwrap_or_else(|| format!("urn:nlogflow:unresolved#{t}"));
        Ok(PatternTerm::Term(Term::Iri(iri)))
    };
    let patterns = terms
        .chunks(3)
        .map(|c| {
            Ok(TriplePattern {
                subject: term(&c[0])?,
                predicate: term(&c[1])?,
                object: term(&c[2])?,
            })
        })
        .collect::<Result<Vec<_>, QueryError>>()?;
    Ok(Query { select, patterns })
}
