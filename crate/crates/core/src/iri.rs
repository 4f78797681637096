//! Prefix maps and CURIE handling shared by every text format in the crate.

use indexmap::IndexMap;
use thiserror::Error;

pub const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema#";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IriError {
    #[error("unknown prefix `{0}`")]
    UnknownPrefix(String),
    #[error("malformed term `{0}`")]
    Malformed(String),
}

/// Ordered `prefix -> namespace` table.
///
/// The `xsd` prefix is always resolvable, even when not declared, so type
/// references like `xsd:string` work in every file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrefixMap {
    entries: IndexMap<String, String>,
}

impl PrefixMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) {
        self.entries.insert(prefix.into(), namespace.into());
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.entries.get(prefix).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Expand `<iri>`, an absolute IRI, or `prefix:local` into a full IRI.
    pub fn expand(&self, term: &str) -> Result<String, IriError> {
        let term = term.trim();
        if term.is_empty() {
            return Err(IriError::Malformed(term.to_string()));
        }
        if let Some(inner) = term.strip_prefix('<') {
            let iri = inner
                .strip_suffix('>')
                .ok_or_else(|| IriError::Malformed(term.to_string()))?;
            if iri.is_empty() || iri.contains(char::is_whitespace) {
                return Err(IriError::Malformed(term.to_string()));
            }
            return Ok(iri.to_string());
        }
        if term.contains("://") || term.starts_with("urn:") {
            return Ok(term.to_string());
        }
        let (prefix, local) = term
            .split_once(':')
            .ok_or_else(|| IriError::Malformed(term.to_string()))?;
        match self.get(prefix) {
            Some(ns) => Ok(format!("{ns}{local}")),
            None if prefix == "xsd" || prefix == "xs" => Ok(format!("{XSD_NS}{local}")),
            None => Err(IriError::UnknownPrefix(prefix.to_string())),
        }
    }

    /// Shortest `prefix:local` form of `iri`, or `<iri>` when no prefix fits.
    pub fn compact(&self, iri: &str) -> String {
        let best = self
            .iter()
            .chain(std::iter::once(("xsd", XSD_NS)))
            .filter_map(|(p, ns)| iri.strip_prefix(ns).map(|local| (p, local)))
            .filter(|(_, local)| is_plain_local(local))
            .min_by_key(|(_, local)| local.len());
        match best {
            Some((p, local)) => format!("{p}:{local}"),
            None => format!("<{iri}>"),
        }
    }
}

fn is_plain_local(local: &str) -> bool {
    !local.is_empty()
        && !local
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '/' | '#' | ':' | '<' | '>' | ','))
}

/// Fragment or last path segment of an IRI.
pub fn local_name(iri: &str) -> &str {
    let cut = iri.rfind(['#', '/']).map(|i| i + 1).unwrap_or(0);
    &iri[cut..]
}

/// Strip a trailing `#` comment that is not inside an `<...>` IRI.
pub(crate) fn strip_comment(line: &str) -> &str {
    let mut in_angle = false;
    let mut prev_ws = true;
    for (i, c) in line.char_indices() {
        match c {
            '<' => in_angle = true,
            '>' => in_angle = false,
            '#' if !in_angle && prev_ws => return &line[..i],
            _ => {}
        }
        prev_ws = c.is_whitespace();
    }
    line
}

/// Parse an `@prefix p: <ns>` directive body (everything after `@prefix`).
pub(crate) fn parse_prefix_directive(rest: &str) -> Option<(String, String)> {
    let rest = rest.trim().trim_end_matches('.').trim_end();
    let (prefix, ns) = rest.split_once(char::is_whitespace)?;
    let prefix = prefix.strip_suffix(':')?;
    let ns = ns.trim().strip_prefix('<')?.strip_suffix('>')?;
    Some((prefix.to_string(), ns.to_string()))
}
