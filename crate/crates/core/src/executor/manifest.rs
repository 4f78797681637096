//! Run manifests and endpoint maps.
//!
//! ```text
//! @prefix ds: <http://localhost/dataset-owl-lite.owl#>
//! bind WF.input1 = http://localhost/test1.nii class ds:Mr-dataset
//! ```
//!
//! ```text
//! endpoint ex001 = http://127.0.0.1:8081/Test1
//! ```

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iri::{self, PrefixMap};
use crate::ontology::ClassId;
use crate::semodel::ParamRef;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueBinding {
    pub target: ParamRef,
    pub value: String,
    pub instance_class: Option<ClassId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

/// Parse a manifest. Class terms resolve through the manifest's own
/// prefixes first, then through `fallback` (usually the ontology's).
pub fn parse_manifest(text: &str, fallback: &PrefixMap) -> Result<Vec<ValueBinding>, ManifestError> {
    let mut prefixes = fallback.clone();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| ManifestError { line, message };
        let content = iri::strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("@prefix") {
            let (p, ns) = iri::parse_prefix_directive(rest).ok_or_else(|| err("malformed @prefix".into()))?;
            prefixes.insert(p, ns);
            continue;
        }
        let rest = content
            .strip_prefix("bind ")
            .ok_or_else(|| err(format!("expected `bind`, found `{content}`")))?;
        let (target, rhs) = rest
            .split_once('=')
            .ok_or_else(|| err("expected `bind WF.<param> = <uri> [class <Class>]`".into()))?;
        let target: ParamRef = target.trim().parse().map_err(|e| err(format!("{e}")))?;
        if !target.is_workflow() {
            return Err(err(format!("`{target}` is not a workflow input")));
        }
        let words: Vec<&str> = rhs.split_whitespace().collect();
        let (value, instance_class) = match words.as_slice() {
            [v] => (*v, None),
            [v, "class", c] => {
                let iri = prefixes.expand(c).map_err(|e| err(e.to_string()))?;
                (*v, Some(ClassId::new(iri)))
            }
            [] => return Err(err("empty value".into())),
            _ => return Err(err("expected `<uri> [class <Class>]` after `=`".into())),
        };
        out.push(ValueBinding {
            target,
            value: value.to_string(),
            instance_class,
        });
    }
    Ok(out)
}

pub fn serialize_manifest(bindings: &[ValueBinding], prefixes: &PrefixMap) -> String {
    let mut out = String::new();
    for (p, ns) in prefixes.iter() {
        out.push_str(&format!("@prefix {p}: <{ns}>\n"));
    }
    for b in bindings {
        out.push_str(&format!("bind {} = {}", b.target, b.value));
        if let Some(c) = &b.instance_class {
            out.push_str(&format!(" class {}", prefixes.compact(c.as_str())));
        }
        out.push('\n');
    }
    out
}

pub fn parse_endpoints(text: &str) -> Result<IndexMap<String, String>, ManifestError> {
    let mut out = IndexMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = iri::strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let parsed = content
            .strip_prefix("endpoint ")
            .and_then(|r| r.split_once('='))
            .map(|(s, u)| (s.trim(), u.trim()))
            .filter(|(s, u)| !s.is_empty() && !u.is_empty() && !u.contains(char::is_whitespace));
        let Some((service, uri)) = parsed else {
            return Err(ManifestError {
                line,
                message: "expected `endpoint <service> = <uri>`".into(),
            });
        };
        if out.insert(service.to_string(), uri.to_string()).is_some() {
            return Err(ManifestError {
                line,
                message: format!("endpoint for `{service}` given twice"),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest() {
        let text = "@prefix ds: <http://d#>\n# user data\nbind WF.input1 = http://localhost/test1.nii class ds:Mr-dataset\nbind WF.log = http://x/y\n";
        let b = parse_manifest(text, &PrefixMap::new()).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].target, ParamRef::wf("input1"));
        assert_eq!(b[0].instance_class.as_ref().unwrap().as_str(), "http://d#Mr-dataset");
        assert!(b[1].instance_class.is_none());

        let mut p = PrefixMap::new();
        p.insert("ds", "http://d#");
        assert_eq!(
            parse_manifest(&serialize_manifest(&b, &p), &PrefixMap::new()).unwrap(),
            b
        );
    }

    #[test]
    fn manifest_errors() {
        let p = PrefixMap::new();
        assert_eq!(parse_manifest("bind ex1.a = u\n", &p).unwrap_err().line, 1);
        assert!(parse_manifest("\nbind WF.a = \n", &p).is_err());
        assert!(parse_manifest("bind WF.a = u class zz:Q\n", &p).is_err());
        assert!(parse_manifest("bind WF.a = u v\n", &p).is_err());
        assert!(parse_manifest("set WF.a = u\n", &p).is_err());
    }

    #[test]
    fn endpoints() {
        let e = parse_endpoints("endpoint ex001 = http://127.0.0.1:1/a\nendpoint ex002=http://h/b\n").unwrap();
        assert_eq!(e["ex002"], "http://h/b");
        assert!(parse_endpoints("endpoint a = x\nendpoint a = y\n").is_err());
        assert!(parse_endpoints("endpoint a\n").is_err());
    }
}
