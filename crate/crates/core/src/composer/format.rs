//! Workflow files.
//!
//! ```text
//! workflow Pipeline
//! base <http://localhost/kb/Test1_2.owl#>
//! @prefix ds: <http://localhost/dataset-owl-lite.owl#>
//!
//! service ex001 = test1.svc
//! input WF.input1 : ds:Mr-dataset
//! output WF.stdout : xsd:string
//! link WF.input1 -> ex001.input1
//! ```
//!
//! Service paths are relative to the workflow file. Each imported annotation
//! is renamed to its local name, so links address `ex001.input1` whatever
//! the annotation calls itself.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use indexmap::IndexMap;

use crate::iri::{self, PrefixMap};
use crate::semodel::{default_base, parse_annotation, Direction, ParamRef, Parameter, ServiceAnnotation, TypeRef};

use super::{Link, Workflow, WorkflowError};

/// Parse workflow text; `load` turns each `service` path into an annotation.
pub fn parse_workflow(
    text: &str,
    mut load: impl FnMut(&str) -> Result<ServiceAnnotation, String>,
) -> Result<Workflow, WorkflowError> {
    let mut name = None;
    let mut base = None;
    let mut prefixes = PrefixMap::new();
    let mut imports = IndexMap::new();
    let mut services = IndexMap::new();
    let mut wf_inputs = Vec::new();
    let mut wf_outputs = Vec::new();
    let mut links = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = iri::strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| WorkflowError::Parse { line, message };
        let (keyword, rest) = content
            .split_once(char::is_whitespace)
            .map(|(k, r)| (k, r.trim()))
            .unwrap_or((content, ""));
        match keyword {
            "workflow" => {
                if rest.is_empty() || rest.contains(char::is_whitespace) {
                    return Err(err("expected `workflow <name>`".into()));
                }
                name = Some(rest.to_string());
            }
            "base" => {
                let ns = rest
                    .strip_prefix('<')
                    .and_then(|r| r.strip_suffix('>'))
                    .ok_or_else(|| err("expected `base <iri>`".into()))?;
                base = Some(ns.to_string());
            }
            "@prefix" => {
                let (p, ns) = iri::parse_prefix_directive(rest).ok_or_else(|| err("malformed @prefix".into()))?;
                prefixes.insert(p, ns);
            }
            "service" => {
                let (local, path) = rest
                    .split_once('=')
                    .map(|(l, p)| (l.trim(), p.trim()))
                    .filter(|(l, p)| !l.is_empty() && !p.is_empty())
                    .ok_or_else(|| err("expected `service <name> = <path>`".into()))?;
                if local == crate::semodel::WF || local.contains(['.', ' ']) {
                    return Err(err(format!("invalid service name `{local}`")));
                }
                if services.contains_key(local) {
                    return Err(err(format!("service `{local}` imported twice")));
                }
                let annotation = load(path).map_err(|m| err(format!("service `{local}`: {m}")))?;
                services.insert(local.to_string(), annotation.renamed(local));
                imports.insert(local.to_string(), path.to_string());
            }
            "input" | "output" => {
                let (id, ty) = rest
                    .split_once(':')
                    .filter(|(id, _)| !id.trim().is_empty())
                    .ok_or_else(|| err(format!("expected `{keyword} WF.<param> : <type>`")))?;
                let id: ParamRef = id.trim().parse().map_err(|e| err(format!("{e}")))?;
                if !id.is_workflow() {
                    return Err(err(format!("workflow parameter `{id}` must use the WF service name")));
                }
                let iri = prefixes.expand(ty.trim()).map_err(|e| err(e.to_string()))?;
                let parameter_type = TypeRef::from_iri(&iri).map_err(err)?;
                let (direction, list) = if keyword == "input" {
                    (Direction::Input, &mut wf_inputs)
                } else {
                    (Direction::Output, &mut wf_outputs)
                };
                list.push(Parameter {
                    id,
                    direction,
                    parameter_type,
                    links: Vec::new(),
                });
            }
            "link" => {
                let (s, t) = rest
                    .split_once("->")
                    .ok_or_else(|| err("expected `link <source> -> <target>`".into()))?;
                let source = s.trim().parse().map_err(|e| err(format!("{e}")))?;
                let target = t.trim().parse().map_err(|e| err(format!("{e}")))?;
                links.push(Link { source, target });
            }
            other => return Err(err(format!("unknown statement `{other}`"))),
        }
    }

    let name = name.ok_or(WorkflowError::Parse {
        line: 0,
        message: "missing `workflow <name>` statement".into(),
    })?;
    Ok(Workflow {
        base: base.unwrap_or_else(|| default_base(&name)),
        name,
        prefixes,
        imports,
        services,
        wf_inputs,
        wf_outputs,
        links,
    })
}

/// Read a workflow file, resolving service paths against its directory.
pub fn load_workflow(path: &Path) -> Result<Workflow, WorkflowError> {
    let text = fs::read_to_string(path).map_err(|e| WorkflowError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_workflow(&text, |rel| {
        let p = dir.join(rel);
        let src = fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
        parse_annotation(&src).map_err(|e| format!("{}: {e}", p.display()))
    })
}

pub fn serialize_workflow(w: &Workflow) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "workflow {}", w.name);
    let _ = writeln!(out, "base <{}>", w.base);
    for (p, ns) in w.prefixes.iter() {
        let _ = writeln!(out, "@prefix {p}: <{ns}>");
    }
    if !w.imports.is_empty() {
        out.push('\n');
        for (local, path) in &w.imports {
            let _ = writeln!(out, "service {local} = {path}");
        }
    }
    let params = |out: &mut String, kw: &str, list: &[Parameter]| {
        if list.is_empty() {
            return;
        }
        out.push('\n');
        for p in list {
            let _ = writeln!(out, "{kw} {} : {}", p.id, p.parameter_type.display(&w.prefixes));
        }
    };
    params(&mut out, "input", &w.wf_inputs);
    params(&mut out, "output", &w.wf_outputs);
    if !w.links.is_empty() {
        out.push('\n');
        for l in &w.links {
            let _ = writeln!(out, "link {} -> {}", l.source, l.target);
        }
    }
    out
}
