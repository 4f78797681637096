//! One function per verb. Each returns an [`Outcome`]; printing and the
//! process exit code are left to `main`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use nlogflow_core::composer::{self, load_workflow, validate_workflow};
use nlogflow_core::executor::{
    execute, parse_endpoints, parse_manifest, ExecOptions, FailureCause, HttpTransport, RunReport, RunStatus,
    ServiceStatus,
};
use nlogflow_core::ingest::ingest_wsdl;
use nlogflow_core::mockserv::{serve, MockConfig, MockHandle};
use nlogflow_core::ontology::{Ontology, OntologyError};
use nlogflow_core::profile::{check_profile, ProfileError};
use nlogflow_core::semodel::{
    apply_edits, build_store, parse_annotation, parse_query, AnnotationEdit, FormatError, ParamRef, Term, TripleStore,
};
use serde::Serialize;

use crate::report::{Outcome, Report, EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

/// Early exit carrying an exit code and message.
pub struct Abort {
    pub code: i32,
    pub message: String,
}

impl Abort {
    fn usage(message: impl Into<String>) -> Self {
        Abort {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, Abort>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Abort::usage(format!("{}: {e}", path.display())))
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn load_ontology(path: &Path) -> Result<Ontology> {
    Ontology::load(&read(path)?).map_err(|e| Abort::usage(format!("{}: {e}", path.display())))
}

fn write_artifact(path: &Path, text: &str, report: &mut Report) -> Result<()> {
    fs::write(path, text).map_err(|e| Abort {
        code: EXIT_RUNTIME,
        message: format!("{}: {e}", path.display()),
    })?;
    report.artifacts.push(display(path));
    Ok(())
}

/// Run `body` and turn an [`Abort`] into a failed outcome.
pub fn guarded(verb: &str, inputs: Vec<String>, body: impl FnOnce(&mut Report) -> Result<String>) -> Outcome {
    let mut report = Report::new(verb, inputs);
    match body(&mut report) {
        Ok(text) => Outcome { report, text },
        Err(a) => {
            report.fail(a.code, a.message.clone());
            Outcome {
                report,
                text: String::new(),
            }
        }
    }
}

// ontology-check

#[derive(Serialize)]
struct OntologySummary {
    classes: usize,
    properties: usize,
    roots: Vec<String>,
}

pub fn ontology_check(file: &Path) -> Outcome {
    guarded("ontology-check", vec![display(file)], |report| {
        let o = match Ontology::load(&read(file)?) {
            Ok(o) => o,
            Err(e) => {
                // structural defects are a negative verdict, syntax a usage error
                let code = match e {
                    OntologyError::Cycle { .. }
                    | OntologyError::DanglingRef { .. }
                    | OntologyError::DuplicateClass { .. } => EXIT_INVALID,
                    _ => EXIT_USAGE,
                };
                return Err(Abort {
                    code,
                    message: format!("{}: {e}", file.display()),
                });
            }
        };
        let px = o.prefixes();
        let summary = OntologySummary {
            classes: o.len(),
            properties: o.properties().count(),
            roots: o
                .classes()
                .filter(|c| c.parents.is_empty())
                .map(|c| px.compact(c.id.as_str()))
                .collect(),
        };
        report.verdict(&summary);
        Ok(format!(
            "ontology ok: {} classes, {} properties, roots {}\n",
            summary.classes,
            summary.properties,
            summary.roots.join(", ")
        ))
    })
}

// ingest

pub struct IngestArgs {
    pub wsdl: PathBuf,
    pub xsd: Option<PathBuf>,
    pub operation: Option<String>,
    pub name: Option<String>,
    pub output: Option<PathBuf>,
}

pub fn ingest(a: &IngestArgs) -> Outcome {
    let mut inputs = vec![display(&a.wsdl)];
    inputs.extend(a.xsd.as_deref().map(display));
    guarded("ingest", inputs, |report| {
        let wsdl = read(&a.wsdl)?;
        let xsd = a.xsd.as_deref().map(read).transpose()?;
        let name = match &a.name {
            Some(n) => n.clone(),
            None => a
                .wsdl
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| Abort::usage("cannot derive a service name; pass --name"))?,
        };
        let s = ingest_wsdl(&wsdl, xsd.as_deref(), a.operation.as_deref(), &name)
            .map_err(|e| Abort::usage(format!("{}: {e}", a.wsdl.display())))?;
        let text = nlogflow_core::semodel::serialize_annotation(&s);
        report.verdict(&serde_json::json!({
            "service": s.name,
            "operation": s.grounding.operation,
            "inputs": s.grounding.input_parts.values().collect::<Vec<_>>(),
            "expansions": s.nlog_parameters().map(|n| &n.has_id).collect::<Vec<_>>(),
            "annotation": text,
        }));
        match &a.output {
            Some(out) => {
                write_artifact(out, &text, report)?;
                Ok(format!("wrote {}\n", out.display()))
            }
            None => Ok(text),
        }
    })
}

// annotate

pub struct AnnotateArgs {
    pub file: PathBuf,
    pub ontology: PathBuf,
    pub set_type: Vec<String>,
    pub refers_to: Option<String>,
    pub link: Vec<String>,
    pub label: Vec<String>,
    pub output: Option<PathBuf>,
    pub in_place: bool,
}

fn pair<'a>(flag: &str, s: &'a str) -> Result<(&'a str, &'a str)> {
    s.split_once('=')
        .map(|(a, b)| (a.trim(), b.trim()))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| Abort::usage(format!("--{flag} expects PARAM=VALUE, got `{s}`")))
}

pub fn annotate(a: &AnnotateArgs) -> Outcome {
    guarded("annotate", vec![display(&a.file), display(&a.ontology)], |report| {
        let o = load_ontology(&a.ontology)?;
        let text = read(&a.file)?;
        let mut edits = Vec::new();
        if let Some(c) = &a.refers_to {
            edits.push(AnnotationEdit::RefersTo { class_term: c.clone() });
        }
        for s in &a.set_type {
            let (param, ty) = pair("set-type", s)?;
            edits.push(AnnotationEdit::SetType {
                param: param.into(),
                type_term: ty.into(),
            });
        }
        for s in &a.label {
            let (param, label) = pair("label", s)?;
            edits.push(AnnotationEdit::SetLabel {
                param: param.into(),
                label: label.into(),
            });
        }
        for s in &a.link {
            let (param, target) = pair("link", s)?;
            let target: ParamRef = target.parse().map_err(|e| Abort::usage(format!("{e}")))?;
            edits.push(AnnotationEdit::AddLink {
                param: param.into(),
                target,
            });
        }
        let updated = apply_edits(&text, &edits, &o).map_err(|e| {
            let code = match e {
                FormatError::UnknownClass(_) | FormatError::UnknownParameter(_) => EXIT_INVALID,
                _ => EXIT_USAGE,
            };
            Abort {
                code,
                message: format!("{}: {e}", a.file.display()),
            }
        })?;
        report.verdict(&serde_json::json!({
            "edits": edits.len(),
            "changed": updated != text,
            "annotation": updated,
        }));
        let target = if a.in_place {
            Some(a.file.as_path())
        } else {
            a.output.as_deref()
        };
        match target {
            Some(out) => {
                write_artifact(out, &updated, report)?;
                Ok(format!("wrote {} ({} edits)\n", out.display(), edits.len()))
            }
            None => Ok(updated),
        }
    })
}

// profile-check

pub fn profile_check(file: &Path, ontology: &Path) -> Outcome {
    guarded("profile-check", vec![display(file), display(ontology)], |report| {
        let o = load_ontology(ontology)?;
        let s = parse_annotation(&read(file)?).map_err(|e| Abort::usage(format!("{}: {e}", file.display())))?;
        let v = match check_profile(&s, &o) {
            Ok(v) => v,
            Err(e @ ProfileError::MissingRefersTo(_)) => {
                return Err(Abort {
                    code: EXIT_INVALID,
                    message: e.to_string(),
                })
            }
            Err(e) => return Err(Abort::usage(e.to_string())),
        };
        report.verdict(&v);
        let px = o.prefixes();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "profile {} refers to {}: {}",
            v.profile,
            px.compact(v.refers_to.as_str()),
            if v.consistent { "consistent" } else { "INCONSISTENT" }
        );
        let _ = writeln!(out, "  {} derived axioms:", v.tmp_class_name);
        for d in &v.derived {
            let _ = writeln!(out, "    {}", d.as_restriction().describe(px));
        }
        let _ = writeln!(out, "  constraints:");
        for c in &v.constraints {
            let _ = writeln!(out, "    {}", c.describe(px));
        }
        for viol in &v.violations {
            let _ = writeln!(
                out,
                "  violated: {} (observed {})",
                viol.restriction.describe(px),
                viol.observed
            );
        }
        if !v.consistent {
            report.exit(EXIT_INVALID);
        }
        Ok(out)
    })
}

// wf-validate

fn load_wf(path: &Path) -> Result<composer::Workflow> {
    load_workflow(path).map_err(|e| Abort::usage(format!("{}: {e}", path.display())))
}

pub fn wf_validate(file: &Path, ontology: &Path) -> Outcome {
    guarded("wf-validate", vec![display(file), display(ontology)], |report| {
        let o = load_ontology(ontology)?;
        let w = load_wf(file)?;
        let r = validate_workflow(&w, &o);
        report.diagnostics = r.diagnostics.clone();
        report.verdict(&r);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "workflow {}: {}",
            w.name,
            if r.valid { "valid" } else { "INVALID" }
        );
        for l in &r.links {
            let verdict = match l.verdict {
                Some(v) => format!("{:?}{}", v.kind, if v.accepted { "" } else { " (rejected)" }),
                None => "unchecked".into(),
            };
            let _ = writeln!(out, "  link {}: {verdict}", l.link);
        }
        for d in &r.diagnostics {
            let _ = writeln!(out, "  {d}");
        }
        if r.valid {
            if let Ok(order) = composer::topo_order(&w) {
                let _ = writeln!(out, "  order: {}", order.join(", "));
            }
        } else {
            report.exit(EXIT_INVALID);
        }
        Ok(out)
    })
}

// wf-run

pub struct RunArgs {
    pub file: PathBuf,
    pub ontology: PathBuf,
    pub manifest: PathBuf,
    pub endpoints: Option<PathBuf>,
    pub concurrency: usize,
}

/// Endpoint from the grounding's WSDL location, for services missing
/// from the endpoint map.
fn grounded_endpoint(w: &composer::Workflow, service: &str) -> Option<String> {
    let uri = &w.services.get(service)?.grounding.wsdl_uri;
    let base = uri.strip_suffix("?wsdl").unwrap_or(uri);
    (!base.is_empty()).then(|| base.to_string())
}

pub fn wf_run(a: &RunArgs) -> Outcome {
    let mut inputs = vec![display(&a.file), display(&a.ontology), display(&a.manifest)];
    inputs.extend(a.endpoints.as_deref().map(display));
    guarded("wf-run", inputs, |report| {
        let o = load_ontology(&a.ontology)?;
        let w = load_wf(&a.file)?;
        let manifest = parse_manifest(&read(&a.manifest)?, o.prefixes())
            .map_err(|e| Abort::usage(format!("{}: {e}", a.manifest.display())))?;
        let mut endpoints = match &a.endpoints {
            Some(p) => parse_endpoints(&read(p)?).map_err(|e| Abort::usage(format!("{}: {e}", p.display())))?,
            None => IndexMap::new(),
        };
        for name in w.services.keys() {
            if !endpoints.contains_key(name) {
                if let Some(e) = grounded_endpoint(&w, name) {
                    endpoints.insert(name.clone(), e);
                }
            }
        }
        let opts = ExecOptions {
            concurrent: a.concurrency > 1,
        };
        let r = execute(&w, &o, &manifest, &endpoints, &HttpTransport::from_env(), opts);
        report.diagnostics = r.diagnostics.clone();
        report.verdict(&r);
        report.exit(run_exit_code(&r));
        Ok(render_run(&r))
    })
}

pub fn run_exit_code(r: &RunReport) -> i32 {
    match &r.status {
        RunStatus::Succeeded => EXIT_OK,
        RunStatus::Failed { cause, .. } => match cause {
            FailureCause::InvalidWorkflow => EXIT_INVALID,
            FailureCause::InvalidManifest | FailureCause::MissingValue | FailureCause::MissingEndpoint => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        },
    }
}

fn render_run(r: &RunReport) -> String {
    let mut out = String::new();
    match &r.status {
        RunStatus::Succeeded => {
            let _ = writeln!(out, "run {}: succeeded", r.workflow);
        }
        RunStatus::Failed { step, cause, message } => {
            let _ = writeln!(out, "run {}: FAILED at {step}: {cause}: {message}", r.workflow);
        }
    }
    for c in &r.manifest_checks {
        let _ = writeln!(
            out,
            "  check {} = {}: {}",
            c.target,
            c.value,
            if c.accepted { "accepted" } else { "REJECTED" }
        );
    }
    for s in &r.services {
        let status = match s.status {
            ServiceStatus::Succeeded => "succeeded",
            ServiceStatus::Failed => "FAILED",
            ServiceStatus::NotRun => "not run",
        };
        let _ = write!(out, "  service {}: {status}", s.service);
        if let Some(e) = &s.endpoint {
            let _ = write!(out, " ({e})");
        }
        if let Some(f) = &s.failure {
            let _ = write!(out, ": {}: {}", f.cause, f.message);
        }
        out.push('\n');
        for (markup, v) in &s.extracted {
            let _ = writeln!(out, "    {markup} = {v}");
        }
    }
    for (k, v) in &r.wf_outputs {
        let _ = writeln!(out, "  output {k} = {v}");
    }
    for d in r.diagnostics.iter().filter(|d| d.is_error()) {
        let _ = writeln!(out, "  {d}");
    }
    out
}

// mock-serve

pub struct MockArgs {
    /// `[local=]path` entries
    pub configs: Vec<String>,
    pub run_id: Option<String>,
    pub port: Option<u16>,
    pub endpoints_out: Option<PathBuf>,
}

/// Start every configured mock. The caller keeps the handles alive.
pub fn mock_start(a: &MockArgs) -> (Outcome, Vec<MockHandle>) {
    let mut handles = Vec::new();
    let outcome = guarded("mock-serve", a.configs.clone(), |report| {
        if a.configs.is_empty() {
            return Err(Abort::usage("mock-serve needs at least one --config"));
        }
        if a.port.is_some() && a.configs.len() > 1 {
            return Err(Abort::usage("--port applies to a single --config"));
        }
        let mut lines = String::new();
        let mut listing = IndexMap::new();
        for entry in &a.configs {
            let (local, path) = match entry.split_once('=') {
                Some((l, p)) => (Some(l.trim().to_string()), PathBuf::from(p.trim())),
                None => (None, PathBuf::from(entry)),
            };
            let mut c =
                MockConfig::from_toml(&read(&path)?).map_err(|e| Abort::usage(format!("{}: {e}", path.display())))?;
            if let Some(r) = &a.run_id {
                c.run_id = Some(r.clone());
            }
            if let Some(p) = a.port {
                c.port = p;
            }
            let h = serve(c).map_err(|e| Abort {
                code: EXIT_RUNTIME,
                message: e.to_string(),
            })?;
            let local = local.unwrap_or_else(|| h.config.service.clone());
            let _ = writeln!(lines, "endpoint {local} = {}", h.url());
            listing.insert(local, serde_json::json!({ "url": h.url(), "run_id": h.run_id }));
            handles.push(h);
        }
        if let Some(out) = &a.endpoints_out {
            write_artifact(out, &lines, report)?;
        }
        report.verdict(&listing);
        Ok(lines)
    });
    (outcome, handles)
}

// query

pub fn query(stores: &[PathBuf], text: &str) -> Outcome {
    guarded("query", stores.iter().map(|p| display(p)).collect(), |report| {
        if stores.is_empty() {
            return Err(Abort::usage("query needs a store (a .wf workflow or annotation files)"));
        }
        let store = load_store(stores)?;
        let text = match text.strip_prefix('@') {
            Some(path) => read(Path::new(path))?,
            None => text.to_string(),
        };
        let q = parse_query(&text, &store).map_err(|e| Abort::usage(e.to_string()))?;
        let rows = store.run(&q);
        let vars: Vec<String> = match &q.select {
            Some(v) => v.clone(),
            None => {
                let mut v: Vec<String> = rows.iter().flat_map(|b| b.keys().cloned()).collect();
                v.sort();
                v.dedup();
                v
            }
        };
        let full: Vec<IndexMap<&str, &str>> = rows
            .iter()
            .map(|b| {
                vars.iter()
                    .filter_map(|v| Some((v.as_str(), b.get(v)?.as_str())))
                    .collect()
            })
            .collect();
        report.verdict(&serde_json::json!({ "variables": vars, "rows": full }));

        let short = |t: Option<&Term>| t.map(Term::short).unwrap_or("").to_string();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}",
            vars.iter().map(|v| format!("?{v}")).collect::<Vec<_>>().join("\t")
        );
        let mut lines: Vec<String> = rows
            .iter()
            .map(|b| vars.iter().map(|v| short(b.get(v))).collect::<Vec<_>>().join("\t"))
            .collect();
        lines.sort();
        for l in lines {
            let _ = writeln!(out, "{l}");
        }
        let _ = writeln!(out, "{} rows", rows.len());
        Ok(out)
    })
}

fn load_store(paths: &[PathBuf]) -> Result<TripleStore> {
    let mut services = Vec::new();
    let mut merged = TripleStore::new();
    for p in paths {
        if p.extension().is_some_and(|e| e == "wf") {
            let w = load_wf(p)?;
            let s = w.store().map_err(|e| Abort::usage(e.to_string()))?;
            for t in s.iter() {
                merged.insert(t.subject.clone(), t.predicate.as_str(), t.object.clone());
            }
        } else {
            services.push(parse_annotation(&read(p)?).map_err(|e| Abort::usage(format!("{}: {e}", p.display())))?);
        }
    }
    let s = build_store(&services).map_err(|e| Abort::usage(e.to_string()))?;
    for t in s.iter() {
        merged.insert(t.subject.clone(), t.predicate.as_str(), t.object.clone());
    }
    Ok(merged)
}
