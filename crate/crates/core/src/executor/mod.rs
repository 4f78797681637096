//! Workflow execution.
//!
//! Services run in dataflow order. Before each invocation every input value
//! is checked against the input's declared class; values supplied by the
//! user carry the class given in the run manifest, values produced upstream
//! carry the declared class of the producing parameter. Results are split
//! by markup and routed along links.

mod envelope;
mod manifest;
mod transport;

use std::collections::HashMap;
use std::fmt;
use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::composer::{topo_levels, validate_workflow, Workflow};
use crate::diag::Diagnostic;
use crate::ontology::{ClassId, Ontology, OntologyError};
use crate::semodel::{ParamRef, ServiceAnnotation, TypeRef};

pub use envelope::{
    build_request, escape, parse_request, parse_result, render_fault, result_element, EnvelopeError, ParsedRequest,
    RequestChild, RequestEnvelope, ResultEnvelope, SOAP_ENV_NS,
};
pub use manifest::{parse_endpoints, parse_manifest, serialize_manifest, ManifestError, ValueBinding};
pub use transport::{HttpTransport, Transport, TransportError, DEFAULT_TIMEOUT_MS, TIMEOUT_ENV};

/// Accept iff the instance class is subsumed by the declared class.
/// Builtin-typed targets accept any value; a class-typed target rejects a
/// value whose class is unknown.
pub fn runtime_check(b: &ValueBinding, declared: &TypeRef, o: &Ontology) -> Result<bool, OntologyError> {
    match declared {
        TypeRef::Builtin(_) => Ok(true),
        TypeRef::Class(d) => match &b.instance_class {
            Some(c) => o.is_subclass_of(c, d),
            None => Ok(false),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureCause {
    InvalidWorkflow,
    InvalidManifest,
    CheckFailed,
    MissingValue,
    MissingEndpoint,
    TransportError,
    FaultReceived,
    MissingMarkup,
    MalformedXml,
}

impl fmt::Display for FailureCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub cause: FailureCause,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Succeeded,
    Failed {
        step: String,
        cause: FailureCause,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ServiceStatus {
    Succeeded,
    Failed,
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub target: ParamRef,
    pub value: String,
    pub instance_class: Option<ClassId>,
    pub declared: TypeRef,
    pub accepted: bool,
    /// Value came from an upstream service; already covered by the link
    /// check, repeated for the record.
    pub upstream: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceRun {
    pub service: String,
    pub status: ServiceStatus,
    pub endpoint: Option<String>,
    /// input parameter id -> value
    pub inputs: IndexMap<String, String>,
    pub checks: Vec<CheckRecord>,
    pub request: Option<String>,
    pub response: Option<String>,
    /// markup -> value
    pub extracted: IndexMap<String, String>,
    pub failure: Option<Failure>,
    pub elapsed_ms: Option<u64>,
}

impl ServiceRun {
    fn new(service: &str) -> Self {
        ServiceRun {
            service: service.to_string(),
            status: ServiceStatus::NotRun,
            endpoint: None,
            inputs: IndexMap::new(),
            checks: Vec::new(),
            request: None,
            response: None,
            extracted: IndexMap::new(),
            failure: None,
            elapsed_ms: None,
        }
    }

    fn fail(mut self, cause: FailureCause, message: impl Into<String>) -> Self {
        self.status = ServiceStatus::Failed;
        self.failure = Some(Failure {
            cause,
            message: message.into(),
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    /// A value reached a parameter (manifest or upstream).
    Bound {
        target: ParamRef,
        source: String,
    },
    Checked {
        target: ParamRef,
        accepted: bool,
    },
    Invoked {
        service: String,
    },
    Completed {
        service: String,
        status: ServiceStatus,
    },
    Skipped {
        service: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub workflow: String,
    pub status: RunStatus,
    pub order: Vec<String>,
    pub manifest_checks: Vec<CheckRecord>,
    pub services: Vec<ServiceRun>,
    pub wf_outputs: IndexMap<String, String>,
    pub events: Vec<Event>,
    pub diagnostics: Vec<Diagnostic>,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.status == RunStatus::Succeeded
    }

    pub fn service(&self, name: &str) -> Option<&ServiceRun> {
        self.services.iter().find(|s| s.service == name)
    }

    /// Copy with wall-clock fields cleared, for run-to-run comparison.
    pub fn without_timing(&self) -> RunReport {
        let mut r = self.clone();
        for s in &mut r.services {
            s.elapsed_ms = None;
        }
        r
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExecOptions {
    /// Invoke independent services of one dataflow level concurrently.
    pub concurrent: bool,
}

/// Value travelling through the workflow with the class it is known by.
#[derive(Debug, Clone)]
struct Carried {
    value: String,
    class: Option<ClassId>,
    origin: String,
}

pub fn execute(
    w: &Workflow,
    o: &Ontology,
    manifest: &[ValueBinding],
    endpoints: &IndexMap<String, String>,
    transport: &dyn Transport,
    opts: ExecOptions,
) -> RunReport {
    let mut report = RunReport {
        workflow: w.name.clone(),
        status: RunStatus::Succeeded,
        order: Vec::new(),
        manifest_checks: Vec::new(),
        services: Vec::new(),
        wf_outputs: IndexMap::new(),
        events: Vec::new(),
        diagnostics: Vec::new(),
    };
    let fail_all = |report: &mut RunReport, step: &str, cause: FailureCause, message: String| {
        report.status = RunStatus::Failed {
            step: step.to_string(),
            cause,
            message,
        };
        for name in w.services.keys() {
            report.events.push(Event::Skipped { service: name.clone() });
            report.services.push(ServiceRun::new(name));
        }
    };

    let validation = validate_workflow(w, o);
    report.diagnostics = validation.diagnostics;
    if !validation.valid {
        let n = report.diagnostics.iter().filter(|d| d.is_error()).count();
        fail_all(
            &mut report,
            "validate",
            FailureCause::InvalidWorkflow,
            format!("{n} validation error(s)"),
        );
        return report;
    }
    let levels = match topo_levels(w) {
        Ok(l) => l,
        Err(e) => {
            fail_all(&mut report, "validate", FailureCause::InvalidWorkflow, e.to_string());
            return report;
        }
    };

    // manifest coverage and user-value checks against WF input types
    let mut values: HashMap<ParamRef, Carried> = HashMap::new();
    for b in manifest {
        let Some(p) = w.wf_inputs.iter().find(|p| p.id == b.target) else {
            fail_all(
                &mut report,
                "manifest",
                FailureCause::InvalidManifest,
                format!("`{}` is not a workflow input", b.target),
            );
            return report;
        };
        if b.value.is_empty() || values.contains_key(&b.target) {
            fail_all(
                &mut report,
                "manifest",
                FailureCause::InvalidManifest,
                format!("`{}` bound to an empty value or more than once", b.target),
            );
            return report;
        }
        let accepted = match runtime_check(b, &p.parameter_type, o) {
            Ok(a) => a,
            Err(e) => {
                fail_all(&mut report, "manifest", FailureCause::InvalidManifest, e.to_string());
                return report;
            }
        };
        report.events.push(Event::Checked {
            target: b.target.clone(),
            accepted,
        });
        report.manifest_checks.push(CheckRecord {
            target: b.target.clone(),
            value: b.value.clone(),
            instance_class: b.instance_class.clone(),
            declared: p.parameter_type.clone(),
            accepted,
            upstream: false,
        });
        if !accepted {
            fail_all(
                &mut report,
                &b.target.to_string(),
                FailureCause::CheckFailed,
                format!(
                    "instance class {} is not subsumed by {}",
                    b.instance_class.as_ref().map(|c| c.local_name()).unwrap_or("<none>"),
                    p.parameter_type.display(o.prefixes())
                ),
            );
            return report;
        }
        values.insert(
            b.target.clone(),
            Carried {
                value: b.value.clone(),
                class: b.instance_class.clone(),
                origin: "manifest".into(),
            },
        );
    }
    if let Some(p) = w.wf_inputs.iter().find(|p| !values.contains_key(&p.id)) {
        fail_all(
            &mut report,
            "manifest",
            FailureCause::MissingValue,
            format!("no manifest binding for `{}`", p.id),
        );
        return report;
    }

    let links = w.all_links();
    let merged: IndexMap<String, ServiceAnnotation> =
        w.merged_services().into_iter().map(|s| (s.name.clone(), s)).collect();
    route(&links, w, &mut values, &mut report.events, |r| r.is_workflow());

    let mut failed = false;
    for level in &levels {
        report.order.extend(level.iter().cloned());
        if failed {
            for name in level {
                report.events.push(Event::Skipped { service: name.clone() });
                report.services.push(ServiceRun::new(name));
            }
            continue;
        }
        let run_one = |name: &String| run_service(&merged[name], o, &values, endpoints, transport);
        let runs: Vec<(ServiceRun, Vec<Event>)> = if opts.concurrent && level.len() > 1 {
            std::thread::scope(|scope| {
                let handles: Vec<_> = level.iter().map(|n| scope.spawn(move || run_one(n))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("service worker panicked"))
                    .collect()
            })
        } else {
            level.iter().map(run_one).collect()
        };
        for (run, events) in runs {
            report.events.extend(events);
            report.events.push(Event::Completed {
                service: run.service.clone(),
                status: run.status,
            });
            if run.status == ServiceStatus::Succeeded {
                let s = &merged[&run.service];
                for n in s.nlog_parameters() {
                    if let Some(v) = run.extracted.get(&n.has_id) {
                        values.insert(
                            n.id.clone(),
                            Carried {
                                value: v.clone(),
                                class: n.parameter_type.as_class().cloned(),
                                origin: n.id.to_string(),
                            },
                        );
                    }
                }
                for out in s.outputs.iter().filter(|o| o.expands_to.is_empty()) {
                    if let Some(v) = run.extracted.get(&out.base.id.param) {
                        values.insert(
                            out.base.id.clone(),
                            Carried {
                                value: v.clone(),
                                class: out.base.parameter_type.as_class().cloned(),
                                origin: out.base.id.to_string(),
                            },
                        );
                    }
                }
                let name = run.service.clone();
                route(&links, w, &mut values, &mut report.events, |r| r.service == name);
            } else if !failed {
                failed = true;
                let f = run.failure.clone().expect("failed run records its cause");
                report.status = RunStatus::Failed {
                    step: run.service.clone(),
                    cause: f.cause,
                    message: f.message,
                };
            }
            report.services.push(run);
        }
    }

    for p in &w.wf_outputs {
        if let Some(v) = values.get(&p.id) {
            report.wf_outputs.insert(p.id.to_string(), v.value.clone());
        }
    }
    if report.succeeded() {
        if let Some(p) = w.wf_outputs.iter().find(|p| !values.contains_key(&p.id)) {
            report.status = RunStatus::Failed {
                step: p.id.to_string(),
                cause: FailureCause::MissingValue,
                message: format!("workflow output `{}` received no value", p.id),
            };
        }
    }
    report
}

/// Copy values along every link whose source satisfies `from`.
fn route(
    links: &[crate::composer::Link],
    w: &Workflow,
    values: &mut HashMap<ParamRef, Carried>,
    events: &mut Vec<Event>,
    from: impl Fn(&ParamRef) -> bool,
) {
    for l in links.iter().filter(|l| from(&l.source)) {
        if w.resolve(&l.source).is_none() {
            continue;
        }
        if let Some(v) = values.get(&l.source).cloned() {
            events.push(Event::Bound {
                target: l.target.clone(),
                source: l.source.to_string(),
            });
            values.insert(l.target.clone(), v);
        }
    }
}

fn run_service(
    s: &ServiceAnnotation,
    o: &Ontology,
    values: &HashMap<ParamRef, Carried>,
    endpoints: &IndexMap<String, String>,
    transport: &dyn Transport,
) -> (ServiceRun, Vec<Event>) {
    let mut run = ServiceRun::new(&s.name);
    let mut events = Vec::new();

    for p in &s.inputs {
        let Some(v) = values.get(&p.id) else {
            return (
                run.fail(FailureCause::MissingValue, format!("input `{}` has no value", p.id)),
                events,
            );
        };
        let binding = ValueBinding {
            target: p.id.clone(),
            value: v.value.clone(),
            instance_class: v.class.clone(),
        };
        let accepted = runtime_check(&binding, &p.parameter_type, o).unwrap_or(false);
        events.push(Event::Checked {
            target: p.id.clone(),
            accepted,
        });
        run.checks.push(CheckRecord {
            target: p.id.clone(),
            value: v.value.clone(),
            instance_class: v.class.clone(),
            declared: p.parameter_type.clone(),
            accepted,
            upstream: v.origin != "manifest",
        });
        run.inputs.insert(p.id.param.clone(), v.value.clone());
        if !accepted {
            let msg = format!(
                "value for `{}` has class {} which is not subsumed by {}",
                p.id,
                v.class.as_ref().map(|c| c.local_name()).unwrap_or("<none>"),
                p.parameter_type.display(o.prefixes())
            );
            return (run.fail(FailureCause::CheckFailed, msg), events);
        }
    }

    let Some(endpoint) = endpoints.get(&s.name) else {
        return (
            run.fail(FailureCause::MissingEndpoint, format!("no endpoint for `{}`", s.name)),
            events,
        );
    };
    run.endpoint = Some(endpoint.clone());
    let request = match build_request(s, &run.inputs) {
        Ok(r) => r.render(),
        Err(e) => return (run.fail(FailureCause::MissingValue, e.to_string()), events),
    };
    run.request = Some(request.clone());

    events.push(Event::Invoked {
        service: s.name.clone(),
    });
    let started = Instant::now();
    let response = transport.post(endpoint, &request);
    run.elapsed_ms = Some(started.elapsed().as_millis() as u64);
    let response = match response {
        Ok(r) => r,
        Err(e) => return (run.fail(FailureCause::TransportError, e.0), events),
    };
    run.response = Some(response.clone());

    match parse_result(s, &response) {
        Ok(map) => {
            run.extracted = map;
            run.status = ServiceStatus::Succeeded;
            (run, events)
        }
        Err(e) => {
            let cause = match e {
                EnvelopeError::FaultReceived(_) => FailureCause::FaultReceived,
                EnvelopeError::MissingMarkup(_) => FailureCause::MissingMarkup,
                EnvelopeError::MissingValue(_) => FailureCause::MissingValue,
                EnvelopeError::MalformedXml(_) => FailureCause::MalformedXml,
            };
            (run.fail(cause, e.to_string()), events)
        }
    }
}
