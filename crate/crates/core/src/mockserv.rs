//! Local stand-in for a deployed jGASW service.
//!
//! A mock accepts request envelopes over HTTP, checks them against its
//! configured interface and answers with a result envelope whose values
//! follow a fixed naming rule: `<base_url>/<service>_<run_id>/<file>`, where
//! the file is `std.err` / `std.out` for the standard streams and
//! `<leaf>.nii` for everything else. Invalid requests and fault mode get a
//! `SOAPException` fault with HTTP status 500.
//!
//! ```toml
//! service = "Test1"
//! operation = "local"
//! namespace = "http://i3s.cnrs.fr/jigsaw"
//! inputs = ["simpleinput"]
//! outputs = ["stderr", "stdout", "simpleoutput"]
//! base_url = "http://localhost:80/~bwali"
//! run_id = "1321350928548-9787"
//! port = 0
//! ```

use std::collections::HashSet;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tiny_http::{Header, Method, Response, Server};

use crate::diag::{DiagCode, Diagnostic};
use crate::executor::{render_fault, ResultEnvelope, SOAP_ENV_NS};
use crate::semodel::ServiceAnnotation;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockConfig {
    pub service: String,
    pub operation: String,
    pub namespace: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub base_url: String,
    /// Random when absent.
    #[serde(default)]
    pub run_id: Option<String>,
    #[serde(default)]
    pub fault_mode: bool,
    /// Output leaves left out of every response.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omit_outputs: Vec<String>,
    #[serde(default)]
    pub port: u16,
}

#[derive(Debug, Error)]
pub enum MockError {
    #[error("invalid mock config: {0}")]
    Config(String),
    #[error("cannot bind 127.0.0.1:{port}: {message}")]
    Bind { port: u16, message: String },
}

impl MockConfig {
    pub fn from_toml(text: &str) -> Result<Self, MockError> {
        let c: MockConfig = toml::from_str(text).map_err(|e| MockError::Config(e.to_string()))?;
        c.check()?;
        Ok(c)
    }

    /// Interface of an annotated service, served under `base_url`.
    pub fn for_annotation(s: &ServiceAnnotation, base_url: &str) -> Self {
        MockConfig {
            service: s.name.clone(),
            operation: s.grounding.operation.clone(),
            namespace: s.grounding.namespace.clone(),
            inputs: s.grounding.input_parts.values().cloned().collect(),
            outputs: s.nlog_parameters().map(|n| n.has_id.clone()).collect(),
            base_url: base_url.to_string(),
            run_id: None,
            fault_mode: false,
            omit_outputs: Vec::new(),
            port: 0,
        }
    }

    fn check(&self) -> Result<(), MockError> {
        let mut seen = HashSet::new();
        if let Some(dup) = self.outputs.iter().find(|o| !seen.insert(o.as_str())) {
            return Err(MockError::Config(format!("output leaf `{dup}` listed twice")));
        }
        if self.run_id.as_deref() == Some("") {
            return Err(MockError::Config("run_id is empty".into()));
        }
        Ok(())
    }

    /// File name a leaf's value points at.
    pub fn file_for(leaf: &str) -> String {
        match leaf.to_ascii_lowercase().as_str() {
            "stderr" => "std.err".into(),
            "stdout" => "std.out".into(),
            _ => format!("{leaf}.nii"),
        }
    }

    pub fn value_for(&self, run_id: &str, leaf: &str) -> String {
        format!(
            "{}/{}_{}/{}",
            self.base_url.trim_end_matches('/'),
            self.service,
            run_id,
            Self::file_for(leaf)
        )
    }

    pub fn result_envelope(&self, run_id: &str) -> ResultEnvelope {
        ResultEnvelope {
            element: format!("{}Result", self.operation),
            namespace: self.namespace.clone(),
            entries: self
                .outputs
                .iter()
                .filter(|o| !self.omit_outputs.contains(o))
                .map(|o| (o.clone(), self.value_for(run_id, o)))
                .collect(),
        }
    }
}

fn random_run_id() -> String {
    let ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or_default();
    format!("{ms}-{}", rand::rng().random_range(1000..10000))
}

/// Check a request against the mock's interface.
pub fn validate_request(config: &MockConfig, text: &str) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let doc = match Document::parse(text) {
        Ok(d) => d,
        Err(e) => return vec![Diagnostic::error(DiagCode::MalformedXml, "request", e.to_string())],
    };
    let root = doc.root_element();
    let body = (root.tag_name().name() == "Envelope" && root.tag_name().namespace() == Some(SOAP_ENV_NS))
        .then(|| {
            root.children()
                .find(|n| n.is_element() && n.tag_name().name() == "Body")
        })
        .flatten();
    let Some(op) = body.and_then(|b| b.children().find(Node::is_element)) else {
        return vec![Diagnostic::error(
            DiagCode::MissingBody,
            "request",
            "no SOAP Envelope/Body with an operation element",
        )];
    };

    let name = op.tag_name().name();
    if name != config.operation {
        out.push(Diagnostic::error(
            DiagCode::WrongOperation,
            name,
            format!("expected operation `{}`", config.operation),
        ));
    }
    let ns_ok = |n: &Node| n.tag_name().namespace() == Some(config.namespace.as_str());
    if !ns_ok(&op) {
        out.push(Diagnostic::error(
            DiagCode::WrongNamespace,
            name,
            format!("expected namespace `{}`", config.namespace),
        ));
    }

    let mut seen: Vec<&str> = Vec::new();
    for c in op.children().filter(Node::is_element) {
        let child = c.tag_name().name();
        if !config.inputs.iter().any(|i| i == child) {
            out.push(Diagnostic::error(DiagCode::UnknownChild, child, "not a declared input"));
            continue;
        }
        if seen.contains(&child) {
            out.push(Diagnostic::error(
                DiagCode::DuplicateChild,
                child,
                "input given more than once",
            ));
            continue;
        }
        if !ns_ok(&c) {
            out.push(Diagnostic::error(
                DiagCode::WrongNamespace,
                child,
                format!("expected namespace `{}`", config.namespace),
            ));
        }
        seen.push(child);
    }
    for i in &config.inputs {
        if !seen.contains(&i.as_str()) {
            out.push(Diagnostic::error(
                DiagCode::MissingChild,
                i.clone(),
                "declared input absent",
            ));
        }
    }
    let expected: Vec<&str> = config
        .inputs
        .iter()
        .map(String::as_str)
        .filter(|i| seen.contains(i))
        .collect();
    if seen != expected {
        out.push(Diagnostic::error(
            DiagCode::OrderMismatch,
            name,
            format!(
                "inputs in order [{}], expected [{}]",
                seen.join(", "),
                expected.join(", ")
            ),
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedRequest {
    pub body: String,
    pub diagnostics: Vec<Diagnostic>,
    pub status: u16,
}

/// Synthesize the reply to one request body: (HTTP status, body).
pub fn respond(config: &MockConfig, run_id: &str, body: &str) -> (u16, String, Vec<Diagnostic>) {
    let diags = validate_request(config, body);
    if !diags.is_empty() {
        let msg = diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        return (500, render_fault(&config.namespace, &msg), diags);
    }
    if config.fault_mode {
        return (
            500,
            render_fault(&config.namespace, &format!("{} failed", config.service)),
            diags,
        );
    }
    (200, config.result_envelope(run_id).render(), diags)
}

pub struct MockHandle {
    pub config: MockConfig,
    pub run_id: String,
    port: u16,
    log: Arc<Mutex<Vec<LoggedRequest>>>,
    server: Option<Arc<Server>>,
    worker: Option<JoinHandle<()>>,
}

impl MockHandle {
    pub fn port(&self) -> u16 {
        self.port
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}/{}", self.port, self.config.service)
    }

    pub fn requests(&self) -> Vec<LoggedRequest> {
        self.log.lock().expect("request log poisoned").clone()
    }

    /// Stop accepting requests and release the port.
    pub fn shutdown(mut self) {
        self.stop();
    }

    /// Serve until the process is terminated.
    pub fn wait(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }

    fn stop(&mut self) {
        let Some(server) = self.server.take() else { return };
        server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
        drop(server);
        // tiny_http closes the listener from a detached thread; wait for it
        // so the port can be reused as soon as this returns
        let deadline = std::time::Instant::now() + std::time::Duration::from_secs(2);
        while std::net::TcpListener::bind(("127.0.0.1", self.port)).is_err() && std::time::Instant::now() < deadline {
            std::thread::sleep(std::time::Duration::from_millis(5));
        }
    }
}

impl Drop for MockHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

pub fn serve(config: MockConfig) -> Result<MockHandle, MockError> {
    config.check()?;
    let server = Server::http(("127.0.0.1", config.port)).map_err(|e| MockError::Bind {
        port: config.port,
        message: e.to_string(),
    })?;
    let port = server.server_addr().to_ip().map(|a| a.port()).unwrap_or(config.port);
    let server = Arc::new(server);
    let log = Arc::new(Mutex::new(Vec::new()));
    let run_id = config.run_id.clone().unwrap_or_else(random_run_id);

    let worker = {
        let server = Arc::clone(&server);
        let log = Arc::clone(&log);
        let config = config.clone();
        let run_id = run_id.clone();
        std::thread::spawn(move || {
            let xml = Header::from_bytes("Content-Type", "text/xml; charset=utf-8").expect("static header");
            for mut req in server.incoming_requests() {
                if *req.method() != Method::Post {
                    let _ = req.respond(Response::from_string("POST a SOAP envelope").with_status_code(405));
                    continue;
                }
                let mut body = String::new();
                let (status, reply, diagnostics) = match req.as_reader().read_to_string(&mut body) {
                    Ok(_) => respond(&config, &run_id, &body),
                    Err(e) => {
                        let d = Diagnostic::error(DiagCode::MalformedXml, "request", e.to_string());
                        (500, render_fault(&config.namespace, &d.to_string()), vec![d])
                    }
                };
                log.lock().expect("request log poisoned").push(LoggedRequest {
                    body,
                    diagnostics,
                    status,
                });
                let _ = req.respond(
                    Response::from_string(reply)
                        .with_status_code(status)
                        .with_header(xml.clone()),
                );
            }
        })
    };

    Ok(MockHandle {
        config,
        run_id,
        port,
        log,
        server: Some(server),
        worker: Some(worker),
    })
}
