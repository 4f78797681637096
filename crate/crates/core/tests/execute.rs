use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use indexmap::IndexMap;
use nlogflow_core::composer::{load_workflow, Workflow};
use nlogflow_core::executor::{
    execute, parse_manifest, parse_result, Event, ExecOptions, FailureCause, HttpTransport, RunReport, RunStatus,
    ServiceStatus, Transport, TransportError, ValueBinding,
};
use nlogflow_core::mockserv::{respond, serve, MockConfig, MockHandle};
use nlogflow_core::ontology::Ontology;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

struct Setup {
    w: Workflow,
    o: Ontology,
    manifest: Vec<ValueBinding>,
}

fn setup() -> Setup {
    let o = Ontology::load(&read("onto.nlg")).unwrap();
    let w = load_workflow(&fixture("pipeline.wf")).unwrap();
    let manifest = parse_manifest(&read("pipeline.manifest"), o.prefixes()).unwrap();
    Setup { w, o, manifest }
}

fn mock(name: &str, edit: impl FnOnce(&mut MockConfig)) -> MockHandle {
    let mut c = MockConfig::from_toml(&read(name)).unwrap();
    edit(&mut c);
    serve(c).unwrap()
}

fn endpoints(a: &MockHandle, b: &MockHandle) -> IndexMap<String, String> {
    IndexMap::from([("ex001".to_string(), a.url()), ("ex002".to_string(), b.url())])
}

fn run(s: &Setup, a: &MockHandle, b: &MockHandle) -> RunReport {
    let t = HttpTransport::new(std::time::Duration::from_secs(5));
    execute(&s.w, &s.o, &s.manifest, &endpoints(a, b), &t, ExecOptions::default())
}

#[test]
fn pipeline_end_to_end() {
    let s = setup();
    let a = mock("test1.mock.toml", |_| {});
    let b = mock("test2.mock.toml", |_| {});
    let r = run(&s, &a, &b);
    assert!(r.succeeded(), "{:?}", r.status);
    assert_eq!(r.order, ["ex001", "ex002"]);
    assert_eq!(r.wf_outputs.len(), 6);

    let first = r.service("ex001").unwrap();
    let second = r.service("ex002").unwrap();
    assert_eq!(first.request.as_deref().unwrap(), read("golden/ex001.request.xml"));
    assert_eq!(second.request.as_deref().unwrap(), read("golden/ex002.request.xml"));
    assert_eq!(first.response.as_deref().unwrap(), read("golden/ex001.response.xml"));
    assert_eq!(second.inputs["input2"], first.extracted["simpleoutput"]);

    // value conservation along every WF output link
    for (target, value) in &r.wf_outputs {
        let src = s.w.sources_of(&target.parse().unwrap()).remove(0);
        let run = r.service(&src.service).unwrap();
        let nlog = s.w.services[&src.service]
            .nlog_parameters()
            .find(|n| n.id == src)
            .unwrap();
        assert_eq!(&run.extracted[&nlog.has_id], value);
    }

    assert_eq!(a.requests().len(), 1);
    assert_eq!(b.requests().len(), 1);
    assert!(a.requests()[0].diagnostics.is_empty());
}

#[test]
fn runs_are_deterministic() {
    let s = setup();
    let a = mock("test1.mock.toml", |_| {});
    let b = mock("test2.mock.toml", |_| {});
    let r1 = run(&s, &a, &b).without_timing();
    let r2 = run(&s, &a, &b).without_timing();
    assert_eq!(r1, r2);
    let t = HttpTransport::new(std::time::Duration::from_secs(5));
    let r3 = execute(
        &s.w,
        &s.o,
        &s.manifest,
        &endpoints(&a, &b),
        &t,
        ExecOptions { concurrent: true },
    );
    assert_eq!(r3.without_timing(), r1);
}

#[test]
fn no_service_invoked_before_its_inputs() {
    let s = setup();
    let a = mock("test1.mock.toml", |_| {});
    let b = mock("test2.mock.toml", |_| {});
    let r = run(&s, &a, &b);
    for (i, e) in r.events.iter().enumerate() {
        if let Event::Invoked { service } = e {
            for p in &s.w.services[service].inputs {
                assert!(r.events[..i]
                    .iter()
                    .any(|e| matches!(e, Event::Bound { target, .. } if *target == p.id)));
            }
        }
    }
}

#[test]
fn fault_marks_downstream_not_run() {
    let s = setup();
    let a = mock("test1.mock.toml", |c| c.fault_mode = true);
    let b = mock("test2.mock.toml", |_| {});
    let r = run(&s, &a, &b);
    assert!(matches!(&r.status, RunStatus::Failed { cause: FailureCause::FaultReceived, step, .. } if step == "ex001"));
    assert_eq!(r.service("ex002").unwrap().status, ServiceStatus::NotRun);
    assert!(b.requests().is_empty());
}

#[test]
fn missing_linked_markup() {
    let s = setup();
    let a = mock("test1.mock.toml", |c| c.omit_outputs = vec!["simpleoutput".into()]);
    let b = mock("test2.mock.toml", |_| {});
    let r = run(&s, &a, &b);
    assert!(matches!(
        &r.status,
        RunStatus::Failed {
            cause: FailureCause::MissingMarkup,
            ..
        }
    ));
    assert_eq!(r.service("ex002").unwrap().status, ServiceStatus::NotRun);
}

#[test]
fn type_violating_manifest_makes_no_calls() {
    let mut s = setup();
    s.manifest[1].instance_class = Some(s.o.resolve_class("ds:CT-dataset").unwrap());
    let a = mock("test1.mock.toml", |_| {});
    let b = mock("test2.mock.toml", |_| {});
    let r = run(&s, &a, &b);
    assert!(matches!(
        &r.status,
        RunStatus::Failed {
            cause: FailureCause::CheckFailed,
            ..
        }
    ));
    assert!(b.requests().is_empty());
    assert!(r.services.iter().all(|s| s.request.is_none()));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let s = setup();
    let a = mock("test1.mock.toml", |_| {});
    let port = a.port();
    a.shutdown();
    let eps = IndexMap::from([
        ("ex001".to_string(), format!("http://127.0.0.1:{port}/Test1")),
        ("ex002".to_string(), format!("http://127.0.0.1:{port}/Test2")),
    ]);
    let t = HttpTransport::new(std::time::Duration::from_millis(500));
    let r = execute(&s.w, &s.o, &s.manifest, &eps, &t, ExecOptions::default());
    assert!(matches!(
        &r.status,
        RunStatus::Failed {
            cause: FailureCause::TransportError,
            ..
        }
    ));
}

#[test]
fn missing_endpoint() {
    let s = setup();
    let t = |_: &str, _: &str| -> Result<String, TransportError> { unreachable!() };
    let r = execute(&s.w, &s.o, &s.manifest, &IndexMap::new(), &t, ExecOptions::default());
    assert!(matches!(
        &r.status,
        RunStatus::Failed {
            cause: FailureCause::MissingEndpoint,
            ..
        }
    ));
}

#[test]
fn in_process_transport_matches_http() {
    let s = setup();
    let c1 = MockConfig::from_toml(&read("test1.mock.toml")).unwrap();
    let c2 = MockConfig::from_toml(&read("test2.mock.toml")).unwrap();
    let calls = AtomicUsize::new(0);
    let t = |endpoint: &str, body: &str| -> Result<String, TransportError> {
        calls.fetch_add(1, Ordering::SeqCst);
        let c = if endpoint.ends_with("Test1") { &c1 } else { &c2 };
        Ok(respond(c, c.run_id.as_deref().unwrap(), body).1)
    };
    let eps = IndexMap::from([
        ("ex001".to_string(), "mem://Test1".to_string()),
        ("ex002".to_string(), "mem://Test2".to_string()),
    ]);
    let r = execute(&s.w, &s.o, &s.manifest, &eps, &t, ExecOptions::default());
    assert!(r.succeeded());
    assert_eq!(calls.load(Ordering::SeqCst), 2);

    let a = mock("test1.mock.toml", |_| {});
    let b = mock("test2.mock.toml", |_| {});
    let h = run(&s, &a, &b);
    assert_eq!(r.wf_outputs, h.wf_outputs);
}

#[test]
fn optional_markup_may_be_absent() {
    let s = setup();
    let c = MockConfig::from_toml(&read("test2.mock.toml")).unwrap();
    let mut ann = s.w.merged_services().remove(1);
    // make simpleoutput2 unlinked: its absence is then tolerated
    ann.links_mut("simpleoutput2").unwrap().clear();
    let mut omit = c.clone();
    omit.omit_outputs = vec!["simpleoutput2".into()];
    let body = omit.result_envelope("r").render();
    let map = parse_result(&ann, &body).unwrap();
    assert_eq!(map.len(), 3);
    assert!(!map.contains_key("simpleoutput2"));
}

#[test]
fn shutdown_releases_port() {
    let a = mock("test1.mock.toml", |_| {});
    let port = a.port();
    a.shutdown();
    let again = mock("test1.mock.toml", |c| c.port = port);
    assert_eq!(again.port(), port);
}

#[test]
fn transport_trait_object() {
    fn takes(_: &dyn Transport) {}
    takes(&HttpTransport::from_env());
}
