use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use nlogflow::report::Report;
use nlogflow_core::composer::{load_workflow, validate_workflow};
use nlogflow_core::ontology::Ontology;
use nlogflow_core::profile::check_profile;
use nlogflow_core::semodel::parse_annotation;
use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// Fresh copy of the fixture directory, so tests can edit files.
fn scratch() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for e in fs::read_dir(fixtures()).unwrap() {
        let e = e.unwrap();
        if e.file_type().unwrap().is_file() {
            fs::copy(e.path(), dir.path().join(e.file_name())).unwrap();
        }
    }
    dir
}

fn nlogflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlogflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn json(dir: &Path, args: &[&str]) -> (i32, Report) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = nlogflow(dir, &all);
    let text = String::from_utf8(out.stdout).unwrap();
    let report: Report = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    // round trip through the structured form
    assert_eq!(serde_json::from_str::<Report>(&report.to_json()).unwrap(), report);
    (out.status.code().unwrap(), report)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn onto(dir: &Path) -> Ontology {
    Ontology::load(&fs::read_to_string(dir.join("onto.nlg")).unwrap()).unwrap()
}

#[test]
fn ontology_check() {
    let d = scratch();
    let (code, r) = json(d.path(), &["ontology-check", "onto.nlg"]);
    assert_eq!(code, 0);
    assert_eq!(r.verdict["classes"], 8);
    fs::write(
        d.path().join("cyc.nlg"),
        "@prefix a: <http://a#>\nclass a:X subClassOf a:Y\nclass a:Y subClassOf a:X\n",
    )
    .unwrap();
    assert_eq!(
        nlogflow(d.path(), &["ontology-check", "cyc.nlg"]).status.code(),
        Some(1)
    );
    fs::write(d.path().join("bad.nlg"), "klass X\n").unwrap();
    assert_eq!(
        nlogflow(d.path(), &["ontology-check", "bad.nlg"]).status.code(),
        Some(2)
    );
}

#[test]
fn wf_validate_matches_library() {
    let d = scratch();
    let (code, r) = json(d.path(), &["wf-validate", "pipeline.wf", "--ontology", "onto.nlg"]);
    assert_eq!(code, 0);
    let lib = validate_workflow(&load_workflow(&d.path().join("pipeline.wf")).unwrap(), &onto(d.path()));
    assert_eq!(r.verdict, serde_json::to_value(&lib).unwrap());

    let wf = fs::read_to_string(d.path().join("pipeline.wf")).unwrap();
    fs::write(
        d.path().join("broken.wf"),
        wf.replace("link ex001.simpleoutput -> ex002.input2\n", ""),
    )
    .unwrap();
    let out = nlogflow(d.path(), &["wf-validate", "broken.wf", "--ontology", "onto.nlg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("UnboundInput"));
}

#[test]
fn profile_check_reports_violation() {
    let d = scratch();
    let (code, r) = json(
        d.path(),
        &["profile-check", "registration.svc", "--ontology", "onto.nlg"],
    );
    assert_eq!(code, 0);
    let s = parse_annotation(&fs::read_to_string(d.path().join("registration.svc")).unwrap()).unwrap();
    assert_eq!(
        r.verdict,
        serde_json::to_value(check_profile(&s, &onto(d.path())).unwrap()).unwrap()
    );

    let text = fs::read_to_string(d.path().join("registration.svc")).unwrap();
    let one_input = text
        .replace("has_input = [\"input1\", \"input2\"]", "has_input = [\"input1\"]")
        .replace("[[inputs]]\nid = \"input2\"\ntype = \"ds:Mr-dataset\"\n\n", "")
        .replace("input2 = \"target\"\n", "");
    fs::write(d.path().join("one.svc"), one_input).unwrap();
    let out = nlogflow(d.path(), &["profile-check", "one.svc", "--ontology", "onto.nlg"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(
        text.contains("violated: dp:has-for-data-at exactly 2 ds:Mr-dataset (observed 1)"),
        "{text}"
    );
}

#[test]
fn annotate_edits_are_idempotent() {
    let d = scratch();
    let p = d.path();
    let args = [
        "annotate",
        "test2.svc",
        "--ontology",
        "onto.nlg",
        "--set-type",
        "simpleoutput2=ds:T2-weighted-MR-dataset",
        "--refers-to",
        "dp:Registration",
        "--in-place",
    ];
    assert_eq!(nlogflow(p, &args).status.code(), Some(0));
    let once = fs::read_to_string(p.join("test2.svc")).unwrap();
    assert!(once.contains("type = \"ds:T2-weighted-MR-dataset\""));
    assert!(once.contains("refers_to = \"dp:Registration\""));
    assert_eq!(nlogflow(p, &args).status.code(), Some(0));
    assert_eq!(fs::read_to_string(p.join("test2.svc")).unwrap(), once);

    let bad = nlogflow(
        p,
        &[
            "annotate",
            "test2.svc",
            "--ontology",
            "onto.nlg",
            "--set-type",
            "nope=ds:Mr-dataset",
            "--in-place",
        ],
    );
    assert_ne!(bad.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown parameter"));
    assert_eq!(fs::read_to_string(p.join("test2.svc")).unwrap(), once);

    let unknown = nlogflow(
        p,
        &[
            "annotate",
            "test2.svc",
            "--ontology",
            "onto.nlg",
            "--set-type",
            "input1=ds:Nope",
            "--in-place",
        ],
    );
    assert_ne!(unknown.status.code(), Some(0));
    assert_eq!(fs::read_to_string(p.join("test2.svc")).unwrap(), once);
}

#[test]
fn ingest_writes_skeleton() {
    let d = scratch();
    let (code, r) = json(d.path(), &["ingest", "test2.wsdl", "--name", "Test2", "-o", "out.svc"]);
    assert_eq!(code, 0);
    assert_eq!(r.artifacts, ["out.svc"]);
    assert_eq!(
        r.verdict["expansions"],
        serde_json::json!(["stderr", "stdout", "simpleoutput1", "simpleoutput2"])
    );
    let s = parse_annotation(&fs::read_to_string(d.path().join("out.svc")).unwrap()).unwrap();
    assert_eq!(
        s.grounding.input_parts.values().collect::<Vec<_>>(),
        ["simpleinput1", "simpleinput2"]
    );
    assert_eq!(nlogflow(d.path(), &["ingest", "missing.wsdl"]).status.code(), Some(2));
}

#[test]
fn query_forms() {
    let d = scratch();
    let out = nlogflow(
        d.path(),
        &["query", "test1.svc", "output1 nlogExpandsTo ?p . ?p hasID ?id"],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for id in ["simpleoutput", "stdout", "stderr"] {
        assert!(text.contains(id));
    }
    assert!(text.ends_with("3 rows\n"));
    assert_eq!(
        nlogflow(d.path(), &["query", "test1.svc", "?a ?b"]).status.code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_2() {
    let d = scratch();
    assert_eq!(
        nlogflow(d.path(), &["wf-validate", "pipeline.wf"]).status.code(),
        Some(2)
    );
    assert_eq!(
        nlogflow(d.path(), &["wf-validate", "nope.wf", "--ontology", "onto.nlg"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(nlogflow(d.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unreachable_endpoints_exit_3() {
    let d = scratch();
    // bind and release a port so nothing is listening there
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    fs::write(
        d.path().join("eps"),
        format!("endpoint ex001 = http://127.0.0.1:{port}/a\nendpoint ex002 = http://127.0.0.1:{port}/b\n"),
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nlogflow"))
        .current_dir(d.path())
        .env("NLOGFLOW_TIMEOUT_MS", "1000")
        .args([
            "wf-run",
            "pipeline.wf",
            "--ontology",
            "onto.nlg",
            "--manifest",
            "pipeline.manifest",
            "--endpoints",
            "eps",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("TransportError"));
}

/// Spawn `mock-serve` and read the endpoints it prints.
struct MockProcess {
    child: std::process::Child,
}

impl MockProcess {
    fn start(dir: &Path, configs: &[&str]) -> (Self, String) {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_nlogflow"));
        cmd.current_dir(dir).arg("mock-serve");
        for c in configs {
            cmd.args(["--config", c]);
        }
        let mut child = cmd.stdout(Stdio::piped()).spawn().unwrap();
        let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
        let mut eps = String::new();
        for _ in configs {
            eps += &lines.next().unwrap().unwrap();
            eps.push('\n');
        }
        (MockProcess { child }, eps)
    }
}

impl Drop for MockProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[test]
fn mock_serve_then_wf_run() {
    let d = scratch();
    let (_mocks, eps) = MockProcess::start(d.path(), &["ex001=test1.mock.toml", "ex002=test2.mock.toml"]);
    fs::write(d.path().join("eps"), &eps).unwrap();
    let (code, r) = json(
        d.path(),
        &[
            "wf-run",
            "pipeline.wf",
            "--ontology",
            "onto.nlg",
            "--manifest",
            "pipeline.manifest",
            "--endpoints",
            "eps",
        ],
    );
    assert_eq!(code, 0, "{:?}", r.error);
    assert_eq!(r.verdict["wf_outputs"].as_object().unwrap().len(), 6);

    let (code2, r2) = json(
        d.path(),
        &[
            "wf-run",
            "pipeline.wf",
            "--ontology",
            "onto.nlg",
            "--manifest",
            "pipeline.manifest",
            "--endpoints",
            "eps",
            "--concurrency",
            "4",
        ],
    );
    assert_eq!(code2, 0);
    assert_eq!(r2.verdict["wf_outputs"], r.verdict["wf_outputs"]);
}

#[test]
fn mock_serve_alias_and_bad_config() {
    let d = scratch();
    let mut child = Command::new(env!("CARGO_BIN_EXE_nlogflow"))
        .current_dir(d.path())
        .args(["mock", "serve", "--config", "test1.mock.toml"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let line = BufReader::new(child.stdout.take().unwrap())
        .lines()
        .next()
        .unwrap()
        .unwrap();
    assert!(line.starts_with("endpoint Test1 = http://127.0.0.1:"), "{line}");
    child.kill().unwrap();
    child.wait().unwrap();

    fs::write(d.path().join("bad.toml"), "service = 1\n").unwrap();
    assert_eq!(
        nlogflow(d.path(), &["mock-serve", "--config", "bad.toml"])
            .status
            .code(),
        Some(2)
    );
}
