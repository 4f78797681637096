//! `nlogflow`: ingest, annotate, validate, compose and run jGASW service
//! workflows.
//!
//! Exit codes: 0 success or positive verdict, 1 negative verdict,
//! 2 usage or parse error, 3 runtime or transport failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlogflow::commands::{self, AnnotateArgs, IngestArgs, MockArgs, RunArgs};
use nlogflow::report::Outcome;

#[derive(Parser)]
#[command(
    name = "nlogflow",
    version,
    about = "Semantic composition and execution of jGASW services"
)]
struct Cli {
    /// Print the structured JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Load an ontology and report its shape.
    OntologyCheck { file: PathBuf },

    /// Generate an annotation skeleton from a WSDL (and optional XSD).
    Ingest {
        wsdl: PathBuf,
        #[arg(long)]
        xsd: Option<PathBuf>,
        /// Operation to annotate when the WSDL declares several.
        #[arg(long)]
        operation: Option<String>,
        /// Service name; defaults to the WSDL file stem.
        #[arg(long)]
        name: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },

    /// Edit an annotation in place of the user: types, refers-to, links.
    Annotate {
        file: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
        /// PARAM=CLASS, repeatable.
        #[arg(long = "set-type", value_name = "PARAM=TYPE")]
        set_type: Vec<String>,
        #[arg(long = "refers-to", value_name = "CLASS")]
        refers_to: Option<String>,
        /// PARAM=service.param, repeatable.
        #[arg(long, value_name = "PARAM=TARGET")]
        link: Vec<String>,
        /// PARAM=text, repeatable.
        #[arg(long, value_name = "PARAM=TEXT")]
        label: Vec<String>,
        #[arg(short, long, conflicts_with = "in_place")]
        output: Option<PathBuf>,
        #[arg(long = "in-place")]
        in_place: bool,
    },

    /// Check a profile against its data-processing class.
    ProfileCheck {
        file: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
    },

    /// Validate a workflow: structure and link compatibility.
    WfValidate {
        file: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
    },

    /// Execute a workflow against live endpoints.
    WfRun {
        file: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// `endpoint <service> = <url>` lines; unlisted services fall back
        /// to their grounding's WSDL location.
        #[arg(long)]
        endpoints: Option<PathBuf>,
        /// Values above 1 invoke independent services concurrently.
        #[arg(long, default_value_t = 1)]
        concurrency: usize,
    },

    /// Serve mock jGASW endpoints until interrupted.
    MockServe(MockServeArgs),

    /// `mock serve` spelling of `mock-serve`.
    #[command(hide = true)]
    Mock {
        #[command(subcommand)]
        action: MockAction,
    },

    /// Run a triple-pattern query over annotations or a workflow.
    Query {
        /// Optional store file followed by the query text (`@file` reads
        /// the query from a file).
        #[arg(num_args = 1..=2, required = true)]
        args: Vec<String>,
        /// Workflow (.wf) or annotation file to load, repeatable.
        #[arg(long)]
        store: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MockAction {
    Serve(MockServeArgs),
}

#[derive(Args)]
struct MockServeArgs {
    /// Mock config, optionally prefixed with the workflow's local name
    /// (`ex001=test1.mock.toml`). Repeatable.
    #[arg(long = "config", required = true)]
    configs: Vec<String>,
    #[arg(long = "run-id")]
    run_id: Option<String>,
    #[arg(long)]
    port: Option<u16>,
    /// Write the served endpoints in `--endpoints` format.
    #[arg(long = "endpoints-out")]
    endpoints_out: Option<PathBuf>,
}

fn emit(outcome: &Outcome, json: bool) {
    let r = &outcome.report;
    let mut stdout = std::io::stdout().lock();
    if json {
        let _ = writeln!(stdout, "{}", r.to_json());
    } else {
        let _ = stdout.write_all(outcome.text.as_bytes());
        if let Some(e) = &r.error {
            eprintln!("error: {e}");
        }
    }
    let _ = stdout.flush();
}

fn serve_mocks(a: MockServeArgs, json: bool) -> i32 {
    let args = MockArgs {
        configs: a.configs,
        run_id: a.run_id,
        port: a.port,
        endpoints_out: a.endpoints_out,
    };
    let (outcome, handles) = commands::mock_start(&args);
    emit(&outcome, json);
    if !outcome.report.ok {
        return outcome.report.exit_code;
    }
    for h in handles {
        h.wait();
    }
    0
}

fn run(cli: Cli) -> i32 {
    let json = cli.json;
    let outcome = match cli.verb {
        Verb::OntologyCheck { file } => commands::ontology_check(&file),
        Verb::Ingest {
            wsdl,
            xsd,
            operation,
            name,
            output,
        } => commands::ingest(&IngestArgs {
            wsdl,
            xsd,
            operation,
            name,
            output,
        }),
        Verb::Annotate {
            file,
            ontology,
            set_type,
            refers_to,
            link,
            label,
            output,
            in_place,
        } => commands::annotate(&AnnotateArgs {
            file,
            ontology,
            set_type,
            refers_to,
            link,
            label,
            output,
            in_place,
        }),
        Verb::ProfileCheck { file, ontology } => commands::profile_check(&file, &ontology),
        Verb::WfValidate { file, ontology } => commands::wf_validate(&file, &ontology),
        Verb::WfRun {
            file,
            ontology,
            manifest,
            endpoints,
            concurrency,
        } => commands::wf_run(&RunArgs {
            file,
            ontology,
            manifest,
            endpoints,
            concurrency,
        }),
        Verb::MockServe(a)
        | Verb::Mock {
            action: MockAction::Serve(a),
        } => return serve_mocks(a, json),
        Verb::Query { mut args, mut store } => {
            let text = args.pop().expect("clap requires the query");
            store.extend(args.into_iter().map(PathBuf::from));
            commands::query(&store, &text)
        }
    };
    emit(&outcome, json);
    outcome.report.exit_code
}

fn main() -> ExitCode {
    let code = run(Cli::parse());
    ExitCode::from(code as u8)
}
