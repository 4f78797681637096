//! Random service DAGs wired through generated workflow files.

use std::collections::HashMap;
use std::path::Path;

use nlogflow_core::composer::{
    parse_workflow, serialize_workflow, topo_levels, topo_order, validate_workflow, Link, Workflow,
};
use nlogflow_core::diag::DiagCode;
use nlogflow_core::ontology::Ontology;
use nlogflow_core::semodel::parse_annotation;
use proptest::prelude::*;
use proptest::sample::Index;

fn ontology() -> Ontology {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/onto.nlg");
    Ontology::load(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn service_text(name: &str, inputs: usize) -> String {
    let mut t = format!(
        "name = \"{name}\"\n\n[prefixes]\nds = \"http://localhost/dataset-owl-lite.owl#\"\n\
         dp = \"http://localhost/data-processing-owl-lite.owl#\"\n\n[profile]\nname = \"{name}Profile\"\n\
         refers_to = \"dp:data-processing\"\nhas_input = [{}]\nhas_output = [\"output1\"]\n\n",
        (1..=inputs)
            .map(|i| format!("\"input{i}\""))
            .collect::<Vec<_>>()
            .join(", ")
    );
    for i in 1..=inputs {
        t += &format!("[[inputs]]\nid = \"input{i}\"\ntype = \"ds:Mr-dataset\"\n\n");
    }
    t += "[[outputs]]\nid = \"output1\"\ntype = \"xsd:string\"\n\n\
          [[outputs.expands]]\nid = \"stdout\"\nhas_id = \"stdout\"\ntype = \"xsd:string\"\n\n\
          [[outputs.expands]]\nid = \"image\"\nhas_id = \"image\"\ntype = \"ds:T1-weighted-MR-dataset\"\n\n";
    t += "[grounding]\nwsdl_uri = \"http://h/x?wsdl\"\nnamespace = \"http://h/ns\"\noperation = \"local\"\n\
          port_type = \"p\"\noutput_message_part = \"localResult\"\n\n[grounding.input_parts]\n";
    for i in 1..=inputs {
        t += &format!("input{i} = \"simpleinput{i}\"\n");
    }
    t
}

/// A generated workflow plus the service-level edges it encodes.
#[derive(Debug, Clone)]
struct Case {
    text: String,
    files: HashMap<String, String>,
    names: Vec<String>,
    edges: Vec<(String, String)>,
}

/// `shape[i]` holds, for each input of service `i`, an optional upstream
/// pick; `None` means the input is fed from a fresh WF input.
fn case() -> impl Strategy<Value = Case> {
    (1..7usize)
        .prop_flat_map(|n| {
            let inputs = prop::collection::vec(prop::collection::vec(prop::option::of(any::<Index>()), 1..4), n);
            let names = Just((0..n).map(|i| format!("s{i}")).collect::<Vec<_>>()).prop_shuffle();
            (inputs, names)
        })
        .prop_map(|(shape, names)| {
            let mut text = String::from("workflow Gen\n@prefix ds: <http://localhost/dataset-owl-lite.owl#>\n");
            let mut files = HashMap::new();
            let mut edges = Vec::new();
            let mut decls = String::new();
            let mut links = String::new();
            for (i, ins) in shape.iter().enumerate() {
                let name = &names[i];
                files.insert(format!("{name}.svc"), service_text(name, ins.len()));
                text += &format!("service {name} = {name}.svc\n");
                for (j, pick) in ins.iter().enumerate() {
                    let target = format!("{name}.input{}", j + 1);
                    match pick.filter(|_| i > 0) {
                        Some(ix) => {
                            let up = &names[ix.index(i)];
                            links += &format!("link {up}.image -> {target}\n");
                            edges.push((up.clone(), name.clone()));
                        }
                        None => {
                            let wf = format!("WF.in_{name}_{}", j + 1);
                            decls += &format!("input {wf} : ds:Mr-dataset\n");
                            links += &format!("link {wf} -> {target}\n");
                        }
                    }
                }
            }
            let last = &names[shape.len() - 1];
            decls += "output WF.result : ds:Mr-dataset\n";
            links += &format!("link {last}.image -> WF.result\n");
            text += &decls;
            text += &links;
            Case {
                text,
                files,
                names,
                edges,
            }
        })
}

fn load(c: &Case, text: &str) -> Workflow {
    parse_workflow(text, |path| parse_annotation(&c.files[path]).map_err(|e| e.to_string())).unwrap()
}

proptest! {
    #[test]
    fn generated_workflows_validate(c in case()) {
        let w = load(&c, &c.text);
        let r = validate_workflow(&w, &ontology());
        prop_assert!(r.valid, "{:#?}", r.diagnostics);
    }

    #[test]
    fn topo_order_respects_edges(c in case()) {
        let w = load(&c, &c.text);
        let order = topo_order(&w).unwrap();
        let mut sorted = order.clone();
        sorted.sort();
        let mut names = c.names.clone();
        names.sort();
        prop_assert_eq!(sorted, names);
        let pos = |s: &str| order.iter().position(|x| x == s).unwrap();
        for (a, b) in &c.edges {
            prop_assert!(pos(a) < pos(b), "{a} must precede {b} in {order:?}");
        }
        let flat: Vec<String> = topo_levels(&w).unwrap().concat();
        prop_assert_eq!(flat.len(), order.len());
    }

    #[test]
    fn any_link_deletion_invalidates(c in case(), pick in any::<Index>()) {
        let mut w = load(&c, &c.text);
        let o = ontology();
        let removed: Link = w.links.remove(pick.index(w.links.len()));
        let r = validate_workflow(&w, &o);
        prop_assert!(!r.valid);
        let expected = if removed.target.is_workflow() { DiagCode::UnboundOutput } else { DiagCode::UnboundInput };
        prop_assert!(r.diagnostics.iter().any(|d| d.code == expected));
    }

    #[test]
    fn workflow_round_trip(c in case()) {
        let w = load(&c, &c.text);
        let text = serialize_workflow(&w);
        let back = load(&c, &text);
        prop_assert_eq!(&back, &w);
        prop_assert_eq!(serialize_workflow(&back), text);
    }
}
