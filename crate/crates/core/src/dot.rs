//! Graphviz export. Edges are labelled `sr!a` / `sr?a`.

use std::fmt::Write;

use crate::cfsm::Cfsm;
use crate::system::CommunicatingSystem;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn write_body(out: &mut String, m: &Cfsm, prefix: &str, indent: &str) {
    let node = |q: &str| quote(&format!("{prefix}{q}"));
    let start = quote(&format!("{prefix}__start"));
    writeln!(out, "{indent}{start} [shape=point, label=\"\"];").unwrap();
    for q in m.states() {
        writeln!(out, "{indent}{} [label={}];", node(q.as_str()), quote(q.as_str())).unwrap();
    }
    writeln!(out, "{indent}{start} -> {};", node(m.initial().as_str())).unwrap();
    for t in m.transitions() {
        writeln!(
            out,
            "{indent}{} -> {} [label={}];",
            node(t.from.as_str()),
            node(t.to.as_str()),
            quote(&t.action.to_string())
        )
        .unwrap();
    }
}

pub fn machine_to_dot(m: &Cfsm) -> String {
    let mut out = format!(
        "digraph {} {{\n  rankdir=LR;\n  node [shape=circle];\n",
        quote(m.subject().as_str())
    );
    write_body(&mut out, m, "", "  ");
    out.push_str("}\n");
    out
}

/// One cluster per machine; node names are prefixed by the role.
pub fn system_to_dot(s: &CommunicatingSystem) -> String {
    let mut out = String::from("digraph system {\n  rankdir=LR;\n  node [shape=circle];\n");
    for (i, (role, m)) in s.machines().iter().enumerate() {
        writeln!(out, "  subgraph cluster_{i} {{").unwrap();
        writeln!(out, "    label={};", quote(role.as_str())).unwrap();
        write_body(&mut out, m, &format!("{role}."), "    ");
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn labels_use_channel_notation() {
        let dot = machine_to_dot(&fixtures::machine_j());
        assert!(dot.starts_with("digraph \"J\" {"));
        assert!(dot.contains("\"1\" -> \"2\" [label=\"JM!text\"];"));
        assert!(dot.contains("\"2\" -> \"1\" [label=\"MJ?fail\"];"));
        assert!(dot.contains("\"__start\" -> \"1\";"));
    }

    #[test]
    fn quotes_are_escaped() {
        let m = Cfsm::from_labels("p", "a\"b", &[]).unwrap();
        assert!(machine_to_dot(&m).contains("\"a\\\"b\""));
    }

    #[test]
    fn system_clusters_are_prefixed() {
        let s = CommunicatingSystem::new([
            Cfsm::from_labels("A", "0", &[("0", "AB!a", "1")]).unwrap(),
            Cfsm::from_labels("B", "0", &[("0", "AB?a", "1")]).unwrap(),
        ])
        .unwrap();
        let dot = system_to_dot(&s);
        assert_eq!(dot.matches("subgraph").count(), 2);
        assert!(dot.contains("\"B.0\" -> \"B.1\" [label=\"AB?a\"];"));
    }
}
