//! Graphviz rendering of a case.

use std::fmt::Write;

use crate::model::{CaseGraph, Node};
use crate::propagate::{commentary_elements, AssessmentMap, Verdict};

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' | '\r' => out.push_str("\\n"),
            c if c.is_control() => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

fn fill(v: Verdict) -> &'static str {
    match v {
        Verdict::True => "palegreen",
        Verdict::False => "lightpink",
        Verdict::Unsupported => "lightyellow",
    }
}

/// DOT text for the case. Claims are blue ovals, defeaters red ovals with red
/// defeat edges, argument blocks rounded boxes, evidence notes and external
/// references 3-D boxes. With assessments, claim-bearing nodes are filled by
/// verdict and subcases outside the primary argument are dashed.
pub fn render_graphviz(graph: &CaseGraph, assessments: Option<&AssessmentMap>) -> String {
    let ignored = assessments.map(|m| commentary_elements(graph, m)).unwrap_or_default();
    let mut out = String::new();
    let name = if graph.metadata.name.is_empty() { "case" } else { graph.metadata.name.as_str() };
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    out.push_str("  rankdir=BT;\n  node [fontname=\"Helvetica\"];\n");

    for node in graph.nodes.values() {
        let id = node.id();
        let (shape, color) = match node {
            Node::Claim(_) => ("ellipse", "blue"),
            Node::Defeater(_) => ("ellipse", "red"),
            Node::Evidence(_) => ("note", "black"),
            Node::External(_) => ("box3d", "black"),
        };
        let mut label = format!("{id}\\n{}", escape(node.text()));
        if let Node::Claim(c) = node {
            if c.is_assumption() {
                label.push_str("\\n(assumption)");
            }
        }
        if let Node::Defeater(d) = node {
            if d.is_exact() {
                label.push_str("\\n(exact)");
            }
        }
        let mut style = vec![];
        let mut attrs = format!("shape={shape}, color={color}, label=\"{label}\"");
        if let Some(v) = assessments.and_then(|m| m.get(id)) {
            style.push("filled");
            write!(attrs, ", fillcolor={}, tooltip=\"{v}\"", fill(v)).unwrap();
        }
        if ignored.contains(id) {
            style.push("dashed");
        }
        if !style.is_empty() {
            write!(attrs, ", style=\"{}\"", style.join(",")).unwrap();
        }
        writeln!(out, "  \"{}\" [{attrs}];", escape(id.as_str())).unwrap();
    }

    for block in graph.blocks.values() {
        let mut kind = block.kind.name().to_string();
        if let Some(mode) = block.decomposition_mode {
            kind = format!("{kind} ({})", serde_json::to_value(mode).unwrap().as_str().unwrap_or_default());
        }
        let mut style = vec!["rounded"];
        if ignored.contains(&block.id) {
            style.push("dashed");
        }
        writeln!(
            out,
            "  \"{}\" [shape=box, style=\"{}\", label=\"{}\\n{}\"];",
            escape(block.id.as_str()),
            style.join(","),
            escape(block.id.as_str()),
            escape(&kind)
        )
        .unwrap();
    }

    for block in graph.blocks.values() {
        let b = escape(block.id.as_str());
        writeln!(out, "  \"{b}\" -> \"{}\";", escape(block.parent.as_str())).unwrap();
        for sub in &block.subchildren {
            writeln!(out, "  \"{}\" -> \"{b}\";", escape(sub.as_str())).unwrap();
        }
        for side in &block.sideclaims {
            writeln!(out, "  \"{}\" -> \"{b}\" [style=dotted, label=\"side\"];", escape(side.as_str())).unwrap();
        }
    }
    for d in graph.defeaters() {
        let label = if d.is_exact() { ", label=\"exact\"" } else { "" };
        writeln!(
            out,
            "  \"{}\" -> \"{}\" [color=red, arrowhead=tee{label}];",
            escape(d.id.as_str()),
            escape(d.target.as_str())
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
