//! Structural well-formedness checks for a [`CaseGraph`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{
    BlockKind, CaseGraph, DefeaterStatus, Element, Node, NodeId,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Error,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub node: NodeId,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "ERROR",
            Severity::Warn => "WARN",
        };
        write!(f, "{sev} {}: {}", self.node, self.message)
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(|d| d.severity == Severity::Error)
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn error(&mut self, node: &NodeId, message: impl Into<String>) {
        self.0.push(Diagnostic { node: node.clone(), severity: Severity::Error, message: message.into() });
    }

    fn warn(&mut self, node: &NodeId, message: impl Into<String>) {
        self.0.push(Diagnostic { node: node.clone(), severity: Severity::Warn, message: message.into() });
    }
}

/// Checks every type- and graph-level invariant. Empty output means the graph
/// is well formed. Diagnostics are sorted by node id, then severity.
pub fn validate_structure(graph: &CaseGraph) -> Vec<Diagnostic> {
    let mut out = Collector(Vec::new());

    check_top(graph, &mut out);
    for id in graph.nodes.keys() {
        if graph.blocks.contains_key(id) {
            out.error(id, "duplicate id: used by both a node and a block");
        }
    }
    for (key, node) in &graph.nodes {
        if key != node.id() {
            out.error(key, format!("node stored under mismatched key (node id `{}`)", node.id()));
        }
        check_node(graph, node, &mut out);
    }
    check_blocks(graph, &mut out);
    check_exact_uniqueness(graph, &mut out);

    for id in graph.cyclic_elements() {
        out.error(&id, "support cycle");
    }

    let connected = graph.connected_to_top();
    for id in graph.nodes.keys().chain(graph.blocks.keys()) {
        if !connected.contains(id) {
            out.warn(id, "not connected to the top claim");
        }
    }

    let mut diagnostics = out.0;
    diagnostics.sort();
    diagnostics.dedup();
    diagnostics
}

fn check_top(graph: &CaseGraph, out: &mut Collector) {
    let top = &graph.top;
    match graph.nodes.get(top) {
        None => out.error(top, "top claim does not exist"),
        Some(Node::Claim(_)) => {}
        Some(other) => out.error(top, format!("top must be a claim, found {}", other.kind_name())),
    }
    for d in graph.defeaters() {
        if graph.blocks.values().any(|b| b.parent == d.id) && graph.subcase_of(&d.id).contains(top) {
            out.error(top, format!("top claim lies inside the subcase of defeater `{}`", d.id));
        }
    }
}

fn check_node(graph: &CaseGraph, node: &Node, out: &mut Collector) {
    let has_block = graph.blocks.values().any(|b| &b.parent == node.id());
    match node {
        Node::Claim(c) => {
            if c.is_assumption() {
                if has_block {
                    out.error(&c.id, "assumption must not have a supporting block");
                }
                if c.assumption_justification.as_deref().is_none_or(|j| j.trim().is_empty()) {
                    out.error(&c.id, "assumption needs a justification");
                }
            }
        }
        Node::Defeater(d) => {
            if d.target == d.id {
                out.error(&d.id, "defeater targets itself");
            }
            match graph.element(&d.target) {
                None => out.error(&d.id, format!("dangling reference: target `{}` does not exist", d.target)),
                Some(target) => {
                    if d.is_exact() && !matches!(target, Element::Node(Node::Claim(_) | Node::Defeater(_))) {
                        out.error(&d.id, "exact defeater must target a claim or a defeater");
                    }
                    if d.is_live() {
                        if let Element::Node(Node::External(_)) = target {
                            out.warn(&d.id, "defeater targets an external subcase reference; treated as a claim");
                        }
                        if let Element::Node(Node::Evidence(e)) = target {
                            if graph.incorporating_block(&e.id).is_none() {
                                out.error(&d.id, "targeted evidence is not incorporated, no affected claim");
                            }
                        }
                        if !d.is_exact() {
                            if let Ok(affected) = graph.affected_claim(&d.id) {
                                let affected_is_defeater =
                                    graph.nodes.get(&affected).and_then(Node::as_defeater).is_some();
                                if affected_is_defeater && graph.exact_defeater_on(&affected).is_some() {
                                    out.warn(
                                        &d.id,
                                        format!("ordinary defeater on `{affected}`, which also has an exact defeater"),
                                    );
                                }
                            }
                        }
                    }
                }
            }
            if d.status == DefeaterStatus::ResidualRisk {
                if has_block {
                    out.error(&d.id, "residual risk must not have a subcase");
                }
                if d.residual_justification.as_deref().is_none_or(|j| j.trim().is_empty()) {
                    out.error(&d.id, "residual risk needs a justification");
                }
            }
        }
        Node::Evidence(_) => {
            let uses = graph.blocks.values().filter(|b| b.subchildren.contains(node.id())).count();
            if uses > 1 {
                out.error(node.id(), "evidence incorporated by more than one block");
            }
        }
        Node::External(x) => {
            if let Some(c) = x.imported_confidence {
                if !(0.0..=1.0).contains(&c) {
                    out.error(&x.id, format!("imported confidence {c} outside [0,1]"));
                }
            }
        }
    }
}

fn check_blocks(graph: &CaseGraph, out: &mut Collector) {
    let mut per_parent: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for (key, block) in &graph.blocks {
        let id = &block.id;
        if key != id {
            out.error(key, format!("block stored under mismatched key (block id `{id}`)"));
        }
        per_parent.entry(&block.parent).or_default().push(id);

        match graph.nodes.get(&block.parent) {
            None => out.error(id, format!("dangling reference: parent `{}` does not exist", block.parent)),
            Some(Node::Claim(_) | Node::Defeater(_)) => {}
            Some(other) => out.error(id, format!("block parent must be a claim or defeater, found {}", other.kind_name())),
        }

        match (block.kind, block.decomposition_mode) {
            (BlockKind::Decomposition, None) => out.error(id, "decomposition block needs a mode"),
            (BlockKind::Decomposition, Some(_)) | (_, None) => {}
            (_, Some(_)) => out.error(id, "decomposition mode set on a non-decomposition block"),
        }

        if block.subchildren.is_empty() {
            out.error(id, "block has no subchildren");
        }

        if block.kind == BlockKind::EvidenceIncorporation {
            if block.subchildren.len() != 1 {
                out.error(id, "evidence incorporation needs exactly one evidence node");
            }
            if !block.sideclaims.is_empty() {
                out.error(id, "evidence incorporation does not take sideclaims");
            }
            for child in &block.subchildren {
                match graph.nodes.get(child) {
                    None => out.error(id, format!("dangling reference: `{child}` does not exist")),
                    Some(Node::Evidence(_)) => {}
                    Some(other) => out.error(id, format!("evidence incorporation over a {}", other.kind_name())),
                }
            }
        } else {
            for input in block.inputs() {
                match graph.nodes.get(input) {
                    None => out.error(id, format!("dangling reference: `{input}` does not exist")),
                    Some(Node::Claim(_) | Node::External(_)) => {}
                    Some(other) => out.error(id, format!("block input `{input}` is a {}, expected a claim", other.kind_name())),
                }
            }
        }

        if let Some(conf) = &block.confirmation {
            if block.kind != BlockKind::Substitution {
                out.error(id, "confirmation annotation only applies to substitution blocks");
            }
            if block.subchildren.len() != 1 {
                out.error(id, "confirmed substitution needs exactly one measured subclaim");
            } else if graph.incorporating_block_parent(&block.subchildren[0]).is_none() {
                out.warn(id, "confirmed subclaim is not an evidentially measured claim");
            }
            for problem in conf.check() {
                out.error(id, problem);
            }
        }
    }
    for (parent, blocks) in per_parent {
        if blocks.len() > 1 && graph.nodes.contains_key(parent) {
            out.error(parent, format!("parent of {} blocks; at most one allowed", blocks.len()));
        }
    }
}

fn check_exact_uniqueness(graph: &CaseGraph, out: &mut Collector) {
    let mut exact: BTreeMap<&NodeId, BTreeSet<&NodeId>> = BTreeMap::new();
    for d in graph.defeaters().filter(|d| d.is_live() && d.is_exact()) {
        exact.entry(&d.target).or_default().insert(&d.id);
    }
    for (target, defeaters) in exact {
        if defeaters.len() > 1 {
            out.error(target, format!("more than one exact defeater: {defeaters:?}"));
        }
    }
}

impl CaseGraph {
    /// True when `id` is the parent of an evidence-incorporation block.
    fn incorporating_block_parent(&self, id: &NodeId) -> Option<&NodeId> {
        self.blocks
            .values()
            .find(|b| &b.parent == id && b.kind == BlockKind::EvidenceIncorporation)
            .map(|b| &b.parent)
    }
}
