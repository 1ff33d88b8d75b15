//! Translation of a case into a propositional logic program with strict
//! negation.
//!
//! Every claim-bearing node `n` becomes an atom `A(n)`. The program is
//! written so that its least model contains `A(n)` exactly when `n` is
//! assessed `True` and `-A(n)` exactly when it is assessed `False`.
//!
//! Program text has one clause per line (`head :- lit, lit.` or `head.`),
//! `-atom` for strict negation, and `% <id>: <text>` comments introducing each
//! node's clauses.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BlockKind, CaseGraph, ConfirmationLevel, DefeaterStatus, Node, NodeId, StructureError};
use crate::propagate::{classify_confirmation, AssessConfig, Verdict};

const SLUG_MAX: usize = 40;
pub const EVIDENCE_PREFIX: &str = "evidence_present_";

fn slug(text: &str) -> String {
    let mut out = String::new();
    let mut gap = false;
    for c in text.chars() {
        if c.is_ascii_alphanumeric() {
            if gap && !out.is_empty() {
                out.push('_');
            }
            gap = false;
            out.push(c.to_ascii_lowercase());
        } else {
            gap = true;
        }
        if out.len() >= SLUG_MAX {
            break;
        }
    }
    out.truncate(SLUG_MAX);
    while out.ends_with('_') {
        out.pop();
    }
    // Keep node atoms out of the evidence namespace and off leading digits.
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) || out.starts_with("evidence_present") {
        out.insert(0, 'n');
    }
    out
}

/// Reversible encoding of an id into `[a-z0-9]`: `z` escapes as `zz`, any
/// other character outside `[a-y0-9]` as `z<hex codepoint>z`.
pub fn encode_id(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for c in id.chars() {
        match c {
            'a'..='y' | '0'..='9' => out.push(c),
            'z' => out.push_str("zz"),
            _ => {
                out.push('z');
                out.push_str(&format!("{:x}", c as u32));
                out.push('z');
            }
        }
    }
    out
}

pub fn decode_id(encoded: &str) -> Option<NodeId> {
    let mut out = String::new();
    let mut chars = encoded.chars();
    while let Some(c) = chars.next() {
        match c {
            'a'..='y' | '0'..='9' => out.push(c),
            'z' => {
                let mut hex = String::new();
                loop {
                    match chars.next()? {
                        'z' => break,
                        h => hex.push(h),
                    }
                }
                if hex.is_empty() {
                    out.push('z');
                } else {
                    let code = u32::from_str_radix(&hex, 16).ok()?;
                    out.push(char::from_u32(code)?);
                }
            }
            _ => return None,
        }
    }
    NodeId::new(out).ok()
}

/// Atom name for a claim-bearing node: a slug of its text, `_`, and the
/// encoded id. `("n7", "Bulb is OK")` gives `bulb_is_ok_n7`.
pub fn mangle_atom(id: &NodeId, text: &str) -> String {
    format!("{}_{}", slug(text), encode_id(id.as_str()))
}

pub fn evidence_atom(id: &NodeId) -> String {
    format!("{EVIDENCE_PREFIX}{}", encode_id(id.as_str()))
}

/// Recovers the node id from the suffix after the last `_`.
pub fn atom_origin(atom: &str) -> Option<NodeId> {
    decode_id(atom.rsplit_once('_')?.1)
}

pub fn is_atom_name(s: &str) -> bool {
    !s.is_empty()
        && s.starts_with(|c: char| c.is_ascii_lowercase())
        && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub atom: String,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: impl Into<String>) -> Self {
        Literal { atom: atom.into(), negated: false }
    }

    pub fn neg(atom: impl Into<String>) -> Self {
        Literal { atom: atom.into(), negated: true }
    }

    pub fn complement(&self) -> Literal {
        Literal { atom: self.atom.clone(), negated: !self.negated }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("-")?;
        }
        f.write_str(&self.atom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub head: Literal,
    pub body: Vec<Literal>,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        for (i, lit) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " :- " } else { ", " })?;
            write!(f, "{lit}")?;
        }
        f.write_str(".")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Item {
    Comment { id: NodeId, text: String },
    Clause(Clause),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClauseProgram {
    pub items: Vec<Item>,
}

impl ClauseProgram {
    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.items.iter().filter_map(|i| match i {
            Item::Clause(c) => Some(c),
            Item::Comment { .. } => None,
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            match item {
                Item::Comment { id, text } => out.push_str(&format!("% {id}: {text}\n")),
                Item::Clause(c) => out.push_str(&format!("{c}\n")),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Node,
    Evidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomEntry {
    pub origin: NodeId,
    pub kind: AtomKind,
    /// Comment text, when the program carries a comment for the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Atom name → originating node.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomTable(pub BTreeMap<String, AtomEntry>);

impl AtomTable {
    pub fn node_atoms(&self) -> impl Iterator<Item = (&String, &NodeId)> {
        self.0.iter().filter(|(_, e)| e.kind == AtomKind::Node).map(|(a, e)| (a, &e.origin))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("atom table serializes") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportedProgram {
    pub program: ClauseProgram,
    pub atoms: AtomTable,
}

impl ExportedProgram {
    pub fn render(&self) -> String {
        self.program.render()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExportError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("block `{block}`: {message}")]
    Block { block: NodeId, message: String },
}

/// Comment text with line breaks and other control characters blanked.
pub fn sanitize_comment(text: &str) -> String {
    text.chars().map(|c| if c.is_control() { ' ' } else { c }).collect()
}

pub fn export_program(graph: &CaseGraph) -> Result<ExportedProgram, ExportError> {
    export_program_with(graph, &AssessConfig::default())
}

pub fn export_program_with(graph: &CaseGraph, config: &AssessConfig) -> Result<ExportedProgram, ExportError> {
    let thresholds = config.thresholds_for(graph);
    // Reject cyclic cases the same way assessment does.
    graph.dependency_order()?;

    let atom_of = |id: &NodeId| -> Result<String, ExportError> {
        let node = graph.nodes.get(id).ok_or_else(|| StructureError::Dangling(id.clone()))?;
        Ok(mangle_atom(id, node.text()))
    };
    let pos = |id: &NodeId| atom_of(id).map(Literal::pos);

    let ordinary = graph.ordinary_defeaters_by_affected();
    let blocks = graph.block_index();
    let mut items = Vec::new();
    let mut atoms = AtomTable::default();

    for node in graph.nodes.values().filter(|n| n.is_claim_bearing()) {
        let id = node.id();
        let head = atom_of(id)?;
        atoms.0.insert(
            head.clone(),
            AtomEntry { origin: id.clone(), kind: AtomKind::Node, text: Some(sanitize_comment(node.text())) },
        );
        items.push(Item::Comment { id: id.clone(), text: sanitize_comment(node.text()) });

        let guard: Vec<Literal> = ordinary
            .get(id)
            .into_iter()
            .flatten()
            .map(|d| atom_of(&d.id).map(Literal::neg))
            .collect::<Result<_, _>>()?;
        let mut emit = |negated: bool, body: Vec<Literal>| {
            let head = Literal { atom: head.clone(), negated };
            let body = body.into_iter().chain(guard.iter().cloned()).collect();
            items.push(Item::Clause(Clause { head, body }));
        };

        if let Some(exact) = graph.exact_defeater_on(id) {
            let e = atom_of(&exact.id)?;
            emit(false, vec![Literal::neg(e.clone())]);
            emit(true, vec![Literal::pos(e)]);
            continue;
        }
        match (node, blocks.get(id)) {
            (Node::External(x), _) => match x.imported_assessment {
                Some(Verdict::True) => emit(false, vec![]),
                Some(Verdict::False) => emit(true, vec![]),
                _ => {}
            },
            (Node::Claim(c), _) if c.is_assumption() => emit(false, vec![]),
            (Node::Defeater(d), None) if d.status == DefeaterStatus::ResidualRisk => emit(true, vec![]),
            (_, None) => {}
            (_, Some(block)) => {
                let sides: Vec<Literal> = block.sideclaims.iter().map(pos).collect::<Result<_, _>>()?;
                if block.kind == BlockKind::EvidenceIncorporation {
                    let ev = block
                        .subchildren
                        .first()
                        .and_then(|e| graph.nodes.get(e))
                        .and_then(Node::as_evidence)
                        .ok_or_else(|| ExportError::Block {
                            block: block.id.clone(),
                            message: "incorporates no evidence".into(),
                        })?;
                    let atom = evidence_atom(&ev.id);
                    emit(false, vec![Literal::pos(atom.clone())]);
                    let text = ev.present.then(|| sanitize_comment(&ev.description));
                    atoms.0.insert(atom.clone(), AtomEntry { origin: ev.id.clone(), kind: AtomKind::Evidence, text: text.clone() });
                    if let Some(text) = text {
                        items.push(Item::Comment { id: ev.id.clone(), text });
                        items.push(Item::Clause(Clause { head: Literal::pos(atom), body: vec![] }));
                    }
                } else if block.is_disjunctive() {
                    for sub in &block.subchildren {
                        emit(false, sides.iter().cloned().chain([pos(sub)?]).collect());
                    }
                    if !block.subchildren.is_empty() {
                        let refuted: Vec<Literal> =
                            block.subchildren.iter().map(|s| atom_of(s).map(Literal::neg)).collect::<Result<_, _>>()?;
                        emit(true, sides.iter().cloned().chain(refuted).collect());
                    }
                } else if let (BlockKind::Substitution, Some(conf)) = (block.kind, &block.confirmation) {
                    let level = classify_confirmation(conf, thresholds)
                        .map_err(|e| ExportError::Block { block: block.id.clone(), message: e.to_string() })?;
                    let [measured] = block.subchildren.as_slice() else {
                        return Err(ExportError::Block {
                            block: block.id.clone(),
                            message: "confirmation needs exactly one subclaim".into(),
                        });
                    };
                    let body: Vec<Literal> = [pos(measured)?].into_iter().chain(sides).collect();
                    match level {
                        ConfirmationLevel::StronglyPositive => emit(false, body),
                        ConfirmationLevel::StronglyNegative => emit(true, body),
                        ConfirmationLevel::Neutral => {}
                    }
                } else {
                    let body: Vec<Literal> = block.inputs().map(pos).collect::<Result<_, _>>()?;
                    emit(false, body);
                }
            }
        }
    }

    Ok(ExportedProgram { program: ClauseProgram { items }, atoms })
}
