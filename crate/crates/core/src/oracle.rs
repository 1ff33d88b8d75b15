//! Independent reference semantics: parse exported program text, compute its
//! least model, and read verdicts back through the atom table.
//!
//! Nothing here consults the propagation engine. Strict negation is handled
//! by treating `-a` as an atom of its own and checking consistency after the
//! fixpoint.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asp::{
    atom_origin, export_program_with, is_atom_name, mangle_atom, AtomEntry, AtomKind, AtomTable, Clause,
    ClauseProgram, ExportError, Item, Literal, EVIDENCE_PREFIX,
};
use crate::model::{CaseGraph, NodeId};
use crate::propagate::{AssessConfig, AssessmentMap, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn parse_literal(s: &str, line: usize) -> Result<Literal, ParseError> {
    let s = s.trim();
    let (negated, atom) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    if !is_atom_name(atom) {
        return Err(ParseError { line, message: format!("`{s}` is not a literal") });
    }
    Ok(Literal { atom: atom.to_string(), negated })
}

/// Parses program text and rebuilds the atom table from clause atoms (whose
/// origin is decoded from the suffix) and `% id: text` comments.
pub fn parse_program(text: &str) -> Result<(ClauseProgram, AtomTable), ParseError> {
    let mut items = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(comment) = raw.strip_prefix("% ") {
            let (id, text) = comment
                .split_once(": ")
                .ok_or_else(|| ParseError { line, message: "comment must read `% <id>: <text>`".into() })?;
            let id = NodeId::new(id).map_err(|e| ParseError { line, message: e.to_string() })?;
            items.push(Item::Comment { id, text: text.to_string() });
            continue;
        }
        if raw.trim_start().starts_with('%') {
            continue;
        }
        let body_text = raw
            .trim()
            .strip_suffix('.')
            .ok_or_else(|| ParseError { line, message: "clause must end with `.`".into() })?;
        let (head, body) = match body_text.split_once(":-") {
            Some((h, b)) => {
                let body = b.split(',').map(|l| parse_literal(l, line)).collect::<Result<Vec<_>, _>>()?;
                (h, body)
            }
            None => (body_text, Vec::new()),
        };
        items.push(Item::Clause(Clause { head: parse_literal(head, line)?, body }));
    }
    let program = ClauseProgram { items };
    let atoms = rebuild_atom_table(&program);
    Ok((program, atoms))
}

fn rebuild_atom_table(program: &ClauseProgram) -> AtomTable {
    let mut table = BTreeMap::new();
    for clause in program.clauses() {
        for lit in std::iter::once(&clause.head).chain(&clause.body) {
            table.entry(lit.atom.clone()).or_insert_with(|| {
                let kind = if lit.atom.starts_with(EVIDENCE_PREFIX) { AtomKind::Evidence } else { AtomKind::Node };
                let origin = atom_origin(&lit.atom).unwrap_or_else(|| NodeId::new(lit.atom.clone()).expect("atom is an id"));
                AtomEntry { origin, kind, text: None }
            });
        }
    }
    let mut by_origin: BTreeMap<NodeId, String> = table.iter().map(|(a, e)| (e.origin.clone(), a.clone())).collect();
    for item in &program.items {
        if let Item::Comment { id, text } = item {
            match by_origin.get(id) {
                Some(atom) => {
                    table.get_mut(atom).expect("indexed").text = Some(text.clone());
                }
                None => {
                    let atom = mangle_atom(id, text);
                    by_origin.insert(id.clone(), atom.clone());
                    table.insert(atom, AtomEntry { origin: id.clone(), kind: AtomKind::Node, text: Some(text.clone()) });
                }
            }
        }
    }
    AtomTable(table)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LiteralModel {
    pub derived: BTreeSet<Literal>,
    pub consistent: bool,
}

impl LiteralModel {
    pub fn contains(&self, lit: &Literal) -> bool {
        self.derived.contains(lit)
    }

    /// Atoms derived both positively and negatively.
    pub fn conflicts(&self) -> Vec<String> {
        self.derived
            .iter()
            .filter(|l| !l.negated && self.derived.contains(&l.complement()))
            .map(|l| l.atom.clone())
            .collect()
    }
}

/// Least model of a definite program over literals: each clause fires once
/// all of its distinct body literals are derived.
pub fn least_model<'a>(clauses: impl IntoIterator<Item = &'a Clause>) -> LiteralModel {
    let clauses: Vec<&Clause> = clauses.into_iter().collect();
    let mut waiting: BTreeMap<&Literal, Vec<usize>> = BTreeMap::new();
    let mut missing: Vec<usize> = Vec::with_capacity(clauses.len());
    let mut derived: BTreeSet<Literal> = BTreeSet::new();
    let mut queue: VecDeque<&Literal> = VecDeque::new();

    for (i, c) in clauses.iter().enumerate() {
        let body: BTreeSet<&Literal> = c.body.iter().collect();
        missing.push(body.len());
        for lit in body {
            waiting.entry(lit).or_default().push(i);
        }
        if c.body.is_empty() {
            queue.push_back(&c.head);
        }
    }
    while let Some(lit) = queue.pop_front() {
        if !derived.insert(lit.clone()) {
            continue;
        }
        for &i in waiting.get(lit).map(Vec::as_slice).unwrap_or_default() {
            missing[i] -= 1;
            if missing[i] == 0 {
                queue.push_back(&clauses[i].head);
            }
        }
    }
    let mut model = LiteralModel { derived, consistent: true };
    model.consistent = model.conflicts().is_empty();
    model
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("exported program does not parse: {0}")]
    Parse(#[from] ParseError),
    #[error("least model is inconsistent on {0:?}")]
    Inconsistent(Vec<String>),
}

/// Reads node verdicts off a least model.
pub fn verdicts_from_model(model: &LiteralModel, atoms: &AtomTable) -> AssessmentMap {
    let verdicts = atoms
        .node_atoms()
        .map(|(atom, origin)| {
            let v = if model.contains(&Literal::pos(atom.as_str())) {
                Verdict::True
            } else if model.contains(&Literal::neg(atom.as_str())) {
                Verdict::False
            } else {
                Verdict::Unsupported
            };
            (origin.clone(), v)
        })
        .collect();
    AssessmentMap(verdicts)
}

pub fn oracle_assess(graph: &CaseGraph) -> Result<AssessmentMap, OracleError> {
    oracle_assess_with(graph, &AssessConfig::default())
}

/// Exports the case, re-parses the program text, and evaluates the parsed
/// program's least model.
pub fn oracle_assess_with(graph: &CaseGraph, config: &AssessConfig) -> Result<AssessmentMap, OracleError> {
    let text = export_program_with(graph, config)?.render();
    let (program, atoms) = parse_program(&text)?;
    let model = least_model(program.clauses());
    if !model.consistent {
        return Err(OracleError::Inconsistent(model.conflicts()));
    }
    Ok(verdicts_from_model(&model, &atoms))
}
