//! Differential testing of an assessment engine against the least-model
//! oracle, with greedy shrinking of disagreeing cases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::generate::{random_case, GenConfig};
use crate::model::{CaseGraph, Node, NodeId};
use crate::oracle::oracle_assess;
use crate::propagate::{assess, AssessmentMap, Verdict};
use crate::validate::{has_errors, validate_structure};

/// Engine under test. Errors are reported as disagreements.
pub type Engine<'a> = &'a dyn Fn(&CaseGraph) -> Result<AssessmentMap, String>;

pub fn reference_engine(graph: &CaseGraph) -> Result<AssessmentMap, String> {
    assess(graph).map(|(m, _)| m).map_err(|e| e.to_string())
}

/// A deliberately broken engine that ignores exploratory defeaters. Used as a
/// negative control for the harness.
pub fn faulty_engine(graph: &CaseGraph) -> Result<AssessmentMap, String> {
    let (mut map, trace) = assess(graph).map_err(|e| e.to_string())?;
    for (id, t) in &trace.0 {
        if t.overridden() {
            map.0.insert(id.clone(), t.base);
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDisagreement {
    pub node: NodeId,
    pub engine: Option<Verdict>,
    pub oracle: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Comparison {
    Agree,
    Disagree { nodes: Vec<NodeDisagreement> },
    EngineFailed { message: String },
    OracleFailed { message: String },
}

impl Comparison {
    pub fn agrees(&self) -> bool {
        matches!(self, Comparison::Agree)
    }
}

pub fn compare(graph: &CaseGraph, engine: Engine<'_>) -> Comparison {
    let oracle = match oracle_assess(graph) {
        Ok(m) => m,
        Err(e) => return Comparison::OracleFailed { message: e.to_string() },
    };
    let ours = match engine(graph) {
        Ok(m) => m,
        Err(message) => return Comparison::EngineFailed { message },
    };
    let nodes: Vec<_> = ours
        .delta(&oracle)
        .into_iter()
        .map(|c| NodeDisagreement { node: c.node, engine: c.before, oracle: c.after })
        .collect();
    if nodes.is_empty() {
        Comparison::Agree
    } else {
        Comparison::Disagree { nodes }
    }
}

/// Removes an element and everything that only made sense with it: a block
/// with its incorporated evidence, or a defeater with its block.
fn without(graph: &CaseGraph, id: &NodeId) -> CaseGraph {
    let mut g = graph.clone();
    if let Some(block) = g.blocks.remove(id) {
        for child in &block.subchildren {
            if matches!(g.nodes.get(child), Some(Node::Evidence(_))) {
                g.nodes.remove(child);
            }
        }
    } else if g.nodes.remove(id).is_some() {
        if let Some(b) = g.block_of(id).map(|b| b.id.clone()) {
            g.blocks.remove(&b);
        }
    }
    // Defeaters aimed at removed elements go too.
    loop {
        let dangling: Vec<NodeId> = g.defeaters().filter(|d| !g.contains(&d.target)).map(|d| d.id.clone()).collect();
        if dangling.is_empty() {
            break;
        }
        for d in dangling {
            g.nodes.remove(&d);
            if let Some(b) = g.block_of(&d).map(|b| b.id.clone()) {
                g.blocks.remove(&b);
            }
        }
    }
    g.prune_disconnected();
    g
}

/// Greedily removes blocks and defeaters while the case stays well formed
/// and the engine still disagrees with the oracle.
pub fn minimize(graph: &CaseGraph, engine: Engine<'_>) -> CaseGraph {
    let mut current = graph.clone();
    loop {
        let candidates: Vec<NodeId> =
            current.blocks.keys().cloned().chain(current.defeaters().map(|d| d.id.clone())).collect();
        let smaller = candidates.iter().find_map(|id| {
            let g = without(&current, id);
            let valid = !has_errors(&validate_structure(&g));
            (valid && g.contains(&g.top) && !compare(&g, engine).agrees()).then_some(g)
        });
        match smaller {
            Some(g) => current = g,
            None => return current,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub seed: u64,
    pub comparison: Comparison,
    pub original_nodes: usize,
    #[serde(skip)]
    pub minimized: Option<CaseGraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub cases: usize,
    pub agreed: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl DiffReport {
    pub fn all_agree(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Seed of the `i`-th case in a run started from `seed`.
pub fn case_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random()).collect()
}

/// Compares `count` random cases; disagreeing ones are minimized.
pub fn run_random(count: usize, seed: u64, cfg: &GenConfig, engine: Engine<'_>) -> DiffReport {
    let mut report = DiffReport { cases: count, agreed: 0, counterexamples: Vec::new() };
    for case_seed in case_seeds(seed, count) {
        let g = random_case(case_seed, cfg);
        let comparison = compare(&g, engine);
        if comparison.agrees() {
            report.agreed += 1;
        } else {
            report.counterexamples.push(Counterexample {
                seed: case_seed,
                comparison,
                original_nodes: g.nodes.len(),
                minimized: Some(minimize(&g, engine)),
            });
        }
    }
    report
}
