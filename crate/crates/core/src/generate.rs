//! Seeded random generation of well-formed cases.
//!
//! Cases are grown top-down. A node is marked complete only after its
//! subcase and the defeaters attached to it are built, and cross-links only
//! point at complete nodes, so the result is always acyclic.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    ArgumentBlock, BlockKind, CaseGraph, ClaimNode, ConfirmationAnnotation, ConfirmationLevel, DecompositionMode,
    DefeaterKind, DefeaterNode, DefeaterStatus, EvidenceNode, ExternalSubcaseRef, Node, NodeId, Thresholds,
};
use crate::propagate::Verdict;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub max_depth: usize,
    pub max_nodes: usize,
    pub max_defeater_nesting: usize,
    /// Chance that a completed claim receives an exploratory defeater.
    pub defeater_rate: f64,
    /// Chance that a completed claim receives an exact defeater.
    pub exact_rate: f64,
    /// Chance that a block input reuses an already completed claim.
    pub cross_link_rate: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 8,
            max_nodes: 60,
            max_defeater_nesting: 3,
            defeater_rate: 0.2,
            exact_rate: 0.1,
            cross_link_rate: 0.12,
        }
    }
}

/// Likelihood pairs spanning the three confirmation levels under the
/// default thresholds.
pub const LIKELIHOODS: [(f64, f64); 6] =
    [(0.99, 0.0099), (0.9, 0.01), (0.9, 0.1), (0.5, 0.5), (0.01, 0.5), (0.3, 0.0)];

const WORDS: [&str; 16] = [
    "valve", "sensor", "pump", "controller", "timing", "power", "firmware", "alarm", "cooling", "brake", "wiring",
    "switch", "bulb", "log", "hazard", "monitor",
];
const PREDICATES: [&str; 8] =
    ["is OK", "meets its requirement", "fails safe", "is adequate", "was verified", "is within limits", "works", "is tested"];

struct Generator {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    graph: CaseGraph,
    counter: usize,
    completed: Vec<NodeId>,
}

impl Generator {
    fn fresh(&mut self, prefix: &str) -> NodeId {
        self.counter += 1;
        // Occasionally use punctuation so that id encoding is exercised.
        let id = match self.rng.random_range(0..10) {
            0 => format!("{prefix}.{}", self.counter),
            1 => format!("{prefix}-z{}", self.counter),
            _ => format!("{prefix}{}", self.counter),
        };
        NodeId::new(id).expect("generated id is valid")
    }

    fn text(&mut self) -> String {
        let word = WORDS.choose(&mut self.rng).expect("non-empty");
        let pred = PREDICATES.choose(&mut self.rng).expect("non-empty");
        match self.rng.random_range(0..12) {
            0 => format!("The {word} {pred}\nunder load"),
            1 => format!("Größe of {word} {pred}"),
            2 => format!("{} {word}s {pred}", self.counter),
            _ => format!("The {word} {pred}"),
        }
    }

    /// Growth stops early enough that most attempts stay under the hard cap.
    fn budget_left(&self) -> usize {
        (self.cfg.max_nodes * 3 / 4).saturating_sub(self.graph.nodes.len())
    }

    fn add_evidence(&mut self, parent: &NodeId) -> NodeId {
        let e = self.fresh("E");
        let present = self.rng.random_bool(0.8);
        let description = format!("Report on {}", WORDS.choose(&mut self.rng).expect("non-empty"));
        self.graph.add_node(Node::Evidence(EvidenceNode { id: e.clone(), description, present, artifact_ref: None }));
        let b = self.fresh("B");
        self.graph
            .add_block(ArgumentBlock::new(b, BlockKind::EvidenceIncorporation, parent.clone(), vec![e.clone()]).with_justification("test result"));
        e
    }

    /// A claim supported directly by evidence.
    fn measured_claim(&mut self, nesting: usize) -> NodeId {
        let id = self.fresh("M");
        let text = self.text();
        self.graph.add_node(Node::Claim(ClaimNode::new(id.clone(), text)));
        self.add_evidence(&id);
        self.complete(&id, nesting);
        id
    }

    fn leaf(&mut self, nesting: usize) -> NodeId {
        let roll = self.rng.random_range(0..100);
        if roll < 10 {
            let id = self.fresh("X");
            let imported_assessment = [None, Some(Verdict::True), Some(Verdict::False), Some(Verdict::Unsupported)]
                .choose(&mut self.rng)
                .copied()
                .expect("non-empty");
            let imported_confidence =
                (imported_assessment == Some(Verdict::True) && self.rng.random_bool(0.7)).then(|| self.rng.random_range(0.5..1.0));
            self.graph.add_node(Node::External(ExternalSubcaseRef {
                id: id.clone(),
                case_ref: format!("cases/{}.json", WORDS.choose(&mut self.rng).expect("non-empty")),
                imported_assessment,
                imported_confidence,
            }));
            self.complete(&id, nesting);
            return id;
        }
        if roll < 55 {
            return self.measured_claim(nesting);
        }
        let id = self.fresh("C");
        let text = self.text();
        let node = if roll < 85 {
            ClaimNode::assumption(id.clone(), text, "accepted by the review board")
        } else {
            ClaimNode::new(id.clone(), text)
        };
        self.graph.add_node(Node::Claim(node));
        self.complete(&id, nesting);
        id
    }

    /// A block input: a cross-link to a completed node or a fresh subcase.
    fn input(&mut self, depth: usize, nesting: usize, taken: &[NodeId]) -> NodeId {
        if !self.completed.is_empty() && self.rng.random_bool(self.cfg.cross_link_rate) {
            let pick = self.completed.choose(&mut self.rng).expect("non-empty").clone();
            if !taken.contains(&pick) {
                return pick;
            }
        }
        self.claim(depth, nesting)
    }

    fn claim(&mut self, depth: usize, nesting: usize) -> NodeId {
        if depth >= self.cfg.max_depth || self.budget_left() < 6 || self.rng.random_bool(0.3) {
            return self.leaf(nesting);
        }
        let id = self.fresh("C");
        let text = self.text();
        self.graph.add_node(Node::Claim(ClaimNode::new(id.clone(), text)));
        self.support(&id, depth, nesting);
        self.complete(&id, nesting);
        id
    }

    /// Builds the block supporting `parent` and its inputs.
    fn support(&mut self, parent: &NodeId, depth: usize, nesting: usize) {
        let kind = *[BlockKind::Concretion, BlockKind::Substitution, BlockKind::Decomposition, BlockKind::Calculation]
            .choose(&mut self.rng)
            .expect("non-empty");
        let block_id = self.fresh("B");
        let mut confirmation = None;
        let mut mode = None;
        let mut subs = Vec::new();
        match kind {
            BlockKind::Substitution if self.rng.random_bool(0.5) => {
                subs.push(self.measured_claim(nesting));
                confirmation = Some(if self.rng.random_bool(0.6) {
                    let (p1, p0) = *LIKELIHOODS.choose(&mut self.rng).expect("non-empty");
                    let prior = self.rng.random_bool(0.5).then(|| self.rng.random_range(0.1..0.9));
                    ConfirmationAnnotation::numeric(p1, p0, prior)
                } else {
                    let level = *[ConfirmationLevel::StronglyPositive, ConfirmationLevel::Neutral, ConfirmationLevel::StronglyNegative]
                        .choose(&mut self.rng)
                        .expect("non-empty");
                    ConfirmationAnnotation::qualitative(level)
                });
            }
            BlockKind::Decomposition => {
                let disjunctive = self.rng.random_bool(0.5);
                mode = Some(if disjunctive { DecompositionMode::Disjunctive } else { DecompositionMode::Conjunctive });
                let n = if disjunctive { self.rng.random_range(2..=3) } else { self.rng.random_range(1..=3) };
                for _ in 0..n {
                    let s = self.input(depth + 1, nesting, &subs);
                    subs.push(s);
                }
            }
            BlockKind::Calculation => {
                for _ in 0..self.rng.random_range(1..=2) {
                    let s = self.input(depth + 1, nesting, &subs);
                    subs.push(s);
                }
            }
            _ => subs.push(self.input(depth + 1, nesting, &[])),
        }
        let mut sides = Vec::new();
        if self.rng.random_bool(0.3) {
            let s = self.input(depth + 1, nesting, &subs);
            sides.push(s);
        }
        let mut block = ArgumentBlock::new(block_id, kind, parent.clone(), subs)
            .with_sideclaims(sides)
            .with_justification(format!("{} step", kind.name()));
        if let Some(m) = mode {
            block = block.with_mode(m);
        }
        if let Some(c) = confirmation {
            block = block.with_confirmation(c);
        }
        self.graph.add_block(block);
    }

    /// Attaches defeaters to a finished node, then marks it complete.
    fn complete(&mut self, id: &NodeId, nesting: usize) {
        let is_claim_like = matches!(self.graph.nodes.get(id), Some(Node::Claim(_) | Node::Defeater(_)));
        if nesting < self.cfg.max_defeater_nesting && self.budget_left() > 3 {
            if self.rng.random_bool(self.cfg.defeater_rate) {
                let target = self.defeat_point(id);
                self.defeater(target, DefeaterKind::Exploratory, nesting);
            }
            if is_claim_like && self.rng.random_bool(self.cfg.exact_rate) {
                self.defeater(id.clone(), DefeaterKind::Exact, nesting);
            }
        }
        if matches!(self.graph.nodes.get(id), Some(Node::Claim(_) | Node::External(_))) {
            self.completed.push(id.clone());
        }
    }

    /// The node itself, its block, or the evidence under it.
    fn defeat_point(&mut self, id: &NodeId) -> NodeId {
        let block = self.graph.block_of(id).cloned();
        match (block, self.rng.random_range(0..4)) {
            (Some(b), 0) => b.id,
            (Some(b), 1) if b.kind == BlockKind::EvidenceIncorporation => b.subchildren[0].clone(),
            _ => id.clone(),
        }
    }

    fn defeater(&mut self, target: NodeId, kind: DefeaterKind, nesting: usize) {
        let id = self.fresh("D");
        let status = match self.rng.random_range(0..10) {
            0 | 1 => DefeaterStatus::Addressed,
            2 => DefeaterStatus::ResidualRisk,
            _ => DefeaterStatus::Active,
        };
        let text = format!("Doubt: {}", self.text());
        let residual_justification = (status == DefeaterStatus::ResidualRisk).then(|| "accepted as tolerable".to_string());
        self.graph.add_node(Node::Defeater(DefeaterNode { id: id.clone(), text, target, kind, status, residual_justification }));
        if status != DefeaterStatus::ResidualRisk && self.budget_left() >= 6 && self.rng.random_bool(0.75) {
            self.support(&id, 0, nesting + 1);
        }
        self.complete(&id, nesting + 1);
    }
}

/// A well-formed random case with at most `cfg.max_nodes` nodes, determined
/// entirely by `seed`.
pub fn random_case(seed: u64, cfg: &GenConfig) -> CaseGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let attempt = grow(ChaCha8Rng::from_rng(&mut rng), seed, cfg);
        if attempt.nodes.len() <= cfg.max_nodes {
            return attempt;
        }
    }
}

fn grow(rng: ChaCha8Rng, seed: u64, cfg: &GenConfig) -> CaseGraph {
    let mut gen = Generator {
        rng,
        cfg: *cfg,
        graph: CaseGraph::new(NodeId::new("G0").expect("valid")),
        counter: 0,
        completed: Vec::new(),
    };
    gen.graph.metadata.name = format!("random-{seed}");
    gen.graph.metadata.version = "1".into();
    if gen.rng.random_bool(0.1) {
        gen.graph.metadata.thresholds = Some(Thresholds::new(0.5, -0.5).expect("valid"));
    }
    let top = gen.graph.top.clone();
    let text = gen.text();
    gen.graph.add_node(Node::Claim(ClaimNode::new(top.clone(), text)));
    gen.support(&top, 0, 0);
    gen.complete(&top, 0);
    gen.graph
}

pub fn random_case_default(seed: u64) -> CaseGraph {
    random_case(seed, &GenConfig::default())
}
