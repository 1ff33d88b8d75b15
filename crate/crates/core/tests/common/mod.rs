//! Independent checks shared by the integration tests and the acceptance
//! runner. Expected values are computed here from first principles, never by
//! calling the propagation rules under test.
#![allow(dead_code)]

use std::collections::BTreeSet;

use caseval_core::asp::export_program;
use caseval_core::confidence::{compute_confidence, good_measure, posterior_confidence, ConfidenceConfig};
use caseval_core::generate::{random_case, GenConfig};
use caseval_core::model::*;
use caseval_core::oracle::{oracle_assess, parse_program};
use caseval_core::propagate::{assess, commentary_elements, AssessmentMap, Verdict};
use caseval_core::validate::{has_errors, validate_structure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use Verdict::{False as F, True as T, Unsupported as U};

pub const V3: [Verdict; 3] = [T, F, U];

// ----- hand-written truth tables -----

fn all(xs: &[Verdict], v: Verdict) -> bool {
    xs.iter().all(|x| *x == v)
}

pub fn expect_general(subs: &[Verdict], sides: &[Verdict]) -> Verdict {
    if all(subs, T) && all(sides, T) {
        T
    } else {
        U
    }
}

pub fn expect_disjunctive(subs: &[Verdict], sides: &[Verdict]) -> Verdict {
    match (all(sides, T), subs.contains(&T), !subs.is_empty() && all(subs, F)) {
        (true, true, _) => T,
        (true, false, true) => F,
        _ => U,
    }
}

pub fn expect_evidential(level: ConfirmationLevel, measured: Verdict, sides: &[Verdict]) -> Verdict {
    if measured != T || !all(sides, T) {
        return U;
    }
    match level {
        ConfirmationLevel::StronglyPositive => T,
        ConfirmationLevel::Neutral => U,
        ConfirmationLevel::StronglyNegative => F,
    }
}

pub fn expect_exact(defeater: Verdict) -> Verdict {
    match defeater {
        T => F,
        F => T,
        U => U,
    }
}

pub fn expect_with_defeaters(base: Verdict, defeaters: &[Verdict]) -> Verdict {
    if all(defeaters, F) {
        base
    } else {
        U
    }
}

// ----- case builders with forced verdicts -----

pub struct Builder {
    pub g: CaseGraph,
    n: usize,
}

impl Builder {
    pub fn new(top: &str, text: &str) -> Self {
        let mut g = CaseGraph::new(nid(top));
        g.add_node(Node::Claim(ClaimNode::new(nid(top), text)));
        Builder { g, n: 0 }
    }

    fn fresh(&mut self, p: &str) -> NodeId {
        self.n += 1;
        nid(&format!("{p}{}", self.n))
    }

    pub fn assumption(&mut self) -> NodeId {
        let id = self.fresh("a");
        self.g.add_node(Node::Claim(ClaimNode::assumption(id.clone(), format!("Assumed {id}"), "given")));
        id
    }

    /// A claim whose verdict is forced to `v`.
    pub fn claim_with(&mut self, v: Verdict) -> NodeId {
        match v {
            T => self.assumption(),
            U => {
                let id = self.fresh("u");
                self.g.add_node(Node::Claim(ClaimNode::new(id.clone(), format!("Open {id}"))));
                id
            }
            F => {
                let id = self.fresh("f");
                self.g.add_node(Node::Claim(ClaimNode::new(id.clone(), format!("Refuted {id}"))));
                let x = self.fresh("x");
                self.g.add_node(Node::Defeater(DefeaterNode::exact(x.clone(), format!("Not {id}"), id.clone())));
                self.support_true(&x);
                id
            }
        }
    }

    /// Gives `parent` a concretion over a fresh assumption.
    pub fn support_true(&mut self, parent: &NodeId) {
        let a = self.assumption();
        let b = self.fresh("b");
        self.g.add_block(ArgumentBlock::new(b, BlockKind::Concretion, parent.clone(), vec![a]));
    }

    /// An exploratory defeater on `target` whose own verdict is forced to `v`.
    pub fn defeater_with(&mut self, target: &NodeId, v: Verdict) -> NodeId {
        let d = self.fresh("d");
        self.g.add_node(Node::Defeater(DefeaterNode::new(d.clone(), format!("Doubt {d}"), target.clone())));
        match v {
            T => self.support_true(&d),
            U => {}
            F => {
                let x = self.fresh("x");
                self.g.add_node(Node::Defeater(DefeaterNode::exact(x.clone(), format!("Not {d}"), d.clone())));
                self.support_true(&x);
            }
        }
        d
    }

    pub fn block(&mut self, block: ArgumentBlock) {
        self.g.add_block(block);
    }

    pub fn block_id(&mut self) -> NodeId {
        self.fresh("b")
    }
}

/// Assesses with both engines and returns the top verdict, failing on any
/// disagreement or structural error.
fn both(g: &CaseGraph) -> Result<AssessmentMap, String> {
    let diags = validate_structure(g);
    if has_errors(&diags) {
        return Err(format!("invalid test case: {diags:?}"));
    }
    let (map, _) = assess(g).map_err(|e| e.to_string())?;
    let oracle = oracle_assess(g).map_err(|e| e.to_string())?;
    if map != oracle {
        return Err(format!("engine and oracle disagree: {:?}", map.delta(&oracle)));
    }
    Ok(map)
}

fn check(label: String, g: &CaseGraph, expected: Verdict) -> Result<(), String> {
    let map = both(g).map_err(|e| format!("{label}: {e}"))?;
    let got = map.get(&g.top);
    if got != Some(expected) {
        return Err(format!("{label}: expected {expected}, got {got:?}"));
    }
    Ok(())
}

fn product(n: usize) -> Vec<Vec<Verdict>> {
    (0..n).fold(vec![vec![]], |acc, _| {
        acc.into_iter().flat_map(|p| V3.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect()
    })
}

/// Exhaustive rule-table enumeration. Returns the number of combinations.
pub fn rule_table() -> Result<usize, String> {
    let mut combos = 0;
    let parent = nid("p");

    // General blocks and disjunctive decomposition: 2 subclaims, 1 sideclaim, 1 defeater.
    let shapes: Vec<(&str, BlockKind, Option<DecompositionMode>)> = vec![
        ("concretion", BlockKind::Concretion, None),
        ("substitution", BlockKind::Substitution, None),
        ("conjunctive", BlockKind::Decomposition, Some(DecompositionMode::Conjunctive)),
        ("calculation", BlockKind::Calculation, None),
        ("disjunctive", BlockKind::Decomposition, Some(DecompositionMode::Disjunctive)),
    ];
    for (name, kind, mode) in shapes {
        for combo in product(4) {
            let (subs, side, def) = (&combo[..2], combo[2], combo[3]);
            let mut b = Builder::new("p", "Parent");
            let sub_ids: Vec<NodeId> = subs.iter().map(|v| b.claim_with(*v)).collect();
            let side_id = b.claim_with(side);
            let id = b.block_id();
            let mut block = ArgumentBlock::new(id, kind, parent.clone(), sub_ids).with_sideclaims(vec![side_id]);
            if let Some(m) = mode {
                block = block.with_mode(m);
            }
            b.block(block);
            b.defeater_with(&parent, def);
            let base = if mode == Some(DecompositionMode::Disjunctive) {
                expect_disjunctive(subs, &[side])
            } else {
                expect_general(subs, &[side])
            };
            check(format!("{name} {combo:?}"), &b.g, expect_with_defeaters(base, &[def]))?;
            combos += 1;
        }
    }

    // Evidence incorporation: presence x defeater.
    for present in [true, false] {
        for def in V3 {
            let mut b = Builder::new("p", "Parent");
            b.g.add_node(Node::Evidence(EvidenceNode { id: nid("e"), description: "Report".into(), present, artifact_ref: None }));
            let id = b.block_id();
            b.block(ArgumentBlock::new(id, BlockKind::EvidenceIncorporation, parent.clone(), vec![nid("e")]));
            b.defeater_with(&parent, def);
            let base = if present { T } else { U };
            check(format!("evidence present={present} defeater={def}"), &b.g, expect_with_defeaters(base, &[def]))?;
            combos += 1;
        }
    }

    // Evidential substitution: level x measured x sideclaim x defeater.
    let levels = [ConfirmationLevel::StronglyPositive, ConfirmationLevel::Neutral, ConfirmationLevel::StronglyNegative];
    for level in levels {
        for combo in product(3) {
            let (measured, side, def) = (combo[0], combo[1], combo[2]);
            let mut b = Builder::new("p", "Useful claim");
            // The measured claim sits on evidence; an exact defeater or
            // absent evidence forces the other verdicts.
            b.g.add_node(Node::Claim(ClaimNode::new(nid("m"), "Measured claim")));
            b.g.add_node(Node::Evidence(EvidenceNode {
                id: nid("e"),
                description: "Report".into(),
                present: measured != U,
                artifact_ref: None,
            }));
            let id = b.block_id();
            b.block(ArgumentBlock::new(id, BlockKind::EvidenceIncorporation, nid("m"), vec![nid("e")]));
            if measured == F {
                b.g.add_node(Node::Defeater(DefeaterNode::exact(nid("xm"), "Not measured", nid("m"))));
                b.support_true(&nid("xm"));
            }
            let side_id = b.claim_with(side);
            let id = b.block_id();
            b.block(
                ArgumentBlock::new(id, BlockKind::Substitution, parent.clone(), vec![nid("m")])
                    .with_sideclaims(vec![side_id])
                    .with_confirmation(ConfirmationAnnotation::qualitative(level)),
            );
            b.defeater_with(&parent, def);
            let base = expect_evidential(level, measured, &[side]);
            check(format!("evidential {level:?} {combo:?}"), &b.g, expect_with_defeaters(base, &[def]))?;
            combos += 1;
        }
    }

    // Exact defeater: its verdict x the target's own support x ordinary defeater.
    for combo in product(3) {
        let (exact, own, def) = (combo[0], combo[1], combo[2]);
        let mut b = Builder::new("p", "Parent");
        let own_id = b.claim_with(own);
        let id = b.block_id();
        b.block(ArgumentBlock::new(id, BlockKind::Concretion, parent.clone(), vec![own_id]));
        let x = nid("xp");
        b.g.add_node(Node::Defeater(DefeaterNode::exact(x.clone(), "Not parent", parent.clone())));
        match exact {
            T => b.support_true(&x),
            U => {}
            F => {
                b.g.add_node(Node::Defeater(DefeaterNode::exact(nid("xx"), "Not not parent", x.clone())));
                b.support_true(&nid("xx"));
            }
        }
        b.defeater_with(&parent, def);
        check(format!("exact {combo:?}"), &b.g, expect_with_defeaters(expect_exact(exact), &[def]))?;
        combos += 1;
    }

    // Leaf rules with a defeater.
    for def in V3 {
        let mut b = Builder::new("p", "Parent");
        b.g.nodes.insert(parent.clone(), Node::Claim(ClaimNode::assumption(parent.clone(), "Parent", "given")));
        b.defeater_with(&parent, def);
        check(format!("assumption defeater={def}"), &b.g, expect_with_defeaters(T, &[def]))?;

        let mut b = Builder::new("p", "Parent");
        b.defeater_with(&parent, def);
        check(format!("undeveloped defeater={def}"), &b.g, expect_with_defeaters(U, &[def]))?;

        for imported in [None, Some(T), Some(F), Some(U)] {
            let mut b = Builder::new("p", "Parent");
            b.g.add_node(Node::External(ExternalSubcaseRef {
                id: nid("ext"),
                case_ref: "other.json".into(),
                imported_assessment: imported,
                imported_confidence: None,
            }));
            let id = b.block_id();
            b.block(
                ArgumentBlock::new(id, BlockKind::Decomposition, parent.clone(), vec![nid("ext")])
                    .with_mode(DecompositionMode::Disjunctive),
            );
            b.defeater_with(&nid("ext"), def);
            let ext = expect_with_defeaters(imported.unwrap_or(U), &[def]);
            check(format!("external {imported:?} defeater={def}"), &b.g, expect_disjunctive(&[ext], &[]))?;
            combos += 1;
        }
        combos += 2;
    }

    // Doubt and residual risk, read through an exact defeater on a fresh top.
    for status in [DefeaterStatus::Active, DefeaterStatus::ResidualRisk] {
        let mut b = Builder::new("p", "Parent");
        let mut d = DefeaterNode::exact(nid("r"), "Risk", parent.clone());
        d.status = status;
        d.residual_justification = Some("tolerable".into());
        b.g.add_node(Node::Defeater(d));
        let expected = if status == DefeaterStatus::ResidualRisk { expect_exact(F) } else { expect_exact(U) };
        check(format!("leaf defeater {status:?}"), &b.g, expected)?;
        combos += 1;
    }
    Ok(combos)
}

// ----- random-graph properties -----

pub fn cfg() -> GenConfig {
    GenConfig::default()
}

/// No general block yields FALSE. Returns (graphs, general blocks with a
/// FALSE input seen).
pub fn denying_antecedent(count: u64) -> Result<(u64, usize), String> {
    let mut false_inputs = 0;
    for seed in 0..count {
        let g = random_case(seed, &cfg());
        let (map, _) = assess(&g).map_err(|e| format!("seed {seed}: {e}"))?;
        for block in g.blocks.values() {
            let general = block.kind != BlockKind::EvidenceIncorporation
                && !block.is_disjunctive()
                && block.confirmation.is_none();
            if !general || g.exact_defeater_on(&block.parent).is_some() {
                continue;
            }
            if block.inputs().any(|i| map.get(i) == Some(F)) {
                false_inputs += 1;
            }
            if map.get(&block.parent) == Some(F) {
                return Err(format!("seed {seed}: general block {} yields FALSE parent {}", block.id, block.parent));
            }
        }
    }
    Ok((count, false_inputs))
}

/// Embeds a random case under `E2 -exact-> E1 -exact-> N`, with E2 supported
/// by a one-way disjunction over the random top; N must reproduce the top's
/// verdict. Returns the verdict counts seen.
pub fn exact_involution(count: u64) -> Result<[usize; 3], String> {
    let mut seen = [0; 3];
    for seed in 0..count {
        let inner = random_case(seed.wrapping_add(1_000_000), &cfg());
        let (inner_map, _) = assess(&inner).map_err(|e| e.to_string())?;
        let inner_top = inner_map.get(&inner.top).ok_or("inner top unassessed")?;

        let mut g = inner.clone();
        g.top = nid("N_chain");
        g.add_node(Node::Claim(ClaimNode::new(nid("N_chain"), "Chained claim")))
            .add_node(Node::Defeater(DefeaterNode::exact(nid("E1_chain"), "Not the claim", nid("N_chain"))))
            .add_node(Node::Defeater(DefeaterNode::exact(nid("E2_chain"), "Not the negation", nid("E1_chain"))))
            .add_block(
                ArgumentBlock::new(nid("B_chain"), BlockKind::Decomposition, nid("E2_chain"), vec![inner.top.clone()])
                    .with_mode(DecompositionMode::Disjunctive),
            );
        let map = both(&g).map_err(|e| format!("seed {seed}: {e}"))?;
        let got = map.get(&nid("N_chain"));
        if got != Some(inner_top) {
            return Err(format!("seed {seed}: inner {inner_top}, chained {got:?}"));
        }
        seen[V3.iter().position(|v| *v == inner_top).expect("verdict")] += 1;
    }
    Ok(seen)
}

/// Graphs with one FALSE live exploratory defeater: deleting it leaves the
/// primary-case verdicts unchanged. Returns (graphs checked, injected).
pub fn refuted_defeater_equivalence(count: usize) -> Result<(usize, usize), String> {
    let mut checked = 0;
    let mut injected = 0;
    let mut seed = 0u64;
    while checked < count {
        seed += 1;
        let mut g = random_case(seed.wrapping_add(2_000_000), &cfg());
        let (map, _) = assess(&g).map_err(|e| e.to_string())?;
        let existing = g
            .defeaters()
            .find(|d| d.is_live() && !d.is_exact() && map.get(&d.id) == Some(F))
            .map(|d| d.id.clone());
        let defeater = match existing {
            Some(d) => d,
            None => {
                // Inject a refuted defeater on a random primary claim.
                let ignored = commentary_elements(&g, &map);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let targets: Vec<NodeId> =
                    g.claim_bearing().map(|n| n.id().clone()).filter(|id| !ignored.contains(id)).collect();
                let target = targets[rng.random_range(0..targets.len())].clone();
                let d = nid("D_refuted");
                g.add_node(Node::Defeater(DefeaterNode::new(d.clone(), "Refuted doubt", target)));
                if rng.random_bool(0.5) {
                    g.add_node(Node::Defeater(DefeaterNode::exact(nid("X_refuter"), "Doubt is wrong", d.clone())));
                    g.add_node(Node::Claim(ClaimNode::assumption(nid("A_refuter"), "Checked", "inspection")));
                    g.add_block(ArgumentBlock::new(nid("B_refuter"), BlockKind::Concretion, nid("X_refuter"), vec![nid("A_refuter")]));
                } else if let Some(Node::Defeater(dn)) = g.nodes.get_mut(&d) {
                    dn.status = DefeaterStatus::ResidualRisk;
                    dn.residual_justification = Some("tolerable".into());
                }
                injected += 1;
                d
            }
        };
        let with = both(&g).map_err(|e| format!("seed {seed}: {e}"))?;
        if with.get(&defeater) != Some(F) {
            return Err(format!("seed {seed}: defeater {defeater} not refuted"));
        }
        let primary_before: BTreeSet<NodeId> = {
            let ignored = commentary_elements(&g, &with);
            g.claim_bearing().map(|n| n.id().clone()).filter(|id| !ignored.contains(id)).collect()
        };

        let mut h = g.clone();
        h.nodes.remove(&defeater);
        if let Some(b) = h.block_of(&defeater).map(|b| b.id.clone()) {
            h.blocks.remove(&b);
        }
        // Defeaters aimed at anything removed go with it.
        loop {
            let dangling: Vec<NodeId> = h.defeaters().filter(|d| !h.contains(&d.target)).map(|d| d.id.clone()).collect();
            if dangling.is_empty() {
                break;
            }
            for a in dangling {
                h.nodes.remove(&a);
                if let Some(b) = h.block_of(&a).map(|b| b.id.clone()) {
                    h.blocks.remove(&b);
                }
            }
        }
        h.prune_disconnected();
        let without = both(&h).map_err(|e| format!("seed {seed} after removal: {e}"))?;
        for id in &primary_before {
            if id == &defeater || !h.nodes.contains_key(id) {
                continue;
            }
            if with.get(id) != without.get(id) {
                return Err(format!("seed {seed}: {id} was {:?}, now {:?}", with.get(id), without.get(id)));
            }
        }
        checked += 1;
    }
    Ok((checked, injected))
}

/// parse(render(export)) reproduces the exported program and atom table.
pub fn export_round_trip(g: &CaseGraph) -> Result<(), String> {
    let exported = export_program(g).map_err(|e| e.to_string())?;
    let text = exported.render();
    let (program, atoms) = parse_program(&text).map_err(|e| e.to_string())?;
    if program != exported.program {
        return Err("parsed program differs from exported program".into());
    }
    if atoms != exported.atoms {
        return Err("rebuilt atom table differs".into());
    }
    if program.render() != text {
        return Err("re-rendered text differs".into());
    }
    Ok(())
}

// ----- confidence -----

pub fn good_measure_antisymmetry(pairs: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let a: f64 = rng.random_range(1e-6..1.0);
        let b: f64 = rng.random_range(1e-6..1.0);
        let ab = good_measure(a, b).map_err(|e| e.to_string())?;
        let ba = good_measure(b, a).map_err(|e| e.to_string())?;
        worst = worst.max((ab + ba).abs());
        let direct = a.log10() - b.log10();
        worst = worst.max((ab - direct).abs());
    }
    if worst > 1e-12 {
        return Err(format!("antisymmetry off by {worst:e}"));
    }
    Ok(worst)
}

pub fn posterior_reference() -> Result<f64, String> {
    let p = posterior_confidence(0.5, 0.9, 0.1).map_err(|e| e.to_string())?;
    if (p - 0.9).abs() > 1e-9 {
        return Err(format!("posterior_confidence(0.5, 0.9, 0.1) = {p}"));
    }
    Ok(p)
}

/// Random trees of assumptions, evidence and general blocks; every computed
/// parent confidence equals one minus the clamped sum of child doubts and is
/// at most its least confident child. Returns the number of parents checked.
pub fn sum_of_doubts(trees: u64) -> Result<usize, String> {
    let mut parents = 0;
    for seed in 0..trees {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3_000_000));
        let mut g = CaseGraph::new(nid("t0"));
        g.add_node(Node::Claim(ClaimNode::new(nid("t0"), "Top")));
        let mut frontier = vec![(nid("t0"), 0usize)];
        let mut n = 0;
        while let Some((parent, depth)) = frontier.pop() {
            let kinds = [BlockKind::Concretion, BlockKind::Substitution, BlockKind::Decomposition, BlockKind::Calculation];
            let kind = kinds[rng.random_range(0..kinds.len())];
            let width = if matches!(kind, BlockKind::Concretion | BlockKind::Substitution) { 1 } else { rng.random_range(1..=3) };
            let mut subs = Vec::new();
            for _ in 0..width {
                n += 1;
                let id = nid(&format!("t{n}"));
                let roll = rng.random_range(0..10);
                if depth < 4 && roll < 4 {
                    g.add_node(Node::Claim(ClaimNode::new(id.clone(), "Inner")));
                    frontier.push((id.clone(), depth + 1));
                } else if roll < 7 {
                    g.add_node(Node::Claim(ClaimNode::assumption(id.clone(), "Leaf", "given")));
                } else {
                    g.add_node(Node::Claim(ClaimNode::new(id.clone(), "Evidenced")));
                    let e = nid(&format!("e{n}"));
                    g.add_node(Node::Evidence(EvidenceNode { id: e.clone(), description: "r".into(), present: true, artifact_ref: None }));
                    g.add_block(ArgumentBlock::new(nid(&format!("be{n}")), BlockKind::EvidenceIncorporation, id.clone(), vec![e]));
                }
                subs.push(id);
            }
            g.add_block(ArgumentBlock::new(nid(&format!("b_{parent}")), kind, parent, subs));
        }
        let (map, _) = assess(&g).map_err(|e| e.to_string())?;
        let mut config = ConfidenceConfig { assumption_default: rng.random_range(0.7..1.0), ..Default::default() };
        for node in g.claim_bearing() {
            if node.as_claim().is_some_and(|c| c.is_assumption()) && rng.random_bool(0.3) {
                config.overrides.insert(node.id().clone(), rng.random_range(0.5..1.0));
            }
        }
        let report = compute_confidence(&g, &map, &config).map_err(|e| e.to_string())?;
        for block in g.blocks.values().filter(|b| b.kind != BlockKind::EvidenceIncorporation) {
            let parent = report.value(block.parent.as_str()).ok_or(format!("tree {seed}: {} has no confidence", block.parent))?;
            let children: Vec<f64> = block
                .subchildren
                .iter()
                .map(|c| report.value(c.as_str()).ok_or(format!("tree {seed}: {c} has no confidence")))
                .collect::<Result<_, _>>()?;
            let doubt_sum: f64 = children.iter().map(|c| 1.0 - c).sum();
            let expected = 1.0 - doubt_sum.min(1.0);
            if (parent - expected).abs() > 1e-12 {
                return Err(format!("tree {seed}: {} = {parent}, expected {expected}", block.parent));
            }
            let least = children.iter().copied().fold(f64::INFINITY, f64::min);
            if parent > least + 1e-12 {
                return Err(format!("tree {seed}: {} = {parent} exceeds child {least}", block.parent));
            }
            parents += 1;
        }
    }
    Ok(parents)
}

pub fn has_no_errors(g: &CaseGraph) -> bool {
    !has_errors(&validate_structure(g))
}
