//! Three-valued assessment of claims and defeaters.
//!
//! Verdicts are computed in a single pass over the dependency order: every
//! block input, and every defeater aimed at a node, is assessed before the
//! node itself. At each claim-bearing node the base verdict comes from an
//! exact defeater when one is live, otherwise from the leaf rules or the
//! node's supporting block. Live exploratory defeaters then override the
//! base verdict to `Unsupported` unless all of them are `False`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confidence::{good_measure, ConfirmationError};
use crate::model::{
    ArgumentBlock, BlockKind, CaseGraph, ConfirmationAnnotation, ConfirmationLevel, ConfirmationMode,
    DefeaterStatus, Node, NodeId, StructureError, Thresholds,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    True,
    False,
    Unsupported,
}

impl Verdict {
    pub const ALL: [Verdict; 3] = [Verdict::True, Verdict::False, Verdict::Unsupported];

    /// Negation with `Unsupported` fixed.
    pub fn negate(self) -> Verdict {
        match self {
            Verdict::True => Verdict::False,
            Verdict::False => Verdict::True,
            Verdict::Unsupported => Verdict::Unsupported,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::True => "TRUE",
            Verdict::False => "FALSE",
            Verdict::Unsupported => "UNSUPPORTED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "true" => Ok(Verdict::True),
            "false" => Ok(Verdict::False),
            "unsupported" => Ok(Verdict::Unsupported),
            other => Err(format!("unknown verdict `{other}`")),
        }
    }
}

/// Verdict per claim-bearing node.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssessmentMap(pub BTreeMap<NodeId, Verdict>);

impl AssessmentMap {
    pub fn get(&self, id: &NodeId) -> Option<Verdict> {
        self.0.get(id).copied()
    }

    pub fn verdict(&self, id: &str) -> Option<Verdict> {
        self.0.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &Verdict)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entries whose verdict differs between `self` and `other`, keyed by node.
    pub fn delta(&self, other: &AssessmentMap) -> Vec<VerdictChange> {
        let keys: BTreeSet<&NodeId> = self.0.keys().chain(other.0.keys()).collect();
        keys.into_iter()
            .filter_map(|k| {
                let before = self.get(k);
                let after = other.get(k);
                (before != after).then(|| VerdictChange { node: k.clone(), before, after })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictChange {
    pub node: NodeId,
    pub before: Option<Verdict>,
    pub after: Option<Verdict>,
}

/// The rule that produced a node's base verdict, with the inputs it saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    Assumption,
    UnsupportedClaim,
    Doubt,
    ResidualRisk,
    ExternalSubcase { imported: Option<Verdict> },
    EvidenceIncorporation { evidence: NodeId, present: bool },
    GeneralBlock { kind: BlockKind, inputs: Vec<(NodeId, Verdict)> },
    DisjunctiveDecomposition { subclaims: Vec<(NodeId, Verdict)>, sideclaims: Vec<(NodeId, Verdict)> },
    EvidentialSubstitution { level: ConfirmationLevel, measured: (NodeId, Verdict), sideclaims: Vec<(NodeId, Verdict)> },
    ExactDefeater { defeater: NodeId, verdict: Verdict },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Assumption => "assumption",
            Rule::UnsupportedClaim => "unsupported_claim",
            Rule::Doubt => "doubt",
            Rule::ResidualRisk => "residual_risk",
            Rule::ExternalSubcase { .. } => "external_subcase",
            Rule::EvidenceIncorporation { .. } => "evidence_incorporation",
            Rule::GeneralBlock { .. } => "general_block",
            Rule::DisjunctiveDecomposition { .. } => "disjunctive_decomposition",
            Rule::EvidentialSubstitution { .. } => "evidential_substitution",
            Rule::ExactDefeater { .. } => "exact_defeater",
        }
    }

    /// The base verdict this rule yields for the recorded inputs.
    pub fn apply(&self) -> Verdict {
        use Verdict::*;
        let all_true = |xs: &[(NodeId, Verdict)]| xs.iter().all(|(_, v)| *v == True);
        match self {
            Rule::Assumption => True,
            Rule::UnsupportedClaim | Rule::Doubt => Unsupported,
            Rule::ResidualRisk => False,
            Rule::ExternalSubcase { imported } => imported.unwrap_or(Unsupported),
            Rule::EvidenceIncorporation { present, .. } => {
                if *present {
                    True
                } else {
                    Unsupported
                }
            }
            Rule::GeneralBlock { inputs, .. } => {
                if all_true(inputs) {
                    True
                } else {
                    Unsupported
                }
            }
            Rule::DisjunctiveDecomposition { subclaims, sideclaims } => {
                if !all_true(sideclaims) {
                    Unsupported
                } else if subclaims.iter().any(|(_, v)| *v == True) {
                    True
                } else if !subclaims.is_empty() && subclaims.iter().all(|(_, v)| *v == False) {
                    // Every disjunct refuted: the eliminative reading.
                    False
                } else {
                    Unsupported
                }
            }
            Rule::EvidentialSubstitution { level, measured, sideclaims } => {
                if measured.1 != True || !all_true(sideclaims) {
                    return Unsupported;
                }
                match level {
                    ConfirmationLevel::StronglyPositive => True,
                    ConfirmationLevel::Neutral => Unsupported,
                    ConfirmationLevel::StronglyNegative => False,
                }
            }
            Rule::ExactDefeater { verdict, .. } => verdict.negate(),
        }
    }

    /// Node ids whose verdicts this rule consumed.
    pub fn inputs(&self) -> Vec<(NodeId, Verdict)> {
        match self {
            Rule::GeneralBlock { inputs, .. } => inputs.clone(),
            Rule::DisjunctiveDecomposition { subclaims, sideclaims } => {
                subclaims.iter().chain(sideclaims).cloned().collect()
            }
            Rule::EvidentialSubstitution { measured, sideclaims, .. } => {
                std::iter::once(measured.clone()).chain(sideclaims.iter().cloned()).collect()
            }
            Rule::ExactDefeater { defeater, verdict } => vec![(defeater.clone(), *verdict)],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub rule: Rule,
    pub base: Verdict,
    /// Live exploratory defeaters affecting this node, with their verdicts.
    pub defeaters: Vec<(NodeId, Verdict)>,
    pub verdict: Verdict,
}

impl NodeTrace {
    pub fn overridden(&self) -> bool {
        self.defeaters.iter().any(|(_, v)| *v != Verdict::False)
    }
}

/// Combines a base verdict with the verdicts of ordinary defeaters.
pub fn apply_ordinary_defeaters(base: Verdict, defeaters: &[(NodeId, Verdict)]) -> Verdict {
    if defeaters.iter().all(|(_, v)| *v == Verdict::False) {
        base
    } else {
        Verdict::Unsupported
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExplanationTrace(pub BTreeMap<NodeId, NodeTrace>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("{node}: rule {rule} yields {computed}, trace records {recorded}")]
    Mismatch { node: NodeId, rule: &'static str, computed: Verdict, recorded: Verdict },
    #[error("{node}: input {input} recorded as {recorded}, but assessed {actual:?}")]
    StaleInput { node: NodeId, input: NodeId, recorded: Verdict, actual: Option<Verdict> },
}

impl ExplanationTrace {
    pub fn get(&self, id: &NodeId) -> Option<&NodeTrace> {
        self.0.get(id)
    }

    /// Recomputes every verdict from the recorded rules and inputs alone and
    /// checks that recorded inputs agree with the recomputed verdicts.
    pub fn replay(&self) -> Result<AssessmentMap, ReplayError> {
        let mut map = BTreeMap::new();
        for (id, t) in &self.0 {
            let base = t.rule.apply();
            let verdict = apply_ordinary_defeaters(base, &t.defeaters);
            if base != t.base || verdict != t.verdict {
                return Err(ReplayError::Mismatch {
                    node: id.clone(),
                    rule: t.rule.name(),
                    computed: verdict,
                    recorded: t.verdict,
                });
            }
            map.insert(id.clone(), verdict);
        }
        for (id, t) in &self.0 {
            for (input, recorded) in t.rule.inputs().iter().chain(&t.defeaters) {
                let actual = map.get(input).copied();
                if actual != Some(*recorded) {
                    return Err(ReplayError::StaleInput {
                        node: id.clone(),
                        input: input.clone(),
                        recorded: *recorded,
                        actual,
                    });
                }
            }
        }
        Ok(AssessmentMap(map))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssessError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("block `{block}`: {source}")]
    Confirmation { block: NodeId, source: ConfirmationError },
    #[error("malformed case: {0}")]
    Malformed(String),
}

/// Options for [`assess_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AssessConfig {
    /// Overrides the case's own thresholds when set.
    pub thresholds: Option<Thresholds>,
}

impl AssessConfig {
    pub fn thresholds_for(&self, graph: &CaseGraph) -> Thresholds {
        self.thresholds.or(graph.metadata.thresholds).unwrap_or_default()
    }
}

/// Maps a confirmation annotation to a qualitative level. Numeric annotations
/// use Good's measure (log10 likelihood ratio) against the thresholds.
pub fn classify_confirmation(
    annotation: &ConfirmationAnnotation,
    thresholds: Thresholds,
) -> Result<ConfirmationLevel, ConfirmationError> {
    match annotation.mode {
        ConfirmationMode::Qualitative => annotation.qualitative_level.ok_or(ConfirmationError::MissingField("qualitative_level")),
        ConfirmationMode::Numeric => {
            let p_c = annotation.p_e_given_c.ok_or(ConfirmationError::MissingField("p_e_given_c"))?;
            let p_not_c = annotation.p_e_given_not_c.ok_or(ConfirmationError::MissingField("p_e_given_not_c"))?;
            let m = good_measure(p_c, p_not_c)?;
            Ok(if m >= thresholds.positive {
                ConfirmationLevel::StronglyPositive
            } else if m <= thresholds.negative {
                ConfirmationLevel::StronglyNegative
            } else {
                ConfirmationLevel::Neutral
            })
        }
    }
}

pub fn assess(graph: &CaseGraph) -> Result<(AssessmentMap, ExplanationTrace), AssessError> {
    assess_with(graph, &AssessConfig::default())
}

pub fn assess_with(graph: &CaseGraph, config: &AssessConfig) -> Result<(AssessmentMap, ExplanationTrace), AssessError> {
    let thresholds = config.thresholds_for(graph);
    let order = graph.dependency_order()?;
    let blocks = graph.block_index();
    let ordinary = graph.ordinary_defeaters_by_affected();

    let mut verdicts: BTreeMap<NodeId, Verdict> = BTreeMap::new();
    let mut trace = BTreeMap::new();

    for id in order {
        let Some(node) = graph.nodes.get(&id) else { continue };
        if !node.is_claim_bearing() {
            continue;
        }
        let lookup = |x: &NodeId| -> Result<(NodeId, Verdict), AssessError> {
            verdicts
                .get(x)
                .map(|v| (x.clone(), *v))
                .ok_or_else(|| AssessError::Malformed(format!("`{x}` used by `{id}` has no verdict")))
        };

        let rule = if let Some(exact) = graph.exact_defeater_on(&id) {
            let (_, v) = lookup(&exact.id)?;
            Rule::ExactDefeater { defeater: exact.id.clone(), verdict: v }
        } else {
            match (node, blocks.get(&id)) {
                (Node::External(x), _) => Rule::ExternalSubcase { imported: x.imported_assessment },
                (Node::Claim(c), _) if c.is_assumption() => Rule::Assumption,
                (Node::Defeater(d), None) if d.status == DefeaterStatus::ResidualRisk => Rule::ResidualRisk,
                (Node::Defeater(_), None) => Rule::Doubt,
                (Node::Claim(_), None) => Rule::UnsupportedClaim,
                (_, Some(block)) => block_rule(graph, block, thresholds, &lookup)?,
                (Node::Evidence(_), None) => unreachable!("evidence is not claim-bearing"),
            }
        };

        let base = rule.apply();
        let defeaters = ordinary
            .get(&id)
            .map(|ds| ds.iter().map(|d| lookup(&d.id)).collect::<Result<Vec<_>, _>>())
            .transpose()?
            .unwrap_or_default();
        let verdict = apply_ordinary_defeaters(base, &defeaters);
        verdicts.insert(id.clone(), verdict);
        trace.insert(id, NodeTrace { rule, base, defeaters, verdict });
    }

    Ok((AssessmentMap(verdicts), ExplanationTrace(trace)))
}

/// Verdict of an already assessed input, paired with its id.
type Lookup<'a> = &'a dyn Fn(&NodeId) -> Result<(NodeId, Verdict), AssessError>;

fn block_rule(
    graph: &CaseGraph,
    block: &ArgumentBlock,
    thresholds: Thresholds,
    lookup: Lookup<'_>,
) -> Result<Rule, AssessError> {
    let collect = |ids: &[NodeId]| ids.iter().map(lookup).collect::<Result<Vec<_>, _>>();
    Ok(match block.kind {
        BlockKind::EvidenceIncorporation => {
            let evidence = block
                .subchildren
                .first()
                .and_then(|e| graph.nodes.get(e))
                .and_then(Node::as_evidence)
                .ok_or_else(|| AssessError::Malformed(format!("block `{}` incorporates no evidence", block.id)))?;
            Rule::EvidenceIncorporation { evidence: evidence.id.clone(), present: evidence.present }
        }
        _ if block.is_disjunctive() => Rule::DisjunctiveDecomposition {
            subclaims: collect(&block.subchildren)?,
            sideclaims: collect(&block.sideclaims)?,
        },
        BlockKind::Substitution if block.confirmation.is_some() => {
            let annotation = block.confirmation.as_ref().expect("checked above");
            let level = classify_confirmation(annotation, thresholds)
                .map_err(|source| AssessError::Confirmation { block: block.id.clone(), source })?;
            let [measured] = block.subchildren.as_slice() else {
                return Err(AssessError::Malformed(format!("confirmed block `{}` needs one subclaim", block.id)));
            };
            Rule::EvidentialSubstitution { level, measured: lookup(measured)?, sideclaims: collect(&block.sideclaims)? }
        }
        kind => Rule::GeneralBlock {
            kind,
            inputs: block.inputs().map(lookup).collect::<Result<Vec<_>, _>>()?,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatusKind {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum OpenReason {
    /// A live exploratory defeater that is sustained or not yet refuted.
    ActiveDefeater { node: NodeId, verdict: Verdict },
    /// A claim left without a subcase, or an external reference with no import.
    UndevelopedClaim { node: NodeId },
    TopNotTrue { node: NodeId, verdict: Verdict },
}

impl fmt::Display for OpenReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpenReason::ActiveDefeater { node, verdict } => write!(f, "active defeater {node} is {verdict}"),
            OpenReason::UndevelopedClaim { node } => write!(f, "claim {node} is unsupported for lack of a subcase"),
            OpenReason::TopNotTrue { node, verdict } => write!(f, "top claim {node} is {verdict}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseStatus {
    pub status: CaseStatusKind,
    pub reasons: Vec<OpenReason>,
}

impl CaseStatus {
    pub fn is_closed(&self) -> bool {
        self.status == CaseStatusKind::Closed
    }
}

/// Elements that take no part in the primary argument: subcases of refuted or
/// addressed defeaters, and subcases hidden by an exact defeater.
pub fn commentary_elements(graph: &CaseGraph, map: &AssessmentMap) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for d in graph.defeaters() {
        let refuted = map.get(&d.id) == Some(Verdict::False);
        if !d.is_live() || refuted {
            out.extend(graph.subcase_of(&d.id));
        }
    }
    for node in graph.claim_bearing() {
        if graph.exact_defeater_on(node.id()).is_some() {
            if let Some(block) = graph.block_of(node.id()) {
                out.extend(graph.subcase_of(&block.id));
            }
        }
    }
    out
}

/// Open/closed status with an itemized list of what keeps the case open.
pub fn case_status(graph: &CaseGraph, map: &AssessmentMap) -> CaseStatus {
    let ignored = commentary_elements(graph, map);
    let blocks = graph.block_index();
    let mut reasons = BTreeSet::new();

    for node in graph.claim_bearing() {
        let id = node.id();
        if ignored.contains(id) {
            continue;
        }
        let verdict = map.get(id).unwrap_or(Verdict::Unsupported);
        match node {
            Node::Defeater(d) if d.status == DefeaterStatus::Active && !d.is_exact() => {
                if verdict != Verdict::False {
                    reasons.insert(OpenReason::ActiveDefeater { node: id.clone(), verdict });
                }
            }
            Node::Claim(c) if !c.is_assumption() => {
                let undeveloped = !blocks.contains_key(id) && graph.exact_defeater_on(id).is_none();
                if undeveloped && verdict == Verdict::Unsupported {
                    reasons.insert(OpenReason::UndevelopedClaim { node: id.clone() });
                }
            }
            Node::Defeater(d) if d.is_exact() && d.status == DefeaterStatus::Active => {
                let undeveloped = !blocks.contains_key(id) && graph.exact_defeater_on(id).is_none();
                if undeveloped {
                    reasons.insert(OpenReason::UndevelopedClaim { node: id.clone() });
                }
            }
            Node::External(x) if x.imported_assessment.is_none() && graph.exact_defeater_on(id).is_none() => {
                reasons.insert(OpenReason::UndevelopedClaim { node: id.clone() });
            }
            _ => {}
        }
    }
    let top = map.get(&graph.top).unwrap_or(Verdict::Unsupported);
    if top != Verdict::True {
        reasons.insert(OpenReason::TopNotTrue { node: graph.top.clone(), verdict: top });
    }
    let reasons: Vec<_> = reasons.into_iter().collect();
    CaseStatus {
        status: if reasons.is_empty() { CaseStatusKind::Closed } else { CaseStatusKind::Open },
        reasons,
    }
}
