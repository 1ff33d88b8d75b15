//! Numeric confidence for claims assessed `True`.
//!
//! Confidence is `1 - doubt`. Doubt accumulates upward: a block's parent
//! carries the summed doubt of its inputs (clamped at 1), a disjunction takes
//! its least doubtful true disjunct, and evidential substitution adds the
//! posterior doubt of the confirmed claim.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BlockKind, CaseGraph, ConfirmationLevel, ConfirmationMode, DefeaterStatus, Node, NodeId};
use crate::propagate::{AssessmentMap, Verdict};
use crate::validate::{Diagnostic, Severity};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfirmationError {
    #[error("missing {0}")]
    MissingField(&'static str),
    #[error("evidence impossible: P(E|C) and P(E|~C) are both zero")]
    EvidenceImpossible,
    #[error("{name} = {value} is not a probability")]
    NotAProbability { name: &'static str, value: f64 },
    #[error("posterior undefined: P(E) is zero")]
    ZeroEvidenceProbability,
}

fn probability(name: &'static str, value: f64) -> Result<f64, ConfirmationError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ConfirmationError::NotAProbability { name, value })
    }
}

/// Good's measure of confirmation, `log10(P(E|C) / P(E|~C))`.
///
/// A zero likelihood under the alternative gives `+inf`; zero under the claim
/// gives `-inf`.
pub fn good_measure(p_e_given_c: f64, p_e_given_not_c: f64) -> Result<f64, ConfirmationError> {
    let p1 = probability("p_e_given_c", p_e_given_c)?;
    let p0 = probability("p_e_given_not_c", p_e_given_not_c)?;
    match (p1 == 0.0, p0 == 0.0) {
        (true, true) => Err(ConfirmationError::EvidenceImpossible),
        (false, true) => Ok(f64::INFINITY),
        (true, false) => Ok(f64::NEG_INFINITY),
        (false, false) => Ok((p1 / p0).log10()),
    }
}

/// `P(C|E)` by Bayes' rule.
pub fn posterior_confidence(prior: f64, p_e_given_c: f64, p_e_given_not_c: f64) -> Result<f64, ConfirmationError> {
    let prior = probability("prior_c", prior)?;
    let p1 = probability("p_e_given_c", p_e_given_c)?;
    let p0 = probability("p_e_given_not_c", p_e_given_not_c)?;
    let evidence = p1 * prior + p0 * (1.0 - prior);
    if evidence == 0.0 {
        return Err(ConfirmationError::ZeroEvidenceProbability);
    }
    Ok(p1 * prior / evidence)
}

/// Posterior used for qualitative confirmation levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualitativeDefaults {
    pub strongly_positive: f64,
    pub neutral: f64,
    pub strongly_negative: f64,
}

impl Default for QualitativeDefaults {
    fn default() -> Self {
        QualitativeDefaults { strongly_positive: 0.95, neutral: 0.5, strongly_negative: 0.05 }
    }
}

impl QualitativeDefaults {
    pub fn for_level(&self, level: ConfirmationLevel) -> f64 {
        match level {
            ConfirmationLevel::StronglyPositive => self.strongly_positive,
            ConfirmationLevel::Neutral => self.neutral,
            ConfirmationLevel::StronglyNegative => self.strongly_negative,
        }
    }
}

impl std::str::FromStr for QualitativeDefaults {
    type Err = String;

    /// Parses `"<positive>,<neutral>,<negative>"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [sp, n, sn] = parts.as_slice() else {
            return Err(format!("expected three comma-separated values, got `{s}`"));
        };
        let parse = |x: &str| -> Result<f64, String> {
            let v: f64 = x.parse().map_err(|e| format!("`{x}`: {e}"))?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(format!("`{x}` is not a probability"))
            }
        };
        Ok(QualitativeDefaults { strongly_positive: parse(sp)?, neutral: parse(n)?, strongly_negative: parse(sn)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceConfig {
    pub assumption_default: f64,
    pub qualitative: QualitativeDefaults,
    /// Prior used for numeric confirmation without `prior_c`.
    pub default_prior: f64,
    pub overrides: BTreeMap<NodeId, f64>,
}

impl Default for ConfidenceConfig {
    fn default() -> Self {
        ConfidenceConfig {
            assumption_default: 0.9,
            qualitative: QualitativeDefaults::default(),
            default_prior: 0.5,
            overrides: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceSource {
    Override,
    Assumption,
    EvidencePresent,
    Imported,
    Computed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceEntry {
    pub value: f64,
    pub source: ConfidenceSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    pub entries: BTreeMap<NodeId, ConfidenceEntry>,
    pub warnings: Vec<Diagnostic>,
    /// Residual-risk defeaters, which carry no confidence.
    pub residual_risks: Vec<NodeId>,
    /// True when the top claim has no entry.
    pub partial: bool,
}

impl ConfidenceReport {
    pub fn value(&self, id: &str) -> Option<f64> {
        self.entries.get(id).map(|e| e.value)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfidenceError {
    #[error("override for `{node}` is {value}, not within [0, 1]")]
    BadOverride { node: NodeId, value: f64 },
    #[error("override names unknown node `{0}`")]
    UnknownOverride(NodeId),
    #[error("block `{block}`: {source}")]
    Confirmation { block: NodeId, source: ConfirmationError },
    #[error(transparent)]
    Structure(#[from] crate::model::StructureError),
}

/// Computes confidence for every `True` claim-bearing node reachable through
/// `True` inputs.
pub fn compute_confidence(
    graph: &CaseGraph,
    map: &AssessmentMap,
    config: &ConfidenceConfig,
) -> Result<ConfidenceReport, ConfidenceError> {
    for (id, &value) in &config.overrides {
        if !(0.0..=1.0).contains(&value) {
            return Err(ConfidenceError::BadOverride { node: id.clone(), value });
        }
        if !graph.nodes.contains_key(id) {
            return Err(ConfidenceError::UnknownOverride(id.clone()));
        }
    }

    let blocks = graph.block_index();
    let mut entries: BTreeMap<NodeId, ConfidenceEntry> = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut residual_risks = Vec::new();
    let warn = |warnings: &mut Vec<Diagnostic>, id: &NodeId, message: String| {
        warnings.push(Diagnostic { node: id.clone(), severity: Severity::Warn, message });
    };

    for id in graph.dependency_order()? {
        let Some(node) = graph.nodes.get(&id) else { continue };
        if let Node::Defeater(d) = node {
            if d.status == DefeaterStatus::ResidualRisk {
                residual_risks.push(id.clone());
                continue;
            }
        }
        if !node.is_claim_bearing() || map.get(&id) != Some(Verdict::True) {
            if config.overrides.contains_key(&id) {
                warn(&mut warnings, &id, "override ignored: node is not assessed TRUE".into());
            }
            continue;
        }
        if let Some(&value) = config.overrides.get(&id) {
            entries.insert(id, ConfidenceEntry { value, source: ConfidenceSource::Override });
            continue;
        }
        if graph.exact_defeater_on(&id).is_some() {
            warn(&mut warnings, &id, "no confidence for a claim established by refuting its exact defeater".into());
            continue;
        }

        let entry = match (node, blocks.get(&id)) {
            (Node::External(x), _) => match x.imported_confidence {
                Some(value) => Some(ConfidenceEntry { value, source: ConfidenceSource::Imported }),
                None => {
                    warn(&mut warnings, &id, format!("external case `{}` has no imported confidence", x.case_ref));
                    None
                }
            },
            (Node::Claim(c), _) if c.is_assumption() => {
                Some(ConfidenceEntry { value: config.assumption_default, source: ConfidenceSource::Assumption })
            }
            (_, None) => None,
            (_, Some(block)) => {
                let doubt_of = |x: &NodeId| entries.get(x).map(|e| 1.0 - e.value);
                let doubt = if block.kind == BlockKind::EvidenceIncorporation {
                    entries.insert(id, ConfidenceEntry { value: 1.0, source: ConfidenceSource::EvidencePresent });
                    continue;
                } else if block.is_disjunctive() {
                    let best = block
                        .subchildren
                        .iter()
                        .filter(|s| map.get(s) == Some(Verdict::True))
                        .filter_map(doubt_of)
                        .min_by(f64::total_cmp);
                    let sides: Option<Vec<f64>> = block.sideclaims.iter().map(doubt_of).collect();
                    best.zip(sides).map(|(b, s)| b + s.iter().sum::<f64>())
                } else if let (BlockKind::Substitution, Some(conf)) = (block.kind, &block.confirmation) {
                    let post = match conf.mode {
                        ConfirmationMode::Qualitative => conf.qualitative_level.map(|l| config.qualitative.for_level(l)),
                        ConfirmationMode::Numeric => match (conf.p_e_given_c, conf.p_e_given_not_c) {
                            (Some(p1), Some(p0)) => Some(
                                posterior_confidence(conf.prior_c.unwrap_or(config.default_prior), p1, p0)
                                    .map_err(|source| ConfidenceError::Confirmation { block: block.id.clone(), source })?,
                            ),
                            _ => None,
                        },
                    };
                    let inputs: Option<Vec<f64>> = dedup(block.inputs()).into_iter().map(doubt_of).collect();
                    post.zip(inputs).map(|(p, xs)| (1.0 - p) + xs.iter().sum::<f64>())
                } else {
                    let inputs: Option<Vec<f64>> = dedup(block.inputs()).into_iter().map(doubt_of).collect();
                    inputs.map(|xs| xs.iter().sum::<f64>())
                };
                match doubt {
                    Some(d) => Some(ConfidenceEntry { value: 1.0 - d.clamp(0.0, 1.0), source: ConfidenceSource::Computed }),
                    None => {
                        warn(&mut warnings, &id, "an input has no confidence".into());
                        None
                    }
                }
            }
        };
        if let Some(e) = entry {
            entries.insert(id, e);
        }
    }

    let partial = !entries.contains_key(&graph.top);
    if partial {
        let verdict = map.get(&graph.top).unwrap_or(Verdict::Unsupported);
        warn(
            &mut warnings,
            &graph.top,
            format!("top claim is {verdict} and has no confidence; map is partial"),
        );
    }
    Ok(ConfidenceReport { entries, warnings, residual_risks, partial })
}

fn dedup<'a>(ids: impl Iterator<Item = &'a NodeId>) -> Vec<&'a NodeId> {
    let mut seen = BTreeSet::new();
    ids.filter(|id| seen.insert(*id)).collect()
}
