//! Argument-graph data model.
//!
//! A [`CaseGraph`] holds claim, defeater, evidence and external-subcase nodes
//! plus the argument blocks that connect them. Blocks share the node id
//! namespace so that defeaters can point at argument nodes as well as at
//! claims.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::graphmap::DiGraphMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque node identifier, unique within a case.
///
/// Ids are non-empty and contain no whitespace or control characters, which
/// keeps them unambiguous inside program comments and DOT output.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeIdError {
    #[error("node id is empty")]
    Empty,
    #[error("node id `{0}` contains whitespace or control characters")]
    IllegalChar(String),
}

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, NodeIdError> {
        let id = id.into();
        if id.is_empty() {
            return Err(NodeIdError::Empty);
        }
        if id.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(NodeIdError::IllegalChar(id));
        }
        Ok(NodeId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for NodeId {
    type Error = NodeIdError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        NodeId::new(value)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> String {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Shorthand used throughout tests and fixtures. Panics on an invalid id.
pub fn nid(id: &str) -> NodeId {
    NodeId::new(id).expect("valid node id")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Designation {
    #[default]
    Ordinary,
    Assumption,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimNode {
    pub id: NodeId,
    pub text: String,
    pub designation: Designation,
    pub assumption_justification: Option<String>,
}

impl ClaimNode {
    pub fn new(id: NodeId, text: impl Into<String>) -> Self {
        ClaimNode { id, text: text.into(), designation: Designation::Ordinary, assumption_justification: None }
    }

    pub fn assumption(id: NodeId, text: impl Into<String>, justification: impl Into<String>) -> Self {
        ClaimNode {
            id,
            text: text.into(),
            designation: Designation::Assumption,
            assumption_justification: Some(justification.into()),
        }
    }

    pub fn is_assumption(&self) -> bool {
        self.designation == Designation::Assumption
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DefeaterKind {
    #[default]
    Exploratory,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DefeaterStatus {
    #[default]
    Active,
    Addressed,
    ResidualRisk,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefeaterNode {
    pub id: NodeId,
    pub text: String,
    pub target: NodeId,
    pub kind: DefeaterKind,
    pub status: DefeaterStatus,
    pub residual_justification: Option<String>,
}

impl DefeaterNode {
    pub fn new(id: NodeId, text: impl Into<String>, target: NodeId) -> Self {
        DefeaterNode {
            id,
            text: text.into(),
            target,
            kind: DefeaterKind::Exploratory,
            status: DefeaterStatus::Active,
            residual_justification: None,
        }
    }

    pub fn exact(id: NodeId, text: impl Into<String>, target: NodeId) -> Self {
        DefeaterNode { kind: DefeaterKind::Exact, ..DefeaterNode::new(id, text, target) }
    }

    /// Addressed defeaters are commentary and take no part in propagation.
    pub fn is_live(&self) -> bool {
        self.status != DefeaterStatus::Addressed
    }

    pub fn is_exact(&self) -> bool {
        self.kind == DefeaterKind::Exact
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceNode {
    pub id: NodeId,
    pub description: String,
    pub present: bool,
    pub artifact_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSubcaseRef {
    pub id: NodeId,
    pub case_ref: String,
    pub imported_assessment: Option<crate::propagate::Verdict>,
    pub imported_confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Claim(ClaimNode),
    Defeater(DefeaterNode),
    Evidence(EvidenceNode),
    External(ExternalSubcaseRef),
}

impl Node {
    pub fn id(&self) -> &NodeId {
        match self {
            Node::Claim(n) => &n.id,
            Node::Defeater(n) => &n.id,
            Node::Evidence(n) => &n.id,
            Node::External(n) => &n.id,
        }
    }

    /// Claim text, defeater counter-claim, evidence description or case reference.
    pub fn text(&self) -> &str {
        match self {
            Node::Claim(n) => &n.text,
            Node::Defeater(n) => &n.text,
            Node::Evidence(n) => &n.description,
            Node::External(n) => &n.case_ref,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Node::Claim(_) => "claim",
            Node::Defeater(_) => "defeater",
            Node::Evidence(_) => "evidence",
            Node::External(_) => "external",
        }
    }

    /// Nodes that carry a three-valued assessment.
    pub fn is_claim_bearing(&self) -> bool {
        !matches!(self, Node::Evidence(_))
    }

    pub fn as_claim(&self) -> Option<&ClaimNode> {
        match self {
            Node::Claim(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_defeater(&self) -> Option<&DefeaterNode> {
        match self {
            Node::Defeater(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_evidence(&self) -> Option<&EvidenceNode> {
        match self {
            Node::Evidence(e) => Some(e),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Concretion,
    Substitution,
    Decomposition,
    Calculation,
    EvidenceIncorporation,
}

impl BlockKind {
    pub const ALL: [BlockKind; 5] = [
        BlockKind::Concretion,
        BlockKind::Substitution,
        BlockKind::Decomposition,
        BlockKind::Calculation,
        BlockKind::EvidenceIncorporation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Concretion => "concretion",
            BlockKind::Substitution => "substitution",
            BlockKind::Decomposition => "decomposition",
            BlockKind::Calculation => "calculation",
            BlockKind::EvidenceIncorporation => "evidence_incorporation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionMode {
    #[default]
    Conjunctive,
    Disjunctive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfirmationLevel {
    StronglyPositive,
    Neutral,
    StronglyNegative,
}

impl ConfirmationLevel {
    pub fn name(self) -> &'static str {
        match self {
            ConfirmationLevel::StronglyPositive => "strongly_positive",
            ConfirmationLevel::Neutral => "neutral",
            ConfirmationLevel::StronglyNegative => "strongly_negative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfirmationMode {
    Qualitative,
    Numeric,
}

/// Confirmation attached to a substitution block that lifts an evidentially
/// measured claim to an evidentially useful one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfirmationAnnotation {
    pub mode: ConfirmationMode,
    pub qualitative_level: Option<ConfirmationLevel>,
    pub p_e_given_c: Option<f64>,
    pub p_e_given_not_c: Option<f64>,
    pub prior_c: Option<f64>,
}

impl ConfirmationAnnotation {
    pub fn qualitative(level: ConfirmationLevel) -> Self {
        ConfirmationAnnotation {
            mode: ConfirmationMode::Qualitative,
            qualitative_level: Some(level),
            p_e_given_c: None,
            p_e_given_not_c: None,
            prior_c: None,
        }
    }

    pub fn numeric(p_e_given_c: f64, p_e_given_not_c: f64, prior_c: Option<f64>) -> Self {
        ConfirmationAnnotation {
            mode: ConfirmationMode::Numeric,
            qualitative_level: None,
            p_e_given_c: Some(p_e_given_c),
            p_e_given_not_c: Some(p_e_given_not_c),
            prior_c,
        }
    }

    /// Problems with the annotation's own invariants, if any.
    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        match self.mode {
            ConfirmationMode::Qualitative => {
                if self.qualitative_level.is_none() {
                    problems.push("qualitative confirmation needs a qualitative_level".to_string());
                }
            }
            ConfirmationMode::Numeric => {
                let probs = [("p_e_given_c", self.p_e_given_c), ("p_e_given_not_c", self.p_e_given_not_c)];
                for (name, p) in probs {
                    match p {
                        None => problems.push(format!("numeric confirmation needs {name}")),
                        Some(p) if !(0.0..=1.0).contains(&p) => {
                            problems.push(format!("{name} = {p} is not a probability"))
                        }
                        Some(_) => {}
                    }
                }
                if self.p_e_given_c == Some(0.0) && self.p_e_given_not_c == Some(0.0) {
                    problems.push("evidence impossible: both likelihoods are zero".to_string());
                }
                if let Some(prior) = self.prior_c {
                    if !(prior > 0.0 && prior < 1.0) {
                        problems.push(format!("prior_c = {prior} must lie strictly between 0 and 1"));
                    }
                }
            }
        }
        problems
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArgumentBlock {
    pub id: NodeId,
    pub kind: BlockKind,
    pub decomposition_mode: Option<DecompositionMode>,
    pub parent: NodeId,
    pub subchildren: Vec<NodeId>,
    pub sideclaims: Vec<NodeId>,
    pub justification: String,
    pub confirmation: Option<ConfirmationAnnotation>,
}

impl ArgumentBlock {
    pub fn new(id: NodeId, kind: BlockKind, parent: NodeId, subchildren: Vec<NodeId>) -> Self {
        ArgumentBlock {
            id,
            kind,
            decomposition_mode: (kind == BlockKind::Decomposition).then_some(DecompositionMode::Conjunctive),
            parent,
            subchildren,
            sideclaims: Vec::new(),
            justification: String::new(),
            confirmation: None,
        }
    }

    pub fn with_sideclaims(mut self, sideclaims: Vec<NodeId>) -> Self {
        self.sideclaims = sideclaims;
        self
    }

    pub fn with_mode(mut self, mode: DecompositionMode) -> Self {
        self.decomposition_mode = Some(mode);
        self
    }

    pub fn with_confirmation(mut self, confirmation: ConfirmationAnnotation) -> Self {
        self.confirmation = Some(confirmation);
        self
    }

    pub fn with_justification(mut self, text: impl Into<String>) -> Self {
        self.justification = text.into();
        self
    }

    pub fn is_disjunctive(&self) -> bool {
        self.kind == BlockKind::Decomposition && self.decomposition_mode == Some(DecompositionMode::Disjunctive)
    }

    /// Subchildren followed by sideclaims.
    pub fn inputs(&self) -> impl Iterator<Item = &NodeId> {
        self.subchildren.iter().chain(self.sideclaims.iter())
    }
}

/// Confirmation thresholds on the log10 likelihood ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub positive: f64,
    pub negative: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { positive: 1.0, negative: -1.0 }
    }
}

impl Thresholds {
    pub fn new(positive: f64, negative: f64) -> Result<Self, String> {
        if !(positive > 0.0 && negative < 0.0) {
            return Err(format!("thresholds need positive > 0 > negative, got ({positive}, {negative})"));
        }
        Ok(Thresholds { positive, negative })
    }
}

impl std::str::FromStr for Thresholds {
    type Err = String;

    /// Parses `"<positive>,<negative>"`, e.g. `"1.0,-1.0"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (pos, neg) = s.split_once(',').ok_or_else(|| format!("expected `positive,negative`, got `{s}`"))?;
        let pos: f64 = pos.trim().parse().map_err(|e| format!("bad positive threshold: {e}"))?;
        let neg: f64 = neg.trim().parse().map_err(|e| format!("bad negative threshold: {e}"))?;
        Thresholds::new(pos, neg)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metadata {
    pub name: String,
    pub version: String,
    pub thresholds: Option<Thresholds>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("unknown node `{0}`")]
    Dangling(NodeId),
    #[error("`{0}` is not a defeater")]
    NotADefeater(NodeId),
    #[error("evidence `{0}` is not incorporated by any block")]
    UnincorporatedEvidence(NodeId),
    #[error("dependency cycle through {0:?}")]
    Cycle(Vec<NodeId>),
}

/// An assurance case: nodes, argument blocks and the top claim.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseGraph {
    pub nodes: BTreeMap<NodeId, Node>,
    pub blocks: BTreeMap<NodeId, ArgumentBlock>,
    pub top: NodeId,
    pub metadata: Metadata,
}

/// A reference into the graph: either a node or an argument block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element<'a> {
    Node(&'a Node),
    Block(&'a ArgumentBlock),
}

impl CaseGraph {
    pub fn new(top: NodeId) -> Self {
        CaseGraph { nodes: BTreeMap::new(), blocks: BTreeMap::new(), top, metadata: Metadata::default() }
    }

    pub fn add_node(&mut self, node: Node) -> &mut Self {
        self.nodes.insert(node.id().clone(), node);
        self
    }

    pub fn add_block(&mut self, block: ArgumentBlock) -> &mut Self {
        self.blocks.insert(block.id.clone(), block);
        self
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn element(&self, id: &NodeId) -> Option<Element<'_>> {
        self.nodes
            .get(id)
            .map(Element::Node)
            .or_else(|| self.blocks.get(id).map(Element::Block))
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id) || self.blocks.contains_key(id)
    }

    pub fn defeaters(&self) -> impl Iterator<Item = &DefeaterNode> {
        self.nodes.values().filter_map(Node::as_defeater)
    }

    pub fn claim_bearing(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(|n| n.is_claim_bearing())
    }

    /// The block whose parent is `id`, if any (first by block id when malformed).
    pub fn block_of(&self, id: &NodeId) -> Option<&ArgumentBlock> {
        self.blocks.values().find(|b| &b.parent == id)
    }

    /// Index parent id → block, first block by id wins.
    pub fn block_index(&self) -> BTreeMap<&NodeId, &ArgumentBlock> {
        let mut index = BTreeMap::new();
        for block in self.blocks.values() {
            index.entry(&block.parent).or_insert(block);
        }
        index
    }

    /// The evidence-incorporation block that incorporates evidence `id`.
    pub fn incorporating_block(&self, id: &NodeId) -> Option<&ArgumentBlock> {
        self.blocks
            .values()
            .find(|b| b.kind == BlockKind::EvidenceIncorporation && b.subchildren.contains(id))
    }

    /// The live exact defeater pointing at `id`, if any.
    pub fn exact_defeater_on(&self, id: &NodeId) -> Option<&DefeaterNode> {
        self.defeaters().find(|d| d.is_live() && d.is_exact() && &d.target == id)
    }

    /// Claim whose verdict a defeater overrides: the target itself when it is
    /// claim-like, otherwise the parent of the targeted block or of the block
    /// incorporating the targeted evidence.
    pub fn affected_claim(&self, defeater: &NodeId) -> Result<NodeId, StructureError> {
        let d = self
            .nodes
            .get(defeater)
            .ok_or_else(|| StructureError::Dangling(defeater.clone()))?
            .as_defeater()
            .ok_or_else(|| StructureError::NotADefeater(defeater.clone()))?;
        match self.element(&d.target) {
            None => Err(StructureError::Dangling(d.target.clone())),
            Some(Element::Node(Node::Claim(_) | Node::Defeater(_) | Node::External(_))) => Ok(d.target.clone()),
            Some(Element::Block(block)) => Ok(block.parent.clone()),
            Some(Element::Node(Node::Evidence(e))) => self
                .incorporating_block(&e.id)
                .map(|b| b.parent.clone())
                .ok_or_else(|| StructureError::UnincorporatedEvidence(e.id.clone())),
        }
    }

    /// Live exploratory defeaters grouped by the claim they affect.
    pub fn ordinary_defeaters_by_affected(&self) -> BTreeMap<NodeId, Vec<&DefeaterNode>> {
        let mut map: BTreeMap<NodeId, Vec<&DefeaterNode>> = BTreeMap::new();
        for d in self.defeaters().filter(|d| d.is_live() && !d.is_exact()) {
            if let Ok(affected) = self.affected_claim(&d.id) {
                map.entry(affected).or_default().push(d);
            }
        }
        map
    }

    /// Dependency edges `(dependent, dependency)` over nodes and blocks: a
    /// parent depends on its block, a block on its inputs, and a defeater's
    /// target on the defeater. Addressed defeaters are included.
    pub fn dependency_edges(&self) -> Vec<(&NodeId, &NodeId)> {
        let mut edges = Vec::new();
        for block in self.blocks.values() {
            edges.push((&block.parent, &block.id));
            for input in block.inputs() {
                edges.push((&block.id, input));
            }
        }
        for d in self.defeaters() {
            edges.push((&d.target, &d.id));
        }
        edges
    }

    fn dependency_graph(&self) -> DiGraphMap<&str, ()> {
        let mut g = DiGraphMap::new();
        for id in self.nodes.keys().chain(self.blocks.keys()) {
            g.add_node(id.as_str());
        }
        for (from, to) in self.dependency_edges() {
            g.add_edge(from.as_str(), to.as_str(), ());
        }
        g
    }

    /// Node and block ids ordered so that every element follows everything it
    /// depends on. Fails with the members of one cycle otherwise.
    pub fn dependency_order(&self) -> Result<Vec<NodeId>, StructureError> {
        let g = self.dependency_graph();
        // Edges point from dependent to dependency; reverse the sort.
        match petgraph::algo::toposort(&g, None) {
            Ok(order) => Ok(order.into_iter().rev().map(nid).collect()),
            Err(_) => Err(StructureError::Cycle(self.cyclic_elements().into_iter().collect())),
        }
    }

    /// Every element that lies on some dependency cycle.
    pub fn cyclic_elements(&self) -> BTreeSet<NodeId> {
        let g = self.dependency_graph();
        let mut cyclic = BTreeSet::new();
        for scc in petgraph::algo::tarjan_scc(&g) {
            if scc.len() > 1 || g.contains_edge(scc[0], scc[0]) {
                cyclic.extend(scc.into_iter().map(nid));
            }
        }
        cyclic
    }

    /// Everything `start` depends on, transitively, including itself.
    pub fn dependencies_of(&self, start: &NodeId) -> BTreeSet<NodeId> {
        let g = self.dependency_graph();
        let mut seen = BTreeSet::new();
        if !g.contains_node(start.as_str()) {
            return seen;
        }
        let mut dfs = petgraph::visit::Dfs::new(&g, start.as_str());
        while let Some(n) = dfs.next(&g) {
            seen.insert(nid(n));
        }
        seen
    }

    /// Elements connected to the top claim: its support, every defeater aimed
    /// at a connected element, and their subcases.
    pub fn connected_to_top(&self) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        if self.contains(&self.top) {
            seen.insert(self.top.clone());
        }
        loop {
            let before = seen.len();
            for block in self.blocks.values() {
                if seen.contains(&block.parent) {
                    seen.insert(block.id.clone());
                    seen.extend(block.inputs().cloned());
                }
            }
            for d in self.defeaters() {
                if seen.contains(&d.target) {
                    seen.insert(d.id.clone());
                }
            }
            if seen.len() == before {
                break;
            }
        }
        seen.retain(|id| self.contains(id));
        seen
    }

    /// Elements reachable downward from `root` through blocks, including
    /// defeaters aimed at anything reached and their subcases.
    pub fn subcase_of(&self, root: &NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::from([root.clone()]);
        loop {
            let before = seen.len();
            for block in self.blocks.values() {
                if seen.contains(&block.parent) {
                    seen.insert(block.id.clone());
                    seen.extend(block.inputs().cloned());
                }
            }
            for d in self.defeaters() {
                if seen.contains(&d.target) {
                    seen.insert(d.id.clone());
                }
            }
            if seen.len() == before {
                break;
            }
        }
        seen
    }

    /// Elements `defeater` may point at without creating a dependency cycle.
    /// The defeater's current target is disregarded.
    pub fn attachment_points(&self, defeater: &NodeId) -> BTreeSet<NodeId> {
        // Pointing at X adds X -> defeater; that cycles iff the defeater
        // already depends on X.
        let below = self.dependencies_of(defeater);
        self.nodes
            .keys()
            .chain(self.blocks.keys())
            .filter(|id| *id != defeater && !below.contains(*id))
            .cloned()
            .collect()
    }

    /// Removes elements not connected to the top claim.
    pub fn prune_disconnected(&mut self) {
        let keep = self.connected_to_top();
        self.nodes.retain(|id, _| keep.contains(id));
        self.blocks.retain(|id, _| keep.contains(id));
    }
}
