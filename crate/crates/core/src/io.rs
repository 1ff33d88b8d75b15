//! Case document reading and canonical writing.
//!
//! A document is a JSON object `{format_version, case, overrides, notes}`.
//! Unknown fields are rejected in strict mode and kept in
//! [`CaseDocument::extensions`] in lenient mode, so that a lenient round trip
//! does not lose them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{
    ArgumentBlock, BlockKind, CaseGraph, ClaimNode, ConfirmationAnnotation, ConfirmationLevel, ConfirmationMode,
    DecompositionMode, DefeaterKind, DefeaterNode, DefeaterStatus, Designation, EvidenceNode, ExternalSubcaseRef,
    Metadata, Node, NodeId, Thresholds,
};
use crate::propagate::Verdict;

pub const FORMAT_VERSION: &str = "1.0.0";
const SUPPORTED_MAJOR: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{message}", location(*line, *column, path.as_deref()))]
pub struct DocumentError {
    pub message: String,
    pub path: Option<String>,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

fn location(line: Option<usize>, column: Option<usize>, path: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(l) = line {
        out.push_str(&format!("line {l}"));
        if let Some(c) = column {
            out.push_str(&format!(", column {c}"));
        }
    }
    if let Some(p) = path.filter(|p| !p.is_empty() && *p != ".") {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&format!("at {p}"));
    }
    if !out.is_empty() {
        out.push_str(": ");
    }
    out
}

impl DocumentError {
    fn plain(message: impl Into<String>) -> Self {
        DocumentError { message: message.into(), path: None, line: None, column: None }
    }

    fn at(text: &str, needle: &str, from: usize, message: impl Into<String>) -> Self {
        let (line, column) = locate(text, needle, from).unzip();
        DocumentError { message: message.into(), path: None, line, column }
    }
}

/// 1-based line and column of the first occurrence of `needle` at or after
/// byte offset `from`.
fn locate(text: &str, needle: &str, from: usize) -> Option<(usize, usize)> {
    let from = from.min(text.len());
    let pos = text.get(from..)?.find(needle)? + from;
    let before = &text[..pos];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Some((line, column))
}

/// Byte offsets where `id` appears as the value of an `"id"` key.
fn id_positions(text: &str, id: &NodeId) -> Vec<usize> {
    let needle = quoted(id.as_str());
    text.match_indices(&needle)
        .map(|(pos, _)| pos)
        .filter(|&pos| {
            let before = text[..pos].trim_end();
            before.strip_suffix(':').is_some_and(|b| b.trim_end().ends_with("\"id\""))
        })
        .collect()
}

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// A parsed case together with confidence overrides, notes and any fields
/// this version does not understand.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseDocument {
    pub graph: CaseGraph,
    pub overrides: BTreeMap<NodeId, f64>,
    pub notes: Map<String, Value>,
    /// Unknown fields by scope: `""` (document), `"case"`, `"node:<id>"`,
    /// `"block:<id>"`, `"confirmation:<block id>"`.
    pub extensions: BTreeMap<String, Map<String, Value>>,
}

impl CaseDocument {
    pub fn new(graph: CaseGraph) -> Self {
        CaseDocument { graph, overrides: BTreeMap::new(), notes: Map::new(), extensions: BTreeMap::new() }
    }
}

#[derive(Serialize, Deserialize)]
struct WireDocument {
    format_version: String,
    case: WireCase,
    #[serde(default)]
    overrides: BTreeMap<NodeId, f64>,
    #[serde(default)]
    notes: Map<String, Value>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct WireCase {
    #[serde(default)]
    name: String,
    #[serde(default)]
    version: String,
    top: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thresholds: Option<Thresholds>,
    nodes: Vec<WireNode>,
    #[serde(default)]
    blocks: Vec<WireBlock>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct WireNode {
    kind: String,
    id: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    designation: Option<Designation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assumption_justification: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    defeater_kind: Option<DefeaterKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    status: Option<DefeaterStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    residual_justification: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    present: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    artifact_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    case_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    imported_assessment: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    imported_confidence: Option<f64>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct WireBlock {
    id: NodeId,
    kind: BlockKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<DecompositionMode>,
    parent: NodeId,
    subchildren: Vec<NodeId>,
    #[serde(default)]
    sideclaims: Vec<NodeId>,
    #[serde(default)]
    justification: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    confirmation: Option<WireConfirmation>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct WireConfirmation {
    mode: ConfirmationMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    qualitative_level: Option<ConfirmationLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_e_given_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_e_given_not_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior_c: Option<f64>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

struct Converter<'a> {
    text: &'a str,
    mode: ParseMode,
    extensions: BTreeMap<String, Map<String, Value>>,
}

impl Converter<'_> {
    /// Position of the element with this id in the source, for error locations.
    fn offset_of(&self, id: &NodeId) -> usize {
        id_positions(self.text, id).first().copied().unwrap_or(0)
    }

    fn extras(&mut self, scope: String, anchor: usize, extra: Map<String, Value>) -> Result<(), DocumentError> {
        if extra.is_empty() {
            return Ok(());
        }
        if self.mode == ParseMode::Strict {
            let field = extra.keys().next().expect("non-empty");
            let place = if scope.is_empty() { "document".to_string() } else { scope.clone() };
            return Err(DocumentError {
                path: Some(place.clone()),
                ..DocumentError::at(self.text, &quoted(field), anchor, format!("unknown field `{field}` in {place}"))
            });
        }
        self.extensions.insert(scope, extra);
        Ok(())
    }

    fn required<T>(&self, id: &NodeId, field: &str, value: Option<T>, kind: &str) -> Result<T, DocumentError> {
        value.ok_or_else(|| {
            DocumentError::at(self.text, &quoted(id.as_str()), self.offset_of(id), format!("{kind} `{id}` is missing `{field}`"))
        })
    }

    fn node(&mut self, w: WireNode) -> Result<Node, DocumentError> {
        let anchor = self.offset_of(&w.id);
        let id = w.id;
        let given = [
            ("text", w.text.is_some()),
            ("designation", w.designation.is_some()),
            ("assumption_justification", w.assumption_justification.is_some()),
            ("target", w.target.is_some()),
            ("defeater_kind", w.defeater_kind.is_some()),
            ("status", w.status.is_some()),
            ("residual_justification", w.residual_justification.is_some()),
            ("description", w.description.is_some()),
            ("present", w.present.is_some()),
            ("artifact_ref", w.artifact_ref.is_some()),
            ("case_ref", w.case_ref.is_some()),
            ("imported_assessment", w.imported_assessment.is_some()),
            ("imported_confidence", w.imported_confidence.is_some()),
        ];
        let allowed: &[&str] = match w.kind.as_str() {
            "claim" => &["text", "designation", "assumption_justification"],
            "defeater" => &["text", "target", "defeater_kind", "status", "residual_justification"],
            "evidence" => &["description", "present", "artifact_ref"],
            "external" => &["case_ref", "imported_assessment", "imported_confidence"],
            _ => &[],
        };
        if !allowed.is_empty() {
            if let Some((field, _)) = given.iter().find(|(f, set)| *set && !allowed.contains(f)) {
                let kind = if w.kind == "external" { "external reference" } else { w.kind.as_str() };
                return Err(DocumentError::at(
                    self.text,
                    &quoted(field),
                    anchor,
                    format!("`{field}` does not apply to {kind} `{id}`"),
                ));
            }
        }
        let node = match w.kind.as_str() {
            "claim" => {
                Node::Claim(ClaimNode {
                    text: self.required(&id, "text", w.text, "claim")?,
                    designation: w.designation.unwrap_or_default(),
                    assumption_justification: w.assumption_justification,
                    id: id.clone(),
                })
            }
            "defeater" => {
                Node::Defeater(DefeaterNode {
                    text: self.required(&id, "text", w.text, "defeater")?,
                    target: self.required(&id, "target", w.target, "defeater")?,
                    kind: w.defeater_kind.unwrap_or_default(),
                    status: w.status.unwrap_or_default(),
                    residual_justification: w.residual_justification,
                    id: id.clone(),
                })
            }
            "evidence" => {
                Node::Evidence(EvidenceNode {
                    description: self.required(&id, "description", w.description, "evidence")?,
                    present: w.present.unwrap_or(false),
                    artifact_ref: w.artifact_ref,
                    id: id.clone(),
                })
            }
            "external" => {
                Node::External(ExternalSubcaseRef {
                    case_ref: self.required(&id, "case_ref", w.case_ref, "external reference")?,
                    imported_assessment: w.imported_assessment,
                    imported_confidence: w.imported_confidence,
                    id: id.clone(),
                })
            }
            other => {
                return Err(DocumentError::at(
                    self.text,
                    &quoted(other),
                    anchor,
                    format!("unknown node kind `{other}` for `{id}`"),
                ))
            }
        };
        self.extras(format!("node:{id}"), anchor, w.extra)?;
        Ok(node)
    }

    fn block(&mut self, w: WireBlock) -> Result<ArgumentBlock, DocumentError> {
        let anchor = self.offset_of(&w.id);
        let confirmation = match w.confirmation {
            Some(c) => {
                self.extras(format!("confirmation:{}", w.id), anchor, c.extra)?;
                Some(ConfirmationAnnotation {
                    mode: c.mode,
                    qualitative_level: c.qualitative_level,
                    p_e_given_c: c.p_e_given_c,
                    p_e_given_not_c: c.p_e_given_not_c,
                    prior_c: c.prior_c,
                })
            }
            None => None,
        };
        self.extras(format!("block:{}", w.id), anchor, w.extra)?;
        Ok(ArgumentBlock {
            id: w.id,
            kind: w.kind,
            decomposition_mode: w.mode,
            parent: w.parent,
            subchildren: w.subchildren,
            sideclaims: w.sideclaims,
            justification: w.justification,
            confirmation,
        })
    }
}

pub fn parse_case(text: &str, mode: ParseMode) -> Result<CaseDocument, DocumentError> {
    if text.trim().is_empty() {
        return Err(DocumentError::plain("empty input"));
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let wire: WireDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        DocumentError {
            message: inner.to_string().split(" at line ").next().unwrap_or_default().to_string(),
            path: Some(path),
            line: Some(inner.line()).filter(|l| *l > 0),
            column: (inner.line() > 0).then(|| inner.column()),
        }
    })?;
    de.end().map_err(|e| DocumentError {
        message: "trailing characters after document".into(),
        path: None,
        line: Some(e.line()),
        column: Some(e.column()),
    })?;

    let version = semver::Version::parse(&wire.format_version).map_err(|e| {
        DocumentError::at(text, "format_version", 0, format!("format_version `{}`: {e}", wire.format_version))
    })?;
    if version.major != SUPPORTED_MAJOR {
        return Err(DocumentError::at(
            text,
            "format_version",
            0,
            format!("unsupported format_version {version}; this reader handles {SUPPORTED_MAJOR}.x"),
        ));
    }

    let mut conv = Converter { text, mode, extensions: BTreeMap::new() };
    conv.extras(String::new(), 0, wire.extra)?;
    let case = wire.case;
    let case_anchor = text.find("\"case\"").unwrap_or(0);
    conv.extras("case".into(), case_anchor, case.extra)?;

    let mut graph = CaseGraph::new(case.top);
    graph.metadata = Metadata { name: case.name, version: case.version, thresholds: case.thresholds };
    if let Some(t) = case.thresholds {
        Thresholds::new(t.positive, t.negative)
            .map_err(|e| DocumentError::at(text, "\"thresholds\"", 0, e))?;
    }

    let mut seen = BTreeSet::new();
    for w in case.nodes {
        if !seen.insert(w.id.clone()) {
            let second = id_positions(text, &w.id).get(1).copied().unwrap_or(0);
            return Err(DocumentError::at(text, &quoted(w.id.as_str()), second, format!("duplicate node id `{}`", w.id)));
        }
        let node = conv.node(w)?;
        graph.add_node(node);
    }
    for w in case.blocks {
        if !seen.insert(w.id.clone()) {
            let second = id_positions(text, &w.id).get(1).copied().unwrap_or(0);
            return Err(DocumentError::at(text, &quoted(w.id.as_str()), second, format!("duplicate id `{}`", w.id)));
        }
        let block = conv.block(w)?;
        graph.add_block(block);
    }

    Ok(CaseDocument { graph, overrides: wire.overrides, notes: wire.notes, extensions: conv.extensions })
}

/// Reads a bare case graph, strictly.
pub fn parse_graph(text: &str) -> Result<CaseGraph, DocumentError> {
    parse_case(text, ParseMode::Strict).map(|d| d.graph)
}

fn wire_node(node: &Node, extra: Map<String, Value>) -> WireNode {
    let base = WireNode {
        kind: node.kind_name().to_string(),
        id: node.id().clone(),
        text: None,
        designation: None,
        assumption_justification: None,
        target: None,
        defeater_kind: None,
        status: None,
        residual_justification: None,
        description: None,
        present: None,
        artifact_ref: None,
        case_ref: None,
        imported_assessment: None,
        imported_confidence: None,
        extra,
    };
    match node {
        Node::Claim(c) => WireNode {
            text: Some(c.text.clone()),
            designation: Some(c.designation),
            assumption_justification: c.assumption_justification.clone(),
            ..base
        },
        Node::Defeater(d) => WireNode {
            text: Some(d.text.clone()),
            target: Some(d.target.clone()),
            defeater_kind: Some(d.kind),
            status: Some(d.status),
            residual_justification: d.residual_justification.clone(),
            ..base
        },
        Node::Evidence(e) => WireNode {
            description: Some(e.description.clone()),
            present: Some(e.present),
            artifact_ref: e.artifact_ref.clone(),
            ..base
        },
        Node::External(x) => WireNode {
            case_ref: Some(x.case_ref.clone()),
            imported_assessment: x.imported_assessment,
            imported_confidence: x.imported_confidence,
            ..base
        },
    }
}

/// Rebuilds every object with keys in sorted order.
fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let sorted: BTreeMap<String, Value> = map.into_iter().map(|(k, v)| (k, sort_keys(v))).collect();
            Value::Object(sorted.into_iter().collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

pub fn to_value(doc: &CaseDocument) -> Value {
    let ext = |scope: &str| doc.extensions.get(scope).cloned().unwrap_or_default();
    let g = &doc.graph;
    let wire = WireDocument {
        format_version: FORMAT_VERSION.to_string(),
        case: WireCase {
            name: g.metadata.name.clone(),
            version: g.metadata.version.clone(),
            top: g.top.clone(),
            thresholds: g.metadata.thresholds,
            nodes: g.nodes.values().map(|n| wire_node(n, ext(&format!("node:{}", n.id())))).collect(),
            blocks: g
                .blocks
                .values()
                .map(|b| WireBlock {
                    id: b.id.clone(),
                    kind: b.kind,
                    mode: b.decomposition_mode,
                    parent: b.parent.clone(),
                    subchildren: b.subchildren.clone(),
                    sideclaims: b.sideclaims.clone(),
                    justification: b.justification.clone(),
                    confirmation: b.confirmation.as_ref().map(|c| WireConfirmation {
                        mode: c.mode,
                        qualitative_level: c.qualitative_level,
                        p_e_given_c: c.p_e_given_c,
                        p_e_given_not_c: c.p_e_given_not_c,
                        prior_c: c.prior_c,
                        extra: ext(&format!("confirmation:{}", b.id)),
                    }),
                    extra: ext(&format!("block:{}", b.id)),
                })
                .collect(),
            extra: ext("case"),
        },
        overrides: doc.overrides.clone(),
        notes: doc.notes.clone(),
        extra: ext(""),
    };
    sort_keys(serde_json::to_value(wire).expect("document serializes"))
}

/// Canonical text: sorted keys, nodes and blocks ordered by id, two-space
/// indentation, trailing newline. Byte-identical for equal documents.
pub fn serialize_case(doc: &CaseDocument) -> String {
    serde_json::to_string_pretty(&to_value(doc)).expect("value serializes") + "\n"
}

pub fn serialize_graph(graph: &CaseGraph) -> String {
    serialize_case(&CaseDocument::new(graph.clone()))
}
