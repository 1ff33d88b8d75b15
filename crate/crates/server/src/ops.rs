//! Edit operations on a case document. Operations are applied to the
//! document's JSON form and the result is re-read, so every edit goes through
//! the same parser and validator as a file on disk.

use caseval_core::io::{parse_case, to_value, CaseDocument, ParseMode};
use caseval_core::model::DefeaterStatus;
use caseval_core::validate::{has_errors, validate_structure, Diagnostic};
use caseval_core::NodeId;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Op {
    /// Adds a node given in the document's node format.
    AddNode { node: Value },
    /// Adds an argument block given in the document's block format.
    AddBlock { block: Value },
    /// Removes a node together with the block supporting it, or a block.
    RemoveNode { id: NodeId },
    SetDefeaterStatus {
        id: NodeId,
        status: DefeaterStatus,
        #[serde(default)]
        residual_justification: Option<String>,
    },
    SetEvidencePresent { id: NodeId, present: bool },
    /// Replaces a block's confirmation annotation; `null` removes it.
    SetConfirmation { block: NodeId, confirmation: Option<Value> },
    /// Sets a confidence override; `null` removes it.
    SetOverride { id: NodeId, value: Option<f64> },
    RetargetDefeater { id: NodeId, target: NodeId },
}

/// Why a batch of operations was refused.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub error: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

impl Rejection {
    fn new(error: impl Into<String>) -> Self {
        Rejection { error: error.into(), diagnostics: Vec::new() }
    }
}

fn array<'a>(doc: &'a mut Value, key: &str) -> &'a mut Vec<Value> {
    let case = doc["case"].as_object_mut().expect("document has a case object");
    case.entry(key).or_insert_with(|| Value::Array(Vec::new())).as_array_mut().expect("array field")
}

fn has_id(v: &Value, id: &str) -> bool {
    v.get("id").and_then(Value::as_str) == Some(id)
}

fn node_mut<'a>(doc: &'a mut Value, id: &NodeId, kind: &str) -> Result<&'a mut Map<String, Value>, Rejection> {
    let node = array(doc, "nodes")
        .iter_mut()
        .find(|n| has_id(n, id.as_str()))
        .ok_or_else(|| Rejection::new(format!("no node `{id}`")))?;
    let found = node.get("kind").and_then(Value::as_str).unwrap_or_default().to_string();
    if found != kind {
        return Err(Rejection::new(format!("`{id}` has kind {found}, expected {kind}")));
    }
    Ok(node.as_object_mut().expect("node is an object"))
}

fn apply_one(doc: &mut Value, op: &Op) -> Result<(), Rejection> {
    match op {
        Op::AddNode { node } => {
            if !node.is_object() {
                return Err(Rejection::new("add_node needs a node object"));
            }
            array(doc, "nodes").push(node.clone());
        }
        Op::AddBlock { block } => {
            if !block.is_object() {
                return Err(Rejection::new("add_block needs a block object"));
            }
            array(doc, "blocks").push(block.clone());
        }
        Op::RemoveNode { id } => {
            let nodes = array(doc, "nodes");
            let before = nodes.len();
            nodes.retain(|n| !has_id(n, id.as_str()));
            let removed_node = nodes.len() < before;
            let blocks = array(doc, "blocks");
            let before = blocks.len();
            blocks.retain(|b| !has_id(b, id.as_str()) && !(removed_node && b.get("parent").and_then(Value::as_str) == Some(id.as_str())));
            if !removed_node && blocks.len() == before {
                return Err(Rejection::new(format!("no node or block `{id}`")));
            }
        }
        Op::SetDefeaterStatus { id, status, residual_justification } => {
            let node = node_mut(doc, id, "defeater")?;
            node.insert("status".into(), serde_json::to_value(status).expect("status serializes"));
            match residual_justification {
                Some(j) => {
                    node.insert("residual_justification".into(), Value::String(j.clone()));
                }
                None if *status != DefeaterStatus::ResidualRisk => {
                    node.remove("residual_justification");
                }
                None => {}
            }
        }
        Op::SetEvidencePresent { id, present } => {
            node_mut(doc, id, "evidence")?.insert("present".into(), Value::Bool(*present));
        }
        Op::SetConfirmation { block, confirmation } => {
            let b = array(doc, "blocks")
                .iter_mut()
                .find(|b| has_id(b, block.as_str()))
                .and_then(Value::as_object_mut)
                .ok_or_else(|| Rejection::new(format!("no block `{block}`")))?;
            match confirmation {
                Some(c) => b.insert("confirmation".into(), c.clone()),
                None => b.remove("confirmation"),
            };
        }
        Op::SetOverride { id, value } => {
            let overrides = doc
                .as_object_mut()
                .expect("document is an object")
                .entry("overrides")
                .or_insert_with(|| Value::Object(Map::new()))
                .as_object_mut()
                .expect("overrides is an object");
            match value {
                Some(v) => overrides.insert(id.to_string(), Value::from(*v)),
                None => overrides.remove(id.as_str()),
            };
        }
        Op::RetargetDefeater { id, target } => {
            node_mut(doc, id, "defeater")?.insert("target".into(), Value::String(target.to_string()));
        }
    }
    Ok(())
}

/// Applies every operation or none. The result must parse and be free of
/// structural errors; warnings are allowed.
pub fn apply_ops(doc: &CaseDocument, ops: &[Op]) -> Result<CaseDocument, Rejection> {
    let mut value = to_value(doc);
    for (i, op) in ops.iter().enumerate() {
        apply_one(&mut value, op).map_err(|mut r| {
            r.error = format!("op {i}: {}", r.error);
            r
        })?;
    }
    let mode = if doc.extensions.is_empty() { ParseMode::Strict } else { ParseMode::Lenient };
    let text = serde_json::to_string_pretty(&value).expect("value serializes");
    // Line numbers would point into this function's own rendering, so report
    // the document path only.
    let next = parse_case(&text, mode).map_err(|e| match e.path.as_deref() {
        Some(p) if !p.is_empty() && p != "." => Rejection::new(format!("at {p}: {}", e.message)),
        _ => Rejection::new(e.message),
    })?;
    for (id, v) in &next.overrides {
        if !(0.0..=1.0).contains(v) {
            return Err(Rejection::new(format!("override for `{id}` is {v}, not within [0, 1]")));
        }
        if !next.graph.nodes.contains_key(id) {
            return Err(Rejection::new(format!("override names unknown node `{id}`")));
        }
    }
    let diagnostics = validate_structure(&next.graph);
    if has_errors(&diagnostics) {
        return Err(Rejection { error: "case is not well formed".into(), diagnostics });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use caseval_core::fixtures;
    use caseval_core::model::Node;
    use serde_json::json;

    fn lightbulb() -> CaseDocument {
        fixtures::document(fixtures::LIGHTBULB)
    }

    fn ops(v: Value) -> Vec<Op> {
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn parses_op_envelopes() {
        let parsed = ops(json!([
            {"op": "set_defeater_status", "id": "D_wear", "status": "addressed"},
            {"op": "set_override", "id": "G_light", "value": null}
        ]));
        assert_eq!(parsed[1], Op::SetOverride { id: caseval_core::nid("G_light"), value: None });
        assert!(serde_json::from_value::<Op>(json!({"op": "explode"})).is_err());
        assert!(serde_json::from_value::<Op>(json!({"op": "remove_node", "id": "x", "extra": 1})).is_err());
    }

    #[test]
    fn sets_evidence_flag() {
        let doc = apply_ops(&lightbulb(), &ops(json!([{"op": "set_evidence_present", "id": "E_led", "present": false}]))).unwrap();
        let Some(Node::Evidence(e)) = doc.graph.nodes.get("E_led") else { panic!() };
        assert!(!e.present);
    }

    #[test]
    fn add_then_remove_is_identity() {
        let start = lightbulb();
        let added = apply_ops(
            &start,
            &ops(json!([{"op": "add_node", "node": {"kind": "defeater", "id": "D_new", "text": "Doubt", "target": "G_light"}}])),
        )
        .unwrap();
        assert!(added.graph.nodes.contains_key("D_new"));
        let removed = apply_ops(&added, &ops(json!([{"op": "remove_node", "id": "D_new"}]))).unwrap();
        assert_eq!(removed, start);
    }

    #[test]
    fn rejects_structural_breakage() {
        let err = apply_ops(&lightbulb(), &ops(json!([{"op": "retarget_defeater", "id": "D_wear", "target": "nowhere"}]))).unwrap_err();
        assert!(err.diagnostics.iter().any(|d| d.message.contains("dangling reference")), "{err:?}");

        let err = apply_ops(&lightbulb(), &ops(json!([{"op": "set_evidence_present", "id": "C_led", "present": false}]))).unwrap_err();
        assert_eq!(err.error, "op 0: `C_led` has kind claim, expected evidence");

        let err = apply_ops(&lightbulb(), &ops(json!([{"op": "add_node", "node": {"kind": "claim", "id": "X", "text": "x", "colour": "red"}}]))).unwrap_err();
        assert!(err.error.contains("colour") && !err.error.contains("line"), "{}", err.error);

        let err = apply_ops(&lightbulb(), &ops(json!([{"op": "set_override", "id": "G_light", "value": 2.0}]))).unwrap_err();
        assert!(err.error.contains("not within"));
    }

    #[test]
    fn batch_is_all_or_nothing() {
        let start = lightbulb();
        let err = apply_ops(
            &start,
            &ops(json!([
                {"op": "set_defeater_status", "id": "D_wear", "status": "addressed"},
                {"op": "remove_node", "id": "nothing"}
            ])),
        );
        assert!(err.is_err());
        assert_eq!(start, lightbulb());
    }
}
