//! Assurance-case evaluation: data model, three-valued propagation,
//! confidence, logic-program export and an independent least-model checker.

pub mod asp;
pub mod confidence;
pub mod diff;
pub mod dot;
pub mod fixtures;
pub mod generate;
pub mod io;
pub mod model;
pub mod oracle;
pub mod propagate;
pub mod validate;

pub use model::{nid, ArgumentBlock, BlockKind, CaseGraph, Node, NodeId};
pub use propagate::{assess, case_status, AssessmentMap, Verdict};
