//! Bundled example cases.

use crate::io::{parse_case, CaseDocument, ParseMode};
use crate::model::CaseGraph;

/// Light-bulb case with a conjunctive top argument, an open exploratory
/// defeater on its sideclaim and an exact defeater refuting one disjunct.
pub const LIGHTBULB: &str = include_str!("../fixtures/lightbulb.json");

/// Light-bulb case argued by elimination: every way the light could be
/// faulty is refuted.
pub const ELIMINATIVE_LIGHT: &str = include_str!("../fixtures/eliminative_light.json");

pub fn document(text: &str) -> CaseDocument {
    parse_case(text, ParseMode::Strict).expect("bundled fixture parses")
}

pub fn lightbulb() -> CaseGraph {
    document(LIGHTBULB).graph
}

pub fn eliminative_light() -> CaseGraph {
    document(ELIMINATIVE_LIGHT).graph
}

/// Bundled fixture by name.
pub fn by_name(name: &str) -> Option<&'static str> {
    match name {
        "lightbulb" => Some(LIGHTBULB),
        "eliminative" | "eliminative_light" => Some(ELIMINATIVE_LIGHT),
        _ => None,
    }
}
