use caseval_core::fixtures;
use caseval_core::generate::random_case_default;
use caseval_core::io::{parse_case, serialize_graph, ParseMode};
use serde_json::{json, Value};

type Edit = Box<dyn Fn(&mut Value)>;

fn schema() -> jsonschema::Validator {
    let text = include_str!("../../../docs/schema/case.schema.json");
    jsonschema::validator_for(&serde_json::from_str(text).unwrap()).unwrap()
}

fn errors(v: &jsonschema::Validator, doc: &Value) -> Vec<String> {
    v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect()
}

#[test]
fn bundled_and_generated_cases_conform() {
    let v = schema();
    for text in [fixtures::LIGHTBULB, fixtures::ELIMINATIVE_LIGHT] {
        let doc: Value = serde_json::from_str(text).unwrap();
        assert_eq!(errors(&v, &doc), Vec::<String>::new());
    }
    for seed in 0..100 {
        let doc: Value = serde_json::from_str(&serialize_graph(&random_case_default(seed))).unwrap();
        assert_eq!(errors(&v, &doc), Vec::<String>::new(), "seed {seed}");
    }
}

/// Documents the schema refuses are refused by the strict reader too.
#[test]
fn schema_and_reader_reject_the_same_shapes() {
    let v = schema();
    let base: Value = serde_json::from_str(fixtures::LIGHTBULB).unwrap();
    let edits: Vec<Edit> = vec![
        Box::new(|d| d["case"]["nodes"][0]["colour"] = json!("red")),
        Box::new(|d| d["case"]["nodes"][5]["text"] = json!("evidence with text")),
        Box::new(|d| d["case"]["nodes"][0]["present"] = json!(true)),
        Box::new(|d| d["case"]["nodes"][0]["kind"] = json!("goal")),
        Box::new(|d| d["case"]["blocks"][0]["kind"] = json!("induction")),
        Box::new(|d| d["case"]["blocks"][0]["mode"] = json!("exclusive")),
        Box::new(|d| d["case"].as_object_mut().unwrap().remove("top").map(drop).unwrap_or(())),
        Box::new(|d| d["format_version"] = json!("2.0.0")),
        Box::new(|d| d["overrides"] = json!({"G_light": "high"})),
        Box::new(|d| d["case"]["nodes"][9]["status"] = json!("ignored")),
    ];
    for (i, edit) in edits.iter().enumerate() {
        let mut doc = base.clone();
        edit(&mut doc);
        assert!(!v.is_valid(&doc), "edit {i} passes the schema");
        assert!(parse_case(&doc.to_string(), ParseMode::Strict).is_err(), "edit {i} passes the reader");
    }
}
