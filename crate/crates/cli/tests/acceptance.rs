//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use caseval_core::asp::export_program;
use caseval_core::diff::{reference_engine, run_random};
use caseval_core::fixtures;
use caseval_core::generate::random_case;
use caseval_core::oracle::oracle_assess;
use caseval_core::propagate::{assess, case_status, Verdict};
use caseval_core::validate::validate_structure;
use tempfile::TempDir;

type Check = fn() -> Result<String, String>;

/// Label, arguments, environment, expected exit code, expected output text.
type Example<'a> = (&'a str, Vec<&'a str>, &'a [(&'a str, &'a str)], i32, Option<&'a str>);

fn lightbulb_outcome() -> Result<String, String> {
    let start = Instant::now();
    let g = fixtures::lightbulb();
    let (map, _) = assess(&g).map_err(|e| e.to_string())?;
    let status = case_status(&g, &map);
    let elapsed = start.elapsed();
    let expect = [
        ("E_led evidence claim C_led", "C_led", Verdict::True),
        ("exact defeater D_life", "D_life", Verdict::True),
        ("bulb OK now but wears out F_bulb", "F_bulb", Verdict::False),
        ("disjunctive parent D_wear", "D_wear", Verdict::Unsupported),
        ("sideclaim C_only", "C_only", Verdict::Unsupported),
        ("top G_light", "G_light", Verdict::Unsupported),
    ];
    for (what, id, v) in expect {
        if map.verdict(id) != Some(v) {
            return Err(format!("{what}: expected {v}, got {:?}", map.verdict(id)));
        }
    }
    // D_wear is both the upper disjunctive parent and the first-level defeater.
    if status.is_closed() {
        return Err("case status closed, expected open".into());
    }
    if !validate_structure(&g).is_empty() {
        return Err("fixture has diagnostics".into());
    }
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} nodes exact, open, {elapsed:?}", map.len()))
}

fn eliminative_outcome() -> Result<String, String> {
    let g = fixtures::eliminative_light();
    let (map, _) = assess(&g).map_err(|e| e.to_string())?;
    for id in ["F_bulb", "F_switch", "F_wiring", "X_faulty"] {
        if map.verdict(id) != Some(Verdict::False) {
            return Err(format!("{id}: expected FALSE, got {:?}", map.verdict(id)));
        }
    }
    if map.verdict("G_light") != Some(Verdict::True) {
        return Err(format!("top: {:?}", map.verdict("G_light")));
    }
    if !case_status(&g, &map).is_closed() {
        return Err("case open".into());
    }
    Ok("three disjuncts refuted, top TRUE, closed".into())
}

fn rule_table() -> Result<String, String> {
    common::rule_table().map(|n| format!("{n} combinations, 0 mismatches"))
}

fn denying_antecedent() -> Result<String, String> {
    common::denying_antecedent(1000).map(|(n, f)| format!("{n} graphs, {f} general blocks with a FALSE input, 0 FALSE parents"))
}

fn exact_involution() -> Result<String, String> {
    common::exact_involution(500).map(|[t, f, u]| format!("500 subcases (T {t} / F {f} / U {u})"))
}

fn refuted_defeater() -> Result<String, String> {
    common::refuted_defeater_equivalence(500).map(|(n, injected)| format!("{n} graphs ({injected} with injected defeater)"))
}

fn differential() -> Result<String, String> {
    let start = Instant::now();
    let report = run_random(1000, 42, &common::cfg(), &reference_engine);
    let elapsed = start.elapsed();
    let max_nodes = caseval_core::diff::case_seeds(42, 1000)
        .into_iter()
        .map(|s| random_case(s, &common::cfg()).nodes.len())
        .max()
        .unwrap_or(0);
    if !report.all_agree() {
        let first = &report.counterexamples[0];
        return Err(format!("{} disagreements, first at seed {}", report.counterexamples.len(), first.seed));
    }
    if max_nodes > 60 {
        return Err(format!("generator produced {max_nodes} nodes"));
    }
    if elapsed >= Duration::from_secs(60) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("1000 graphs (max {max_nodes} nodes), 0 disagreements, {elapsed:?}"))
}

fn export_round_trip() -> Result<String, String> {
    for g in [fixtures::lightbulb(), fixtures::eliminative_light()] {
        common::export_round_trip(&g)?;
    }
    for seed in 0..200 {
        let g = random_case(seed, &common::cfg());
        common::export_round_trip(&g).map_err(|e| format!("seed {seed}: {e}"))?;
        export_program(&g).map_err(|e| e.to_string())?;
    }
    Ok("2 fixtures + 200 random graphs".into())
}

fn confidence_arithmetic() -> Result<String, String> {
    let p = common::posterior_reference()?;
    let worst = common::good_measure_antisymmetry(100, 7)?;
    let parents = common::sum_of_doubts(500)?;
    Ok(format!("posterior {p:.12}, antisymmetry max error {worst:.1e}, {parents} parents over 500 trees"))
}

fn cli_contract() -> Result<String, String> {
    use support::*;
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let d = dir.path();
    let lb = lightbulb(d);
    let cyclic = write(d, "cyclic.json", CYCLIC);
    let assumed = write(d, "assumed.json", ASSUMPTION_ONLY);
    let confirmed = write(d, "confirmed.json", CONFIRMED);
    let bad_override = write(d, "bad.json", r#"{"G": 1.5}"#);
    let low = [("CASEVAL_THRESHOLDS", LOW_THRESHOLDS)];

    let cases: Vec<Example> = vec![
        ("validate fixture", vec!["validate", &lb], &[], 0, None),
        ("validate cyclic", vec!["validate", &cyclic], &[], 1, Some("support cycle")),
        ("validate missing", vec!["validate", "missing.json"], &[], 2, None),
        ("assess fixture", vec!["assess", &lb], &[], 1, Some("top G_light: UNSUPPORTED")),
        ("assess assumption", vec!["assess", &assumed], &[], 0, Some("status: closed")),
        ("confidence", vec!["confidence", &confirmed], &low, 0, Some("0.800000")),
        ("confidence open", vec!["confidence", &lb], &[], 0, Some("advisory confidence on open case")),
        ("bad override", vec!["confidence", "--overrides", &bad_override, &confirmed], &low, 2, None),
        ("export asp", vec!["export", "--to", "asp", &lb], &[], 0, None),
        ("export dot", vec!["export", "--to", "dot", &lb], &[], 0, Some("digraph")),
        ("export xyz", vec!["export", "--to", "xyz", &lb], &[], 2, None),
        ("diff fixture", vec!["diff-oracle", &lb], &[], 0, Some("PASS")),
        ("diff random", vec!["diff-oracle", "--random", "1000", "--seed", "42"], &[], 0, Some("1000 agree")),
        ("diff injected", vec!["diff-oracle", "--inject-fault", &lb], &[], 1, Some("minimized")),
    ];
    for (what, args, env, code, needle) in &cases {
        let run = caseval(args, env, d);
        if run.code != *code {
            return Err(format!("{what}: exit {} (expected {code}); {}", run.code, run.stderr.trim()));
        }
        if let Some(n) = needle {
            if !run.stdout.contains(n) {
                return Err(format!("{what}: output lacks `{n}`"));
            }
        }
    }

    let seeded = [
        vec!["fixture", "random", "--seed", "11"],
        vec!["diff-oracle", "--random", "25", "--seed", "5", "--inject-fault", "--format", "structured"],
        vec!["assess", "--explain", "--format", "structured", &lb],
    ];
    for args in &seeded {
        if caseval(args, &[], d).stdout != caseval(args, &[], d).stdout {
            return Err(format!("`{}` is not deterministic", args.join(" ")));
        }
    }
    Ok(format!("{} command examples, {} determinism checks", cases.len(), seeded.len()))
}

fn oracle_on_fixtures() -> Result<(), String> {
    for g in [fixtures::lightbulb(), fixtures::eliminative_light()] {
        let ours = assess(&g).map_err(|e| e.to_string())?.0;
        if oracle_assess(&g).map_err(|e| e.to_string())? != ours {
            return Err("oracle disagrees on a fixture".into());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 10] = [
        ("lightbulb fixture outcome", lightbulb_outcome),
        ("eliminative fixture closes", eliminative_outcome),
        ("rule table coverage", rule_table),
        ("denying-the-antecedent guard", denying_antecedent),
        ("exact-defeater involution", exact_involution),
        ("refuted-defeater equivalence", refuted_defeater),
        ("differential oracle", differential),
        ("export round-trip", export_round_trip),
        ("confidence arithmetic", confidence_arithmetic),
        ("cli contract", cli_contract),
    ];
    let (mut passed, mut failed) = (0, 0);
    if let Err(e) = oracle_on_fixtures() {
        println!("FAIL  oracle sanity: {e}");
        failed += 1;
    }
    for (name, check) in checks {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => {
                passed += 1;
                println!("PASS  {name} ({secs:.2}s): {detail}");
            }
            Err(e) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s): {e}");
            }
        }
    }
    println!("{passed} passed, {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
