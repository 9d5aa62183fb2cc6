//! Every registry plan under always-entail and always-contradict NLI, with
//! the expected verdict derived from the raw registry JSON.

use std::time::Instant;

use hatecheck_forge::generation::{generate_candidates, parse_numbered_list, CellKey, Clock, GenerationConfig, MockChatBackend};
use hatecheck_forge::prompt::build_prompt;
use hatecheck_forge::registry::Registry;
use hatecheck_forge::validation::nli::FixedNli;
use hatecheck_forge::validation::{validate_text, HypothesisContext, DEFAULT_THRESHOLD};
use serde_json::Value;

/// Satisfies every rule and transform: two clauses, two sentences, a
/// negation and a quote.
const PERMISSIVE: &str = "I met them in town, and they said \"we hate all of you\". They are not welcome here.";

/// (kept, number of executed tests) from the plan JSON alone.
fn expected(plan: &Value, entail: bool) -> (bool, usize) {
    let tests = plan["tests"].as_array().unwrap();
    for (i, t) in tests.iter().enumerate() {
        let negate = t["negate"].as_bool().unwrap();
        let raw = match t["kind"].as_str().unwrap() {
            "rule" => true,
            "nli" => entail,
            other => panic!("unknown kind {other}"),
        };
        if raw == negate {
            return (false, i + 1);
        }
    }
    (true, tests.len())
}

#[test]
fn truth_table_over_all_plans() {
    let registry = Registry::bundled();
    let raw: Value = serde_json::from_str(Registry::bundled_json()).unwrap();
    let started = Instant::now();
    let mut cells = 0;
    for (f, f_raw) in registry.functionalities().iter().zip(raw["functionalities"].as_array().unwrap()) {
        assert_eq!(f_raw["id"], f.id.to_string());
        for group in registry.applicable_groups(f) {
            let ctx = HypothesisContext::new(group, registry.target_groups());
            for (entail, nli) in [(true, FixedNli::always_entail()), (false, FixedNli::always_contradict())] {
                let v = validate_text(PERMISSIVE, &f.validation_plan, &ctx, &nli, DEFAULT_THRESHOLD).unwrap();
                let (kept, executed) = expected(&f_raw["validation_plan"], entail);
                assert_eq!(v.kept, kept, "{} entail={entail}", f.id);
                assert_eq!(v.results.len(), executed, "{} entail={entail}", f.id);
                assert!(v.results.iter().all(|r| r.transformed_text.is_some()));
                cells += 1;
            }
        }
    }
    assert_eq!(cells, 2 * (20 * 7 + 4));
    assert!(started.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn only_doubly_negated_plan_survives_contradiction() {
    let registry = Registry::bundled();
    let ctx_groups = registry.target_groups();
    let survivors: Vec<String> = registry
        .functionalities()
        .iter()
        .filter(|f| {
            let g = registry.applicable_groups(f)[0];
            let ctx = HypothesisContext::new(g, ctx_groups);
            validate_text(PERMISSIVE, &f.validation_plan, &ctx, &FixedNli::always_contradict(), DEFAULT_THRESHOLD)
                .unwrap()
                .kept
        })
        .map(|f| f.id.to_string())
        .collect();
    assert_eq!(survivors, ["F8"]);
}

#[test]
fn golden_wrapped_completion() {
    let raw = include_str!("fixtures/completion_wrapped.txt");
    let want: Vec<String> = serde_json::from_str(include_str!("fixtures/completion_wrapped.expected.json")).unwrap();
    assert_eq!(parse_numbered_list(raw).unwrap(), want);

    // Through the mock backend the duplicate seventh item is dropped.
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("F2__gay.txt"), raw).unwrap();
    let registry = Registry::bundled();
    let f = registry.functionality("F2".parse().unwrap()).unwrap();
    let cfg = GenerationConfig::default();
    let bundle = build_prompt(f, registry.group("gay"), &cfg).unwrap();
    let cell = CellKey::new(f.id, Some("gay"));
    let cands = generate_candidates(&bundle, &cell, &cfg, &MockChatBackend::new(dir.path()), Clock::epoch()).unwrap();
    assert_eq!(cands.len(), 6);
    assert_eq!(cands.iter().map(|c| c.raw_index).collect::<Vec<_>>(), [0, 1, 2, 3, 4, 5]);
    assert_eq!(cands[5].id, "F2-gay-005");
}
