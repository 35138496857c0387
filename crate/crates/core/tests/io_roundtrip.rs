mod common;

use common::rng;
use mflq_core::error::Error;
use mflq_core::io::{
    alm_to_json, multinoise_to_json, parse_alm, parse_initial_moments, parse_problem, problem_to_json,
    AnyProblem, InitialMomentsDoc,
};
use mflq_core::random::{random_alm, random_moments, random_multinoise, random_problem};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_problem_roundtrip(seed in any::<u64>(), n in 1usize..4, m in 1usize..4, big_n in 1usize..5) {
        let spec = random_problem(&mut rng(seed), n, m, big_n);
        let text = problem_to_json(&spec);
        let AnyProblem::Scalar(back) = parse_problem(&text).unwrap().value else {
            panic!("wrong schema");
        };
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn multinoise_roundtrip(seed in any::<u64>(), n in 1usize..3, m in 1usize..3, big_n in 1usize..4, p in 1usize..3) {
        let spec = random_multinoise(&mut rng(seed), n, m, big_n, p);
        let text = multinoise_to_json(&spec);
        let AnyProblem::Multi(back) = parse_problem(&text).unwrap().value else {
            panic!("wrong schema");
        };
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn alm_roundtrip(seed in any::<u64>(), m in 1usize..5, big_n in 1usize..5) {
        let alm = random_alm(&mut rng(seed), m, big_n);
        prop_assert_eq!(parse_alm(&alm_to_json(&alm)).unwrap(), alm);
    }

    #[test]
    fn moments_roundtrip(seed in any::<u64>(), n in 1usize..4) {
        let init = random_moments(&mut rng(seed), n);
        let text = serde_json::to_string(&InitialMomentsDoc::from_moments(&init)).unwrap();
        let back = parse_initial_moments(&text).unwrap();
        prop_assert_eq!(back.mean_x, init.mean_x);
        prop_assert_eq!(back.cov_xy, init.cov_xy);
    }
}

#[test]
fn syntax_errors_report_position() {
    let err = parse_problem("{\n  \"horizon\": 1,\n  \"state_dim\": }").unwrap_err();
    let Error::Json(e) = err else { panic!("expected a JSON error") };
    assert_eq!(e.line(), 3);
    assert!(e.column() > 0);
}

#[test]
fn unknown_keys_are_rejected() {
    let spec = random_problem(&mut rng(1), 1, 1, 1);
    let text = problem_to_json(&spec).replacen('{', "{\"extra\": 1,", 1);
    assert!(parse_problem(&text).is_err());
}

#[test]
fn asymmetric_weights_are_symmetrized_with_a_warning() {
    let text = r#"{
        "horizon": 1, "state_dim": 2, "control_dim": 1,
        "A": [[[1.0, 0.0], [0.0, 1.0]]], "B": [[[1.0], [0.0]]], "F": [[[0.0, 0.0], [0.0, 0.0]]],
        "Q": [[[1.0, 0.2], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]]], "R": [[[1.0]]]
    }"#;
    let loaded = parse_problem(text).unwrap();
    assert!(!loaded.warnings.is_empty());
    let q = &loaded.value.base().q[0];
    assert_eq!(q[(0, 1)], 0.1);
    assert_eq!(q[(1, 0)], 0.1);
}
