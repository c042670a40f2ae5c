use rho_core::repro::{
    obstruction_eps_bound, radius_property_suite, repro_class_monotonicity, repro_non_similarity,
    repro_scalar_boundary, repro_strict_inclusion, repro_von_neumann, ExperimentReport,
};
use rho_core::Error;

fn assert_passed(rep: &ExperimentReport) {
    let failed: Vec<_> = rep.failed_claims().map(|c| c.description.clone()).collect();
    assert!(rep.passed && failed.is_empty(), "{}: {failed:?}", rep.name);
}

fn stable_json(rep: &ExperimentReport) -> String {
    serde_json::to_string(&rep.without_timing()).unwrap()
}

#[test]
fn non_similarity_across_rho() {
    for rho in [1.5, 2.0, 3.0] {
        assert_passed(&repro_non_similarity(rho, None).unwrap());
    }
}

#[test]
fn non_similarity_rejects_large_eps() {
    let bound = obstruction_eps_bound(2.0).unwrap();
    assert!((bound - 0.2360679).abs() < 1e-6);
    assert!(matches!(repro_non_similarity(2.0, Some(bound)), Err(Error::Parameter(_))));
    assert!(matches!(repro_non_similarity(2.0, Some(-0.1)), Err(Error::Parameter(_))));
    assert!(matches!(repro_non_similarity(0.5, None), Err(Error::Parameter(_))));
}

#[test]
fn strict_inclusion_across_rho() {
    for rho in [1.5, 2.0, 3.0] {
        let rep = repro_strict_inclusion(rho).unwrap();
        assert_passed(&rep);
        assert_eq!(rep.claims.len(), 8);
    }
}

#[test]
fn scalar_boundary_cases() {
    for (rho, eps) in [(0.9, 0.1), (0.5, 0.25), (0.3, 1e-3)] {
        let rep = repro_scalar_boundary(rho, eps).unwrap();
        assert_passed(&rep);
    }
    assert!(repro_scalar_boundary(0.5, 0.6).is_err());
    assert!(repro_scalar_boundary(1.5, 1e-3).is_err());
}

#[test]
fn reports_are_deterministic() {
    let a = repro_von_neumann(1.5, 30, 4).unwrap();
    let b = repro_von_neumann(1.5, 30, 4).unwrap();
    assert_eq!(stable_json(&a), stable_json(&b));
    assert_passed(&a);
    let a = repro_non_similarity(2.0, Some(0.1)).unwrap();
    let b = repro_non_similarity(2.0, Some(0.1)).unwrap();
    assert_eq!(stable_json(&a), stable_json(&b));
}

#[test]
fn property_suite_independent_of_threads() {
    let seeds = [0, 1, 2];
    let rhos = [0.5, 1.0, 2.0];
    let one = radius_property_suite(&seeds, &[2, 3], &rhos, 1).unwrap();
    let two = radius_property_suite(&seeds, &[2, 3], &rhos, 2).unwrap();
    assert_passed(&one);
    assert_eq!(stable_json(&one), stable_json(&two));
}

#[test]
fn report_json_round_trip() {
    let rep = repro_scalar_boundary(0.5, 0.25).unwrap();
    let text = serde_json::to_string_pretty(&rep).unwrap();
    let back: ExperimentReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, rep);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["name"], "scalar-boundary");
    assert!(v["claims"][0]["provenance"].is_string());
}

#[test]
fn class_monotonicity_single_and_pair() {
    assert_passed(&repro_class_monotonicity(1, &[0.5, 1.0, 2.0, 3.0], 10, 1).unwrap());
    assert_passed(&repro_class_monotonicity(2, &[1.0, 2.0], 3, 1).unwrap());
}
