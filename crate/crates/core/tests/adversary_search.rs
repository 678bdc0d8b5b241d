use effbell::adversary::{objective, search, search_with_workers, AdversaryFamily, FamilyKind, SearchConfig, SOUNDNESS_TOL};
use effbell::bounds::{compute_u_eff, EffectiveCorrelationMode};
use effbell::lhv::validate_solution1;
use effbell::model_file::ModelSpec;
use effbell::SettingsQuad;

fn config(kind: FamilyKind, restarts: usize, max_evals: usize) -> SearchConfig {
    SearchConfig {
        restarts,
        max_evals,
        seed: 2024,
        ..SearchConfig::new(AdversaryFamily::new(kind).with_grid(360), SettingsQuad::standard())
    }
}

#[test]
fn threshold_family_fakes_a_violation() {
    let cfg = config(FamilyKind::ThresholdDetection, 6, 400);
    let res = search(&cfg).unwrap();
    assert!(res.best_abs_u_eff > 2.05, "{}", res.best_abs_u_eff);
    assert!(res.exceeds_bound);
    assert!(!res.assumption_report.solution1.passed);
    assert_eq!(res.soundness.breaches, 0);
}

#[test]
fn solution1_slices_never_exceed_two() {
    for kind in [FamilyKind::ThresholdDetection, FamilyKind::ModulatedP0] {
        let mut cfg = config(kind, 4, 300);
        cfg.family = cfg.family.solution1_slice();
        let res = search(&cfg).unwrap();
        assert!(res.best_abs_u_eff <= 2.0 + SOUNDNESS_TOL, "{kind}: {}", res.best_abs_u_eff);
        assert!(res.assumption_report.solution1.passed);
        assert_eq!(res.soundness.breaches, 0);
        assert_eq!(
            res.soundness.setting_independent_points + res.soundness.degenerate_points,
            res.soundness.evaluated
        );
    }
}

#[test]
fn result_reproduces_from_emitted_model() {
    let cfg = config(FamilyKind::ModulatedP0, 3, 200);
    let res = search(&cfg).unwrap();
    let spec = ModelSpec::family(&cfg.family, &res.best_parameters);
    let model = ModelSpec::parse(&spec.to_json()).unwrap().build().unwrap();
    let rep = compute_u_eff(&model, &cfg.quad, EffectiveCorrelationMode::SolutionI).unwrap();
    assert!((rep.u_eff - res.best_u_eff).abs() <= 1e-12);
    let q = cfg.quad;
    let s1 = validate_solution1(&model, &q.party1_angles(), &q.party2_angles()).unwrap();
    assert_eq!(s1.passed, res.assumption_report.solution1.passed);
}

#[test]
fn deterministic_across_workers() {
    let cfg = config(FamilyKind::ModulatedP0, 5, 150);
    let one = search_with_workers(&cfg, 1).unwrap();
    let four = search_with_workers(&cfg, 4).unwrap();
    assert_eq!(
        serde_json::to_string(&one).unwrap(),
        serde_json::to_string(&four).unwrap()
    );
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(search(&other).unwrap().restarts[0].start, one.restarts[0].start);
}

#[test]
fn history_is_monotone_and_budget_bounded() {
    let cfg = config(FamilyKind::ModulatedP0, 4, 120);
    let res = search(&cfg).unwrap();
    for r in &res.restarts {
        assert!(r.evaluations <= cfg.max_evals);
        assert!(r.improvements.windows(2).all(|w| w[1].1 > w[0].1));
        assert!(r.best_value >= r.start_value);
        let again = objective(&cfg.family, &r.best_parameters, &cfg.quad, cfg.mode).unwrap();
        assert_eq!(again.value, r.best_value);
    }
    let best = res.restarts.iter().map(|r| r.best_value).fold(f64::MIN, f64::max);
    assert_eq!(best, res.best_abs_u_eff);
}
