use effbell::bounds::EffectiveCorrelationMode;
use effbell::counts::{read_csv, write_csv};
use effbell::estimator::{analyze, epsilon_decomposition, epsilon_terms, qm_epsilon_identity, u_eff_from_counts, EpsilonField};
use effbell::qm::{qm_correlation, qm_ueff, qm_u, QmParams};
use effbell::quad::{chsh_combination, PairSlot};
use effbell::random_models::{random_model, random_quad};
use effbell::sampler::{run_experiment, ExperimentPlan, Source};
use effbell::SettingsQuad;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn u_equals_u_eff_minus_epsilon_on_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for seed in 0..20 {
        let m = random_model(&mut rng, EffectiveCorrelationMode::SolutionIII, 8).unwrap();
        let q = random_quad(&mut rng);
        let run = run_experiment(Source::Lhv(&m), &ExperimentPlan::new(q, 20_000, seed).unwrap()).unwrap();
        let rep = epsilon_decomposition(&run.records).unwrap();
        assert!((rep.u - (rep.u_eff - rep.eps_total)).abs() <= 1e-12, "{rep:?}");
    }
    for (eta, f12) in [(0.1, 0.25), (0.5, 0.5), (1.0, 1.0)] {
        let p = QmParams::symmetric(eta, f12, 0.95).unwrap();
        let run = run_experiment(Source::Qm(p), &ExperimentPlan::new(SettingsQuad::standard(), 200_000, 5).unwrap())
            .unwrap();
        let rep = epsilon_decomposition(&run.records).unwrap();
        assert!((rep.u - (rep.u_eff - rep.eps_total)).abs() <= 1e-12);
        // quantum statistics leave the local interval only when efficiency is high
        assert_eq!(rep.within_interval, p.pair_efficiency() < 1.0);
    }
}

#[test]
fn qm_epsilon_matches_closed_form() {
    let q = SettingsQuad::standard();
    for eta in [0.1, 0.3, 0.5, 0.75, 1.0] {
        for f12 in [0.25, 0.5, 1.0] {
            let p = QmParams::symmetric(eta, f12, 0.95).unwrap();
            let mut e = [0.0; 4];
            for slot in PairSlot::ALL {
                let (a, b) = q.settings(slot);
                e[slot.index()] = qm_correlation(&p, a, b);
            }
            let eps = chsh_combination(epsilon_terms(e, [p.pair_efficiency(); 4]));
            let u_eff = qm_ueff(&p, &q);
            assert!((eps - qm_epsilon_identity(&p, u_eff)).abs() <= 1e-12);
            assert!((qm_u(&p, &q) - (u_eff - eps)).abs() <= 1e-12);
        }
    }
}

#[test]
fn estimate_converges() {
    let p = QmParams::symmetric(0.6, 0.5, 0.9).unwrap();
    let q = SettingsQuad::from_degrees([0.0, 30.0, 15.0, 80.0]).unwrap();
    let exact = qm_ueff(&p, &q);
    let mut prev_err = f64::INFINITY;
    for n in [10_000, 100_000, 1_000_000] {
        let run = run_experiment(Source::Qm(p), &ExperimentPlan::new(q, n, 31).unwrap()).unwrap();
        let est = u_eff_from_counts(&run.records).unwrap();
        assert!((est.u_eff - exact).abs() <= 4.0 * est.stderr);
        assert!(est.stderr < prev_err);
        prev_err = est.stderr;
    }
    assert!(prev_err < 0.01);
}

#[test]
fn csv_round_trip_preserves_analysis() {
    let p = QmParams::symmetric(0.4, 0.5, 0.95).unwrap();
    let run = run_experiment(Source::Qm(p), &ExperimentPlan::new(SettingsQuad::standard(), 50_000, 2).unwrap())
        .unwrap();
    let mut buf = Vec::new();
    write_csv(&run.records, &mut buf).unwrap();
    let back = read_csv(buf.as_slice()).unwrap();
    let a = analyze(&run.records).unwrap();
    let b = analyze(&back).unwrap();
    assert_eq!(a.u_eff, b.u_eff);
    assert_eq!(a.epsilon, b.epsilon);

    // dropping the non-detection rows loses epsilon but keeps U_eff
    let text = String::from_utf8(buf).unwrap();
    let kept: String = text
        .lines()
        .filter(|l| !l.ends_with(",0,0") && !l.contains(",0,") && !l.split(',').nth(1).is_some_and(|r| r == "0"))
        .map(|l| format!("{l}\n"))
        .collect();
    let partial = read_csv(kept.as_bytes()).unwrap();
    let c = analyze(&partial).unwrap();
    assert_eq!(c.u_eff, a.u_eff);
    assert!(matches!(c.epsilon, EpsilonField::Unavailable(_)));
    assert!(c.epsilon_note.unwrap().contains("cannot be determined"));
}
