use effbell::lhv::{Angle, HiddenVariableSpace, Outcome, Party, ProbTriple, ResponseFunction, SlhvModel};
use proptest::prelude::*;

fn malus_split(amp: f64, phase: f64, eff_plus: f64, eff_minus: f64) -> ResponseFunction {
    ResponseFunction::split(
        move |a, l| {
            let c = 0.5 * (1.0 + amp * (2.0 * (a.radians() - l - phase)).cos());
            [c, 1.0 - c]
        },
        move |_, _, o| if o == Outcome::Plus { eff_plus } else { eff_minus },
    )
}

fn model(n: usize, p: (f64, f64, f64, f64), q: (f64, f64, f64, f64)) -> SlhvModel {
    SlhvModel::new(
        HiddenVariableSpace::uniform_grid(n).unwrap(),
        malus_split(p.0, p.1, p.2, p.3),
        malus_split(q.0, q.1, q.2, q.3),
    )
    .unwrap()
}

fn params() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0..=1.0f64, 0.0..3.2f64, 0.0..=1.0f64, 0.0..=1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn responses_are_normalized(n in 1usize..12, p in params(), q in params(), deg in -720.0..720.0f64) {
        let m = model(n, p, q);
        let a = Angle::from_degrees(deg).unwrap();
        for party in Party::BOTH {
            for l in 0..n {
                let t = m.response(party, a, l).unwrap();
                prop_assert!((t.plus + t.minus + t.zero - 1.0).abs() <= 1e-12);
                prop_assert!(t.plus >= 0.0 && t.minus >= 0.0 && t.zero >= -1e-12);
                // |ε| ≤ α
                prop_assert!(t.average().abs() <= m.alpha(party, a, l).unwrap() + 1e-15);
            }
        }
    }

    #[test]
    fn joint_probabilities_factorize(n in 1usize..8, p in params(), q in params(), da in 0.0..180.0f64, db in 0.0..180.0f64) {
        let m = model(n, p, q);
        let (a, b) = (Angle::from_degrees(da).unwrap(), Angle::from_degrees(db).unwrap());
        for l in 0..n {
            let t1 = m.response(Party::One, a, l).unwrap();
            let t2 = m.response(Party::Two, b, l).unwrap();
            let table = m.joint_table(a, b, l).unwrap();
            let mut total = 0.0;
            for r in Outcome::ALL {
                for s in Outcome::ALL {
                    let j = m.joint_prob(a, b, l, r, s).unwrap();
                    prop_assert_eq!(j, t1.get(r) * t2.get(s));
                    prop_assert_eq!(table[r.index()][s.index()], j);
                    total += j;
                }
            }
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn split_form_is_consistent(p in params(), deg in 0.0..180.0f64) {
        let m = model(5, p, p);
        let a = Angle::from_degrees(deg).unwrap();
        for (l, lam) in m.space().points().iter().enumerate() {
            let t = m.response(Party::One, a, l).unwrap();
            let ideal = 0.5 * (1.0 + p.0 * (2.0 * (a.radians() - lam - p.1)).cos());
            prop_assert!((t.plus - ideal * p.2).abs() < 1e-15);
            prop_assert!((t.minus - (1.0 - ideal) * p.3).abs() < 1e-15);
            prop_assert!((t.zero - (1.0 - t.plus - t.minus)).abs() < 1e-15);
        }
    }

    #[test]
    fn angles_reduce_modulo_pi(deg in -1e4..1e4f64, k in -20i32..20) {
        let a = Angle::from_degrees(deg).unwrap();
        let b = Angle::from_degrees(deg + 180.0 * f64::from(k)).unwrap();
        prop_assert!(a.distance(b) < 1e-9);
        prop_assert!((0.0..std::f64::consts::PI).contains(&a.radians()));
    }

    #[test]
    fn triples_outside_simplex_rejected(x in -1.0..2.0f64, y in -1.0..2.0f64) {
        let z = 1.0 - x - y;
        let ok = ProbTriple::new(x, y, z).is_ok();
        prop_assert_eq!(ok, x >= -1e-12 && y >= -1e-12 && z >= -1e-12 && x <= 1.0 + 1e-12 && y <= 1.0 + 1e-12 && z <= 1.0 + 1e-12);
    }
}

#[test]
fn invalid_formula_values_are_reported() {
    let m = SlhvModel::new(
        HiddenVariableSpace::uniform_grid(4).unwrap(),
        ResponseFunction::formula(|_, l| [0.5 + l, 0.5, -l]),
        ResponseFunction::formula(|_, _| [1.0, 0.0, 0.0]),
    )
    .unwrap();
    let a = Angle::from_degrees(0.0).unwrap();
    assert!(m.response(Party::One, a, 0).is_ok());
    let err = m.response(Party::One, a, 2).unwrap_err();
    assert!(err.to_string().contains("party 1"), "{err}");
    assert!(m.response(Party::One, a, 4).is_err());
}
