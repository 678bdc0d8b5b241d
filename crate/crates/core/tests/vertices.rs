use std::time::Instant;

use effbell::bounds::{enumerate_vertices, vertex_values, VERTEX_SIGNS};
use num_rational::{BigRational, Rational64};

/// Expected sign of `u / 2αβ` per row, as printed in the reference table.
const TABLE_SIGNS: [i64; 16] = [1, 1, -1, -1, 1, -1, 1, -1, -1, 1, -1, 1, -1, -1, 1, 1];

fn oracle_u(signs: [i8; 4], alpha: Rational64, beta: Rational64) -> Rational64 {
    let s = |i: usize| Rational64::from_integer(i64::from(signs[i]));
    let (x, xp, y, yp) = (s(0) * alpha, s(1) * alpha, s(2) * beta, s(3) * beta);
    x * (y - yp) + xp * (y + yp)
}

fn to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `u` equals the exact vertex value of the given doubles to within half an ulp.
fn correctly_rounded(u: f64, alpha: f64, beta: f64, signs: [i8; 4]) -> bool {
    let r = |v: f64| BigRational::from_float(v).unwrap();
    let s = |i: usize| r(f64::from(signs[i]));
    let (a, b) = (r(alpha), r(beta));
    let exact = s(0) * a.clone() * (s(2) * b.clone() - s(3) * b.clone()) + s(1) * a * (s(2) * b.clone() + s(3) * b);
    let ulp = f64::from_bits(u.abs().to_bits() + 1) - u.abs();
    let err = r(u) - exact;
    let half = r(ulp) / BigRational::from_integer(2.into());
    err <= half.clone() && -err <= half
}

#[test]
fn rows_match_rational_oracle() {
    let start = Instant::now();
    let points = [(1, 1, 1, 1), (3, 5, 1, 2), (1, 3, 2, 7), (0, 1, 1, 1), (1, 4, 3, 4)];
    for (an, ad, bn, bd) in points {
        let alpha = Rational64::new(an, ad);
        let beta = Rational64::new(bn, bd);
        let rows = enumerate_vertices(to_f64(alpha), to_f64(beta)).unwrap();
        assert_eq!(rows.len(), 16);
        let two_ab = Rational64::from_integer(2) * alpha * beta;
        let mut max_abs = 0.0f64;
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row.row_index, k + 1);
            assert_eq!(row.signs, VERTEX_SIGNS[k]);
            let exact = oracle_u(row.signs, alpha, beta);
            assert_eq!(exact, two_ab * TABLE_SIGNS[k], "row {}", k + 1);
            assert_eq!(vertex_values(alpha, beta)[k], exact);
            assert!(correctly_rounded(row.u_value, to_f64(alpha), to_f64(beta), row.signs), "row {}", k + 1);
            max_abs = max_abs.max(row.u_value.abs());
        }
        assert_eq!(max_abs, (to_f64(alpha) * 2.0 * to_f64(beta)).abs());
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn all_sixteen_sign_patterns_present() {
    let mut seen: Vec<[i8; 4]> = VERTEX_SIGNS.to_vec();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 16);
}

#[test]
fn reference_points() {
    let rows = enumerate_vertices(1.0, 1.0).unwrap();
    assert!(rows.iter().all(|r| r.u_value == 2.0 || r.u_value == -2.0));
    let rows = enumerate_vertices(0.6, 0.5).unwrap();
    assert!(rows.iter().all(|r| r.u_value.abs() == 0.6));
    assert!(enumerate_vertices(1.1, 0.5).is_err());
    assert!(enumerate_vertices(0.5, -0.1).is_err());
    assert!(enumerate_vertices(f64::NAN, 0.5).is_err());
}
