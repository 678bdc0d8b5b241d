//! Fixed-order pairwise summation. The split points depend only on the slice
//! length, so results are bit-stable for a given input order.

const LEAF: usize = 32;

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// `Σᵢ wᵢ·f(i)` with pairwise summation.
pub fn weighted_sum<F: FnMut(usize) -> f64>(weights: &[f64], mut f: F) -> f64 {
    let terms: Vec<f64> = weights.iter().enumerate().map(|(i, w)| w * f(i)).collect();
    pairwise_sum(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_small_and_large() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
        let tenth = vec![0.1; 1_000_000];
        assert!((pairwise_sum(&tenth) - 100_000.0).abs() < 1e-9);
    }
}
