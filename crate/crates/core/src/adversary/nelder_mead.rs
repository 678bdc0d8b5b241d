//! Nelder–Mead simplex search with box projection.
//!
//! Every trial point is clipped into the box before evaluation. When the
//! simplex collapses before the budget is spent, a fresh simplex is built
//! around the incumbent; the run stops once such a rebuild fails to improve.

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Spread of function values across the simplex treated as converged.
    pub ftol: f64,
    /// Simplex diameter (in box-width units) treated as converged.
    pub xtol: f64,
    /// Initial step as a fraction of each box width.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            ftol: 1e-12,
            xtol: 1e-9,
            initial_step: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
    /// `(evaluation index, best value so far)` at every improvement.
    pub improvements: Vec<(usize, f64)>,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

struct Budgeted<'a, F> {
    f: &'a mut F,
    lower: &'a [f64],
    upper: &'a [f64],
    evals: usize,
    max_evals: usize,
    best: (Vec<f64>, f64),
    improvements: Vec<(usize, f64)>,
}

impl<F: FnMut(&[f64]) -> f64> Budgeted<'_, F> {
    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }

    fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(self.lower).zip(self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn eval(&mut self, mut x: Vec<f64>) -> (Vec<f64>, f64) {
        self.project(&mut x);
        let mut v = (self.f)(&x);
        if v.is_nan() {
            v = f64::INFINITY;
        }
        self.evals += 1;
        if v < self.best.1 {
            self.best = (x.clone(), v);
            self.improvements.push((self.evals, v));
        }
        (x, v)
    }
}

fn diameter(simplex: &[(Vec<f64>, f64)], widths: &[f64]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(x, _)| {
            x.iter()
                .zip(best)
                .zip(widths)
                .map(|((a, b), w)| if *w > 0.0 { (a - b).abs() / w } else { 0.0 })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Minimizes `f` over `[lower, upper]` starting from `x0`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: NelderMeadOptions,
) -> NelderMeadOutcome {
    let n = x0.len();
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);
    let widths: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| u - l).collect();
    let mut st = Budgeted {
        f: &mut f,
        lower,
        upper,
        evals: 0,
        max_evals: opts.max_evals.max(1),
        best: (x0.to_vec(), f64::INFINITY),
        improvements: Vec::new(),
    };
    st.eval(x0.to_vec());
    let mut iterations = 0;
    let mut converged = n == 0;

    while n > 0 && !st.exhausted() {
        let before = st.best.1;
        let centre = st.best.0.clone();
        let mut simplex = vec![(centre.clone(), before)];
        for i in 0..n {
            if st.exhausted() {
                break;
            }
            let mut x = centre.clone();
            let step = opts.initial_step * widths[i];
            x[i] = if x[i] + step <= upper[i] { x[i] + step } else { x[i] - step };
            simplex.push(st.eval(x));
        }
        if simplex.len() < n + 1 {
            break;
        }

        converged = false;
        while !st.exhausted() {
            iterations += 1;
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            if spread.abs() <= opts.ftol && diameter(&simplex, &widths) <= opts.xtol
                || diameter(&simplex, &widths) <= opts.xtol * 1e-3
            {
                converged = true;
                break;
            }
            let mut c = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (ci, xi) in c.iter_mut().zip(x) {
                    *ci += xi / n as f64;
                }
            }
            let towards = |from: &[f64], coef: f64| -> Vec<f64> {
                c.iter().zip(from).map(|(ci, fi)| ci + coef * (ci - fi)).collect()
            };
            let worst = simplex[n].clone();
            let reflected = st.eval(towards(&worst.0, REFLECT));
            if reflected.1 < simplex[0].1 {
                if st.exhausted() {
                    simplex[n] = reflected;
                    break;
                }
                let expanded = st.eval(towards(&worst.0, EXPAND));
                simplex[n] = if expanded.1 < reflected.1 { expanded } else { reflected };
                continue;
            }
            if reflected.1 < simplex[n - 1].1 {
                simplex[n] = reflected;
                continue;
            }
            if st.exhausted() {
                break;
            }
            let contracted = if reflected.1 < worst.1 {
                st.eval(towards(&worst.0, CONTRACT))
            } else {
                st.eval(towards(&worst.0, -CONTRACT))
            };
            if contracted.1 < worst.1.min(reflected.1) {
                simplex[n] = contracted;
                continue;
            }
            let best = simplex[0].0.clone();
            for v in simplex.iter_mut().skip(1) {
                if st.exhausted() {
                    break;
                }
                let x: Vec<f64> = best
                    .iter()
                    .zip(&v.0)
                    .map(|(b, xi)| b + SHRINK * (xi - b))
                    .collect();
                *v = st.eval(x);
            }
        }
        if !(st.best.1 < before) {
            break;
        }
    }

    NelderMeadOutcome {
        x: st.best.0,
        f: st.best.1,
        evals: st.evals,
        iterations,
        converged,
        improvements: st.improvements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let out = minimize(
            |x| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.2).powi(2),
            &[0.9, 0.9],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            NelderMeadOptions::default(),
        );
        assert!((out.x[0] - 0.3).abs() < 1e-4, "{out:?}");
        assert!((out.x[1] + 0.2).abs() < 1e-4, "{out:?}");
        assert!(out.evals <= 2000);
    }

    #[test]
    fn optimum_on_boundary() {
        let out = minimize(
            |x| -(x[0] + x[1]),
            &[0.1, 0.2],
            &[0.0, 0.0],
            &[1.0, 0.5],
            NelderMeadOptions::default(),
        );
        assert!((out.f + 1.5).abs() < 1e-6, "{out:?}");
    }

    #[test]
    fn rosenbrock() {
        let out = minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &[-2.0, -2.0],
            &[2.0, 2.0],
            NelderMeadOptions {
                max_evals: 5000,
                ..Default::default()
            },
        );
        assert!(out.f < 1e-6, "{out:?}");
    }

    #[test]
    fn budget_respected_and_history_monotone() {
        let mut calls = 0;
        let out = minimize(
            |x| {
                calls += 1;
                x.iter().map(|v| (v * 7.0).sin()).sum()
            },
            &[0.0; 3],
            &[-3.0; 3],
            &[3.0; 3],
            NelderMeadOptions {
                max_evals: 50,
                ..Default::default()
            },
        );
        assert_eq!(out.evals, calls);
        assert!(out.evals <= 50);
        assert!(out.improvements.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn zero_dimensional() {
        let out = minimize(|_| 4.0, &[], &[], &[], NelderMeadOptions::default());
        assert_eq!((out.f, out.evals), (4.0, 1));
        assert!(out.converged);
    }
}
