//! Seeded trial-by-trial Monte Carlo of a CHSH run, including non-detections.
//!
//! # Random streams
//!
//! Trials for each setting pair are cut into fixed blocks of [`BLOCK_TRIALS`]
//! emitted pairs. Block `k` of pair slot `p` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` with stream id `(p << 32) | k`, so the
//! counts depend only on `(source, plan)` and never on how blocks are
//! scheduled across threads. Each trial consumes uniforms in a fixed order:
//! λ (SLHV sources only), then party 1, then party 2.
//!
//! # Quantum source
//!
//! Photon `k` is detected independently with probability `η_k f_k`. Given
//! both detected, `(r, q)` follows `¼[1 + rqF cos 2(a − b)]`; a lone detected
//! photon reads `±1` with probability ½ each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::CountsRecord;
use crate::error::{Error, Result};
use crate::lhv::{Angle, Outcome, Party, ProbTriple, SlhvModel};
use crate::qm::QmParams;
use crate::quad::{PairSlot, SettingsQuad};

pub const BLOCK_TRIALS: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TrialOutcome {
    pub r: Outcome,
    pub q: Outcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub quad: SettingsQuad,
    pub trials_per_pair: u64,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn new(quad: SettingsQuad, trials_per_pair: u64, seed: u64) -> Result<Self> {
        if trials_per_pair == 0 {
            return Err(Error::Domain("trials_per_pair must be at least 1".into()));
        }
        Ok(Self {
            quad,
            trials_per_pair,
            seed,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Source<'a> {
    Lhv(&'a SlhvModel),
    Qm(QmParams),
}

/// RNG for block `block` of pair slot `slot`.
pub fn substream(seed: u64, slot: PairSlot, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((slot.index() as u64) << 32) | block);
    rng
}

fn pick(t: &ProbTriple, u: f64) -> Outcome {
    if u < t.plus {
        Outcome::Plus
    } else if u < t.plus + t.minus {
        Outcome::Minus
    } else {
        Outcome::NoDetect
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn draw_lambda<R: Rng>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// One trial from an SLHV model: `λ ~ ρ`, then each party independently.
pub fn sample_slhv_trial<R: Rng>(
    model: &SlhvModel,
    a: Angle,
    b: Angle,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let cdf = cumulative(model.space().weights());
    let lambda = draw_lambda(&cdf, rng);
    let t1 = model.response(Party::One, a, lambda)?;
    let t2 = model.response(Party::Two, b, lambda)?;
    Ok(TrialOutcome {
        r: pick(&t1, rng.random()),
        q: pick(&t2, rng.random()),
    })
}

/// One emitted pair from the quantum model.
pub fn sample_qm_trial<R: Rng>(p: &QmParams, a: Angle, b: Angle, rng: &mut R) -> TrialOutcome {
    QmPair::new(p, a, b).draw(rng)
}

struct QmPair {
    e1: f64,
    e2: f64,
    /// `P(r = q | both detected) = (1 + F cos 2(a − b)) / 2`.
    same: f64,
}

impl QmPair {
    fn new(p: &QmParams, a: Angle, b: Angle) -> Self {
        Self {
            e1: p.photon_efficiency(Party::One),
            e2: p.photon_efficiency(Party::Two),
            same: 0.5 * (1.0 + p.correlation * a.cos2_diff(b)),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> TrialOutcome {
        let d1 = rng.random::<f64>() < self.e1;
        let d2 = rng.random::<f64>() < self.e2;
        let sign = |u: f64| if u < 0.5 { Outcome::Plus } else { Outcome::Minus };
        match (d1, d2) {
            (true, true) => {
                let r = sign(rng.random());
                let same = rng.random::<f64>() < self.same;
                let q = match (r, same) {
                    (Outcome::Plus, true) | (Outcome::Minus, false) => Outcome::Plus,
                    _ => Outcome::Minus,
                };
                TrialOutcome { r, q }
            }
            (true, false) => TrialOutcome {
                r: sign(rng.random()),
                q: Outcome::NoDetect,
            },
            (false, true) => TrialOutcome {
                r: Outcome::NoDetect,
                q: sign(rng.random()),
            },
            (false, false) => TrialOutcome {
                r: Outcome::NoDetect,
                q: Outcome::NoDetect,
            },
        }
    }
}

/// Per-pair sampling state with responses pre-evaluated for every λ.
enum PairSampler {
    Lhv {
        cdf: Vec<f64>,
        row1: Vec<ProbTriple>,
        row2: Vec<ProbTriple>,
    },
    Qm(QmPair),
}

impl PairSampler {
    fn new(source: &Source<'_>, a: Angle, b: Angle) -> Result<Self> {
        Ok(match source {
            Source::Lhv(m) => PairSampler::Lhv {
                cdf: cumulative(m.space().weights()),
                row1: m.response_row(Party::One, a)?,
                row2: m.response_row(Party::Two, b)?,
            },
            Source::Qm(p) => PairSampler::Qm(QmPair::new(p, a, b)),
        })
    }

    fn run_block(&self, rng: &mut ChaCha8Rng, trials: u64) -> [[u64; 3]; 3] {
        let mut n = [[0u64; 3]; 3];
        for _ in 0..trials {
            let t = match self {
                PairSampler::Lhv { cdf, row1, row2 } => {
                    let l = draw_lambda(cdf, rng);
                    TrialOutcome {
                        r: pick(&row1[l], rng.random()),
                        q: pick(&row2[l], rng.random()),
                    }
                }
                PairSampler::Qm(q) => q.draw(rng),
            };
            n[t.r.index()][t.q.index()] += 1;
        }
        n
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRun {
    pub plan: ExperimentPlan,
    pub block_trials: u64,
    pub rng: &'static str,
    pub records: Vec<CountsRecord>,
}

/// Runs the plan on the global thread pool.
pub fn run_experiment(source: Source<'_>, plan: &ExperimentPlan) -> Result<ExperimentRun> {
    let samplers = PairSlot::ALL
        .iter()
        .map(|&slot| {
            let (a, b) = plan.quad.settings(slot);
            PairSampler::new(&source, a, b)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = plan.trials_per_pair;
    let blocks = n.div_ceil(BLOCK_TRIALS);
    let tasks: Vec<(PairSlot, u64)> = PairSlot::ALL
        .iter()
        .flat_map(|&s| (0..blocks).map(move |k| (s, k)))
        .collect();
    let tallies: Vec<[[u64; 3]; 3]> = tasks
        .par_iter()
        .map(|&(slot, k)| {
            let trials = BLOCK_TRIALS.min(n - k * BLOCK_TRIALS);
            let mut rng = substream(plan.seed, slot, k);
            samplers[slot.index()].run_block(&mut rng, trials)
        })
        .collect();

    let mut records = Vec::with_capacity(4);
    for slot in PairSlot::ALL {
        let mut table = [[0u64; 3]; 3];
        for (task, tally) in tasks.iter().zip(&tallies) {
            if task.0 == slot {
                for i in 0..3 {
                    for j in 0..3 {
                        table[i][j] += tally[i][j];
                    }
                }
            }
        }
        records.push(CountsRecord::new(
            slot,
            Some(plan.quad.settings(slot)),
            table,
            Some(n),
        )?);
    }
    Ok(ExperimentRun {
        plan: *plan,
        block_trials: BLOCK_TRIALS,
        rng: "chacha8, seed_from_u64(seed), stream = (pair_index << 32) | block_index",
        records,
    })
}

/// Runs the plan on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    source: Source<'_>,
    plan: &ExperimentPlan,
    workers: usize,
) -> Result<ExperimentRun> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(source, plan))
}
