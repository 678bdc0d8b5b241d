//! Self-contained run descriptions and their execution.
//!
//! A [`Manifest`] holds everything a command needs, including model specs and
//! input CSV text, so replaying it needs no other files. Worker counts and
//! output locations are deliberately excluded: they never change the bytes.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use effbell::adversary::{search_with_workers, SearchConfig};
use effbell::bounds::{compute_u_eff, lambda_terms, EffectiveCorrelationMode, Verdict};
use effbell::counts::{read_csv, write_csv};
use effbell::estimator::{analyze, qm_epsilon_identity, u_eff_from_counts};
use effbell::lhv::{Angle, Outcome};
use effbell::model_file::ModelSpec;
use effbell::qm::{
    qm_appendix_bound, qm_correlation, qm_effective_correlation, qm_joint_prob, qm_u, qm_ueff,
    violation_lhs, QmParams,
};
use effbell::quad::PairSlot;
use effbell::sampler::{run_experiment, run_experiment_with_workers, ExperimentPlan, Source};
use effbell::SettingsQuad;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInput {
    /// As given on the command line; informational only.
    pub path: String,
    pub spec: ModelSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceInput {
    Qm { params: QmParams },
    Model { model: ModelInput },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountsInput {
    pub path: String,
    pub csv: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    VerifyBounds {
        model: ModelInput,
        quad: SettingsQuad,
        mode: EffectiveCorrelationMode,
        per_lambda: bool,
    },
    Simulate {
        source: SourceInput,
        quad: SettingsQuad,
        trials: u64,
        seed: u64,
    },
    Analyze {
        counts: CountsInput,
        totals: Option<Vec<u64>>,
    },
    QmPredict {
        params: QmParams,
        quad: SettingsQuad,
    },
    AdversarySearch {
        search: SearchConfig,
    },
    Sweep {
        eta: Vec<f64>,
        f12: Vec<f64>,
        #[serde(rename = "F")]
        correlation: Vec<f64>,
        quad: SettingsQuad,
        trials: Option<u64>,
        min_coincidences: u64,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub format: Format,
    pub run: RunConfig,
}

impl Manifest {
    pub fn new(run: RunConfig, format: Format) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: "effbell".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            format,
            run,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).context("malformed manifest")?;
        if m.schema_version != SCHEMA_VERSION {
            bail!("manifest schema_version {} unsupported", m.schema_version);
        }
        Ok(m)
    }

    pub fn command(&self) -> &'static str {
        match self.run {
            RunConfig::VerifyBounds { .. } => "verify-bounds",
            RunConfig::Simulate { .. } => "simulate",
            RunConfig::Analyze { .. } => "analyze",
            RunConfig::QmPredict { .. } => "qm-predict",
            RunConfig::AdversarySearch { .. } => "adversary-search",
            RunConfig::Sweep { .. } => "sweep",
        }
    }
}

pub struct Output {
    pub body: String,
    pub exit_code: i32,
    /// One-line summary for `-v`.
    pub summary: String,
    /// Model file for the best adversary point, if any.
    pub emitted_model: Option<ModelSpec>,
}

impl Output {
    fn new(body: String, summary: String) -> Self {
        Self {
            body,
            exit_code: 0,
            summary,
            emitted_model: None,
        }
    }
}

fn wrap_json<T: Serialize>(manifest: &Manifest, result: &T) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "manifest": manifest,
        "result": result,
    });
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}

fn json_only(manifest: &Manifest) -> Result<()> {
    if manifest.format == Format::Csv {
        bail!("{} has no CSV output; use --format json", manifest.command());
    }
    Ok(())
}

pub fn execute(manifest: &Manifest, workers: Option<usize>) -> Result<Output> {
    match &manifest.run {
        RunConfig::VerifyBounds {
            model,
            quad,
            mode,
            per_lambda,
        } => verify_bounds(manifest, model, quad, *mode, *per_lambda),
        RunConfig::Simulate {
            source,
            quad,
            trials,
            seed,
        } => simulate(manifest, source, quad, *trials, *seed, workers),
        RunConfig::Analyze { counts, totals } => analyze_counts(manifest, counts, totals.as_deref()),
        RunConfig::QmPredict { params, quad } => qm_predict(manifest, params, quad),
        RunConfig::AdversarySearch { search } => adversary(manifest, search, workers),
        RunConfig::Sweep { .. } => sweep(manifest, workers),
    }
}

fn verify_bounds(
    manifest: &Manifest,
    model: &ModelInput,
    quad: &SettingsQuad,
    mode: EffectiveCorrelationMode,
    per_lambda: bool,
) -> Result<Output> {
    let m = model
        .spec
        .build()
        .with_context(|| format!("model {}", model.path))?;
    let mut rep = compute_u_eff(&m, quad, mode)?;
    if per_lambda {
        rep = rep.with_per_lambda(lambda_terms(&m, quad)?);
    }
    let body = match manifest.format {
        Format::Json => wrap_json(manifest, &rep),
        Format::Csv => {
            let mut s = String::from("pair_label,a_deg,b_deg,E,coincidence_sum,E_eff\n");
            for p in &rep.pairs {
                writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    p.pair.label(),
                    p.a.degrees(),
                    p.b.degrees(),
                    p.correlation,
                    p.coincidence_sum,
                    p.effective_correlation
                )?;
            }
            s
        }
    };
    let mut out = Output::new(
        body,
        format!("U_eff = {} ({}): {}", rep.u_eff, mode.name(), rep.verdict_text),
    );
    if rep.verdict == Verdict::TheoremBreach {
        out.exit_code = 2;
    }
    Ok(out)
}

fn simulate(
    manifest: &Manifest,
    source: &SourceInput,
    quad: &SettingsQuad,
    trials: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<Output> {
    let plan = ExperimentPlan::new(*quad, trials, seed)?;
    let model;
    let src = match source {
        SourceInput::Qm { params } => Source::Qm(*params),
        SourceInput::Model { model: input } => {
            model = input
                .spec
                .build()
                .with_context(|| format!("model {}", input.path))?;
            Source::Lhv(&model)
        }
    };
    let run = match workers {
        Some(w) => run_experiment_with_workers(src, &plan, w)?,
        None => run_experiment(src, &plan)?,
    };
    let body = match manifest.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&run.records, &mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        Format::Json => wrap_json(manifest, &run),
    };
    let coinc: u64 = run.records.iter().map(|r| r.coincidences()).sum();
    Ok(Output::new(
        body,
        format!("{} pairs per setting, {coinc} coincidences in total", trials),
    ))
}

fn analyze_counts(manifest: &Manifest, counts: &CountsInput, totals: Option<&[u64]>) -> Result<Output> {
    let mut recs = read_csv(counts.csv.as_bytes()).with_context(|| format!("counts {}", counts.path))?;
    if let Some(t) = totals {
        let per_pair: Vec<u64> = match t.len() {
            1 => vec![t[0]; 4],
            4 => t.to_vec(),
            n => bail!("--totals takes 1 or 4 values, got {n}"),
        };
        recs = recs
            .into_iter()
            .zip(per_pair)
            .map(|(r, n)| match r.emitted_total {
                Some(known) if known == n => Ok(r),
                Some(known) => bail!("pair {}: file implies {known} emitted pairs, --totals says {n}", r.pair),
                None => Ok(r.with_emitted_total(n)?),
            })
            .collect::<Result<_>>()?;
    }
    let rep = analyze(&recs)?;
    let body = match manifest.format {
        Format::Json => wrap_json(manifest, &rep),
        Format::Csv => {
            let mut s = String::from("pair_label,E_eff,stderr,coincidences\n");
            for p in &rep.per_pair {
                writeln!(s, "{},{},{},{}", p.pair.label(), p.e_eff, p.stderr, p.coincidences)?;
            }
            s
        }
    };
    Ok(Output::new(
        body,
        format!("U_eff = {} ± {}", rep.u_eff, rep.stderr),
    ))
}

/// `θ` when the quad is `(a, a + 2θ, a + θ, a + 3θ)`.
fn uniform_step(quad: &SettingsQuad) -> Option<f64> {
    let theta = Angle::from_radians(quad.b.radians() - quad.a.radians()).ok()?;
    let t = theta.radians();
    let close = |x: Angle, y: f64| Angle::from_radians(y).map(|y| x.distance(y) < 1e-12).unwrap_or(false);
    (close(quad.a_prime, quad.a.radians() + 2.0 * t) && close(quad.b_prime, quad.a.radians() + 3.0 * t))
        .then_some(t)
}

#[derive(Serialize)]
struct QmPairPrediction {
    pair: PairSlot,
    a: Angle,
    b: Angle,
    #[serde(rename = "P")]
    joint: [[f64; 2]; 2],
    #[serde(rename = "E")]
    correlation: f64,
    #[serde(rename = "E_eff")]
    effective: f64,
}

#[derive(Serialize)]
struct QmPrediction {
    schema_version: u32,
    params: QmParams,
    quad: SettingsQuad,
    pair_efficiency: f64,
    pairs: Vec<QmPairPrediction>,
    #[serde(rename = "U")]
    u: f64,
    #[serde(rename = "U_eff")]
    u_eff: f64,
    #[serde(rename = "epsilon_QM")]
    epsilon: f64,
    /// `2/(η₁η₂f₁₂)`: the largest `|U_eff|` compatible with `|U| ≤ 2`.
    appendix_bound: f64,
    violates_effective_bound: bool,
    violates_full_sample_bound: bool,
    /// `F|3cos φ − cos 3φ|` with `φ = 2θ`, for quads of the form `(a, a+2θ, a+θ, a+3θ)`.
    violation_lhs: Option<f64>,
}

fn qm_predict(manifest: &Manifest, p: &QmParams, quad: &SettingsQuad) -> Result<Output> {
    let pairs: Vec<QmPairPrediction> = PairSlot::ALL
        .iter()
        .map(|&slot| {
            let (a, b) = quad.settings(slot);
            let mut joint = [[0.0; 2]; 2];
            for (i, r) in Outcome::DETECTED.into_iter().enumerate() {
                for (j, q) in Outcome::DETECTED.into_iter().enumerate() {
                    joint[i][j] = qm_joint_prob(p, a, b, r, q)?;
                }
            }
            Ok(QmPairPrediction {
                pair: slot,
                a,
                b,
                joint,
                correlation: qm_correlation(p, a, b),
                effective: qm_effective_correlation(p, a, b),
            })
        })
        .collect::<Result<_>>()?;
    let u_eff = qm_ueff(p, quad);
    let u = qm_u(p, quad);
    let pred = QmPrediction {
        schema_version: SCHEMA_VERSION,
        params: *p,
        quad: *quad,
        pair_efficiency: p.pair_efficiency(),
        pairs,
        u,
        u_eff,
        epsilon: qm_epsilon_identity(p, u_eff),
        appendix_bound: qm_appendix_bound(p),
        violates_effective_bound: u_eff.abs() > 2.0,
        violates_full_sample_bound: u.abs() > 2.0,
        violation_lhs: uniform_step(quad).map(|t| violation_lhs(p.correlation, 2.0 * t)),
    };
    let body = match manifest.format {
        Format::Json => wrap_json(manifest, &pred),
        Format::Csv => {
            let mut s = String::from("pair_label,a_deg,b_deg,P_pp,P_pm,P_mp,P_mm,E,E_eff\n");
            for r in &pred.pairs {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    r.pair.label(),
                    r.a.degrees(),
                    r.b.degrees(),
                    r.joint[0][0],
                    r.joint[0][1],
                    r.joint[1][0],
                    r.joint[1][1],
                    r.correlation,
                    r.effective
                )?;
            }
            s
        }
    };
    Ok(Output::new(body, format!("U_eff = {u_eff}, U = {u}")))
}

fn adversary(manifest: &Manifest, cfg: &SearchConfig, workers: Option<usize>) -> Result<Output> {
    json_only(manifest)?;
    let res = match workers {
        Some(w) => search_with_workers(cfg, w)?,
        None => effbell::adversary::search(cfg)?,
    };
    let mut out = Output::new(
        wrap_json(manifest, &res),
        format!(
            "best |U_eff| = {} at {:?}; solution I {}",
            res.best_abs_u_eff,
            res.best_parameters,
            if res.assumption_report.solution1.passed { "holds" } else { "fails" }
        ),
    );
    out.emitted_model = Some(ModelSpec::family(&cfg.family, &res.best_parameters));
    if res.soundness.breaches > 0 {
        out.exit_code = 2;
    }
    Ok(out)
}

/// Trials per pair so the expected coincidence count clears `k` by six
/// standard deviations.
pub fn trials_for_coincidences(k: u64, pair_efficiency: f64) -> u64 {
    let k = k as f64;
    ((k + 6.0 * k.sqrt()) / pair_efficiency).ceil() as u64
}

#[derive(Serialize)]
struct SweepRow {
    eta: f64,
    f12: f64,
    #[serde(rename = "F")]
    correlation: f64,
    u_eff_exact: f64,
    u_eff_sampled: f64,
    stderr: f64,
    epsilon_qm: f64,
    u_exact: f64,
    appendix_bound: f64,
    trials: u64,
    min_coincidences: u64,
}

fn sweep(manifest: &Manifest, workers: Option<usize>) -> Result<Output> {
    let RunConfig::Sweep {
        eta,
        f12,
        correlation,
        quad,
        trials,
        min_coincidences,
        seed,
    } = &manifest.run
    else {
        unreachable!()
    };
    for (name, v) in [("eta", eta), ("f12", f12), ("F", correlation)] {
        if v.is_empty() {
            bail!("sweep range for {name} is empty");
        }
    }
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &fc in correlation {
        for &e in eta {
            for &f in f12 {
                let p = QmParams::symmetric(e, f, fc)?;
                let n = trials.unwrap_or_else(|| trials_for_coincidences(*min_coincidences, p.pair_efficiency()));
                let plan = ExperimentPlan::new(*quad, n, seed.wrapping_add(index))?;
                index += 1;
                let run = match workers {
                    Some(w) => run_experiment_with_workers(Source::Qm(p), &plan, w)?,
                    None => run_experiment(Source::Qm(p), &plan)?,
                };
                let est = u_eff_from_counts(&run.records)?;
                let exact = qm_ueff(&p, quad);
                rows.push(SweepRow {
                    eta: e,
                    f12: f,
                    correlation: fc,
                    u_eff_exact: exact,
                    u_eff_sampled: est.u_eff,
                    stderr: est.stderr,
                    epsilon_qm: qm_epsilon_identity(&p, exact),
                    u_exact: qm_u(&p, quad),
                    appendix_bound: qm_appendix_bound(&p),
                    trials: n,
                    min_coincidences: run.records.iter().map(|r| r.coincidences()).min().unwrap_or(0),
                });
            }
        }
    }
    let body = match manifest.format {
        Format::Json => wrap_json(manifest, &rows),
        Format::Csv => {
            let mut s = String::from(
                "eta,f12,F,u_eff_exact,u_eff_sampled,stderr,epsilon_qm,u_exact,appendix_bound,trials,min_coincidences\n",
            );
            for r in &rows {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.eta,
                    r.f12,
                    r.correlation,
                    r.u_eff_exact,
                    r.u_eff_sampled,
                    r.stderr,
                    r.epsilon_qm,
                    r.u_exact,
                    r.appendix_bound,
                    r.trials,
                    r.min_coincidences
                )?;
            }
            s
        }
    };
    Ok(Output::new(body, format!("{} sweep points", rows.len())))
}
