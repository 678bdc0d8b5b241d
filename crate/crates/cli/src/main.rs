//! `effbell`: verify efficiency-robust CHSH bounds, simulate and analyze
//! coincidence data, and search for detection-loophole models.

mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use effbell::adversary::{AdversaryFamily, FamilyKind, SearchConfig, DEFAULT_FAMILY_GRID};
use effbell::bounds::EffectiveCorrelationMode;
use effbell::model_file::ModelSpec;
use effbell::qm::QmParams;
use effbell::SettingsQuad;

use run::{execute, CountsInput, Format, Manifest, ModelInput, RunConfig, SourceInput};

#[derive(Parser)]
#[command(name = "effbell", version, about = "CHSH bounds without fair sampling: verification, simulation, analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the primary output here (a `.manifest.json` sidecar is written next to it).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Clone)]
struct QuadArg {
    /// Settings "a,a',b,b'" in degrees.
    #[arg(long, default_value = "0,45,22.5,67.5")]
    quad: SettingsQuad,
}

#[derive(Args, Clone, Default)]
struct QmArgs {
    /// Detector efficiency of both parties.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    eta1: Option<f64>,
    #[arg(long)]
    eta2: Option<f64>,
    /// Pair collimation/transmission factor f₁₂ (split evenly).
    #[arg(long, alias = "f", conflicts_with_all = ["f1", "f2"])]
    f12: Option<f64>,
    #[arg(long)]
    f1: Option<f64>,
    #[arg(long)]
    f2: Option<f64>,
    /// Source correlation strength.
    #[arg(long = "F", default_value_t = 1.0)]
    correlation: f64,
}

impl QmArgs {
    fn params(&self) -> Result<QmParams> {
        let f = self.f12.map(f64::sqrt);
        Ok(QmParams::new(
            self.eta1.or(self.eta).unwrap_or(1.0),
            self.eta2.or(self.eta).unwrap_or(1.0),
            self.f1.or(f).unwrap_or(1.0),
            self.f2.or(f).unwrap_or(1.0),
            self.correlation,
        )?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact U, M and U_eff of a model file, with assumption checks.
    VerifyBounds {
        model: PathBuf,
        #[command(flatten)]
        quad: QuadArg,
        #[arg(long, default_value = "solution1")]
        mode: EffectiveCorrelationMode,
        /// Include the per-λ table.
        #[arg(long)]
        per_lambda: bool,
    },
    /// Simulate a run and write counts (CSV by default).
    Simulate {
        /// SLHV model file; the quantum source is used when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        qm: QmArgs,
        #[command(flatten)]
        quad: QuadArg,
        /// Emitted pairs per setting pair.
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate U_eff (and ε when emitted totals are known) from counts.
    Analyze {
        counts: PathBuf,
        /// Emitted pairs: one value for all pairs or four comma-separated.
        #[arg(long, value_delimiter = ',')]
        totals: Option<Vec<u64>>,
    },
    /// Quantum predictions for a quad.
    QmPredict {
        #[command(flatten)]
        qm: QmArgs,
        #[command(flatten)]
        quad: QuadArg,
    },
    /// Search a model family for the largest |U_eff|.
    AdversarySearch {
        #[arg(long, default_value = "threshold-detection")]
        family: FamilyKind,
        #[command(flatten)]
        quad: QuadArg,
        #[arg(long, default_value = "solution1")]
        mode: EffectiveCorrelationMode,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 2000)]
        max_evals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FAMILY_GRID)]
        grid: usize,
        /// Pin a parameter, e.g. `--freeze c1=0`.
        #[arg(long, value_parser = parse_freeze)]
        freeze: Vec<(String, f64)>,
        /// Restrict to setting-independent non-detection.
        #[arg(long)]
        solution1_slice: bool,
        /// Write the best point as a model file.
        #[arg(long)]
        emit_model: Option<PathBuf>,
    },
    /// Exact and sampled U_eff over a grid of efficiencies (CSV).
    Sweep {
        /// Values as "x,y,z" or "start:stop:step".
        #[arg(long, value_parser = parse_range)]
        eta: Grid,
        #[arg(long, value_parser = parse_range)]
        f12: Grid,
        #[arg(long = "F", value_parser = parse_range, default_value = "0.95")]
        correlation: Grid,
        #[command(flatten)]
        quad: QuadArg,
        /// Fixed pairs per setting; by default chosen per point from --min-coincidences.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 100_000)]
        min_coincidences: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-execute a run from its manifest.
    Replay { manifest: PathBuf },
}

fn parse_freeze(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad value {v:?}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

/// One argument is either a list or an inclusive `start:stop:step` range.
fn parse_range(s: &str) -> Result<Grid, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?}"));
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts[..] else {
            return Err("range must be start:stop:step".into());
        };
        let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
        if !(step > 0.0) {
            return Err("step must be positive".into());
        }
        let n = ((hi - lo) / step + 1e-9).floor();
        if n < 0.0 {
            Vec::new()
        } else {
            (0..=n as usize)
                .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
                .collect()
        }
    } else {
        s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(format!("{s:?} is an empty range"));
    }
    Ok(Grid(values))
}

fn load_model(path: &Path) -> Result<ModelInput> {
    Ok(ModelInput {
        path: path.display().to_string(),
        spec: ModelSpec::load(path)?,
    })
}

fn build(cmd: Command, format: Option<Format>) -> Result<Manifest> {
    let json = format.unwrap_or(Format::Json);
    let (run, fmt) = match cmd {
        Command::VerifyBounds {
            model,
            quad,
            mode,
            per_lambda,
        } => (
            RunConfig::VerifyBounds {
                model: load_model(&model)?,
                quad: quad.quad,
                mode,
                per_lambda,
            },
            json,
        ),
        Command::Simulate {
            model,
            qm,
            quad,
            trials,
            seed,
        } => {
            let source = match model {
                Some(p) => SourceInput::Model { model: load_model(&p)? },
                None => SourceInput::Qm { params: qm.params()? },
            };
            (
                RunConfig::Simulate {
                    source,
                    quad: quad.quad,
                    trials,
                    seed,
                },
                format.unwrap_or(Format::Csv),
            )
        }
        Command::Analyze { counts, totals } => {
            let csv = std::fs::read_to_string(&counts)
                .with_context(|| format!("reading {}", counts.display()))?;
            (
                RunConfig::Analyze {
                    counts: CountsInput {
                        path: counts.display().to_string(),
                        csv,
                    },
                    totals,
                },
                json,
            )
        }
        Command::QmPredict { qm, quad } => (
            RunConfig::QmPredict {
                params: qm.params()?,
                quad: quad.quad,
            },
            json,
        ),
        Command::AdversarySearch {
            family,
            quad,
            mode,
            restarts,
            max_evals,
            seed,
            grid,
            freeze,
            solution1_slice,
            emit_model: _,
        } => {
            let mut fam = AdversaryFamily::new(family).with_grid(grid);
            if solution1_slice {
                fam = fam.solution1_slice();
            }
            for (name, v) in freeze {
                fam = fam.freeze(&name, v)?;
            }
            let search = SearchConfig {
                mode,
                restarts,
                max_evals,
                seed,
                ..SearchConfig::new(fam, quad.quad)
            };
            search.validate()?;
            (RunConfig::AdversarySearch { search }, json)
        }
        Command::Sweep {
            eta,
            f12,
            correlation,
            quad,
            trials,
            min_coincidences,
            seed,
        } => {
            if trials == Some(0) || min_coincidences == 0 {
                bail!("trial and coincidence targets must be positive");
            }
            (
                RunConfig::Sweep {
                    eta: eta.0,
                    f12: f12.0,
                    correlation: correlation.0,
                    quad: quad.quad,
                    trials,
                    min_coincidences,
                    seed,
                },
                format.unwrap_or(Format::Csv),
            )
        }
        Command::Replay { .. } => unreachable!("handled by caller"),
    };
    Ok(Manifest::new(run, fmt))
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn real_main(cli: Cli) -> Result<i32> {
    let started = Instant::now();
    let emit_model = match &cli.command {
        Command::AdversarySearch { emit_model, .. } => emit_model.clone(),
        _ => None,
    };
    let manifest = match cli.command {
        Command::Replay { manifest } => {
            let text = std::fs::read_to_string(&manifest)
                .with_context(|| format!("reading {}", manifest.display()))?;
            let m = Manifest::parse(&text)?;
            if cli.format.is_some_and(|f| f != m.format) {
                bail!("--format differs from the manifest");
            }
            m
        }
        cmd => build(cmd, cli.format)?,
    };
    if cli.verbose >= 2 {
        eprintln!("effbell {}: {}", manifest.command(), manifest.to_json().trim_end());
    }
    let output = execute(&manifest, cli.workers)?;

    match &cli.out {
        Some(path) => {
            std::fs::write(path, &output.body).with_context(|| format!("writing {}", path.display()))?;
            let side = sidecar(path);
            std::fs::write(&side, manifest.to_json())
                .with_context(|| format!("writing {}", side.display()))?;
        }
        None => {
            print!("{}", output.body);
            if manifest.format == Format::Csv {
                eprint!("{}", manifest.to_json());
            }
        }
    }
    if let (Some(path), Some(spec)) = (emit_model, &output.emitted_model) {
        spec.save(&path)?;
    }
    if cli.verbose >= 1 {
        eprintln!("{}", output.summary);
    }
    if cli.verbose >= 2 {
        eprintln!("elapsed {:.3} s", started.elapsed().as_secs_f64());
    }
    Ok(output.exit_code)
}

fn main() -> ExitCode {
    // usage errors are input errors (exit 1); 2 is reserved for theorem breaches
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match real_main(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
