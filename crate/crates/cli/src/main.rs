//! `pfnet`: certify, iterate, scan, audit and train nonnegative networks.
//!
//! Every command writes a JSON report to stdout (and to `--out` where
//! offered) and a short human-readable summary to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pfnet::builtin::Builtin;
use pfnet::certify::{random_starts, DEFAULT_SEED};
use pfnet::cone::{ConeMap, Property};
use pfnet::linalg::is_strictly_positive;
use pfnet::oracle::{oracle, OracleConfig, OracleVerdict};
use pfnet::report::{
    self, AuditReport, AuditRow, DatasetReport, FixedPointReport, IntervalReport, Report, ReportBody, TrainingReport,
};
use pfnet::train::{self, reproduce_autoencoder, Dataset, TrainConfig};
use pfnet::{certify, interval_scan, iterate_fixed_point, model_io, Budget, Network, Norm, ScanConfig, EPS_POS};

/// Exit status for a run that completed without a decisive verdict.
const EXIT_INCONCLUSIVE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "pfnet",
    version,
    about = "Fixed-point certificates for nonnegative feed-forward networks"
)]
struct Cli {
    /// Seed for every random choice; defaults to $PFNET_SEED, then a fixed value.
    #[arg(long, global = true, env = "PFNET_SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a model, bound its asymptotic map and issue a fixed-point verdict.
    Certify {
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        m_max: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value = "spectral")]
        norm: Norm,
        /// Random starts used to cross-check the located fixed point.
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run Picard iteration x <- T(x).
    Fixpoint {
        model: PathBuf,
        /// `zero`, `random`, or a path to a JSON array.
        #[arg(long, default_value = "zero")]
        x0: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find the fixed points on the ray through a fixed point.
    Scan {
        #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
        model: Option<PathBuf>,
        /// JSON array holding a fixed point; located from zero when omitted.
        #[arg(long, conflicts_with = "builtin")]
        anchor: Option<PathBuf>,
        #[arg(long)]
        builtin: Option<Builtin>,
        #[arg(long, default_value_t = 1e6)]
        lambda_max: f64,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Try to refute each cone property of a model by random sampling.
    Audit {
        model: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic angular-spectrum dataset.
    GenData {
        #[arg(long, default_value_t = 36)]
        dim: usize,
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the nonnegative autoencoder.
    Train {
        /// Dataset written by `gen-data`; generated from the seed when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        cfg: TrainArgs,
        /// Where to write the trained model.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate data, train, certify and write every artifact to a directory.
    Reproduce {
        #[command(flatten)]
        cfg: TrainArgs,
        #[arg(long, default_value = "reproduce-out")]
        outdir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Desk,
    Full,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long, value_enum, default_value = "desk")]
    scale: Scale,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Initial weights are uniform on [0, init_scale].
    #[arg(long)]
    init_scale: Option<f64>,
}

impl TrainArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        let mut cfg = match self.scale {
            Scale::Desk => TrainConfig::desk(),
            Scale::Full => TrainConfig::full(),
        };
        cfg.seed = seed;
        cfg.epochs = self.epochs.unwrap_or(cfg.epochs);
        cfg.samples = self.samples.unwrap_or(cfg.samples);
        cfg.batch = self.batch.unwrap_or(cfg.batch);
        cfg.lr = self.lr.unwrap_or(cfg.lr);
        cfg.init_scale = self.init_scale.unwrap_or(cfg.init_scale);
        cfg
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1 like every other error; clap's default of 2 is
    // reserved for inconclusive certificates.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match cli.command {
        Command::Certify {
            model,
            m_max,
            tol,
            max_iter,
            norm,
            starts,
            out,
        } => {
            let net = load_model(&model)?;
            let budget = Budget {
                m_max,
                tol,
                max_iter,
                starts,
                seed,
                norm,
                ..Budget::default()
            };
            let cert = certify(&net, &budget)?;
            eprintln!("property class   {}", cert.property_class.level.code());
            eprintln!("asymptotic map   {}", cert.asymptotic.kind());
            eprintln!("spectral radius  {:e}", cert.spectral_radius);
            eprintln!(
                "{} norm bounds  product {:e}, composite {:e}",
                cert.norm, cert.norm_bound_product, cert.norm_bound_composite
            );
            match cert.primitivity_exponent {
                Some(m) => eprintln!("T^m(0) >> 0      m = {m}"),
                None => eprintln!("T^m(0) >> 0      not found for m <= {m_max}"),
            }
            let basis: Vec<String> = cert.basis.iter().map(|r| r.code().to_string()).collect();
            eprintln!("verdict          {} [{}]", cert.verdict.name(), basis.join(", "));
            if let Some(fp) = &cert.fixed_point {
                eprintln!(
                    "fixed point      residual {:e} after {} iterations; {} random starts agree within {:e}",
                    fp.residual_sup_norm, fp.iterations, fp.starts, fp.worst_pairwise_distance
                );
            }
            let decisive = cert.verdict.is_decisive();
            emit(Report::new("certify", ReportBody::Certificate(cert)), out.as_deref())?;
            Ok(if decisive {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_INCONCLUSIVE)
            })
        }
        Command::Fixpoint {
            model,
            x0,
            tol,
            max_iter,
            out,
        } => {
            let net = load_model(&model)?;
            net.require_self_map()?;
            let k = net.input_dim();
            let start = match x0.as_str() {
                "zero" => vec![0.0; k],
                "random" => {
                    let budget = Budget {
                        starts: 1,
                        seed,
                        ..Budget::default()
                    };
                    random_starts(k, &budget).remove(0)
                }
                path => read_vector(Path::new(path)).context("reading --x0")?,
            };
            let run = iterate_fixed_point(&net, &start, tol, max_iter)?;
            eprintln!(
                "{} after {} iterations, residual {:e}",
                if run.converged { "converged" } else { "not converged" },
                run.iterations,
                run.residual
            );
            if x0 == "zero" && run.converged {
                eprintln!("started from 0: the limit is the least fixed point whenever T^m(0) >> 0 and rho < 1");
            }
            let body = ReportBody::FixedPoint(FixedPointReport {
                source: model.display().to_string(),
                x0: start,
                tol,
                max_iter,
                run,
            });
            emit(Report::new("fixpoint", body), out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Scan {
            model,
            anchor,
            builtin,
            lambda_max,
            grid,
            tol,
            out,
        } => {
            let cfg = ScanConfig {
                lambda_max,
                grid,
                tol,
                ..ScanConfig::default()
            };
            let (source, estimate) = match builtin {
                Some(b) => (
                    format!("builtin:{b}"),
                    interval_scan(b.operator().as_ref(), &b.anchor(), &cfg)?,
                ),
                None => {
                    let path = model.expect("clap requires a model without --builtin");
                    let net = load_model(&path)?;
                    let u = match anchor {
                        Some(a) => read_vector(&a).context("reading --anchor")?,
                        None => locate_anchor(&net, tol)?,
                    };
                    (path.display().to_string(), interval_scan(&net, &u, &cfg)?)
                }
            };
            let fixed = estimate.samples.iter().filter(|s| s.fixed).count();
            eprintln!("anchor residual  {:e}", estimate.anchor_residual);
            match estimate.s0.value() {
                Some(v) => eprintln!("lower end s0     {v}"),
                None => eprintln!("lower end s0     -> 0 (every sampled small multiple is fixed)"),
            }
            match estimate.t0.value() {
                Some(v) => eprintln!("upper end t0     {v}"),
                None => eprintln!("upper end t0     unbounded up to lambda_max"),
            }
            eprintln!("grid             {fixed} of {} samples fixed", estimate.samples.len());
            if estimate.whole_ray_fixed() {
                eprintln!("every grid point is fixed: the whole ray appears to be fixed");
            }
            let body = ReportBody::Interval(IntervalReport { source, estimate });
            emit(Report::new("scan", body), out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit { model, trials, out } => {
            // Unchecked so that hand-edited models with negative parameters can
            // be shown to fail.
            let net = model_io::load_unchecked(&model).with_context(|| format!("loading {}", model.display()))?;
            net.require_self_map()?;
            let declared = ConeMap::from_network(net.clone()).declared();
            let cfg = OracleConfig::default().with_trials(trials).with_seed(seed);
            let rows: Vec<AuditRow> = Property::ALL
                .iter()
                .map(|&p| AuditRow {
                    property: p,
                    declared: declared.has(p),
                    verdict: oracle(p, &net, &cfg),
                })
                .collect();
            eprintln!("{:<20} {:<9} result", "property", "declared");
            for row in &rows {
                let result = match &row.verdict {
                    OracleVerdict::Pass { trials } => format!("pass ({trials} trials)"),
                    OracleVerdict::Counterexample(c) => {
                        format!(
                            "counterexample at trial {}, coordinate {}, gap {:e}",
                            c.trial, c.coordinate, c.gap
                        )
                    }
                };
                eprintln!(
                    "{:<20} {:<9} {result}",
                    row.property.name(),
                    if row.declared { "yes" } else { "no" }
                );
            }
            let body = ReportBody::Audit(AuditReport {
                source: model.display().to_string(),
                config: cfg,
                rows,
            });
            emit(Report::new("audit", body), out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenData { dim, samples, out } => {
            let data = Dataset::generate(seed, dim, samples)?;
            data.save(&out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {samples} spectra of length {dim} to {}", out.display());
            let body = ReportBody::Dataset(DatasetReport {
                path: out.display().to_string(),
                seed,
                dim,
                samples,
            });
            emit(Report::new("gen-data", body), None)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { data, cfg, out } => {
            let mut cfg = cfg.config(seed);
            let samples = match data {
                Some(path) => {
                    let d = Dataset::load(&path).with_context(|| format!("loading {}", path.display()))?;
                    cfg.input_dim = d.dim;
                    cfg.samples = d.samples.len();
                    d.samples
                }
                None => Dataset::generate(seed, cfg.input_dim, cfg.samples)?.samples,
            };
            cfg.validate()?;
            let init = train::init_network(&cfg)?;
            let start = Instant::now();
            let (net, history) = train::train_with(&cfg, &init, &samples, |s, _| log_epoch(&cfg, s, start))?;
            model_io::save(&net, &out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "final loss {:e} (constant predictor {:e}); model written to {}",
                history.last().copied().unwrap_or(f64::NAN),
                train::constant_predictor_loss(&samples),
                out.display()
            );
            let body = ReportBody::Training(TrainingReport {
                config: cfg,
                model_path: out.display().to_string(),
                loss_history: history,
            });
            emit(Report::new("train", body), None)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Reproduce { cfg, outdir } => {
            let cfg = cfg.config(seed);
            let start = Instant::now();
            let budget = Budget {
                seed,
                ..Budget::default()
            };
            let o = reproduce_autoencoder(&cfg, &budget, Some(&outdir), |s| log_epoch(&cfg, s, start))?;
            let s = &o.summary;
            eprintln!(
                "loss             untrained {:e}, final {:e}, constant predictor {:e}",
                s.untrained_loss, s.final_loss, s.constant_loss
            );
            eprintln!(
                "held-out         loss {:e}, sup-norm error on plotted sample {:e}",
                s.heldout_loss, s.heldout_error
            );
            eprintln!("spectral radius  {:e}", s.spectral_radius);
            match s.primitivity_exponent {
                Some(m) => eprintln!("T^m(0) >> 0      m = {m}"),
                None => eprintln!("T^m(0) >> 0      not found for m <= {}", budget.m_max),
            }
            for b in &s.norm_bounds {
                eprintln!(
                    "{:<9} bounds  product {:e}, composite {:e}",
                    b.norm.to_string(),
                    b.product,
                    b.composite
                );
            }
            eprintln!("verdict          {}", s.verdict.name());
            eprintln!(
                "artifacts in {} ({:.1} s)",
                outdir.display(),
                start.elapsed().as_secs_f64()
            );
            emit(Report::new("reproduce", ReportBody::Reproduce(o.summary.clone())), None)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_model(path: &Path) -> Result<Network> {
    model_io::load(path).with_context(|| format!("loading {}", path.display()))
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a JSON array of numbers", path.display()))
}

/// Picard iteration from zero; the limit must be strictly positive to anchor a ray.
fn locate_anchor(net: &Network, tol: f64) -> Result<Vec<f64>> {
    net.require_self_map()?;
    let run = iterate_fixed_point(net, &vec![0.0; net.input_dim()], tol, Budget::default().max_iter)?;
    if !run.converged {
        bail!(
            "iteration from 0 did not converge (residual {:e}); pass --anchor",
            run.residual
        );
    }
    if !is_strictly_positive(&run.x, EPS_POS) {
        bail!("the fixed point reached from 0 is not strictly positive; pass --anchor");
    }
    Ok(run.x)
}

fn log_epoch(cfg: &TrainConfig, s: &train::EpochStats, start: Instant) {
    let every = (cfg.epochs / 20).max(1);
    if s.epoch.is_multiple_of(every) || s.epoch + 1 == cfg.epochs {
        eprintln!(
            "epoch {:>5}/{}  loss {:e}  ({:.1} s)",
            s.epoch + 1,
            cfg.epochs,
            s.loss,
            start.elapsed().as_secs_f64()
        );
    }
}

fn emit(report: Report, out: Option<&Path>) -> Result<()> {
    let text = report::to_json(&report);
    if let Some(path) = out {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{text}");
    Ok(())
}
