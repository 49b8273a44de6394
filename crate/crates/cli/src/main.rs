//! Command-line harness for the weak-nonlinearity parity-gate model.
//!
//! Subcommands evaluate one lossy-medium traversal (`channel`), the full gate
//! (`gate`), the published table and sweeps (`table1`, `fig3`, `fig4`), and
//! fiber-loss conversions (`convert`). Output is JSON (default) or CSV, to
//! stdout or `--out`; identical flags produce byte-identical output.

mod output;

use std::fs;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kerr_parity::channel::{channel_result, ChannelParams, DEFAULT_DELTA_THETA};
use kerr_parity::fock::oracle_coherence;
use kerr_parity::gate::{
    gate_report, theta_for_distance, Detection, GateConfig, GateReport, GateTarget, LossMode,
};
use kerr_parity::scenarios::{
    amplitude_after_km, chi_over_gamma_for_db, db_per_km, default_fig4_theta, fig3_sweep,
    fig4_sweep, length_for_theta, log_spaced, table1, FiberSpec, Fig3Spec, Fig4Spec,
};
use output::{csv_line, fmt_sig};

#[derive(Parser)]
#[command(name = "kerr-parity", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectionArg {
    /// Homodyne quadrature detection.
    Hd,
    /// Photon-number-resolving detection.
    Pnr,
}

impl From<DetectionArg> for Detection {
    fn from(d: DetectionArg) -> Self {
        match d {
            DetectionArg::Hd => Detection::Homodyne,
            DetectionArg::Pnr => Detection::Pnr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LossModeArg {
    /// Photon loss in both media.
    Both,
    /// Photon loss in the first medium only.
    First,
}

impl From<LossModeArg> for LossMode {
    fn from(m: LossModeArg) -> Self {
        match m {
            LossModeArg::Both => LossMode::BothMedia,
            LossModeArg::First => LossMode::FirstMediumOnly,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Amplitude and coherence parameters of one lossy medium traversal.
    Channel {
        /// Initial probe amplitude α.
        #[arg(long)]
        alpha: f64,
        /// Kerr angle θ (alternative to --distance).
        #[arg(long, conflicts_with = "distance")]
        theta: Option<f64>,
        /// Phase-space separation d (requires --detection).
        #[arg(long, requires = "detection")]
        distance: Option<f64>,
        /// Detection geometry used to translate --distance into θ.
        #[arg(long, value_enum)]
        detection: Option<DetectionArg>,
        /// χ/γ of the medium.
        #[arg(long)]
        chi_over_gamma: f64,
        /// Stepper resolution Δθ.
        #[arg(long, default_value_t = DEFAULT_DELTA_THETA)]
        delta_theta: f64,
        /// Fiber length realizing θ = π, in km (for the length column).
        #[arg(long, default_value_t = 3000.0)]
        l_pi: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Full two-qubit parity gate run with readout and feedforward.
    Gate {
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum)]
        detection: DetectionArg,
        #[arg(long, conflicts_with = "distance")]
        theta: Option<f64>,
        #[arg(long)]
        distance: Option<f64>,
        /// χ/γ; "inf" runs the lossless gate.
        #[arg(long, default_value_t = f64::INFINITY)]
        chi_over_gamma: f64,
        #[arg(long, value_enum, default_value = "both")]
        loss_mode: LossModeArg,
        #[arg(long, default_value_t = DEFAULT_DELTA_THETA)]
        delta_theta: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// The published (𝒜, |𝒞|) table: both detections at both fiber ratios.
    Table1 {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// (𝒜, |𝒞|) against α at fixed phase-space distance.
    Fig3 {
        #[arg(long, value_enum)]
        detection: DetectionArg,
        /// Fixed separation (defaults: 4 for hd, π for pnr).
        #[arg(long)]
        distance: Option<f64>,
        #[arg(long)]
        alpha_min: Option<f64>,
        #[arg(long)]
        alpha_max: Option<f64>,
        /// Number of log-spaced amplitudes.
        #[arg(long, default_value_t = 40)]
        points: usize,
        #[arg(long, default_value_t = 0.0125)]
        chi_over_gamma: f64,
        #[arg(long, default_value_t = 3000.0)]
        l_pi: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// |𝒞| against the energy decay rate γ at fixed χ and angle.
    Fig4 {
        #[arg(long, default_value_t = 1e3)]
        alpha: f64,
        /// Kerr angle (defaults to the published 0.13 at α=10³, 0.04 at α=10⁴).
        #[arg(long)]
        theta: Option<f64>,
        /// Nonlinear strength χ.
        #[arg(long, default_value_t = 0.01)]
        chi: f64,
        #[arg(long, default_value_t = 1e-6)]
        gamma_min: f64,
        #[arg(long, default_value_t = 1e-2)]
        gamma_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Convert between χ/γ and fiber dB/km.
    Convert {
        #[arg(long, conflicts_with = "db_per_km")]
        chi_over_gamma: Option<f64>,
        #[arg(long)]
        db_per_km: Option<f64>,
        #[arg(long, default_value_t = 3000.0)]
        l_pi: f64,
        /// Also report the amplitude parameter after this many km.
        #[arg(long)]
        km: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Debug: Fock-space oracle vs closed form for one channel point.
    #[command(hide = true)]
    Oracle {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        chi_over_gamma: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Serialize)]
struct ChannelRow {
    alpha: f64,
    theta: f64,
    length_km: f64,
    amp_param: f64,
    abs_coherence: f64,
}

#[derive(Serialize)]
struct GateOutput {
    alpha: f64,
    detection: Detection,
    theta: f64,
    chi_over_gamma: f64,
    loss_mode: LossMode,
    #[serde(flatten)]
    report: GateReport,
}

#[derive(Serialize)]
struct ConvertOutput {
    chi_over_gamma: f64,
    db_per_km: f64,
    l_pi_km: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amp_param_after_km: Option<f64>,
}

#[derive(Serialize)]
struct OracleOutput {
    alpha: f64,
    theta: f64,
    chi_over_gamma: f64,
    oracle_re: f64,
    oracle_im: f64,
    oracle_abs: f64,
    closed_form_abs: f64,
    oracle_vs_closed: f64,
    structure_residual: f64,
    steps: usize,
    n_max: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn emit(output: &OutputArgs, text: String) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn channel_csv(rows: &[ChannelRow]) -> String {
    let mut lines = vec!["alpha,theta,length_km,A,absC".to_string()];
    for r in rows {
        lines.push(csv_line(&[
            fmt_sig(r.alpha, 6),
            fmt_sig(r.theta, 6),
            fmt_sig(r.length_km, 6),
            fmt_sig(r.amp_param, 6),
            fmt_sig(r.abs_coherence, 6),
        ]));
    }
    lines.join("\n")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Channel {
            alpha,
            theta,
            distance,
            detection,
            chi_over_gamma,
            delta_theta,
            l_pi,
            output,
        } => {
            let theta = match (theta, distance) {
                (Some(t), None) => t,
                (None, Some(d)) => {
                    let det = detection.expect("clap enforces --detection with --distance");
                    theta_for_distance(alpha, d, det.into())?
                }
                _ => bail!("supply exactly one of --theta or --distance"),
            };
            let params = ChannelParams::new(alpha, theta, chi_over_gamma, delta_theta)?;
            let res = channel_result(&params)?;
            let spec = FiberSpec {
                l_pi_km: l_pi,
                chi_over_gamma,
            };
            let row = ChannelRow {
                alpha,
                theta,
                length_km: length_for_theta(theta, &spec)?,
                amp_param: res.amp_param,
                abs_coherence: res.abs_coherence(),
            };
            let text = match output.format {
                Format::Json => serde_json::to_string_pretty(&row)?,
                Format::Csv => channel_csv(std::slice::from_ref(&row)),
            };
            emit(&output, text)
        }
        Command::Gate {
            alpha,
            detection,
            theta,
            distance,
            chi_over_gamma,
            loss_mode,
            delta_theta,
            output,
        } => {
            let target = match (theta, distance) {
                (Some(t), None) => GateTarget::Theta(t),
                (None, Some(d)) => GateTarget::Distance(d),
                _ => bail!("supply exactly one of --theta or --distance"),
            };
            let cfg = GateConfig {
                alpha0: alpha,
                detection: detection.into(),
                target,
                chi_over_gamma,
                loss_mode: loss_mode.into(),
                delta_theta,
            };
            let report = gate_report(&cfg)?;
            let out = GateOutput {
                alpha,
                detection: cfg.detection,
                theta: cfg.theta()?,
                chi_over_gamma,
                loss_mode: cfg.loss_mode,
                report,
            };
            let text = match output.format {
                Format::Json => serde_json::to_string_pretty(&out)?,
                Format::Csv => {
                    let header = "alpha,detection,theta,chi_over_gamma,A,absC,p_success,fidelity,concurrence,p_err";
                    let det = match cfg.detection {
                        Detection::Homodyne => "hd",
                        Detection::Pnr => "pnr",
                    };
                    let line = csv_line(&[
                        fmt_sig(alpha, 6),
                        det.to_string(),
                        fmt_sig(out.theta, 6),
                        fmt_sig(chi_over_gamma, 6),
                        fmt_sig(report.amp_param, 6),
                        fmt_sig(report.abs_coherence, 6),
                        fmt_sig(report.p_success_branch, 6),
                        fmt_sig(report.fidelity, 6),
                        fmt_sig(report.concurrence, 6),
                        fmt_sig(report.p_err, 6),
                    ]);
                    format!("{header}\n{line}")
                }
            };
            emit(&output, text)
        }
        Command::Table1 { output } => {
            let rows = table1();
            let text = match output.format {
                Format::Json => serde_json::to_string_pretty(&rows)?,
                Format::Csv => {
                    let mut lines =
                        vec!["detection,chi_over_gamma,theta,alpha,length_km,A,absC,below_1e-3"
                            .to_string()];
                    for r in &rows {
                        let det = match r.detection {
                            Detection::Homodyne => "hd",
                            Detection::Pnr => "pnr",
                        };
                        lines.push(csv_line(&[
                            det.to_string(),
                            fmt_sig(r.chi_over_gamma, 6),
                            fmt_sig(r.theta, 6),
                            fmt_sig(r.alpha, 6),
                            fmt_sig(r.length_km, 6),
                            fmt_sig(r.amp_param, 6),
                            fmt_sig(r.abs_coherence, 6),
                            r.below_1e_3.to_string(),
                        ]));
                    }
                    lines.join("\n")
                }
            };
            emit(&output, text)
        }
        Command::Fig3 {
            detection,
            distance,
            alpha_min,
            alpha_max,
            points,
            chi_over_gamma,
            l_pi,
            output,
        } => {
            let det: Detection = detection.into();
            let mut spec = Fig3Spec::panel(det, chi_over_gamma);
            if let Some(d) = distance {
                spec.distance = d;
            }
            let lo = alpha_min.unwrap_or(spec.alphas[0]);
            let hi = alpha_max.unwrap_or(*spec.alphas.last().expect("non-empty panel"));
            if points < 2 || !lo.is_finite() || !hi.is_finite() || hi <= lo {
                bail!("need at least 2 points and alpha_max > alpha_min");
            }
            spec.alphas = log_spaced(lo, hi, points);
            spec.l_pi_km = l_pi;
            let sweep = fig3_sweep(&spec)?;
            for s in &sweep.skipped {
                eprintln!("warning: skipped alpha = {}: {}", s.alpha, s.reason);
            }
            let text = match output.format {
                Format::Json => serde_json::to_string_pretty(&sweep)?,
                Format::Csv => {
                    let rows: Vec<ChannelRow> = sweep
                        .rows
                        .iter()
                        .map(|r| ChannelRow {
                            alpha: r.alpha,
                            theta: r.theta,
                            length_km: r.length_km,
                            amp_param: r.amp_param,
                            abs_coherence: r.abs_coherence,
                        })
                        .collect();
                    channel_csv(&rows)
                }
            };
            emit(&output, text)
        }
        Command::Fig4 {
            alpha,
            theta,
            chi,
            gamma_min,
            gamma_max,
            points,
            output,
        } => {
            let theta = match theta.or_else(|| default_fig4_theta(alpha)) {
                Some(t) => t,
                None => bail!("no published angle for alpha = {alpha}; pass --theta"),
            };
            if points < 2 || !gamma_min.is_finite() || gamma_min <= 0.0 || gamma_max <= gamma_min {
                bail!("need at least 2 points and 0 < gamma_min < gamma_max");
            }
            let spec = Fig4Spec {
                chi,
                alpha,
                theta,
                gammas: log_spaced(gamma_min, gamma_max, points),
                delta_theta: DEFAULT_DELTA_THETA,
            };
            let rows = fig4_sweep(&spec)?;
            let text = match output.format {
                Format::Json => serde_json::to_string_pretty(&rows)?,
                Format::Csv => {
                    let mut lines = vec!["gamma,chi_over_gamma,alpha,theta,A,absC".to_string()];
                    for r in &rows {
                        lines.push(csv_line(&[
                            fmt_sig(r.gamma, 6),
                            fmt_sig(r.chi_over_gamma, 6),
                            fmt_sig(r.alpha, 6),
                            fmt_sig(r.theta, 6),
                            fmt_sig(r.amp_param, 6),
                            fmt_sig(r.abs_coherence, 6),
                        ]));
                    }
                    lines.join("\n")
                }
            };
            emit(&output, text)
        }
        Command::Convert {
            chi_over_gamma,
            db_per_km: db,
            l_pi,
            km,
            output,
        } => {
            let (cog, db) = match (chi_over_gamma, db) {
                (Some(c), None) => {
                    let spec = FiberSpec {
                        l_pi_km: l_pi,
                        chi_over_gamma: c,
                    };
                    (c, db_per_km(&spec)?)
                }
                (None, Some(d)) => (chi_over_gamma_for_db(d, l_pi)?, d),
                _ => bail!("supply exactly one of --chi-over-gamma or --db-per-km"),
            };
            let spec = FiberSpec {
                l_pi_km: l_pi,
                chi_over_gamma: cog,
            };
            let amp = km.map(|k| amplitude_after_km(k, &spec)).transpose()?;
            let out = ConvertOutput {
                chi_over_gamma: cog,
                db_per_km: db,
                l_pi_km: l_pi,
                km,
                amp_param_after_km: amp,
            };
            let text = match output.format {
                Format::Json => serde_json::to_string_pretty(&out)?,
                Format::Csv => {
                    let header = "chi_over_gamma,db_per_km,l_pi_km";
                    let line = csv_line(&[
                        fmt_sig(out.chi_over_gamma, 6),
                        fmt_sig(out.db_per_km, 6),
                        fmt_sig(out.l_pi_km, 6),
                    ]);
                    format!("{header}\n{line}")
                }
            };
            emit(&output, text)
        }
        Command::Oracle {
            alpha,
            theta,
            chi_over_gamma,
            output,
        } => {
            let run = oracle_coherence(alpha, theta, chi_over_gamma)?;
            let params = ChannelParams::with_default_step(alpha, theta, chi_over_gamma)?;
            let closed = kerr_parity::channel::coherence_closed_form(&params)?;
            let out = OracleOutput {
                alpha,
                theta,
                chi_over_gamma,
                oracle_re: run.coherence.re,
                oracle_im: run.coherence.im,
                oracle_abs: run.coherence.norm(),
                closed_form_abs: closed.norm(),
                oracle_vs_closed: (run.coherence - closed).norm(),
                structure_residual: run.residual,
                steps: run.steps,
                n_max: run.n_max,
            };
            let text = serde_json::to_string_pretty(&out)?;
            emit(&output, text)
        }
    }
}
