//! Command-line front end: `simulate`, `oracle`, `fit` and `measure`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::checkpoint::{read_checkpoint, write_checkpoint};
use crate::config::{parse_config, SimConfig};
use crate::diagnostics::alpha_at_point;
use crate::fits::{compare_models, fit_double_exp, fit_power_law, FitResult, Preferred};
use crate::integrator::{run_observed, IntegratorError, RunOptions};
use crate::kernel::{
    alpha_pv_point, k_integral, lemma1_sweep, Branch, KernelTag, Profile, Resolution, SweepEntry, SweepSpec,
};
use crate::models::{Model, ModelTag};
use crate::saddle::{detect_saddles, gamma_ode_ratio, DetectOptions, Region, SaddleRecord, SaddleTrack};
use crate::series::{append_series_row, column, read_series, truncate_series, SaddleColumns, SeriesRow};
use crate::spectral::{Field2D, Grid2D};

#[derive(Debug, Parser)]
#[command(name = "qgsaddle", version, about = "Active scalar solver with saddle tracking and kernel oracles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation described by a config file.
    Simulate {
        config: PathBuf,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Quadrature oracles.
    Oracle {
        #[command(subcommand)]
        which: Oracle,
    },
    /// Fit power-law and double-exponential growth to a series column.
    Fit {
        series: PathBuf,
        #[arg(long, num_args = 2, value_names = ["T0", "T1"], allow_negative_numbers = true)]
        window: Vec<f64>,
        #[arg(long, default_value = "sup_grad")]
        column: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect saddles of a checkpointed field inside a rectangle.
    Measure {
        checkpoint: PathBuf,
        #[arg(long, num_args = 4, value_names = ["X1_MIN", "X1_MAX", "X2_MIN", "X2_MAX"], allow_negative_numbers = true)]
        region: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        frame_angle: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Oracle {
    /// Stream-function difference across a synthetic saddle.
    Lemma1(Lemma1Args),
    /// Branch integrals K(p), K(q) with D = 1 + slope·y₂.
    Kintegral(KintegralArgs),
    /// Principal-value stretching rate versus the local strain formula.
    Alphapv(AlphaPvArgs),
}

#[derive(Debug, Args)]
pub struct Lemma1Args {
    #[arg(long, default_value = "sqg")]
    pub kernel: KernelTag,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.02,0.01")]
    pub gammas: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub y1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.01)]
    pub width: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,0.3", allow_negative_numbers = true)]
    pub offset: Vec<f64>,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub beta_fraction: f64,
    #[arg(long, default_value_t = 5)]
    pub max_levels: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KintegralArgs {
    #[arg(long, default_value_t = 1.0)]
    pub y1: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
    pub gammas: Vec<f64>,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub d_slope: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub beta_fraction: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlphaPvArgs {
    /// Planar checkpoint to evaluate; defaults to sin x₁ sin x₂ on a 32² grid.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = std::f64::consts::PI / 6.0)]
    pub x1: f64,
    #[arg(long, default_value_t = std::f64::consts::PI / 3.0)]
    pub x2: f64,
    #[arg(long, default_value_t = 40.0)]
    pub cutoff: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    match out {
        Some(p) => fs::write(p, text + "\n").map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(format!("cannot write to stdout: {e}")),
            _ => Ok(()),
        },
    }
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn execute(cmd: Command) -> Result<(), String> {
    match cmd {
        Command::Simulate { config, resume } => simulate(&config, resume.as_deref()).map(|_| ()),
        Command::Oracle { which } => match which {
            Oracle::Lemma1(a) => oracle_lemma1(&a),
            Oracle::Kintegral(a) => oracle_kintegral(&a),
            Oracle::Alphapv(a) => oracle_alphapv(&a),
        },
        Command::Fit {
            series,
            window,
            column,
            out,
        } => fit(&series, (window[0], window[1]), &column, out.as_deref()),
        Command::Measure {
            checkpoint,
            region,
            frame_angle,
            out,
        } => measure(&checkpoint, &region, frame_angle, out.as_deref()),
    }
}

#[derive(Debug, Serialize)]
pub struct TrackSummary {
    pub records: usize,
    pub termination: Option<String>,
    pub terminated_at: Option<f64>,
    pub gamma_first: Option<f64>,
    pub gamma_last: Option<f64>,
    pub gamma_ratio: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub config: SimConfig,
    pub resumed_from: Option<String>,
    pub t_start: f64,
    pub t_final: f64,
    pub steps: usize,
    pub snapshots: usize,
    pub checkpoints: Vec<String>,
    pub track: Option<TrackSummary>,
}

fn checkpoint_name(index: usize, t: f64) -> String {
    format!("ckpt_{index:04}_t{t:.6}.bin")
}

/// Runs `simulate`; writes `series.csv`, `checkpoints/`, `track.json` and
/// `run.json` under the configured output directory.
pub fn simulate(config_path: &Path, resume: Option<&Path>) -> Result<RunSummary, String> {
    let text = fs::read_to_string(config_path).map_err(|e| format!("cannot read {}: {e}", config_path.display()))?;
    let config = parse_config(&text).map_err(|e| format!("{}: {e}", config_path.display()))?;
    let out = config.output_dir.clone();
    let ckpt_dir = out.join("checkpoints");
    fs::create_dir_all(&ckpt_dir).map_err(|e| format!("cannot create {}: {e}", ckpt_dir.display()))?;
    let series_path = out.join("series.csv");

    let (initial, t0, bkm_start) = match resume {
        Some(p) => {
            let c = read_checkpoint(p).map_err(|e| e.to_string())?;
            if c.model != config.model || c.state.n() != config.n {
                return Err(format!(
                    "checkpoint holds {} with n = {}, config asks for {} with n = {}",
                    c.model,
                    c.state.n(),
                    config.model,
                    config.n
                ));
            }
            let kept = truncate_series(&series_path, c.t).map_err(|e| e.to_string())?;
            let bkm = kept
                .iter()
                .rev()
                .find(|r| r.diag.t.to_bits() == c.t.to_bits())
                .map(|r| r.diag.bkm_accum)
                .unwrap_or(0.0);
            (c.state, c.t, bkm)
        }
        None => {
            if series_path.exists() {
                fs::remove_file(&series_path).map_err(|e| format!("cannot replace {}: {e}", series_path.display()))?;
            }
            (config.initial_state().map_err(|e| e.to_string())?, 0.0, 0.0)
        }
    };

    let resuming = resume.is_some();
    let ck_interval = config.checkpoint_interval;
    let mut next_ckpt = if resuming && ck_interval > 0.0 {
        ((t0 / ck_interval + 1e-9).floor() + 1.0) * ck_interval
    } else {
        0.0
    };
    let mut written: Vec<String> = Vec::new();
    let first_index = prune_checkpoints(&ckpt_dir, if resuming { t0 } else { f64::NEG_INFINITY })?;
    let mut last_state = None;
    let opts = RunOptions {
        keep_snapshots: false,
        bkm_start,
    };
    let result = run_observed(&config, initial, t0, opts, |view| {
        if resuming && view.index == 0 {
            return Ok(());
        }
        let row = SeriesRow {
            diag: *view.row,
            saddle: view.saddle.map(SaddleColumns::from),
        };
        append_series_row(&series_path, &row).map_err(|e| IntegratorError::Output(e.to_string()))?;
        if ck_interval > 0.0 && view.t >= next_ckpt - 1e-9 * ck_interval {
            let name = checkpoint_name(first_index + written.len(), view.t);
            write_checkpoint(&ckpt_dir.join(&name), view.state, view.t, config.model)
                .map_err(|e| IntegratorError::Output(e.to_string()))?;
            written.push(name);
            while next_ckpt <= view.t + 1e-9 * ck_interval {
                next_ckpt += ck_interval;
            }
        }
        last_state = Some((view.t, view.state.clone()));
        Ok(())
    });
    let traj = result.map_err(|e| e.to_string())?;
    if let Some((t, state)) = &last_state {
        let already = written.last().is_some_and(|n| n.ends_with(&format!("_t{t:.6}.bin")));
        if !already {
            let name = checkpoint_name(first_index + written.len(), *t);
            write_checkpoint(&ckpt_dir.join(&name), state, *t, config.model).map_err(|e| e.to_string())?;
            written.push(name);
        }
    }
    let track = traj.track.as_ref().map(summarize_track);
    if let Some(tr) = &traj.track {
        emit(tr, Some(&out.join("track.json")))?;
    }
    let summary = RunSummary {
        config: config.clone(),
        resumed_from: resume.map(|p| p.display().to_string()),
        t_start: t0,
        t_final: last_state.as_ref().map(|s| s.0).unwrap_or(t0),
        steps: traj.steps,
        snapshots: traj.rows.len(),
        checkpoints: written,
        track,
    };
    emit(&summary, Some(&out.join("run.json")))?;
    Ok(summary)
}

fn parse_checkpoint_name(name: &str) -> Option<(usize, f64)> {
    let rest = name.strip_prefix("ckpt_")?.strip_suffix(".bin")?;
    let (k, t) = rest.split_once("_t")?;
    Some((k.parse().ok()?, t.parse().ok()?))
}

/// Removes checkpoints later than `t0` and returns the next free index.
fn prune_checkpoints(dir: &Path, t0: f64) -> Result<usize, String> {
    let entries = fs::read_dir(dir).map_err(|e| format!("cannot list {}: {e}", dir.display()))?;
    let mut next = 0;
    let t0_label: f64 = format!("{t0:.6}").parse().unwrap_or(t0);
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some((k, t)) = parse_checkpoint_name(&name) else { continue };
        if t > t0_label {
            fs::remove_file(entry.path()).map_err(|e| format!("cannot remove {name}: {e}"))?;
        } else {
            next = next.max(k + 1);
        }
    }
    Ok(next)
}

fn summarize_track(tr: &SaddleTrack) -> TrackSummary {
    TrackSummary {
        records: tr.records.len(),
        termination: tr.termination.map(|t| t.to_string()),
        terminated_at: tr.terminated_at,
        gamma_first: tr.records.first().map(|r| r.gamma),
        gamma_last: tr.records.last().map(|r| r.gamma),
        gamma_ratio: gamma_ode_ratio(tr).ok(),
    }
}

#[derive(Debug, Serialize)]
pub struct Lemma1Report {
    pub kernel: KernelTag,
    pub y1: f64,
    pub support_radius: f64,
    pub profile_width: f64,
    pub envelope_offset: [f64; 2],
    pub beta_fraction: f64,
    pub entries: Vec<SweepEntry>,
    /// max/min ratio over converged, resolvable entries.
    pub ratio_spread: f64,
    pub abs_over_gamma: Vec<f64>,
    pub abs_over_gamma_increasing: bool,
}

pub fn lemma1_report(a: &Lemma1Args) -> Result<Lemma1Report, String> {
    if a.offset.len() != 2 {
        return Err("--offset needs two comma-separated values".into());
    }
    let spec = SweepSpec {
        profile: Profile::Tanh { width: a.width },
        support_radius: a.radius,
        envelope_offset: [a.offset[0], a.offset[1]],
        y1: a.y1,
        beta_fraction: a.beta_fraction,
        resolution: Resolution {
            max_levels: a.max_levels,
            ..Resolution::default()
        },
    };
    let mut gammas = a.gammas.clone();
    gammas.sort_by(|x, y| y.total_cmp(x));
    let entries = lemma1_sweep(&spec, &gammas, a.kernel).map_err(|e| e.to_string())?;
    let good: Vec<&SweepEntry> = entries.iter().filter(|e| e.converged && e.resolvable).collect();
    let max = good.iter().map(|e| e.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min = good.iter().map(|e| e.ratio).fold(f64::INFINITY, f64::min);
    let aog: Vec<f64> = good.iter().map(|e| e.abs / e.gamma).collect();
    Ok(Lemma1Report {
        kernel: a.kernel,
        y1: a.y1,
        support_radius: a.radius,
        profile_width: a.width,
        envelope_offset: spec.envelope_offset,
        beta_fraction: a.beta_fraction,
        ratio_spread: if good.is_empty() { f64::NAN } else { max / min },
        abs_over_gamma_increasing: aog.windows(2).all(|w| w[1] > w[0]),
        abs_over_gamma: aog,
        entries,
    })
}

fn oracle_lemma1(a: &Lemma1Args) -> Result<(), String> {
    let report = lemma1_report(a)?;
    emit(&report, a.out.as_deref())
}

#[derive(Debug, Serialize)]
pub struct KEntry {
    pub gamma: f64,
    pub beta: f64,
    pub delta: f64,
    pub k_p: f64,
    pub k_q: f64,
    pub diff_over_gamma: f64,
}

#[derive(Debug, Serialize)]
pub struct KReport {
    pub y1: f64,
    pub d_slope: f64,
    pub entries: Vec<KEntry>,
    pub spread: f64,
}

pub fn kintegral_report(a: &KintegralArgs) -> Result<KReport, String> {
    let slope = a.d_slope;
    let mut entries = Vec::new();
    for &g in &a.gammas {
        let beta = (a.beta_fraction * g).tan();
        let delta = ((1.0 - a.beta_fraction) * g).tan();
        let d = |_: f64, y2: f64| 1.0 + slope * y2;
        let kp = k_integral(Branch::P, a.y1, beta, delta, d).map_err(|e| e.to_string())?;
        let kq = k_integral(Branch::Q, a.y1, beta, delta, d).map_err(|e| e.to_string())?;
        entries.push(KEntry {
            gamma: g,
            beta,
            delta,
            k_p: kp,
            k_q: kq,
            diff_over_gamma: (kp - kq).abs() / g,
        });
    }
    let max = entries.iter().map(|e| e.diff_over_gamma).fold(f64::NEG_INFINITY, f64::max);
    let min = entries.iter().map(|e| e.diff_over_gamma).fold(f64::INFINITY, f64::min);
    Ok(KReport {
        y1: a.y1,
        d_slope: slope,
        spread: max / min,
        entries,
    })
}

fn oracle_kintegral(a: &KintegralArgs) -> Result<(), String> {
    emit(&kintegral_report(a)?, a.out.as_deref())
}

#[derive(Debug, Serialize)]
pub struct AlphaReport {
    pub x: [f64; 2],
    pub cutoff: f64,
    pub model: ModelTag,
    pub alpha_pv: f64,
    pub alpha_local: f64,
    pub relative_difference: f64,
}

fn oracle_alphapv(a: &AlphaPvArgs) -> Result<(), String> {
    let (model_tag, theta) = match &a.checkpoint {
        Some(p) => {
            let c = read_checkpoint(p).map_err(|e| e.to_string())?;
            let f = c.state.as_plane().cloned().ok_or("alphapv needs a planar checkpoint")?;
            (c.model, f)
        }
        None => {
            let g = Grid2D::new(32).map_err(|e| e.to_string())?;
            (ModelTag::Sqg, Field2D::from_fn(g, |x1, x2| x1.sin() * x2.sin()))
        }
    };
    if model_tag != ModelTag::Sqg {
        return Err("the principal-value representation applies to the sqg model".into());
    }
    let x = [a.x1, a.x2];
    let pv = alpha_pv_point(&theta, x, a.cutoff).map_err(|e| e.to_string())?;
    let model = Model::new(model_tag, theta.grid().n()).map_err(|e| e.to_string())?;
    let local = alpha_at_point(&model, &theta, x)
        .map_err(|e| e.to_string())?
        .ok_or("xi undefined at the requested point")?;
    emit(
        &AlphaReport {
            x,
            cutoff: a.cutoff,
            model: model_tag,
            alpha_pv: pv,
            alpha_local: local,
            relative_difference: (pv - local).abs() / local.abs(),
        },
        a.out.as_deref(),
    )
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub column: String,
    pub window: (f64, f64),
    pub power_law: Option<FitResult>,
    pub power_law_error: Option<String>,
    pub double_exp: Option<FitResult>,
    pub double_exp_error: Option<String>,
    pub preferred: Option<Preferred>,
    pub relative_gap: Option<f64>,
}

pub fn fit_report(series: &[(f64, f64)], window: (f64, f64), column: &str) -> FitReport {
    let pl = fit_power_law(series, window);
    let de = fit_double_exp(series, window);
    let cmp = compare_models(series, window).ok();
    FitReport {
        column: column.to_string(),
        window,
        power_law_error: pl.as_ref().err().map(|e| e.to_string()),
        power_law: pl.ok(),
        double_exp_error: de.as_ref().err().map(|e| e.to_string()),
        double_exp: de.ok(),
        preferred: cmp.as_ref().map(|c| c.preferred),
        relative_gap: cmp.map(|c| c.relative_gap),
    }
}

fn fit(path: &Path, window: (f64, f64), col: &str, out: Option<&Path>) -> Result<(), String> {
    let rows = read_series(path).map_err(|e| e.to_string())?;
    let data = column(&rows, col).map_err(|e| e.to_string())?;
    let report = fit_report(&data, window, col);
    if report.power_law.is_none() && report.double_exp.is_none() {
        return Err(format!(
            "no fit succeeded: power law: {}; double exponential: {}",
            report.power_law_error.unwrap_or_default(),
            report.double_exp_error.unwrap_or_default()
        ));
    }
    emit(&report, out)
}

#[derive(Debug, Serialize)]
pub struct MeasureReport {
    pub t: f64,
    pub model: ModelTag,
    pub n: usize,
    pub region: Region,
    pub saddles: Vec<SaddleRecord>,
}

fn measure(path: &Path, region: &[f64], frame_angle: f64, out: Option<&Path>) -> Result<(), String> {
    let c = read_checkpoint(path).map_err(|e| e.to_string())?;
    let theta = c.state.as_plane().ok_or("measure needs a planar checkpoint")?;
    let region = Region::new([region[0], region[1]], [region[2], region[3]]).map_err(|e| e.to_string())?;
    let opts = DetectOptions {
        frame_angle,
        ..DetectOptions::default()
    };
    let saddles = detect_saddles(theta, region, c.t, &opts).map_err(|e| e.to_string())?;
    emit(
        &MeasureReport {
            t: c.t,
            model: c.model,
            n: theta.grid().n(),
            region,
            saddles,
        },
        out,
    )
}
