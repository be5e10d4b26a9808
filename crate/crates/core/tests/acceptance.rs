//! Acceptance checks, one line per criterion. Exits non-zero when any
//! criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use qgsaddle::config::{Initial, SimConfig};
use qgsaddle::diagnostics::{alpha_at_point, alpha_consistency_check};
use qgsaddle::fits::{compare_models, fit_power_law, FitModel};
use qgsaddle::integrator::{advance_to, integrate, run_observed, RunOptions, StepMode, StepPolicy, Trajectory};
use qgsaddle::kernel::{alpha_pv_point, k_integral, lemma1_sweep, synth_field, Branch, KernelTag, Profile, SweepSpec};
use qgsaddle::models::{Model, ModelTag, State};
use qgsaddle::saddle::{
    detect_saddles, double_exp_envelope, gamma_ode_ratio_series, DetectOptions, EnvelopeMethod, Region,
};
use qgsaddle::spectral::{Field1D, Field2D, Grid2D};

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(id: u32, title: &'static str, pass: bool, detail: String) -> Self {
        Self { id, title, pass, detail }
    }

    fn error(id: u32, title: &'static str, err: impl std::fmt::Display) -> Self {
        Self::new(id, title, false, format!("error: {err}"))
    }

    fn print(&self) {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {:>2} {}: {}", self.id, self.title, self.detail);
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

fn steady_state() -> Outcome {
    const T: &str = "steady state";
    let start = Instant::now();
    let run = || -> Result<f64, Box<dyn std::error::Error>> {
        let model = Model::new(ModelTag::Sqg, 64)?;
        let theta0 = Field2D::from_fn(Grid2D::new(64)?, |_, x2| x2.cos());
        let policy = StepPolicy {
            mode: StepMode::Fixed { dt: 1e-3 },
            t_end: 1.0,
            snapshot_interval: 1.0,
        };
        let mut last = None;
        integrate(&model, State::Plane(theta0.clone()), 0.0, &policy, |t, s| {
            last = Some((t, s.clone()));
            Ok(())
        })?;
        let (t, s) = last.ok_or("no final state")?;
        if (t - 1.0).abs() > 1e-12 {
            return Err(format!("final time {t}").into());
        }
        Ok(s.max_abs_diff(&State::Plane(theta0)))
    };
    match run() {
        Ok(err) => {
            let secs = start.elapsed().as_secs_f64();
            Outcome::new(
                1,
                T,
                err <= 1e-10 && secs < 5.0,
                format!("sup|θ(1) − θ₀| = {err:.3e} (≤ 1e-10), runtime {secs:.2} s (< 5 s)"),
            )
        }
        Err(e) => Outcome::error(1, T, e),
    }
}

fn cmt_config(filter: bool, t_end: f64, interval: f64, region: Option<Region>) -> SimConfig {
    let mut c = SimConfig {
        n: 256,
        initial: Initial::Cmt,
        saddle_region: region,
        ..SimConfig::default()
    };
    c.step.t_end = t_end;
    c.step.snapshot_interval = interval;
    if !filter {
        c.filter = None;
    }
    c
}

fn conservation() -> Outcome {
    const T: &str = "conservation";
    let start = Instant::now();
    let cfg = cmt_config(false, 4.0, 0.25, None);
    let opts = RunOptions {
        keep_snapshots: false,
        bkm_start: 0.0,
    };
    match run_observed(&cfg, cfg.initial_state().unwrap(), 0.0, opts, |_| Ok(())) {
        Ok(traj) => {
            let r0 = traj.rows[0];
            let last = traj.rows.last().unwrap();
            let dl2 = traj
                .rows
                .iter()
                .map(|r| (r.l2_theta - r0.l2_theta).abs() / r0.l2_theta)
                .fold(0.0, f64::max);
            let de = traj
                .rows
                .iter()
                .map(|r| (r.energy - r0.energy).abs() / r0.energy)
                .fold(0.0, f64::max);
            let secs = start.elapsed().as_secs_f64();
            Outcome::new(
                2,
                T,
                dl2 <= 1e-3 && de <= 1e-3 && (last.t - 4.0).abs() < 1e-12 && secs <= 330.0,
                format!(
                    "max relative drift ‖θ‖ {dl2:.3e}, energy {de:.3e} (≤ 1e-3) over t ∈ [0, {}], runtime {secs:.1} s (≤ ~5 min)",
                    last.t
                ),
            )
        }
        Err(e) => Outcome::error(2, T, e),
    }
}

fn clm_exact(x: f64, t: f64) -> f64 {
    let (w, h) = (x.cos(), x.sin());
    4.0 * w / ((2.0 - t * h).powi(2) + t * t * w * w)
}

fn clm_error(model: &Model, dt: f64, t_end: f64) -> Result<f64, Box<dyn std::error::Error>> {
    let mut s = State::Line(Field1D::from_fn(256, f64::cos)?);
    let mut t = 0.0;
    advance_to(model, &mut s, &mut t, t_end, StepMode::Fixed { dt })?;
    let w = s.as_line().ok_or("expected a 1D state")?;
    Ok(w
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (v - clm_exact(i as f64 * w.dx(), t_end)).abs())
        .fold(0.0, f64::max))
}

fn clm() -> Outcome {
    const T: &str = "CLM model";
    let start = Instant::now();
    let run = || -> Result<(f64, f64, f64, f64), Box<dyn std::error::Error>> {
        let model = Model::new(ModelTag::Clm1d, 256)?;
        let err = clm_error(&model, 1e-4, 1.0)?;

        let mut s = State::Line(Field1D::from_fn(256, f64::cos)?);
        let mut t = 0.0;
        let mode = StepMode::Fixed { dt: 1e-4 };
        advance_to(&model, &mut s, &mut t, 1.75, mode)?;
        let y1 = 1.0 / s.as_line().unwrap().max_abs();
        let t1 = t;
        advance_to(&model, &mut s, &mut t, 1.8, mode)?;
        let y2 = 1.0 / s.as_line().unwrap().max_abs();
        let t_blow = t + y2 * (t - t1) / (y1 - y2);

        let coarse = clm_error(&model, 0.04, 1.0)?;
        let fine = clm_error(&model, 0.02, 1.0)?;
        Ok((err, t_blow, coarse / fine, coarse))
    };
    match run() {
        Ok((err, t_blow, ratio, coarse)) => {
            let secs = start.elapsed().as_secs_f64();
            Outcome::new(
                3,
                T,
                err <= 1e-6 && (t_blow - 2.0).abs() <= 0.05 && (12.0..=20.0).contains(&ratio) && secs < 30.0,
                format!(
                    "t=1 error {err:.3e} (≤ 1e-6), extrapolated blow-up {t_blow:.4} (2.00 ± 0.05), \
                     dt-halving ratio {ratio:.2} from dt=0.04 error {coarse:.3e} (∈ [12, 20]), runtime {secs:.1} s (< 30 s)"
                ),
            )
        }
        Err(e) => Outcome::error(3, T, e),
    }
}

fn saddle_region() -> Region {
    Region::new([-0.5, 0.5], [PI - 0.5, PI + 0.5]).unwrap()
}

struct CmtRun {
    traj: Trajectory,
    secs: f64,
    config: SimConfig,
}

fn cmt_run() -> Result<CmtRun, String> {
    let start = Instant::now();
    let config = cmt_config(true, 6.0, 0.05, Some(saddle_region()));
    let traj = run_observed(
        &config,
        config.initial_state().map_err(|e| e.to_string())?,
        0.0,
        RunOptions::default(),
        |_| Ok(()),
    )
    .map_err(|e| e.to_string())?;
    Ok(CmtRun {
        traj,
        secs: start.elapsed().as_secs_f64(),
        config,
    })
}

fn front_formation(run: &CmtRun) -> Outcome {
    const T: &str = "front formation";
    let rows = &run.traj.rows;
    let last = rows.last().unwrap();
    let growth = last.sup_grad / rows[0].sup_grad;
    let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.sup_grad)).collect();
    let window = (3.5, 6.0);
    let cmp = match compare_models(&series, window) {
        Ok(c) => c,
        Err(e) => return Outcome::error(4, T, e),
    };
    let pl = match fit_power_law(&series, window) {
        Ok(f) => f,
        Err(e) => return Outcome::error(4, T, e),
    };
    let FitModel::PowerLaw { t_star, p, .. } = pl.model else {
        unreachable!()
    };
    let FitModel::DoubleExp { a, b, amplitude } = cmp.double_exp.model else {
        unreachable!()
    };
    let pass = growth >= 20.0
        && (7.0..=10.0).contains(&t_star)
        && (1.2..=2.3).contains(&p)
        && pl.converged
        && (last.t - 6.0).abs() < 1e-12
        && run.secs <= 660.0;
    Outcome::new(
        4,
        T,
        pass,
        format!(
            "sup|∇⊥θ| growth {growth:.2}× (≥ 20×); power law T* = {t_star:.3} (∈ [7, 10]), p = {p:.3} (∈ [1.2, 2.3]), \
             rms {:.2e}; double exp a = {a:.4}, b = {b:.4}, A = {amplitude:.4}, rms {:.2e}; preferred {:?} (gap {:.2}); \
             runtime {:.1} s (≤ ~10 min)",
            pl.rms_log_residual, cmp.double_exp.rms_log_residual, cmp.preferred, cmp.relative_gap, run.secs
        ),
    )
}

fn angle_boundedness(run: &CmtRun) -> Outcome {
    const T: &str = "angle boundedness";
    let Some(track) = &run.traj.track else {
        return Outcome::new(5, T, false, "no saddle found in the region at t = 0".into());
    };
    let gam: Vec<(f64, f64)> = track
        .gamma_series()
        .into_iter()
        .filter(|(t, _)| *t >= 1.0 - 1e-9)
        .collect();
    let covered = gam.first().is_some_and(|g| g.0 <= 1.05) && gam.last().is_some_and(|g| g.0 >= 6.0 - 1e-9);
    let positive = gam.iter().all(|g| g.1 > 0.0);
    let min_gamma = gam.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let r = match gamma_ode_ratio_series(&gam) {
        Ok(r) => r,
        Err(e) => return Outcome::error(5, T, e),
    };
    let rs: Vec<f64> = r.iter().map(|x| x.1).collect();
    let max_r = rs.iter().copied().fold(0.0, f64::max);
    let t_max = r.iter().find(|x| x.1 == max_r).map(|x| x.0).unwrap_or(f64::NAN);
    let med = median(rs);
    Outcome::new(
        5,
        T,
        covered && positive && max_r <= 10.0 * med,
        format!(
            "track {} records over t ∈ [{:.3}, {:.3}] (termination {:?}); min γ = {min_gamma:.4e} (> 0); \
             max r = {max_r:.4} at t = {t_max:.3}, median r = {med:.4}, ratio {:.2} (≤ 10)",
            gam.len(),
            gam.first().map_or(f64::NAN, |g| g.0),
            gam.last().map_or(f64::NAN, |g| g.0),
            track.termination,
            max_r / med
        ),
    )
}

fn lemma1() -> Outcome {
    const T: &str = "Lemma 1 oracle";
    let start = Instant::now();
    let gammas = [0.2, 0.1, 0.05, 0.02, 0.01];
    let spec = SweepSpec::default();
    let run = || -> Result<(Vec<_>, Vec<_>), qgsaddle::kernel::OracleError> {
        Ok((
            lemma1_sweep(&spec, &gammas, KernelTag::Sqg)?,
            lemma1_sweep(&spec, &gammas, KernelTag::Euler)?,
        ))
    };
    let (sqg, euler) = match run() {
        Ok(v) => v,
        Err(e) => return Outcome::error(6, T, e),
    };
    let secs = start.elapsed().as_secs_f64();
    let settled = sqg.iter().chain(&euler).all(|e| e.converged && e.resolvable);
    let ratios: Vec<f64> = sqg.iter().map(|e| e.ratio).collect();
    let sqg_spread = spread(&ratios);
    let aog: Vec<f64> = sqg.iter().map(|e| e.abs / e.gamma).collect();
    let increasing = aog.windows(2).all(|w| w[1] > w[0]);
    let e_aog: Vec<f64> = euler.iter().map(|e| e.abs / e.gamma).collect();
    let med = median(e_aog.clone());
    let e_dev = e_aog.iter().map(|v| (v / med - 1.0).abs()).fold(0.0, f64::max);
    Outcome::new(
        6,
        T,
        settled && sqg_spread <= 3.0 && increasing && e_dev <= 0.5 && secs < 120.0,
        format!(
            "sqg |I|/(γ log(1/γ)) spread {sqg_spread:.3} (≤ 3), |I|/γ = {:?} increasing: {increasing}; \
             euler |I|/γ max deviation from median {:.1}% (≤ 50%); all converged and resolvable: {settled}; runtime {secs:.2} s (< 2 min)",
            aog.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            100.0 * e_dev
        ),
    )
}

fn envelope() -> Outcome {
    const T: &str = "envelope";
    let (c, g0) = (0.7, 0.1);
    let ts: Vec<f64> = (0..100).map(|k| 5.0 * k as f64 / 99.0).collect();
    let (closed, numeric) = match (
        double_exp_envelope(c, g0, &ts, EnvelopeMethod::Closed),
        double_exp_envelope(c, g0, &ts, EnvelopeMethod::Numeric),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::error(7, T, e),
    };
    let rel = closed
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).abs() / a)
        .fold(0.0, f64::max);
    let ll: Vec<f64> = numeric.iter().map(|g| (1.0 / g).ln().ln()).collect();
    let n = ts.len() as f64;
    let (mt, ml) = (ts.iter().sum::<f64>() / n, ll.iter().sum::<f64>() / n);
    let sxy: f64 = ts.iter().zip(&ll).map(|(t, l)| (t - mt) * (l - ml)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let resid = ts
        .iter()
        .zip(&ll)
        .map(|(t, l)| (l - ml - slope * (t - mt)).abs())
        .fold(0.0, f64::max);
    Outcome::new(
        7,
        T,
        rel <= 1e-8 && (slope - c).abs() <= 1e-6,
        format!(
            "numeric vs closed form max relative difference {rel:.3e} (≤ 1e-8) at 100 times; \
             slope of log log(1/γ) {slope:.9} vs C = {c} (± 1e-6), max residual {resid:.2e}"
        ),
    )
}

fn stretching(run: &CmtRun) -> Outcome {
    const T: &str = "stretching consistency";
    let h = 0.02;
    let check = || -> Result<(f64, usize, f64, f64), Box<dyn std::error::Error>> {
        let model = run.config.build_model()?;
        let snap = run
            .traj
            .snapshots
            .iter()
            .rev()
            .find(|s| s.t <= 2.0 - h - 0.05)
            .ok_or("no snapshot before t = 2")?;
        let mode = StepMode::Fixed { dt: h / 10.0 };
        let mut s = snap.state.clone();
        let mut t = snap.t;
        let grab = |target: f64, s: &mut State, t: &mut f64| -> Result<Field2D, Box<dyn std::error::Error>> {
            advance_to(&model, s, t, target, mode)?;
            Ok(s.as_plane().ok_or("expected a planar state")?.clone())
        };
        let a = grab(2.0 - h, &mut s, &mut t)?;
        let b = grab(2.0, &mut s, &mut t)?;
        let c = grab(2.0 + h, &mut s, &mut t)?;
        let cons = alpha_consistency_check(&model, [(2.0 - h, &a), (2.0, &b), (2.0 + h, &c)])?;

        let shell = Field2D::from_fn(Grid2D::new(32)?, |x1, x2| x1.sin() * x2.sin());
        let x = [PI / 6.0, PI / 3.0];
        let pv = alpha_pv_point(&shell, x, 40.0)?;
        let local = alpha_at_point(&Model::new(ModelTag::Sqg, 32)?, &shell, x)?.ok_or("ξ undefined")?;
        Ok((cons.median_relative_deviation, cons.points, pv, local))
    };
    match check() {
        Ok((dev, points, pv, local)) => {
            let rel = (pv - local).abs() / local.abs();
            Outcome::new(
                8,
                T,
                dev <= 0.05 && rel <= 0.05,
                format!(
                    "median |D log|∇⊥θ| − α| / |α| = {:.2}% over {points} mask points (≤ 5%), snapshot gap {h}; \
                     PV α = {pv:.6}, local α = {local:.6}, difference {:.3}% (≤ 5%)",
                    100.0 * dev,
                    100.0 * rel
                ),
            )
        }
        Err(e) => Outcome::error(8, T, e),
    }
}

fn velocity_log_bound(run: &CmtRun) -> Outcome {
    const T: &str = "velocity log bound";
    let rows = &run.traj.rows;
    let (r0, last) = (rows[0], rows.last().unwrap());
    let u_growth = rows.iter().map(|r| r.max_u).fold(0.0, f64::max) / r0.max_u;
    let g_growth = last.sup_grad / r0.sup_grad;
    Outcome::new(
        9,
        T,
        u_growth <= 2.0 && g_growth >= 20.0,
        format!("max|u| growth {u_growth:.3}× (≤ 2×) while sup|∇⊥θ| growth {g_growth:.2}× (≥ 20×)"),
    )
}

fn k_integrals() -> Outcome {
    const T: &str = "K integrals";
    let run = || -> Result<(f64, f64, Vec<f64>), qgsaddle::kernel::OracleError> {
        let mut worst = 0.0f64;
        let y1 = 1.0;
        let mut diffs = Vec::new();
        for g in [0.2, 0.1, 0.05] {
            let (beta, delta) = ((g / 3.0f64).tan(), (2.0 * g / 3.0f64).tan());
            for br in [Branch::P, Branch::Q] {
                let k = k_integral(br, y1, beta, delta, |_, _| 1.0)?;
                worst = worst.max((k - 0.5 * y1 * y1).abs());
            }
            let d = |_: f64, y2: f64| 1.0 + 0.1 * y2;
            let kp = k_integral(Branch::P, y1, beta, delta, d)?;
            let kq = k_integral(Branch::Q, y1, beta, delta, d)?;
            diffs.push((kp - kq).abs() / g);
        }
        Ok((worst, spread(&diffs), diffs))
    };
    match run() {
        Ok((worst, sp, diffs)) => Outcome::new(
            10,
            T,
            worst <= 1e-12 && sp <= 2.0,
            format!(
                "D ≡ 1 max |K − y₁²/2| = {worst:.2e} (≤ 1e-12); D = 1 + 0.1 y₂ gives |K(p) − K(q)|/γ = {:?}, spread {sp:.4} (≤ 2)",
                diffs.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>()
            ),
        ),
        Err(e) => Outcome::error(10, T, e),
    }
}

fn synthetic_metrology() -> Outcome {
    const T: &str = "synthetic angle metrology";
    let measure = |profile: Profile, frame: f64| -> Result<(f64, f64, f64), Box<dyn std::error::Error>> {
        let field = synth_field(0.1, 0.2, profile, 3.0)?.with_center([PI, PI]).with_frame_angle(frame);
        let theta = field.rasterize(Grid2D::new(256)?);
        let opts = DetectOptions {
            frame_angle: frame,
            ..DetectOptions::default()
        };
        let found: Vec<_> = detect_saddles(&theta, Region::around([PI, PI], 0.3), 0.0, &opts)?
            .into_iter()
            .filter(|s| !s.degenerate)
            .collect();
        if found.len() != 1 {
            return Err(format!("expected one saddle, found {}", found.len()).into());
        }
        let s = found[0];
        if (s.pos[0] - PI).hypot(s.pos[1] - PI) > 1e-8 {
            return Err(format!("saddle at {:?}, expected (π, π)", s.pos).into());
        }
        Ok((s.beta, s.delta, s.gamma))
    };
    let run = || -> Result<(bool, String), Box<dyn std::error::Error>> {
        let tanh = || Profile::Tanh { width: 0.05 };
        let (b, d, g) = measure(tanh(), 0.0)?;
        let mut rot = 0.0f64;
        for phi in [0.3, 1.0, -0.7, 2.5] {
            rot = rot.max((measure(tanh(), phi)?.2 - g).abs());
        }
        let mut rep = 0.0f64;
        for p in [
            Profile::Linear { scale: 20.0 },
            Profile::Custom(Arc::new(|r: f64| (r / 0.05).atan())),
            Profile::Custom(Arc::new(|r: f64| r + (r / 0.1).tanh())),
        ] {
            rep = rep.max((measure(p, 0.0)?.2 - g).abs());
        }
        let pass = (b - 0.1).abs() <= 1e-3 && (d - 0.2).abs() <= 1e-3 && rot <= 1e-6 && rep <= 1e-6;
        Ok((pass, format!(
            "β̂ = {b:.6} (0.100 ± 1e-3), δ̂ = {d:.6} (0.200 ± 1e-3), γ̂ = {g:.6}; rotation max |Δγ̂| = {rot:.2e} (≤ 1e-6); \
             reparametrization max |Δγ̂| = {rep:.2e} (≤ 1e-6)"
        )))
    };
    match run() {
        Ok((pass, detail)) => Outcome::new(11, T, pass, detail),
        Err(e) => Outcome::error(11, T, e),
    }
}

fn main() {
    let mut outcomes = Vec::new();
    let mut emit = |o: Outcome| {
        o.print();
        outcomes.push(o.pass);
    };
    emit(steady_state());
    emit(clm());
    emit(lemma1());
    emit(envelope());
    emit(k_integrals());
    emit(synthetic_metrology());
    emit(conservation());
    match cmt_run() {
        Ok(run) => {
            emit(front_formation(&run));
            emit(angle_boundedness(&run));
            emit(stretching(&run));
            emit(velocity_log_bound(&run));
        }
        Err(e) => {
            for (id, t) in [
                (4, "front formation"),
                (5, "angle boundedness"),
                (8, "stretching consistency"),
                (9, "velocity log bound"),
            ] {
                emit(Outcome::error(id, t, &e));
            }
        }
    }
    let failed = outcomes.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
