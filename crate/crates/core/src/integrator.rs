//! Classical RK4 stepping, CFL step control and the snapshot-emitting run loop.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SimConfig;
use crate::diagnostics::{snapshot_diagnostics, DiagRow, SaddleDisc};
use crate::models::{Model, ModelError, State};
use crate::saddle::{SaddleRecord, SaddleTrack, SaddleTracker};
use crate::spectral::TWO_PI;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("invalid step policy: {0}")]
    Policy(String),
    #[error("blow-up/instability detected at t = {t}")]
    Instability { t: f64 },
    #[error("{0}")]
    Setup(String),
    #[error("output failed: {0}")]
    Output(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum StepMode {
    Fixed { dt: f64 },
    Cfl { number: f64, dt_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub mode: StepMode,
    pub t_end: f64,
    pub snapshot_interval: f64,
}

impl StepPolicy {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        let bad = |msg: String| Err(IntegratorError::Policy(msg));
        match self.mode {
            StepMode::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return bad(format!("fixed dt must be positive, got {dt}"))
            }
            StepMode::Cfl { number, dt_max } => {
                if !(number > 0.0 && number <= 1.0) {
                    return bad(format!("cfl number must lie in (0, 1], got {number}"));
                }
                if !(dt_max > 0.0 && dt_max.is_finite()) {
                    return bad(format!("dt_max must be positive, got {dt_max}"));
                }
            }
            _ => {}
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.snapshot_interval > 0.0 && self.snapshot_interval.is_finite()) {
            return bad(format!(
                "snapshot_interval must be positive, got {}",
                self.snapshot_interval
            ));
        }
        Ok(())
    }
}

fn check_finite(state: State, t: f64) -> Result<State, IntegratorError> {
    if state.is_finite() {
        Ok(state)
    } else {
        Err(IntegratorError::Instability { t })
    }
}

/// One RK4 step of size `dt` starting at time `t`, followed by the model's
/// filter when one is configured.
pub fn rk4_step(model: &Model, state: &State, t: f64, dt: f64) -> Result<State, IntegratorError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(IntegratorError::BadStep(dt));
    }
    let k1 = model.tendency(state)?;
    let k2 = model.tendency(&state.axpy(0.5 * dt, &k1))?;
    let k3 = model.tendency(&state.axpy(0.5 * dt, &k2))?;
    let k4 = model.tendency(&state.axpy(dt, &k3))?;
    let next = state
        .axpy(dt / 6.0, &k1)
        .axpy(dt / 3.0, &k2)
        .axpy(dt / 3.0, &k3)
        .axpy(dt / 6.0, &k4);
    let next = check_finite(next, t + dt)?;
    let filtered = model.apply_filter(next)?;
    check_finite(filtered, t + dt)
}

/// Largest transport speed used by the CFL rule. For the CLM model the
/// coefficient `Hω` of the tendency plays the role of the velocity.
pub fn transport_speed(model: &Model, state: &State) -> Result<f64, IntegratorError> {
    match state {
        State::Plane(q) => {
            let (u1, u2) = model.velocity(q)?;
            Ok(u1
                .values()
                .iter()
                .zip(u2.values())
                .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b))))
        }
        State::Line(w) => {
            let sp = model.spectral1d().ok_or(ModelError::StateMismatch {
                model: model.tag(),
                found: "1D",
            })?;
            let hw = sp
                .apply_symbol(w, crate::spectral::Symbol::Hilbert1D)
                .map_err(ModelError::from)?;
            Ok(hw.max_abs())
        }
    }
}

/// Step size proposed by the policy, before clipping to `t_end`.
pub fn proposed_dt(model: &Model, state: &State, mode: StepMode) -> Result<f64, IntegratorError> {
    match mode {
        StepMode::Fixed { dt } => Ok(dt),
        StepMode::Cfl { number, dt_max } => {
            let dx = TWO_PI / state.n() as f64;
            let speed = transport_speed(model, state)?;
            Ok(dt_max.min(number * dx / speed.max(1e-12)))
        }
    }
}

/// Advances `state` from `t` to exactly `t_target` under `mode`; returns the
/// number of steps taken.
pub fn advance_to(
    model: &Model,
    state: &mut State,
    t: &mut f64,
    t_target: f64,
    mode: StepMode,
) -> Result<usize, IntegratorError> {
    let mut steps = 0;
    while *t < t_target {
        let dt = proposed_dt(model, state, mode)?;
        let (dt, last) = clip_step(*t, dt, t_target);
        *state = rk4_step(model, state, *t, dt)?;
        *t = if last { t_target } else { *t + dt };
        steps += 1;
    }
    Ok(steps)
}

// A remainder shorter than 1e-9·dt is folded into the final step.
fn clip_step(t: f64, dt: f64, t_end: f64) -> (f64, bool) {
    let remaining = t_end - t;
    if remaining <= dt * (1.0 + 1e-9) {
        (remaining, true)
    } else {
        (dt, false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub state: State,
}

/// Ordered snapshots with one diagnostic row each, plus the saddle track
/// when a region of interest was configured.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub rows: Vec<DiagRow>,
    pub track: Option<SaddleTrack>,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// Runs `model` from `(t0, state)` to `policy.t_end`, calling `observe` at
/// `t0` and at the first step reaching each scheduled time `k·interval`.
/// The final state is always observed. Returns the step count.
pub fn integrate<F>(
    model: &Model,
    mut state: State,
    t0: f64,
    policy: &StepPolicy,
    mut observe: F,
) -> Result<usize, IntegratorError>
where
    F: FnMut(f64, &State) -> Result<(), IntegratorError>,
{
    policy.validate()?;
    let mut t = t0;
    observe(t, &state)?;
    let interval = policy.snapshot_interval;
    let mut k = (t0 / interval + 1e-9).floor() as u64 + 1;
    let mut steps = 0;
    let mut last_emitted = t;
    while t < policy.t_end {
        let dt = proposed_dt(model, &state, policy.mode)?;
        let (dt, last) = clip_step(t, dt, policy.t_end);
        state = rk4_step(model, &state, t, dt)?;
        t = if last { policy.t_end } else { t + dt };
        steps += 1;
        let scheduled = k as f64 * interval;
        if t >= scheduled - 1e-9 * interval {
            observe(t, &state)?;
            last_emitted = t;
            while k as f64 * interval <= t + 1e-9 * interval {
                k += 1;
            }
        }
    }
    if last_emitted < t {
        observe(t, &state)?;
    }
    Ok(steps)
}

/// Full simulation: initial data from the config preset, diagnostics per
/// snapshot, and saddle tracking inside the configured region.
pub fn run(config: &SimConfig) -> Result<Trajectory, IntegratorError> {
    let initial = config
        .initial_state()
        .map_err(|e| IntegratorError::Setup(e.to_string()))?;
    run_observed(config, initial, 0.0, RunOptions::default(), |_| Ok(()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub keep_snapshots: bool,
    /// Starting value of the accumulated `∫ sup|∇⊥θ| dt`.
    pub bkm_start: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            keep_snapshots: true,
            bkm_start: 0.0,
        }
    }
}

/// Everything known at one snapshot, handed to the observer of
/// [`run_observed`].
#[derive(Debug)]
pub struct SnapshotView<'a> {
    pub index: usize,
    pub t: f64,
    pub state: &'a State,
    pub row: &'a DiagRow,
    pub saddle: Option<&'a SaddleRecord>,
}

/// Runs from an explicit state and time, calling `observe` after the
/// diagnostics of each snapshot are computed.
pub fn run_observed<F>(
    config: &SimConfig,
    initial: State,
    t0: f64,
    opts: RunOptions,
    mut observe: F,
) -> Result<Trajectory, IntegratorError>
where
    F: FnMut(&SnapshotView<'_>) -> Result<(), IntegratorError>,
{
    let model = config.build_model().map_err(|e| IntegratorError::Setup(e.to_string()))?;
    if initial.kind() != State::kind_for(config.model) || initial.n() != config.n {
        return Err(IntegratorError::Setup(format!(
            "initial state ({}, n = {}) does not match the configuration ({}, n = {})",
            initial.kind(),
            initial.n(),
            config.model,
            config.n
        )));
    }
    let mut traj = Trajectory::default();
    let mut tracker: Option<SaddleTracker> = None;
    let mut tracking_failed = false;
    let mut last_row: Option<DiagRow> = None;
    let mut index = 0;
    let disc_radius = config.saddle_disc_radius;
    let steps = integrate(&model, initial, t0, &config.step, |t, state| {
        let mut current: Option<SaddleRecord> = None;
        if let (Some(region), State::Plane(theta)) = (config.saddle_region, state) {
            match tracker.as_mut() {
                None if !tracking_failed => {
                    match SaddleTracker::seed_in_region(theta, t, region, config.tracker_options()) {
                        Some(tr) => {
                            current = tr.current().copied();
                            tracker = Some(tr);
                        }
                        None => tracking_failed = true,
                    }
                }
                Some(tr) => current = tr.push(theta, t).copied(),
                None => {}
            }
        }
        let disc = current.as_ref().map(|r| SaddleDisc {
            center: r.pos,
            radius: disc_radius,
        });
        let mut row = snapshot_diagnostics(&model, state, t, disc)?;
        row.bkm_accum = match last_row {
            Some(prev) => prev.bkm_accum + 0.5 * (row.t - prev.t) * (row.sup_grad + prev.sup_grad),
            None => opts.bkm_start,
        };
        observe(&SnapshotView {
            index,
            t,
            state,
            row: &row,
            saddle: current.as_ref(),
        })?;
        index += 1;
        last_row = Some(row);
        traj.rows.push(row);
        if opts.keep_snapshots {
            traj.snapshots.push(Snapshot {
                t,
                state: state.clone(),
            });
        }
        Ok(())
    })?;
    traj.steps = steps;
    traj.track = tracker.map(SaddleTracker::finish);
    Ok(traj)
}
