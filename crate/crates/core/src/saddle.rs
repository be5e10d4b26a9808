//! Saddle detection, separatrix geometry, tracking across snapshots and the
//! opening-angle growth diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{derivatives, periodic_distance, Derivatives};
use crate::spectral::{Field2D, Jet2, Spectral2D, SpectralError, TrigInterpolant, TWO_PI};

#[derive(Debug, Error)]
pub enum SaddleError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid region: {0}")]
    Region(String),
    #[error("no critical point found in the region")]
    NoCriticalPoint,
    #[error("critical point at ({}, {}) is not an extremum", .pos[0], .pos[1])]
    NotElliptic { pos: [f64; 2] },
    #[error("need at least {needed} records, found {found}")]
    TooFewRecords { needed: usize, found: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Axis-aligned rectangle on the periodic square. Bounds may extend past
/// `[0, 2π)`; positions are reported in the rectangle's own coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
}

impl Region {
    pub fn new(x1: [f64; 2], x2: [f64; 2]) -> Result<Self, SaddleError> {
        for (name, r) in [("x1", x1), ("x2", x2)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(SaddleError::Region(format!("{name} bounds {r:?} are not increasing")));
            }
            if r[1] - r[0] > TWO_PI + 1e-12 {
                return Err(SaddleError::Region(format!("{name} bounds {r:?} span more than 2π")));
            }
        }
        Ok(Self { x1, x2 })
    }

    pub fn full() -> Self {
        Self {
            x1: [0.0, TWO_PI],
            x2: [0.0, TWO_PI],
        }
    }

    pub fn around(center: [f64; 2], half_width: f64) -> Self {
        let h = half_width.min(std::f64::consts::PI);
        Self {
            x1: [center[0] - h, center[0] + h],
            x2: [center[1] - h, center[1] + h],
        }
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x1[0] + self.x1[1]), 0.5 * (self.x2[0] + self.x2[1])]
    }

    /// Maps a point to the periodic copy whose coordinates start at the
    /// region's lower corner.
    pub fn to_frame(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.x1[0] + (p[0] - self.x1[0]).rem_euclid(TWO_PI),
            self.x2[0] + (p[1] - self.x2[0]).rem_euclid(TWO_PI),
        ]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let q = self.to_frame(p);
        q[0] <= self.x1[1] && q[1] <= self.x2[1]
    }
}

/// Which sign sector of the Hessian quadratic form is reported as the
/// opening of the saddle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Saddle,
    Extremum,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub pos: [f64; 2],
    pub jet: Jet2,
    pub kind: CriticalKind,
}

/// Measured local geometry of one saddle.
///
/// `beta` and `delta` are the slopes of the two branch lines relative to the
/// axis at `frame_angle`, so that `gamma = atan(beta) + atan(delta)` whenever
/// both branches are non-vertical in that frame (`out_of_model` is set
/// otherwise, or when a slope exceeds the configured bound).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleRecord {
    pub t: f64,
    pub pos: [f64; 2],
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub frame_angle: f64,
    pub bisector_angle: f64,
    pub sector: Sector,
    pub quality: f64,
    pub degenerate: bool,
    pub out_of_model: bool,
    pub hessian: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectOptions {
    pub frame_angle: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub degeneracy: f64,
    pub slope_bound: f64,
    pub interp_tol: f64,
    /// Forces the reported sector instead of the acute one.
    pub sector: Option<Sector>,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            frame_angle: 0.0,
            newton_tol: 1e-10,
            max_newton: 50,
            degeneracy: 1e-8,
            slope_bound: 100.0,
            interp_tol: 1e-14,
            sector: None,
        }
    }
}

/// Eigen-decomposition of a symmetric 2×2 matrix: `(λ₊, λ₋, angle of e₊)`.
fn sym_eigen(h: [[f64; 2]; 2]) -> (f64, f64, f64) {
    let (a, b, c) = (h[0][0], h[0][1], h[1][1]);
    let m = 0.5 * (a + c);
    let r = (0.5 * (a - c)).hypot(b);
    (m + r, m - r, 0.5 * (2.0 * b).atan2(a - c))
}

fn wrap_half_pi(a: f64) -> f64 {
    let mut a = a.rem_euclid(std::f64::consts::PI);
    if a > std::f64::consts::FRAC_PI_2 {
        a -= std::f64::consts::PI;
    }
    a
}

/// Separatrix geometry of a non-degenerate saddle Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleGeometry {
    pub gamma: f64,
    pub bisector_angle: f64,
    pub sector: Sector,
    pub beta: f64,
    pub delta: f64,
    pub in_frame: bool,
}

pub fn saddle_geometry(
    h: [[f64; 2]; 2],
    sector: Option<Sector>,
    frame_angle: f64,
) -> Option<SaddleGeometry> {
    let (lp, lm, ang) = sym_eigen(h);
    if !(lp > 0.0 && lm < 0.0) {
        return None;
    }
    let half_pos = (lp / -lm).sqrt().atan();
    let sector = sector.unwrap_or(if half_pos <= std::f64::consts::FRAC_PI_4 {
        Sector::Positive
    } else {
        Sector::Negative
    });
    let (half, bis) = match sector {
        Sector::Positive => (half_pos, ang),
        Sector::Negative => (std::f64::consts::FRAC_PI_2 - half_pos, ang + std::f64::consts::FRAC_PI_2),
    };
    let psi = wrap_half_pi(bis - frame_angle);
    let upper = psi + half;
    let lower = half - psi;
    let lim = std::f64::consts::FRAC_PI_2;
    Some(SaddleGeometry {
        gamma: 2.0 * half,
        bisector_angle: wrap_half_pi(bis),
        sector,
        beta: lower.tan(),
        delta: upper.tan(),
        in_frame: upper.abs() < lim && lower.abs() < lim,
    })
}

/// Spectral view of one field used for critical-point searches.
pub struct FieldProbe {
    grid_n: usize,
    dx: f64,
    interp: TrigInterpolant,
    deriv: Derivatives,
    values: Field2D,
    grad_scale: f64,
    hess_scale: f64,
}

impl fmt::Debug for FieldProbe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldProbe")
            .field("n", &self.grid_n)
            .field("modes", &self.interp.mode_count())
            .finish()
    }
}

impl FieldProbe {
    pub fn new(field: &Field2D, interp_tol: f64) -> Result<Self, SaddleError> {
        let sp = Spectral2D::new(field.grid());
        let spectrum = sp.forward(field)?;
        let deriv = derivatives(&sp, &spectrum)?;
        let mut grad_scale = 0.0f64;
        let mut hess_scale = 0.0f64;
        for k in 0..field.grid().len() {
            grad_scale = grad_scale.max(deriv.d1.values()[k].hypot(deriv.d2.values()[k]));
            let (a, b, c) = (deriv.d11.values()[k], deriv.d12.values()[k], deriv.d22.values()[k]);
            hess_scale = hess_scale.max((a * a + 2.0 * b * b + c * c).sqrt());
        }
        Ok(Self {
            grid_n: field.grid().n(),
            dx: field.grid().dx(),
            interp: TrigInterpolant::from_spectrum(&spectrum, interp_tol),
            deriv,
            values: field.clone(),
            grad_scale,
            hess_scale,
        })
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn jet(&self, p: [f64; 2]) -> Jet2 {
        self.interp.jet(p[0], p[1])
    }

    fn node(&self, i: i64, j: i64) -> usize {
        let n = self.grid_n as i64;
        (j.rem_euclid(n) * n + i.rem_euclid(n)) as usize
    }

    fn newton(&self, seed: [f64; 2], opts: &DetectOptions) -> Option<[f64; 2]> {
        let tol = opts.newton_tol * self.grad_scale.max(1.0);
        let mut p = seed;
        for _ in 0..opts.max_newton {
            let jet = self.jet(p);
            let g = jet.grad();
            if g[0].hypot(g[1]) <= tol {
                return Some(p);
            }
            let step = pinv_solve(jet.hessian(), g);
            p = [p[0] - step[0], p[1] - step[1]];
            if periodic_distance(p, seed) > 3.0 * self.dx || !step[0].is_finite() || !step[1].is_finite() {
                return None;
            }
            if step[0].hypot(step[1]) < 1e-15 {
                let g = self.jet(p).grad();
                return (g[0].hypot(g[1]) <= 1e3 * tol).then_some(p);
            }
        }
        let g = self.jet(p).grad();
        (g[0].hypot(g[1]) <= tol).then_some(p)
    }

    /// Critical points in `region`, seeded from grid cells where both
    /// gradient components change sign and refined by Newton's method.
    pub fn critical_points(&self, region: Region, opts: &DetectOptions) -> Vec<CriticalPoint> {
        let dx = self.dx;
        let i_lo = (region.x1[0] / dx).floor() as i64 - 1;
        let i_hi = (region.x1[1] / dx).ceil() as i64;
        let j_lo = (region.x2[0] / dx).floor() as i64 - 1;
        let j_hi = (region.x2[1] / dx).ceil() as i64;
        let (d1, d2) = (self.deriv.d1.values(), self.deriv.d2.values());
        let thr = opts.degeneracy * self.hess_scale * self.hess_scale;
        let mut found: Vec<CriticalPoint> = Vec::new();
        for j in j_lo..=j_hi.min(j_lo + self.grid_n as i64) {
            for i in i_lo..=i_hi.min(i_lo + self.grid_n as i64) {
                let corners = [self.node(i, j), self.node(i + 1, j), self.node(i, j + 1), self.node(i + 1, j + 1)];
                let spans = |v: &[f64]| {
                    let lo = corners.iter().map(|&k| v[k]).fold(f64::INFINITY, f64::min);
                    let hi = corners.iter().map(|&k| v[k]).fold(f64::NEG_INFINITY, f64::max);
                    lo <= 0.0 && hi >= 0.0
                };
                if !(spans(d1) && spans(d2)) {
                    continue;
                }
                // corner seeds resolve critical points closer together than a cell
                for (si, sj) in [(0.5, 0.5), (0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                    let seed = [(i as f64 + si) * dx, (j as f64 + sj) * dx];
                    let Some(p) = self.newton(seed, opts) else { continue };
                    if !region.contains(p) {
                        continue;
                    }
                    let p = region.to_frame(p);
                    if found.iter().any(|c| periodic_distance(c.pos, p) < 1e-3 * dx) {
                        continue;
                    }
                    let jet = self.jet(p);
                    let det = jet.f11 * jet.f22 - jet.f12 * jet.f12;
                    let kind = if det.abs() <= thr {
                        CriticalKind::Degenerate
                    } else if det < 0.0 {
                        CriticalKind::Saddle
                    } else {
                        CriticalKind::Extremum
                    };
                    found.push(CriticalPoint { pos: p, jet, kind });
                }
            }
        }
        found
    }

    // RMS misfit of the local quadratic model on the 5×5 grid patch around
    // `p`, relative to the quadratic's own variation over the patch.
    fn quadratic_misfit(&self, p: [f64; 2], jet: &Jet2) -> f64 {
        let dx = self.dx;
        let ic = (p[0] / dx).round() as i64;
        let jc = (p[1] / dx).round() as i64;
        let mut sq = 0.0;
        let mut count = 0.0;
        for dj in -2..=2 {
            for di in -2..=2 {
                let (i, j) = (ic + di, jc + dj);
                let y = [i as f64 * dx - p[0], j as f64 * dx - p[1]];
                let model = jet.f
                    + jet.f1 * y[0]
                    + jet.f2 * y[1]
                    + 0.5 * (jet.f11 * y[0] * y[0] + 2.0 * jet.f12 * y[0] * y[1] + jet.f22 * y[1] * y[1]);
                let r = self.values.values()[self.node(i, j)] - model;
                sq += r * r;
                count += 1.0;
            }
        }
        let (lp, lm, _) = sym_eigen(jet.hessian());
        let scale = 0.5 * lp.abs().max(lm.abs()) * 8.0 * dx * dx;
        if scale == 0.0 {
            return f64::INFINITY;
        }
        (sq / count).sqrt() / scale
    }

    pub fn record(&self, cp: &CriticalPoint, t: f64, opts: &DetectOptions) -> Option<SaddleRecord> {
        let h = cp.jet.hessian();
        let degenerate = cp.kind == CriticalKind::Degenerate;
        if cp.kind == CriticalKind::Extremum {
            return None;
        }
        let geo = saddle_geometry(h, opts.sector, opts.frame_angle);
        let (gamma, bis, sector, beta, delta, in_frame) = match geo {
            Some(g) => (g.gamma, g.bisector_angle, g.sector, g.beta, g.delta, g.in_frame),
            None if degenerate => (0.0, 0.0, Sector::Positive, 0.0, 0.0, false),
            None => return None,
        };
        let out_of_model = !in_frame || beta.abs() > opts.slope_bound || delta.abs() > opts.slope_bound;
        Some(SaddleRecord {
            t,
            pos: cp.pos,
            beta,
            delta,
            gamma,
            frame_angle: opts.frame_angle,
            bisector_angle: bis,
            sector,
            quality: self.quadratic_misfit(cp.pos, &cp.jet),
            degenerate,
            out_of_model,
            hessian: h,
        })
    }
}

fn pinv_solve(h: [[f64; 2]; 2], g: [f64; 2]) -> [f64; 2] {
    let (lp, lm, ang) = sym_eigen(h);
    let (c, s) = (ang.cos(), ang.sin());
    let ep = [c, s];
    let em = [-s, c];
    let cut = 1e-12 * lp.abs().max(lm.abs());
    let mut out = [0.0; 2];
    for (lam, e) in [(lp, ep), (lm, em)] {
        if lam.abs() > cut && lam != 0.0 {
            let coef = (e[0] * g[0] + e[1] * g[1]) / lam;
            out[0] += coef * e[0];
            out[1] += coef * e[1];
        }
    }
    out
}

/// All saddles of `field` inside `region`. Degenerate critical points with
/// non-positive Hessian determinant are included with `degenerate` set.
pub fn detect_saddles(
    field: &Field2D,
    region: Region,
    t: f64,
    opts: &DetectOptions,
) -> Result<Vec<SaddleRecord>, SaddleError> {
    let probe = FieldProbe::new(field, opts.interp_tol)?;
    Ok(probe
        .critical_points(region, opts)
        .iter()
        .filter_map(|cp| probe.record(cp, t, opts))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Lost,
    Merged,
    LeftRegion,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Lost => "lost",
            Termination::Merged => "merged",
            Termination::LeftRegion => "left-region",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleTrack {
    pub records: Vec<SaddleRecord>,
    pub termination: Option<Termination>,
    pub terminated_at: Option<f64>,
}

impl SaddleTrack {
    pub fn gamma_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.gamma)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    pub detect: DetectOptions,
    /// Continuity radius in grid cells.
    pub continuity_cells: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            detect: DetectOptions::default(),
            continuity_cells: 10.0,
        }
    }
}

/// Incremental tracker: feed snapshots in time order with [`push`](Self::push).
#[derive(Debug, Clone)]
pub struct SaddleTracker {
    region: Region,
    opts: TrackOptions,
    track: SaddleTrack,
}

impl SaddleTracker {
    /// Seeds from the non-degenerate saddle nearest the region center.
    pub fn seed_in_region(theta: &Field2D, t: f64, region: Region, opts: TrackOptions) -> Option<Self> {
        let saddles = detect_saddles(theta, region, t, &opts.detect).ok()?;
        let c = region.center();
        let seed = saddles
            .into_iter()
            .filter(|r| !r.degenerate)
            .min_by(|a, b| periodic_distance(a.pos, c).total_cmp(&periodic_distance(b.pos, c)))?;
        Some(Self::from_seed(seed, region, opts))
    }

    pub fn from_seed(seed: SaddleRecord, region: Region, mut opts: TrackOptions) -> Self {
        opts.detect.sector = Some(seed.sector);
        opts.detect.frame_angle = seed.frame_angle;
        Self {
            region,
            opts,
            track: SaddleTrack {
                records: vec![seed],
                termination: None,
                terminated_at: None,
            },
        }
    }

    pub fn current(&self) -> Option<&SaddleRecord> {
        if self.track.termination.is_some() {
            None
        } else {
            self.track.records.last()
        }
    }

    pub fn track(&self) -> &SaddleTrack {
        &self.track
    }

    fn terminate(&mut self, reason: Termination, t: f64) {
        self.track.termination = Some(reason);
        self.track.terminated_at = Some(t);
    }

    /// Advances the track to a new snapshot; returns the new record while
    /// the track is alive.
    pub fn push(&mut self, theta: &Field2D, t: f64) -> Option<&SaddleRecord> {
        let prev = *self.current()?;
        let dx = theta.grid().dx();
        let rc = self.opts.continuity_cells * dx;
        let window = Region::around(prev.pos, rc + 2.0 * dx);
        let probe = match FieldProbe::new(theta, self.opts.detect.interp_tol) {
            Ok(p) => p,
            Err(_) => {
                self.terminate(Termination::Lost, t);
                return None;
            }
        };
        let mut near: Vec<(f64, CriticalPoint)> = probe
            .critical_points(window, &self.opts.detect)
            .into_iter()
            .filter(|cp| cp.kind != CriticalKind::Extremum)
            .map(|cp| (periodic_distance(cp.pos, prev.pos), cp))
            .filter(|(d, _)| *d <= rc)
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0));
        let Some((_, best)) = near.first() else {
            self.terminate(Termination::Lost, t);
            return None;
        };
        if best.kind == CriticalKind::Degenerate {
            self.terminate(Termination::Merged, t);
            return None;
        }
        let Some(mut rec) = probe.record(best, t, &self.opts.detect) else {
            self.terminate(Termination::Lost, t);
            return None;
        };
        if !self.region.contains(rec.pos) {
            self.terminate(Termination::LeftRegion, t);
            return None;
        }
        rec.pos = self.region.to_frame(rec.pos);
        self.track.records.push(rec);
        self.track.records.last()
    }

    pub fn finish(self) -> SaddleTrack {
        self.track
    }
}

/// Tracks the saddle nearest `seed` (searched within the continuity radius
/// at the first snapshot) through `snapshots`.
pub fn track_saddle(
    snapshots: &[(f64, &Field2D)],
    seed: [f64; 2],
    region: Region,
    opts: TrackOptions,
) -> Result<SaddleTrack, SaddleError> {
    let (&(t0, first), rest) = snapshots
        .split_first()
        .ok_or(SaddleError::TooFewRecords { needed: 1, found: 0 })?;
    let rc = opts.continuity_cells * first.grid().dx();
    let probe = FieldProbe::new(first, opts.detect.interp_tol)?;
    let seed_rec = probe
        .critical_points(Region::around(seed, rc + 2.0 * probe.dx()), &opts.detect)
        .into_iter()
        .filter(|cp| cp.kind == CriticalKind::Saddle && periodic_distance(cp.pos, seed) <= rc)
        .min_by(|a, b| periodic_distance(a.pos, seed).total_cmp(&periodic_distance(b.pos, seed)))
        .and_then(|cp| probe.record(&cp, t0, &opts.detect))
        .ok_or(SaddleError::NoCriticalPoint)?;
    let mut tracker = SaddleTracker::from_seed(
        SaddleRecord {
            pos: region.to_frame(seed_rec.pos),
            ..seed_rec
        },
        region,
        opts,
    );
    for &(t, f) in rest {
        if tracker.push(f, t).is_none() {
            break;
        }
    }
    Ok(tracker.finish())
}

fn quadratic_value_at_center(ts: &[f64], ys: &[f64], t0: f64) -> f64 {
    // least squares for y ≈ a + b s + c s², s = t - t0
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (&t, &y) in ts.iter().zip(ys) {
        let s = t - t0;
        let basis = [1.0, s, s * s];
        for a in 0..3 {
            r[a] += basis[a] * y;
            for b in 0..3 {
                m[a][b] += basis[a] * basis[b];
            }
        }
    }
    solve3(m, r)[0]
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap_or(col);
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = r[row];
        for k in row + 1..3 {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    x
}

/// `|dγ/dt| / (γ (1 + |log γ|))` along a `(t, γ)` series. `γ` is first
/// smoothed by a moving 5-point least-squares quadratic; the derivative is a
/// central difference of the smoothed series (one-sided at the ends).
pub fn gamma_ode_ratio_series(series: &[(f64, f64)]) -> Result<Vec<(f64, f64)>, SaddleError> {
    let n = series.len();
    if n < 5 {
        return Err(SaddleError::TooFewRecords { needed: 5, found: n });
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(SaddleError::InvalidInput("times must be strictly increasing".into()));
    }
    let ts: Vec<f64> = series.iter().map(|s| s.0).collect();
    let gs: Vec<f64> = series.iter().map(|s| s.1).collect();
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(2).min(n - 5);
            quadratic_value_at_center(&ts[lo..lo + 5], &gs[lo..lo + 5], ts[i])
        })
        .collect();
    let deriv = |i: usize| -> f64 {
        if i == 0 {
            (smooth[1] - smooth[0]) / (ts[1] - ts[0])
        } else if i == n - 1 {
            (smooth[n - 1] - smooth[n - 2]) / (ts[n - 1] - ts[n - 2])
        } else {
            let (h0, h1) = (ts[i] - ts[i - 1], ts[i + 1] - ts[i]);
            // three-point derivative on a non-uniform stencil
            (-h1 / (h0 * (h0 + h1))) * smooth[i - 1]
                + ((h1 - h0) / (h0 * h1)) * smooth[i]
                + (h0 / (h1 * (h0 + h1))) * smooth[i + 1]
        }
    };
    Ok((0..n)
        .map(|i| {
            let g = smooth[i];
            (ts[i], deriv(i).abs() / (g * (1.0 + g.ln().abs())))
        })
        .collect())
}

pub fn gamma_ode_ratio(track: &SaddleTrack) -> Result<Vec<(f64, f64)>, SaddleError> {
    gamma_ode_ratio_series(&track.gamma_series())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeMethod {
    Closed,
    Numeric,
}

/// Solution of `γ' = −Cγ(1 + |log γ|)` from `γ(0) = γ₀ ∈ (0, 1)`.
///
/// The closed form is `exp(−e^{Ct} ln(1/γ₀))`; the numeric branch integrates
/// the equation in `u = ln(1/γ)` with RK4 at step `min gap / 100`.
pub fn double_exp_envelope(
    c: f64,
    gamma0: f64,
    times: &[f64],
    method: EnvelopeMethod,
) -> Result<Vec<f64>, SaddleError> {
    if !(gamma0 > 0.0 && gamma0 < 1.0) {
        return Err(SaddleError::InvalidInput(format!("gamma0 must lie in (0, 1), got {gamma0}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(SaddleError::InvalidInput(format!("C must be non-negative, got {c}")));
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(SaddleError::InvalidInput("times must be non-negative and sorted".into()));
    }
    let u0 = -gamma0.ln();
    match method {
        EnvelopeMethod::Closed => Ok(times.iter().map(|&t| (-(c * t).exp() * u0).exp()).collect()),
        EnvelopeMethod::Numeric => {
            let mut min_gap = times.first().copied().unwrap_or(0.0);
            for w in times.windows(2) {
                if w[1] > w[0] {
                    min_gap = if min_gap > 0.0 { min_gap.min(w[1] - w[0]) } else { w[1] - w[0] };
                }
            }
            let h = if min_gap > 0.0 { min_gap / 100.0 } else { 1e-3 };
            // u = ln(1/γ) obeys u' = C u
            let f = |u: f64| c * u;
            let mut out = Vec::with_capacity(times.len());
            let (mut t, mut u) = (0.0f64, u0);
            for &target in times {
                let span = target - t;
                if span > 0.0 {
                    let steps = (span / h).ceil().max(1.0) as usize;
                    let dt = span / steps as f64;
                    for _ in 0..steps {
                        let k1 = f(u);
                        let k2 = f(u + 0.5 * dt * k1);
                        let k3 = f(u + 0.5 * dt * k2);
                        let k4 = f(u + dt * k3);
                        u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                    }
                    t = target;
                }
                out.push((-u).exp());
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

/// Local elliptic model `θ ≈ θ₀ ∓ (a y₁'² + b y₂'²)` in the principal axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseFit {
    pub center: [f64; 2],
    pub a: f64,
    pub b: f64,
    pub aspect: f64,
    pub angle: f64,
    pub kind: ExtremumKind,
}

/// Fits the elliptic model at the critical point nearest the region center.
pub fn fit_ellipse(field: &Field2D, region: Region, opts: &DetectOptions) -> Result<EllipseFit, SaddleError> {
    let probe = FieldProbe::new(field, opts.interp_tol)?;
    let c = region.center();
    let cp = probe
        .critical_points(region, opts)
        .into_iter()
        .min_by(|a, b| periodic_distance(a.pos, c).total_cmp(&periodic_distance(b.pos, c)))
        .ok_or(SaddleError::NoCriticalPoint)?;
    if cp.kind != CriticalKind::Extremum {
        return Err(SaddleError::NotElliptic { pos: cp.pos });
    }
    let (lp, lm, ang) = sym_eigen(cp.jet.hessian());
    let kind = if lp < 0.0 {
        ExtremumKind::Maximum
    } else {
        ExtremumKind::Minimum
    };
    // a is the flatter direction
    let (small, large, axis) = if lp.abs() <= lm.abs() {
        (lp.abs(), lm.abs(), ang)
    } else {
        (lm.abs(), lp.abs(), ang + std::f64::consts::FRAC_PI_2)
    };
    Ok(EllipseFit {
        center: cp.pos,
        a: 0.5 * small,
        b: 0.5 * large,
        aspect: large / small,
        angle: wrap_half_pi(axis),
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid2D;
    use std::f64::consts::PI;

    fn cmt(n: usize) -> Field2D {
        Field2D::from_fn(Grid2D::new(n).unwrap(), |x1, x2| x1.sin() * x2.sin() + x2.cos())
    }

    #[test]
    fn cmt_initial_saddles_match_brute_force() {
        // brute-force scan of the analytic gradient on a fine grid
        let m = 4096;
        let h = TWO_PI / m as f64;
        let grad = |x1: f64, x2: f64| [x1.cos() * x2.sin(), x1.sin() * x2.cos() - x2.sin()];
        let hess = |x1: f64, x2: f64| {
            [
                [-x1.sin() * x2.sin(), x1.cos() * x2.cos()],
                [x1.cos() * x2.cos(), -x1.sin() * x2.sin() - x2.cos()],
            ]
        };
        let mut brute: Vec<[f64; 2]> = Vec::new();
        for j in 0..m {
            for i in 0..m {
                let (a, b) = (i as f64 * h, j as f64 * h);
                let cs = [grad(a, b), grad(a + h, b), grad(a, b + h), grad(a + h, b + h)];
                let span = |c: usize| {
                    let lo = cs.iter().map(|g| g[c]).fold(f64::INFINITY, f64::min);
                    let hi = cs.iter().map(|g| g[c]).fold(f64::NEG_INFINITY, f64::max);
                    lo <= 0.0 && hi >= 0.0
                };
                if !(span(0) && span(1)) {
                    continue;
                }
                let mut p = [a + 0.5 * h, b + 0.5 * h];
                for _ in 0..30 {
                    let g = grad(p[0], p[1]);
                    let s = pinv_solve(hess(p[0], p[1]), g);
                    p = [p[0] - s[0], p[1] - s[1]];
                }
                let hh = hess(p[0], p[1]);
                if hh[0][0] * hh[1][1] - hh[0][1] * hh[1][0] < -1e-8
                    && !brute.iter().any(|q| periodic_distance(*q, p) < 1e-6)
                {
                    brute.push(p);
                }
            }
        }
        let found = detect_saddles(&cmt(64), Region::full(), 0.0, &DetectOptions::default()).unwrap();
        let found: Vec<_> = found.iter().filter(|r| !r.degenerate).collect();
        assert_eq!(found.len(), brute.len(), "{found:?} vs {brute:?}");
        for p in &brute {
            assert!(found.iter().any(|r| periodic_distance(r.pos, *p) < 1e-9));
        }
    }

    #[test]
    fn cmt_saddle_angle() {
        let opts = DetectOptions::default();
        let region = Region::new([-0.5, 0.5], [PI - 0.5, PI + 0.5]).unwrap();
        let recs = detect_saddles(&cmt(64), region, 0.0, &opts).unwrap();
        assert_eq!(recs.len(), 1);
        let r = recs[0];
        assert!(r.pos[0].abs() < 1e-10 && (r.pos[1] - PI).abs() < 1e-10);
        // H = [[0, -1], [-1, 1]] at (0, π)
        let expected = 2.0 * ((5f64.sqrt() - 1.0) / (5f64.sqrt() + 1.0)).sqrt().atan();
        assert!((r.gamma - expected).abs() < 1e-10);
        assert!((r.beta.atan() + r.delta.atan() - r.gamma).abs() < 1e-12);
        assert!(r.quality < 0.2, "{}", r.quality);
    }

    #[test]
    fn shear_has_only_degenerate_points() {
        let f = Field2D::from_fn(Grid2D::new(32).unwrap(), |x1, _| x1.cos());
        let recs = detect_saddles(&f, Region::full(), 0.0, &DetectOptions::default()).unwrap();
        assert!(recs.iter().all(|r| r.degenerate));
    }

    #[test]
    fn frame_rotation_shifts_branch_angles() {
        let h = [[0.3, -0.7], [-0.7, -0.2]];
        let g0 = saddle_geometry(h, None, 0.0).unwrap();
        let phi = 0.1;
        let g1 = saddle_geometry(h, Some(g0.sector), phi).unwrap();
        assert!((g1.gamma - g0.gamma).abs() < 1e-14);
        assert!((g1.delta.atan() - (g0.delta.atan() - phi)).abs() < 1e-12);
        assert!((g1.beta.atan() - (g0.beta.atan() + phi)).abs() < 1e-12);
    }

    #[test]
    fn acute_sector_is_default() {
        for h in [[[1.0, 0.0], [0.0, -9.0]], [[9.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [1.0, 0.0]]] {
            let g = saddle_geometry(h, None, 0.0).unwrap();
            assert!(g.gamma <= PI / 2.0 + 1e-12);
            assert!(g.gamma > 0.0);
        }
        assert!(saddle_geometry([[1.0, 0.0], [0.0, 2.0]], None, 0.0).is_none());
    }

    #[test]
    fn ellipse_of_anisotropic_bump() {
        let f = Field2D::from_fn(Grid2D::new(64).unwrap(), |x1, x2| x1.cos() + 4.0 * x2.cos());
        let fit = fit_ellipse(&f, Region::around([0.0, 0.0], 0.4), &DetectOptions::default()).unwrap();
        assert_eq!(fit.kind, ExtremumKind::Maximum);
        assert!((fit.aspect - 4.0).abs() < 1e-9);
        assert!(fit.aspect >= 1.0);
        let err = fit_ellipse(&cmt(64), Region::around([0.0, PI], 0.4), &DetectOptions::default());
        assert!(matches!(err, Err(SaddleError::NotElliptic { .. })));
    }

    #[test]
    fn envelope_closed_vs_numeric() {
        let ts: Vec<f64> = (0..=60).map(|k| k as f64 * 0.1).collect();
        let a = double_exp_envelope(0.7, 0.3, &ts, EnvelopeMethod::Closed).unwrap();
        let b = double_exp_envelope(0.7, 0.3, &ts, EnvelopeMethod::Numeric).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-8 * x.abs().max(1e-300), "{x} {y}");
        }
        assert!(double_exp_envelope(0.7, 1.0, &ts, EnvelopeMethod::Closed).is_err());
        assert!(double_exp_envelope(0.7, 0.0, &ts, EnvelopeMethod::Closed).is_err());
    }

    #[test]
    fn ratio_on_exact_envelope() {
        let c = 0.8;
        let ts: Vec<f64> = (0..=2000).map(|k| k as f64 * 1e-3).collect();
        let g = double_exp_envelope(c, 0.4, &ts, EnvelopeMethod::Closed).unwrap();
        let series: Vec<_> = ts.iter().copied().zip(g.iter().copied()).collect();
        let r = gamma_ode_ratio_series(&series).unwrap();
        for ((_, ri), gi) in r.iter().zip(&g).skip(3).take(1990) {
            let lim = c * gi.ln().abs() / (1.0 + gi.ln().abs());
            assert!((ri - lim).abs() < 1e-4 * lim, "{ri} {lim}");
        }
        assert!(gamma_ode_ratio_series(&series[..4]).is_err());
    }

    #[test]
    fn region_wraps() {
        let r = Region::new([-0.5, 0.5], [PI - 0.5, PI + 0.5]).unwrap();
        assert!(r.contains([TWO_PI - 0.1, PI]));
        let q = r.to_frame([TWO_PI - 0.1, PI]);
        assert!((q[0] + 0.1).abs() < 1e-12);
        assert!(!r.contains([1.0, PI]));
        assert!(Region::new([1.0, 0.0], [0.0, 1.0]).is_err());
    }
}
