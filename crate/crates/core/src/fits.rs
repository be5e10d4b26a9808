//! Growth-law fits of a positive time series: finite-time power law versus
//! double exponential, compared by their log residuals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("window [{0}, {1}] is empty or inverted")]
    InvalidWindow(f64, f64),
    #[error("need at least {needed} points in the window, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("non-positive value {g} at t = {t}")]
    NonPositive { t: f64, g: f64 },
    #[error("non-finite sample at t = {t}")]
    NonFinite { t: f64 },
}

pub const MIN_POINTS: usize = 6;

/// Largest distance of the searched blow-up time beyond the window end.
pub const TSTAR_SPAN: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitModel {
    /// `g = A (T* − t)^{−p}`
    PowerLaw { t_star: f64, p: f64, amplitude: f64 },
    /// `g = A exp(exp(a t + b))`
    DoubleExp { a: f64, b: f64, amplitude: f64 },
}

impl FitModel {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            FitModel::PowerLaw { t_star, p, amplitude } => amplitude * (t_star - t).powf(-p),
            FitModel::DoubleExp { a, b, amplitude } => amplitude * (a * t + b).exp().exp(),
        }
    }

    pub fn log_eval(&self, t: f64) -> f64 {
        match *self {
            FitModel::PowerLaw { t_star, p, amplitude } => amplitude.ln() - p * (t_star - t).ln(),
            FitModel::DoubleExp { a, b, amplitude } => amplitude.ln() + (a * t + b).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub rms_log_residual: f64,
    pub window: (f64, f64),
    pub points: usize,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

fn select(series: &[(f64, f64)], window: (f64, f64)) -> Result<Vec<(f64, f64)>, FitError> {
    let (t0, t1) = window;
    if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
        return Err(FitError::InvalidWindow(t0, t1));
    }
    let slack = 1e-12 * (t1 - t0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= t0 - slack && *t <= t1 + slack)
        .collect();
    if pts.len() < MIN_POINTS {
        return Err(FitError::TooFewPoints {
            needed: MIN_POINTS,
            found: pts.len(),
        });
    }
    for &(t, g) in &pts {
        if !g.is_finite() || !t.is_finite() {
            return Err(FitError::NonFinite { t });
        }
    }
    Ok(pts)
}

/// Least squares line `y ≈ c + s x`; returns `(c, s, rms)`.
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let s = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c = my - s * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - c - s * x).powi(2)).sum();
    (c, s, (ss / n).sqrt())
}

fn power_law_at(ts: &[f64], logs: &[f64], t_star: f64) -> (f64, f64, f64) {
    let xs: Vec<f64> = ts.iter().map(|t| (t_star - t).ln()).collect();
    line_fit(&xs, logs)
}

const SCAN: usize = 400;

fn log_spaced(scan: usize, map: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..=scan).map(|k| map(k as f64 / scan as f64)).collect()
}

/// Minimizes `cost` over the scan `grid` and refines the best bracket by
/// golden section; returns the minimizer and the final bracket width.
fn profile_min(cost: &impl Fn(f64) -> f64, grid: &[f64]) -> (f64, f64) {
    let best = (0..grid.len())
        .min_by(|&a, &b| cost(grid[a]).total_cmp(&cost(grid[b])))
        .unwrap_or(0);
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    for _ in 0..300 {
        if b - a <= 1e-13 * (1.0 + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = cost(d);
        }
    }
    (if fc <= fd { c } else { d }, b - a)
}

/// Fits `log g = log A − p log(T* − t)`: profile search over `T*` in
/// `(t₁, t₁ + 20]` (log-spaced scan, then golden section) with the inner
/// linear least squares for `(log A, p)`.
pub fn fit_power_law(series: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult, FitError> {
    let pts = select(series, window)?;
    for &(t, g) in &pts {
        if g <= 0.0 {
            return Err(FitError::NonPositive { t, g });
        }
    }
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let logs: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let t_last = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = t_last + 1e-9 * (1.0 + t_last.abs());
    let hi = t_last + TSTAR_SPAN;
    let cost = |ts_: f64| power_law_at(&ts, &logs, ts_).2;

    let grid: Vec<f64> = log_spaced(SCAN, |f| lo + (hi - lo) * ((1e6f64).powf(f) - 1.0) / (1e6 - 1.0));
    let (t_star, bracket) = profile_min(&cost, &grid);
    let (log_a, slope, rms) = power_law_at(&ts, &logs, t_star);
    let p = -slope;
    let mut diagnostic = None;
    if !(p > 0.0) {
        diagnostic = Some(format!("fitted exponent p = {p} is not positive; the series does not grow"));
    } else if hi - t_star < 1e-6 * (1.0 + hi.abs()) {
        diagnostic = Some(format!("T* = {t_star} reached the search limit t1 + {TSTAR_SPAN}"));
    } else if t_star - lo < 1e-6 * (1.0 + lo.abs()) {
        diagnostic = Some(format!("T* = {t_star} collapsed onto the window end"));
    }
    Ok(FitResult {
        model: FitModel::PowerLaw {
            t_star,
            p,
            amplitude: log_a.exp(),
        },
        rms_log_residual: rms,
        window,
        points: pts.len(),
        converged: bracket < 1e-4 && diagnostic.is_none(),
        diagnostic,
    })
}

/// Fits `log g = log A + exp(a t + b)`: profile search over `a > 0`
/// (log-spaced scan, then golden section in `log a`) with the inner linear
/// least squares for `(log A, e^b)`.
pub fn fit_double_exp(series: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult, FitError> {
    let pts = select(series, window)?;
    for &(t, g) in &pts {
        if g <= 0.0 {
            return Err(FitError::NonPositive { t, g });
        }
    }
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let logs: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let t0 = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let span = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max) - t0;
    let at = |ln_a: f64| {
        let a = ln_a.exp();
        let xs: Vec<f64> = ts.iter().map(|t| (a * (t - t0)).exp()).collect();
        line_fit(&xs, &logs)
    };
    let (lo, hi) = ((1e-3 / span).ln(), (60.0 / span).ln());
    let grid = log_spaced(SCAN, |f| lo + (hi - lo) * f);
    let (ln_a, bracket) = profile_min(&|x| at(x).2, &grid);
    let (log_amp, c, rms) = at(ln_a);
    let a = ln_a.exp();
    let mut diagnostic = None;
    if !(c > 0.0) {
        diagnostic = Some(format!("inner coefficient exp(b) = {c} is not positive; the series is not double-exponential"));
    } else if hi - ln_a < 1e-6 || ln_a - lo < 1e-6 {
        diagnostic = Some(format!("rate a = {a} reached the search limit"));
    }
    let b = if c > 0.0 { c.ln() - a * t0 } else { f64::NAN };
    Ok(FitResult {
        model: FitModel::DoubleExp {
            a,
            b,
            amplitude: log_amp.exp(),
        },
        rms_log_residual: rms,
        window,
        points: pts.len(),
        converged: bracket < 1e-4 && diagnostic.is_none(),
        diagnostic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preferred {
    PowerLaw,
    DoubleExp,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub preferred: Preferred,
    pub relative_gap: f64,
    pub power_law: FitResult,
    pub double_exp: FitResult,
}

/// Relative residual gap above which one model is preferred.
pub const PREFERENCE_GAP: f64 = 0.2;

pub fn compare_models(series: &[(f64, f64)], window: (f64, f64)) -> Result<Comparison, FitError> {
    let pl = fit_power_law(series, window)?;
    let de = fit_double_exp(series, window)?;
    let (r1, r2) = (pl.rms_log_residual, de.rms_log_residual);
    let top = r1.max(r2);
    let gap = if top > 0.0 { (r1 - r2).abs() / top } else { 0.0 };
    let preferred = if gap <= PREFERENCE_GAP {
        Preferred::Inconclusive
    } else if r1 < r2 {
        Preferred::PowerLaw
    } else {
        Preferred::DoubleExp
    };
    Ok(Comparison {
        preferred,
        relative_gap: gap,
        power_law: pl,
        double_exp: de,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sample(f: impl Fn(f64) -> f64, t0: f64, t1: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let t = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
                (t, f(t))
            })
            .collect()
    }

    fn noisy(series: &[(f64, f64)], seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.01).unwrap();
        series.iter().map(|&(t, g)| (t, g * (1.0 + normal.sample(&mut rng)))).collect()
    }

    #[test]
    fn power_law_exact() {
        let s = sample(|t| (8.25 - t).powf(-1.66), 0.0, 6.0, 61);
        let f = fit_power_law(&s, (0.0, 6.0)).unwrap();
        let FitModel::PowerLaw { t_star, p, amplitude } = f.model else { panic!() };
        assert!((t_star - 8.25).abs() < 1e-6, "{t_star}");
        assert!((p - 1.66).abs() < 1e-6, "{p}");
        assert!((amplitude - 1.0).abs() < 1e-6);
        assert!(f.rms_log_residual < 1e-10);
        assert!(f.converged);
    }

    #[test]
    fn power_law_noisy() {
        let s = noisy(&sample(|t| (8.25 - t).powf(-1.66), 0.0, 6.0, 121), 7);
        let f = fit_power_law(&s, (0.0, 6.0)).unwrap();
        let FitModel::PowerLaw { t_star, p, .. } = f.model else { panic!() };
        assert!((t_star / 8.25 - 1.0).abs() < 0.05, "{t_star}");
        assert!((p / 1.66 - 1.0).abs() < 0.05, "{p}");
    }

    #[test]
    fn decreasing_series_is_not_converged() {
        let s = sample(|t| (-t).exp() + 0.1, 0.0, 5.0, 30);
        let f = fit_power_law(&s, (0.0, 5.0)).unwrap();
        assert!(!f.converged);
        assert!(f.diagnostic.is_some());
    }

    #[test]
    fn power_law_guards() {
        let s = sample(|t| 1.0 + t, 0.0, 1.0, 5);
        assert_eq!(
            fit_power_law(&s, (0.0, 1.0)),
            Err(FitError::TooFewPoints { needed: 6, found: 5 })
        );
        let mut s = sample(|t| 1.0 + t, 0.0, 1.0, 10);
        s[3].1 = -1.0;
        assert!(matches!(fit_power_law(&s, (0.0, 1.0)), Err(FitError::NonPositive { .. })));
        assert!(matches!(fit_power_law(&s, (1.0, 0.0)), Err(FitError::InvalidWindow(..))));
    }

    #[test]
    fn double_exp_exact_and_guard() {
        let s = sample(|t| (0.5 * t + 0.1f64).exp().exp(), 0.0, 4.0, 41);
        let f = fit_double_exp(&s, (0.0, 4.0)).unwrap();
        let FitModel::DoubleExp { a, b, amplitude } = f.model else { panic!() };
        assert!((a - 0.5).abs() < 1e-6 && (b - 0.1).abs() < 1e-6 && (amplitude - 1.0).abs() < 1e-6);
        assert!(f.rms_log_residual < 1e-10);
        assert!(f.converged);
        let scaled = sample(|t| 0.2 * (0.5 * t + 0.1f64).exp().exp(), 0.0, 4.0, 41);
        let f = fit_double_exp(&scaled, (0.0, 4.0)).unwrap();
        let FitModel::DoubleExp { amplitude, .. } = f.model else { panic!() };
        assert!((amplitude - 0.2).abs() < 1e-6);
        let decaying = sample(|t| 2.0 - (0.3 * t).exp(), 0.0, 2.0, 41);
        assert!(!fit_double_exp(&decaying, (0.0, 2.0)).unwrap().converged);
        let mut s = scaled;
        s[3].1 = 0.0;
        assert!(matches!(fit_double_exp(&s, (0.0, 4.0)), Err(FitError::NonPositive { .. })));
    }

    #[test]
    fn double_exp_noisy() {
        let s = noisy(&sample(|t| (0.5 * t + 0.1f64).exp().exp(), 0.0, 4.0, 81), 11);
        let f = fit_double_exp(&s, (0.0, 4.0)).unwrap();
        let FitModel::DoubleExp { a, .. } = f.model else { panic!() };
        assert!((a / 0.5 - 1.0).abs() < 0.05, "{a}");
    }

    #[test]
    fn comparison_picks_generating_model() {
        let pl = sample(|t| (8.25 - t).powf(-1.66) * 100.0, 0.0, 6.0, 61);
        assert_eq!(compare_models(&pl, (0.0, 6.0)).unwrap().preferred, Preferred::PowerLaw);
        let de = sample(|t| (0.5 * t + 0.1f64).exp().exp(), 0.0, 6.0, 61);
        assert_eq!(compare_models(&de, (0.0, 6.0)).unwrap().preferred, Preferred::DoubleExp);
    }

    #[test]
    fn comparison_inconclusive_when_noise_dominates() {
        // a short, flat window buried in alternating noise fits both laws equally badly
        let s: Vec<(f64, f64)> = (0..40)
            .map(|k| {
                let t = k as f64 * 0.05;
                let wiggle = if k % 2 == 0 { 1.2 } else { 1.0 / 1.2 };
                (t, 20.0 * (1.0 + 0.01 * t) * wiggle)
            })
            .collect();
        let c = compare_models(&s, (0.0, 2.0)).unwrap();
        assert_eq!(c.preferred, Preferred::Inconclusive, "{c:?}");
    }

    #[test]
    fn fixed_point_round_trip() {
        let s = noisy(&sample(|t| (8.25 - t).powf(-1.66), 0.0, 6.0, 61), 3);
        let f = fit_power_law(&s, (0.0, 6.0)).unwrap();
        let regen = sample(|t| f.model.eval(t), 0.0, 6.0, 61);
        let g = fit_power_law(&regen, (0.0, 6.0)).unwrap();
        let (FitModel::PowerLaw { t_star: a, p: pa, .. }, FitModel::PowerLaw { t_star: b, p: pb, .. }) = (f.model, g.model)
        else {
            panic!()
        };
        assert!((a - b).abs() < 1e-6 && (pa - pb).abs() < 1e-6);
    }
}
