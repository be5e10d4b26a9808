//! Quadrature oracles: stream-function differences across a synthetic
//! saddle, the branch integrals `K(p)`, `K(q)`, and the principal-value
//! representation of the stretching rate.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{Field2D, Grid2D, Spectral2D, SpectralError, TrigInterpolant, TWO_PI};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid slopes: beta + delta = {0} must be non-negative")]
    InvalidSlopes(f64),
    #[error("support radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("profile must vanish at 0, got {0}")]
    ProfileNotZero(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("D = {value} at ({}, {}) is below the positivity floor", .at[0], .at[1])]
    DNotPositive { value: f64, at: [f64; 2] },
    #[error("xi undefined at ({}, {}): |grad theta| = {grad} is below the mask threshold", .at[0], .at[1])]
    XiUndefined { at: [f64; 2], grad: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Scalar profile `f(ρ)` with `f(0) = 0`.
#[derive(Clone)]
pub enum Profile {
    Tanh { width: f64 },
    Linear { scale: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Tanh { width } => write!(f, "Tanh({width})"),
            Profile::Linear { scale } => write!(f, "Linear({scale})"),
            Profile::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl Profile {
    pub fn eval(&self, rho: f64) -> f64 {
        match self {
            Profile::Tanh { width } => (rho / width).tanh(),
            Profile::Linear { scale } => rho * scale,
            Profile::Custom(f) => f(rho),
        }
    }
}

/// Smooth compactly supported bump, `exp(1 − 1/(1 − s²))` for `|s| < 1`.
pub fn bump(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}

/// Exactly evaluable saddle: `θ(x) = f(ρ(y))·bump(|x − c − e|/R)` where `y`
/// is `x − c` rotated into the saddle frame, `ρ = (βy₁ + y₂)(δy₁ − y₂)` and
/// `e` is an optional envelope offset.
#[derive(Debug, Clone)]
pub struct SyntheticSaddleField {
    pub beta: f64,
    pub delta: f64,
    pub profile: Profile,
    pub support_radius: f64,
    pub center: [f64; 2],
    pub envelope_offset: [f64; 2],
    pub frame_angle: f64,
}

pub fn synth_field(
    beta: f64,
    delta: f64,
    profile: Profile,
    support_radius: f64,
) -> Result<SyntheticSaddleField, OracleError> {
    if !(beta + delta >= 0.0) || !beta.is_finite() || !delta.is_finite() {
        return Err(OracleError::InvalidSlopes(beta + delta));
    }
    if !(support_radius > 0.0 && support_radius.is_finite()) {
        return Err(OracleError::InvalidRadius(support_radius));
    }
    let f0 = profile.eval(0.0);
    if f0 != 0.0 {
        return Err(OracleError::ProfileNotZero(f0));
    }
    Ok(SyntheticSaddleField {
        beta,
        delta,
        profile,
        support_radius,
        center: [0.0, 0.0],
        envelope_offset: [0.0, 0.0],
        frame_angle: 0.0,
    })
}

impl SyntheticSaddleField {
    pub fn with_center(mut self, center: [f64; 2]) -> Self {
        self.center = center;
        self
    }

    pub fn with_envelope_offset(mut self, offset: [f64; 2]) -> Self {
        self.envelope_offset = offset;
        self
    }

    pub fn with_frame_angle(mut self, angle: f64) -> Self {
        self.frame_angle = angle;
        self
    }

    pub fn local(&self, x: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.frame_angle.sin_cos();
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        [c * d[0] + s * d[1], -s * d[0] + c * d[1]]
    }

    pub fn global(&self, y: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.frame_angle.sin_cos();
        [
            self.center[0] + c * y[0] - s * y[1],
            self.center[1] + s * y[0] + c * y[1],
        ]
    }

    pub fn rho(&self, x: [f64; 2]) -> f64 {
        let y = self.local(x);
        (self.beta * y[0] + y[1]) * (self.delta * y[0] - y[1])
    }

    pub fn envelope_center(&self) -> [f64; 2] {
        [
            self.center[0] + self.envelope_offset[0],
            self.center[1] + self.envelope_offset[1],
        ]
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let e = self.envelope_center();
        let s = (x[0] - e[0]).hypot(x[1] - e[1]) / self.support_radius;
        if s >= 1.0 {
            return 0.0;
        }
        self.profile.eval(self.rho(x)) * bump(s)
    }

    /// Points at abscissa `y₁` on the branches `y₂ = −βy₁` and `y₂ = δy₁`.
    pub fn branch_points(&self, y1: f64) -> ([f64; 2], [f64; 2]) {
        (self.global([y1, -self.beta * y1]), self.global([y1, self.delta * y1]))
    }

    /// Samples the field on a periodic grid using the periodic image nearest
    /// the envelope center.
    pub fn rasterize(&self, grid: Grid2D) -> Field2D {
        let e = self.envelope_center();
        let near = |x: f64, c: f64| c + (x - c + PI).rem_euclid(TWO_PI) - PI;
        Field2D::from_fn(grid, |x1, x2| self.eval([near(x1, e[0]), near(x2, e[1])]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelTag {
    Sqg,
    Euler,
}

impl std::str::FromStr for KernelTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sqg" => Ok(KernelTag::Sqg),
            "euler" => Ok(KernelTag::Euler),
            other => Err(format!("unknown kernel '{other}' (expected sqg or euler)")),
        }
    }
}

/// Resolution schedule for [`psi_difference`]: each level doubles both the
/// radial panel count and the number of angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub radial_panels: usize,
    pub angles: usize,
    pub max_levels: usize,
    pub rel_change: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            radial_panels: 16,
            angles: 128,
            max_levels: 5,
            rel_change: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiDifference {
    pub value: f64,
    pub converged: bool,
    pub resolvable: bool,
    pub level: usize,
    pub rel_change: f64,
    pub cell: f64,
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

// ∫θ(y) K(y − x) dy in polar coordinates centered at x, restricted to the
// chord of each ray inside the envelope disc.
fn kernel_potential(field: &SyntheticSaddleField, x: [f64; 2], kernel: KernelTag, panels: usize, angles: usize) -> f64 {
    let e = field.envelope_center();
    let r2 = field.support_radius * field.support_radius;
    let d = [x[0] - e[0], x[1] - e[1]];
    let dd = d[0] * d[0] + d[1] * d[1] - r2;
    let dphi = TWO_PI / angles as f64;
    let mut total = 0.0;
    for a in 0..angles {
        let phi = (a as f64 + 0.5) * dphi;
        let (s, c) = phi.sin_cos();
        let b = c * d[0] + s * d[1];
        let disc = b * b - dd;
        if disc <= 0.0 {
            continue;
        }
        let root = disc.sqrt();
        let r_out = -b + root;
        let r_in = (-b - root).max(0.0);
        if r_out <= r_in {
            continue;
        }
        let w = (r_out - r_in) / panels as f64;
        let mut ray = 0.0;
        for p in 0..panels {
            let mid = r_in + (p as f64 + 0.5) * w;
            for &(xi, wi) in &GL8 {
                let r = mid + 0.5 * w * xi;
                let theta = field.eval([x[0] + r * c, x[1] + r * s]);
                // area element r dr dφ times the kernel
                let k = match kernel {
                    KernelTag::Sqg => 1.0,
                    KernelTag::Euler => r * r.ln() / TWO_PI,
                };
                ray += 0.5 * w * wi * theta * k;
            }
        }
        total += ray;
    }
    total * dphi
}

/// `I = ∫θ(y)(K(y − p) − K(y − q)) dy` over the support, refined until a
/// resolution doubling changes it by less than `rel_change`.
///
/// `cell` is the radial node spacing at the final level; `resolvable` is
/// false when `|p − q| < 4·cell`.
pub fn psi_difference(
    field: &SyntheticSaddleField,
    p: [f64; 2],
    q: [f64; 2],
    kernel: KernelTag,
    res: Resolution,
) -> Result<PsiDifference, OracleError> {
    let e = field.envelope_center();
    for (name, x) in [("p", p), ("q", q)] {
        if (x[0] - e[0]).hypot(x[1] - e[1]) >= field.support_radius {
            return Err(OracleError::InvalidInput(format!("{name} lies outside the support")));
        }
    }
    let sep = (p[0] - q[0]).hypot(p[1] - q[1]);
    if sep == 0.0 {
        return Ok(PsiDifference {
            value: 0.0,
            converged: true,
            resolvable: true,
            level: 0,
            rel_change: 0.0,
            cell: 0.0,
        });
    }
    let diameter = 2.0 * field.support_radius;
    let mut prev: Option<f64> = None;
    let mut out = None;
    for level in 0..=res.max_levels {
        let panels = res.radial_panels << level;
        let angles = res.angles << level;
        let value = kernel_potential(field, p, kernel, panels, angles) - kernel_potential(field, q, kernel, panels, angles);
        let cell = diameter / (8 * panels) as f64;
        let resolvable = sep >= 4.0 * cell;
        let rel_change = match prev {
            Some(v) => (value - v).abs() / value.abs().max(1e-300),
            None => f64::INFINITY,
        };
        let converged = rel_change < res.rel_change || (value == 0.0 && prev == Some(0.0));
        let r = PsiDifference {
            value,
            converged,
            resolvable,
            level,
            rel_change,
            cell,
        };
        out = Some(r);
        if converged && resolvable {
            break;
        }
        prev = Some(value);
    }
    Ok(out.expect("at least one level"))
}

/// Fixed data of a Lemma-1 style sweep; only the opening angle varies.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub profile: Profile,
    pub support_radius: f64,
    pub envelope_offset: [f64; 2],
    pub y1: f64,
    /// Fraction of `γ` assigned to the `β` branch.
    pub beta_fraction: f64,
    pub resolution: Resolution,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            profile: Profile::Tanh { width: 0.01 },
            support_radius: 1.0,
            envelope_offset: [0.0, 0.3],
            y1: 0.5,
            beta_fraction: 1.0 / 3.0,
            resolution: Resolution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub gamma: f64,
    pub beta: f64,
    pub delta: f64,
    pub value: f64,
    pub abs: f64,
    pub ratio: f64,
    pub converged: bool,
    pub resolvable: bool,
}

/// Runs [`psi_difference`] for each `γ` with `β = tan(fγ)`, `δ = tan((1−f)γ)`
/// and `p`, `q` on the two branches at abscissa `y₁`. The ratio is
/// `|I|/(γ log(1/γ))` for the SQG kernel and `|I|/γ` for Euler.
pub fn lemma1_sweep(spec: &SweepSpec, gammas: &[f64], kernel: KernelTag) -> Result<Vec<SweepEntry>, OracleError> {
    for &g in gammas {
        if !(g > 0.0 && g < 0.5) {
            return Err(OracleError::InvalidInput(format!("gamma {g} outside (0, 0.5)")));
        }
    }
    if !(0.0..=1.0).contains(&spec.beta_fraction) {
        return Err(OracleError::InvalidInput("beta_fraction must lie in [0, 1]".into()));
    }
    let one = |g: f64| -> Result<SweepEntry, OracleError> {
        let beta = (spec.beta_fraction * g).tan();
        let delta = ((1.0 - spec.beta_fraction) * g).tan();
        let field = synth_field(beta, delta, spec.profile.clone(), spec.support_radius)?
            .with_envelope_offset(spec.envelope_offset);
        let (p, q) = field.branch_points(spec.y1);
        let d = psi_difference(&field, p, q, kernel, spec.resolution)?;
        let abs = d.value.abs();
        let ratio = match kernel {
            KernelTag::Sqg => abs / (g * (1.0 / g).ln()),
            KernelTag::Euler => abs / g,
        };
        Ok(SweepEntry {
            gamma: g,
            beta,
            delta,
            value: d.value,
            abs,
            ratio,
            converged: d.converged,
            resolvable: d.resolvable,
        })
    };
    std::thread::scope(|s| {
        let handles: Vec<_> = gammas.iter().map(|&g| s.spawn(move || one(g))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    P,
    Q,
}

pub const D_FLOOR: f64 = 1e-8;

/// `K = ∫₀^{y₁} s / D(path(s)) ds` along `p̃(s) = (s, −βs)` or
/// `q̃(s) = (s, δs)`, by adaptive Simpson quadrature.
pub fn k_integral(
    branch: Branch,
    y1: f64,
    beta: f64,
    delta: f64,
    d: impl Fn(f64, f64) -> f64,
) -> Result<f64, OracleError> {
    if !(y1 > 0.0 && y1.is_finite()) {
        return Err(OracleError::InvalidInput(format!("y1 must be positive, got {y1}")));
    }
    let slope = match branch {
        Branch::P => -beta,
        Branch::Q => delta,
    };
    let mut bad: Option<(f64, [f64; 2])> = None;
    let mut f = |s: f64| {
        let at = [s, slope * s];
        let dv = d(at[0], at[1]);
        if !(dv >= D_FLOOR) && bad.is_none() {
            bad = Some((dv, at));
        }
        if dv >= D_FLOOR {
            s / dv
        } else {
            f64::NAN
        }
    };
    let (fa, fm, fb) = (f(0.0), f(0.5 * y1), f(y1));
    let whole = y1 / 6.0 * (fa + 4.0 * fm + fb);
    let value = simpson(&mut f, 0.0, y1, fa, fm, fb, whole, 1e-14 * y1 * y1, 40);
    if let Some((value, at)) = bad {
        return Err(OracleError::DNotPositive { value, at });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return f64::NAN;
    }
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Quadrature controls for [`alpha_pv_point_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvOptions {
    /// Radial step; `None` picks `min(0.05, 0.5/k_max)`.
    pub radial_step: Option<f64>,
    pub min_angles: usize,
    pub interp_tol: f64,
}

impl Default for PvOptions {
    fn default() -> Self {
        Self {
            radial_step: None,
            min_angles: 32,
            interp_tol: 1e-13,
        }
    }
}

pub fn alpha_pv_point(theta: &Field2D, x: [f64; 2], cutoff: f64) -> Result<f64, OracleError> {
    alpha_pv_point_with(theta, x, cutoff, PvOptions::default())
}

/// `α(x) = (1/2π) P.V.∫ (ŷ·ξ⊥(x)) (∇⊥θ(x+y)·ξ⊥(x)) dy/|y|²`, evaluated on
/// a polar grid centered at `x` with antipodal pairing of angles and a
/// raised-cosine taper over `[cutoff/2, cutoff]`.
pub fn alpha_pv_point_with(theta: &Field2D, x: [f64; 2], cutoff: f64, opts: PvOptions) -> Result<f64, OracleError> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(OracleError::InvalidInput(format!("cutoff must be positive, got {cutoff}")));
    }
    let sp = Spectral2D::new(theta.grid());
    let spectrum = sp.forward(theta)?;
    let (v1, v2) = sp.perp_grad_spectral(&spectrum)?;
    let sup = v1
        .values()
        .iter()
        .zip(v2.values())
        .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)));
    let interp = TrigInterpolant::from_spectrum(&spectrum, opts.interp_tol);
    let g = interp.gradient(x[0], x[1]);
    let v = [-g[1], g[0]];
    let gn = v[0].hypot(v[1]);
    if sup == 0.0 || gn < crate::diagnostics::XI_MASK_FRACTION * sup {
        return Err(OracleError::XiUndefined { at: x, grad: gn });
    }
    let perp = [-v[1] / gn, v[0] / gn];
    let k_max = interp.max_wavenumber().max(1.0);
    let dr = opts.radial_step.unwrap_or((0.5 / k_max).min(0.05));
    let rings = (cutoff / dr).ceil() as usize;
    let dr = cutoff / rings as f64;
    // F(z) = ∇⊥θ(z)·ξ⊥(x) = θ₁(z)ξ⊥₂ − θ₂(z)ξ⊥₁
    let f = |z: [f64; 2]| {
        let gz = interp.gradient(z[0], z[1]);
        -gz[1] * perp[0] + gz[0] * perp[1]
    };
    let mut total = 0.0;
    for ring in 0..rings {
        let r = (ring as f64 + 0.5) * dr;
        let taper = if r <= 0.5 * cutoff {
            1.0
        } else {
            0.5 * (1.0 + (PI * (2.0 * r / cutoff - 1.0)).cos())
        };
        let m = ((k_max * r + 16.0).ceil() as usize).max(opts.min_angles);
        let dphi = PI / m as f64;
        let mut s = 0.0;
        for a in 0..m {
            let phi = (a as f64 + 0.5) * dphi;
            let (sn, cs) = phi.sin_cos();
            let odd = cs * perp[0] + sn * perp[1];
            s += odd * (f([x[0] + r * cs, x[1] + r * sn]) - f([x[0] - r * cs, x[1] - r * sn]));
        }
        total += taper * s * dphi * dr / r;
    }
    Ok(total / TWO_PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard(beta: f64, delta: f64) -> SyntheticSaddleField {
        synth_field(beta, delta, Profile::Tanh { width: 0.01 }, 1.0).unwrap()
    }

    #[test]
    fn synthetic_field_basics() {
        let f = standard(0.1, 0.2);
        assert_eq!(f.eval([0.0, 0.0]), 0.0);
        assert_eq!(f.eval([1.0, 0.5]), 0.0);
        assert_eq!(f.eval([0.8, -0.7]), 0.0);
        assert!(synth_field(-0.3, 0.2, Profile::Linear { scale: 1.0 }, 1.0).is_err());
        assert!(synth_field(0.1, 0.2, Profile::Linear { scale: 1.0 }, 0.0).is_err());
        let shifted = Profile::Custom(Arc::new(|r| r + 1.0));
        assert!(matches!(
            synth_field(0.1, 0.2, shifted, 1.0),
            Err(OracleError::ProfileNotZero(_))
        ));
    }

    #[test]
    fn psi_difference_trivial_cases() {
        let f = standard(0.1, 0.2);
        let (p, q) = f.branch_points(0.5);
        let res = Resolution {
            max_levels: 1,
            ..Resolution::default()
        };
        let z = psi_difference(&f, p, p, KernelTag::Sqg, res).unwrap();
        assert_eq!(z.value, 0.0);
        let a = psi_difference(&f, p, q, KernelTag::Sqg, res).unwrap();
        let b = psi_difference(&f, q, p, KernelTag::Sqg, res).unwrap();
        assert_eq!(a.value, -b.value);
        assert!(psi_difference(&f, [2.0, 0.0], q, KernelTag::Sqg, res).is_err());
    }

    #[test]
    fn mirror_symmetric_saddle_gives_zero() {
        let f = standard(0.15, 0.15);
        let (p, q) = f.branch_points(0.5);
        let res = Resolution {
            max_levels: 1,
            ..Resolution::default()
        };
        for k in [KernelTag::Sqg, KernelTag::Euler] {
            let d = psi_difference(&f, p, q, k, res).unwrap();
            let scale = psi_difference(&f, p, [0.0, 0.0], k, res).unwrap().value.abs();
            assert!(d.value.abs() < 1e-10 * scale.max(1.0), "{k:?}: {}", d.value);
        }
    }

    #[test]
    fn k_integral_identity_weight() {
        for (branch, beta, delta) in [(Branch::P, 0.3, 0.1), (Branch::Q, 0.05, 0.7)] {
            let v = k_integral(branch, 1.3, beta, delta, |_, _| 1.0).unwrap();
            assert!((v - 1.3 * 1.3 / 2.0).abs() < 1e-12);
        }
        let p = k_integral(Branch::P, 1.0, 0.1, 0.2, |_, _| 1.0).unwrap();
        let q = k_integral(Branch::Q, 1.0, 0.1, 0.2, |_, _| 1.0).unwrap();
        assert_eq!(p, q);
        assert!(matches!(
            k_integral(Branch::Q, 1.0, 0.1, 0.2, |_, y2| y2 - 0.1),
            Err(OracleError::DNotPositive { .. })
        ));
        assert!(k_integral(Branch::Q, 0.0, 0.1, 0.2, |_, _| 1.0).is_err());
    }

    #[test]
    fn pv_alpha_vanishes_for_shear() {
        let g = Grid2D::new(32).unwrap();
        let theta = Field2D::from_fn(g, |_, x2| x2.cos());
        let a = alpha_pv_point(&theta, [0.3, 1.0], 20.0).unwrap();
        assert!(a.abs() < 1e-12, "{a}");
    }

    #[test]
    fn pv_alpha_rejects_critical_points() {
        let g = Grid2D::new(32).unwrap();
        let theta = Field2D::from_fn(g, |x1, x2| x1.sin() * x2.sin());
        let err = alpha_pv_point(&theta, [PI / 2.0, PI / 2.0], 20.0);
        assert!(matches!(err, Err(OracleError::XiUndefined { .. })));
    }
}
