//! Per-snapshot scalar diagnostics, direction-field regularity and the
//! stretching rate `α = Sξ·ξ`.

use serde::{Deserialize, Serialize};

use crate::integrator::IntegratorError;
use crate::models::{Model, ModelError, ModelTag, State};
use crate::spectral::{Field2D, Spectral2D, SpectralError, Spectrum2D, Symbol, TrigInterpolant, TWO_PI};

/// One row of the time series written per snapshot.
///
/// For the CLM model the gradient-type columns hold `sup|ω|`, `max_u` holds
/// `sup|Hω|`, `l2_theta` is `‖ω‖₂` and `energy` is `½‖ω‖₂²`; the direction
/// field columns are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub t: f64,
    pub sup_grad: f64,
    pub max_u: f64,
    pub l2_theta: f64,
    pub energy: f64,
    pub bkm_accum: f64,
    pub sup_grad_xi_outside: f64,
    pub xi_coverage: f64,
}

impl DiagRow {
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.sup_grad,
            self.max_u,
            self.l2_theta,
            self.energy,
            self.bkm_accum,
            self.sup_grad_xi_outside,
            self.xi_coverage,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Disc excluded from the `sup|∇ξ|` measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleDisc {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Distance on the periodic square.
pub fn periodic_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let wrap = |d: f64| {
        let d = d.rem_euclid(TWO_PI);
        d.min(TWO_PI - d)
    };
    wrap(a[0] - b[0]).hypot(wrap(a[1] - b[1]))
}

/// First and second derivatives of a planar field on the grid.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub d1: Field2D,
    pub d2: Field2D,
    pub d11: Field2D,
    pub d12: Field2D,
    pub d22: Field2D,
}

pub fn derivatives(sp: &Spectral2D, spectrum: &Spectrum2D) -> Result<Derivatives, SpectralError> {
    let second = |a: Symbol, b: Symbol| -> Result<Field2D, SpectralError> {
        let s = sp.apply_symbol_spectral(spectrum, a)?;
        sp.physical_with(&s, b)
    };
    Ok(Derivatives {
        d1: sp.physical_with(spectrum, Symbol::Ddx1)?,
        d2: sp.physical_with(spectrum, Symbol::Ddx2)?,
        d11: second(Symbol::Ddx1, Symbol::Ddx1)?,
        d12: second(Symbol::Ddx1, Symbol::Ddx2)?,
        d22: second(Symbol::Ddx2, Symbol::Ddx2)?,
    })
}

/// A field defined only where `mask` is set.
#[derive(Debug, Clone)]
pub struct MaskedField {
    pub values: Field2D,
    pub mask: Vec<bool>,
}

impl MaskedField {
    pub fn coverage(&self) -> f64 {
        if self.mask.is_empty() {
            return 0.0;
        }
        self.mask.iter().filter(|m| **m).count() as f64 / self.mask.len() as f64
    }

    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .values()
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
    }
}

/// Relative threshold below which the direction field `ξ` is left undefined.
pub const XI_MASK_FRACTION: f64 = 1e-6;

/// `|∇ξ|` (Frobenius norm) for `ξ = ∇⊥θ/|∇⊥θ|`, masked to
/// `|∇⊥θ| ≥ 1e-6·sup|∇⊥θ|`.
pub fn grad_xi(sp: &Spectral2D, theta: &Field2D) -> Result<MaskedField, SpectralError> {
    let spectrum = sp.forward(theta)?;
    let d = derivatives(sp, &spectrum)?;
    let n = theta.grid().len();
    let mut sup = 0.0f64;
    for k in 0..n {
        sup = sup.max(d.d1.values()[k].hypot(d.d2.values()[k]));
    }
    let threshold = XI_MASK_FRACTION * sup;
    let mut out = vec![0.0; n];
    let mut mask = vec![false; n];
    for k in 0..n {
        // v = (-θ₂, θ₁), ∂ⱼv = (-θ₂ⱼ, θ₁ⱼ)
        let v = [-d.d2.values()[k], d.d1.values()[k]];
        let g = v[0].hypot(v[1]);
        if sup == 0.0 || g < threshold {
            continue;
        }
        let xi = [v[0] / g, v[1] / g];
        let dv = [
            [-d.d12.values()[k], d.d11.values()[k]],
            [-d.d22.values()[k], d.d12.values()[k]],
        ];
        let mut sum = 0.0;
        for dvj in dv {
            let along = xi[0] * dvj[0] + xi[1] * dvj[1];
            for i in 0..2 {
                let c = (dvj[i] - xi[i] * along) / g;
                sum += c * c;
            }
        }
        out[k] = sum.sqrt();
        mask[k] = true;
    }
    Ok(MaskedField {
        values: Field2D::new(theta.grid(), out)?,
        mask,
    })
}

/// Stretching rate `α = Sξ·ξ` of `|∇⊥θ|`, with `S` the symmetric part of
/// `∇u` for the given planar model.
pub fn stretching_alpha(model: &Model, theta: &Field2D) -> Result<MaskedField, ModelError> {
    let sp = planar(model)?;
    let spectrum = sp.forward(theta)?;
    let d = derivatives(sp, &spectrum)?;
    let psi = crate::models::streamfunction_spectral(model.tag(), &spectrum);
    let p = derivatives(sp, &psi)?;
    let n = theta.grid().len();
    let mut sup = 0.0f64;
    for k in 0..n {
        sup = sup.max(d.d1.values()[k].hypot(d.d2.values()[k]));
    }
    let threshold = XI_MASK_FRACTION * sup;
    let mut out = vec![0.0; n];
    let mut mask = vec![false; n];
    for k in 0..n {
        let v = [-d.d2.values()[k], d.d1.values()[k]];
        let g = v[0].hypot(v[1]);
        if sup == 0.0 || g < threshold {
            continue;
        }
        let (x1, x2) = (v[0] / g, v[1] / g);
        let (p11, p12, p22) = (p.d11.values()[k], p.d12.values()[k], p.d22.values()[k]);
        out[k] = -p12 * (x1 * x1 - x2 * x2) + x1 * x2 * (p11 - p22);
        mask[k] = true;
    }
    Ok(MaskedField {
        values: Field2D::new(theta.grid(), out)?,
        mask,
    })
}

/// `α = Sξ·ξ` at an arbitrary point, from trigonometric interpolation of `θ`
/// and the stream function. `None` where `ξ` is undefined.
pub fn alpha_at_point(model: &Model, theta: &Field2D, x: [f64; 2]) -> Result<Option<f64>, ModelError> {
    let sp = planar(model)?;
    let spectrum = sp.forward(theta)?;
    let (v1, v2) = sp.perp_grad_spectral(&spectrum)?;
    let sup = v1
        .values()
        .iter()
        .zip(v2.values())
        .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)));
    let g = TrigInterpolant::from_spectrum(&spectrum, 0.0).gradient(x[0], x[1]);
    let v = [-g[1], g[0]];
    let gn = v[0].hypot(v[1]);
    if sup == 0.0 || gn < XI_MASK_FRACTION * sup {
        return Ok(None);
    }
    let psi = crate::models::streamfunction_spectral(model.tag(), &spectrum);
    let j = TrigInterpolant::from_spectrum(&psi, 0.0).jet(x[0], x[1]);
    let (x1, x2) = (v[0] / gn, v[1] / gn);
    Ok(Some(-j.f12 * (x1 * x1 - x2 * x2) + x1 * x2 * (j.f11 - j.f22)))
}

fn planar(model: &Model) -> Result<&Spectral2D, ModelError> {
    model.spectral2d().ok_or(ModelError::StateMismatch {
        model: model.tag(),
        found: "1D",
    })
}

/// Scalar diagnostics for one snapshot. `bkm_accum` is left at zero; the
/// run loop accumulates it.
pub fn snapshot_diagnostics(
    model: &Model,
    state: &State,
    t: f64,
    disc: Option<SaddleDisc>,
) -> Result<DiagRow, IntegratorError> {
    match state {
        State::Plane(theta) => {
            let sp = planar(model)?;
            let grid = theta.grid();
            let (v1, v2) = sp.perp_grad(theta).map_err(ModelError::from)?;
            let sup_grad = v1
                .values()
                .iter()
                .zip(v2.values())
                .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)));
            let (u1, u2) = model.velocity(theta)?;
            let mut max_u = 0.0f64;
            let mut ke = 0.0;
            for (a, b) in u1.values().iter().zip(u2.values()) {
                max_u = max_u.max(a.hypot(*b));
                ke += a * a + b * b;
            }
            let gx = grad_xi(sp, theta).map_err(ModelError::from)?;
            let mut outside = 0.0f64;
            for j in 0..grid.n() {
                for i in 0..grid.n() {
                    let k = grid.index(i, j);
                    if !gx.mask[k] {
                        continue;
                    }
                    if let Some(d) = disc {
                        if periodic_distance([grid.coord(i), grid.coord(j)], d.center) < d.radius {
                            continue;
                        }
                    }
                    outside = outside.max(gx.values.values()[k]);
                }
            }
            Ok(DiagRow {
                t,
                sup_grad,
                max_u,
                l2_theta: theta.l2_norm(),
                energy: 0.5 * ke * grid.cell_area(),
                bkm_accum: 0.0,
                sup_grad_xi_outside: outside,
                xi_coverage: gx.coverage(),
            })
        }
        State::Line(w) => {
            let sp = model.spectral1d().ok_or(ModelError::StateMismatch {
                model: model.tag(),
                found: "2D",
            })?;
            let hw = sp.apply_symbol(w, Symbol::Hilbert1D).map_err(ModelError::from)?;
            let l2sq: f64 = w.values().iter().map(|v| v * v).sum::<f64>() * w.dx();
            Ok(DiagRow {
                t,
                sup_grad: w.max_abs(),
                max_u: hw.max_abs(),
                l2_theta: l2sq.sqrt(),
                energy: 0.5 * l2sq,
                bkm_accum: 0.0,
                sup_grad_xi_outside: 0.0,
                xi_coverage: 0.0,
            })
        }
    }
}

/// Trapezoidal `∫ sup|∇⊥θ| dt` over the rows (assumed time ordered).
pub fn bkm_integral(rows: &[DiagRow]) -> f64 {
    rows.windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[1].sup_grad + w[0].sup_grad))
        .sum()
}

/// Outcome of comparing the material derivative of `log|∇⊥θ|` with `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaConsistency {
    pub median_relative_deviation: f64,
    pub points: usize,
}

/// Compares `D_t log|∇⊥θ|` (central difference in time plus advection at the
/// middle snapshot) with `α` on points where `|∇⊥θ| ≥ ½ sup|∇⊥θ|`.
///
/// The pointwise deviation is `|D − α| / max(|α|, 1e-3·S_max)` where `S_max`
/// is the largest strain magnitude on the evaluation set.
pub fn alpha_consistency_check(
    model: &Model,
    snapshots: [(f64, &Field2D); 3],
) -> Result<AlphaConsistency, ModelError> {
    if model.tag() == ModelTag::Clm1d {
        return Err(ModelError::StateMismatch {
            model: model.tag(),
            found: "2D",
        });
    }
    let sp = planar(model)?;
    let [(tm, before), (t0, mid), (tp, after)] = snapshots;
    let h = 0.5 * (tp - tm);
    if !(tm < t0 && t0 < tp) {
        return Err(ModelError::InvalidInput(format!(
            "snapshot times must be increasing, got {tm}, {t0}, {tp}"
        )));
    }
    let log_grad = |f: &Field2D| -> Result<Vec<f64>, ModelError> {
        let (a, b) = sp.perp_grad(f)?;
        Ok(a.values().iter().zip(b.values()).map(|(x, y)| x.hypot(*y).ln()).collect())
    };
    let lm = log_grad(before)?;
    let lp = log_grad(after)?;
    let spectrum = sp.forward(mid)?;
    let d = derivatives(sp, &spectrum)?;
    let psi = crate::models::streamfunction_spectral(model.tag(), &spectrum);
    let p = derivatives(sp, &psi)?;
    let n = mid.grid().len();
    let mut sup = 0.0f64;
    for k in 0..n {
        sup = sup.max(d.d1.values()[k].hypot(d.d2.values()[k]));
    }
    let mut pts = Vec::new();
    let mut s_max = 0.0f64;
    for k in 0..n {
        let v = [-d.d2.values()[k], d.d1.values()[k]];
        let g = v[0].hypot(v[1]);
        if sup == 0.0 || g < 0.5 * sup {
            continue;
        }
        let (p11, p12, p22) = (p.d11.values()[k], p.d12.values()[k], p.d22.values()[k]);
        let xi = [v[0] / g, v[1] / g];
        let alpha = -p12 * (xi[0] * xi[0] - xi[1] * xi[1]) + xi[0] * xi[1] * (p11 - p22);
        // u = (-ψ₂, ψ₁); ∂ⱼ|v| = v·∂ⱼv/|v|
        let u = [-p.d2.values()[k], p.d1.values()[k]];
        let dv1 = [-d.d12.values()[k], d.d11.values()[k]];
        let dv2 = [-d.d22.values()[k], d.d12.values()[k]];
        let dlog = [
            (v[0] * dv1[0] + v[1] * dv1[1]) / (g * g),
            (v[0] * dv2[0] + v[1] * dv2[1]) / (g * g),
        ];
        let material = (lp[k] - lm[k]) / (2.0 * h) + u[0] * dlog[0] + u[1] * dlog[1];
        s_max = s_max.max(p12.hypot(0.5 * (p11 - p22)));
        pts.push((material, alpha));
    }
    let floor = 1e-3 * s_max;
    let mut devs: Vec<f64> = pts
        .iter()
        .map(|(m, a)| {
            let denom = a.abs().max(floor);
            if denom == 0.0 {
                0.0
            } else {
                (m - a).abs() / denom
            }
        })
        .collect();
    devs.sort_by(f64::total_cmp);
    let median = if devs.is_empty() {
        0.0
    } else if devs.len() % 2 == 1 {
        devs[devs.len() / 2]
    } else {
        0.5 * (devs[devs.len() / 2 - 1] + devs[devs.len() / 2])
    };
    Ok(AlphaConsistency {
        median_relative_deviation: median,
        points: devs.len(),
    })
}
