//! Velocity laws and time tendencies of the three active scalar models.
//!
//! Sign conventions: `∇⊥ = (−∂₂, ∂₁)`, SQG stream function
//! `ψ = −(−Δ)^{−1/2} θ`, Euler stream function `Δψ = ω`, velocity `u = ∇⊥ψ`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{
    wavenumber, Field1D, Field2D, Grid2D, Spectral1D, Spectral2D, SpectralError, Spectrum1D,
    Spectrum2D, Symbol,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Sqg,
    Euler2d,
    Clm1d,
}

impl ModelTag {
    pub fn is_planar(self) -> bool {
        !matches!(self, ModelTag::Clm1d)
    }

    /// Numeric tag used by the checkpoint format.
    pub fn code(self) -> u32 {
        match self {
            ModelTag::Sqg => 0,
            ModelTag::Euler2d => 1,
            ModelTag::Clm1d => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(ModelTag::Sqg),
            1 => Some(ModelTag::Euler2d),
            2 => Some(ModelTag::Clm1d),
            _ => None,
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Sqg => "sqg",
            ModelTag::Euler2d => "euler2d",
            ModelTag::Clm1d => "clm1d",
        })
    }
}

impl FromStr for ModelTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sqg" => Ok(ModelTag::Sqg),
            "euler2d" => Ok(ModelTag::Euler2d),
            "clm1d" => Ok(ModelTag::Clm1d),
            other => Err(format!("unknown model '{other}' (expected sqg, euler2d or clm1d)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("model {model} cannot advance a {found} state")]
    StateMismatch { model: ModelTag, found: &'static str },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Evolving field of one of the models.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Plane(Field2D),
    Line(Field1D),
}

impl State {
    pub fn kind_for(model: ModelTag) -> &'static str {
        if model.is_planar() {
            "2D"
        } else {
            "1D"
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            State::Plane(_) => "2D",
            State::Line(_) => "1D",
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            State::Plane(f) => f.values(),
            State::Line(f) => f.values(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            State::Plane(f) => f.grid().n(),
            State::Line(f) => f.n(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }

    pub fn as_plane(&self) -> Option<&Field2D> {
        match self {
            State::Plane(f) => Some(f),
            State::Line(_) => None,
        }
    }

    pub fn as_line(&self) -> Option<&Field1D> {
        match self {
            State::Line(f) => Some(f),
            State::Plane(_) => None,
        }
    }

    /// `self + a * other`; both states must have the same shape.
    pub fn axpy(&self, a: f64, other: &State) -> State {
        match (self, other) {
            (State::Plane(x), State::Plane(y)) => State::Plane(x.axpy(a, y)),
            (State::Line(x), State::Line(y)) => State::Line(x.axpy(a, y)),
            _ => panic!("axpy on states of different dimension"),
        }
    }

    pub fn max_abs_diff(&self, other: &State) -> f64 {
        self.values()
            .iter()
            .zip(other.values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// High-wavenumber damping `exp(−c (|k|/k_max)^p)` with `k_max = n/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFilter {
    pub strength: f64,
    pub order: f64,
}

impl Default for ExpFilter {
    fn default() -> Self {
        Self {
            strength: 36.0,
            order: 36.0,
        }
    }
}

impl ExpFilter {
    pub fn factor(&self, k_norm: f64, n: usize) -> f64 {
        let k_max = n as f64 / 2.0;
        (-self.strength * (k_norm / k_max).powf(self.order)).exp()
    }
}

fn sqg_streamfunction(spectrum: &Spectrum2D) -> Spectrum2D {
    let mut psi = spectrum.clone();
    psi.multiply(|m| {
        let k = m.norm();
        if k == 0.0 {
            Complex64::from(0.0)
        } else {
            Complex64::from(-1.0 / k)
        }
    });
    psi
}

fn euler_streamfunction(spectrum: &Spectrum2D) -> Spectrum2D {
    let mut psi = spectrum.clone();
    psi.multiply(|m| {
        let k2 = (m.k1 * m.k1 + m.k2 * m.k2) as f64;
        if k2 == 0.0 {
            Complex64::from(0.0)
        } else {
            Complex64::from(-1.0 / k2)
        }
    });
    psi
}

/// Stream function of a planar model, in spectral space.
pub fn streamfunction_spectral(model: ModelTag, spectrum: &Spectrum2D) -> Spectrum2D {
    match model {
        ModelTag::Euler2d => euler_streamfunction(spectrum),
        _ => sqg_streamfunction(spectrum),
    }
}

/// SQG velocity `u = ∇⊥ψ`, `ψ = −(−Δ)^{−1/2}θ`.
pub fn velocity_sqg(spectral: &Spectral2D, theta: &Field2D) -> Result<(Field2D, Field2D), SpectralError> {
    let spectrum = spectral.forward(theta)?;
    spectral.perp_grad_spectral(&sqg_streamfunction(&spectrum))
}

/// 2D Euler velocity `u = ∇⊥ψ`, `Δψ = ω`.
pub fn velocity_euler2d(spectral: &Spectral2D, omega: &Field2D) -> Result<(Field2D, Field2D), SpectralError> {
    let spectrum = spectral.forward(omega)?;
    spectral.perp_grad_spectral(&euler_streamfunction(&spectrum))
}

/// Spectral plans plus the model choice; the unit that produces tendencies.
#[derive(Debug, Clone)]
pub struct Model {
    tag: ModelTag,
    plan: Plan,
    filter: Option<ExpFilter>,
}

#[derive(Debug, Clone)]
enum Plan {
    Plane(Spectral2D),
    Line(Spectral1D),
}

impl Model {
    pub fn new(tag: ModelTag, n: usize) -> Result<Self, SpectralError> {
        let plan = if tag.is_planar() {
            Plan::Plane(Spectral2D::new(Grid2D::new(n)?))
        } else {
            Plan::Line(Spectral1D::new(n)?)
        };
        Ok(Self {
            tag,
            plan,
            filter: None,
        })
    }

    pub fn with_filter(mut self, filter: Option<ExpFilter>) -> Self {
        self.filter = filter;
        self
    }

    pub fn tag(&self) -> ModelTag {
        self.tag
    }

    pub fn filter(&self) -> Option<ExpFilter> {
        self.filter
    }

    pub fn spectral2d(&self) -> Option<&Spectral2D> {
        match &self.plan {
            Plan::Plane(sp) => Some(sp),
            Plan::Line(_) => None,
        }
    }

    pub fn spectral1d(&self) -> Option<&Spectral1D> {
        match &self.plan {
            Plan::Line(sp) => Some(sp),
            Plan::Plane(_) => None,
        }
    }

    fn mismatch(&self, state: &State) -> ModelError {
        ModelError::StateMismatch {
            model: self.tag,
            found: state.kind(),
        }
    }

    /// Velocity of a planar model.
    pub fn velocity(&self, field: &Field2D) -> Result<(Field2D, Field2D), ModelError> {
        let sp = self.spectral2d().ok_or(ModelError::StateMismatch {
            model: self.tag,
            found: "2D",
        })?;
        let spectrum = sp.forward(field)?;
        Ok(sp.perp_grad_spectral(&streamfunction_spectral(self.tag, &spectrum))?)
    }

    /// Stream function of a planar model (zero mean).
    pub fn streamfunction(&self, field: &Field2D) -> Result<Field2D, ModelError> {
        let sp = self.spectral2d().ok_or(ModelError::StateMismatch {
            model: self.tag,
            found: "2D",
        })?;
        let spectrum = sp.forward(field)?;
        Ok(sp.inverse(&streamfunction_spectral(self.tag, &spectrum))?)
    }

    /// `−u·∇q` (planar models) or `H(ω)ω` (CLM), formed in physical space and
    /// dealiased with the 2/3 rule.
    pub fn tendency(&self, state: &State) -> Result<State, ModelError> {
        match (&self.plan, state) {
            (Plan::Plane(sp), State::Plane(q)) => {
                let spectrum = sp.forward(q)?;
                let psi = streamfunction_spectral(self.tag, &spectrum);
                let (u1, u2) = sp.perp_grad_spectral(&psi)?;
                let d1 = sp.physical_with(&spectrum, Symbol::Ddx1)?;
                let d2 = sp.physical_with(&spectrum, Symbol::Ddx2)?;
                let mut product = Field2D::zeros(q.grid());
                for (p, (((a, b), c), d)) in product.values_mut().iter_mut().zip(
                    u1.values()
                        .iter()
                        .zip(d1.values())
                        .zip(u2.values())
                        .zip(d2.values()),
                ) {
                    *p = -(a * b + c * d);
                }
                Ok(State::Plane(sp.apply_symbol(&product, Symbol::DealiasTwoThirds)?))
            }
            (Plan::Line(sp), State::Line(w)) => {
                let hw = sp.apply_symbol(w, Symbol::Hilbert1D)?;
                let product = hw.zip_map(w, |a, b| a * b);
                Ok(State::Line(sp.apply_symbol(&product, Symbol::DealiasTwoThirds)?))
            }
            _ => Err(self.mismatch(state)),
        }
    }

    /// Applies the exponential filter when one is configured.
    pub fn apply_filter(&self, state: State) -> Result<State, ModelError> {
        let Some(filter) = self.filter else {
            return Ok(state);
        };
        match (&self.plan, state) {
            (Plan::Plane(sp), State::Plane(q)) => {
                let n = sp.grid().n();
                let mut spectrum = sp.forward(&q)?;
                spectrum.multiply(|m| Complex64::from(filter.factor(m.norm(), n)));
                Ok(State::Plane(sp.inverse(&spectrum)?))
            }
            (Plan::Line(sp), State::Line(w)) => {
                let n = sp.n();
                let mut coeffs = sp.forward(&w)?.coeffs().to_vec();
                for (m, c) in coeffs.iter_mut().enumerate() {
                    *c *= filter.factor(wavenumber(m, n).unsigned_abs() as f64, n);
                }
                Ok(State::Line(sp.inverse(&Spectrum1D::from_coeffs(coeffs))?))
            }
            (_, state) => Err(self.mismatch(&state)),
        }
    }
}
