//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Recognized keys and
//! defaults:
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `model` | `sqg` | `sqg`, `euler2d` or `clm1d` |
//! | `n` | `256` | grid points per direction, power of two in `[8, 4096]` |
//! | `initial` | `cmt` (`clm_cos` for clm1d) | `cmt`, `cos_x2`, `clm_cos`, `random`, `custom` |
//! | `expression` | none | formula in `x1`, `x2` (or `x` for clm1d) when `initial = custom` |
//! | `dt` | none | fixed step; selects fixed stepping |
//! | `cfl` | `0.5` | CFL number in `(0, 1]` |
//! | `dt_max` | `0.05` | upper bound on CFL steps |
//! | `t_end` | `6` | final time |
//! | `snapshot_interval` | `0.25` | diagnostics/snapshot spacing |
//! | `checkpoint_interval` | `1.0` | checkpoint spacing (0 disables intermediate checkpoints) |
//! | `filter` | `on` for cmt, else `off` | exponential spectral filter |
//! | `filter_strength`, `filter_order` | `36`, `36` | filter parameters |
//! | `saddle_region` | `none` | `x1_min, x1_max, x2_min, x2_max` |
//! | `saddle_disc_radius` | `0.5` | disc excluded from `sup|∇ξ|` |
//! | `continuity_cells` | `10` | tracking radius in grid cells |
//! | `output_dir` | `out` | output directory |
//! | `seed` | `0` | seed for the `random` preset |
//!
//! The clm1d model uses fixed steps of `1e-4` unless `dt` or `cfl` is given.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables, DefaultNumericTypes, Function,
    HashMapContext, Node, Value,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{StepMode, StepPolicy};
use crate::models::{ExpFilter, Model, ModelTag, State};
use crate::saddle::{Region, TrackOptions};
use crate::spectral::{Field1D, Field2D, Grid2D, SpectralError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("expression error: {0}")]
    Expression(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    /// `sin x₁ sin x₂ + cos x₂`
    Cmt,
    /// `cos x₂`
    CosX2,
    /// `cos x`
    ClmCos,
    /// Band-limited random field drawn from `seed`.
    Random,
    Custom(String),
}

impl fmt::Display for Initial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Initial::Cmt => f.write_str("cmt"),
            Initial::CosX2 => f.write_str("cos_x2"),
            Initial::ClmCos => f.write_str("clm_cos"),
            Initial::Random => f.write_str("random"),
            Initial::Custom(e) => write!(f, "custom({e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelTag,
    pub n: usize,
    pub initial: Initial,
    pub step: StepPolicy,
    pub filter: Option<ExpFilter>,
    pub saddle_region: Option<Region>,
    pub saddle_disc_radius: f64,
    pub continuity_cells: f64,
    pub checkpoint_interval: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            model: ModelTag::Sqg,
            n: 256,
            initial: Initial::Cmt,
            step: StepPolicy {
                mode: StepMode::Cfl {
                    number: 0.5,
                    dt_max: 0.05,
                },
                t_end: 6.0,
                snapshot_interval: 0.25,
            },
            filter: Some(ExpFilter::default()),
            saddle_region: None,
            saddle_disc_radius: 0.5,
            continuity_cells: 10.0,
            checkpoint_interval: 1.0,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

const KEYS: &[&str] = &[
    "model",
    "n",
    "initial",
    "expression",
    "dt",
    "cfl",
    "dt_max",
    "t_end",
    "snapshot_interval",
    "checkpoint_interval",
    "filter",
    "filter_strength",
    "filter_order",
    "saddle_region",
    "saddle_disc_radius",
    "continuity_cells",
    "output_dir",
    "seed",
];

fn line_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Line {
        line,
        message: message.into(),
    }
}

fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| line_err(line, format!("cannot parse value '{v}' for '{key}'")))
}

fn positive(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = num(line, key, v)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(line_err(line, format!("'{key}' must be positive, got {v}")))
    }
}

/// Parses the flat configuration format; missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut cfg = SimConfig::default();
    let mut seen: Vec<(String, usize)> = Vec::new();
    let mut model_line = 0;
    let mut initial: Option<(String, usize)> = None;
    let mut expression: Option<(String, usize)> = None;
    let mut dt: Option<(f64, usize)> = None;
    let mut cfl: Option<(f64, usize)> = None;
    let mut dt_max: Option<f64> = None;
    let mut filter: Option<bool> = None;
    let mut strength = ExpFilter::default().strength;
    let mut order = ExpFilter::default().order;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| line_err(line, format!("expected key = value, got '{body}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(line_err(line, format!("unknown key '{key}'")));
        }
        if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
            return Err(line_err(line, format!("duplicate key '{key}' (first set on line {first})")));
        }
        seen.push((key.to_string(), line));
        match key {
            "model" => {
                cfg.model = value.parse().map_err(|e: String| line_err(line, e))?;
                model_line = line;
            }
            "n" => {
                let n: i64 = num(line, key, value)?;
                if !(8..=4096).contains(&n) || (n as u64).count_ones() != 1 {
                    return Err(line_err(line, format!("'n' must be a power of two in [8, 4096], got {n}")));
                }
                cfg.n = n as usize;
            }
            "initial" => initial = Some((value.to_string(), line)),
            "expression" => expression = Some((value.to_string(), line)),
            "dt" => dt = Some((positive(line, key, value)?, line)),
            "cfl" => {
                let c: f64 = num(line, key, value)?;
                if !(c > 0.0 && c <= 1.0) {
                    return Err(line_err(line, format!("'cfl' must lie in (0, 1], got {value}")));
                }
                cfl = Some((c, line));
            }
            "dt_max" => dt_max = Some(positive(line, key, value)?),
            "t_end" => {
                let t: f64 = num(line, key, value)?;
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(line_err(line, format!("'t_end' must be non-negative, got {value}")));
                }
                cfg.step.t_end = t;
            }
            "snapshot_interval" => cfg.step.snapshot_interval = positive(line, key, value)?,
            "checkpoint_interval" => {
                let c: f64 = num(line, key, value)?;
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(line_err(line, format!("'checkpoint_interval' must be non-negative, got {value}")));
                }
                cfg.checkpoint_interval = c;
            }
            "filter" => {
                filter = Some(match value {
                    "on" | "true" | "yes" => true,
                    "off" | "false" | "no" => false,
                    _ => return Err(line_err(line, format!("'filter' must be on or off, got '{value}'"))),
                })
            }
            "filter_strength" => strength = positive(line, key, value)?,
            "filter_order" => order = positive(line, key, value)?,
            "saddle_region" => {
                cfg.saddle_region = if value == "none" {
                    None
                } else {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 4 {
                        return Err(line_err(line, "'saddle_region' needs x1_min, x1_max, x2_min, x2_max or none"));
                    }
                    let mut v = [0.0; 4];
                    for (slot, p) in v.iter_mut().zip(&parts) {
                        *slot = num(line, key, p)?;
                    }
                    Some(Region::new([v[0], v[1]], [v[2], v[3]]).map_err(|e| line_err(line, e.to_string()))?)
                }
            }
            "saddle_disc_radius" => cfg.saddle_disc_radius = positive(line, key, value)?,
            "continuity_cells" => cfg.continuity_cells = positive(line, key, value)?,
            "output_dir" => {
                if value.is_empty() {
                    return Err(line_err(line, "'output_dir' must not be empty"));
                }
                cfg.output_dir = PathBuf::from(value);
            }
            "seed" => cfg.seed = num(line, key, value)?,
            _ => unreachable!("key list and match arms agree"),
        }
    }

    let (init_name, init_line) = initial.unwrap_or_else(|| {
        let default = if cfg.model == ModelTag::Clm1d { "clm_cos" } else { "cmt" };
        (default.to_string(), 0)
    });
    cfg.initial = match init_name.as_str() {
        "cmt" => Initial::Cmt,
        "cos_x2" => Initial::CosX2,
        "clm_cos" => Initial::ClmCos,
        "random" => Initial::Random,
        "custom" => {
            let (e, _) = expression
                .clone()
                .ok_or_else(|| line_err(init_line, "'initial = custom' requires an 'expression' line"))?;
            Initial::Custom(e)
        }
        other => return Err(line_err(init_line, format!("unknown initial preset '{other}'"))),
    };
    if let (Some((_, l)), false) = (&expression, matches!(cfg.initial, Initial::Custom(_))) {
        return Err(line_err(*l, "'expression' is only used with 'initial = custom'"));
    }
    let planar_only = matches!(cfg.initial, Initial::Cmt | Initial::CosX2 | Initial::Random);
    if planar_only && !cfg.model.is_planar() {
        return Err(line_err(init_line.max(model_line), format!("preset '{}' needs a planar model", cfg.initial)));
    }
    if cfg.initial == Initial::ClmCos && cfg.model.is_planar() {
        return Err(line_err(init_line.max(model_line), "preset 'clm_cos' needs model = clm1d"));
    }

    cfg.step.mode = match (dt, cfl) {
        (Some((_, l1)), Some((_, l2))) => {
            return Err(line_err(l1.max(l2), "'dt' and 'cfl' are mutually exclusive"));
        }
        (Some((dt, _)), None) => StepMode::Fixed { dt },
        (None, Some((number, _))) => StepMode::Cfl {
            number,
            dt_max: dt_max.unwrap_or(0.05),
        },
        (None, None) if cfg.model == ModelTag::Clm1d => StepMode::Fixed { dt: 1e-4 },
        (None, None) => StepMode::Cfl {
            number: 0.5,
            dt_max: dt_max.unwrap_or(0.05),
        },
    };
    let filter_on = filter.unwrap_or(cfg.initial == Initial::Cmt);
    cfg.filter = filter_on.then_some(ExpFilter { strength, order });
    Ok(cfg)
}

/// A compiled custom expression in `x1`, `x2` (or `x`).
pub struct Expression {
    tree: Node<DefaultNumericTypes>,
    ctx: HashMapContext<DefaultNumericTypes>,
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Expression")
    }
}

impl Expression {
    /// Compiles `text`. Besides the evalexpr operators, `sin cos tan exp ln
    /// sqrt abs tanh sinh cosh atan` and the constant `pi` are available.
    pub fn compile(text: &str) -> Result<Self, ConfigError> {
        let tree = build_operator_tree::<DefaultNumericTypes>(text).map_err(|e| ConfigError::Expression(e.to_string()))?;
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        let unary: [(&str, fn(f64) -> f64); 11] = [
            ("sin", f64::sin),
            ("cos", f64::cos),
            ("tan", f64::tan),
            ("exp", f64::exp),
            ("ln", f64::ln),
            ("sqrt", f64::sqrt),
            ("abs", f64::abs),
            ("tanh", f64::tanh),
            ("sinh", f64::sinh),
            ("cosh", f64::cosh),
            ("atan", f64::atan),
        ];
        for (name, f) in unary {
            ctx.set_function(
                name.to_string(),
                Function::new(move |v: &Value<DefaultNumericTypes>| Ok(Value::Float(f(v.as_number()?)))),
            )
            .map_err(|e| ConfigError::Expression(e.to_string()))?;
        }
        ctx.set_value("pi".into(), Value::Float(std::f64::consts::PI))
            .map_err(|e| ConfigError::Expression(e.to_string()))?;
        Ok(Self { tree, ctx })
    }

    pub fn eval(&mut self, vars: &[(&str, f64)]) -> Result<f64, ConfigError> {
        for (name, v) in vars {
            self.ctx
                .set_value((*name).to_string(), Value::Float(*v))
                .map_err(|e| ConfigError::Expression(e.to_string()))?;
        }
        let v = self
            .tree
            .eval_number_with_context(&self.ctx)
            .map_err(|e| ConfigError::Expression(e.to_string()))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ConfigError::Expression(format!("expression is not finite at {vars:?}")))
        }
    }
}

fn random_field(grid: Grid2D, seed: u64) -> Field2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for k1 in 0..=4i32 {
        for k2 in -4..=4i32 {
            if (k1 == 0 && k2 <= 0) || k1 * k1 + k2 * k2 > 16 {
                continue;
            }
            let amp: f64 = rng.random_range(-1.0..1.0) / ((k1 * k1 + k2 * k2) as f64);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            modes.push((k1 as f64, k2 as f64, amp, phase));
        }
    }
    Field2D::from_fn(grid, |x1, x2| {
        modes.iter().map(|&(k1, k2, a, p)| a * (k1 * x1 + k2 * x2 + p).cos()).sum()
    })
}

impl SimConfig {
    pub fn build_model(&self) -> Result<Model, ConfigError> {
        Ok(Model::new(self.model, self.n)?.with_filter(self.filter))
    }

    pub fn initial_state(&self) -> Result<State, ConfigError> {
        if self.model.is_planar() {
            let grid = Grid2D::new(self.n)?;
            let field = match &self.initial {
                Initial::Cmt => Field2D::from_fn(grid, |x1, x2| x1.sin() * x2.sin() + x2.cos()),
                Initial::CosX2 => Field2D::from_fn(grid, |_, x2| x2.cos()),
                Initial::Random => random_field(grid, self.seed),
                Initial::Custom(text) => {
                    let mut e = Expression::compile(text)?;
                    let mut values = Vec::with_capacity(grid.len());
                    for j in 0..grid.n() {
                        for i in 0..grid.n() {
                            values.push(e.eval(&[("x1", grid.coord(i)), ("x2", grid.coord(j))])?);
                        }
                    }
                    Field2D::new(grid, values)?
                }
                Initial::ClmCos => return Err(ConfigError::Invalid("clm_cos needs model clm1d".into())),
            };
            Ok(State::Plane(field))
        } else {
            let field = match &self.initial {
                Initial::ClmCos => Field1D::from_fn(self.n, f64::cos)?,
                Initial::Custom(text) => {
                    let mut e = Expression::compile(text)?;
                    let dx = std::f64::consts::TAU / self.n as f64;
                    let mut values = Vec::with_capacity(self.n);
                    for i in 0..self.n {
                        values.push(e.eval(&[("x", i as f64 * dx)])?);
                    }
                    Field1D::new(values)?
                }
                other => return Err(ConfigError::Invalid(format!("preset '{other}' needs a planar model"))),
            };
            Ok(State::Line(field))
        }
    }

    pub fn tracker_options(&self) -> TrackOptions {
        TrackOptions {
            continuity_cells: self.continuity_cells,
            ..TrackOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, SimConfig::default());
    }

    #[test]
    fn unknown_key_names_the_line() {
        let err = parse_config("# header\nmodle=sqg\n").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("modle"), "{err}");
    }

    #[test]
    fn range_errors() {
        for text in ["n=-4", "n=100", "cfl=1.5", "t_end=-1", "snapshot_interval=0", "dt=0"] {
            let err = parse_config(text).unwrap_err().to_string();
            assert!(err.contains("line 1"), "{text}: {err}");
        }
        assert!(parse_config("n=abc").unwrap_err().to_string().contains("cannot parse"));
    }

    #[test]
    fn filter_default_follows_preset() {
        assert!(parse_config("initial=cmt").unwrap().filter.is_some());
        assert!(parse_config("initial=cos_x2").unwrap().filter.is_none());
        assert!(parse_config("initial=cos_x2\nfilter=on").unwrap().filter.is_some());
    }

    #[test]
    fn clm_defaults_to_fixed_steps() {
        let cfg = parse_config("model=clm1d").unwrap();
        assert_eq!(cfg.initial, Initial::ClmCos);
        assert_eq!(cfg.step.mode, StepMode::Fixed { dt: 1e-4 });
        assert!(parse_config("model=clm1d\ninitial=cmt").is_err());
        assert!(parse_config("dt=0.1\ncfl=0.3").is_err());
    }

    #[test]
    fn region_and_custom_expression() {
        let cfg = parse_config(
            "n=16\ninitial=custom\nexpression = sin(x1) * cos(2.0 * x2) + pi\nsaddle_region = -0.5, 0.5, 2.6, 3.6",
        )
        .unwrap();
        assert!(cfg.saddle_region.is_some());
        let s = cfg.initial_state().unwrap();
        let f = s.as_plane().unwrap();
        let g = f.grid();
        let v = f.at(3, 5);
        let want = g.coord(3).sin() * (2.0 * g.coord(5)).cos() + std::f64::consts::PI;
        assert!((v - want).abs() < 1e-14);
        assert!(parse_config("initial=custom").is_err());
        assert!(parse_config("expression=x1").is_err());
    }

    #[test]
    fn random_preset_is_seeded() {
        let a = parse_config("n=16\ninitial=random\nseed=3").unwrap().initial_state().unwrap();
        let b = parse_config("n=16\ninitial=random\nseed=3").unwrap().initial_state().unwrap();
        let c = parse_config("n=16\ninitial=random\nseed=4").unwrap().initial_state().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
