//! Scenario files.
//!
//! A scenario is a TOML document with the sections `material`, `boundary`,
//! `grid`, `initial`, `solver`, `run` and an optional `sweep`. Unknown keys
//! are rejected. See `scenarios/README.md` for the schema.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use solidify_core::model::preset;
use solidify_core::{
    BoundaryParams, Field, Grid, HeatTransfer, MaterialParams, Mode, SolverConfig, State,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub material: MaterialSection,
    pub boundary: BoundaryParams,
    pub grid: GridSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Either a preset name, explicit constants, or a preset with overrides.
/// After parsing every constant is filled in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub latent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
}

impl MaterialSection {
    fn slots(&mut self) -> [(&'static str, &mut Option<f64>); 10] {
        [
            ("c", &mut self.c),
            ("kappa", &mut self.kappa),
            ("nu", &mut self.nu),
            ("lambda", &mut self.lambda),
            ("alpha", &mut self.alpha),
            ("beta", &mut self.beta),
            ("gamma", &mut self.gamma),
            ("L", &mut self.latent),
            ("theta_c", &mut self.theta_c),
            ("rho0", &mut self.rho0),
        ]
    }

    /// Fill unset constants from the preset.
    fn resolve(&mut self) -> Result<(), ConfigError> {
        let base = match &self.preset {
            Some(name) => Some(
                preset(name)
                    .ok_or_else(|| invalid("material.preset", format!("unknown preset `{name}`")))?
                    .material,
            ),
            None => None,
        };
        let defaults = base.map(|m| {
            [m.c, m.kappa, m.nu, m.lambda, m.alpha, m.beta, m.gamma, m.latent, m.theta_c, m.rho0]
        });
        for (k, (key, slot)) in self.slots().into_iter().enumerate() {
            if slot.is_none() {
                match defaults {
                    Some(d) => *slot = Some(d[k]),
                    None => {
                        return Err(invalid(
                            format!("material.{key}"),
                            "missing (give a preset or every constant)",
                        ))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> MaterialParams {
        let get = |v: Option<f64>| v.expect("material resolved at parse time");
        MaterialParams {
            c: get(self.c),
            kappa: get(self.kappa),
            nu: get(self.nu),
            lambda: get(self.lambda),
            alpha: get(self.alpha),
            beta: get(self.beta),
            gamma: get(self.gamma),
            latent: get(self.latent),
            theta_c: get(self.theta_c),
            rho0: get(self.rho0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub cells: Vec<usize>,
    /// Side lengths, m.
    pub extent: Vec<f64>,
}

impl GridSection {
    pub fn build(&self) -> Result<Grid, ConfigError> {
        if let Some(dim) = self.dim {
            if dim != self.cells.len() {
                return Err(invalid(
                    "grid.dim",
                    format!("is {dim} but `cells` has {} entries", self.cells.len()),
                ));
            }
        }
        Grid::new(&self.cells, &self.extent).map_err(|e| invalid("grid", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// `from + (to - from) x / extent` along `axis`.
    Linear,
    /// `from + (to - from) (1 - cos(pi x / extent)) / 2`.
    Cosine,
    /// `from` on the lower half of `axis`, `to` on the upper half.
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub profile: ProfileKind,
    pub from: f64,
    pub to: f64,
    #[serde(default)]
    pub axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialValue {
    Constant(f64),
    Profile(Profile),
}

impl InitialValue {
    fn field(&self, grid: &Arc<Grid>, key: &str) -> Result<Field, ConfigError> {
        match self {
            InitialValue::Constant(v) => Ok(Field::constant(grid.clone(), *v)),
            InitialValue::Profile(p) => {
                if p.axis >= grid.dim() {
                    return Err(invalid(
                        format!("initial.{key}.axis"),
                        format!("{} out of range for a {}-dimensional grid", p.axis, grid.dim()),
                    ));
                }
                let len = grid.spacing()[p.axis] * grid.cells_per_axis()[p.axis] as f64;
                let values = (0..grid.len())
                    .map(|i| {
                        let s = grid.center(i)[p.axis] / len;
                        let w = match p.profile {
                            ProfileKind::Linear => s,
                            ProfileKind::Cosine => 0.5 * (1.0 - (PI * s).cos()),
                            ProfileKind::Step => {
                                if s < 0.5 {
                                    0.0
                                } else {
                                    1.0
                                }
                            }
                        };
                        p.from + (p.to - p.from) * w
                    })
                    .collect();
                Field::new(grid.clone(), values).map_err(|e| invalid(format!("initial.{key}"), e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub theta0: InitialValue,
    #[serde(rename = "U0")]
    pub u0: InitialValue,
    pub chi0: InitialValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt: f64,
    pub mode: Mode,
    pub picard_tol: f64,
    pub picard_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_r: Option<f64>,
    pub scalar_root_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            dt: d.dt,
            mode: d.mode,
            picard_tol: d.picard_tol,
            picard_max: d.picard_max,
            truncation_r: d.truncation,
            scalar_root_tol: d.scalar_root_tol,
        }
    }
}

impl SolverSection {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            picard_tol: self.picard_tol,
            picard_max: self.picard_max,
            truncation: self.truncation_r,
            scalar_root_tol: self.scalar_root_tol,
            mode: self.mode,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    /// Stop early once the steady-state monitor falls below this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_tol: Option<f64>,
    /// Write every n-th step to the time series (the last step is always written).
    #[serde(default = "one")]
    pub output_every: usize,
    /// Write a field snapshot every n-th step; 0 writes only the final state.
    #[serde(default)]
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "theta_Gamma")]
    ThetaGamma,
    #[serde(rename = "K_Gamma")]
    KGamma,
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParameter::ThetaGamma => "theta_Gamma",
            SweepParameter::KGamma => "K_Gamma",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg: ScenarioConfig = toml::from_str(text)?;
    cfg.material.resolve()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn emit_config(cfg: &ScenarioConfig) -> String {
    toml::to_string(cfg).expect("scenario config serializes")
}

impl ScenarioConfig {
    pub fn material(&self) -> MaterialParams {
        self.material.params()
    }

    pub fn is_normalized(&self) -> bool {
        self.material() == MaterialParams::normalized()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.material()
            .validate()
            .map_err(|e| invalid("material", e.to_string()))?;
        self.boundary
            .validate()
            .map_err(|e| invalid("boundary", e.to_string()))?;
        let grid = Arc::new(self.grid.build()?);
        solidify_core::robin_data(&grid, &self.boundary)
            .map_err(|e| invalid("boundary.h", e.to_string()))?;
        self.solver
            .config()
            .validate()
            .map_err(|e| invalid("solver", e.to_string()))?;
        self.initial_state_on(grid)?;
        if !(self.run.t_end.is_finite() && self.run.t_end > 0.0) {
            return Err(invalid("run.t_end", "must be positive"));
        }
        if self.run.steady_tol.is_some_and(|t| !(t > 0.0)) {
            return Err(invalid("run.steady_tol", "must be positive"));
        }
        if self.run.output_every == 0 {
            return Err(invalid("run.output_every", "must be at least 1"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(invalid("sweep.values", "empty sweep list"));
            }
            for v in &sweep.values {
                let ok = match sweep.parameter {
                    SweepParameter::ThetaGamma => v.is_finite() && *v > 0.0,
                    SweepParameter::KGamma => v.is_finite() && *v >= 0.0,
                };
                if !ok {
                    return Err(invalid(
                        "sweep.values",
                        format!("{v} is not admissible for {}", sweep.parameter),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>, ConfigError> {
        Ok(Arc::new(self.grid.build()?))
    }

    pub fn initial_state(&self) -> Result<State, ConfigError> {
        self.initial_state_on(self.grid()?)
    }

    fn initial_state_on(&self, grid: Arc<Grid>) -> Result<State, ConfigError> {
        let theta = self.initial.theta0.field(&grid, "theta0")?;
        if !(theta.min() > 0.0) {
            return Err(invalid("initial.theta0", "theta0 > 0 (temperature must be positive)"));
        }
        let chi = self.initial.chi0.field(&grid, "chi0")?;
        if chi.min() < 0.0 || chi.max() > 1.0 {
            return Err(invalid("initial.chi0", "chi0 in [0,1]"));
        }
        let u = self.initial.u0.field(&grid, "U0")?;
        State::new(theta, u, chi, 0.0).map_err(|e| invalid("initial", e.to_string()))
    }

    /// Copy with the swept parameter set to `value`.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> ScenarioConfig {
        let mut cfg = self.clone();
        match parameter {
            SweepParameter::ThetaGamma => cfg.boundary.theta_gamma = value,
            SweepParameter::KGamma => cfg.boundary.k_gamma = value,
        }
        cfg.sweep = None;
        cfg
    }

    pub fn heat_transfer_is_uniform(&self) -> bool {
        matches!(self.boundary.h, HeatTransfer::Uniform(_))
    }
}
