//! Time integration of the coupled temperature / strain / phase system.
//!
//! Each step first advances strain and phase with an implicit-Euler
//! resolvent for a frozen temperature `theta_hat`, then solves the heat
//! equation with the rates of that same step. In staggered mode
//! `theta_hat` is the old temperature; in Picard mode the pair of solves is
//! repeated with the latest temperature until it stops changing.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{diffusion_solve_with_sink, integrate, Field, Grid, RobinData};
use crate::model::{BoundaryParams, MaterialParams};

const ROOT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub temperature: Field,
    /// Volumetric strain `U = div u`.
    pub strain: Field,
    /// Phase fraction, 1 = liquid, 0 = solid.
    pub phase: Field,
    pub t: f64,
}

impl State {
    pub fn new(temperature: Field, strain: Field, phase: Field, t: f64) -> Result<Self> {
        let state = Self {
            temperature,
            strain,
            phase,
            t,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn uniform(grid: Arc<Grid>, theta: f64, strain: f64, chi: f64) -> Result<Self> {
        Self::new(
            Field::constant(grid.clone(), theta),
            Field::constant(grid.clone(), strain),
            Field::constant(grid, chi),
            0.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !self.temperature.same_grid(&self.strain) || !self.temperature.same_grid(&self.phase) {
            return Err(Error::GridMismatch);
        }
        if let Some((cell, &value)) =
            self.temperature.values().iter().enumerate().find(|(_, v)| !(**v > 0.0))
        {
            return Err(Error::NonPositiveTemperature { cell, value });
        }
        if let Some(v) = self.phase.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("phase value {v} outside [0,1]")));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.temperature.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Staggered,
    Picard,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "staggered" => Ok(Mode::Staggered),
            "picard" => Ok(Mode::Picard),
            other => Err(format!("unknown mode `{other}` (expected staggered or picard)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Cutoff `R` of `Q_R(z) = min(max(z, 0), R)`; `None` disables truncation.
    pub truncation: Option<f64>,
    pub scalar_root_tol: f64,
    pub mode: Mode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            picard_tol: 1e-8,
            picard_max: 50,
            truncation: None,
            scalar_root_tol: 1e-12,
            mode: Mode::Staggered,
        }
    }
}

impl SolverConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("picard_tol", self.picard_tol),
            ("scalar_root_tol", self.scalar_root_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if self.picard_max == 0 {
            return Err(Error::InvalidParameter {
                name: "picard_max",
                reason: "must be at least 1".into(),
            });
        }
        if let Some(r) = self.truncation {
            if !(r > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "truncation_R",
                    reason: format!("must be positive, got {r}"),
                });
            }
        }
        Ok(())
    }

    fn truncate(&self, theta: &Field) -> Field {
        match self.truncation {
            Some(r) => theta.map(|z| z.max(0.0).min(r)),
            None => theta.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub picard_iterations: usize,
    /// Largest cellwise change of temperature, strain and phase.
    pub max_update: [f64; 3],
    pub volume_increment: f64,
    /// `||(U_t, chi_t)||` in L².
    pub rate_norm: f64,
}

/// Result of one implicit strain/phase update.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseUpdate {
    pub strain: Field,
    pub phase: Field,
    /// Total volume increment `U_Omega` of the new strain.
    pub volume_increment: f64,
    /// Element of the normal cone of `[0,1]` at the new phase, per cell;
    /// zero wherever the phase is strictly inside the interval.
    pub multiplier: Vec<f64>,
}

/// Per-cell coefficients of the implicit strain/phase system for a fixed
/// trial value of `U_Omega`.
struct CellSystem {
    strain_diag: f64,
    phase_diag: f64,
    alpha_lambda: f64,
}

impl CellSystem {
    fn new(dt: f64, m: &MaterialParams) -> Self {
        let strain_diag = m.nu / dt + m.lambda;
        let phase_diag = m.gamma / dt + m.alpha * m.alpha * m.lambda * m.nu / (dt * strain_diag);
        Self {
            strain_diag,
            phase_diag,
            alpha_lambda: m.alpha * m.lambda,
        }
    }

    /// Returns `(U, chi, dU/dU_Omega)`.
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        theta_hat: f64,
        strain_old: f64,
        chi_old: f64,
        total: f64,
        dt: f64,
        m: &MaterialParams,
        b: &BoundaryParams,
    ) -> (f64, f64, f64) {
        let a = self.strain_diag;
        let al = self.alpha_lambda;
        let r_u = m.nu * strain_old / dt + m.beta * (theta_hat - m.theta_c) - b.p0 - b.k_gamma * total;
        let offset = al * r_u / a + al * al / a - m.alpha * al
            + m.latent * (1.0 - theta_hat / m.theta_c)
            - m.gamma * chi_old / dt;
        let free = -offset / self.phase_diag;
        let chi = free.clamp(0.0, 1.0);
        let strain = (r_u + al * (1.0 - chi)) / a;
        let dchi = if free > 0.0 && free < 1.0 {
            al * b.k_gamma / (a * self.phase_diag)
        } else {
            0.0
        };
        let dstrain = (-b.k_gamma - al * dchi) / a;
        (strain, chi, dstrain)
    }
}

fn check_positive(theta: &Field) -> Result<()> {
    match theta.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        Some((cell, &value)) => Err(Error::NonPositiveTemperature { cell, value }),
        None => Ok(()),
    }
}

/// Implicit-Euler update of strain and phase for a frozen temperature field.
///
/// Solves, cell by cell,
/// `nu (U - U_old)/dt + lambda U = alpha lambda (1 - chi) + beta (theta_hat - theta_c) - p0 - K U_Omega`
/// and
/// `gamma (chi - chi_old)/dt + alpha lambda (U - alpha (1 - chi)) + L (1 - theta_hat/theta_c) + ∂I(chi) ∋ 0`,
/// where `U_Omega` is the integral of the new strain. Eliminating `U`
/// leaves a scalar inclusion for `chi` whose solution is a projection onto
/// `[0,1]`; the coupling through `U_Omega` is resolved by a safeguarded
/// Newton iteration on a strictly decreasing piecewise-linear function.
pub fn resolvent_step_phase(
    theta_hat: &Field,
    strain_old: &Field,
    phase_old: &Field,
    dt: f64,
    m: &MaterialParams,
    b: &BoundaryParams,
    root_tol: f64,
) -> Result<PhaseUpdate> {
    if !theta_hat.same_grid(strain_old) || !theta_hat.same_grid(phase_old) {
        return Err(Error::GridMismatch);
    }
    check_positive(theta_hat)?;
    let grid = theta_hat.grid().clone();
    let vol = grid.cell_volume();
    let n = grid.len();
    let sys = CellSystem::new(dt, m);

    let residual = |total: f64| -> (f64, f64) {
        let mut sum = 0.0;
        let mut slope = 0.0;
        for i in 0..n {
            let (u, _, du) = sys.solve(theta_hat[i], strain_old[i], phase_old[i], total, dt, m, b);
            sum += u;
            slope += du;
        }
        (sum * vol - total, slope * vol - 1.0)
    };

    // F is decreasing with slope <= -1, so the root lies within |F(s0)| of s0.
    let s0 = integrate(strain_old);
    let (f0, df0) = residual(s0);
    let total = if f0 == 0.0 {
        s0
    } else {
        let (mut lo, mut hi) = if f0 > 0.0 { (s0, s0 + f0) } else { (s0 + f0, s0) };
        let mut s = s0 - f0 / df0;
        let mut converged = false;
        for _ in 0..ROOT_MAX_ITER {
            if !(s > lo && s < hi) {
                s = 0.5 * (lo + hi);
            }
            let (f, df) = residual(s);
            let scale = 1.0 + s.abs();
            if f.abs() <= root_tol * scale {
                converged = true;
                break;
            }
            if f > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            if hi - lo <= root_tol * scale {
                s = 0.5 * (lo + hi);
                converged = true;
                break;
            }
            s -= f / df;
        }
        if !converged {
            return Err(Error::RootFind(format!(
                "no convergence in {ROOT_MAX_ITER} iterations, bracket [{lo}, {hi}]"
            )));
        }
        s
    };

    let mut strain = Vec::with_capacity(n);
    let mut phase = Vec::with_capacity(n);
    let mut multiplier = Vec::with_capacity(n);
    for i in 0..n {
        let (u, chi, _) = sys.solve(theta_hat[i], strain_old[i], phase_old[i], total, dt, m, b);
        let xi = if chi == 0.0 || chi == 1.0 {
            -(m.gamma * (chi - phase_old[i]) / dt
                + sys.alpha_lambda * m.elastic_strain(u, chi)
                + m.latent * (1.0 - theta_hat[i] / m.theta_c))
        } else {
            0.0
        };
        strain.push(u);
        phase.push(chi);
        multiplier.push(xi);
    }
    let strain = Field::new(grid.clone(), strain)?;
    let phase = Field::new(grid, phase)?;
    Ok(PhaseUpdate {
        volume_increment: integrate(&strain),
        strain,
        phase,
        multiplier,
    })
}

/// Heat-equation half of a step.
///
/// Uses the heat source
/// `nu U_t² + gamma chi_t² + xi chi_t - (beta U_t + (L/theta_c) chi_t) theta`
/// with the backward-difference rates of `update`. The dissipative terms are
/// nonnegative; the `theta`-proportional term is implicit where it is a sink
/// and evaluated at `theta_hat` where it is a source, so the linear system
/// is an M-matrix with a nonnegative right-hand side.
pub fn heat_step(
    old: &State,
    update: &PhaseUpdate,
    theta_hat: &Field,
    dt: f64,
    m: &MaterialParams,
    robin: &RobinData,
) -> Result<Field> {
    let grid = old.grid().clone();
    let n = grid.len();
    let mut source = Vec::with_capacity(n);
    let mut sink = Vec::with_capacity(n);
    for i in 0..n {
        let u_t = (update.strain[i] - old.strain[i]) / dt;
        let chi_t = (update.phase[i] - old.phase[i]) / dt;
        let rate = m.beta * u_t + m.latent / m.theta_c * chi_t;
        let dissipation =
            m.nu * u_t * u_t + m.gamma * chi_t * chi_t + (update.multiplier[i] * chi_t).max(0.0);
        source.push(dissipation + (-rate).max(0.0) * theta_hat[i]);
        sink.push(rate.max(0.0));
    }
    let source = Field::new(grid.clone(), source)?;
    let sink = Field::new(grid, sink)?;
    diffusion_solve_with_sink(
        &old.temperature,
        &source,
        Some(&sink),
        dt,
        m.c,
        m.kappa,
        robin,
    )
}

/// Advance one time step.
pub fn step(
    state: &State,
    m: &MaterialParams,
    b: &BoundaryParams,
    robin: &RobinData,
    cfg: &SolverConfig,
) -> Result<(State, StepReport)> {
    let dt = cfg.dt;
    let mut theta_hat = state.temperature.clone();
    let mut iterations = 0;
    let (update, theta_new) = loop {
        iterations += 1;
        let frozen = cfg.truncate(&theta_hat);
        let update = resolvent_step_phase(
            &frozen,
            &state.strain,
            &state.phase,
            dt,
            m,
            b,
            cfg.scalar_root_tol,
        )?;
        let theta_new = heat_step(state, &update, &frozen, dt, m, robin)?;
        if cfg.mode == Mode::Staggered {
            break (update, theta_new);
        }
        let change = theta_new
            .values()
            .iter()
            .zip(theta_hat.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm = theta_new.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        let residual = change / norm;
        if residual <= cfg.picard_tol {
            break (update, theta_new);
        }
        if iterations >= cfg.picard_max {
            return Err(Error::PicardDiverged {
                iterations,
                residual,
            });
        }
        theta_hat = theta_new;
    };

    let max_change = |a: &Field, b: &Field| {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let report = StepReport {
        picard_iterations: iterations,
        max_update: [
            max_change(&theta_new, &state.temperature),
            max_change(&update.strain, &state.strain),
            max_change(&update.phase, &state.phase),
        ],
        volume_increment: update.volume_increment,
        rate_norm: diagnostics::rate_norm(state, &update.strain, &update.phase, dt),
    };
    let next = State {
        temperature: theta_new,
        strain: update.strain,
        phase: update.phase,
        t: state.t + dt,
    };
    Ok((next, report))
}

/// Time-loop options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    /// Stop once `sqrt(||U_t||² + ||chi_t||² + ||∇theta||² + ∫h(theta - theta_Gamma)²)`
    /// falls below this value.
    pub steady_tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// One record for the initial state plus one per completed step.
    pub records: Vec<DiagnosticsRecord>,
    pub reports: Vec<StepReport>,
    pub final_state: State,
    pub reached_steady_state: bool,
    /// Set when a step failed; the trajectory holds everything up to it.
    pub failure: Option<Error>,
}

/// Advance `state0` to `t_end`, recording diagnostics after every step.
///
/// `observer` sees every accepted state with its record.
pub fn run(
    state0: &State,
    m: &MaterialParams,
    b: &BoundaryParams,
    robin: &RobinData,
    cfg: &SolverConfig,
    opts: &RunOptions,
    mut observer: impl FnMut(&State, &DiagnosticsRecord),
) -> Result<Trajectory> {
    state0.validate()?;
    cfg.validate()?;
    if !(opts.t_end > state0.t) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!("must exceed the initial time {}", state0.t),
        });
    }
    let first = diagnostics::record(None, state0, m, b, robin);
    observer(state0, &first);
    let steps = ((opts.t_end - state0.t) / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let mut records = vec![first];
    let mut reports = Vec::with_capacity(steps);
    let mut state = state0.clone();
    let mut failure = None;
    let mut steady = false;
    for _ in 0..steps {
        match step(&state, m, b, robin, cfg) {
            Ok((next, report)) => {
                let rec = diagnostics::record(
                    Some((&state, records.last().expect("initial record"))),
                    &next,
                    m,
                    b,
                    robin,
                );
                observer(&next, &rec);
                let metric = rec.steady_metric();
                records.push(rec);
                reports.push(report);
                state = next;
                if opts.steady_tol.is_some_and(|tol| metric <= tol) {
                    steady = true;
                    break;
                }
            }
            Err(e) => {
                failure = Some(Error::StepFailed {
                    t: state.t,
                    source: Box::new(e),
                });
                break;
            }
        }
    }
    Ok(Trajectory {
        records,
        reports,
        final_state: state,
        reached_steady_state: steady,
        failure,
    })
}
