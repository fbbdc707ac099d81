//! Thermodynamic bookkeeping along a trajectory.
//!
//! Every accepted step produces a [`DiagnosticsRecord`] holding the total
//! energy and entropy, the wall energy, the extended energy
//! `Psi = E + E_Gamma - theta_Gamma S`, the entropy production of the step
//! and the residual of the discrete energy balance.

use serde::Serialize;

use crate::dynamics::State;
use crate::grid::{integrate, Field, Grid, RobinData};
use crate::model::{
    boundary_energy, entropy_density, internal_energy_density, BoundaryParams, MaterialParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Totals {
    /// `∫ rho0 e`, J.
    pub energy: f64,
    /// `∫ rho0 s`, J/K.
    pub entropy: f64,
    pub boundary_energy: f64,
    /// `U_Omega = ∫ U`.
    pub volume_increment: f64,
    /// `X_Omega = ∫ (1 - chi)`.
    pub ice_volume: f64,
    pub gauge_pressure: f64,
}

/// Totals of a valid state. Panics on states with non-positive temperature.
pub fn totals(state: &State, m: &MaterialParams, b: &BoundaryParams) -> Totals {
    let grid = state.grid();
    let n = grid.len();
    let mut energy = 0.0;
    let mut entropy = 0.0;
    for i in 0..n {
        let (theta, u, chi) = (state.temperature[i], state.strain[i], state.phase[i]);
        energy += m.rho0 * internal_energy_density(theta, u, chi, m).expect("admissible state");
        entropy += m.rho0 * entropy_density(theta, u, chi, m).expect("admissible state");
    }
    let vol = grid.cell_volume();
    let volume_increment = integrate(&state.strain);
    Totals {
        energy: energy * vol,
        entropy: entropy * vol,
        boundary_energy: boundary_energy(volume_increment, b),
        volume_increment,
        ice_volume: grid.volume() - integrate(&state.phase),
        gauge_pressure: b.gauge_pressure(volume_increment),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "S")]
    pub entropy: f64,
    #[serde(rename = "E_Gamma")]
    pub boundary_energy: f64,
    #[serde(rename = "Psi")]
    pub lyapunov: f64,
    #[serde(rename = "U_Omega")]
    pub volume_increment: f64,
    #[serde(rename = "X_Omega")]
    pub ice_volume: f64,
    #[serde(rename = "P_gauge")]
    pub gauge_pressure: f64,
    /// Entropy produced during the step ending at `t`, W/K.
    pub entropy_production: f64,
    /// Residual of the discrete energy balance over the step ending at `t`, W.
    pub energy_residual: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_min_cell: usize,
    pub rate_norm: f64,
    /// `||∇theta||` in L².
    pub grad_norm: f64,
    /// `(∫ h (theta - theta_Gamma)²)^{1/2}` over the wall.
    pub wall_mismatch: f64,
    /// Heat flowing in through the wall at the new temperature, W.
    pub boundary_inflow: f64,
    /// Time-integrated `theta_Gamma * production + ∫ h (theta_Gamma - theta)²/theta`.
    pub cumulative_dissipation: f64,
}

impl DiagnosticsRecord {
    /// Combined steady-state monitor.
    pub fn steady_metric(&self) -> f64 {
        (self.rate_norm.powi(2) + self.grad_norm.powi(2) + self.wall_mismatch.powi(2)).sqrt()
    }
}

/// `||(U_t, chi_t)||` in L² for the backward differences from `old`.
pub fn rate_norm(old: &State, strain: &Field, phase: &Field, dt: f64) -> f64 {
    let n = old.grid().len();
    let mut sum = 0.0;
    for i in 0..n {
        let u_t = (strain[i] - old.strain[i]) / dt;
        let chi_t = (phase[i] - old.phase[i]) / dt;
        sum += u_t * u_t + chi_t * chi_t;
    }
    (sum * old.grid().cell_volume()).sqrt()
}

/// Face-centered `Σ_faces (area/spacing) w(θ_i, θ_j) (θ_j - θ_i)²`.
fn face_sum(grid: &Grid, theta: &Field, weight: impl Fn(f64, f64) -> f64) -> f64 {
    grid.interior_faces()
        .map(|(lo, hi, axis)| {
            let jump = theta[hi] - theta[lo];
            grid.face_area(axis) / grid.spacing()[axis] * weight(theta[lo], theta[hi]) * jump * jump
        })
        .sum()
}

/// `||∇theta||` in L² with face-centered differences.
pub fn grad_norm(theta: &Field) -> f64 {
    face_sum(theta.grid(), theta, |_, _| 1.0).sqrt()
}

/// Discrete `∫ (kappa |∇θ|²/θ² + gamma chi_t²/θ + nu U_t²/θ)` for the step
/// `prev -> next`.
///
/// The gradient part is evaluated on faces with `θ²` replaced by
/// `θ_i θ_j`, matching the finite-volume diffusion stencil. Every term is
/// nonnegative.
pub fn entropy_production(prev: &State, next: &State, dt: f64, m: &MaterialParams) -> f64 {
    let grid = next.grid();
    let theta = &next.temperature;
    let conduction = m.kappa * face_sum(grid, theta, |a, b| 1.0 / (a * b));
    let mut local = 0.0;
    for i in 0..grid.len() {
        let u_t = (next.strain[i] - prev.strain[i]) / dt;
        let chi_t = (next.phase[i] - prev.phase[i]) / dt;
        local += (m.gamma * chi_t * chi_t + m.nu * u_t * u_t) / theta[i];
    }
    conduction + local * grid.cell_volume()
}

/// `[(E + E_Gamma)_next - (E + E_Gamma)_prev] / dt - boundary_flux`.
pub fn energy_balance_residual(
    prev: &DiagnosticsRecord,
    next: &DiagnosticsRecord,
    boundary_flux: f64,
) -> f64 {
    let dt = next.t - prev.t;
    ((next.energy + next.boundary_energy) - (prev.energy + prev.boundary_energy)) / dt
        - boundary_flux
}

/// Extended energy `E + E_Gamma - theta_Gamma S`.
pub fn lyapunov(record: &DiagnosticsRecord, b: &BoundaryParams) -> f64 {
    record.energy + record.boundary_energy - b.theta_gamma * record.entropy
}

/// Build the record for `next`. With `prev == None` the rates, production
/// and residual are zero.
pub fn record(
    prev: Option<(&State, &DiagnosticsRecord)>,
    next: &State,
    m: &MaterialParams,
    b: &BoundaryParams,
    robin: &RobinData,
) -> DiagnosticsRecord {
    let grid = next.grid();
    let tot = totals(next, m, b);
    let theta = &next.temperature;
    let (theta_min_cell, theta_min) = theta
        .values()
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let mismatch: Vec<f64> = grid
        .boundary_faces()
        .iter()
        .zip(&robin.h)
        .map(|(f, h)| h * (theta[f.cell] - b.theta_gamma).powi(2))
        .collect();
    let wall_mismatch = crate::grid::boundary_integrate(&mismatch, grid).sqrt();
    let inflow = robin.inflow(grid, theta);
    let mut rec = DiagnosticsRecord {
        t: next.t,
        energy: tot.energy,
        entropy: tot.entropy,
        boundary_energy: tot.boundary_energy,
        lyapunov: 0.0,
        volume_increment: tot.volume_increment,
        ice_volume: tot.ice_volume,
        gauge_pressure: tot.gauge_pressure,
        entropy_production: 0.0,
        energy_residual: 0.0,
        theta_min,
        theta_max: theta.max(),
        theta_min_cell,
        rate_norm: 0.0,
        grad_norm: grad_norm(theta),
        wall_mismatch,
        boundary_inflow: inflow,
        cumulative_dissipation: 0.0,
    };
    rec.lyapunov = lyapunov(&rec, b);
    if let Some((prev_state, prev_rec)) = prev {
        let dt = next.t - prev_state.t;
        rec.entropy_production = entropy_production(prev_state, next, dt, m);
        rec.energy_residual = energy_balance_residual(prev_rec, &rec, inflow);
        rec.rate_norm = rate_norm(prev_state, &next.strain, &next.phase, dt);
        let wall_loss: Vec<f64> = grid
            .boundary_faces()
            .iter()
            .zip(&robin.h)
            .map(|(f, h)| h * (b.theta_gamma - theta[f.cell]).powi(2) / theta[f.cell])
            .collect();
        let rate = b.theta_gamma * rec.entropy_production
            + crate::grid::boundary_integrate(&wall_loss, grid);
        rec.cumulative_dissipation = prev_rec.cumulative_dissipation + dt * rate;
    }
    rec
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeViolation {
    pub t: f64,
    pub cell: usize,
    pub theta: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    /// Whether the lower envelope was checked (normalized constants only).
    pub lower_checked: bool,
    pub violations: Vec<EnvelopeViolation>,
    /// Smallest `theta_min / theta_flat` seen (infinite when unchecked).
    pub min_ratio: f64,
    /// Largest temperature along the trajectory.
    pub theta_max: f64,
    /// Largest excess of the temperature over `theta_star_high`.
    pub excess_over_upper: f64,
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.theta_max.is_finite()
    }
}

/// Relative slack on the lower envelope.
pub const ENVELOPE_SLACK: f64 = 0.05;

/// Lower temperature envelope `2 theta_* / (2 + theta_* t)` for normalized constants.
pub fn lower_envelope(theta_star_low: f64, t: f64) -> f64 {
    2.0 * theta_star_low / (2.0 + theta_star_low * t)
}

/// Check positivity on any trajectory and, for normalized constants, the
/// lower envelope with 5% slack.
///
/// `theta_star_low` must bound both the initial temperature and the
/// external temperature from below.
pub fn envelope_check(
    records: &[DiagnosticsRecord],
    theta_star_low: f64,
    theta_star_high: f64,
    normalized: bool,
) -> EnvelopeReport {
    let t0 = records.first().map_or(0.0, |r| r.t);
    let mut report = EnvelopeReport {
        lower_checked: normalized,
        violations: Vec::new(),
        min_ratio: f64::INFINITY,
        theta_max: f64::NEG_INFINITY,
        excess_over_upper: f64::NEG_INFINITY,
    };
    for r in records {
        report.theta_max = report.theta_max.max(r.theta_max);
        report.excess_over_upper = report.excess_over_upper.max(r.theta_max - theta_star_high);
        let bound = if normalized {
            let flat = lower_envelope(theta_star_low, r.t - t0);
            report.min_ratio = report.min_ratio.min(r.theta_min / flat);
            flat * (1.0 - ENVELOPE_SLACK)
        } else {
            0.0
        };
        if !(r.theta_min > bound) {
            report.violations.push(EnvelopeViolation {
                t: r.t,
                cell: r.theta_min_cell,
                theta: r.theta_min,
                bound,
            });
        }
    }
    report
}
