//! Running scenarios and writing their output files.
//!
//! Output directory layout:
//!
//! * `config.toml`: the fully resolved scenario.
//! * `timeseries.csv`: one row per written step.
//! * `snapshots/step_NNNNNNNN.csv`: cell values at the snapshot cadence and
//!   at the final step.
//! * `summary.json`: final observables, the predicted equilibrium and the
//!   thermodynamic checks.
//!
//! Floating-point values are written with 17 significant digits, so repeated
//! runs of the same scenario produce byte-identical files.

use std::fs;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use solidify_core::diagnostics::{envelope_check, EnvelopeReport};
use solidify_core::dynamics::{self, RunOptions};
use solidify_core::equilibria::classify;
use solidify_core::{
    robin_data, DiagnosticsRecord, EquilibriumReport, Mode, Regime, State,
};

use crate::config::{emit_config, ScenarioConfig, SweepParameter};

/// Relative slack on per-step increases of the extended energy.
pub const LYAPUNOV_SLACK: f64 = 1e-8;

/// Ice fractions within this distance of 0 or 1 count as pure phases.
pub const PURE_PHASE_TOL: f64 = 1e-3;

pub const TIMESERIES_HEADER: [&str; 13] = [
    "t",
    "E",
    "S",
    "E_Gamma",
    "Psi",
    "U_Omega",
    "X_Omega",
    "P_gauge",
    "entropy_production",
    "energy_residual",
    "theta_min",
    "theta_max",
    "rate_norm",
];

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn timeseries_row(r: &DiagnosticsRecord) -> [f64; 13] {
    [
        r.t,
        r.energy,
        r.entropy,
        r.boundary_energy,
        r.lyapunov,
        r.volume_increment,
        r.ice_volume,
        r.gauge_pressure,
        r.entropy_production,
        r.energy_residual,
        r.theta_min,
        r.theta_max,
        r.rate_norm,
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalObservables {
    pub t: f64,
    pub volume: f64,
    #[serde(rename = "U_Omega")]
    pub volume_increment: f64,
    #[serde(rename = "X_Omega")]
    pub ice_volume: f64,
    pub ice_fraction: f64,
    #[serde(rename = "P_gauge")]
    pub gauge_pressure: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Serialize)]
pub struct Deviation {
    pub ice_fraction: f64,
    #[serde(rename = "U_Omega")]
    pub volume_increment: f64,
    #[serde(rename = "P_gauge")]
    pub gauge_pressure: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeSummary {
    pub lower_checked: bool,
    pub passed: bool,
    pub min_ratio: Option<f64>,
    pub theta_max: f64,
    pub violations: usize,
    pub first_violation_t: Option<f64>,
    pub first_violation_cell: Option<usize>,
}

impl From<&EnvelopeReport> for EnvelopeSummary {
    fn from(r: &EnvelopeReport) -> Self {
        Self {
            lower_checked: r.lower_checked,
            passed: r.passed(),
            min_ratio: r.min_ratio.is_finite().then_some(r.min_ratio),
            theta_max: r.theta_max,
            violations: r.violations.len(),
            first_violation_t: r.violations.first().map(|v| v.t),
            first_violation_cell: r.violations.first().map(|v| v.cell),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Checks {
    pub min_entropy_production: f64,
    /// Largest `(Psi_next - Psi_prev) / |Psi_0|` over the run.
    pub max_relative_psi_increase: f64,
    pub psi_nonincreasing: bool,
    pub energy_residual_rms: f64,
    pub max_picard_iterations: usize,
    pub envelope: EnvelopeSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub name: Option<String>,
    pub status: &'static str,
    pub failure: Option<String>,
    pub failed_at: Option<f64>,
    pub dt: f64,
    pub mode: Mode,
    pub steps: usize,
    pub reached_steady_state: bool,
    #[serde(rename = "final")]
    pub final_state: FinalObservables,
    pub equilibrium: Option<EquilibriumReport>,
    pub equilibrium_error: Option<String>,
    /// Simulated minus predicted.
    pub deviation: Option<Deviation>,
    pub checks: Checks,
}

impl Summary {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

pub struct RunOutput {
    pub config: ScenarioConfig,
    /// Every step, starting with the initial state.
    pub records: Vec<DiagnosticsRecord>,
    /// `(step, state)` at the snapshot cadence, always including the last step.
    pub snapshots: Vec<(usize, State)>,
    pub summary: Summary,
}

pub fn ice_fraction_regime(fraction: f64) -> Regime {
    if fraction >= 1.0 - PURE_PHASE_TOL {
        Regime::Solid
    } else if fraction <= PURE_PHASE_TOL {
        Regime::Liquid
    } else {
        Regime::Mushy
    }
}

/// Largest per-step `(Psi_next - Psi_prev) / |Psi_0|`.
pub fn max_relative_psi_increase(records: &[DiagnosticsRecord]) -> f64 {
    let scale = records.first().map_or(1.0, |r| r.lyapunov.abs()).max(f64::MIN_POSITIVE);
    records
        .windows(2)
        .map(|w| (w[1].lyapunov - w[0].lyapunov) / scale)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn energy_residual_rms(records: &[DiagnosticsRecord]) -> f64 {
    let steps = &records[1.min(records.len())..];
    if steps.is_empty() {
        return 0.0;
    }
    (steps.iter().map(|r| r.energy_residual.powi(2)).sum::<f64>() / steps.len() as f64).sqrt()
}

/// Run a scenario in memory.
pub fn run_scenario(cfg: &ScenarioConfig) -> anyhow::Result<RunOutput> {
    let m = cfg.material();
    let b = &cfg.boundary;
    let state0 = cfg.initial_state()?;
    let grid = state0.grid().clone();
    let robin = robin_data(&grid, b)?;
    let solver = cfg.solver.config();
    let opts = RunOptions {
        t_end: cfg.run.t_end,
        steady_tol: cfg.run.steady_tol,
    };
    let every = cfg.run.snapshot_every;
    let mut snapshots = Vec::new();
    let mut count = 0usize;
    let traj = dynamics::run(&state0, &m, b, &robin, &solver, &opts, |s, _| {
        if every > 0 && count % every == 0 {
            snapshots.push((count, s.clone()));
        }
        count += 1;
    })?;
    let steps = traj.records.len() - 1;
    if snapshots.last().map(|(k, _)| *k) != Some(steps) {
        snapshots.push((steps, traj.final_state.clone()));
    }

    let volume = grid.volume();
    let last = traj.records.last().expect("initial record");
    let fraction = last.ice_volume / volume;
    let final_state = FinalObservables {
        t: last.t,
        volume,
        volume_increment: last.volume_increment,
        ice_volume: last.ice_volume,
        ice_fraction: fraction,
        gauge_pressure: last.gauge_pressure,
        theta_min: last.theta_min,
        theta_max: last.theta_max,
        regime: ice_fraction_regime(fraction),
    };
    let (equilibrium, equilibrium_error) = match classify(b.theta_gamma, &m, b, volume) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let deviation = equilibrium.as_ref().map(|e| Deviation {
        ice_fraction: fraction - e.ice_volume / volume,
        volume_increment: last.volume_increment - e.volume_increment,
        gauge_pressure: last.gauge_pressure - e.pressure,
    });

    let theta0 = &state0.temperature;
    let envelope = envelope_check(
        &traj.records,
        theta0.min().min(b.theta_gamma),
        theta0.max().max(b.theta_gamma),
        cfg.is_normalized(),
    );
    let max_psi = max_relative_psi_increase(&traj.records);
    let checks = Checks {
        min_entropy_production: traj.records[1..]
            .iter()
            .map(|r| r.entropy_production)
            .fold(f64::INFINITY, f64::min),
        max_relative_psi_increase: max_psi,
        psi_nonincreasing: !(max_psi > LYAPUNOV_SLACK),
        energy_residual_rms: energy_residual_rms(&traj.records),
        max_picard_iterations: traj.reports.iter().map(|r| r.picard_iterations).max().unwrap_or(0),
        envelope: EnvelopeSummary::from(&envelope),
    };
    let failed_at = match &traj.failure {
        Some(solidify_core::Error::StepFailed { t, .. }) => Some(*t),
        Some(_) => Some(last.t),
        None => None,
    };
    let summary = Summary {
        name: cfg.name.clone(),
        status: if traj.failure.is_none() { "ok" } else { "failed" },
        failure: traj.failure.as_ref().map(|e| e.to_string()),
        failed_at,
        dt: solver.dt,
        mode: solver.mode,
        steps,
        reached_steady_state: traj.reached_steady_state,
        final_state,
        equilibrium,
        equilibrium_error,
        deviation,
        checks,
    };
    Ok(RunOutput {
        config: cfg.clone(),
        records: traj.records,
        snapshots,
        summary,
    })
}

fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// Write the time series, snapshots, resolved config and summary into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir.join("snapshots"))
        .with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), emit_config(&out.config))?;

    let mut w = csv_writer(&dir.join("timeseries.csv"))?;
    w.write_record(TIMESERIES_HEADER)?;
    let every = out.config.run.output_every;
    let last = out.records.len() - 1;
    for (k, r) in out.records.iter().enumerate() {
        if k % every == 0 || k == last {
            w.write_record(timeseries_row(r).map(fmt))?;
        }
    }
    w.flush()?;

    for (k, state) in &out.snapshots {
        write_snapshot(state, &dir.join("snapshots").join(format!("step_{k:08}.csv")))?;
    }

    let summary = serde_json::to_string_pretty(&out.summary)?;
    fs::write(dir.join("summary.json"), summary + "\n")?;
    Ok(())
}

const AXES: [&str; 3] = ["x", "y", "z"];

pub fn write_snapshot(state: &State, path: &Path) -> anyhow::Result<()> {
    let grid = state.grid();
    let mut w = csv_writer(path)?;
    let mut header = vec!["index".to_string()];
    header.extend(AXES[..grid.dim()].iter().map(|s| s.to_string()));
    header.extend(["theta", "U", "chi"].map(String::from));
    w.write_record(&header)?;
    for i in 0..grid.len() {
        let mut row = vec![i.to_string()];
        row.extend(grid.center(i).into_iter().map(fmt));
        row.extend([state.temperature[i], state.strain[i], state.phase[i]].map(fmt));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Run the scenario at `dt, dt/2, ..., dt/2^halvings`.
pub fn run_refinement(cfg: &ScenarioConfig, halvings: usize) -> anyhow::Result<Vec<RunOutput>> {
    (0..=halvings)
        .map(|level| {
            let mut c = cfg.clone();
            c.solver.dt = cfg.solver.dt / f64::powi(2.0, level as i32);
            c.run.output_every = cfg.run.output_every << level;
            c.run.snapshot_every = cfg.run.snapshot_every << level;
            run_scenario(&c)
        })
        .collect()
}

pub const REFINEMENT_HEADER: [&str; 9] = [
    "level",
    "dt",
    "steps",
    "U_Omega",
    "X_Omega",
    "P_gauge",
    "energy_residual_rms",
    "dU_Omega",
    "dX_Omega",
];

/// One directory per level plus `refinement.csv` comparing their final observables.
pub fn write_refinement(outs: &[RunOutput], dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv_writer(&dir.join("refinement.csv"))?;
    w.write_record(REFINEMENT_HEADER)?;
    let mut prev: Option<&FinalObservables> = None;
    for (level, out) in outs.iter().enumerate() {
        write_outputs(out, &dir.join(format!("level_{level}")))?;
        let f = &out.summary.final_state;
        let (du, dx) = prev.map_or((f64::NAN, f64::NAN), |p| {
            (f.volume_increment - p.volume_increment, f.ice_volume - p.ice_volume)
        });
        w.write_record([
            level.to_string(),
            fmt(out.summary.dt),
            out.summary.steps.to_string(),
            fmt(f.volume_increment),
            fmt(f.ice_volume),
            fmt(f.gauge_pressure),
            fmt(out.summary.checks.energy_residual_rms),
            fmt(du),
            fmt(dx),
        ])?;
        prev = Some(f);
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub regime: Option<Regime>,
    pub theta_liquid: f64,
    pub theta_solid: f64,
    pub d: f64,
    pub beta_tilde: f64,
    pub predicted_ice_fraction: f64,
    pub simulated_ice_fraction: f64,
    pub predicted_u_omega: f64,
    pub simulated_u_omega: f64,
    pub predicted_p_gauge: f64,
    pub simulated_p_gauge: f64,
    pub reached_steady_state: bool,
    pub status: String,
}

pub const SWEEP_HEADER: [&str; 15] = [
    "parameter",
    "value",
    "regime",
    "theta_liquid",
    "theta_solid",
    "d",
    "beta_tilde",
    "predicted_ice_fraction",
    "simulated_ice_fraction",
    "predicted_U_Omega",
    "simulated_U_Omega",
    "predicted_P_gauge",
    "simulated_P_gauge",
    "reached_steady_state",
    "status",
];

fn sweep_row(cfg: &ScenarioConfig, parameter: SweepParameter, value: f64) -> SweepRow {
    let c = cfg.with_parameter(parameter, value);
    let mut row = SweepRow {
        value,
        regime: None,
        theta_liquid: f64::NAN,
        theta_solid: f64::NAN,
        d: f64::NAN,
        beta_tilde: f64::NAN,
        predicted_ice_fraction: f64::NAN,
        simulated_ice_fraction: f64::NAN,
        predicted_u_omega: f64::NAN,
        simulated_u_omega: f64::NAN,
        predicted_p_gauge: f64::NAN,
        simulated_p_gauge: f64::NAN,
        reached_steady_state: false,
        status: String::from("ok"),
    };
    let mut errors = Vec::new();
    let volume = match c.grid() {
        Ok(g) => g.volume(),
        Err(e) => {
            row.status = e.to_string();
            return row;
        }
    };
    match classify(c.boundary.theta_gamma, &c.material(), &c.boundary, volume) {
        Ok(e) => {
            row.regime = Some(e.regime);
            row.theta_liquid = e.thresholds.theta_liquid;
            row.theta_solid = e.thresholds.theta_solid;
            row.d = e.groups.d;
            row.beta_tilde = e.groups.beta_tilde;
            row.predicted_ice_fraction = e.ice_volume / volume;
            row.predicted_u_omega = e.volume_increment;
            row.predicted_p_gauge = e.pressure;
        }
        Err(e) => errors.push(format!("classification: {e}")),
    }
    match run_scenario(&c) {
        Ok(out) => {
            let f = &out.summary.final_state;
            row.simulated_ice_fraction = f.ice_fraction;
            row.simulated_u_omega = f.volume_increment;
            row.simulated_p_gauge = f.gauge_pressure;
            row.reached_steady_state = out.summary.reached_steady_state;
            if let Some(msg) = out.summary.failure {
                errors.push(msg);
            }
        }
        Err(e) => errors.push(format!("{e:#}")),
    }
    if !errors.is_empty() {
        row.status = errors.join("; ");
    }
    row
}

/// Worker threads for sweeps: `SOLIDIFY_THREADS` if set, else all cores.
pub fn sweep_threads() -> usize {
    std::env::var("SOLIDIFY_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// One row per sweep value, in the order given. Failed rows carry their
/// error in `status`; the sweep itself only fails on a missing or empty list.
pub fn run_sweep(cfg: &ScenarioConfig, threads: usize) -> anyhow::Result<Vec<SweepRow>> {
    let sweep = cfg.sweep.as_ref().context("scenario has no [sweep] section")?;
    anyhow::ensure!(!sweep.values.is_empty(), "empty sweep list");
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
    Ok(pool.install(|| {
        sweep
            .values
            .par_iter()
            .map(|&v| sweep_row(cfg, sweep.parameter, v))
            .collect()
    }))
}

pub fn write_sweep(rows: &[SweepRow], parameter: SweepParameter, path: &Path) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            parameter.to_string(),
            fmt(r.value),
            r.regime.map_or_else(String::new, |g| g.to_string()),
            fmt(r.theta_liquid),
            fmt(r.theta_solid),
            fmt(r.d),
            fmt(r.beta_tilde),
            fmt(r.predicted_ice_fraction),
            fmt(r.simulated_ice_fraction),
            fmt(r.predicted_u_omega),
            fmt(r.simulated_u_omega),
            fmt(r.predicted_p_gauge),
            fmt(r.simulated_p_gauge),
            r.reached_steady_state.to_string(),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
