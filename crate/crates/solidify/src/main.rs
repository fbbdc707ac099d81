use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::Serialize;
use solidify::config::{parse_config, ScenarioConfig};
use solidify::scenario::{
    run_refinement, run_scenario, run_sweep, sweep_threads, write_outputs, write_refinement,
    write_sweep,
};
use solidify_core::equilibria::{classify, limit_behaviors, LimitReport};
use solidify_core::model::{clausius_clapeyron_slope, dimensionless_groups, presets};
use solidify_core::{DimensionlessGroups, EquilibriumReport, Mode};

#[derive(Parser)]
#[command(name = "solidify", version, about = "Freezing of a liquid in an elastic container")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its time series, snapshots and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also rerun with dt halved N times and write a refinement table.
        #[arg(long, value_name = "N")]
        dt_halve: Option<usize>,
        #[arg(long)]
        mode: Option<Mode>,
    },
    /// Run the scenario once per value of its [sweep] section.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        mode: Option<Mode>,
    },
    /// Print the predicted equilibrium and the dimensionless groups as JSON.
    Equilibria {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the built-in material presets.
    Presets,
}

fn load(path: &Path, mode: Option<Mode>) -> anyhow::Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(mode) = mode {
        cfg.solver.mode = mode;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct EquilibriaReport {
    volume: f64,
    groups: DimensionlessGroups,
    classification: Option<EquilibriumReport>,
    classification_error: Option<String>,
    limits: LimitReport,
    clausius_clapeyron_slope: f64,
}

fn equilibria(cfg: &ScenarioConfig) -> anyhow::Result<EquilibriaReport> {
    let m = cfg.material();
    let b = &cfg.boundary;
    let volume = cfg.grid()?.volume();
    let (classification, classification_error) = match classify(b.theta_gamma, &m, b, volume) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(EquilibriaReport {
        volume,
        groups: dimensionless_groups(&m, b, volume)?,
        classification,
        classification_error,
        limits: limit_behaviors(&m, b, volume)?,
        clausius_clapeyron_slope: clausius_clapeyron_slope(&m),
    })
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            dt_halve,
            mode,
        } => {
            let cfg = load(&config, mode)?;
            let ok = match dt_halve {
                Some(n) => {
                    let outs = run_refinement(&cfg, n)?;
                    write_refinement(&outs, &out)?;
                    outs.iter().all(|o| o.summary.ok())
                }
                None => {
                    let res = run_scenario(&cfg)?;
                    write_outputs(&res, &out)?;
                    if let Some(msg) = &res.summary.failure {
                        eprintln!("run failed: {msg}");
                    }
                    res.summary.ok()
                }
            };
            println!("wrote {}", out.display());
            Ok(ok)
        }
        Command::Sweep { config, out, mode } => {
            let cfg = load(&config, mode)?;
            let rows = run_sweep(&cfg, sweep_threads())?;
            fs::create_dir_all(&out)?;
            let parameter = cfg.sweep.as_ref().expect("checked by run_sweep").parameter;
            let path = out.join("sweep.csv");
            write_sweep(&rows, parameter, &path)?;
            println!("wrote {}", path.display());
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            if failed > 0 {
                eprintln!("{failed} of {} sweep rows failed", rows.len());
            }
            Ok(failed == 0)
        }
        Command::Equilibria { config } => {
            let cfg = load(&config, None)?;
            println!("{}", serde_json::to_string_pretty(&equilibria(&cfg)?)?);
            Ok(true)
        }
        Command::Presets => {
            for p in presets() {
                println!("# {}: {}", p.name, p.notes);
                println!("[material]\n{}", toml::to_string(&p.material)?);
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
