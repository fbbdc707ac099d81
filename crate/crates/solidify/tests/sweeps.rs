use solidify::config::{parse_config, ScenarioConfig, SweepParameter, SweepSection};
use solidify::run_sweep;
use solidify_core::Regime;

fn base() -> ScenarioConfig {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/normalized_theta_sweep.toml");
    let mut cfg = parse_config(&std::fs::read_to_string(path).unwrap()).unwrap();
    // classification only needs a short run
    cfg.run.t_end = 0.05;
    cfg.run.steady_tol = None;
    cfg
}

#[test]
fn regimes_switch_at_the_thresholds() {
    let mut cfg = base();
    let values = vec![0.5, 0.6, 2.0 / 3.0, 0.67, 0.8, 0.99, 1.0, 1.1];
    cfg.sweep = Some(SweepSection {
        parameter: SweepParameter::ThetaGamma,
        values,
    });
    let rows = run_sweep(&cfg, 4).unwrap();
    let regimes: Vec<Regime> = rows.iter().map(|r| r.regime.unwrap()).collect();
    use Regime::*;
    assert_eq!(regimes, [Solid, Solid, Solid, Mushy, Mushy, Mushy, Liquid, Liquid]);
    for r in &rows {
        assert!((r.theta_solid - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.theta_liquid, 1.0);
        assert_eq!(r.status, "ok");
    }
}

#[test]
fn undercooling_grows_with_stiffness() {
    let mut cfg = base();
    cfg.sweep = Some(SweepSection {
        parameter: SweepParameter::KGamma,
        values: vec![0.0, 0.5, 1.0, 4.0, 16.0, 1e3, 1e6],
    });
    let rows = run_sweep(&cfg, 2).unwrap();
    let d: Vec<f64> = rows.iter().map(|r| r.d).collect();
    assert_eq!(d[0], 0.0);
    assert!(d.windows(2).all(|w| w[1] > w[0]), "{d:?}");
    // alpha² lambda / L = 1/2
    assert!(d[6] < 0.5 && 0.5 - d[6] < 1e-6);
}

#[test]
fn thread_count_does_not_change_results() {
    let mut cfg = base();
    cfg.sweep = Some(SweepSection {
        parameter: SweepParameter::ThetaGamma,
        values: vec![0.55, 0.75, 0.95, 1.05, 0.85],
    });
    let one = run_sweep(&cfg, 1).unwrap();
    let many = run_sweep(&cfg, 5).unwrap();
    for (a, b) in one.iter().zip(&many) {
        assert_eq!(a.value, b.value);
        assert_eq!(a.simulated_u_omega.to_bits(), b.simulated_u_omega.to_bits());
        assert_eq!(a.simulated_ice_fraction.to_bits(), b.simulated_ice_fraction.to_bits());
    }
}

#[test]
fn failed_rows_do_not_stop_the_sweep() {
    let mut cfg = base();
    cfg.solver.mode = solidify_core::Mode::Picard;
    cfg.solver.picard_max = 2;
    cfg.solver.picard_tol = 1e-15;
    cfg.sweep = Some(SweepSection {
        parameter: SweepParameter::ThetaGamma,
        values: vec![0.6, 0.9],
    });
    let rows = run_sweep(&cfg, 2).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.status.contains("picard"), "{}", r.status);
        assert!(r.regime.is_some());
    }
    cfg.sweep = None;
    assert!(run_sweep(&cfg, 1).is_err());
}

#[test]
fn bundled_scenarios_parse_and_round_trip() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = parse_config(&std::fs::read_to_string(&path).unwrap()).unwrap();
            let again = parse_config(&solidify::emit_config(&cfg)).unwrap();
            assert_eq!(cfg, again, "{}", path.display());
            count += 1;
        }
    }
    assert!(count >= 5);
}
