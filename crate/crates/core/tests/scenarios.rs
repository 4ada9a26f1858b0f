use fqe_core::export::{spectrum_table, sweep_table, trajectory_table, write_trajectory_csv};
use fqe_core::scenario::{
    diagonalize, filter_sweep, run_scenario_pite, BSweep, FieldSource, ScenarioConfig, PRESET_NAMES,
};
use serde_json::json;

fn small(preset: &str, extra: serde_json::Value) -> ScenarioConfig {
    let mut overlay =
        json!({ "grid": { "n_per_axis": 4 }, "eigen": { "count": 6 }, "pite": { "n_steps": 4 } });
    fqe_core::scenario::merge(&mut overlay, extra);
    ScenarioConfig::from_value(overlay, Some(preset)).unwrap()
}

#[test]
fn every_preset_runs_on_a_small_grid() {
    for name in PRESET_NAMES {
        let cfg = small(name, json!({}));
        let run = run_scenario_pite(&cfg, None).unwrap();
        assert_eq!(run.trajectory.rows.len(), 4, "{name}");
        let last = run.trajectory.rows.last().unwrap();
        assert!(last.p_cumulative > 0.0 && last.p_cumulative <= 1.0);
        assert!((run.trajectory.final_state.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(run.filtration.is_some(), name == "dw-px-filtered");
    }
}

#[test]
fn overlay_switches_tagged_variants() {
    let cfg = small(
        "harmonic-gaussian",
        json!({ "pite": { "schedule": { "kind": "constant", "dtau": 0.01 } } }),
    );
    let (h, rows) = trajectory_table(&run_scenario_pite(&cfg, None).unwrap().trajectory);
    let col = h.iter().position(|c| c == "dtau").unwrap();
    assert!(rows[1..].iter().all(|r| r[col] == "0.01"));
    assert!(ScenarioConfig::from_value(
        json!({ "pite": { "schedule": { "kind": "constant" } } }),
        Some("harmonic-gaussian")
    )
    .is_err());
}

#[test]
fn field_sweep_matches_single_runs() {
    let mut cfg = small("harmonic-gaussian", json!({ "eigen": { "count": 3 } }));
    cfg.eigen.b_sweep = Some(BSweep {
        start: 0.0,
        stop: 2.0,
        points: 3,
    });
    let spectra = diagonalize(&cfg).unwrap();
    assert_eq!(
        spectra.iter().map(|s| s.b_tesla).collect::<Vec<_>>(),
        vec![0.0, 1.0, 2.0]
    );
    let mut single = cfg.clone();
    single.eigen.b_sweep = None;
    single.hamiltonian.b_tesla = 1.0;
    let one = diagonalize(&single).unwrap();
    assert_eq!(one[0].eig.eigenvalues(), spectra[1].eig.eigenvalues());
    let (h, rows) = spectrum_table(&spectra);
    assert_eq!(h.len(), 6);
    assert_eq!(rows.len(), 9);
}

#[test]
fn sweep_zero_error_row_removes_targets() {
    let cfg = small("dw-px-filtered", json!({}));
    let eig =
        fqe_core::hamiltonian::lowest_eigenpairs(&cfg.spec().unwrap(), 6, &cfg.lanczos_options())
            .unwrap();
    let rows = filter_sweep(&cfg, &eig).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.delta_e).collect::<Vec<_>>(),
        vec![-0.2, 0.0, 0.2]
    );
    for o in &rows[1].orders {
        assert!(
            o.weights[0] < 1e-10 && o.weights[5] < 1e-10,
            "order {}: {:?}",
            o.order,
            o.weights
        );
    }
    // an error on φ5 leaves a residual, smaller for the second-order circuit
    let (r1, r2) = (&rows[2].orders[0], &rows[2].orders[1]);
    assert!(r1.weights[5] > 1e-8 && r2.weights[5] < r1.weights[5]);
    assert_eq!(sweep_table(&rows).1.len(), 3);
}

#[test]
fn eigenstate_source_parses() {
    let cfg = small(
        "harmonic-gaussian",
        json!({ "observables": { "source": { "kind": "eigenstate", "level": 1 } } }),
    );
    assert_eq!(cfg.observables.source, FieldSource::Eigenstate { level: 1 });
    let bad = json!({ "eigen": { "count": 2 }, "observables": { "source": { "kind": "eigenstate", "level": 5 } } });
    assert!(ScenarioConfig::from_value(bad, Some("harmonic-gaussian")).is_err());
}

#[test]
fn trajectory_csv_header_only_for_zero_steps() {
    let cfg = small("harmonic-gaussian", json!({ "pite": { "n_steps": 0 } }));
    let run = run_scenario_pite(&cfg, None).unwrap();
    let p = std::env::temp_dir().join(format!("fqe-scn-{}.csv", std::process::id()));
    write_trajectory_csv(&p, &cfg.metadata(), &run.trajectory, 0).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 1);
    assert!(data[0].starts_with("step,dtau,p_success"));
}
