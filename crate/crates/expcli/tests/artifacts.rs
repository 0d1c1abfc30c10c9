//! Contract checks on the benchmark artifacts: table shapes, tube geometry,
//! cross-file consistency and re-import fidelity.

use expcli::{run_benchmark, validate, ExperimentConfig};
use smpred::baselines::{iterated_result, least_squares_result};
use smpred::bundle::ModelBundle;
use smpred::lti::{make_benchmark_dataset, TimeSeriesDataset};

fn small_cfg(out: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        samples: 150,
        val_samples: 100,
        p_max: 4,
        sweep_orders: vec![1, 2, 3],
        sweep_p: vec![1, 2, 3],
        sweep_fractions: vec![0.5, 0.8, 1.0],
        out_dir: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn sweep_tables_have_one_cell_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(dir.path());
    let artifacts = run_benchmark(&cfg).unwrap();
    assert_eq!(
        artifacts.order_sweep.len(),
        cfg.sweep_orders.len() * cfg.sweep_p.len()
    );
    assert_eq!(
        artifacts.fraction_sweep.len(),
        cfg.sweep_fractions.len() * cfg.sweep_p.len()
    );
}

#[test]
fn full_fraction_sweep_matches_the_identification_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_cfg(dir.path());
    cfg.sweep_p = vec![1, 2, 3, 4];
    let artifacts = run_benchmark(&cfg).unwrap();
    for step in &artifacts.models.steps {
        let cell = artifacts
            .fraction_sweep
            .iter()
            .find(|r| r.x == 1.0 && r.p == step.p)
            .expect("full-fraction cell");
        // Same data, same LP: bitwise-equal lambda.
        assert_eq!(cell.lambda, step.lambda_under, "p = {}", step.p);
    }
}

#[test]
fn validation_trace_tube_width_is_twice_tau_hat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(dir.path());
    let artifacts = run_benchmark(&cfg).unwrap();
    let tau = artifacts.models.step(cfg.p_max).unwrap().tau_hat_star;
    let text = std::fs::read_to_string(dir.path().join("fig4_validation_trace.csv")).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (z_hat, upper, lower) = (f[2], f[3], f[4]);
        assert!((upper - lower - 2.0 * tau).abs() < 1e-12);
        assert!((upper - z_hat - tau).abs() < 1e-12);
        rows += 1;
    }
    assert_eq!(rows, cfg.val_samples - cfg.order - cfg.p_max + 1);
}

#[test]
fn violation_counts_never_exceed_totals() {
    let dir = tempfile::tempdir().unwrap();
    let artifacts = run_benchmark(&small_cfg(dir.path())).unwrap();
    let report = &artifacts.report.violations;
    // One row per kind per step.
    assert_eq!(report.rows.len(), 3 * 4);
    for row in &report.rows {
        assert!(row.violations <= row.total);
        assert!(row.total > 0);
    }
}

#[test]
fn emitted_dataset_csvs_reimport_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(dir.path());
    let artifacts = run_benchmark(&cfg).unwrap();
    let ds = make_benchmark_dataset(&cfg.benchmark_config()).unwrap();
    let back = TimeSeriesDataset::read_csv(&dir.path().join("dataset.csv"), ds.d_bound(), ds.ts())
        .unwrap();
    assert_eq!(ds, back);

    let bundle = ModelBundle::read(&dir.path().join("model")).unwrap();
    assert_eq!(bundle.kind, "multistep");
    assert_eq!(bundle.p_max, cfg.p_max);
    for (i, step) in artifacts.models.steps.iter().enumerate() {
        assert_eq!(bundle.summary[i].lambda, step.lambda_under);
        assert_eq!(bundle.summary[i].tau_hat, step.tau_hat_star);
        assert_eq!(bundle.thetas[i].as_ref().unwrap(), &step.theta_star);
    }
}

#[test]
fn noiseless_config_collapses_bounds_and_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        d_bound: 0.0,
        ..small_cfg(dir.path())
    };
    let artifacts = run_benchmark(&cfg).unwrap();
    for row in &artifacts.report.rows {
        assert!(
            row.tau_multistep <= 1e-6,
            "p={}: noiseless bound {} did not collapse",
            row.p,
            row.tau_multistep
        );
    }
    for row in &artifacts.report.violations.rows {
        assert_eq!(row.violations, 0, "{} at p={}", row.kind, row.p);
    }
}

#[test]
fn validation_without_clean_output_uses_noise_slack() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(dir.path());
    let (ds, models) = expcli::identify(&cfg).unwrap();
    let ls = least_squares_result(&ds, &models).unwrap();
    let it = iterated_result(&models).unwrap();
    let val = make_benchmark_dataset(&cfg.validation_config()).unwrap();
    // Strip the clean output: the check degrades to |y - ẑ| ≤ τ̂ + d̄.
    let noisy_only = TimeSeriesDataset::new(
        val.u().to_vec(),
        val.y().to_vec(),
        None,
        val.d_bound(),
        val.ts(),
    )
    .unwrap();
    let (strict, _) = validate(&models, &[&ls, &it], &val).unwrap();
    let (slacked, _) = validate(&models, &[&ls, &it], &noisy_only).unwrap();
    // |y - ẑ| ≤ |z - ẑ| + d̄, so a sample that fails the slacked check must
    // also fail the strict one: the y-only mode can never report more.
    for (a, b) in strict.rows.iter().zip(&slacked.rows) {
        assert_eq!(a.kind, b.kind);
        assert_eq!(a.p, b.p);
        assert_eq!(a.total, b.total);
        assert!(
            b.violations <= a.violations,
            "{} p={}: y-only check found {} violations, strict found {}",
            a.kind,
            a.p,
            b.violations,
            a.violations
        );
    }
}
