//! Experiment runner: benchmark reproduction, order and data-fraction sweeps,
//! bound comparison against baselines, and validation of the guaranteed
//! bounds on held-out data. Everything is written as plain CSV plus one data
//! file per figure; identical config and seed produce byte-identical output.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;

use smpred::baselines::{
    iterated_predict, iterated_result, least_squares_result, BaselineKind, BaselineResult,
};
use smpred::bundle::ModelBundle;
use smpred::dataset::{build_regressors, split, SplitSpec};
use smpred::error::{Error, Result};
use smpred::lp::Polytope;
use smpred::lti::{make_benchmark_dataset, TimeSeriesDataset};
use smpred::par::par_map_range;
use smpred::smident::{estimate_lambda, identify_all, MultiStepModelSet};

/// One sweep cell: λ at abscissa `x` (a model order or a data fraction).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub p: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub p: usize,
    pub tau_multistep: f64,
    pub tau_ls: f64,
    pub tau_iterated: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationRow {
    pub kind: &'static str,
    pub p: usize,
    pub violations: usize,
    pub total: usize,
    pub max_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ViolationReport {
    pub rows: Vec<ViolationRow>,
}

impl ViolationReport {
    pub fn total_violations(&self, kind: &str) -> usize {
        self.rows
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.violations)
            .sum()
    }
}

/// Fig.-4 style tube trace at the largest step: prediction, truth and the
/// guaranteed band around the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub z: f64,
    pub z_hat: f64,
    pub upper: f64,
    pub lower: f64,
}

/// Bound comparison table plus validation statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub rows: Vec<BoundsRow>,
    pub violations: ViolationReport,
}

/// Everything a benchmark run produced, with the emitted file list for
/// reproducibility checks.
#[derive(Debug)]
pub struct BenchArtifacts {
    pub out_dir: PathBuf,
    pub models: MultiStepModelSet,
    pub least_squares: BaselineResult,
    pub iterated: BaselineResult,
    pub report: BoundsReport,
    pub order_sweep: Vec<SweepRow>,
    pub fraction_sweep: Vec<SweepRow>,
    pub files: Vec<PathBuf>,
}

/// Generate the identification dataset and identify all steps.
pub fn identify(cfg: &ExperimentConfig) -> Result<(TimeSeriesDataset, MultiStepModelSet)> {
    let ds = make_benchmark_dataset(&cfg.benchmark_config())?;
    let mut models = identify_all(&ds, &cfg.sm_config())?;
    models.provenance.seed = Some(cfg.seed);
    Ok((ds, models))
}

/// λ per (order, p) cell on the identification dataset (Fig. 1 data).
pub fn sweep_order(
    cfg: &ExperimentConfig,
    orders: &[usize],
    p_list: &[usize],
) -> Result<Vec<SweepRow>> {
    let ds = make_benchmark_dataset(&cfg.benchmark_config())?;
    let grid: Vec<(usize, usize)> = orders
        .iter()
        .flat_map(|&o| p_list.iter().map(move |&p| (o, p)))
        .collect();
    let cells = par_map_range(grid.len(), |i| {
        let (o, p) = grid[i];
        lambda_for(&ds, o, p, cfg)
    });
    let mut rows = Vec::with_capacity(grid.len());
    for ((o, p), cell) in grid.into_iter().zip(cells) {
        rows.push(SweepRow {
            x: o as f64,
            p,
            lambda: cell?,
        });
    }
    Ok(rows)
}

/// λ per (fraction, p) cell, fractions applied as contiguous prefixes of the
/// identification dataset (Fig. 2 data).
pub fn sweep_data_fraction(
    cfg: &ExperimentConfig,
    fractions: &[f64],
    p_list: &[usize],
) -> Result<Vec<SweepRow>> {
    let ds = make_benchmark_dataset(&cfg.benchmark_config())?;
    let grid: Vec<(f64, usize)> = fractions
        .iter()
        .flat_map(|&f| p_list.iter().map(move |&p| (f, p)))
        .collect();
    let cells = par_map_range(grid.len(), |i| {
        let (f, p) = grid[i];
        let (prefix, _) = split(&ds, &SplitSpec::contiguous(f))?;
        lambda_for(&prefix, cfg.order, p, cfg)
    });
    let mut rows = Vec::with_capacity(grid.len());
    for ((f, p), cell) in grid.into_iter().zip(cells) {
        rows.push(SweepRow {
            x: f,
            p,
            lambda: cell?,
        });
    }
    Ok(rows)
}

fn lambda_for(ds: &TimeSeriesDataset, o: usize, p: usize, cfg: &ExperimentConfig) -> Result<f64> {
    let batch = build_regressors(ds, o, p)?;
    let omega = Polytope::centered_box(batch.dim(), cfg.omega_box);
    estimate_lambda(&batch, cfg.d_bound, &omega)
}

/// Check every model's guaranteed bound on held-out data. Against the clean
/// output `z` the check is `|z - ẑ| ≤ τ̂`; when only the noisy output exists
/// the check degrades to `|y - ẑ| ≤ τ̂ + d̄`. Returns the per-kind,
/// per-step statistics and the Fig.-4 trace at `p = p̄`.
pub fn validate(
    models: &MultiStepModelSet,
    baselines: &[&BaselineResult],
    val: &TimeSeriesDataset,
) -> Result<(ViolationReport, Vec<TraceRow>)> {
    let o = models.config.o;
    let p_max = models.p_max();
    if val.len() < o + p_max {
        return Err(Error::SeriesTooShort {
            required: o + p_max,
            got: val.len(),
        });
    }

    let mut report = ViolationReport::default();
    let mut trace = Vec::new();

    for p in 1..=p_max {
        let batch = build_regressors(val, o, p)?;
        let step = models.step(p).expect("step within range");

        // Nominal multi-step model.
        let mut stats = KindStats::new("multistep", p);
        for (i, k) in anchor_range(val.len(), o, p).enumerate() {
            let phi = batch.row(i).transpose();
            let z_hat = step.theta_star.dot(&phi);
            stats.push(reference_error(val, k + p, z_hat), step.tau_hat_star, val);
            if p == p_max {
                let z_ref = val.z().map(|z| z[k + p]).unwrap_or_else(|| val.y()[k + p]);
                trace.push(TraceRow {
                    k: k + p,
                    z: z_ref,
                    z_hat,
                    upper: z_hat + step.tau_hat_star,
                    lower: z_hat - step.tau_hat_star,
                });
            }
        }
        report.rows.push(stats.finish());

        for baseline in baselines {
            let bstep = baseline.step(p).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "baseline {} lacks step p={p}",
                    baseline.kind.as_str()
                ))
            })?;
            let mut stats = KindStats::new(baseline.kind.as_str(), p);
            match baseline.kind {
                BaselineKind::LeastSquares => {
                    let theta = bstep
                        .theta
                        .as_ref()
                        .ok_or_else(|| Error::InvalidConfig("LS baseline lacks theta".into()))?;
                    for (i, k) in anchor_range(val.len(), o, p).enumerate() {
                        let phi = batch.row(i).transpose();
                        let z_hat = theta.dot(&phi);
                        stats.push(reference_error(val, k + p, z_hat), bstep.tau_hat, val);
                    }
                }
                BaselineKind::IteratedOneStep => {
                    let theta_1 = &models
                        .step(1)
                        .ok_or_else(|| Error::InvalidConfig("model set lacks p=1".into()))?
                        .theta_star;
                    for k in anchor_range(val.len(), o, p) {
                        let z_hat = iterated_predict(theta_1, o, val.y(), val.u(), k, p)?;
                        stats.push(reference_error(val, k + p, z_hat), bstep.tau_hat, val);
                    }
                }
            }
            report.rows.push(stats.finish());
        }
    }
    Ok((report, trace))
}

fn anchor_range(len: usize, o: usize, p: usize) -> impl Iterator<Item = usize> {
    (o - 1)..=(len - p - 1)
}

/// Error against the clean output when available, else against the noisy one
/// (flagged so the noise slack is added to the bound).
fn reference_error(val: &TimeSeriesDataset, idx: usize, z_hat: f64) -> f64 {
    match val.z() {
        Some(z) => (z[idx] - z_hat).abs(),
        None => (val.y()[idx] - z_hat).abs(),
    }
}

struct KindStats {
    kind: &'static str,
    p: usize,
    violations: usize,
    total: usize,
    max_normalized: f64,
}

impl KindStats {
    fn new(kind: &'static str, p: usize) -> Self {
        Self {
            kind,
            p,
            violations: 0,
            total: 0,
            max_normalized: 0.0,
        }
    }

    fn push(&mut self, err: f64, tau_hat: f64, val: &TimeSeriesDataset) {
        let allowance = if val.z().is_some() {
            tau_hat
        } else {
            tau_hat + val.d_bound()
        };
        self.total += 1;
        // A violation must exceed the bound by more than round-off: noiseless
        // runs push tau_hat to the 1e-13 floor where strict comparison would
        // count floating-point noise.
        if err > allowance + 1e-9 {
            self.violations += 1;
        }
        let normalized = if tau_hat > 0.0 {
            err / tau_hat
        } else if err == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        self.max_normalized = self.max_normalized.max(normalized);
    }

    fn finish(self) -> ViolationRow {
        ViolationRow {
            kind: self.kind,
            p: self.p,
            violations: self.violations,
            total: self.total,
            max_normalized: self.max_normalized,
        }
    }
}

/// Full benchmark run: identification, baselines, both sweeps, validation,
/// and every output file.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchArtifacts> {
    cfg.validate()?;
    let (ds, models) = identify(cfg)?;
    let least_squares = least_squares_result(&ds, &models)?;
    let iterated = iterated_result(&models)?;

    let val = make_benchmark_dataset(&cfg.validation_config())?;
    let (violations, trace) = validate(&models, &[&least_squares, &iterated], &val)?;

    let bounds: Vec<BoundsRow> = models
        .steps
        .iter()
        .map(|s| BoundsRow {
            p: s.p,
            tau_multistep: s.tau_hat_star,
            tau_ls: least_squares.steps[s.p - 1].tau_hat,
            tau_iterated: iterated.steps[s.p - 1].tau_hat,
        })
        .collect();

    let order_sweep = sweep_order(cfg, &cfg.sweep_orders, &cfg.sweep_p)?;
    let fraction_sweep = sweep_data_fraction(cfg, &cfg.sweep_fractions, &cfg.sweep_p)?;

    let out = &cfg.out_dir;
    std::fs::create_dir_all(out)?;
    let mut files = Vec::new();

    let dataset_csv = out.join("dataset.csv");
    ds.write_csv(&dataset_csv)?;
    files.push(dataset_csv);
    let validation_csv = out.join("validation.csv");
    val.write_csv(&validation_csv)?;
    files.push(validation_csv);

    files.extend(write_bundle(
        &ModelBundle::from_model_set(&models),
        &out.join("model"),
    )?);
    files.extend(write_bundle(
        &ModelBundle::from_baseline(&least_squares, &models),
        &out.join("baseline_least_squares"),
    )?);
    files.extend(write_bundle(
        &ModelBundle::from_baseline(&iterated, &models),
        &out.join("baseline_iterated_one_step"),
    )?);

    let bounds_text = bounds_csv(&bounds);
    files.push(write_text(out.join("bounds.csv"), &bounds_text)?);
    files.push(write_text(out.join("fig3_bounds.csv"), &bounds_text)?);
    files.push(write_text(
        out.join("violations.csv"),
        &violations_csv(&violations),
    )?);
    files.push(write_text(
        out.join("fig1_lambda_vs_order.csv"),
        &sweep_csv("order", &order_sweep),
    )?);
    files.push(write_text(
        out.join("fig2_lambda_vs_fraction.csv"),
        &sweep_csv("fraction", &fraction_sweep),
    )?);
    files.push(write_text(
        out.join("fig4_validation_trace.csv"),
        &trace_csv(&trace),
    )?);

    Ok(BenchArtifacts {
        out_dir: out.clone(),
        models,
        least_squares,
        iterated,
        report: BoundsReport {
            rows: bounds,
            violations,
        },
        order_sweep,
        fraction_sweep,
        files,
    })
}

/// Standalone order sweep (`sweep-order` subcommand): Fig. 1 data only.
pub fn run_sweep_order(cfg: &ExperimentConfig) -> Result<(Vec<SweepRow>, PathBuf)> {
    cfg.validate()?;
    let rows = sweep_order(cfg, &cfg.sweep_orders, &cfg.sweep_p)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = write_text(
        cfg.out_dir.join("fig1_lambda_vs_order.csv"),
        &sweep_csv("order", &rows),
    )?;
    Ok((rows, path))
}

/// Standalone data-fraction sweep (`sweep-data` subcommand): Fig. 2 data only.
pub fn run_sweep_data(cfg: &ExperimentConfig) -> Result<(Vec<SweepRow>, PathBuf)> {
    cfg.validate()?;
    let rows = sweep_data_fraction(cfg, &cfg.sweep_fractions, &cfg.sweep_p)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = write_text(
        cfg.out_dir.join("fig2_lambda_vs_fraction.csv"),
        &sweep_csv("fraction", &rows),
    )?;
    Ok((rows, path))
}

/// Standalone validation (`validate` subcommand): identify, then check the
/// guaranteed bounds on fresh data; writes the violation table and Fig. 4.
pub fn run_validate(cfg: &ExperimentConfig) -> Result<(ViolationReport, Vec<PathBuf>)> {
    cfg.validate()?;
    let (ds, models) = identify(cfg)?;
    let least_squares = least_squares_result(&ds, &models)?;
    let iterated = iterated_result(&models)?;
    let val = make_benchmark_dataset(&cfg.validation_config())?;
    let (report, trace) = validate(&models, &[&least_squares, &iterated], &val)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let files = vec![
        write_text(cfg.out_dir.join("violations.csv"), &violations_csv(&report))?,
        write_text(
            cfg.out_dir.join("fig4_validation_trace.csv"),
            &trace_csv(&trace),
        )?,
    ];
    Ok((report, files))
}

fn write_bundle(bundle: &ModelBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    bundle.write(dir)?;
    let mut files = vec![dir.join("manifest.txt"), dir.join("summary.csv")];
    for (i, theta) in bundle.thetas.iter().enumerate() {
        if theta.is_some() {
            files.push(dir.join(format!("theta_p{:02}.csv", i + 1)));
        }
    }
    Ok(files)
}

fn write_text(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text)?;
    Ok(path)
}

fn bounds_csv(rows: &[BoundsRow]) -> String {
    let mut out = String::from("p,tau_multistep,tau_ls,tau_iterated\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.p, r.tau_multistep, r.tau_ls, r.tau_iterated
        )
        .expect("string write");
    }
    out
}

fn violations_csv(report: &ViolationReport) -> String {
    let mut out = String::from("kind,p,violations,total,max_normalized_error\n");
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.kind, r.p, r.violations, r.total, r.max_normalized
        )
        .expect("string write");
    }
    out
}

fn sweep_csv(x_name: &str, rows: &[SweepRow]) -> String {
    let mut out = format!("{x_name},p,lambda\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.x, r.p, r.lambda).expect("string write");
    }
    out
}

fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("k,z,z_hat,upper,lower\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.k, r.z, r.z_hat, r.upper, r.lower).expect("string write");
    }
    out
}

/// Process exit code for an error, per the CLI contract: 2 for configuration
/// problems, 3 for uninformative data (unbounded FPS), 4 for internal
/// numerical or I/O failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::Parse(_)
        | Error::SeriesTooShort { .. }
        | Error::InvalidSystem(_) => 2,
        Error::UnboundedFps { .. } => 3,
        Error::DimensionMismatch { .. }
        | Error::EmptyPolytope
        | Error::Numerical(_)
        | Error::Io(_) => 4,
    }
}
