//! Regressor assembly and train/validation splits.
//!
//! A `p`-step regressor at anchor `k` stacks, in this exact order, the last
//! `o` outputs `y(k)..y(k-o+1)`, the last `o-1` inputs `u(k-1)..u(k-o+1)` and
//! the `p` planned inputs `u(k)..u(k+p-1)`; the target is `y(k+p)`. Rows are
//! emitted only where both the full past and the full future window exist —
//! no zero padding, which would inject fictitious data into a worst-case
//! framework.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::lti::TimeSeriesDataset;

/// The regressor matrix and targets for one (order, horizon) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorBatch {
    p: usize,
    o: usize,
    phi: DMatrix<f64>,
    targets: DVector<f64>,
    d_bound: f64,
}

impl RegressorBatch {
    pub fn from_parts(
        o: usize,
        p: usize,
        phi: DMatrix<f64>,
        targets: DVector<f64>,
        d_bound: f64,
    ) -> Result<Self> {
        if o == 0 || p == 0 {
            return Err(Error::InvalidConfig(
                "order and horizon must be at least 1".into(),
            ));
        }
        if phi.ncols() != regressor_dim(o, p) {
            return Err(Error::DimensionMismatch {
                what: "regressor columns",
                expected: regressor_dim(o, p),
                got: phi.ncols(),
            });
        }
        if phi.nrows() != targets.len() || phi.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                what: "regressor rows",
                expected: phi.nrows(),
                got: targets.len(),
            });
        }
        Ok(Self {
            p,
            o,
            phi,
            targets,
            d_bound,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn order(&self) -> usize {
        self.o
    }

    /// Regressor dimension `2o - 1 + p`.
    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    /// Number of data rows `N_p`.
    pub fn len(&self) -> usize {
        self.phi.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.nrows() == 0
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn row(&self, i: usize) -> RowDVector<f64> {
        self.phi.row(i).clone_owned()
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn d_bound(&self) -> f64 {
        self.d_bound
    }

    /// Keep only the given rows (test and subset-property use).
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidConfig("row subset is empty".into()));
        }
        let mut phi = DMatrix::zeros(rows.len(), self.dim());
        let mut targets = DVector::zeros(rows.len());
        for (i, &r) in rows.iter().enumerate() {
            phi.set_row(i, &self.phi.row(r));
            targets[i] = self.targets[r];
        }
        Self::from_parts(self.o, self.p, phi, targets, self.d_bound)
    }

    /// Export with one named column per regressor entry plus `target`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&column_names(self.o, self.p).join(","));
        out.push_str(",target\n");
        for i in 0..self.len() {
            for j in 0..self.dim() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{}", self.phi[(i, j)]).expect("string write");
            }
            writeln!(out, ",{}", self.targets[i]).expect("string write");
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn read_csv(path: &Path, o: usize, p: usize, d_bound: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty regressor CSV".into()))?;
        let mut expected = column_names(o, p).join(",");
        expected.push_str(",target");
        if header != expected {
            return Err(Error::Parse(format!(
                "unexpected regressor header `{header}`"
            )));
        }
        let dim = regressor_dim(o, p);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut targets = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(Error::Parse(format!(
                    "regressor line {}: expected {} fields, got {}",
                    lineno + 2,
                    dim + 1,
                    fields.len()
                )));
            }
            let mut row = Vec::with_capacity(dim);
            for f in &fields[..dim] {
                row.push(f.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {}: `{f}` is not a number", lineno + 2))
                })?);
            }
            targets.push(fields[dim].parse::<f64>().map_err(|_| {
                Error::Parse(format!(
                    "line {}: `{}` is not a number",
                    lineno + 2,
                    fields[dim]
                ))
            })?);
            rows.push(row);
        }
        let phi = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        Self::from_parts(o, p, phi, DVector::from_vec(targets), d_bound)
    }
}

pub fn regressor_dim(o: usize, p: usize) -> usize {
    2 * o - 1 + p
}

/// Column names in regressor order: `y_lag0..`, `u_lag1..`, `u_fut0..`.
pub fn column_names(o: usize, p: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(regressor_dim(o, p));
    for j in 0..o {
        names.push(format!("y_lag{j}"));
    }
    for j in 1..o {
        names.push(format!("u_lag{j}"));
    }
    for j in 0..p {
        names.push(format!("u_fut{j}"));
    }
    names
}

/// Build the `p`-step regressor batch of order `o` from a time series.
pub fn build_regressors(ds: &TimeSeriesDataset, o: usize, p: usize) -> Result<RegressorBatch> {
    if o == 0 || p == 0 {
        return Err(Error::InvalidConfig(
            "order and horizon must be at least 1".into(),
        ));
    }
    let n = ds.len();
    if n < o + p {
        return Err(Error::SeriesTooShort {
            required: o + p,
            got: n,
        });
    }
    let rows = n - o - p + 1;
    let dim = regressor_dim(o, p);
    let u = ds.u();
    let y = ds.y();
    let mut phi = DMatrix::zeros(rows, dim);
    let mut targets = DVector::zeros(rows);
    for (i, k) in ((o - 1)..=(n - p - 1)).enumerate() {
        let mut col = 0;
        for j in 0..o {
            phi[(i, col)] = y[k - j];
            col += 1;
        }
        for j in 1..o {
            phi[(i, col)] = u[k - j];
            col += 1;
        }
        for j in 0..p {
            phi[(i, col)] = u[k + j];
            col += 1;
        }
        targets[i] = y[k + p];
    }
    RegressorBatch::from_parts(o, p, phi, targets, ds.d_bound())
}

/// How to partition a time series into train and validation parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    /// Fraction of samples assigned to the training part, in (0, 1].
    pub train_fraction: f64,
    /// Contiguous prefix/suffix split (the default). The non-contiguous
    /// variant spreads the training samples evenly over the record and is
    /// only meant for subsampling; regressor construction needs contiguity.
    pub contiguous: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 1.0,
            contiguous: true,
        }
    }
}

impl SplitSpec {
    pub fn contiguous(train_fraction: f64) -> Self {
        Self {
            train_fraction,
            contiguous: true,
        }
    }
}

/// Split a dataset into disjoint, exhaustive train and validation parts.
pub fn split(
    ds: &TimeSeriesDataset,
    spec: &SplitSpec,
) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must lie in (0, 1], got {f}"
        )));
    }
    let n = ds.len();
    let n_train = ((f * n as f64).round() as usize).min(n);

    let mut in_train = vec![false; n];
    if spec.contiguous {
        for flag in in_train.iter_mut().take(n_train) {
            *flag = true;
        }
    } else {
        // Bresenham-style even spread of exactly n_train samples.
        let mut acc = 0usize;
        for (k, flag) in in_train.iter_mut().enumerate() {
            let next = (k + 1) * n_train / n;
            if next > acc {
                *flag = true;
                acc = next;
            }
        }
    }

    let take = |train: bool| -> Result<TimeSeriesDataset> {
        let idx: Vec<usize> = (0..n).filter(|&k| in_train[k] == train).collect();
        let u: Vec<f64> = idx.iter().map(|&k| ds.u()[k]).collect();
        let y: Vec<f64> = idx.iter().map(|&k| ds.y()[k]).collect();
        let z = ds
            .z()
            .map(|z| idx.iter().map(|&k| z[k]).collect::<Vec<f64>>());
        TimeSeriesDataset::new(u, y, z, ds.d_bound(), ds.ts())
    };
    Ok((take(true)?, take(false)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{make_benchmark_dataset, BenchmarkConfig};
    use approx::assert_abs_diff_eq;

    fn toy_dataset(n: usize) -> TimeSeriesDataset {
        // Samples encode their own indices: u(k) = 1000 + k, y(k) = k.
        let u: Vec<f64> = (0..n).map(|k| 1000.0 + k as f64).collect();
        let y: Vec<f64> = (0..n).map(|k| k as f64).collect();
        TimeSeriesDataset::new(u, y, None, 0.0, 1.0).unwrap()
    }

    #[test]
    fn dimension_formula() {
        let ds = toy_dataset(30);
        let batch = build_regressors(&ds, 3, 1).unwrap();
        assert_eq!(batch.dim(), 6);
        assert_eq!(batch.len(), 30 - 3 - 1 + 1);
    }

    #[test]
    fn smallest_case_o1_p1() {
        let ds =
            TimeSeriesDataset::new(vec![10.0, 11.0], vec![20.0, 21.0], None, 0.0, 1.0).unwrap();
        let batch = build_regressors(&ds, 1, 1).unwrap();
        assert_eq!(batch.len(), 1);
        assert_eq!(batch.dim(), 2);
        // U_o is empty for o = 1: row is [y(0), u(0)], target y(1).
        assert_eq!(batch.phi()[(0, 0)], 20.0);
        assert_eq!(batch.phi()[(0, 1)], 10.0);
        assert_eq!(batch.targets()[0], 21.0);
    }

    #[test]
    fn benchmark_row_count() {
        let ds = make_benchmark_dataset(&BenchmarkConfig::default()).unwrap();
        let batch = build_regressors(&ds, 3, 10).unwrap();
        // Count by explicit enumeration of valid anchors.
        let anchors = (2..=(500 - 10 - 1)).count();
        assert_eq!(batch.len(), anchors);
        assert_eq!(batch.len(), 488);
    }

    #[test]
    fn every_entry_traceable_to_its_index() {
        let ds = toy_dataset(25);
        let (o, p) = (3, 4);
        let batch = build_regressors(&ds, o, p).unwrap();
        for (i, k) in ((o - 1)..=(25 - p - 1)).enumerate() {
            let row = batch.row(i);
            let mut col = 0;
            for j in 0..o {
                assert_eq!(row[col], (k - j) as f64, "y_lag{j}");
                col += 1;
            }
            for j in 1..o {
                assert_eq!(row[col], 1000.0 + (k - j) as f64, "u_lag{j}");
                col += 1;
            }
            for j in 0..p {
                assert_eq!(row[col], 1000.0 + (k + j) as f64, "u_fut{j}");
                col += 1;
            }
            assert_eq!(batch.targets()[i], (k + p) as f64);
        }
    }

    #[test]
    fn too_short_series_is_rejected_with_minimum() {
        let ds = toy_dataset(5);
        match build_regressors(&ds, 3, 4) {
            Err(Error::SeriesTooShort { required, got }) => {
                assert_eq!(required, 7);
                assert_eq!(got, 5);
            }
            other => panic!("expected SeriesTooShort, got {other:?}"),
        }
    }

    #[test]
    fn noiseless_arx_round_trip() {
        // y(k+1) = a y(k) + b u(k) exactly; regressors must reproduce it.
        let (a, b) = (0.7, 0.3);
        let n = 60;
        let u: Vec<f64> = (0..n).map(|k| ((k * 17 + 3) % 7) as f64 - 3.0).collect();
        let mut y = vec![0.0; n];
        for k in 0..n - 1 {
            y[k + 1] = a * y[k] + b * u[k];
        }
        let ds = TimeSeriesDataset::new(u.clone(), y.clone(), None, 0.0, 1.0).unwrap();

        let batch = build_regressors(&ds, 1, 1).unwrap();
        let theta = DVector::from_vec(vec![a, b]);
        let residual = batch.phi() * &theta - batch.targets();
        assert!(residual.amax() < 1e-10);

        // Two-step composition: y(k+2) = a^2 y(k) + ab u(k) + b u(k+1).
        let batch2 = build_regressors(&ds, 1, 2).unwrap();
        let theta2 = DVector::from_vec(vec![a * a, a * b, b]);
        let residual2 = batch2.phi() * &theta2 - batch2.targets();
        assert!(residual2.amax() < 1e-10);
    }

    #[test]
    fn split_full_fraction_keeps_everything() {
        let ds = toy_dataset(20);
        let (train, val) = split(&ds, &SplitSpec::contiguous(1.0)).unwrap();
        assert_eq!(train.len(), 20);
        assert_eq!(val.len(), 0);
    }

    #[test]
    fn split_half_on_500() {
        let ds = toy_dataset(500);
        let (train, val) = split(&ds, &SplitSpec::contiguous(0.5)).unwrap();
        assert_eq!(train.len(), 250);
        assert_eq!(val.len(), 250);
        // Temporal order preserved: train is the prefix, validation the suffix.
        assert_eq!(train.y()[249], 249.0);
        assert_eq!(val.y()[0], 250.0);
        for w in train.y().windows(2).chain(val.y().windows(2)) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = toy_dataset(10);
        assert!(split(&ds, &SplitSpec::contiguous(0.0)).is_err());
        assert!(split(&ds, &SplitSpec::contiguous(1.5)).is_err());
    }

    #[test]
    fn noncontiguous_split_is_disjoint_and_exhaustive() {
        let ds = toy_dataset(10);
        let spec = SplitSpec {
            train_fraction: 0.7,
            contiguous: false,
        };
        let (train, val) = split(&ds, &spec).unwrap();
        assert_eq!(train.len() + val.len(), 10);
        assert_eq!(train.len(), 7);
        let mut seen: Vec<f64> = train.y().iter().chain(val.y()).copied().collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(seen, (0..10).map(|k| k as f64).collect::<Vec<_>>());
    }

    #[test]
    fn batch_csv_round_trip() {
        let dir = std::env::temp_dir().join("smpred_dataset_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("batch.csv");
        let ds = make_benchmark_dataset(&BenchmarkConfig {
            samples: 30,
            ..BenchmarkConfig::default()
        })
        .unwrap();
        let batch = build_regressors(&ds, 2, 3).unwrap();
        batch.write_csv(&path).unwrap();
        let back = RegressorBatch::read_csv(&path, 2, 3, batch.d_bound()).unwrap();
        assert_eq!(batch, back);
    }

    #[test]
    fn column_names_match_layout() {
        assert_eq!(
            column_names(2, 2),
            vec!["y_lag0", "y_lag1", "u_lag1", "u_fut0", "u_fut1"]
        );
        assert_eq!(column_names(1, 1), vec!["y_lag0", "u_fut0"]);
    }

    #[test]
    fn regressor_reproduces_true_multistep_map() {
        use crate::lti::{discretize_zoh, simulate, TransferFunctionC};
        let ss = discretize_zoh(&TransferFunctionC::benchmark_plant(), 0.2).unwrap();
        let cfg = BenchmarkConfig {
            noise_bound: 0.0,
            samples: 150,
            ..BenchmarkConfig::default()
        };
        let ds = make_benchmark_dataset(&cfg).unwrap();
        // Sanity: this dataset is the plant's own trajectory.
        let z = simulate(&ss, ds.u(), &nalgebra::DVector::zeros(3)).unwrap();
        assert_eq!(ds.z().unwrap(), z.as_slice());

        for p in [1, 5, 10] {
            let batch = build_regressors(&ds, 3, p).unwrap();
            let theta = ss.multistep_theta(3, p).unwrap();
            let residual = batch.phi() * &theta - batch.targets();
            assert_abs_diff_eq!(residual.amax(), 0.0, epsilon = 1e-9);
        }
    }
}
