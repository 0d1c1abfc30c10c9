//! Benchmark data generation: continuous-time transfer functions, zero-order
//! hold discretization, state-space simulation, and the seeded excitation and
//! bounded colored-noise generators. Everything here is a pure function of
//! its inputs and seed.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Strictly proper continuous-time SISO transfer function, coefficients in
/// descending powers of `s`. Construction enforces open-loop stability.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunctionC {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TransferFunctionC {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if den.is_empty() || den[0] == 0.0 {
            return Err(Error::InvalidSystem(
                "denominator must have a nonzero leading coefficient".into(),
            ));
        }
        if den.len() < 2 {
            return Err(Error::InvalidSystem(
                "denominator must have degree at least 1".into(),
            ));
        }
        let num_trimmed: Vec<f64> = {
            let first = num.iter().position(|&v| v != 0.0).unwrap_or(num.len());
            num[first..].to_vec()
        };
        if num_trimmed.len() >= den.len() {
            return Err(Error::InvalidSystem(format!(
                "transfer function must be strictly proper: numerator degree {} >= denominator degree {}",
                num_trimmed.len() - 1,
                den.len() - 1
            )));
        }
        let tf = Self {
            num: num_trimmed,
            den,
        };
        let worst = tf
            .poles()
            .into_iter()
            .map(|p| p.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if worst >= 0.0 {
            return Err(Error::InvalidSystem(format!(
                "unstable transfer function: pole with real part {worst:.6}"
            )));
        }
        Ok(tf)
    }

    /// The third-order benchmark plant used throughout the experiments:
    /// gain 2, one slow pole at -1 and a fast complex pair,
    /// `458 / (s^3 + 31 s^2 + 259 s + 229)`.
    pub fn benchmark_plant() -> Self {
        Self::new(vec![458.0], vec![1.0, 31.0, 259.0, 229.0])
            .expect("benchmark plant is stable and strictly proper")
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn dc_gain(&self) -> f64 {
        let num0 = self.num.last().copied().unwrap_or(0.0);
        num0 / self.den.last().copied().expect("denominator nonempty")
    }

    /// Roots of the denominator, via companion-matrix eigenvalues.
    pub fn poles(&self) -> Vec<Complex<f64>> {
        let n = self.order();
        let monic: Vec<f64> = self.den[1..].iter().map(|&v| v / self.den[0]).collect();
        let mut comp = DMatrix::zeros(n, n);
        for j in 0..n {
            comp[(0, j)] = -monic[j];
        }
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        comp.complex_eigenvalues().iter().copied().collect()
    }
}

/// Discrete-time strictly proper state-space model
/// `x(k+1) = A x(k) + B u(k)`, `z(k) = C x(k)` at sample time `ts`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceD {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    ts: f64,
}

impl StateSpaceD {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, ts: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "state matrix",
                expected: n,
                got: a.ncols(),
            });
        }
        if b.len() != n || c.len() != n {
            return Err(Error::DimensionMismatch {
                what: "state-space vectors",
                expected: n,
                got: b.len().max(c.len()),
            });
        }
        if ts <= 0.0 {
            return Err(Error::InvalidConfig("sample time must be positive".into()));
        }
        let ss = Self { a, b, c, ts };
        let rho = ss.spectral_radius();
        if rho >= 1.0 {
            return Err(Error::InvalidSystem(format!(
                "discrete system is not asymptotically stable: spectral radius {rho:.6}"
            )));
        }
        Ok(ss)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn spectral_radius(&self) -> f64 {
        self.a
            .complex_eigenvalues()
            .iter()
            .map(|e| e.norm())
            .fold(0.0, f64::max)
    }

    /// Steady-state gain `C (I - A)^{-1} B`.
    pub fn dc_gain(&self) -> f64 {
        let n = self.order();
        let m = DMatrix::identity(n, n) - &self.a;
        let x = m
            .lu()
            .solve(&self.b)
            .expect("I - A invertible for a stable system");
        self.c.dot(&x)
    }

    /// Markov parameter `C A^t B` (the impulse response at lag `t + 1`).
    pub fn markov(&self, t: usize) -> f64 {
        let mut v = self.b.clone();
        for _ in 0..t {
            v = &self.a * v;
        }
        self.c.dot(&v)
    }

    /// Exact coefficients of the `p`-step-ahead predictor of order `o ≥ n`:
    /// the linear map from `[y(k)..y(k-o+1), u(k-1)..u(k-o+1), u(k)..u(k+p-1)]`
    /// to `z(k+p)`, valid on noise-free data of this system.
    pub fn multistep_theta(&self, o: usize, p: usize) -> Result<DVector<f64>> {
        let n = self.order();
        if o < n {
            return Err(Error::InvalidConfig(format!(
                "multi-step coefficients need model order >= state dimension ({o} < {n})"
            )));
        }
        if o == 0 || p == 0 {
            return Err(Error::InvalidConfig(
                "order and horizon must be at least 1".into(),
            ));
        }

        // Observability map: row j of `obs` is C A^j.
        let mut obs = DMatrix::zeros(o, n);
        let mut row = self.c.transpose();
        for j in 0..o {
            obs.set_row(j, &row);
            row = &row * &self.a;
        }
        let obs_pinv = obs
            .svd(true, true)
            .pseudo_inverse(1e-10)
            .map_err(|e| Error::Numerical(format!("observability pseudo-inverse: {e}")))?;

        // Forced response inside the window: z(s+j) collects markov(j-1-i) u(s+i).
        let mut toeplitz = DMatrix::zeros(o, o.saturating_sub(1));
        for j in 1..o {
            for i in 0..j {
                toeplitz[(j, i)] = self.markov(j - 1 - i);
            }
        }
        // State advance over the window: x(k) = A^{o-1} x(s) + reach * u_window.
        let mut reach = DMatrix::zeros(n, o.saturating_sub(1));
        for i in 0..o.saturating_sub(1) {
            let mut col = self.b.clone();
            for _ in 0..(o - 2 - i) {
                col = &self.a * col;
            }
            reach.set_column(i, &col);
        }

        let a_pow_o1 = self.a.pow((o - 1) as u32);
        let c_a_p = {
            let mut row = self.c.transpose();
            for _ in 0..p {
                row = &row * &self.a;
            }
            row
        };
        // Ascending-time weights on z(s..k) and u(s..k-1).
        let w_z = &c_a_p * &a_pow_o1 * &obs_pinv;
        let w_u = &c_a_p * (&reach - &a_pow_o1 * &obs_pinv * &toeplitz);

        let dim = 2 * o - 1 + p;
        let mut theta = DVector::zeros(dim);
        for j in 0..o {
            theta[j] = w_z[(0, o - 1 - j)];
        }
        for j in 0..o - 1 {
            theta[o + j] = w_u[(0, o - 2 - j)];
        }
        for i in 0..p {
            theta[2 * o - 1 + i] = self.markov(p - 1 - i);
        }
        Ok(theta)
    }
}

/// Zero-order-hold discretization through the matrix exponential of the
/// augmented `[A B; 0 0]` block, exact for piecewise-constant inputs.
pub fn discretize_zoh(tf: &TransferFunctionC, ts: f64) -> Result<StateSpaceD> {
    if ts <= 0.0 {
        return Err(Error::InvalidConfig("sample time must be positive".into()));
    }
    let n = tf.order();
    let d0 = tf.den[0];
    let monic: Vec<f64> = tf.den[1..].iter().map(|&v| v / d0).collect();
    let mut num_padded = vec![0.0; n - tf.num.len()];
    num_padded.extend(tf.num.iter().map(|&v| v / d0));

    // Controllable canonical form of the continuous system.
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        a[(0, j)] = -monic[j];
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[0] = 1.0;
    let c = DVector::from_vec(num_padded);

    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&a * ts));
    aug.view_mut((0, n), (n, 1)).copy_from(&(&b * ts));
    let e = aug.exp();

    let ad = e.view((0, 0), (n, n)).clone_owned();
    let bd = e.view((0, n), (n, 1)).column(0).clone_owned();
    StateSpaceD::new(ad, bd, c, ts)
}

/// State recursion `x ← Ax + Bu`, `z = Cx`, starting from `x0`.
pub fn simulate(ss: &StateSpaceD, u: &[f64], x0: &DVector<f64>) -> Result<Vec<f64>> {
    if x0.len() != ss.order() {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: ss.order(),
            got: x0.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::InvalidConfig("input sequence is empty".into()));
    }
    let mut x = x0.clone();
    let mut z = Vec::with_capacity(u.len());
    for &uk in u {
        z.push(ss.c.dot(&x));
        x = &ss.a * x + &ss.b * uk;
    }
    Ok(z)
}

/// Piecewise-constant excitation: every `hold_seconds` a new level is drawn
/// uniformly from `levels`. `hold_seconds` must be a positive multiple of `ts`.
pub fn gen_input_three_level(
    levels: &[f64],
    hold_seconds: f64,
    duration_samples: usize,
    ts: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if levels.is_empty() {
        return Err(Error::InvalidConfig("level set is empty".into()));
    }
    if ts <= 0.0 {
        return Err(Error::InvalidConfig("sample time must be positive".into()));
    }
    let ratio = hold_seconds / ts;
    let block = ratio.round();
    if block < 1.0 || (ratio - block).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "hold time {hold_seconds} s is not a positive multiple of ts = {ts} s"
        )));
    }
    let block = block as usize;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(duration_samples);
    while out.len() < duration_samples {
        let level = levels[rng.gen_range(0..levels.len())];
        let take = block.min(duration_samples - out.len());
        out.extend(std::iter::repeat(level).take(take));
    }
    Ok(out)
}

/// Bounded colored noise: uniform white samples passed through the discrete
/// first-order low-pass `y(k) = a·y(k-1) + (1-a)·w(k)` with `a = e^{-ts/tc}`,
/// then rescaled so the largest magnitude hits `bound` exactly. Every sample
/// satisfies `|d(k)| ≤ bound`.
pub fn gen_colored_noise(
    length: usize,
    bound: f64,
    filter_tc: f64,
    ts: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if bound < 0.0 {
        return Err(Error::InvalidConfig("noise bound must be >= 0".into()));
    }
    if filter_tc <= 0.0 || ts <= 0.0 {
        return Err(Error::InvalidConfig(
            "filter time constant and sample time must be positive".into(),
        ));
    }
    if length == 0 || bound == 0.0 {
        return Ok(vec![0.0; length]);
    }

    let a = (-ts / filter_tc).exp();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut filtered = Vec::with_capacity(length);
    let mut prev = 0.0;
    for _ in 0..length {
        let w: f64 = rng.gen_range(-1.0..1.0);
        prev = a * prev + (1.0 - a) * w;
        filtered.push(prev);
    }
    let max_abs = filtered.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Ok(vec![0.0; length]);
    }
    let scale = bound / max_abs;
    Ok(filtered
        .into_iter()
        .map(|v| (v * scale).clamp(-bound, bound))
        .collect())
}

/// Sampled input-output record: input `u`, noisy output `y`, the noise-free
/// output `z` when it is known (synthetic data), and the disturbance bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    u: Vec<f64>,
    y: Vec<f64>,
    z: Option<Vec<f64>>,
    d_bound: f64,
    ts: f64,
}

impl TimeSeriesDataset {
    pub fn new(
        u: Vec<f64>,
        y: Vec<f64>,
        z: Option<Vec<f64>>,
        d_bound: f64,
        ts: f64,
    ) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::DimensionMismatch {
                what: "dataset signals",
                expected: u.len(),
                got: y.len(),
            });
        }
        if ts <= 0.0 {
            return Err(Error::InvalidConfig("sample time must be positive".into()));
        }
        if d_bound < 0.0 {
            return Err(Error::InvalidConfig("noise bound must be >= 0".into()));
        }
        if let Some(z) = &z {
            if z.len() != y.len() {
                return Err(Error::DimensionMismatch {
                    what: "clean output",
                    expected: y.len(),
                    got: z.len(),
                });
            }
            let slack = 1e-12 * (1.0 + d_bound);
            for k in 0..y.len() {
                if (y[k] - z[k]).abs() > d_bound + slack {
                    return Err(Error::InvalidConfig(format!(
                        "sample {k} violates the noise bound: |y - z| = {} > {d_bound}",
                        (y[k] - z[k]).abs()
                    )));
                }
            }
        }
        Ok(Self {
            u,
            y,
            z,
            d_bound,
            ts,
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> Option<&[f64]> {
        self.z.as_deref()
    }

    pub fn d_bound(&self) -> f64 {
        self.d_bound
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    /// FNV-1a over the raw bits of the metadata and signals; stable across
    /// runs and platforms for provenance records.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for byte in v.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.ts);
        eat(self.d_bound);
        for &v in &self.u {
            eat(v);
        }
        for &v in &self.y {
            eat(v);
        }
        if let Some(z) = &self.z {
            for &v in z {
                eat(v);
            }
        }
        h
    }

    /// Export as CSV with header `k,u,y,z`; the `z` column is omitted when the
    /// clean output is unknown. Floats are printed in shortest round-trip form.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let has_z = self.z.is_some();
        out.push_str(if has_z { "k,u,y,z\n" } else { "k,u,y\n" });
        for k in 0..self.len() {
            write!(out, "{k},{},{}", self.u[k], self.y[k]).expect("string write");
            if let Some(z) = &self.z {
                write!(out, ",{}", z[k]).expect("string write");
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Import a dataset written by [`TimeSeriesDataset::write_csv`]. The noise
    /// bound and sample time are not part of the CSV and must be supplied.
    pub fn read_csv(path: &Path, d_bound: f64, ts: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dataset CSV".into()))?;
        let has_z = match header {
            "k,u,y,z" => true,
            "k,u,y" => false,
            other => return Err(Error::Parse(format!("unexpected dataset header `{other}`"))),
        };
        let mut u = Vec::new();
        let mut y = Vec::new();
        let mut z = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let expected = if has_z { 4 } else { 3 };
            if fields.len() != expected {
                return Err(Error::Parse(format!(
                    "dataset line {}: expected {expected} fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            u.push(parse_f64(fields[1], lineno + 2)?);
            y.push(parse_f64(fields[2], lineno + 2)?);
            if has_z {
                z.push(parse_f64(fields[3], lineno + 2)?);
            }
        }
        Self::new(u, y, has_z.then_some(z), d_bound, ts)
    }
}

fn parse_f64(field: &str, lineno: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {lineno}: `{field}` is not a number")))
}

/// Parameters of the synthetic benchmark record.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub ts: f64,
    pub samples: usize,
    pub levels: Vec<f64>,
    pub hold_seconds: f64,
    pub noise_bound: f64,
    pub noise_filter_tc: f64,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            ts: 0.2,
            samples: 500,
            levels: vec![-1.0, 0.0, 1.0],
            hold_seconds: 4.0,
            noise_bound: 0.2,
            noise_filter_tc: 0.2,
            seed: 1,
        }
    }
}

const NOISE_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Simulate the benchmark plant under the three-level excitation and add
/// bounded colored measurement noise. Bit-identical for identical configs.
pub fn make_benchmark_dataset(cfg: &BenchmarkConfig) -> Result<TimeSeriesDataset> {
    if cfg.samples == 0 {
        return Err(Error::InvalidConfig("sample count must be positive".into()));
    }
    let plant = TransferFunctionC::benchmark_plant();
    let ss = discretize_zoh(&plant, cfg.ts)?;
    let u = gen_input_three_level(&cfg.levels, cfg.hold_seconds, cfg.samples, cfg.ts, cfg.seed)?;
    let z = simulate(&ss, &u, &DVector::zeros(ss.order()))?;
    let d = gen_colored_noise(
        cfg.samples,
        cfg.noise_bound,
        cfg.noise_filter_tc,
        cfg.ts,
        cfg.seed.wrapping_add(NOISE_SEED_SALT),
    )?;
    let y: Vec<f64> = z.iter().zip(&d).map(|(zi, di)| zi + di).collect();
    TimeSeriesDataset::new(u, y, Some(z), cfg.noise_bound, cfg.ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_improper_and_unstable() {
        assert!(TransferFunctionC::new(vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(TransferFunctionC::new(vec![1.0], vec![1.0, -1.0]).is_err());
        assert!(TransferFunctionC::new(vec![1.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn first_order_zoh_matches_scalar_formula() {
        let tf = TransferFunctionC::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let ss = discretize_zoh(&tf, 0.2).unwrap();
        assert_eq!(ss.order(), 1);
        assert_abs_diff_eq!(ss.a()[(0, 0)], (-0.2f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(ss.dc_gain(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn benchmark_plant_shape() {
        let tf = TransferFunctionC::benchmark_plant();
        assert_eq!(tf.order(), 3);
        assert_abs_diff_eq!(tf.dc_gain(), 2.0, epsilon = 1e-12);
        let ss = discretize_zoh(&tf, 0.2).unwrap();
        assert_eq!(ss.order(), 3);
        assert_abs_diff_eq!(ss.dc_gain(), 2.0, epsilon = 1e-9);
        assert!(ss.spectral_radius() < 1.0);
    }

    /// Continuous step response of `k / ((s+a)(s+b))` with distinct real
    /// poles, by partial fractions.
    fn step_response_2nd(k: f64, a: f64, b: f64, t: f64) -> f64 {
        let ca = k / (-a * (b - a));
        let cb = k / (-b * (a - b));
        k / (a * b) + ca * (-a * t).exp() + cb * (-b * t).exp()
    }

    #[test]
    fn zoh_step_response_matches_continuous() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..20 {
            let ts = rng.gen_range(0.05..0.5);
            let horizon = 40;
            if rng.gen_bool(0.5) {
                // k / (s + a)
                let a = rng.gen_range(0.2..3.0);
                let k = rng.gen_range(0.5..2.0);
                let tf = TransferFunctionC::new(vec![k], vec![1.0, a]).unwrap();
                let ss = discretize_zoh(&tf, ts).unwrap();
                let z = simulate(&ss, &vec![1.0; horizon], &DVector::zeros(1)).unwrap();
                for (i, zi) in z.iter().enumerate() {
                    let t = i as f64 * ts;
                    let truth = (k / a) * (1.0 - (-a * t).exp());
                    assert_abs_diff_eq!(*zi, truth, epsilon = 1e-8);
                }
            } else {
                let a = rng.gen_range(0.2..2.0);
                let b = a + rng.gen_range(0.3..2.0);
                let k = rng.gen_range(0.5..2.0);
                let tf = TransferFunctionC::new(vec![k], vec![1.0, a + b, a * b]).unwrap();
                let ss = discretize_zoh(&tf, ts).unwrap();
                let z = simulate(&ss, &vec![1.0; horizon], &DVector::zeros(2)).unwrap();
                for (i, zi) in z.iter().enumerate() {
                    let t = i as f64 * ts;
                    assert_abs_diff_eq!(*zi, step_response_2nd(k, a, b, t), epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn simulate_zero_input_is_zero() {
        let ss = discretize_zoh(&TransferFunctionC::benchmark_plant(), 0.2).unwrap();
        let z = simulate(&ss, &vec![0.0; 50], &DVector::zeros(3)).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn simulate_step_converges_to_dc_gain() {
        let ss = discretize_zoh(&TransferFunctionC::benchmark_plant(), 0.2).unwrap();
        let z = simulate(&ss, &vec![1.0; 400], &DVector::zeros(3)).unwrap();
        assert_abs_diff_eq!(*z.last().unwrap(), 2.0, epsilon = 1e-6);
    }

    #[test]
    fn simulate_impulse_gives_markov_parameters() {
        let ss = discretize_zoh(&TransferFunctionC::benchmark_plant(), 0.2).unwrap();
        let mut u = vec![0.0; 30];
        u[0] = 1.0;
        let z = simulate(&ss, &u, &DVector::zeros(3)).unwrap();
        assert_eq!(z[0], 0.0);
        for k in 1..30 {
            assert_abs_diff_eq!(z[k], ss.markov(k - 1), epsilon = 1e-12);
        }
    }

    #[test]
    fn simulate_rejects_bad_initial_state() {
        let ss = discretize_zoh(&TransferFunctionC::benchmark_plant(), 0.2).unwrap();
        assert!(simulate(&ss, &[1.0], &DVector::zeros(2)).is_err());
    }

    #[test]
    fn three_level_input_holds_blocks() {
        let u = gen_input_three_level(&[-1.0, 0.0, 1.0], 4.0, 500, 0.2, 1).unwrap();
        assert_eq!(u.len(), 500);
        for block in u.chunks(20) {
            assert!(block.iter().all(|&v| v == block[0]));
            assert!([-1.0, 0.0, 1.0].contains(&block[0]));
        }
    }

    #[test]
    fn single_level_input_is_constant() {
        let u = gen_input_three_level(&[0.0], 4.0, 100, 0.2, 3).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn input_generator_is_deterministic() {
        let a = gen_input_three_level(&[-1.0, 0.0, 1.0], 4.0, 500, 0.2, 42).unwrap();
        let b = gen_input_three_level(&[-1.0, 0.0, 1.0], 4.0, 500, 0.2, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn input_generator_rejects_bad_hold() {
        assert!(gen_input_three_level(&[1.0], 0.3, 10, 0.2, 0).is_err());
        assert!(gen_input_three_level(&[], 4.0, 10, 0.2, 0).is_err());
    }

    #[test]
    fn noise_respects_bound_exactly() {
        let d = gen_colored_noise(100_000, 0.2, 0.2, 0.2, 9).unwrap();
        assert!(d.iter().all(|&v| v.abs() <= 0.2));
        let max = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // The rescale makes the empirical maximum hit the bound.
        assert!(max >= 0.2 - 1e-12, "max = {max}");
    }

    #[test]
    fn zero_bound_noise_is_zero() {
        let d = gen_colored_noise(1000, 0.0, 0.2, 0.2, 9).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_is_deterministic() {
        let a = gen_colored_noise(1000, 0.2, 0.2, 0.2, 77).unwrap();
        let b = gen_colored_noise(1000, 0.2, 0.2, 0.2, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn benchmark_dataset_default_config() {
        let ds = make_benchmark_dataset(&BenchmarkConfig::default()).unwrap();
        assert_eq!(ds.len(), 500);
        let z = ds.z().unwrap();
        for k in 0..ds.len() {
            assert!((ds.y()[k] - z[k]).abs() <= 0.2 + 1e-12);
        }
    }

    #[test]
    fn zero_noise_dataset_has_y_equal_z() {
        let cfg = BenchmarkConfig {
            noise_bound: 0.0,
            ..BenchmarkConfig::default()
        };
        let ds = make_benchmark_dataset(&cfg).unwrap();
        assert_eq!(ds.y(), ds.z().unwrap());
    }

    #[test]
    fn benchmark_dataset_is_deterministic() {
        let cfg = BenchmarkConfig::default();
        let a = make_benchmark_dataset(&cfg).unwrap();
        let b = make_benchmark_dataset(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        let other = make_benchmark_dataset(&BenchmarkConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a.fingerprint(), other.fingerprint());
    }

    #[test]
    fn dataset_csv_round_trip() {
        let dir = std::env::temp_dir().join("smpred_lti_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ds.csv");
        let ds = make_benchmark_dataset(&BenchmarkConfig {
            samples: 40,
            ..BenchmarkConfig::default()
        })
        .unwrap();
        ds.write_csv(&path).unwrap();
        let back = TimeSeriesDataset::read_csv(&path, ds.d_bound(), ds.ts()).unwrap();
        assert_eq!(ds, back);
        // Re-export is byte-identical.
        let path2 = dir.join("ds2.csv");
        back.write_csv(&path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn multistep_theta_reproduces_clean_output() {
        let ss = discretize_zoh(&TransferFunctionC::benchmark_plant(), 0.2).unwrap();
        let u = gen_input_three_level(&[-1.0, 0.0, 1.0], 4.0, 120, 0.2, 11).unwrap();
        let z = simulate(&ss, &u, &DVector::zeros(3)).unwrap();
        for (o, p) in [(3usize, 1usize), (3, 4), (3, 10), (4, 6)] {
            let theta = ss.multistep_theta(o, p).unwrap();
            assert_eq!(theta.len(), 2 * o - 1 + p);
            for k in (o - 1)..(z.len() - p) {
                let mut phi = Vec::with_capacity(theta.len());
                for j in 0..o {
                    phi.push(z[k - j]);
                }
                for j in 1..o {
                    phi.push(u[k - j]);
                }
                for j in 0..p {
                    phi.push(u[k + j]);
                }
                let pred: f64 = phi.iter().zip(theta.iter()).map(|(a, b)| a * b).sum();
                assert_abs_diff_eq!(pred, z[k + p], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn multistep_theta_rejects_low_order() {
        let ss = discretize_zoh(&TransferFunctionC::benchmark_plant(), 0.2).unwrap();
        assert!(ss.multistep_theta(2, 3).is_err());
    }
}
