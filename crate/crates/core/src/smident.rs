//! The Set Membership identification pipeline.
//!
//! For each prediction step `p` the pipeline
//! 1. estimates the smallest worst-case error bound compatible with the data
//!    by one linear program ([`estimate_lambda`]) and inflates it by `alpha`,
//! 2. intersects the data constraints into the feasible parameter set
//!    ([`build_fps`]), aborting when that polytope is unbounded (the data are
//!    not informative enough),
//! 3. computes, for any candidate parameter vector, a guaranteed prediction
//!    error bound from support values of the FPS ([`tau_for_model`]), and
//! 4. picks the nominal model minimizing that bound by solving `2·N_p`
//!    support LPs plus one epigraph LP ([`nominal_model`]).
//!
//! The support values `c_j` depend only on the (FPS, batch) pair, so they are
//! computed once per step ([`SupportCache`]) and shared between the nominal
//! model search and every per-model bound evaluation.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{build_regressors, RegressorBatch};
use crate::error::{Error, Result};
use crate::lp::{self, LpStatus, Polytope, Sense, SupportValue};
use crate::lti::TimeSeriesDataset;
use crate::par::par_map_range;

/// Which parts of the underestimated bound the `gamma` margin multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauInflation {
    /// `τ̂ = γ·(τ_under - ε̂) + ε̂`: only the FPS-spread term is inflated;
    /// `ε̂` already carries its own `alpha` margin. The default.
    #[default]
    SpreadOnly,
    /// `τ̂ = γ·τ_under`: the whole underestimate is inflated.
    Full,
}

/// Tuning knobs of the identification pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SmConfig {
    /// Model order `o`.
    pub o: usize,
    /// Largest prediction step `p̄`.
    pub p_max: usize,
    /// Disturbance bound `d̄`.
    pub d_bound: f64,
    /// Margin on the optimal-bound estimate, `> 1`.
    pub alpha: f64,
    /// Margin on the per-model bound, `> 1`.
    pub gamma: f64,
    /// Half-width of the parameter box `Ω` (per coordinate).
    pub omega_box: f64,
    pub tau_inflation: TauInflation,
}

impl Default for SmConfig {
    fn default() -> Self {
        Self {
            o: 3,
            p_max: 10,
            d_bound: 0.2,
            alpha: 1.2,
            gamma: 1.2,
            omega_box: 1e6,
            tau_inflation: TauInflation::SpreadOnly,
        }
    }
}

impl SmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.o == 0 {
            return Err(Error::InvalidConfig("model order must be >= 1".into()));
        }
        if self.p_max == 0 {
            return Err(Error::InvalidConfig("p_max must be >= 1".into()));
        }
        if self.d_bound < 0.0 {
            return Err(Error::InvalidConfig("d_bound must be >= 0".into()));
        }
        if self.alpha <= 1.0 {
            return Err(Error::InvalidConfig("alpha must be > 1".into()));
        }
        if self.gamma <= 1.0 {
            return Err(Error::InvalidConfig("gamma must be > 1".into()));
        }
        if self.omega_box <= 0.0 {
            return Err(Error::InvalidConfig("omega_box must be > 0".into()));
        }
        Ok(())
    }
}

/// Data-based lower estimate of the optimal error bound (one LP):
/// `min λ s.t. |ỹ_p(i) - φ_p(i)ᵀθ| ≤ λ + d̄ ∀i, θ ∈ Ω, λ ≥ 0`.
///
/// The `λ ≥ 0` constraint lives inside the LP, not in a post-clamp, so the
/// argmin is consistent with the reported value.
pub fn estimate_lambda(batch: &RegressorBatch, d_bound: f64, omega: &Polytope) -> Result<f64> {
    if d_bound < 0.0 {
        return Err(Error::InvalidConfig("d_bound must be >= 0".into()));
    }
    let q = batch.dim();
    if omega.dim() != q {
        return Err(Error::DimensionMismatch {
            what: "omega polytope",
            expected: q,
            got: omega.dim(),
        });
    }
    let m = batch.len();
    let mo = omega.num_constraints();
    let rows = 2 * m + mo + 1;

    // Variables (θ, λ).
    let mut a = DMatrix::zeros(rows, q + 1);
    let mut b = DVector::zeros(rows);
    for i in 0..m {
        let phi = batch.phi().row(i);
        let target = batch.targets()[i];
        for j in 0..q {
            a[(2 * i, j)] = phi[j];
            a[(2 * i + 1, j)] = -phi[j];
        }
        a[(2 * i, q)] = -1.0;
        a[(2 * i + 1, q)] = -1.0;
        b[2 * i] = d_bound + target;
        b[2 * i + 1] = d_bound - target;
    }
    a.view_mut((2 * m, 0), (mo, q)).copy_from(omega.a());
    b.rows_mut(2 * m, mo).copy_from(omega.b());
    a[(rows - 1, q)] = -1.0;

    let poly = Polytope::new(a, b)?;
    let mut cost = DVector::zeros(q + 1);
    cost[q] = 1.0;
    let sol = lp::solve_lp(&cost, &poly, Sense::Minimize)?;
    if sol.status != LpStatus::Optimal {
        // The program is feasible for any θ with λ large enough and bounded
        // below by zero; anything else is a solver defect.
        return Err(Error::Numerical(format!(
            "bound-estimation LP ended with status {:?}",
            sol.status
        )));
    }
    Ok(sol
        .objective
        .expect("optimal LP carries objective")
        .max(0.0))
}

/// Feasible parameter set `{θ : |ỹ_p(i) - φ_p(i)ᵀθ| ≤ ε̂ + d̄ ∀i}` as a
/// polytope with `2·N_p` rows (one pair per data point).
pub fn build_fps(batch: &RegressorBatch, eps_hat: f64, d_bound: f64) -> Result<Polytope> {
    if eps_hat < 0.0 || d_bound < 0.0 {
        return Err(Error::InvalidConfig(
            "eps_hat and d_bound must be >= 0".into(),
        ));
    }
    let q = batch.dim();
    let m = batch.len();
    let rhs = eps_hat + d_bound;
    let mut a = DMatrix::zeros(2 * m, q);
    let mut b = DVector::zeros(2 * m);
    for i in 0..m {
        let phi = batch.phi().row(i);
        let target = batch.targets()[i];
        for j in 0..q {
            a[(2 * i, j)] = phi[j];
            a[(2 * i + 1, j)] = -phi[j];
        }
        b[2 * i] = rhs + target;
        b[2 * i + 1] = rhs - target;
    }
    Polytope::new(a, b)
}

/// Support values `c_j = max_{θ ∈ FPS} φ̌_jᵀθ` over the signed regressors
/// `φ̌_j = φ_j (j ≤ N_p), -φ_{j-N_p} (j > N_p)`, computed once per (batch,
/// FPS) pair and reused by every bound evaluation for that step.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportCache {
    signed: DMatrix<f64>,
    c: DVector<f64>,
    p: usize,
}

impl SupportCache {
    pub fn compute(batch: &RegressorBatch, fps: &Polytope) -> Result<Self> {
        let q = batch.dim();
        if fps.dim() != q {
            return Err(Error::DimensionMismatch {
                what: "fps polytope",
                expected: q,
                got: fps.dim(),
            });
        }
        let m = batch.len();
        let mut signed = DMatrix::zeros(2 * m, q);
        signed.view_mut((0, 0), (m, q)).copy_from(batch.phi());
        signed.view_mut((m, 0), (m, q)).copy_from(&(-batch.phi()));

        let supports = par_map_range(2 * m, |j| {
            let dir = signed.row(j).transpose();
            lp::support(fps, &dir)
        });
        let mut c = DVector::zeros(2 * m);
        for (j, s) in supports.into_iter().enumerate() {
            match s? {
                SupportValue::Finite(v) => c[j] = v,
                SupportValue::Unbounded => return Err(Error::UnboundedFps { p: batch.p() }),
            }
        }
        Ok(Self {
            signed,
            c,
            p: batch.p(),
        })
    }

    pub fn len(&self) -> usize {
        self.signed.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.signed.nrows() == 0
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.c
    }

    /// FPS-spread term `max_j (c_j - φ̌_jᵀθ)`; nonnegative for any θ because
    /// the FPS is nonempty.
    pub fn spread(&self, theta: &DVector<f64>) -> Result<f64> {
        if theta.len() != self.signed.ncols() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: self.signed.ncols(),
                got: theta.len(),
            });
        }
        let projected = &self.signed * theta;
        let mut worst = f64::NEG_INFINITY;
        for j in 0..self.c.len() {
            worst = worst.max(self.c[j] - projected[j]);
        }
        Ok(worst)
    }
}

fn inflate(spread: f64, eps_hat: f64, gamma: f64, form: TauInflation) -> (f64, f64) {
    let tau_under = spread + eps_hat;
    let tau_hat = match form {
        TauInflation::SpreadOnly => gamma * spread + eps_hat,
        TauInflation::Full => gamma * tau_under,
    };
    (tau_under, tau_hat)
}

/// Guaranteed error bound pair `(τ_under, τ̂)` for an arbitrary model
/// `θ_p`. Requires a bounded, nonempty FPS; computes the `2·N_p` support
/// values itself — use [`tau_for_model_cached`] when a [`SupportCache`] for
/// this step already exists.
pub fn tau_for_model(
    theta: &DVector<f64>,
    batch: &RegressorBatch,
    fps: &Polytope,
    eps_hat: f64,
    gamma: f64,
    form: TauInflation,
) -> Result<(f64, f64)> {
    if !lp::is_bounded(fps)? {
        return Err(Error::UnboundedFps { p: batch.p() });
    }
    let cache = SupportCache::compute(batch, fps)?;
    tau_for_model_cached(theta, &cache, eps_hat, gamma, form)
}

pub fn tau_for_model_cached(
    theta: &DVector<f64>,
    cache: &SupportCache,
    eps_hat: f64,
    gamma: f64,
    form: TauInflation,
) -> Result<(f64, f64)> {
    Ok(inflate(cache.spread(theta)?, eps_hat, gamma, form))
}

/// Minimize the guaranteed bound over the FPS: returns
/// `(θ*, τ_under(θ*), τ̂(θ*))`. The min-max-max program is solved through
/// its epigraph form — the cached support values `c_j` plus one LP
/// `min ζ s.t. θ ∈ FPS, c_j - φ̌_jᵀθ ≤ ζ`.
pub fn nominal_model(
    batch: &RegressorBatch,
    fps: &Polytope,
    eps_hat: f64,
    gamma: f64,
    form: TauInflation,
) -> Result<(DVector<f64>, f64, f64)> {
    if !lp::is_bounded(fps)? {
        return Err(Error::UnboundedFps { p: batch.p() });
    }
    let cache = SupportCache::compute(batch, fps)?;
    nominal_model_cached(&cache, fps, eps_hat, gamma, form)
}

pub fn nominal_model_cached(
    cache: &SupportCache,
    fps: &Polytope,
    eps_hat: f64,
    gamma: f64,
    form: TauInflation,
) -> Result<(DVector<f64>, f64, f64)> {
    let q = fps.dim();
    let mf = fps.num_constraints();
    let ms = cache.len();

    // Variables (θ, ζ).
    let mut a = DMatrix::zeros(mf + ms, q + 1);
    let mut b = DVector::zeros(mf + ms);
    a.view_mut((0, 0), (mf, q)).copy_from(fps.a());
    b.rows_mut(0, mf).copy_from(fps.b());
    a.view_mut((mf, 0), (ms, q)).copy_from(&(-&cache.signed));
    for j in 0..ms {
        a[(mf + j, q)] = -1.0;
        b[mf + j] = -cache.c[j];
    }
    let poly = Polytope::new(a, b)?;
    let mut cost = DVector::zeros(q + 1);
    cost[q] = 1.0;
    let sol = lp::solve_lp(&cost, &poly, Sense::Minimize)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!(
            "nominal-model LP ended with status {:?}",
            sol.status
        )));
    }
    let point = sol.point.expect("optimal LP carries point");
    let theta = point.rows(0, q).clone_owned();
    let (tau_under, tau_hat) = inflate(cache.spread(&theta)?, eps_hat, gamma, form);
    Ok((theta, tau_under, tau_hat))
}

/// Identification output for one prediction step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub p: usize,
    /// LP lower estimate λ̲_p of the optimal error bound.
    pub lambda_under: f64,
    /// Inflated estimate ε̂_p = α·λ̲_p.
    pub eps_hat: f64,
    pub fps: Polytope,
    pub theta_star: DVector<f64>,
    pub tau_under_star: f64,
    pub tau_hat_star: f64,
    /// Support values of this step's FPS, reusable for bounding other models
    /// (least-squares baselines and the like) without re-solving the LPs.
    pub supports: SupportCache,
}

/// Where a model set came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// Fingerprint of the identification dataset.
    pub dataset_hash: String,
    /// Generator seed, when the dataset was synthesized.
    pub seed: Option<u64>,
}

/// One identified model and bound per step `p = 1..p̄`.
#[derive(Debug, Clone)]
pub struct MultiStepModelSet {
    pub steps: Vec<StepResult>,
    pub config: SmConfig,
    pub provenance: Provenance,
}

impl MultiStepModelSet {
    pub fn step(&self, p: usize) -> Option<&StepResult> {
        if p == 0 || p > self.steps.len() {
            None
        } else {
            Some(&self.steps[p - 1])
        }
    }

    pub fn p_max(&self) -> usize {
        self.steps.len()
    }
}

/// Run one identification step: batch → λ → ε̂ → FPS → nominal model.
pub fn identify_step(ds: &TimeSeriesDataset, cfg: &SmConfig, p: usize) -> Result<StepResult> {
    let batch = build_regressors(ds, cfg.o, p)?;
    let omega = Polytope::centered_box(batch.dim(), cfg.omega_box);
    let lambda_under = estimate_lambda(&batch, cfg.d_bound, &omega)?;
    let eps_hat = cfg.alpha * lambda_under;
    let fps = build_fps(&batch, eps_hat, cfg.d_bound)?;
    if !lp::is_bounded(&fps)? {
        return Err(Error::UnboundedFps { p });
    }
    let supports = SupportCache::compute(&batch, &fps)?;
    let (theta_star, tau_under_star, tau_hat_star) =
        nominal_model_cached(&supports, &fps, eps_hat, cfg.gamma, cfg.tau_inflation)?;
    if !fps.contains(&theta_star, 1e-7) {
        return Err(Error::Numerical(format!(
            "nominal model leaves the FPS at step {p} (violation {:.3e})",
            fps.violation(&theta_star)
        )));
    }
    Ok(StepResult {
        p,
        lambda_under,
        eps_hat,
        fps,
        theta_star,
        tau_under_star,
        tau_hat_star,
        supports,
    })
}

/// Identify every step `p = 1..p̄`. Steps are independent and run in
/// parallel when the `parallel` feature is enabled; results and errors are
/// deterministic either way (the smallest failing `p` wins).
pub fn identify_all(ds: &TimeSeriesDataset, cfg: &SmConfig) -> Result<MultiStepModelSet> {
    cfg.validate()?;
    let required = cfg.o + cfg.p_max;
    if ds.len() < required {
        return Err(Error::SeriesTooShort {
            required,
            got: ds.len(),
        });
    }
    let results = par_map_range(cfg.p_max, |idx| identify_step(ds, cfg, idx + 1));
    let mut steps = Vec::with_capacity(cfg.p_max);
    for r in results {
        steps.push(r?);
    }
    Ok(MultiStepModelSet {
        steps,
        config: cfg.clone(),
        provenance: Provenance {
            dataset_hash: format!("{:016x}", ds.fingerprint()),
            seed: None,
        },
    })
}

/// Predict `ẑ(k+p) = φ_p(k)ᵀθ*_p`.
pub fn predict(models: &MultiStepModelSet, phi: &DVector<f64>, p: usize) -> Result<f64> {
    let step = models.step(p).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "step p={p} outside identified range 1..={}",
            models.p_max()
        ))
    })?;
    if phi.len() != step.theta_star.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction regressor",
            expected: step.theta_star.len(),
            got: phi.len(),
        });
    }
    Ok(step.theta_star.dot(phi))
}
