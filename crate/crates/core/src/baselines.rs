//! Comparison models and bounds: per-step least squares, and the worst-case
//! bound obtained by iterating a 1-step predictor.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{build_regressors, RegressorBatch};
use crate::error::{Error, Result};
use crate::lti::TimeSeriesDataset;
use crate::smident::{tau_for_model_cached, MultiStepModelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    LeastSquares,
    IteratedOneStep,
}

impl BaselineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineKind::LeastSquares => "least_squares",
            BaselineKind::IteratedOneStep => "iterated_one_step",
        }
    }
}

/// Per-step baseline output: the bound always, the parameter vector when the
/// baseline has one (least squares).
#[derive(Debug, Clone)]
pub struct BaselineStep {
    pub p: usize,
    pub theta: Option<DVector<f64>>,
    pub tau_under: f64,
    pub tau_hat: f64,
    /// Set when the least-squares solve fell back to ridge regularization.
    pub ridge_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub kind: BaselineKind,
    pub steps: Vec<BaselineStep>,
}

impl BaselineResult {
    pub fn step(&self, p: usize) -> Option<&BaselineStep> {
        if p == 0 || p > self.steps.len() {
            None
        } else {
            Some(&self.steps[p - 1])
        }
    }

    pub fn tau_hats(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.tau_hat).collect()
    }
}

#[derive(Debug, Clone)]
pub struct LsFit {
    pub theta: DVector<f64>,
    pub ridge_fallback: bool,
}

/// Ordinary least squares through the normal equations, with a trace-scaled
/// ridge fallback when the Gram matrix is not positive definite.
pub fn least_squares_model(batch: &RegressorBatch) -> Result<LsFit> {
    let phi = batch.phi();
    let gram = phi.tr_mul(phi);
    let rhs = phi.tr_mul(batch.targets());
    if let Some(chol) = gram.clone().cholesky() {
        return Ok(LsFit {
            theta: chol.solve(&rhs),
            ridge_fallback: false,
        });
    }
    let q = batch.dim() as f64;
    let mut mu = 1e-8 * gram.trace().max(1.0) / q;
    for _ in 0..8 {
        let ridged = &gram + DMatrix::identity(batch.dim(), batch.dim()) * mu;
        if let Some(chol) = ridged.cholesky() {
            return Ok(LsFit {
                theta: chol.solve(&rhs),
                ridge_fallback: true,
            });
        }
        mu *= 10.0;
    }
    Err(Error::Numerical(
        "least-squares Gram matrix not factorizable even with ridge".into(),
    ))
}

/// Worst-case bound of iterating a 1-step model out to `p_max` steps. Each
/// future step replaces unavailable measurements with predictions, whose
/// errors re-enter through the output coefficients:
/// `e_1 = τ̂_1`, `e_j = τ̂_1 + Σ_{i=1..min(j-1,o)} |a_i| e_{j-i}`.
pub fn iterated_one_step_bound(
    theta_1: &DVector<f64>,
    tau_hat_1: f64,
    o: usize,
    p_max: usize,
) -> Result<Vec<f64>> {
    if theta_1.len() != 2 * o {
        return Err(Error::DimensionMismatch {
            what: "1-step parameter vector",
            expected: 2 * o,
            got: theta_1.len(),
        });
    }
    if p_max == 0 {
        return Err(Error::InvalidConfig("p_max must be >= 1".into()));
    }
    let a_abs: Vec<f64> = (0..o).map(|i| theta_1[i].abs()).collect();
    let mut e = Vec::with_capacity(p_max);
    e.push(tau_hat_1);
    for j in 2..=p_max {
        let mut bound = tau_hat_1;
        for i in 1..=(j - 1).min(o) {
            bound += a_abs[i - 1] * e[j - 1 - i];
        }
        e.push(bound);
    }
    Ok(e)
}

/// Iterate the 1-step model from anchor `k`: measured outputs feed the
/// regressor as long as they are available, predictions after that.
pub fn iterated_predict(
    theta_1: &DVector<f64>,
    o: usize,
    y: &[f64],
    u: &[f64],
    k: usize,
    p: usize,
) -> Result<f64> {
    if theta_1.len() != 2 * o {
        return Err(Error::DimensionMismatch {
            what: "1-step parameter vector",
            expected: 2 * o,
            got: theta_1.len(),
        });
    }
    if k + 1 < o || k + p > u.len() {
        return Err(Error::InvalidConfig(format!(
            "anchor {k} lacks a full window for (o={o}, p={p})"
        )));
    }
    // Predicted outputs for times k+1 .. k+p.
    let mut predicted: Vec<f64> = Vec::with_capacity(p);
    for j in 1..=p {
        let t = k + j; // predict y(t) from data at t-1
        let mut acc = 0.0;
        for lag in 0..o {
            let idx = t - 1 - lag;
            let val = if idx > k {
                predicted[idx - k - 1]
            } else {
                y[idx]
            };
            acc += theta_1[lag] * val;
        }
        for lag in 1..o {
            acc += theta_1[o - 1 + lag] * u[t - 1 - lag];
        }
        acc += theta_1[2 * o - 1] * u[t - 1];
        predicted.push(acc);
    }
    Ok(predicted[p - 1])
}

/// Least-squares model per step, bounded with the cached FPS supports of the
/// identified model set (same `τ` machinery as the nominal models).
pub fn least_squares_result(
    ds: &TimeSeriesDataset,
    models: &MultiStepModelSet,
) -> Result<BaselineResult> {
    let cfg = &models.config;
    let mut steps = Vec::with_capacity(models.p_max());
    for step in &models.steps {
        let batch = build_regressors(ds, cfg.o, step.p)?;
        let fit = least_squares_model(&batch)?;
        let (tau_under, tau_hat) = tau_for_model_cached(
            &fit.theta,
            &step.supports,
            step.eps_hat,
            cfg.gamma,
            cfg.tau_inflation,
        )?;
        steps.push(BaselineStep {
            p: step.p,
            theta: Some(fit.theta),
            tau_under,
            tau_hat,
            ridge_fallback: fit.ridge_fallback,
        });
    }
    Ok(BaselineResult {
        kind: BaselineKind::LeastSquares,
        steps,
    })
}

/// Iterated bound seeded with the identified 1-step model θ*_1 and its τ̂_1.
pub fn iterated_result(models: &MultiStepModelSet) -> Result<BaselineResult> {
    let step1 = models
        .step(1)
        .ok_or_else(|| Error::InvalidConfig("model set lacks step p=1".into()))?;
    let bounds = iterated_one_step_bound(
        &step1.theta_star,
        step1.tau_hat_star,
        models.config.o,
        models.p_max(),
    )?;
    let steps = bounds
        .into_iter()
        .enumerate()
        .map(|(i, tau_hat)| BaselineStep {
            p: i + 1,
            theta: None,
            tau_under: tau_hat,
            tau_hat,
            ridge_fallback: false,
        })
        .collect();
    Ok(BaselineResult {
        kind: BaselineKind::IteratedOneStep,
        steps,
    })
}
