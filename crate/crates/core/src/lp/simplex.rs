//! Dense two-phase revised simplex for standard-form problems
//! `min cᵀx subject to Ax = b, x ≥ 0`,
//! sized for a small number of rows and a possibly large number of columns.
//! The basis is refactorized from scratch on every iteration, which is cheap
//! at the row counts used here (tens) and keeps the iterates free of
//! accumulated update error. Pricing is most-negative-reduced-cost with
//! lowest-index tie-breaking, falling back to Bland's rule after a run of
//! degenerate pivots so that cycling cannot occur.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Constraint-satisfaction slack accepted artifact-wide.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Objective accuracy promised by the solver.
pub const OPTIMALITY_TOL: f64 = 1e-7;

const REDUCED_COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const RATIO_TIE_TOL: f64 = 1e-12;
const STALL_LIMIT: usize = 64;

#[derive(Debug)]
pub(crate) enum StandardOutcome {
    Optimal {
        /// Solution of the standard-form problem (structural variables only).
        x: DVector<f64>,
        /// Dual multipliers of the equality rows, in the caller's row order
        /// and sign convention.
        row_duals: DVector<f64>,
    },
    Infeasible,
    Unbounded,
}

enum PhaseEnd {
    Optimal {
        x_basic: DVector<f64>,
        duals: DVector<f64>,
    },
    Unbounded,
}

struct Simplex {
    /// r × n constraint matrix with rows flipped so that `b ≥ 0`.
    a: DMatrix<f64>,
    b: DVector<f64>,
    flipped: Vec<bool>,
    /// Basis variable per row slot; values `>= n` denote the artificial
    /// variable of row `v - n`.
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    r: usize,
    n: usize,
}

/// Solve `min cᵀx s.t. Ax = b, x ≥ 0`.
pub(crate) fn solve_standard(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
) -> Result<StandardOutcome> {
    let r = a.nrows();
    let n = a.ncols();
    debug_assert_eq!(b.len(), r);
    debug_assert_eq!(c.len(), n);

    let mut flipped = vec![false; r];
    let mut fa = a.clone_owned();
    let mut fb = b.clone_owned();
    for i in 0..r {
        if fb[i] < 0.0 {
            flipped[i] = true;
            fb[i] = -fb[i];
            for j in 0..n {
                fa[(i, j)] = -fa[(i, j)];
            }
        }
    }

    let mut s = Simplex {
        a: fa,
        b: fb,
        flipped,
        basis: (n..n + r).collect(),
        in_basis: vec![false; n],
        r,
        n,
    };

    // Phase 1: minimize the sum of artificial variables.
    match s.run_phase(c, true)? {
        PhaseEnd::Unbounded => {
            // The phase-1 objective is bounded below by zero; reaching this
            // arm means the pivot tolerances broke down.
            return Err(Error::Numerical(
                "phase-1 subproblem reported unbounded".into(),
            ));
        }
        PhaseEnd::Optimal { x_basic, .. } => {
            let infeasibility: f64 = s
                .basis
                .iter()
                .zip(x_basic.iter())
                .filter(|(v, _)| **v >= s.n)
                .map(|(_, x)| x.max(0.0))
                .sum();
            if infeasibility > FEASIBILITY_TOL {
                return Ok(StandardOutcome::Infeasible);
            }
        }
    }

    // Phase 2: minimize the true cost. Artificial variables still in the
    // basis sit at (numerically) zero and are blocked from growing by the
    // extended ratio test.
    match s.run_phase(c, false)? {
        PhaseEnd::Unbounded => Ok(StandardOutcome::Unbounded),
        PhaseEnd::Optimal { x_basic, duals } => {
            let mut x = DVector::zeros(n);
            for (slot, &v) in s.basis.iter().enumerate() {
                if v < n {
                    x[v] = x_basic[slot].max(0.0);
                }
            }
            let mut row_duals = DVector::zeros(r);
            for i in 0..r {
                row_duals[i] = if s.flipped[i] { -duals[i] } else { duals[i] };
            }
            Ok(StandardOutcome::Optimal { x, row_duals })
        }
    }
}

impl Simplex {
    fn basis_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.r, self.r);
        for (slot, &v) in self.basis.iter().enumerate() {
            if v < self.n {
                m.set_column(slot, &self.a.column(v));
            } else {
                m[(v - self.n, slot)] = 1.0;
            }
        }
        m
    }

    fn cost_of(&self, v: usize, c: &DVector<f64>, phase1: bool) -> f64 {
        if v >= self.n {
            if phase1 {
                1.0
            } else {
                0.0
            }
        } else if phase1 {
            0.0
        } else {
            c[v]
        }
    }

    fn run_phase(&mut self, c: &DVector<f64>, phase1: bool) -> Result<PhaseEnd> {
        let max_iter = 10_000 + 50 * (self.n + self.r);
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = f64::INFINITY;

        for _ in 0..max_iter {
            let bm = self.basis_matrix();
            let lu = bm.clone().lu();
            let x_basic = lu
                .solve(&self.b)
                .ok_or_else(|| Error::Numerical("singular basis matrix".into()))?;
            check_residual(&bm, &x_basic, &self.b)?;

            let c_basic = DVector::from_fn(self.r, |i, _| self.cost_of(self.basis[i], c, phase1));
            let duals = bm
                .transpose()
                .lu()
                .solve(&c_basic)
                .ok_or_else(|| Error::Numerical("singular basis matrix".into()))?;

            // Reduced costs of all structural columns in one pass. The
            // entering threshold is scaled per column: at rhs magnitudes of
            // 1e6 (parameter-box rows) an absolute cutoff would chase
            // round-off noise forever.
            let priced = self.a.tr_mul(&duals);
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.in_basis[j] {
                    continue;
                }
                let cost_j = if phase1 { 0.0 } else { c[j] };
                let scale = 1.0 + cost_j.abs() + priced[j].abs();
                let reduced = (cost_j - priced[j]) / scale;
                if reduced < -REDUCED_COST_TOL {
                    if bland {
                        entering = Some((j, reduced));
                        break;
                    }
                    match entering {
                        Some((_, best)) if reduced >= best => {}
                        _ => entering = Some((j, reduced)),
                    }
                }
            }

            let Some((enter, _)) = entering else {
                return Ok(PhaseEnd::Optimal { x_basic, duals });
            };

            let direction = lu
                .solve(&self.a.column(enter).clone_owned())
                .ok_or_else(|| Error::Numerical("singular basis matrix".into()))?;

            // Ratio test. Basic artificial variables must not grow again, so
            // in phase 2 a negative direction entry on an artificial slot
            // blocks the step at zero length.
            let mut leave: Option<(f64, usize)> = None;
            for i in 0..self.r {
                let ratio = if direction[i] > PIVOT_TOL {
                    x_basic[i].max(0.0) / direction[i]
                } else if !phase1 && self.basis[i] >= self.n && direction[i] < -PIVOT_TOL {
                    0.0
                } else {
                    continue;
                };
                leave = Some(match leave {
                    None => (ratio, i),
                    Some((best, slot)) => {
                        if ratio < best - RATIO_TIE_TOL {
                            (ratio, i)
                        } else if ratio <= best + RATIO_TIE_TOL
                            && self.prefer_leaving(i, slot, bland)
                        {
                            (best.min(ratio), i)
                        } else {
                            (best, slot)
                        }
                    }
                });
            }

            let Some((_, slot)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };

            let obj = c_basic.dot(&x_basic);
            if obj > last_obj - 1e-12 * (1.0 + last_obj.abs()) {
                stall += 1;
                if stall >= STALL_LIMIT {
                    bland = true;
                }
            } else {
                stall = 0;
            }
            last_obj = obj;

            let old = self.basis[slot];
            if old < self.n {
                self.in_basis[old] = false;
            }
            self.basis[slot] = enter;
            self.in_basis[enter] = true;
        }

        Err(Error::Numerical("simplex iteration limit reached".into()))
    }

    /// Tie-break for the leaving slot: under Bland's rule take the lowest
    /// variable index; otherwise drive artificial variables out first, then
    /// take the lowest variable index.
    fn prefer_leaving(&self, cand: usize, incumbent: usize, bland: bool) -> bool {
        let cv = self.basis[cand];
        let iv = self.basis[incumbent];
        if !bland {
            let ca = cv >= self.n;
            let ia = iv >= self.n;
            if ca != ia {
                return ca;
            }
        }
        cv < iv
    }
}

fn check_residual(bm: &DMatrix<f64>, x: &DVector<f64>, rhs: &DVector<f64>) -> Result<()> {
    let res = bm * x - rhs;
    let scale = 1.0 + rhs.amax();
    if res.amax() > 1e-6 * scale {
        return Err(Error::Numerical(
            "basis system solved inaccurately (near-singular basis)".into(),
        ));
    }
    Ok(())
}
