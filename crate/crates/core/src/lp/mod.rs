//! Linear programs over polytopes `{θ : Aθ ≤ b}` and the polytope primitives
//! built on them: support functions, boundedness detection and (for test
//! oracles) vertex enumeration.
//!
//! Every LP here has few variables and many inequality rows, so `solve_lp`
//! works on the dual: `max cᵀθ s.t. Aθ ≤ b` becomes the standard-form problem
//! `min bᵀy s.t. Aᵀy = c, y ≥ 0`, whose basis has only `dim` rows. The primal
//! optimizer is recovered from the dual multipliers, which pick out `dim`
//! active rows of `A`; the result is always a vertex solution.

mod simplex;

use nalgebra::{DMatrix, DVector};

use simplex::{solve_standard, StandardOutcome};
pub use simplex::{FEASIBILITY_TOL, OPTIMALITY_TOL};

use crate::error::{Error, Result};

/// Convex polytope `{θ ∈ R^q : Aθ ≤ b}` in inequality form.
///
/// Emptiness and unboundedness are queryable ([`Polytope::is_empty`],
/// [`is_bounded`]); no constructor tries to detect them silently.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Polytope {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.ncols() == 0 {
            return Err(Error::InvalidConfig(
                "polytope dimension must be at least 1".into(),
            ));
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                what: "polytope rows",
                expected: a.nrows(),
                got: b.len(),
            });
        }
        Ok(Self { a, b })
    }

    /// Axis-aligned box `{|θ_i| ≤ half_width}`.
    pub fn centered_box(dim: usize, half_width: f64) -> Self {
        let mut a = DMatrix::zeros(2 * dim, dim);
        for i in 0..dim {
            a[(2 * i, i)] = 1.0;
            a[(2 * i + 1, i)] = -1.0;
        }
        let b = DVector::from_element(2 * dim, half_width);
        Self { a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Largest constraint violation of `point` (≤ 0 means strictly inside).
    pub fn violation(&self, point: &DVector<f64>) -> f64 {
        let slack = &self.a * point - &self.b;
        slack.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, point: &DVector<f64>, tol: f64) -> bool {
        self.violation(point) <= tol
    }

    /// Feasibility probe: minimizes the largest constraint violation.
    pub fn is_empty(&self) -> Result<bool> {
        Ok(feasible_point(self)?.is_none())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Outcome of [`solve_lp`]; `point` and `objective` are present iff the
/// status is [`LpStatus::Optimal`].
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub point: Option<DVector<f64>>,
    pub objective: Option<f64>,
}

impl LpSolution {
    fn optimal(point: DVector<f64>, objective: f64) -> Self {
        Self {
            status: LpStatus::Optimal,
            point: Some(point),
            objective: Some(objective),
        }
    }

    fn status_only(status: LpStatus) -> Self {
        Self {
            status,
            point: None,
            objective: None,
        }
    }
}

/// Optimize `cᵀθ` over a polytope. Infeasibility and unboundedness are
/// reported through the status, never as an error.
pub fn solve_lp(c: &DVector<f64>, poly: &Polytope, sense: Sense) -> Result<LpSolution> {
    if c.len() != poly.dim() {
        return Err(Error::DimensionMismatch {
            what: "lp objective",
            expected: poly.dim(),
            got: c.len(),
        });
    }
    if poly.num_constraints() == 0 {
        // Whole space: any point is feasible, any nonzero objective escapes.
        return Ok(if c.amax() == 0.0 {
            LpSolution::optimal(DVector::zeros(poly.dim()), 0.0)
        } else {
            LpSolution::status_only(LpStatus::Unbounded)
        });
    }

    let c_max = match sense {
        Sense::Maximize => c.clone_owned(),
        Sense::Minimize => -c,
    };

    let a_dual = poly.a.transpose();
    match solve_standard(&a_dual, &c_max, &poly.b)? {
        StandardOutcome::Optimal {
            x: multipliers,
            row_duals: theta,
            ..
        } => {
            let scale = 1.0 + poly.b.amax();
            if poly.violation(&theta) > 1e-6 * scale {
                return Err(Error::Numerical(
                    "recovered LP solution violates constraints".into(),
                ));
            }
            let primal_obj = c_max.dot(&theta);
            let dual_obj = poly.b.dot(&multipliers);
            if (primal_obj - dual_obj).abs() > 1e-6 * (1.0 + dual_obj.abs()) {
                return Err(Error::Numerical("LP duality gap too large".into()));
            }
            Ok(LpSolution::optimal(theta.clone_owned(), c.dot(&theta)))
        }
        StandardOutcome::Unbounded => Ok(LpSolution::status_only(LpStatus::Infeasible)),
        StandardOutcome::Infeasible => {
            // Dual infeasible: the primal is unbounded if feasible at all.
            if feasible_point(poly)?.is_some() {
                Ok(LpSolution::status_only(LpStatus::Unbounded))
            } else {
                Ok(LpSolution::status_only(LpStatus::Infeasible))
            }
        }
    }
}

/// Some feasible point of the polytope, or `None` when it is empty.
///
/// Solves `min t s.t. Aθ ≤ b + t·1, t ≥ 0`, which is always feasible and
/// bounded, and accepts the polytope when the optimum is within the
/// feasibility tolerance.
pub fn feasible_point(poly: &Polytope) -> Result<Option<DVector<f64>>> {
    let q = poly.dim();
    let m = poly.num_constraints();
    if m == 0 {
        return Ok(Some(DVector::zeros(q)));
    }
    let mut a = DMatrix::zeros(m + 1, q + 1);
    a.view_mut((0, 0), (m, q)).copy_from(&poly.a);
    for i in 0..m {
        a[(i, q)] = -1.0;
    }
    a[(m, q)] = -1.0;
    let mut b = DVector::zeros(m + 1);
    b.rows_mut(0, m).copy_from(&poly.b);
    let relaxed = Polytope::new(a, b)?;

    let mut cost = DVector::zeros(q + 1);
    cost[q] = 1.0;
    let sol = solve_lp(&cost, &relaxed, Sense::Minimize)?;
    match sol.status {
        LpStatus::Optimal => {
            let t = sol.objective.expect("optimal solution carries objective");
            if t <= FEASIBILITY_TOL {
                let point = sol.point.expect("optimal solution carries point");
                Ok(Some(point.rows(0, q).clone_owned()))
            } else {
                Ok(None)
            }
        }
        // The relaxed problem is feasible and bounded by construction.
        _ => Err(Error::Numerical("feasibility probe did not solve".into())),
    }
}

/// Value of the support function `max_{θ ∈ P} dᵀθ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportValue {
    Finite(f64),
    Unbounded,
}

impl SupportValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            SupportValue::Finite(v) => Some(v),
            SupportValue::Unbounded => None,
        }
    }
}

/// Support function of the polytope along `direction`.
pub fn support(poly: &Polytope, direction: &DVector<f64>) -> Result<SupportValue> {
    let sol = solve_lp(direction, poly, Sense::Maximize)?;
    match sol.status {
        LpStatus::Optimal => Ok(SupportValue::Finite(
            sol.objective.expect("optimal solution carries objective"),
        )),
        LpStatus::Unbounded => Ok(SupportValue::Unbounded),
        LpStatus::Infeasible => Err(Error::EmptyPolytope),
    }
}

/// A polyhedron is bounded iff its support is finite along all `±eᵢ`.
pub fn is_bounded(poly: &Polytope) -> Result<bool> {
    let q = poly.dim();
    for i in 0..q {
        for sign in [1.0, -1.0] {
            let mut dir = DVector::zeros(q);
            dir[i] = sign;
            if support(poly, &dir)? == SupportValue::Unbounded {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

const VERTEX_DIM_LIMIT: usize = 4;
const VERTEX_COMBINATION_LIMIT: u128 = 20_000_000;

/// All vertices of a low-dimensional polytope, deduplicated within 1e-9.
///
/// Test-oracle scope: every `dim`-subset of rows is solved and kept when it
/// lands inside the polytope, so the cost is binomial in the row count.
/// Dimensions above 4 are rejected.
pub fn enumerate_vertices(poly: &Polytope) -> Result<Vec<DVector<f64>>> {
    let q = poly.dim();
    let m = poly.num_constraints();
    if q > VERTEX_DIM_LIMIT {
        return Err(Error::InvalidConfig(format!(
            "vertex enumeration supports dimension <= {VERTEX_DIM_LIMIT}, got {q}"
        )));
    }
    if binomial(m, q) > VERTEX_COMBINATION_LIMIT {
        return Err(Error::InvalidConfig(format!(
            "vertex enumeration over {m} rows in dimension {q} is too large"
        )));
    }
    if m < q {
        return Ok(Vec::new());
    }

    let feas_scale = FEASIBILITY_TOL * (1.0 + poly.b.amax());
    let mut found: Vec<DVector<f64>> = Vec::new();
    let mut combo: Vec<usize> = (0..q).collect();
    loop {
        if let Some(vertex) = solve_active_set(poly, &combo) {
            if poly.contains(&vertex, feas_scale) {
                found.push(vertex);
            }
        }
        if !next_combination(&mut combo, m) {
            break;
        }
    }

    found.sort_by(|u, v| {
        for i in 0..q {
            match u[i].partial_cmp(&v[i]).expect("vertices are finite") {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    });
    let mut dedup: Vec<DVector<f64>> = Vec::new();
    'outer: for v in found {
        for u in &dedup {
            if (&v - u).amax() <= 1e-9 {
                continue 'outer;
            }
        }
        dedup.push(v);
    }
    Ok(dedup)
}

fn solve_active_set(poly: &Polytope, rows: &[usize]) -> Option<DVector<f64>> {
    let q = poly.dim();
    let mut a = DMatrix::zeros(q, q);
    let mut b = DVector::zeros(q);
    for (i, &r) in rows.iter().enumerate() {
        a.set_row(i, &poly.a.row(r));
        b[i] = poly.b[r];
    }
    let x = a.clone().lu().solve(&b)?;
    // Reject near-singular active sets whose solve came out inaccurate.
    let res = (&a * &x - &b).amax();
    if res > 1e-7 * (1.0 + b.amax()) || !x.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some(x)
}

fn next_combination(combo: &mut [usize], m: usize) -> bool {
    let q = combo.len();
    let mut i = q;
    while i > 0 {
        i -= 1;
        if combo[i] < m - (q - i) {
            combo[i] += 1;
            for j in i + 1..q {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(m: usize, q: usize) -> u128 {
    if q > m {
        return 0;
    }
    let mut out: u128 = 1;
    for i in 0..q {
        out = out.saturating_mul((m - i) as u128) / (i as u128 + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn unit_box(dim: usize) -> Polytope {
        Polytope::centered_box(dim, 1.0)
    }

    fn vec_of(vals: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(vals)
    }

    #[test]
    fn min_over_unit_interval() {
        // min θ over 0 ≤ θ ≤ 1: rows θ ≤ 1, -θ ≤ 0.
        let poly = Polytope::new(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            vec_of(&[1.0, 0.0]),
        )
        .unwrap();
        let sol = solve_lp(&vec_of(&[1.0]), &poly, Sense::Minimize).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.objective.unwrap().abs() < 1e-9);
        assert!(sol.point.unwrap()[0].abs() < 1e-9);
    }

    #[test]
    fn max_over_unit_square_corner() {
        let poly = Polytope::new(
            DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
            vec_of(&[1.0, 0.0, 1.0, 0.0]),
        )
        .unwrap();
        let sol = solve_lp(&vec_of(&[1.0, 1.0]), &poly, Sense::Maximize).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective.unwrap() - 2.0).abs() < 1e-9);
        let p = sol.point.unwrap();
        assert!((p[0] - 1.0).abs() < 1e-9 && (p[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_is_a_status() {
        // θ ≤ -1 and θ ≥ 1.
        let poly = Polytope::new(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            vec_of(&[-1.0, -1.0]),
        )
        .unwrap();
        let sol = solve_lp(&vec_of(&[1.0]), &poly, Sense::Maximize).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        assert!(poly.is_empty().unwrap());
    }

    #[test]
    fn unbounded_is_a_status() {
        // Half-space θ1 ≤ 0 in R^2, maximize θ2.
        let poly =
            Polytope::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), vec_of(&[0.0])).unwrap();
        let sol = solve_lp(&vec_of(&[0.0, 1.0]), &poly, Sense::Maximize).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
        assert!(!is_bounded(&poly).unwrap());
        assert!(!poly.is_empty().unwrap());
    }

    #[test]
    fn support_of_unit_box() {
        let poly = unit_box(2);
        let s = support(&poly, &vec_of(&[1.0, 0.0])).unwrap();
        assert_eq!(s, SupportValue::Finite(1.0));
        let s = support(&poly, &vec_of(&[3.0, 4.0])).unwrap();
        assert!((s.finite().unwrap() - 7.0).abs() < 1e-9);
    }

    #[test]
    fn support_on_empty_polytope_is_an_error() {
        let poly = Polytope::new(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            vec_of(&[-1.0, -1.0]),
        )
        .unwrap();
        assert!(matches!(
            support(&poly, &vec_of(&[1.0])),
            Err(Error::EmptyPolytope)
        ));
    }

    #[test]
    fn box_is_bounded() {
        assert!(is_bounded(&unit_box(3)).unwrap());
    }

    #[test]
    fn unit_square_has_four_vertices() {
        let poly = unit_box(2);
        let verts = enumerate_vertices(&poly).unwrap();
        assert_eq!(verts.len(), 4);
        for v in &verts {
            assert!((v[0].abs() - 1.0).abs() < 1e-9);
            assert!((v[1].abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn interval_vertices() {
        // 0.9 ≤ θ ≤ 1.1 in R^1.
        let poly = Polytope::new(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            vec_of(&[1.1, -0.9]),
        )
        .unwrap();
        let verts = enumerate_vertices(&poly).unwrap();
        assert_eq!(verts.len(), 2);
        assert!((verts[0][0] - 0.9).abs() < 1e-12);
        assert!((verts[1][0] - 1.1).abs() < 1e-12);
    }

    #[test]
    fn vertex_enumeration_rejects_large_dims() {
        let poly = unit_box(5);
        assert!(enumerate_vertices(&poly).is_err());
    }

    /// Random bounded polytope: a scaled box plus extra random cuts, so it is
    /// nonempty (contains the origin) and bounded by construction.
    fn random_polytope(rng: &mut ChaCha12Rng, dim: usize, extra_rows: usize) -> Polytope {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut row = vec![0.0; dim];
                row[i] = sign;
                rows.push(row);
                rhs.push(rng.gen_range(0.5..2.0));
            }
        }
        for _ in 0..extra_rows {
            let row: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            rows.push(row);
            rhs.push(rng.gen_range(0.1..2.0));
        }
        let m = rows.len();
        let a = DMatrix::from_fn(m, dim, |i, j| rows[i][j]);
        Polytope::new(a, DVector::from_vec(rhs)).unwrap()
    }

    #[test]
    fn lp_objective_matches_vertex_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for trial in 0..200 {
            let dim = rng.gen_range(1..=4);
            let extra = rng.gen_range(0..=8);
            let poly = random_polytope(&mut rng, dim, extra);
            let c = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            let sol = solve_lp(&c, &poly, Sense::Maximize).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal, "trial {trial}");
            let verts = enumerate_vertices(&poly).unwrap();
            let best = verts
                .iter()
                .map(|v| c.dot(v))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(
                (sol.objective.unwrap() - best).abs() <= 1e-7,
                "trial {trial}: lp {} vs vertices {}",
                sol.objective.unwrap(),
                best
            );
        }
    }

    #[test]
    fn support_is_positively_homogeneous() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..100 {
            let dim = rng.gen_range(1..=4);
            let extra = rng.gen_range(0..=6);
            let poly = random_polytope(&mut rng, dim, extra);
            let d = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            let scale = rng.gen_range(0.0..4.0);
            let s1 = support(&poly, &d).unwrap().finite().unwrap();
            let s2 = support(&poly, &(scale * &d)).unwrap().finite().unwrap();
            assert!((s2 - scale * s1).abs() <= 1e-9 * (1.0 + s1.abs() * scale));
        }
    }

    #[test]
    fn support_matches_vertex_maximum() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for _ in 0..100 {
            let dim = rng.gen_range(1..=3);
            let extra = rng.gen_range(0..=6);
            let poly = random_polytope(&mut rng, dim, extra);
            let d = DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0));
            let s = support(&poly, &d).unwrap().finite().unwrap();
            let verts = enumerate_vertices(&poly).unwrap();
            let best = verts
                .iter()
                .map(|v| d.dot(v))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((s - best).abs() <= 1e-7 * (1.0 + best.abs()));
        }
    }

    #[test]
    fn underdetermined_polytope_is_unbounded() {
        // One row in R^2 cannot bound the set.
        let poly =
            Polytope::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), vec_of(&[1.0])).unwrap();
        assert!(!is_bounded(&poly).unwrap());
    }
}
