//! Exact rational polyhedral geometry: linear programming with certificates,
//! vertex enumeration, directional widths, and matrix norm bounds.
//!
//! A [`Polyhedron`] is a rational H-representation `{ x : A x <= b }` over
//! free variables. All queries are pure and deterministic (fixed Bland
//! pivoting underneath), so results can be cached and recomputed at will.

pub mod linalg;
pub mod simplex;

use crate::num::{dot, norm2_sq, sqrt_upper, Int, Rat};
use num_traits::{One, Signed, Zero};
use simplex::StandardOutcome;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation requires a non-empty polyhedron")]
    Empty,
    #[error("direction vector must be nonzero")]
    ZeroDirection,
}

/// `{ x in R^dim : a x <= b }` with exact rational data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polyhedron {
    a: Vec<Vec<Rat>>,
    b: Vec<Rat>,
    dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Feasible { point: Vec<Rat>, value: Rat },
    /// Nonnegative multipliers combining the rows to `0 <= negative`.
    Infeasible { farkas: Vec<Rat> },
    /// Primitive integer recession direction along which the objective improves.
    Unbounded { ray: Vec<Rat> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Width {
    Finite(Rat),
    Infinite,
}

impl Polyhedron {
    pub fn new(a: Vec<Vec<Rat>>, b: Vec<Rat>) -> Result<Self, GeometryError> {
        let dim = a.first().map(|r| r.len()).unwrap_or(0);
        if a.len() != b.len() {
            return Err(GeometryError::DimensionMismatch { expected: a.len(), got: b.len() });
        }
        for row in &a {
            if row.len() != dim {
                return Err(GeometryError::DimensionMismatch { expected: dim, got: row.len() });
            }
        }
        Ok(Polyhedron { a, b, dim })
    }

    /// Dimension-only polyhedron with no constraints (all of R^dim).
    pub fn free(dim: usize) -> Self {
        Polyhedron { a: Vec::new(), b: Vec::new(), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.a.len()
    }

    pub fn row(&self, i: usize) -> (&[Rat], &Rat) {
        (&self.a[i], &self.b[i])
    }

    pub fn push_row(&mut self, coeffs: Vec<Rat>, rhs: Rat) {
        assert_eq!(coeffs.len(), self.dim);
        self.a.push(coeffs);
        self.b.push(rhs);
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        x.len() == self.dim
            && self.a.iter().zip(&self.b).all(|(row, rhs)| dot(row, x) <= *rhs)
    }

    pub fn is_empty(&self) -> bool {
        let zero = vec![Rat::zero(); self.dim];
        matches!(lp_solve(self, &zero, Direction::Maximize), Ok(LpOutcome::Infeasible { .. }))
    }

    /// True iff `d` lies in the recession cone `{ d : A d <= 0 }`.
    pub fn recession_contains(&self, d: &[Rat]) -> bool {
        d.len() == self.dim && self.a.iter().all(|row| !dot(row, d).is_positive())
    }
}

/// Exact LP over a polyhedron with free variables. Deterministic for fixed
/// input; every outcome payload is verified by substitution before return.
pub fn lp_solve(
    poly: &Polyhedron,
    objective: &[Rat],
    direction: Direction,
) -> Result<LpOutcome, GeometryError> {
    if objective.len() != poly.dim {
        return Err(GeometryError::DimensionMismatch { expected: poly.dim, got: objective.len() });
    }
    let k = poly.dim;
    let r = poly.a.len();
    // columns: x+ (k), x- (k), slack (r); rows: A x+ - A x- + s = b
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(r);
    for i in 0..r {
        let mut row = Vec::with_capacity(2 * k + r);
        row.extend(poly.a[i].iter().cloned());
        row.extend(poly.a[i].iter().map(|v| -v.clone()));
        for j in 0..r {
            row.push(if j == i { Rat::one() } else { Rat::zero() });
        }
        rows.push(row);
    }
    let mut cost = Vec::with_capacity(2 * k + r);
    let sign = match direction {
        Direction::Maximize => -1,
        Direction::Minimize => 1,
    };
    cost.extend(objective.iter().map(|c| c * crate::num::rat_int(sign)));
    cost.extend(objective.iter().map(|c| -(c * crate::num::rat_int(sign))));
    cost.extend(std::iter::repeat(Rat::zero()).take(r));

    match simplex::solve_standard(&rows, &poly.b, &cost) {
        StandardOutcome::Optimal { solution, .. } => {
            let point: Vec<Rat> =
                (0..k).map(|i| &solution[i] - &solution[k + i]).collect();
            debug_assert!(poly.contains(&point));
            let value = dot(objective, &point);
            Ok(LpOutcome::Feasible { point, value })
        }
        StandardOutcome::Infeasible { multipliers } => {
            // y^T [A -A I] <= 0 gives y^T A = 0 and y <= 0; flip sign.
            let lam: Vec<Rat> = multipliers.iter().map(|y| -y.clone()).collect();
            let prim = crate::num::primitive_direction(&lam);
            let farkas: Vec<Rat> = crate::num::rat_vec(&prim);
            debug_assert!(farkas.iter().all(|l| !l.is_negative()));
            debug_assert!({
                let comb: Rat = farkas.iter().zip(&poly.b).map(|(l, b)| l * b).sum();
                comb.is_negative()
            });
            Ok(LpOutcome::Infeasible { farkas })
        }
        StandardOutcome::Unbounded { ray, .. } => {
            let dir: Vec<Rat> = (0..k).map(|i| &ray[i] - &ray[k + i]).collect();
            let prim = crate::num::primitive_direction(&dir);
            let ray: Vec<Rat> = crate::num::rat_vec(&prim);
            debug_assert!(poly.recession_contains(&ray));
            Ok(LpOutcome::Unbounded { ray })
        }
    }
}

/// Verify a Farkas certificate against a polyhedron: multipliers are
/// nonnegative, cancel every variable column, and combine the right-hand
/// sides to a negative number. Independent of the solver path.
pub fn verify_farkas(poly: &Polyhedron, farkas: &[Rat]) -> bool {
    if farkas.len() != poly.rows() || farkas.iter().any(|l| l.is_negative()) {
        return false;
    }
    for j in 0..poly.dim {
        let col: Rat = farkas.iter().zip(&poly.a).map(|(l, row)| l * &row[j]).sum();
        if !col.is_zero() {
            return false;
        }
    }
    let rhs: Rat = farkas.iter().zip(&poly.b).map(|(l, b)| l * b).sum();
    rhs.is_negative()
}

/// Exact vertex set: solutions of nonsingular `dim`-row subsystems that
/// satisfy all constraints. Degenerate (lower-dimensional) polyhedra are
/// handled naturally since extreme points always have a full-rank tight set.
/// Empty input is an error; a polyhedron containing a line has no vertices
/// and yields the empty set.
pub fn vertices(poly: &Polyhedron) -> Result<Vec<Vec<Rat>>, GeometryError> {
    if poly.is_empty() {
        return Err(GeometryError::Empty);
    }
    let k = poly.dim;
    let mut out: BTreeSet<Vec<Rat>> = BTreeSet::new();
    if k == 0 {
        out.insert(Vec::new());
        return Ok(out.into_iter().collect());
    }
    let n = poly.a.len();
    if n < k {
        return Ok(Vec::new());
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let sub_a: Vec<Vec<Rat>> = idx.iter().map(|&i| poly.a[i].clone()).collect();
        let sub_b: Vec<Rat> = idx.iter().map(|&i| poly.b[i].clone()).collect();
        if let Some(x) = linalg::solve_square(&sub_a, &sub_b) {
            if poly.contains(&x) {
                out.insert(x);
            }
        }
        // next k-combination of 0..n
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(out.into_iter().collect());
            }
            i -= 1;
            if idx[i] != i + n - k {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Directional width `sup { u.(x - y) : x, y in poly }`, computed as the
/// difference of two exact LPs. Infinite exactly when `u` or `-u` lies in
/// the recession cone of a non-empty polyhedron.
pub fn width_along(poly: &Polyhedron, u: &[Int]) -> Result<Width, GeometryError> {
    if u.len() != poly.dim {
        return Err(GeometryError::DimensionMismatch { expected: poly.dim, got: u.len() });
    }
    if u.iter().all(|x| x.is_zero()) {
        return Err(GeometryError::ZeroDirection);
    }
    let obj = crate::num::rat_vec(u);
    let hi = lp_solve(poly, &obj, Direction::Maximize)?;
    let hi = match hi {
        LpOutcome::Infeasible { .. } => return Err(GeometryError::Empty),
        LpOutcome::Unbounded { .. } => return Ok(Width::Infinite),
        LpOutcome::Feasible { value, .. } => value,
    };
    let lo = match lp_solve(poly, &obj, Direction::Minimize)? {
        LpOutcome::Infeasible { .. } => return Err(GeometryError::Empty),
        LpOutcome::Unbounded { .. } => return Ok(Width::Infinite),
        LpOutcome::Feasible { value, .. } => value,
    };
    Ok(Width::Finite(hi - lo))
}

/// Rational upper bound on the spectral norm via the Frobenius norm
/// (rounded up to the half-integer grid). Any valid upper bound keeps the
/// downstream ball-radius computation sound; a larger bound only shrinks it.
pub fn operator_norm_upper(a: &[Vec<Rat>]) -> Rat {
    let mut sq = Rat::zero();
    for row in a {
        sq = sq + norm2_sq(row);
    }
    sqrt_upper(&sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat, rat_int};

    fn rv(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&x| rat_int(x)).collect()
    }

    fn poly(rows: &[(&[i64], i64)]) -> Polyhedron {
        let a = rows.iter().map(|(r, _)| rv(r)).collect();
        let b = rows.iter().map(|&(_, v)| rat_int(v)).collect();
        Polyhedron::new(a, b).unwrap()
    }

    #[test]
    fn lp_one_variable_box() {
        // {x <= 1, -x <= 0}, maximize x -> 1 at x = 1
        let p = poly(&[(&[1], 1), (&[-1], 0)]);
        match lp_solve(&p, &rv(&[1]), Direction::Maximize).unwrap() {
            LpOutcome::Feasible { point, value } => {
                assert_eq!(point, rv(&[1]));
                assert_eq!(value, rat_int(1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lp_infeasible_contradiction() {
        // {x <= -1, -x <= 0}: rows sum to 0 <= -1; multipliers (1,1)
        let p = poly(&[(&[1], -1), (&[-1], 0)]);
        match lp_solve(&p, &rv(&[1]), Direction::Maximize).unwrap() {
            LpOutcome::Infeasible { farkas } => {
                assert_eq!(farkas, rv(&[1, 1]));
                assert!(verify_farkas(&p, &farkas));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lp_unbounded_axis() {
        // {-x <= 0}, maximize x -> unbounded along (1)
        let p = poly(&[(&[-1], 0)]);
        match lp_solve(&p, &rv(&[1]), Direction::Maximize).unwrap() {
            LpOutcome::Unbounded { ray } => assert_eq!(ray, rv(&[1])),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn vertices_unit_square() {
        let p = poly(&[(&[1, 0], 1), (&[0, 1], 1), (&[-1, 0], 0), (&[0, -1], 0)]);
        let vs = vertices(&p).unwrap();
        let expect: Vec<Vec<Rat>> =
            vec![rv(&[0, 0]), rv(&[0, 1]), rv(&[1, 0]), rv(&[1, 1])];
        assert_eq!(vs, expect);
    }

    #[test]
    fn vertices_simplex() {
        let p = poly(&[(&[-1, 0], 0), (&[0, -1], 0), (&[1, 1], 2)]);
        let vs = vertices(&p).unwrap();
        let expect: Vec<Vec<Rat>> = vec![rv(&[0, 0]), rv(&[0, 2]), rv(&[2, 0])];
        assert_eq!(vs, expect);
    }

    /// Independent oracle for the 2-d cross-check: intersect every pair of
    /// constraint lines directly and keep feasible intersection points.
    fn pairwise_intersections_2d(p: &Polyhedron) -> Vec<Vec<Rat>> {
        let mut found: BTreeSet<Vec<Rat>> = BTreeSet::new();
        for i in 0..p.rows() {
            for j in i + 1..p.rows() {
                let (ai, bi) = p.row(i);
                let (aj, bj) = p.row(j);
                let det = &ai[0] * &aj[1] - &ai[1] * &aj[0];
                if det.is_zero() {
                    continue;
                }
                let x = (bi * &aj[1] - &ai[1] * bj) / &det;
                let y = (&ai[0] * bj - bi * &aj[0]) / &det;
                let pt = vec![x, y];
                if p.contains(&pt) {
                    found.insert(pt);
                }
            }
        }
        found.into_iter().collect()
    }

    #[test]
    fn vertices_cross_checked_against_pair_intersections() {
        // {x >= 0, 2x1 - 3x2 <= 1, x1 <= 4}
        let p = poly(&[(&[-1, 0], 0), (&[0, -1], 0), (&[2, -3], 1), (&[1, 0], 4)]);
        let oracle = pairwise_intersections_2d(&p);
        let expect: Vec<Vec<Rat>> = vec![
            rv(&[0, 0]),
            vec![rat(1, 2), rat_int(0)],
            vec![rat_int(4), rat(7, 3)],
        ];
        assert_eq!(oracle, expect);
        assert_eq!(vertices(&p).unwrap(), expect);
    }

    #[test]
    fn vertices_degenerate_segment() {
        // {x1 = 0, 0 <= x2 <= 1}: a vertical segment in R^2
        let p = poly(&[(&[1, 0], 0), (&[-1, 0], 0), (&[0, 1], 1), (&[0, -1], 0)]);
        let vs = vertices(&p).unwrap();
        assert_eq!(vs, vec![rv(&[0, 0]), rv(&[0, 1])]);
    }

    #[test]
    fn vertices_empty_is_error() {
        let p = poly(&[(&[1], -1), (&[-1], 0)]);
        assert_eq!(vertices(&p).unwrap_err(), GeometryError::Empty);
    }

    #[test]
    fn width_examples() {
        let square = poly(&[(&[1, 0], 1), (&[0, 1], 1), (&[-1, 0], 0), (&[0, -1], 0)]);
        assert_eq!(width_along(&square, &[int(1), int(0)]).unwrap(), Width::Finite(rat_int(1)));

        let simplex = poly(&[(&[-1, 0], 0), (&[0, -1], 0), (&[1, 1], 2)]);
        assert_eq!(width_along(&simplex, &[int(1), int(1)]).unwrap(), Width::Finite(rat_int(2)));

        let quadrant = poly(&[(&[-1, 0], 0), (&[0, -1], 0)]);
        assert_eq!(width_along(&quadrant, &[int(1), int(0)]).unwrap(), Width::Infinite);
        // recession test agrees
        assert!(quadrant.recession_contains(&rv(&[1, 0])));

        let empty = poly(&[(&[1], -1), (&[-1], 0)]);
        assert_eq!(width_along(&empty, &[int(1)]).unwrap_err(), GeometryError::Empty);
        assert_eq!(
            width_along(&square, &[int(0), int(0)]).unwrap_err(),
            GeometryError::ZeroDirection
        );
    }

    #[test]
    fn operator_norm_examples() {
        // identity 2x2: spectral 1, Frobenius sqrt(2); bound in [1, 2]
        let id = vec![rv(&[1, 0]), rv(&[0, 1])];
        let b = operator_norm_upper(&id);
        assert!(b >= rat_int(1) && b <= rat_int(2));
        // 1x1 (2) -> exactly 2
        assert_eq!(operator_norm_upper(&[rv(&[2])]), rat_int(2));
        // all-ones 2x2 -> exactly 2 (eigenvalue 2, Frobenius 2)
        let ones = vec![rv(&[1, 1]), rv(&[1, 1])];
        assert_eq!(operator_norm_upper(&ones), rat_int(2));
    }
}
