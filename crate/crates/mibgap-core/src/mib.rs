//! The mixed-integer bilinear system model: bilinear rows
//! `x^T A_i y + b_i^T y <= c_i` over integer `x` and real `y`, linear blocks
//! on each variable group, exact slack checking, boundedness analysis, and
//! the standard-form transformation.

use crate::geometry::{self, Direction, LpOutcome, Polyhedron};
use crate::num::{ceil_int, rat_vec, sqrt_upper, to_rat, Int, Rat};
use crate::semilinear::{self, HybridLinearSet, SemilinearError};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MibError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operation requires a {expected:?}-form system")]
    WrongForm { expected: Form },
    #[error(transparent)]
    Semilinear(#[from] SemilinearError),
}

/// One bilinear row `x^T a y + b^T y <= c`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BilinearRow {
    /// m x n integer matrix
    pub a: Vec<Vec<Int>>,
    /// length-n integer vector
    pub b: Vec<Int>,
    pub c: Int,
}

/// `rows . v <= rhs` over one variable group.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearBlock {
    pub rows: Vec<Vec<Int>>,
    pub rhs: Vec<Int>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// arbitrary integer-linear block, bilinear rows carry no extra linear term
    General,
    /// integer block is exactly `x >= 0`; bilinear rows may carry `b^T y`
    Standard,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MibSystem {
    pub m: usize,
    pub n: usize,
    pub bilinear: Vec<BilinearRow>,
    /// `c x <= d` on the integer variables
    pub int_linear: LinearBlock,
    /// `e y <= f` on the real variables
    pub real_linear: LinearBlock,
    pub form: Form,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub x: Vec<Int>,
    pub y: Vec<Rat>,
}

/// Identifies a constraint row in a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowRef {
    Bilinear(usize),
    IntLinear(usize),
    RealLinear(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    /// all rows hold and every bilinear row has margin >= eps
    SatWithSlack { margin: Rat },
    /// all rows hold but some bilinear margin is below eps
    SatNoSlack { margin: Rat },
    Violated { row: RowRef },
}

#[derive(Debug, Clone)]
pub enum Boundedness {
    Bounded { kappa1_upper: Rat },
    Unbounded { ray: Vec<Rat> },
}

/// Affine change of variables `x = w + p z` recorded by standard-form
/// transformations and splits, used to map witnesses back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    pub w: Vec<Int>,
    /// period columns; z has one coordinate per column
    pub p: Vec<Vec<Int>>,
}

impl AffineMap {
    pub fn identity(m: usize) -> Self {
        AffineMap {
            w: vec![Int::zero(); m],
            p: (0..m)
                .map(|i| (0..m).map(|j| if i == j { Int::one() } else { Int::zero() }).collect())
                .collect(),
        }
    }

    pub fn apply(&self, z: &[Int]) -> Vec<Int> {
        assert_eq!(z.len(), self.p.len());
        (0..self.w.len())
            .map(|i| {
                let shift: Int = self.p.iter().zip(z).map(|(col, zj)| &col[i] * zj).sum();
                &self.w[i] + shift
            })
            .collect()
    }

    /// `self` followed by mapping through `outer` (outer . self).
    pub fn compose(outer: &AffineMap, inner: &AffineMap) -> AffineMap {
        let w = outer.apply(&inner.w);
        let p = inner
            .p
            .iter()
            .map(|col| {
                (0..outer.w.len())
                    .map(|i| outer.p.iter().zip(col).map(|(oc, cj)| &oc[i] * cj).sum())
                    .collect()
            })
            .collect();
        AffineMap { w, p }
    }
}

impl MibSystem {
    pub fn new(
        m: usize,
        n: usize,
        bilinear: Vec<BilinearRow>,
        int_linear: LinearBlock,
        real_linear: LinearBlock,
        form: Form,
    ) -> Result<Self, MibError> {
        for (i, row) in bilinear.iter().enumerate() {
            if row.a.len() != m || row.a.iter().any(|r| r.len() != n) || row.b.len() != n {
                return Err(MibError::DimensionMismatch(format!("bilinear row {i}")));
            }
            if form == Form::General && row.b.iter().any(|v| !v.is_zero()) {
                return Err(MibError::DimensionMismatch(format!(
                    "bilinear row {i} carries a linear term in a general-form system"
                )));
            }
        }
        if int_linear.rows.len() != int_linear.rhs.len()
            || int_linear.rows.iter().any(|r| r.len() != m)
        {
            return Err(MibError::DimensionMismatch("integer-linear block".into()));
        }
        if real_linear.rows.len() != real_linear.rhs.len()
            || real_linear.rows.iter().any(|r| r.len() != n)
        {
            return Err(MibError::DimensionMismatch("real-linear block".into()));
        }
        let sys = MibSystem { m, n, bilinear, int_linear, real_linear, form };
        if form == Form::Standard && !sys.has_standard_int_block() {
            return Err(MibError::WrongForm { expected: Form::Standard });
        }
        Ok(sys)
    }

    /// Standard integer block: exactly the rows `-x_i <= 0` for each i.
    fn has_standard_int_block(&self) -> bool {
        if self.int_linear.rows.len() != self.m {
            return false;
        }
        let mut seen = vec![false; self.m];
        for (row, rhs) in self.int_linear.rows.iter().zip(&self.int_linear.rhs) {
            if !rhs.is_zero() {
                return false;
            }
            let mut idx = None;
            for (j, v) in row.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                if *v != -Int::one() || idx.is_some() {
                    return false;
                }
                idx = Some(j);
            }
            match idx {
                Some(j) if !seen[j] => seen[j] = true,
                _ => return false,
            }
        }
        seen.iter().all(|&s| s)
    }

    pub fn standard_int_block(m: usize) -> LinearBlock {
        LinearBlock {
            rows: (0..m)
                .map(|i| (0..m).map(|j| if i == j { -Int::one() } else { Int::zero() }).collect())
                .collect(),
            rhs: vec![Int::zero(); m],
        }
    }

    /// Largest absolute constant anywhere in the system, recomputed fresh.
    pub fn h(&self) -> Int {
        let mut h = Int::zero();
        let mut upd = |v: &Int| {
            let a = v.abs();
            if a > h {
                h = a;
            }
        };
        for row in &self.bilinear {
            row.a.iter().flatten().for_each(&mut upd);
            row.b.iter().for_each(&mut upd);
            upd(&row.c);
        }
        self.int_linear.rows.iter().flatten().for_each(&mut upd);
        self.int_linear.rhs.iter().for_each(&mut upd);
        self.real_linear.rows.iter().flatten().for_each(&mut upd);
        self.real_linear.rhs.iter().for_each(&mut upd);
        h
    }

    /// Value of `x^T a y + b^T y` for bilinear row `i`.
    pub fn bilinear_value(&self, i: usize, x: &[Int], y: &[Rat]) -> Rat {
        let row = &self.bilinear[i];
        let mut acc = Rat::zero();
        for (s, xs) in x.iter().enumerate() {
            if xs.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                if !row.a[s][j].is_zero() {
                    acc += to_rat(&(xs * &row.a[s][j])) * yj;
                }
            }
        }
        for (j, yj) in y.iter().enumerate() {
            if !row.b[j].is_zero() {
                acc += to_rat(&row.b[j]) * yj;
            }
        }
        acc
    }

    /// Effective real-row coefficients of bilinear row `i` once `x` is fixed:
    /// `(x^T a + b^T) y <= c`.
    pub fn bilinear_row_at_x(&self, i: usize, x: &[Int]) -> (Vec<Int>, Int) {
        let row = &self.bilinear[i];
        let coeffs: Vec<Int> = (0..self.n)
            .map(|j| {
                let s: Int = x.iter().enumerate().map(|(s, xs)| xs * &row.a[s][j]).sum();
                s + &row.b[j]
            })
            .collect();
        (coeffs, row.c.clone())
    }

    /// The real-block polyhedron `{ y : e y <= f }`.
    pub fn real_polyhedron(&self) -> Polyhedron {
        let a: Vec<Vec<Rat>> = self.real_linear.rows.iter().map(|r| rat_vec(r)).collect();
        let b: Vec<Rat> = self.real_linear.rhs.iter().map(to_rat).collect();
        Polyhedron::new(a, b).expect("validated block")
    }

    /// The integer-block polyhedron over real x.
    pub fn int_polyhedron(&self) -> Polyhedron {
        let a: Vec<Vec<Rat>> = self.int_linear.rows.iter().map(|r| rat_vec(r)).collect();
        let b: Vec<Rat> = self.int_linear.rhs.iter().map(to_rat).collect();
        Polyhedron::new(a, b).expect("validated block")
    }

    /// Canonical ordering and deduplication of rows (used before hashing).
    pub fn normalized(&self) -> MibSystem {
        let mut sys = self.clone();
        sys.bilinear.sort();
        sys.bilinear.dedup();
        let mut int_pairs: Vec<(Vec<Int>, Int)> =
            sys.int_linear.rows.iter().cloned().zip(sys.int_linear.rhs.iter().cloned()).collect();
        int_pairs.sort();
        int_pairs.dedup();
        sys.int_linear = LinearBlock {
            rows: int_pairs.iter().map(|(r, _)| r.clone()).collect(),
            rhs: int_pairs.into_iter().map(|(_, v)| v).collect(),
        };
        let mut real_pairs: Vec<(Vec<Int>, Int)> =
            sys.real_linear.rows.iter().cloned().zip(sys.real_linear.rhs.iter().cloned()).collect();
        real_pairs.sort();
        real_pairs.dedup();
        sys.real_linear = LinearBlock {
            rows: real_pairs.iter().map(|(r, _)| r.clone()).collect(),
            rhs: real_pairs.into_iter().map(|(_, v)| v).collect(),
        };
        sys
    }
}

/// Exact slack classification of an assignment. The slack requirement
/// applies to bilinear rows only; linear rows must simply hold.
pub fn check_assignment(
    s: &MibSystem,
    a: &Assignment,
    eps: &Rat,
) -> Result<CheckOutcome, MibError> {
    assert!(eps.is_positive(), "eps must be positive");
    if a.x.len() != s.m || a.y.len() != s.n {
        return Err(MibError::DimensionMismatch(format!(
            "assignment has ({}, {}) variables, system needs ({}, {})",
            a.x.len(),
            a.y.len(),
            s.m,
            s.n
        )));
    }
    for (i, (row, rhs)) in s.int_linear.rows.iter().zip(&s.int_linear.rhs).enumerate() {
        if crate::num::dot_int(row, &a.x) > *rhs {
            return Ok(CheckOutcome::Violated { row: RowRef::IntLinear(i) });
        }
    }
    for (i, (row, rhs)) in s.real_linear.rows.iter().zip(&s.real_linear.rhs).enumerate() {
        let v: Rat = row.iter().zip(&a.y).map(|(c, y)| to_rat(c) * y).sum();
        if v > to_rat(rhs) {
            return Ok(CheckOutcome::Violated { row: RowRef::RealLinear(i) });
        }
    }
    let mut margin: Option<Rat> = None;
    for i in 0..s.bilinear.len() {
        let v = s.bilinear_value(i, &a.x, &a.y);
        let gap = to_rat(&s.bilinear[i].c) - v;
        if gap.is_negative() {
            return Ok(CheckOutcome::Violated { row: RowRef::Bilinear(i) });
        }
        margin = Some(match margin {
            None => gap,
            Some(m) => m.min(gap),
        });
    }
    let margin = margin.unwrap_or_else(|| eps.clone());
    if margin >= *eps {
        Ok(CheckOutcome::SatWithSlack { margin })
    } else {
        Ok(CheckOutcome::SatNoSlack { margin })
    }
}

/// Decide whether `{ y : e y <= f }` is a polytope (LP per coordinate
/// direction). When bounded, report the ceiling of `sqrt(m) H^(m^2+m)` as a
/// rational radius bound; any upper bound is sound downstream, a larger one
/// only shrinks the rounding ball.
pub fn is_bounded(s: &MibSystem) -> Boundedness {
    let poly = s.real_polyhedron();
    if !poly.is_empty() {
        for j in 0..s.n {
            let mut obj = vec![Rat::zero(); s.n];
            obj[j] = Rat::one();
            for dir in [Direction::Maximize, Direction::Minimize] {
                match geometry::lp_solve(&poly, &obj, dir) {
                    Ok(LpOutcome::Unbounded { ray }) => {
                        return Boundedness::Unbounded { ray };
                    }
                    Ok(_) => {}
                    Err(_) => unreachable!("validated dimensions"),
                }
            }
        }
    }
    Boundedness::Bounded { kappa1_upper: kappa1_upper(s.m, &s.h()) }
}

/// `ceil( sqrt_upper(m) * H^(m^2+m) )` with `H` clamped to at least 1.
pub fn kappa1_upper(m: usize, h: &Int) -> Rat {
    let h = if h < &Int::one() { Int::one() } else { h.clone() };
    let exp = (m * m + m) as u32;
    let pow = to_rat(&h.pow(exp));
    to_rat(&ceil_int(&(sqrt_upper(&to_rat(&Int::from(m as i64))) * pow)))
}

/// Transform a system to a finite family of standard-form systems via the
/// semilinear decomposition of its integer block. Each output carries the
/// affine map back to the input's integer variables; solutions correspond
/// piecewise one-one with identical slack margins.
pub fn to_standard_form(s: &MibSystem) -> Result<Vec<(MibSystem, AffineMap)>, MibError> {
    if s.form == Form::Standard {
        return Ok(vec![(s.clone(), AffineMap::identity(s.m))]);
    }
    if s.m == 0 {
        let mut out = s.clone();
        out.form = Form::Standard;
        out.int_linear = LinearBlock::default();
        return Ok(vec![(out, AffineMap::identity(0))]);
    }
    let hls: HybridLinearSet = semilinear::decompose(&s.int_linear.rows, &s.int_linear.rhs)?;
    let mut out = Vec::new();
    for piece in &hls.pieces {
        let map = AffineMap { w: piece.base.clone(), p: piece.periods.clone() };
        out.push((substitute(s, &map.w, &map.p)?, map));
    }
    Ok(out)
}

/// Apply the change of variables `x = w + p z` (z integer, z >= 0). The
/// result is in standard form over `p.len()` integer variables; the caller
/// must guarantee that every `w + p z` with `z >= 0` satisfies the input's
/// integer block (decompositions produced by this crate do).
pub fn substitute(s: &MibSystem, w: &[Int], p: &[Vec<Int>]) -> Result<MibSystem, MibError> {
    if w.len() != s.m || p.iter().any(|col| col.len() != s.m) {
        return Err(MibError::DimensionMismatch(format!(
            "substitution map over {} variables applied to a system with m = {}",
            w.len(),
            s.m
        )));
    }
    let k = p.len();
    let bilinear = s
        .bilinear
        .iter()
        .map(|row| {
            let a: Vec<Vec<Int>> = (0..k)
                .map(|t| {
                    (0..s.n)
                        .map(|j| (0..s.m).map(|sdx| &p[t][sdx] * &row.a[sdx][j]).sum())
                        .collect()
                })
                .collect();
            let b: Vec<Int> = (0..s.n)
                .map(|j| {
                    let shift: Int = (0..s.m).map(|sdx| &w[sdx] * &row.a[sdx][j]).sum();
                    &row.b[j] + shift
                })
                .collect();
            BilinearRow { a, b, c: row.c.clone() }
        })
        .collect();
    MibSystem::new(
        k,
        s.n,
        bilinear,
        MibSystem::standard_int_block(k),
        s.real_linear.clone(),
        Form::Standard,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat, rat_int};

    fn iv(v: &[i64]) -> Vec<Int> {
        v.iter().map(|&x| int(x)).collect()
    }

    /// { x y <= 1, 0 <= y <= 1, x >= 0 } in standard form, m = n = 1.
    pub(crate) fn toy_system() -> MibSystem {
        MibSystem::new(
            1,
            1,
            vec![BilinearRow { a: vec![iv(&[1])], b: iv(&[0]), c: int(1) }],
            MibSystem::standard_int_block(1),
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
            Form::Standard,
        )
        .unwrap()
    }

    #[test]
    fn check_assignment_slack_classes() {
        let s = toy_system();
        let eps = rat(1, 2);
        let a1 = Assignment { x: iv(&[1]), y: vec![rat_int(1)] };
        assert_eq!(
            check_assignment(&s, &a1, &eps).unwrap(),
            CheckOutcome::SatNoSlack { margin: rat_int(0) }
        );
        let a2 = Assignment { x: iv(&[1]), y: vec![rat(1, 4)] };
        assert_eq!(
            check_assignment(&s, &a2, &eps).unwrap(),
            CheckOutcome::SatWithSlack { margin: rat(3, 4) }
        );
        let a3 = Assignment { x: iv(&[2]), y: vec![rat_int(1)] };
        assert_eq!(
            check_assignment(&s, &a3, &eps).unwrap(),
            CheckOutcome::Violated { row: RowRef::Bilinear(0) }
        );
    }

    #[test]
    fn check_assignment_monotone_in_eps() {
        let s = toy_system();
        let a = Assignment { x: iv(&[1]), y: vec![rat(1, 4)] };
        // SatWithSlack at eps implies SatWithSlack at every smaller eps
        let epss = [rat(3, 4), rat(1, 2), rat(1, 4), rat(1, 8)];
        let mut was_slack = false;
        for eps in epss {
            let out = check_assignment(&s, &a, &eps).unwrap();
            let slack = matches!(out, CheckOutcome::SatWithSlack { .. });
            if was_slack {
                assert!(slack);
            }
            was_slack = slack;
        }
    }

    #[test]
    fn boundedness_and_kappa1() {
        let s = toy_system();
        match is_bounded(&s) {
            Boundedness::Bounded { kappa1_upper } => {
                // m = 1, H = 1: kappa1 = 1
                assert_eq!(kappa1_upper, rat_int(1));
            }
            other => panic!("unexpected {other:?}"),
        }
        // {y >= 0} alone is unbounded with ray (1)
        let unb = MibSystem::new(
            1,
            1,
            vec![],
            MibSystem::standard_int_block(1),
            LinearBlock { rows: vec![iv(&[-1])], rhs: iv(&[0]) },
            Form::Standard,
        )
        .unwrap();
        match is_bounded(&unb) {
            Boundedness::Unbounded { ray } => assert_eq!(ray, vec![rat_int(1)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn kappa1_reference_values() {
        assert_eq!(kappa1_upper(1, &int(1)), rat_int(1));
        assert_eq!(kappa1_upper(1, &int(2)), rat_int(4));
        // sqrt(2) <= 3/2, 3^6 = 729, ceil(3/2 * 729) = 1094
        assert_eq!(kappa1_upper(2, &int(3)), rat_int(1094));
    }

    #[test]
    fn h_recomputed() {
        let mut s = toy_system();
        assert_eq!(s.h(), int(1));
        s.bilinear[0].c = int(-7);
        assert_eq!(s.h(), int(7));
    }

    #[test]
    fn substitute_identity_is_syntactic_identity() {
        let s = toy_system();
        let id = AffineMap::identity(1);
        let out = substitute(&s, &id.w, &id.p).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn substitute_shift_folds_linear_term() {
        // {x y <= 3, 0 <= y <= 1, x >= 0}, x = 2 + z: z y + 2 y <= 3
        let s = MibSystem::new(
            1,
            1,
            vec![BilinearRow { a: vec![iv(&[1])], b: iv(&[0]), c: int(3) }],
            MibSystem::standard_int_block(1),
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
            Form::Standard,
        )
        .unwrap();
        let out = substitute(&s, &iv(&[2]), &[iv(&[1])]).unwrap();
        assert_eq!(out.bilinear[0].a, vec![iv(&[1])]);
        assert_eq!(out.bilinear[0].b, iv(&[2]));
        assert_eq!(out.bilinear[0].c, int(3));
    }

    #[test]
    fn substitute_preserves_slack_margins() {
        let s = MibSystem::new(
            2,
            2,
            vec![BilinearRow {
                a: vec![iv(&[1, -2]), iv(&[0, 3])],
                b: iv(&[1, 0]),
                c: int(5),
            }],
            MibSystem::standard_int_block(2),
            LinearBlock { rows: vec![iv(&[1, 0]), iv(&[0, 1]), iv(&[-1, 0]), iv(&[0, -1])], rhs: iv(&[2, 2, 0, 0]) },
            Form::Standard,
        )
        .unwrap();
        let w = iv(&[1, 0]);
        let p = vec![iv(&[2, 1])];
        let out = substitute(&s, &w, &p).unwrap();
        let map = AffineMap { w, p };
        let eps = rat(1, 4);
        for z0 in 0..4i64 {
            let z = iv(&[z0]);
            let x = map.apply(&z);
            for (ya, yb) in [(0i64, 0i64), (1, 1), (2, 0)] {
                let y = vec![rat(ya, 2), rat(yb, 3)];
                let inner = check_assignment(&out, &Assignment { x: z.clone(), y: y.clone() }, &eps).unwrap();
                let outer = check_assignment(&s, &Assignment { x: x.clone(), y }, &eps).unwrap();
                // identical slack classification and margins on bilinear rows
                match (inner, outer) {
                    (
                        CheckOutcome::SatWithSlack { margin: a },
                        CheckOutcome::SatWithSlack { margin: b },
                    )
                    | (
                        CheckOutcome::SatNoSlack { margin: a },
                        CheckOutcome::SatNoSlack { margin: b },
                    ) => assert_eq!(a, b),
                    (CheckOutcome::Violated { row: RowRef::Bilinear(a) }, CheckOutcome::Violated { row: RowRef::Bilinear(b) }) => {
                        assert_eq!(a, b)
                    }
                    (i, o) => panic!("classification mismatch: {i:?} vs {o:?}"),
                }
            }
        }
    }

    #[test]
    fn standard_form_of_general_system() {
        // integer block {x >= 2} (m = 1): one output via x = 2 + z
        let s = MibSystem::new(
            1,
            1,
            vec![BilinearRow { a: vec![iv(&[1])], b: iv(&[0]), c: int(3) }],
            LinearBlock { rows: vec![iv(&[-1])], rhs: iv(&[-2]) },
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
            Form::General,
        )
        .unwrap();
        let outs = to_standard_form(&s).unwrap();
        assert_eq!(outs.len(), 1);
        let (sys, map) = &outs[0];
        assert_eq!(sys.m, 1);
        assert_eq!(map.w, iv(&[2]));
        assert_eq!(sys.bilinear[0].b, iv(&[2]));
    }

    #[test]
    fn standard_form_finite_bases() {
        // {x1 + x2 = 2, x >= 0}: three outputs, each with zero integer vars
        let s = MibSystem::new(
            2,
            1,
            vec![BilinearRow { a: vec![iv(&[1]), iv(&[1])], b: iv(&[0]), c: int(4) }],
            LinearBlock {
                rows: vec![iv(&[1, 1]), iv(&[-1, -1]), iv(&[-1, 0]), iv(&[0, -1])],
                rhs: iv(&[2, -2, 0, 0]),
            },
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
            Form::General,
        )
        .unwrap();
        let outs = to_standard_form(&s).unwrap();
        assert_eq!(outs.len(), 3);
        assert!(outs.iter().all(|(sys, _)| sys.m == 0));
        let mut bases: Vec<Vec<Int>> = outs.iter().map(|(_, map)| map.w.clone()).collect();
        bases.sort();
        assert_eq!(bases, vec![iv(&[0, 2]), iv(&[1, 1]), iv(&[2, 0])]);
    }

    #[test]
    fn standard_form_of_standard_is_identity() {
        let s = toy_system();
        let outs = to_standard_form(&s).unwrap();
        assert_eq!(outs.len(), 1);
        assert_eq!(outs[0].0, s);
    }

    #[test]
    fn unpointed_general_system_rejected() {
        let s = MibSystem::new(
            2,
            1,
            vec![],
            LinearBlock { rows: vec![iv(&[1, 0])], rhs: iv(&[5]) },
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
            Form::General,
        )
        .unwrap();
        assert!(matches!(
            to_standard_form(&s),
            Err(MibError::Semilinear(SemilinearError::Unpointed))
        ));
    }
}
