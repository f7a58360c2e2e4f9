//! Hybrid linear set decompositions of integer solution sets of linear
//! constraint systems, and the change-of-variables substitution that drives
//! the variable-elimination recursion.
//!
//! The decomposition works in three stages: implied equalities of the real
//! relaxation are located by LP and solved over the integer lattice (Hermite
//! normal form), the remaining full-dimensional pointed polyhedron has its
//! recession cone covered by simplicial subcones spanned by linearly
//! independent extreme rays (conic Caratheodory), and each subcone
//! contributes pieces whose bases are the integer points of the vertex hull
//! plus the cone's fundamental parallelepiped. Pieces may overlap; the
//! denotation is their union.

use crate::geometry::{self, linalg, Direction, LpOutcome, Polyhedron};
use crate::num::{ceil_int, floor_int, int, rat_vec, to_rat, Int, Rat};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;
use thiserror::Error;

pub use crate::mib::substitute;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemilinearError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("solution set contains a line; caller must supply nonnegativity rows")]
    Unpointed,
}

/// `{ base + periods . z : z integer >= 0 }` with independent period columns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinearSet {
    pub base: Vec<Int>,
    /// period columns, each nonzero; at most the affine-hull dimension many
    pub periods: Vec<Vec<Int>>,
}

/// Finite union of linear sets over a shared ambient dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridLinearSet {
    pub dim: usize,
    pub pieces: Vec<LinearSet>,
}

impl LinearSet {
    /// Exact membership test. Period columns produced by this crate are
    /// linearly independent, giving a unique rational solve; dependent
    /// columns fall back to a bounded multiplier search.
    pub fn contains(&self, x: &[Int]) -> bool {
        if x.len() != self.base.len() {
            return false;
        }
        let k = self.periods.len();
        if k == 0 {
            return x == self.base.as_slice();
        }
        let m = self.base.len();
        let a: Vec<Vec<Rat>> = (0..m)
            .map(|i| (0..k).map(|j| to_rat(&self.periods[j][i])).collect())
            .collect();
        let rhs: Vec<Rat> = (0..m).map(|i| to_rat(&(&x[i] - &self.base[i]))).collect();
        if linalg::rank(&a) == k {
            match linalg::solve_general(&a, &rhs) {
                None => false,
                Some(z) => z.iter().all(|v| v.is_integer() && !v.is_negative()),
            }
        } else {
            self.contains_by_search(x)
        }
    }

    fn contains_by_search(&self, x: &[Int]) -> bool {
        // best-effort bounded DFS for degenerate period matrices
        let cap: Int = x
            .iter()
            .chain(&self.base)
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Int::zero)
            * int(4)
            + int(8);
        let mut seen: BTreeSet<Vec<Int>> = BTreeSet::new();
        let mut stack = vec![self.base.clone()];
        while let Some(cur) = stack.pop() {
            if cur == x {
                return true;
            }
            if !seen.insert(cur.clone()) {
                continue;
            }
            for p in &self.periods {
                let next: Vec<Int> = cur.iter().zip(p).map(|(a, b)| a + b).collect();
                if next.iter().all(|v| v.abs() <= cap) {
                    stack.push(next);
                }
            }
        }
        false
    }
}

impl HybridLinearSet {
    pub fn empty(dim: usize) -> Self {
        HybridLinearSet { dim, pieces: Vec::new() }
    }

    pub fn contains(&self, x: &[Int]) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }
}

fn int_rows_to_poly(c: &[Vec<Int>], d: &[Int]) -> Polyhedron {
    let a: Vec<Vec<Rat>> = c.iter().map(|r| rat_vec(r)).collect();
    let b: Vec<Rat> = d.iter().map(to_rat).collect();
    Polyhedron::new(a, b).expect("consistent integer rows")
}

/// Rows of `c x <= d` that hold with equality on the whole real relaxation.
fn implied_equalities(c: &[Vec<Int>], d: &[Int], poly: &Polyhedron) -> Vec<usize> {
    let mut eq = Vec::new();
    for (i, row) in c.iter().enumerate() {
        let obj = rat_vec(row);
        match geometry::lp_solve(poly, &obj, Direction::Minimize) {
            Ok(LpOutcome::Feasible { value, .. }) => {
                if value == to_rat(&d[i]) {
                    eq.push(i);
                }
            }
            Ok(LpOutcome::Unbounded { .. }) => {}
            Ok(LpOutcome::Infeasible { .. }) | Err(_) => unreachable!("feasibility pre-checked"),
        }
    }
    eq
}

/// Extreme rays of the pointed cone `{ t : g t <= 0 }`, as primitive integer
/// vectors, found through rank-(r-1) row subsets.
fn extreme_rays(g: &[Vec<Int>], r: usize) -> Vec<Vec<Int>> {
    let mut rays: BTreeSet<Vec<Int>> = BTreeSet::new();
    if r == 0 {
        return Vec::new();
    }
    let rows = g.len();
    let satisfied = |v: &[Rat]| -> bool {
        g.iter().all(|row| {
            let s: Rat = row.iter().zip(v).map(|(a, x)| to_rat(a) * x).sum();
            !s.is_positive()
        })
    };
    let mut consider = |v: Vec<Rat>| {
        let neg: Vec<Rat> = v.iter().map(|x| -x.clone()).collect();
        let dir = if satisfied(&v) {
            Some(v)
        } else if satisfied(&neg) {
            Some(neg)
        } else {
            None
        };
        if let Some(d) = dir {
            let p = crate::num::primitive_direction(&d);
            if p.iter().any(|x| !x.is_zero()) {
                rays.insert(p);
            }
        }
    };
    if r == 1 {
        consider(vec![Rat::one()]);
        return rays.into_iter().collect();
    }
    // all (r-1)-subsets of rows
    let k = r - 1;
    if rows < k {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let sub: Vec<Vec<Rat>> = idx.iter().map(|&i| rat_vec(&g[i])).collect();
        if linalg::rank(&sub) == k {
            let ns = linalg::nullspace(&sub);
            if ns.len() == 1 {
                consider(ns.into_iter().next().unwrap());
            }
        }
        let mut i = k;
        let mut done = false;
        loop {
            if i == 0 {
                done = true;
                break;
            }
            i -= 1;
            if idx[i] != i + rows - k {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
        if done {
            break;
        }
    }
    rays.into_iter().collect()
}

/// Membership of `point` in `conv(verts) + { sum mu_i p_i : mu in [0,1] }`,
/// decided by exact LP feasibility.
fn minkowski_contains(verts: &[Vec<Rat>], gens: &[Vec<Int>], point: &[Int]) -> bool {
    let r = point.len();
    let nv = verts.len();
    let ng = gens.len();
    // variables: lambda (nv), mu (ng)
    let dim = nv + ng;
    let mut a: Vec<Vec<Rat>> = Vec::new();
    let mut b: Vec<Rat> = Vec::new();
    // coordinate equalities as inequality pairs
    for co in 0..r {
        let mut row = vec![Rat::zero(); dim];
        for (v, vert) in verts.iter().enumerate() {
            row[v] = vert[co].clone();
        }
        for (gidx, gen) in gens.iter().enumerate() {
            row[nv + gidx] = to_rat(&gen[co]);
        }
        let rhs = to_rat(&point[co]);
        a.push(row.clone());
        b.push(rhs.clone());
        a.push(row.into_iter().map(|x| -x).collect());
        b.push(-rhs);
    }
    // sum lambda = 1
    let mut row = vec![Rat::zero(); dim];
    for v in 0..nv {
        row[v] = Rat::one();
    }
    a.push(row.clone());
    b.push(Rat::one());
    a.push(row.into_iter().map(|x| -x).collect());
    b.push(-Rat::one());
    // 0 <= lambda, 0 <= mu <= 1
    for i in 0..dim {
        let mut lo = vec![Rat::zero(); dim];
        lo[i] = -Rat::one();
        a.push(lo);
        b.push(Rat::zero());
    }
    for i in nv..dim {
        let mut hi = vec![Rat::zero(); dim];
        hi[i] = Rat::one();
        a.push(hi);
        b.push(Rat::one());
    }
    let poly = Polyhedron::new(a, b).expect("consistent rows");
    let zero = vec![Rat::zero(); dim];
    matches!(
        geometry::lp_solve(&poly, &zero, Direction::Maximize),
        Ok(LpOutcome::Feasible { .. })
    )
}

/// Drop bases that are another kept base plus a single period step.
/// Processing in increasing order of a functional positive on the cone keeps
/// the rule well-founded.
fn prune_bases(bases: Vec<Vec<Int>>, gens: &[Vec<Int>]) -> Vec<Vec<Int>> {
    if gens.is_empty() || bases.is_empty() {
        return bases;
    }
    let r = gens[0].len();
    // phi with phi . g = 1 for every generator (generators are independent)
    let at: Vec<Vec<Rat>> = gens.iter().map(|g| rat_vec(g)).collect();
    let rhs = vec![Rat::one(); gens.len()];
    let phi = linalg::solve_general(&at, &rhs).unwrap_or_else(|| vec![Rat::zero(); r]);
    let mut order: Vec<Vec<Int>> = bases;
    order.sort_by(|x, y| {
        let fx: Rat = x.iter().zip(&phi).map(|(v, p)| to_rat(v) * p).sum();
        let fy: Rat = y.iter().zip(&phi).map(|(v, p)| to_rat(v) * p).sum();
        fx.cmp(&fy).then_with(|| x.cmp(y))
    });
    let mut kept: BTreeSet<Vec<Int>> = BTreeSet::new();
    for w in order {
        let covered = gens.iter().any(|p| {
            let prev: Vec<Int> = w.iter().zip(p).map(|(a, b)| a - b).collect();
            kept.contains(&prev)
        });
        if !covered {
            kept.insert(w);
        }
    }
    kept.into_iter().collect()
}

fn iter_box(lo: &[Int], hi: &[Int], mut f: impl FnMut(&[Int])) {
    let r = lo.len();
    if r == 0 {
        f(&[]);
        return;
    }
    let mut cur: Vec<Int> = lo.to_vec();
    if (0..r).any(|i| lo[i] > hi[i]) {
        return;
    }
    loop {
        f(&cur);
        let mut i = 0;
        loop {
            cur[i] += 1;
            if cur[i] <= hi[i] {
                break;
            }
            cur[i] = lo[i].clone();
            i += 1;
            if i == r {
                return;
            }
        }
    }
}

/// Decompose the full-dimensional pointed polyhedron `{ t : g t <= h }`.
fn decompose_fulldim(g: &[Vec<Int>], h: &[Int], r: usize) -> Vec<LinearSet> {
    if r == 0 {
        return if h.iter().all(|v| !v.is_negative()) {
            vec![LinearSet { base: Vec::new(), periods: Vec::new() }]
        } else {
            Vec::new()
        };
    }
    let poly = int_rows_to_poly(g, h);
    if poly.is_empty() {
        return Vec::new();
    }
    let verts = geometry::vertices(&poly).expect("pointed non-empty polyhedron has vertices");
    assert!(!verts.is_empty(), "pointed polyhedron without vertices");
    let rays = extreme_rays(g, r);

    let in_poly = |t: &[Int]| -> bool {
        g.iter().zip(h).all(|(row, rhs)| crate::num::dot_int(row, t) <= *rhs)
    };

    let mut pieces = Vec::new();
    if rays.is_empty() {
        // bounded: bases are exactly the integer points
        let mut lo = vec![Int::zero(); r];
        let mut hi = vec![Int::zero(); r];
        for co in 0..r {
            let min = verts.iter().map(|v| &v[co]).min().unwrap();
            let max = verts.iter().map(|v| &v[co]).max().unwrap();
            lo[co] = ceil_int(min);
            hi[co] = floor_int(max);
        }
        iter_box(&lo, &hi, |t| {
            if in_poly(t) {
                pieces.push(LinearSet { base: t.to_vec(), periods: Vec::new() });
            }
        });
        return pieces;
    }

    let ray_rats: Vec<Vec<Rat>> = rays.iter().map(|g| rat_vec(g)).collect();
    let rho = linalg::rank(&ray_rats);
    // every linearly independent rho-subset of extreme rays spans a
    // simplicial subcone; together they cover the recession cone
    let nr = rays.len();
    let mut subset: Vec<usize> = (0..rho).collect();
    loop {
        let gens: Vec<Vec<Int>> = subset.iter().map(|&i| rays[i].clone()).collect();
        let gr: Vec<Vec<Rat>> = gens.iter().map(|g| rat_vec(g)).collect();
        if linalg::rank(&gr) == rho {
            let mut lo = vec![Int::zero(); r];
            let mut hi = vec![Int::zero(); r];
            for co in 0..r {
                let vmin = verts.iter().map(|v| &v[co]).min().unwrap().clone();
                let vmax = verts.iter().map(|v| &v[co]).max().unwrap().clone();
                let neg: Int = gens.iter().map(|p| if p[co].is_negative() { p[co].clone() } else { Int::zero() }).sum();
                let pos: Int = gens.iter().map(|p| if p[co].is_positive() { p[co].clone() } else { Int::zero() }).sum();
                lo[co] = ceil_int(&(vmin + to_rat(&neg)));
                hi[co] = floor_int(&(vmax + to_rat(&pos)));
            }
            let mut bases = Vec::new();
            iter_box(&lo, &hi, |t| {
                if in_poly(t) && minkowski_contains(&verts, &gens, t) {
                    bases.push(t.to_vec());
                }
            });
            for base in prune_bases(bases, &gens) {
                pieces.push(LinearSet { base, periods: gens.clone() });
            }
        }
        // next combination
        let mut i = rho;
        let mut done = false;
        loop {
            if i == 0 {
                done = true;
                break;
            }
            i -= 1;
            if subset[i] != i + nr - rho {
                subset[i] += 1;
                for j in i + 1..rho {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
        if done {
            break;
        }
    }
    pieces
}

/// Decompose `{ x in Z^m : c x <= d }` into a hybrid linear set denoting it
/// exactly. The constraint rows must make the set pointed (no full line);
/// the pipeline guarantees this by always including `x >= 0` rows.
pub fn decompose(c: &[Vec<Int>], d: &[Int]) -> Result<HybridLinearSet, SemilinearError> {
    let m = c.first().map(|r| r.len()).unwrap_or(0);
    if c.len() != d.len() {
        return Err(SemilinearError::DimensionMismatch { expected: c.len(), got: d.len() });
    }
    for row in c {
        if row.len() != m {
            return Err(SemilinearError::DimensionMismatch { expected: m, got: row.len() });
        }
    }
    if m == 0 {
        return Ok(if d.iter().all(|v| !v.is_negative()) {
            HybridLinearSet {
                dim: 0,
                pieces: vec![LinearSet { base: Vec::new(), periods: Vec::new() }],
            }
        } else {
            HybridLinearSet::empty(0)
        });
    }
    let c_rat: Vec<Vec<Rat>> = c.iter().map(|r| rat_vec(r)).collect();
    if linalg::rank(&c_rat) < m {
        return Err(SemilinearError::Unpointed);
    }
    let poly = int_rows_to_poly(c, d);
    if poly.is_empty() {
        return Ok(HybridLinearSet::empty(m));
    }

    let eq_rows = implied_equalities(c, d, &poly);
    let (x0, lattice) = if eq_rows.is_empty() {
        let identity: Vec<Vec<Int>> = (0..m)
            .map(|i| (0..m).map(|j| if i == j { Int::one() } else { Int::zero() }).collect())
            .collect();
        (vec![Int::zero(); m], identity)
    } else {
        let e: Vec<Vec<Int>> = eq_rows.iter().map(|&i| c[i].clone()).collect();
        let gvec: Vec<Int> = eq_rows.iter().map(|&i| d[i].clone()).collect();
        match linalg::lattice_solve(&e, &gvec) {
            None => return Ok(HybridLinearSet::empty(m)),
            Some(sol) => sol,
        }
    };
    let r = lattice.len();
    // transform the non-equality rows into t-space: (c L) t <= d - c x0
    let eq_set: BTreeSet<usize> = eq_rows.iter().copied().collect();
    let mut gt: Vec<Vec<Int>> = Vec::new();
    let mut ht: Vec<Int> = Vec::new();
    for (i, row) in c.iter().enumerate() {
        if eq_set.contains(&i) {
            continue;
        }
        let trow: Vec<Int> = (0..r).map(|j| crate::num::dot_int(row, &lattice[j])).collect();
        let rhs = &d[i] - crate::num::dot_int(row, &x0);
        if trow.iter().all(|v| v.is_zero()) {
            if rhs.is_negative() {
                return Ok(HybridLinearSet::empty(m));
            }
            continue;
        }
        gt.push(trow);
        ht.push(rhs);
    }

    let t_pieces = decompose_fulldim(&gt, &ht, r);
    let mut pieces = Vec::new();
    for tp in t_pieces {
        let base: Vec<Int> = (0..m)
            .map(|i| {
                let shift: Int = (0..r).map(|j| &lattice[j][i] * &tp.base[j]).sum();
                &x0[i] + shift
            })
            .collect();
        let periods: Vec<Vec<Int>> = tp
            .periods
            .iter()
            .map(|p| (0..m).map(|i| (0..r).map(|j| &lattice[j][i] * &p[j]).sum()).collect())
            .collect();
        pieces.push(LinearSet { base, periods });
    }
    pieces.sort();
    pieces.dedup();

    diagnose_magnitudes(c, d, m, &pieces);
    Ok(HybridLinearSet { dim: m, pieces })
}

/// Non-blocking diagnostic: compare produced entry magnitudes against the
/// `(2 + (m+1) H)^m` reference bound for decompositions of this shape. The
/// algorithm here differs from the construction behind that bound, so
/// violations are logged rather than failed.
fn diagnose_magnitudes(c: &[Vec<Int>], d: &[Int], m: usize, pieces: &[LinearSet]) {
    let mut h = Int::one();
    for row in c {
        for v in row {
            h = h.max(v.abs());
        }
    }
    for v in d {
        h = h.max(v.abs());
    }
    let bound = (int(2) + int(m as i64 + 1) * h).pow(m as u32);
    for p in pieces {
        let worst = p
            .base
            .iter()
            .chain(p.periods.iter().flatten())
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Int::zero);
        if worst > bound {
            log::warn!(
                "decomposition entry magnitude {worst} exceeds the reference bound {bound} (m = {m})"
            );
        }
    }
}

/// Exhaustive agreement check between a hybrid linear set and
/// `{ x : c x <= d }` on the box `[0, bound]^m`.
pub fn window_check(hls: &HybridLinearSet, c: &[Vec<Int>], d: &[Int], bound: u64) -> bool {
    let m = hls.dim;
    let lo = vec![Int::zero(); m];
    let hi = vec![int(bound as i64); m];
    let mut ok = true;
    iter_box(&lo, &hi, |x| {
        if !ok {
            return;
        }
        let in_poly = c.iter().zip(d).all(|(row, rhs)| crate::num::dot_int(row, x) <= *rhs);
        let in_set = hls.contains(x);
        if in_poly != in_set {
            ok = false;
        }
    });
    ok
}
