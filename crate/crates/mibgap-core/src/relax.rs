//! The constant ledger and the strengthened real relaxation.
//!
//! For a standard-form system with slack `eps` the ledger collects, as exact
//! rationals: the radius bound `kappa1` on the real block, the rounding ball
//! radius `r`, the flatness bound and its strengthened threshold
//! `omega_hat`, the finite direction set `U` whose widths the relaxation
//! must certify, and the branch bounds `kappa2`, `kappa3`.
//!
//! The margin scheme makes a weakened-but-certified real kernel sufficient:
//! relaxed bilinear rows are strengthened to `c - 3 eps / 4` and the kernel
//! may weaken by `delta_s = min(eps/4, 1/2)`, so a weak witness still has
//! margin `eps/2`; width rows demand `omega_hat = flatness + 1` so a weak
//! pass still exceeds the flatness bound by `1/2`; and `U` is built from the
//! ball radius `r` derived from `eps/2`, keeping both directions of the
//! paper-level argument intact.

use crate::geometry::{self, Direction, LpOutcome, Polyhedron};
use crate::mib::{Boundedness, Form, MibSystem};
use crate::num::{isqrt_floor, rat_int, rat_vec, sqrt_upper, to_rat, Int, Rat};
use crate::realfeas::{PolyRow, RealProblem, VarBounds};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelaxError {
    #[error("flatness bound requires m >= 1")]
    BadDimension,
    #[error("the real block is unbounded")]
    UnboundedSystem,
    #[error("the real block is empty")]
    EmptyRealBlock,
    #[error("constant ledger requires at least one bilinear row")]
    NoBilinearRows,
    #[error("system must be in standard form")]
    NotStandardForm,
}

/// Configurable upper bounds on the lattice flatness constant. Defaults:
/// 1 for dimension 1, 9/4 for dimension 2 (a rational bound of
/// `1 + 2/sqrt(3)`), and the generous `2 m^3` beyond. SAT answers never
/// depend on these values because witnesses are verified; they only steer
/// how hard the rounding search is guaranteed to succeed.
#[derive(Debug, Clone, Default)]
pub struct FlatnessBounds {
    pub overrides: Vec<(usize, Rat)>,
}

impl FlatnessBounds {
    pub fn bound(&self, m: usize) -> Result<Rat, RelaxError> {
        if m < 1 {
            return Err(RelaxError::BadDimension);
        }
        if let Some((_, b)) = self.overrides.iter().find(|(mm, _)| *mm == m) {
            return Ok(b.clone());
        }
        Ok(match m {
            1 => Rat::one(),
            2 => crate::num::rat(9, 4),
            _ => rat_int(2 * (m as i64).pow(3)),
        })
    }
}

/// Default flatness bound for dimension `m`.
pub fn flatness_bound(m: usize) -> Result<Rat, RelaxError> {
    FlatnessBounds::default().bound(m)
}

/// The direction set `U`, or its size-bound summary when materializing it
/// would be astronomically large (soundly treated as "too many to split on").
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DirectionSet {
    /// sign-normalized (first nonzero coordinate positive), sorted by
    /// squared norm then lexicographically
    Materialized(Vec<Vec<Int>>),
    TooLarge { norm_sq_below: Rat },
}

impl DirectionSet {
    pub fn len(&self) -> Option<usize> {
        match self {
            DirectionSet::Materialized(v) => Some(v.len()),
            DirectionSet::TooLarge { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, DirectionSet::Materialized(v) if v.is_empty())
    }
}

#[derive(Debug, Clone)]
pub struct ConstantLedger {
    pub m: usize,
    pub h: Int,
    pub kappa1_upper: Rat,
    /// rounding ball radius `min(1, (eps/2) / (norm(A_i) kappa1))`
    pub r: Rat,
    /// flatness bound for dimension m
    pub omega_upper: Rat,
    /// strengthened width threshold `omega_upper + 1`
    pub omega_hat: Rat,
    pub u_set: DirectionSet,
    pub kappa2: Rat,
    pub kappa3: Rat,
}

/// Enumerate `U = { u != 0 sign-normalized : 2 r |u| < omega + 1/2 }`.
/// Exact comparison via `4 r^2 |u|^2 < (omega + 1/2)^2`.
pub fn enumerate_directions(m: usize, r: &Rat, omega: &Rat, cap: usize) -> DirectionSet {
    assert!(r.is_positive());
    let thr = omega + crate::num::rat(1, 2);
    let bound_sq = (&thr * &thr) / (rat_int(4) * r * r); // |u|^2 < bound_sq
    // integer cutoff on |u|^2
    let max_norm_sq = {
        let c = crate::num::ceil_int(&bound_sq);
        if to_rat(&c) == bound_sq {
            c - Int::one()
        } else {
            crate::num::floor_int(&bound_sq)
        }
    };
    if max_norm_sq < Int::one() {
        return DirectionSet::Materialized(Vec::new());
    }
    let max_coord = isqrt_floor(&max_norm_sq);
    // rough cardinality estimate before materializing
    let width = &max_coord * Int::from(2) + Int::one();
    let mut estimate = Int::one();
    for _ in 0..m {
        estimate *= &width;
    }
    if estimate > Int::from(cap as u64) {
        return DirectionSet::TooLarge { norm_sq_below: bound_sq };
    }
    let mc: i64 = max_coord.to_string().parse().expect("cap bounds the coordinate range");
    let mut out: Vec<Vec<Int>> = Vec::new();
    // odometer over [-mc, mc]^m
    let mut cur = vec![-mc; m];
    loop {
        let norm_sq: i64 = cur.iter().map(|&a| a * a).sum();
        if norm_sq > 0 && Int::from(norm_sq) <= max_norm_sq {
            let first = cur.iter().find(|&&a| a != 0).copied().unwrap();
            if first > 0 {
                out.push(cur.iter().map(|&a| Int::from(a)).collect());
            }
        }
        let mut k = 0;
        loop {
            cur[k] += 1;
            if cur[k] <= mc {
                break;
            }
            cur[k] = -mc;
            k += 1;
            if k == m {
                out.sort_by(|a, b| {
                    crate::num::norm2_sq_int(a).cmp(&crate::num::norm2_sq_int(b)).then(a.cmp(b))
                });
                return DirectionSet::Materialized(out);
            }
        }
    }
}

/// Compute the full constant ledger for a bounded standard-form system.
pub fn compute_constants(s: &MibSystem, eps: &Rat) -> Result<ConstantLedger, RelaxError> {
    compute_constants_with(s, eps, &FlatnessBounds::default(), 200_000)
}

pub fn compute_constants_with(
    s: &MibSystem,
    eps: &Rat,
    flatness: &FlatnessBounds,
    u_cap: usize,
) -> Result<ConstantLedger, RelaxError> {
    assert!(eps.is_positive(), "eps must be positive");
    if s.form != Form::Standard {
        return Err(RelaxError::NotStandardForm);
    }
    if s.bilinear.is_empty() {
        return Err(RelaxError::NoBilinearRows);
    }
    let kappa1 = match crate::mib::is_bounded(s) {
        Boundedness::Bounded { kappa1_upper } => kappa1_upper,
        Boundedness::Unbounded { .. } => return Err(RelaxError::UnboundedSystem),
    };
    let m = s.m;
    let h = s.h();
    let omega = flatness.bound(m.max(1))?;
    let omega_hat = &omega + Rat::one();

    // r = min(1, (eps/2) / (norm(A_i) kappa1)) over rows with nonzero matrix
    let half_eps = eps / rat_int(2);
    let mut r = Rat::one();
    for row in &s.bilinear {
        let a_rat: Vec<Vec<Rat>> = row.a.iter().map(|r| rat_vec(r)).collect();
        let norm = geometry::operator_norm_upper(&a_rat);
        if norm.is_zero() {
            continue;
        }
        let cand = &half_eps / (&norm * &kappa1);
        if cand < r {
            r = cand;
        }
    }

    let u_set = if m == 0 {
        DirectionSet::Materialized(Vec::new())
    } else {
        enumerate_directions(m, &r, &omega, u_cap)
    };

    let h_rat = to_rat(&h);
    let sqrt_m = sqrt_upper(&rat_int(m.max(1) as i64));
    let kappa2 =
        &omega_hat * (Rat::one() + &h_rat * (Rat::one() / eps) * (Rat::one() + &sqrt_m * &kappa1));
    let h_pow = to_rat(&if h.is_zero() { Int::zero() } else { h.pow((m * m) as u32) });
    let kappa3 = rat_int(m as i64) * h_pow / eps;

    Ok(ConstantLedger {
        m,
        h,
        kappa1_upper: kappa1,
        r,
        omega_upper: omega,
        omega_hat,
        u_set,
        kappa2,
        kappa3,
    })
}

/// The integer-side polyhedron at a fixed real point:
/// `P(y) = { x >= 0 : x^T A_i y + b_i^T y <= c_i }`.
pub fn p_of_y(s: &MibSystem, y: &[Rat]) -> Polyhedron {
    assert_eq!(y.len(), s.n);
    let mut a: Vec<Vec<Rat>> = Vec::new();
    let mut b: Vec<Rat> = Vec::new();
    for i in 0..s.bilinear.len() {
        let row = &s.bilinear[i];
        let coeffs: Vec<Rat> = (0..s.m)
            .map(|sdx| (0..s.n).map(|j| to_rat(&row.a[sdx][j]) * &y[j]).sum())
            .collect();
        let lin: Rat = (0..s.n).map(|j| to_rat(&row.b[j]) * &y[j]).sum();
        a.push(coeffs);
        b.push(to_rat(&row.c) - lin);
    }
    for i in 0..s.m {
        let mut row = vec![Rat::zero(); s.m];
        row[i] = -Rat::one();
        a.push(row);
        b.push(Rat::zero());
    }
    Polyhedron::new(a, b).expect("consistent rows")
}

/// Variable layout of a relaxed problem inside its kernel formulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelaxedLayout {
    pub n: usize,
    pub m: usize,
    /// `y` occupies 0..n, `x` occupies n..n+m, then one `(p, q)` block of
    /// `2 m` variables per encoded width direction
    pub pair_count: usize,
}

impl RelaxedLayout {
    pub fn y(&self, j: usize) -> usize {
        j
    }
    pub fn x(&self, i: usize) -> usize {
        self.n + i
    }
    pub fn p(&self, pair: usize, i: usize) -> usize {
        self.n + self.m + 2 * self.m * pair + i
    }
    pub fn q(&self, pair: usize, i: usize) -> usize {
        self.n + self.m + 2 * self.m * pair + self.m + i
    }
    pub fn total(&self) -> usize {
        self.n + self.m + 2 * self.m * self.pair_count
    }
}

/// The strengthened real relaxation of a standard-form system, ready for
/// the feasibility kernel.
#[derive(Debug, Clone)]
pub struct RelaxedProblem {
    pub problem: RealProblem,
    pub layout: RelaxedLayout,
    /// primitive width directions actually encoded as point pairs
    pub width_dirs: Vec<Vec<Int>>,
    /// true when the encoded pairs cover all of `U` (primitive directions
    /// imply their multiples); refutations are sound either way, the
    /// rounding guarantee needs full coverage
    pub full_width_coverage: bool,
    /// exact bounding box of the real block, from per-coordinate LPs
    pub y_box: Vec<(Rat, Rat)>,
    pub delta_s: Rat,
}

/// Exact bounding box of `{ y : E y <= f }` via 2n LPs.
pub fn real_block_box(s: &MibSystem) -> Result<Vec<(Rat, Rat)>, RelaxError> {
    let poly = s.real_polyhedron();
    let mut out = Vec::with_capacity(s.n);
    for j in 0..s.n {
        let mut obj = vec![Rat::zero(); s.n];
        obj[j] = Rat::one();
        let hi = match geometry::lp_solve(&poly, &obj, Direction::Maximize) {
            Ok(LpOutcome::Feasible { value, .. }) => value,
            Ok(LpOutcome::Infeasible { .. }) => return Err(RelaxError::EmptyRealBlock),
            Ok(LpOutcome::Unbounded { .. }) => return Err(RelaxError::UnboundedSystem),
            Err(_) => unreachable!("validated dimensions"),
        };
        let lo = match geometry::lp_solve(&poly, &obj, Direction::Minimize) {
            Ok(LpOutcome::Feasible { value, .. }) => value,
            Ok(LpOutcome::Infeasible { .. }) => return Err(RelaxError::EmptyRealBlock),
            Ok(LpOutcome::Unbounded { .. }) => return Err(RelaxError::UnboundedSystem),
            Err(_) => unreachable!("validated dimensions"),
        };
        out.push((lo, hi));
    }
    Ok(out)
}

/// Reduce the direction set to primitive representatives: the width
/// constraint for a primitive direction implies it for every positive
/// multiple, since widths scale linearly.
pub fn primitive_directions(dirs: &[Vec<Int>]) -> Vec<Vec<Int>> {
    let mut out: Vec<Vec<Int>> = Vec::new();
    for u in dirs {
        let mut g = Int::zero();
        for a in u {
            g = num_integer::Integer::gcd(&g, a);
        }
        if g.is_zero() {
            continue;
        }
        let prim: Vec<Int> = u.iter().map(|a| a / &g).collect();
        if !out.contains(&prim) {
            out.push(prim);
        }
    }
    out.sort_by(|a, b| crate::num::norm2_sq_int(a).cmp(&crate::num::norm2_sq_int(b)).then(a.cmp(b)));
    out
}

/// Build the relaxed system: strengthened core rows, the real block, `x >= 1`
/// as variable bounds, and an existential point pair per encoded width
/// direction (`p, q in P(y)` with `u . (p - q) >= omega_hat`).
pub fn build_relaxed(
    s: &MibSystem,
    eps: &Rat,
    ledger: &ConstantLedger,
    pair_cap: usize,
) -> Result<RelaxedProblem, RelaxError> {
    let (mut width_dirs, mut full) = match &ledger.u_set {
        DirectionSet::Materialized(us) => (primitive_directions(us), true),
        DirectionSet::TooLarge { .. } => {
            // encode the cheapest primitive directions only; refutations of
            // the partial system are still refutations of the full one
            let small = enumerate_small_primitives(s.m, 2);
            (small, false)
        }
    };
    if width_dirs.len() > pair_cap {
        width_dirs.truncate(pair_cap);
        full = false;
    }
    build_relaxed_with_dirs(s, eps, ledger, width_dirs, full)
}

/// Relaxation construction for an explicit direction list; used by the
/// solver (after direction selection) and by certificate verification
/// (rebuilding the exact problem a recorded refutation talks about).
pub fn build_relaxed_with_dirs(
    s: &MibSystem,
    eps: &Rat,
    ledger: &ConstantLedger,
    width_dirs: Vec<Vec<Int>>,
    full: bool,
) -> Result<RelaxedProblem, RelaxError> {
    if s.form != Form::Standard {
        return Err(RelaxError::NotStandardForm);
    }
    let y_box = real_block_box(s)?;
    let delta_s = (eps / rat_int(4)).min(crate::num::rat(1, 2));

    let layout = RelaxedLayout { n: s.n, m: s.m, pair_count: width_dirs.len() };
    let mut vars: Vec<VarBounds> = Vec::with_capacity(layout.total());
    for (lo, hi) in &y_box {
        vars.push(VarBounds::boxed(lo.clone(), hi.clone()));
    }
    for _ in 0..s.m {
        vars.push(VarBounds::at_least(Rat::one()));
    }
    for _ in 0..width_dirs.len() {
        for _ in 0..2 * s.m {
            vars.push(VarBounds::at_least(Rat::zero()));
        }
    }

    let mut rows: Vec<PolyRow> = Vec::new();
    let strengthen = eps * crate::num::rat(3, 4);
    // membership rows of a point block in P(y)
    let membership = |rows: &mut Vec<PolyRow>, var_of: &dyn Fn(usize) -> usize| {
        for row in &s.bilinear {
            let mut linear = Vec::new();
            let mut quad = Vec::new();
            for j in 0..s.n {
                if !row.b[j].is_zero() {
                    linear.push((layout.y(j), to_rat(&row.b[j])));
                }
                for sdx in 0..s.m {
                    if !row.a[sdx][j].is_zero() {
                        quad.push((var_of(sdx), layout.y(j), to_rat(&row.a[sdx][j])));
                    }
                }
            }
            rows.push(PolyRow { linear, quad, rhs: to_rat(&row.c), weakenable: false });
        }
    };
    // strengthened core rows on x
    for row in &s.bilinear {
        let mut linear = Vec::new();
        let mut quad = Vec::new();
        for j in 0..s.n {
            if !row.b[j].is_zero() {
                linear.push((layout.y(j), to_rat(&row.b[j])));
            }
            for sdx in 0..s.m {
                if !row.a[sdx][j].is_zero() {
                    quad.push((layout.x(sdx), layout.y(j), to_rat(&row.a[sdx][j])));
                }
            }
        }
        rows.push(PolyRow { linear, quad, rhs: to_rat(&row.c) - &strengthen, weakenable: true });
    }
    // real block rows (hard)
    for (row, rhs) in s.real_linear.rows.iter().zip(&s.real_linear.rhs) {
        let linear: Vec<(usize, Rat)> = row
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| (layout.y(j), to_rat(c)))
            .collect();
        rows.push(PolyRow { linear, quad: Vec::new(), rhs: to_rat(rhs), weakenable: false });
    }
    // width pairs
    for (pair, u) in width_dirs.iter().enumerate() {
        let pv = |i: usize| layout.p(pair, i);
        let qv = |i: usize| layout.q(pair, i);
        membership(&mut rows, &pv);
        membership(&mut rows, &qv);
        // u.(p - q) >= omega_hat  ->  -u.p + u.q <= -omega_hat
        let mut linear = Vec::new();
        for i in 0..s.m {
            if !u[i].is_zero() {
                linear.push((pv(i), -to_rat(&u[i])));
                linear.push((qv(i), to_rat(&u[i])));
            }
        }
        rows.push(PolyRow { linear, quad: Vec::new(), rhs: -ledger.omega_hat.clone(), weakenable: true });
    }

    Ok(RelaxedProblem {
        problem: RealProblem { vars, rows, delta: delta_s.clone() },
        layout,
        width_dirs,
        full_width_coverage: full,
        y_box,
        delta_s,
    })
}

/// The plain real relaxation of a standard-form system: integrality is
/// dropped (`x` real, `x >= 0`), rows are kept exact and hard. Integer
/// solutions embed into it, so a certified refutation proves the original
/// system unsatisfiable outright; a real witness carries no information.
pub fn build_plain_relaxation(s: &MibSystem) -> Result<RealProblem, RelaxError> {
    if s.form != Form::Standard {
        return Err(RelaxError::NotStandardForm);
    }
    let y_box = real_block_box(s)?;
    let mut vars: Vec<VarBounds> = Vec::with_capacity(s.n + s.m);
    for (lo, hi) in &y_box {
        vars.push(VarBounds::boxed(lo.clone(), hi.clone()));
    }
    for _ in 0..s.m {
        vars.push(VarBounds::at_least(Rat::zero()));
    }
    let mut rows: Vec<PolyRow> = Vec::new();
    for row in &s.bilinear {
        let mut linear = Vec::new();
        let mut quad = Vec::new();
        for j in 0..s.n {
            if !row.b[j].is_zero() {
                linear.push((j, to_rat(&row.b[j])));
            }
            for sdx in 0..s.m {
                if !row.a[sdx][j].is_zero() {
                    quad.push((s.n + sdx, j, to_rat(&row.a[sdx][j])));
                }
            }
        }
        rows.push(PolyRow { linear, quad, rhs: to_rat(&row.c), weakenable: false });
    }
    for (row, rhs) in s.real_linear.rows.iter().zip(&s.real_linear.rhs) {
        let linear: Vec<(usize, Rat)> = row
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| (j, to_rat(c)))
            .collect();
        rows.push(PolyRow { linear, quad: Vec::new(), rhs: to_rat(rhs), weakenable: false });
    }
    Ok(RealProblem { vars, rows, delta: Rat::one() })
}

/// All primitive integer vectors with coordinates in `[-k, k]`,
/// sign-normalized and sorted by norm. Used as a cheap partial width basis
/// when `U` is too large to materialize.
fn enumerate_small_primitives(m: usize, k: i64) -> Vec<Vec<Int>> {
    if m == 0 {
        return Vec::new();
    }
    let mut out: Vec<Vec<Int>> = Vec::new();
    let mut cur = vec![-k; m];
    loop {
        if cur.iter().any(|&a| a != 0) {
            let first = cur.iter().find(|&&a| a != 0).copied().unwrap();
            if first > 0 {
                let v: Vec<Int> = cur.iter().map(|&a| Int::from(a)).collect();
                let mut g = Int::zero();
                for a in &v {
                    g = num_integer::Integer::gcd(&g, a);
                }
                let prim: Vec<Int> = v.iter().map(|a| a / &g).collect();
                if !out.contains(&prim) {
                    out.push(prim);
                }
            }
        }
        let mut i = 0;
        loop {
            cur[i] += 1;
            if cur[i] <= k {
                break;
            }
            cur[i] = -k;
            i += 1;
            if i == m {
                out.sort_by(|a, b| {
                    crate::num::norm2_sq_int(a).cmp(&crate::num::norm2_sq_int(b)).then(a.cmp(b))
                });
                return out;
            }
        }
    }
}
