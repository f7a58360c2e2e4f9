//! The recursive gap satisfiability procedure for bounded systems.
//!
//! Verdict contract: an instance satisfiable with slack `eps` on every
//! bilinear row must come back `Sat`, an unsatisfiable instance `Unsat`, and
//! anything in between may come back either way. `Unknown` is only emitted
//! when a configured resource budget or structural cap is exceeded, never
//! silently.
//!
//! Per standard-form subsystem the engine interleaves two deterministic
//! searches. A doubling-bound witness search enumerates integer points and
//! solves an exact margin LP per point; any feasible point is a verified SAT
//! answer (integer assignments always admit rational real parts). In
//! parallel rounds, the strengthened real relaxation goes to the certified
//! kernel: a kernel witness is rounded to an integer point of the fixed-`y`
//! polyhedron (then re-verified), and a certified refutation licenses the
//! branch step, which asserts one variable to zero or pins a bounded
//! hyperplane equation per direction in the ledger's `U`, substitutes each
//! semilinear piece, and recurses with strictly fewer integer variables.
//!
//! Every `Sat` payload passes exact re-checking; every `Unsat` payload is a
//! tree whose leaves carry LP or kernel certificates that can be re-verified
//! offline.

use crate::geometry::{self, Direction, LpOutcome, Polyhedron};
use crate::mib::{
    check_assignment, is_bounded, AffineMap, Assignment, Boundedness, CheckOutcome, Form,
    MibError, MibSystem,
};
use crate::num::{ceil_int, floor_int, int, rat_vec, sqrt_upper, to_rat, Int, Rat};
use crate::realfeas::{self, KernelBudget, KernelOutcome, RealVerdict, RefuteTree};
use crate::relax::{
    build_relaxed, real_block_box, ConstantLedger, DirectionSet, RelaxError,
};
use crate::semilinear::{self, SemilinearError};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("eps must be positive")]
    NonPositiveEps,
    #[error("the real block is unbounded; the gap procedure requires bounded systems")]
    UnboundedSystem,
    #[error(transparent)]
    Mib(#[from] MibError),
    #[error(transparent)]
    Semilinear(#[from] SemilinearError),
}

/// Resource budget: wall-clock and a node counter covering enumerated
/// integer points, kernel boxes, and branch children.
#[derive(Debug, Clone)]
pub struct Resources {
    pub wall_ms: Option<u64>,
    pub max_nodes: u64,
}

impl Default for Resources {
    fn default() -> Self {
        Resources { wall_ms: Some(60_000), max_nodes: 2_000_000 }
    }
}

/// Structural caps that turn astronomically large intermediate objects into
/// honest `Unknown`s instead of stalls.
#[derive(Debug, Clone)]
pub struct EngineCaps {
    /// maximum width point pairs encoded in a relaxation
    pub width_pairs: usize,
    /// maximum children a single branch step may enumerate
    pub split_children: usize,
    /// maximum candidates per rounding call
    pub round_candidates: u64,
    /// materialization cap for the direction set
    pub u_materialize: usize,
    /// integer points enumerated per witness-search round
    pub shell_points: u64,
}

impl Default for EngineCaps {
    fn default() -> Self {
        EngineCaps {
            width_pairs: 24,
            split_children: 4096,
            round_candidates: 65_536,
            u_materialize: 200_000,
            shell_points: 262_144,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownReason {
    BudgetExceeded,
    SplitTooLarge,
    RoundingFailed,
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnknownReason::BudgetExceeded => write!(f, "resource budget exceeded"),
            UnknownReason::SplitTooLarge => write!(f, "branch step exceeds structural caps"),
            UnknownReason::RoundingFailed => write!(f, "rounding search exceeded its cap"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum GapVerdict {
    Sat { assignment: Assignment, margin: Rat },
    Unsat { tree: UnsatNode },
    Unknown { reason: UnknownReason },
}

/// Branch labels in the refutation tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BranchDesc {
    ZeroComponent { index: usize },
    Hyperplane { u: Vec<Int>, b: Int },
}

#[derive(Debug, Clone)]
pub struct SplitBranch {
    pub desc: BranchDesc,
    pub map: AffineMap,
    pub child: UnsatNode,
}

#[derive(Debug, Clone)]
pub enum UnsatNode {
    /// the real block alone is infeasible
    RealBlockInfeasible { farkas: Vec<Rat> },
    /// the plain real relaxation (integrality dropped) is infeasible,
    /// which refutes the system outright
    RealRelaxationInfeasible { refutation: RefuteTree },
    /// zero integer variables: combined linear rows are infeasible
    BaseInfeasible { farkas: Vec<Rat> },
    /// standard-form decomposition of the integer block (empty piece list
    /// means the integer block has no integer points)
    Decomposed { pieces: Vec<(AffineMap, Box<UnsatNode>)> },
    /// certified refutation of the strengthened relaxation plus one refuted
    /// child per branch equation
    SplitRefuted {
        width_dirs: Vec<Vec<Int>>,
        refutation: RefuteTree,
        branch_bound: Int,
        branches: Vec<SplitBranch>,
    },
}

/// Per-standard-piece diagnostics used by the differential suites.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub nodes: u64,
    /// pieces whose root relaxation was certified infeasible
    pub root_relaxation_refuted: bool,
    /// standard-form piece indices with a refuted root relaxation
    pub refuted_pieces: Vec<usize>,
    pub rounding_failures: u64,
}

#[derive(Debug)]
pub struct SolveReport {
    pub verdict: GapVerdict,
    pub stats: SolveStats,
}

struct Ctx {
    deadline: Option<Instant>,
    nodes: u64,
    max_nodes: u64,
    caps: EngineCaps,
    stats: SolveStats,
    current_piece: usize,
}

impl Ctx {
    fn new(budget: &Resources, caps: EngineCaps) -> Self {
        Ctx {
            deadline: budget
                .wall_ms
                .map(|ms| Instant::now() + std::time::Duration::from_millis(ms)),
            nodes: 0,
            max_nodes: budget.max_nodes,
            caps,
            stats: SolveStats::default(),
            current_piece: 0,
        }
    }

    fn spend(&mut self, n: u64) -> bool {
        self.nodes = self.nodes.saturating_add(n);
        self.within()
    }

    fn within(&self) -> bool {
        if self.nodes > self.max_nodes {
            return false;
        }
        match self.deadline {
            Some(d) => Instant::now() < d,
            None => true,
        }
    }

}

enum PieceVerdict {
    Sat(Assignment),
    Unsat(UnsatNode),
    Unknown(UnknownReason),
}

/// Decide gap satisfiability of a bounded system.
pub fn solve(s: &MibSystem, eps: &Rat, budget: &Resources) -> Result<GapVerdict, EngineError> {
    Ok(solve_report(s, eps, budget)?.verdict)
}

/// Decide gap satisfiability and report solver diagnostics.
pub fn solve_report(
    s: &MibSystem,
    eps: &Rat,
    budget: &Resources,
) -> Result<SolveReport, EngineError> {
    solve_report_with(s, eps, budget, EngineCaps::default())
}

pub fn solve_report_with(
    s: &MibSystem,
    eps: &Rat,
    budget: &Resources,
    caps: EngineCaps,
) -> Result<SolveReport, EngineError> {
    if !eps.is_positive() {
        return Err(EngineError::NonPositiveEps);
    }
    if let Boundedness::Unbounded { .. } = is_bounded(s) {
        return Err(EngineError::UnboundedSystem);
    }
    let mut ctx = Ctx::new(budget, caps);
    let pieces = crate::mib::to_standard_form(s)?;
    let mut any_unknown = None;
    let mut unsat_children = Vec::new();
    let mut verdict = None;
    for (idx, (piece, map)) in pieces.iter().enumerate() {
        ctx.current_piece = idx;
        match solve_standard(piece, eps, &mut ctx, 0)? {
            PieceVerdict::Sat(assignment) => {
                let x = map.apply(&assignment.x);
                let full = Assignment { x, y: assignment.y };
                let margin = match check_assignment(s, &full, eps)? {
                    CheckOutcome::SatWithSlack { margin } | CheckOutcome::SatNoSlack { margin } => {
                        margin
                    }
                    CheckOutcome::Violated { row } => {
                        unreachable!("verified witness failed re-checking on row {row:?}")
                    }
                };
                verdict = Some(GapVerdict::Sat { assignment: full, margin });
                break;
            }
            PieceVerdict::Unsat(node) => unsat_children.push((map.clone(), Box::new(node))),
            PieceVerdict::Unknown(reason) => any_unknown = Some(reason),
        }
    }
    let verdict = match verdict {
        Some(v) => v,
        None => match any_unknown {
            Some(reason) => GapVerdict::Unknown { reason },
            None => GapVerdict::Unsat { tree: UnsatNode::Decomposed { pieces: unsat_children } },
        },
    };
    let stats = std::mem::take(&mut ctx.stats);
    Ok(SolveReport { verdict, stats: SolveStats { nodes: ctx.nodes, ..stats } })
}

/// Exact margin LP at a fixed integer point: maximize the uniform bilinear
/// margin `t` subject to the real block. Returns the point's best real
/// completion, the exact margin (`None` when there are no bilinear rows),
/// and feasibility.
fn margin_lp(s: &MibSystem, x: &[Int], eps: &Rat) -> Option<(Vec<Rat>, Option<Rat>)> {
    let n = s.n;
    let cap = eps + Rat::one();
    let dim = n + 1;
    let mut a: Vec<Vec<Rat>> = Vec::new();
    let mut b: Vec<Rat> = Vec::new();
    for i in 0..s.bilinear.len() {
        let (coeffs, c) = s.bilinear_row_at_x(i, x);
        let mut row: Vec<Rat> = rat_vec(&coeffs);
        row.push(Rat::one());
        a.push(row);
        b.push(to_rat(&c));
    }
    for (row, rhs) in s.real_linear.rows.iter().zip(&s.real_linear.rhs) {
        let mut r: Vec<Rat> = rat_vec(row);
        r.push(Rat::zero());
        a.push(r);
        b.push(to_rat(rhs));
    }
    // -1 <= t <= cap
    let mut r = vec![Rat::zero(); dim];
    r[n] = -Rat::one();
    a.push(r);
    b.push(Rat::one());
    let mut r = vec![Rat::zero(); dim];
    r[n] = Rat::one();
    a.push(r);
    b.push(cap);
    let poly = Polyhedron::new(a, b).expect("consistent rows");
    let mut obj = vec![Rat::zero(); dim];
    obj[n] = Rat::one();
    match geometry::lp_solve(&poly, &obj, Direction::Maximize) {
        Ok(LpOutcome::Feasible { point, value }) => {
            if value.is_negative() {
                return None; // best margin below zero: x admits no real completion
            }
            let y = point[..n].to_vec();
            let margin = if s.bilinear.is_empty() {
                None
            } else {
                let m = (0..s.bilinear.len())
                    .map(|i| to_rat(&s.bilinear[i].c) - s.bilinear_value(i, x, &y))
                    .min()
                    .expect("nonempty rows");
                Some(m)
            };
            Some((y, margin))
        }
        Ok(LpOutcome::Infeasible { .. }) => None,
        Ok(LpOutcome::Unbounded { .. }) | Err(_) => unreachable!("margin column is boxed"),
    }
}

/// Brute-force gap oracle: enumerate integer points within the bound and
/// classify the best exactly computed margin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    SatSlack { x: Vec<Int>, y: Vec<Rat>, margin: Option<Rat> },
    SatNoSlack { x: Vec<Int>, y: Vec<Rat>, margin: Rat },
    UnsatWithinBound,
}

pub fn oracle(s: &MibSystem, eps: &Rat, xbound: u64) -> OracleVerdict {
    assert!(eps.is_positive());
    let lo = if s.form == Form::Standard { 0i64 } else { -(xbound as i64) };
    let hi = xbound as i64;
    let mut best: Option<(Vec<Int>, Vec<Rat>, Option<Rat>)> = None;
    let mut cur = vec![lo; s.m];
    if s.m == 0 {
        if let Some((y, margin)) = margin_lp(s, &[], eps) {
            return classify_oracle(Vec::new(), y, margin, eps);
        }
        return OracleVerdict::UnsatWithinBound;
    }
    'outer: loop {
        let x: Vec<Int> = cur.iter().map(|&v| int(v)).collect();
        let in_block = s
            .int_linear
            .rows
            .iter()
            .zip(&s.int_linear.rhs)
            .all(|(row, rhs)| crate::num::dot_int(row, &x) <= *rhs);
        if in_block {
            if let Some((y, margin)) = margin_lp(s, &x, eps) {
                let better = match (&margin, &best) {
                    (_, None) => true,
                    (None, Some(_)) => true,
                    (Some(m), Some((_, _, Some(bm)))) => m > bm,
                    (Some(_), Some((_, _, None))) => false,
                };
                if better {
                    let slack_reached = margin.as_ref().map(|m| m >= eps).unwrap_or(true);
                    best = Some((x, y, margin));
                    if slack_reached {
                        break 'outer;
                    }
                }
            }
        }
        let mut i = 0;
        loop {
            cur[i] += 1;
            if cur[i] <= hi {
                break;
            }
            cur[i] = lo;
            i += 1;
            if i == s.m {
                break 'outer;
            }
        }
    }
    match best {
        None => OracleVerdict::UnsatWithinBound,
        Some((x, y, margin)) => classify_oracle(x, y, margin, eps),
    }
}

fn classify_oracle(x: Vec<Int>, y: Vec<Rat>, margin: Option<Rat>, eps: &Rat) -> OracleVerdict {
    match margin {
        None => OracleVerdict::SatSlack { x, y, margin: None },
        Some(m) if &m >= eps => OracleVerdict::SatSlack { x, y, margin: Some(m) },
        Some(m) => OracleVerdict::SatNoSlack { x, y, margin: m },
    }
}

/// One round of the doubling witness search: integer points whose maximum
/// coordinate lies in `(prev, bound]`, in deterministic order, margin LP per
/// point, first feasible point wins. Chunks are evaluated in parallel but
/// joined in order.
fn witness_shell(
    s: &MibSystem,
    eps: &Rat,
    prev: u64,
    bound: u64,
    shell_cap: u64,
    ctx: &mut Ctx,
) -> Option<Assignment> {
    let m = s.m;
    let mut shell: Vec<Vec<Int>> = Vec::new();
    let lo = 0i64;
    let hi = bound as i64;
    let mut cur = vec![lo; m];
    let mut count = 0u64;
    loop {
        let maxc = cur.iter().copied().max().unwrap_or(0) as u64;
        if maxc > prev {
            shell.push(cur.iter().map(|&v| int(v)).collect());
            count += 1;
            if count >= shell_cap {
                break;
            }
        }
        let mut i = 0;
        loop {
            cur[i] += 1;
            if cur[i] <= hi {
                break;
            }
            cur[i] = lo;
            i += 1;
            if i == m {
                // enumeration complete
                return witness_scan(s, eps, shell, ctx);
            }
        }
    }
    witness_scan(s, eps, shell, ctx)
}

fn witness_scan(
    s: &MibSystem,
    eps: &Rat,
    shell: Vec<Vec<Int>>,
    ctx: &mut Ctx,
) -> Option<Assignment> {
    for chunk in shell.chunks(1024) {
        if !ctx.spend(chunk.len() as u64) {
            return None;
        }
        let hits: Vec<Option<(usize, Vec<Rat>)>> = chunk
            .par_iter()
            .enumerate()
            .map(|(k, x)| margin_lp(s, x, eps).map(|(y, _)| (k, y)))
            .collect();
        if let Some((k, y)) = hits.into_iter().flatten().min_by_key(|(k, _)| *k) {
            return Some(Assignment { x: chunk[k].clone(), y });
        }
    }
    None
}

/// Integer point search inside `P(y)`: floor/ceil combinations of the hint,
/// then a growing box intersected with exact per-coordinate LP bounds.
fn round_to_integer(
    s: &MibSystem,
    y: &[Rat],
    hint_x: Option<&[Rat]>,
    ctx: &mut Ctx,
) -> Option<Vec<Int>> {
    let poly = crate::relax::p_of_y(s, y);
    let m = s.m;
    let feasible = |x: &[Int]| -> bool {
        let xr = rat_vec(x);
        x.iter().all(|v| !v.is_negative()) && poly.contains(&xr)
    };
    if let Some(hx) = hint_x {
        let mut cands: Vec<Vec<Int>> = vec![Vec::new()];
        for v in hx {
            let f = floor_int(v);
            let c = ceil_int(v);
            let mut next = Vec::new();
            for base in &cands {
                for val in [f.clone(), c.clone()] {
                    let mut b = base.clone();
                    b.push(val.clone());
                    next.push(b);
                }
            }
            next.dedup();
            cands = next;
        }
        for x in cands {
            if feasible(&x) {
                return Some(x);
            }
        }
    }
    // exact per-coordinate bounds of P(y)
    let mut lo = vec![Int::zero(); m];
    let mut hi: Vec<Option<Int>> = vec![None; m];
    for i in 0..m {
        let mut obj = vec![Rat::zero(); m];
        obj[i] = Rat::one();
        match geometry::lp_solve(&poly, &obj, Direction::Maximize) {
            Ok(LpOutcome::Feasible { value, .. }) => hi[i] = Some(floor_int(&value)),
            Ok(LpOutcome::Unbounded { .. }) => hi[i] = None,
            Ok(LpOutcome::Infeasible { .. }) => return None,
            Err(_) => unreachable!(),
        }
        match geometry::lp_solve(&poly, &obj, Direction::Minimize) {
            Ok(LpOutcome::Feasible { value, .. }) => {
                let l = ceil_int(&value);
                if l > lo[i] {
                    lo[i] = l;
                }
            }
            Ok(LpOutcome::Unbounded { .. }) => {}
            Ok(LpOutcome::Infeasible { .. }) => return None,
            Err(_) => unreachable!(),
        }
    }
    let mut radius = int(4);
    let mut budget = ctx.caps.round_candidates;
    loop {
        let cur_hi: Vec<Int> = (0..m)
            .map(|i| match &hi[i] {
                Some(h) => h.min(&(&lo[i] + &radius)).clone(),
                None => &lo[i] + &radius,
            })
            .collect();
        if (0..m).any(|i| cur_hi[i] < lo[i]) {
            return None;
        }
        let mut found = None;
        let mut cur = lo.clone();
        'scan: loop {
            if budget == 0 {
                break 'scan;
            }
            budget -= 1;
            ctx.spend(1);
            if feasible(&cur) {
                found = Some(cur.clone());
                break 'scan;
            }
            let mut i = 0;
            loop {
                cur[i] += 1;
                if cur[i] <= cur_hi[i] {
                    break;
                }
                cur[i] = lo[i].clone();
                i += 1;
                if i == m {
                    break 'scan;
                }
            }
        }
        if found.is_some() {
            return found;
        }
        if budget == 0 || !ctx.within() {
            ctx.stats.rounding_failures += 1;
            return None;
        }
        // box exhausted: grow unless already covering all finite bounds
        let covered = (0..m).all(|i| match &hi[i] {
            Some(h) => &lo[i] + &radius >= *h,
            None => false,
        });
        if covered {
            return None;
        }
        radius *= 2;
    }
}

/// Search for an integer point of `P(y)` at a fixed real point, optionally
/// guided by a fractional hint. Success is exactly verified; failure only
/// means the growing-box search hit its cap.
pub fn find_integer_point(
    s: &MibSystem,
    y: &[Rat],
    hint_x: Option<&[Rat]>,
) -> Option<Vec<Int>> {
    let mut ctx = Ctx::new(&Resources { wall_ms: Some(30_000), max_nodes: 1 << 22 }, EngineCaps::default());
    round_to_integer(s, y, hint_x, &mut ctx)
}

/// Branch bound actually used for hyperplane equations: the ledger value
/// enlarged to an instance-exact bound derived from the true real-block box
/// (enlarging the range only adds branches, which is sound).
pub(crate) fn split_bound(s: &MibSystem, eps: &Rat, ledger: &ConstantLedger) -> Result<Int, RelaxError> {
    let y_box = real_block_box(s)?;
    let y_norm_sq: Rat = y_box
        .iter()
        .map(|(lo, hi)| {
            let m = lo.abs().max(hi.abs());
            &m * &m
        })
        .sum();
    let y_norm = sqrt_upper(&y_norm_sq);
    let mut worst = Rat::zero();
    for row in &s.bilinear {
        let b_norm = sqrt_upper(&to_rat(&crate::num::norm2_sq_int(&row.b)));
        let cand = to_rat(&row.c.abs()) + b_norm * &y_norm;
        if cand > worst {
            worst = cand;
        }
    }
    let safe = &ledger.omega_hat * (Rat::one() + worst / eps);
    let bound = ledger.kappa2.clone().max(safe);
    Ok(ceil_int(&bound))
}

pub(crate) struct SplitSpec {
    pub(crate) desc: BranchDesc,
    pub(crate) map: AffineMap,
    pub(crate) child: MibSystem,
}

/// Enumerate branch children after a certified relaxation refutation: one
/// per zero component and one per semilinear piece of each hyperplane
/// equation `u . x = b` with `u` in the ledger set and `|b|` within the
/// branch bound. Children with empty decompositions are dropped.
pub(crate) fn enumerate_splits(
    s: &MibSystem,
    ledger: &ConstantLedger,
    branch_bound: &Int,
    caps: &EngineCaps,
) -> Result<Option<Vec<SplitSpec>>, EngineError> {
    let us = match &ledger.u_set {
        DirectionSet::Materialized(us) => us,
        DirectionSet::TooLarge { .. } => return Ok(None),
    };
    let m = s.m;
    // pre-count (u, b) pairs against the cap
    let b_span = {
        let b: i128 = branch_bound.to_string().parse().unwrap_or(i128::MAX / 4);
        (2 * b + 1) as u128
    };
    let estimate = m as u128 + us.len() as u128 * b_span;
    if estimate > caps.split_children as u128 * 64 {
        return Ok(None);
    }
    let mut specs: Vec<SplitSpec> = Vec::new();
    for i in 0..m {
        let mut p: Vec<Vec<Int>> = Vec::new();
        for j in 0..m {
            if j == i {
                continue;
            }
            p.push((0..m).map(|k| if k == j { Int::one() } else { Int::zero() }).collect());
        }
        let map = AffineMap { w: vec![Int::zero(); m], p };
        let child = crate::mib::substitute(s, &map.w, &map.p)?;
        specs.push(SplitSpec { desc: BranchDesc::ZeroComponent { index: i }, map, child });
    }
    for u in us {
        let nonneg = u.iter().all(|v| !v.is_negative());
        let nonpos = u.iter().all(|v| !v.is_positive());
        let lo = if nonneg { Int::zero() } else { -branch_bound.clone() };
        let hi = if nonpos { Int::zero() } else { branch_bound.clone() };
        let mut b = lo.clone();
        while b <= hi {
            // { u.x = b, x >= 0 }
            let mut rows: Vec<Vec<Int>> = vec![u.clone(), u.iter().map(|v| -v.clone()).collect()];
            let mut rhs: Vec<Int> = vec![b.clone(), -b.clone()];
            for i in 0..m {
                rows.push((0..m).map(|k| if k == i { -Int::one() } else { Int::zero() }).collect());
                rhs.push(Int::zero());
            }
            let hls = semilinear::decompose(&rows, &rhs)?;
            for piece in &hls.pieces {
                let map = AffineMap { w: piece.base.clone(), p: piece.periods.clone() };
                let child = crate::mib::substitute(s, &map.w, &map.p)?;
                specs.push(SplitSpec {
                    desc: BranchDesc::Hyperplane { u: u.clone(), b: b.clone() },
                    map,
                    child,
                });
                if specs.len() > caps.split_children {
                    return Ok(None);
                }
            }
            b += 1;
        }
    }
    Ok(Some(specs))
}

fn solve_standard(
    s: &MibSystem,
    eps: &Rat,
    ctx: &mut Ctx,
    depth: usize,
) -> Result<PieceVerdict, EngineError> {
    debug_assert_eq!(s.form, Form::Standard);
    if !ctx.spend(1) {
        return Ok(PieceVerdict::Unknown(UnknownReason::BudgetExceeded));
    }
    // no bilinear rows: x = 0 plus an exact LP on the real block
    if s.bilinear.is_empty() {
        let poly = s.real_polyhedron();
        let zero_obj = vec![Rat::zero(); s.n];
        return Ok(match geometry::lp_solve(&poly, &zero_obj, Direction::Maximize) {
            Ok(LpOutcome::Feasible { point, .. }) => {
                PieceVerdict::Sat(Assignment { x: vec![Int::zero(); s.m], y: point })
            }
            Ok(LpOutcome::Infeasible { farkas }) => {
                PieceVerdict::Unsat(UnsatNode::RealBlockInfeasible { farkas })
            }
            Ok(LpOutcome::Unbounded { .. }) | Err(_) => unreachable!("constant objective"),
        });
    }
    // zero integer variables: purely linear rows over y
    if s.m == 0 {
        return base_case(s, eps);
    }

    // real block empty: certified unsat regardless of the bilinear rows
    {
        let poly = s.real_polyhedron();
        let zero_obj = vec![Rat::zero(); s.n];
        if let Ok(LpOutcome::Infeasible { farkas }) =
            geometry::lp_solve(&poly, &zero_obj, Direction::Maximize)
        {
            return Ok(PieceVerdict::Unsat(UnsatNode::RealBlockInfeasible { farkas }));
        }
    }

    let ledger = match compute_constants_checked(s, eps, ctx) {
        Ok(l) => l,
        Err(RelaxError::UnboundedSystem) => return Err(EngineError::UnboundedSystem),
        Err(e) => unreachable!("ledger construction failed: {e}"),
    };
    let relaxed = match build_relaxed(s, eps, &ledger, ctx.caps.width_pairs) {
        Ok(r) => r,
        Err(RelaxError::EmptyRealBlock) => unreachable!("emptiness checked above"),
        Err(e) => unreachable!("relaxation construction failed: {e}"),
    };
    let plain = crate::relax::build_plain_relaxation(s)
        .unwrap_or_else(|e| unreachable!("plain relaxation construction failed: {e}"));

    let mut prev_bound = 0u64;
    let mut xbound = 2u64;
    let mut kernel_nodes = 512u64;
    let mut relax_done = false;
    let mut plain_done = false;
    let mut split_too_large = false;
    let mut fallback_nodes = 0u64;
    loop {
        if !ctx.within() {
            return Ok(PieceVerdict::Unknown(UnknownReason::BudgetExceeded));
        }
        // witness-search round; once the relaxation is refuted without an
        // enumerable branch set, only small witnesses are worth scanning
        let shell_cap = if split_too_large { 4096 } else { ctx.caps.shell_points };
        let before = ctx.nodes;
        if let Some(assignment) = witness_shell(s, eps, prev_bound, xbound, shell_cap, ctx) {
            verified_margin(s, &assignment, eps)?;
            return Ok(PieceVerdict::Sat(assignment));
        }
        fallback_nodes += ctx.nodes - before;
        prev_bound = xbound;
        xbound = xbound.saturating_mul(2);

        // plain-relaxation round: dropping integrality loses no solutions,
        // so a certified refutation settles the instance on its own
        if !plain_done {
            let budget = KernelBudget { max_nodes: kernel_nodes };
            match realfeas::decide_budgeted(&plain, &budget) {
                Ok(KernelOutcome::Verdict(RealVerdict::Refuted { cover })) => {
                    return Ok(PieceVerdict::Unsat(UnsatNode::RealRelaxationInfeasible {
                        refutation: cover,
                    }));
                }
                Ok(KernelOutcome::Verdict(RealVerdict::Witness { .. })) => {
                    // a real point says nothing about integer feasibility
                    plain_done = true;
                }
                Ok(KernelOutcome::Exhausted { .. }) => {}
                Err(e) => unreachable!("plain relaxation rejected: {e}"),
            }
        }

        // relaxation round
        if !relax_done {
            let budget = KernelBudget { max_nodes: kernel_nodes };
            match realfeas::decide_budgeted(&relaxed.problem, &budget) {
                Ok(KernelOutcome::Verdict(RealVerdict::Witness { point, .. })) => {
                    relax_done = true;
                    let y: Vec<Rat> = (0..s.n).map(|j| point[relaxed.layout.y(j)].clone()).collect();
                    let hint: Vec<Rat> =
                        (0..s.m).map(|i| point[relaxed.layout.x(i)].clone()).collect();
                    if let Some(x) = round_to_integer(s, &y, Some(&hint), ctx) {
                        // prefer the best real completion of the rounded point
                        let assignment = match margin_lp(s, &x, eps) {
                            Some((best_y, _)) => Assignment { x, y: best_y },
                            None => Assignment { x, y },
                        };
                        verified_margin(s, &assignment, eps)?;
                        return Ok(PieceVerdict::Sat(assignment));
                    }
                    // rounding failed: the doubling witness search continues
                }
                Ok(KernelOutcome::Verdict(RealVerdict::Refuted { cover })) => {
                    relax_done = true;
                    if depth == 0 {
                        ctx.stats.root_relaxation_refuted = true;
                        let piece = ctx.current_piece;
                        ctx.stats.refuted_pieces.push(piece);
                    }
                    let branch_bound = split_bound(s, eps, &ledger)
                        .unwrap_or_else(|_| ceil_int(&ledger.kappa2));
                    match enumerate_splits(s, &ledger, &branch_bound, &ctx.caps)? {
                        None => split_too_large = true,
                        Some(specs) => {
                            if !ctx.spend(specs.len() as u64) {
                                return Ok(PieceVerdict::Unknown(UnknownReason::BudgetExceeded));
                            }
                            return solve_children(
                                s,
                                eps,
                                ctx,
                                depth,
                                relaxed.width_dirs.clone(),
                                cover,
                                branch_bound,
                                specs,
                            );
                        }
                    }
                }
                Ok(KernelOutcome::Exhausted { .. }) => {
                    kernel_nodes = (kernel_nodes * 4).min(1 << 22);
                }
                Err(e) => unreachable!("relaxation kernel rejected its input: {e}"),
            }
        }
        // with a refuted relaxation and no enumerable branch set, only a
        // small witness could still settle the instance; cap that search
        // rather than draining the whole budget
        if split_too_large && (fallback_nodes > 8_192 || xbound > 4096) {
            return Ok(PieceVerdict::Unknown(UnknownReason::SplitTooLarge));
        }
    }
}

fn compute_constants_checked(
    s: &MibSystem,
    eps: &Rat,
    ctx: &Ctx,
) -> Result<ConstantLedger, RelaxError> {
    crate::relax::compute_constants_with(
        s,
        eps,
        &crate::relax::FlatnessBounds::default(),
        ctx.caps.u_materialize,
    )
}

#[allow(clippy::too_many_arguments)]
fn solve_children(
    s: &MibSystem,
    eps: &Rat,
    ctx: &mut Ctx,
    depth: usize,
    width_dirs: Vec<Vec<Int>>,
    refutation: RefuteTree,
    branch_bound: Int,
    specs: Vec<SplitSpec>,
) -> Result<PieceVerdict, EngineError> {
    // identical children are solved once; the key must be the raw system so
    // that shared certificates stay aligned with every branch's own rows
    let mut memo: BTreeMap<String, usize> = BTreeMap::new();
    let mut results: Vec<PieceVerdict> = Vec::new();
    let mut branches: Vec<SplitBranch> = Vec::new();
    let mut any_unknown = None;
    for spec in &specs {
        debug_assert!(spec.child.m < s.m, "branch children must lose a variable");
        let key = format!("{:?}", spec.child);
        let idx = match memo.get(&key) {
            Some(&i) => i,
            None => {
                let v = solve_standard(&spec.child, eps, ctx, depth + 1)?;
                results.push(v);
                memo.insert(key, results.len() - 1);
                results.len() - 1
            }
        };
        match &results[idx] {
            PieceVerdict::Sat(assignment) => {
                let x = spec.map.apply(&assignment.x);
                let full = Assignment { x, y: assignment.y.clone() };
                verified_margin(s, &full, eps)?;
                return Ok(PieceVerdict::Sat(full));
            }
            PieceVerdict::Unsat(node) => branches.push(SplitBranch {
                desc: spec.desc.clone(),
                map: spec.map.clone(),
                child: node.clone(),
            }),
            PieceVerdict::Unknown(r) => any_unknown = Some(*r),
        }
        if !ctx.within() {
            return Ok(PieceVerdict::Unknown(UnknownReason::BudgetExceeded));
        }
    }
    if let Some(reason) = any_unknown {
        return Ok(PieceVerdict::Unknown(reason));
    }
    Ok(PieceVerdict::Unsat(UnsatNode::SplitRefuted {
        width_dirs,
        refutation,
        branch_bound,
        branches,
    }))
}

/// Re-check an assignment exactly and return its bilinear margin; any
/// violation is a solver bug surfaced as an error.
fn verified_margin(s: &MibSystem, a: &Assignment, eps: &Rat) -> Result<Rat, EngineError> {
    match check_assignment(s, a, eps)? {
        CheckOutcome::SatWithSlack { margin } | CheckOutcome::SatNoSlack { margin } => Ok(margin),
        CheckOutcome::Violated { row } => {
            unreachable!("candidate witness violates row {row:?} after exact re-checking")
        }
    }
}

/// Zero integer variables: the rows are linear in `y`; decide by exact LP
/// with a maximized uniform margin.
fn base_case(s: &MibSystem, eps: &Rat) -> Result<PieceVerdict, EngineError> {
    debug_assert_eq!(s.m, 0);
    match margin_lp(s, &[], eps) {
        Some((y, _margin)) => Ok(PieceVerdict::Sat(Assignment { x: Vec::new(), y })),
        None => {
            // extract a Farkas certificate over the combined plain rows
            let mut a: Vec<Vec<Rat>> = Vec::new();
            let mut b: Vec<Rat> = Vec::new();
            for i in 0..s.bilinear.len() {
                let (coeffs, c) = s.bilinear_row_at_x(i, &[]);
                a.push(rat_vec(&coeffs));
                b.push(to_rat(&c));
            }
            for (row, rhs) in s.real_linear.rows.iter().zip(&s.real_linear.rhs) {
                a.push(rat_vec(row));
                b.push(to_rat(rhs));
            }
            let poly = Polyhedron::new(a, b).expect("consistent rows");
            let zero = vec![Rat::zero(); s.n];
            match geometry::lp_solve(&poly, &zero, Direction::Maximize) {
                Ok(LpOutcome::Infeasible { farkas }) => {
                    Ok(PieceVerdict::Unsat(UnsatNode::BaseInfeasible { farkas }))
                }
                Ok(_) => unreachable!("margin LP says infeasible, plain LP disagrees"),
                Err(_) => unreachable!("validated dimensions"),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mib::{BilinearRow, LinearBlock};
    use crate::num::rat;

    fn iv(v: &[i64]) -> Vec<Int> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn quick_budget() -> Resources {
        Resources { wall_ms: Some(30_000), max_nodes: 400_000 }
    }

    /// { x y <= 1, 0 <= y <= 1, x >= 0 }
    fn sat_toy() -> MibSystem {
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

    /// { x y <= 1, x y >= 2, 0 <= y <= 1, x >= 0 }: plainly contradictory
    fn unsat_toy() -> MibSystem {
        MibSystem::new(
            1,
            1,
            vec![
                BilinearRow { a: vec![iv(&[1])], b: iv(&[0]), c: int(1) },
                BilinearRow { a: vec![iv(&[-1])], b: iv(&[0]), c: int(-2) },
            ],
            MibSystem::standard_int_block(1),
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
            Form::Standard,
        )
        .unwrap()
    }

    #[test]
    fn solve_sat_toy() {
        let v = solve(&sat_toy(), &rat(1, 2), &quick_budget()).unwrap();
        match v {
            GapVerdict::Sat { assignment, margin } => {
                assert!(margin >= Rat::zero());
                assert!(!assignment.x[0].is_negative());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solve_unsat_toy() {
        let v = solve(&unsat_toy(), &rat(1, 4), &quick_budget()).unwrap();
        match v {
            GapVerdict::Unsat { .. } => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn base_case_examples() {
        // rows {y <= 1, -y <= 0} as an m = 0 system
        let sat = MibSystem::new(
            0,
            1,
            vec![],
            LinearBlock::default(),
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
            Form::Standard,
        )
        .unwrap();
        match solve(&sat, &rat(1, 2), &quick_budget()).unwrap() {
            GapVerdict::Sat { .. } => {}
            other => panic!("unexpected {other:?}"),
        }
        // {y <= 0, -y <= -1}: infeasible with a Farkas certificate
        let unsat = MibSystem::new(
            0,
            1,
            vec![],
            LinearBlock::default(),
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[0, -1]) },
            Form::Standard,
        )
        .unwrap();
        match solve(&unsat, &rat(1, 2), &quick_budget()).unwrap() {
            GapVerdict::Unsat { tree } => match tree {
                UnsatNode::Decomposed { pieces } => {
                    assert_eq!(pieces.len(), 1);
                    assert!(matches!(*pieces[0].1, UnsatNode::RealBlockInfeasible { .. }));
                }
                other => panic!("unexpected tree {other:?}"),
            },
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unbounded_system_is_an_error() {
        let s = MibSystem::new(
            1,
            1,
            vec![BilinearRow { a: vec![iv(&[1])], b: iv(&[0]), c: int(1) }],
            MibSystem::standard_int_block(1),
            LinearBlock { rows: vec![iv(&[-1])], rhs: iv(&[0]) },
            Form::Standard,
        )
        .unwrap();
        assert!(matches!(
            solve(&s, &rat(1, 2), &quick_budget()),
            Err(EngineError::UnboundedSystem)
        ));
    }

    #[test]
    fn oracle_examples() {
        let eps = rat(1, 2);
        match oracle(&sat_toy(), &eps, 3) {
            OracleVerdict::SatSlack { x, .. } => assert_eq!(x, iv(&[0])),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(oracle(&unsat_toy(), &eps, 10), OracleVerdict::UnsatWithinBound);
    }

    #[test]
    fn deterministic_verdicts() {
        let s = sat_toy();
        let a = format!("{:?}", solve(&s, &rat(1, 2), &quick_budget()).unwrap());
        let b = format!("{:?}", solve(&s, &rat(1, 2), &quick_budget()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn integer_point_search_examples() {
        // P(y) = { x >= 0, x <= 5/2 } at y = 1 via the row 2 x y <= 5
        let s = MibSystem::new(
            1,
            1,
            vec![BilinearRow { a: vec![iv(&[2])], b: iv(&[0]), c: int(5) }],
            MibSystem::standard_int_block(1),
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
            Form::Standard,
        )
        .unwrap();
        let y = vec![Rat::one()];
        assert_eq!(find_integer_point(&s, &y, None), Some(iv(&[0])));

        // a region around (3/2, 3/2) that excludes the origin: the search
        // lands in {1, 2}^2
        let s2 = MibSystem::new(
            2,
            1,
            vec![
                BilinearRow { a: vec![iv(&[2]), iv(&[0])], b: iv(&[0]), c: int(7) },
                BilinearRow { a: vec![iv(&[0]), iv(&[2])], b: iv(&[0]), c: int(7) },
                BilinearRow { a: vec![iv(&[-1]), iv(&[0])], b: iv(&[0]), c: int(-1) },
                BilinearRow { a: vec![iv(&[0]), iv(&[-1])], b: iv(&[0]), c: int(-1) },
            ],
            MibSystem::standard_int_block(2),
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
            Form::Standard,
        )
        .unwrap();
        let found = find_integer_point(&s2, &vec![Rat::one()], None).unwrap();
        for v in &found {
            assert!(*v >= int(1) && *v <= int(2), "point {found:?} outside {{1,2}}^2");
        }
    }
}
