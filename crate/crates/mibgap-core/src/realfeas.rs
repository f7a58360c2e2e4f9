//! Certified feasibility kernel for systems of degree-2 polynomial
//! inequalities over bounded real domains: returns an exactly verified
//! rational witness or a refutation cover in which every box carries a
//! re-checkable certificate (an interval bound or Farkas multipliers over an
//! explicit linear relaxation).
//!
//! The search branches on the variables that occur in quadratic monomials.
//! Per box it first tries witness extraction (exact LP at sampled branch
//! points over the remaining, linearly occurring variables), then refutation
//! (interval evaluation, and an LP relaxation built from coefficient
//! interval bounds plus McCormick envelopes whose infeasibility yields
//! Farkas multipliers), and bisects otherwise. A weakening budget `delta`
//! bounds the required resolution, which makes the procedure terminate on
//! fully boxed problems: a small enough box either weak-passes at its center
//! or is refuted by one of the two certificates.
//!
//! Variables may be left unbounded above (engine-internal relaxations use
//! this for the integer-side variables); such variables must occur linearly
//! or multiplied only by boxed variables, and refutation certificates remain
//! sound because they never assume an upper bound. Totality is only
//! guaranteed for fully boxed problems; half-bounded searches can exhaust
//! their budget.

use crate::geometry::{self, Direction, LpOutcome, Polyhedron};
use crate::num::{Int, Rat};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RealFeasError {
    #[error("variable {0} has no finite lower bound")]
    NoLowerBound(usize),
    #[error("decide() requires finite boxes on every variable; variable {0} is unbounded")]
    Unbounded(usize),
    #[error("quadratic monomial ({0}, {1}) multiplies two unbounded variables")]
    UnboundedProduct(usize, usize),
    #[error("weakening budget must be positive")]
    NonPositiveDelta,
    #[error("internal resolution failure at minimum box width")]
    ResolutionFailure,
}

/// `[lo, hi]` domain; `hi = None` means unbounded above.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarBounds {
    pub lo: Rat,
    pub hi: Option<Rat>,
}

impl VarBounds {
    pub fn boxed(lo: Rat, hi: Rat) -> Self {
        assert!(lo <= hi, "empty variable domain");
        VarBounds { lo, hi: Some(hi) }
    }
    pub fn at_least(lo: Rat) -> Self {
        VarBounds { lo, hi: None }
    }
}

/// Polynomial row `linear + quad <= rhs` of total degree at most 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyRow {
    pub linear: Vec<(usize, Rat)>,
    /// `(i, j, c)` meaning `c * v_i * v_j`
    pub quad: Vec<(usize, usize, Rat)>,
    pub rhs: Rat,
    pub weakenable: bool,
}

impl PolyRow {
    pub fn eval(&self, point: &[Rat]) -> Rat {
        let mut acc = Rat::zero();
        for (v, c) in &self.linear {
            acc += c * &point[*v];
        }
        for (i, j, c) in &self.quad {
            acc += c * &point[*i] * &point[*j];
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub struct RealProblem {
    pub vars: Vec<VarBounds>,
    pub rows: Vec<PolyRow>,
    /// weakening budget; weakenable rows may be exceeded by at most this
    pub delta: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RealVerdict {
    Witness { point: Vec<Rat>, weakened: bool },
    Refuted { cover: RefuteTree },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelOutcome {
    Verdict(RealVerdict),
    /// budget ran out, or a half-bounded search could make no progress
    Exhausted { nodes: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessCheck {
    ExactPass,
    WeakPass,
    Fail { row: usize },
}

/// Exact classification of a point against a problem. Domain bounds are
/// treated as hard rows (reported with row index past the polynomial rows).
pub fn check_witness(p: &RealProblem, point: &[Rat]) -> WitnessCheck {
    assert_eq!(point.len(), p.vars.len(), "dimension mismatch");
    for (v, b) in p.vars.iter().enumerate() {
        let bad_lo = point[v] < b.lo;
        let bad_hi = b.hi.as_ref().is_some_and(|h| &point[v] > h);
        if bad_lo || bad_hi {
            return WitnessCheck::Fail { row: p.rows.len() + v };
        }
    }
    let mut weak = false;
    for (i, row) in p.rows.iter().enumerate() {
        let v = row.eval(point);
        if v <= row.rhs {
            continue;
        }
        if row.weakenable && v <= &row.rhs + &p.delta {
            weak = true;
        } else {
            return WitnessCheck::Fail { row: i };
        }
    }
    if weak {
        WitnessCheck::WeakPass
    } else {
        WitnessCheck::ExactPass
    }
}

// ---------------------------------------------------------------------------
// exact interval arithmetic with open upper endpoints
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ext {
    NegInf,
    Fin(Rat),
    PosInf,
}

impl Ext {
    fn add(&self, other: &Ext) -> Ext {
        match (self, other) {
            (Ext::NegInf, Ext::PosInf) | (Ext::PosInf, Ext::NegInf) => {
                unreachable!("opposite infinities never meet in bound sums")
            }
            (Ext::NegInf, _) | (_, Ext::NegInf) => Ext::NegInf,
            (Ext::PosInf, _) | (_, Ext::PosInf) => Ext::PosInf,
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
        }
    }

    /// Bound product with the convention `0 * inf = 0`, sound here because
    /// infinities only mark missing bounds of finite real quantities.
    fn mul(&self, other: &Ext) -> Ext {
        let sign = |e: &Ext| match e {
            Ext::NegInf => -1,
            Ext::PosInf => 1,
            Ext::Fin(r) => {
                if r.is_positive() {
                    1
                } else if r.is_negative() {
                    -1
                } else {
                    0
                }
            }
        };
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a * b),
            _ => match sign(self) * sign(other) {
                0 => Ext::Fin(Rat::zero()),
                1 => Ext::PosInf,
                _ => Ext::NegInf,
            },
        }
    }

    fn le(&self, other: &Ext) -> bool {
        match (self, other) {
            (Ext::NegInf, _) | (_, Ext::PosInf) => true,
            (_, Ext::NegInf) | (Ext::PosInf, _) => false,
            (Ext::Fin(a), Ext::Fin(b)) => a <= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ival {
    pub lo: Ext,
    pub hi: Ext,
}

impl Ival {
    fn point(r: &Rat) -> Ival {
        Ival { lo: Ext::Fin(r.clone()), hi: Ext::Fin(r.clone()) }
    }

    fn add(&self, other: &Ival) -> Ival {
        Ival { lo: self.lo.add(&other.lo), hi: self.hi.add(&other.hi) }
    }

    fn mul(&self, other: &Ival) -> Ival {
        let cands = [
            self.lo.mul(&other.lo),
            self.lo.mul(&other.hi),
            self.hi.mul(&other.lo),
            self.hi.mul(&other.hi),
        ];
        let mut lo = cands[0].clone();
        let mut hi = cands[0].clone();
        for c in &cands[1..] {
            if c.le(&lo) {
                lo = c.clone();
            }
            if hi.le(c) {
                hi = c.clone();
            }
        }
        Ival { lo, hi }
    }

    fn scale(&self, c: &Rat) -> Ival {
        self.mul(&Ival::point(c))
    }
}

fn var_interval(b: &(Rat, Option<Rat>)) -> Ival {
    Ival {
        lo: Ext::Fin(b.0.clone()),
        hi: match &b.1 {
            Some(h) => Ext::Fin(h.clone()),
            None => Ext::PosInf,
        },
    }
}

/// Interval extension of a row's left-hand side over the given boxes.
fn row_interval(row: &PolyRow, boxes: &[(Rat, Option<Rat>)]) -> Ival {
    let mut acc = Ival::point(&Rat::zero());
    for (v, c) in &row.linear {
        acc = acc.add(&var_interval(&boxes[*v]).scale(c));
    }
    for (i, j, c) in &row.quad {
        let prod = var_interval(&boxes[*i]).mul(&var_interval(&boxes[*j]));
        acc = acc.add(&prod.scale(c));
    }
    acc
}

// ---------------------------------------------------------------------------
// refutation certificates
// ---------------------------------------------------------------------------

/// Provenance of one linear row in a per-box relaxation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelaxRowKind {
    /// sound lower-linearization of problem row `row` on this box
    OriginalLower { row: usize },
    /// McCormick envelope row `which` (0..4) for product variable `prod`
    McCormick { prod: usize, which: u8 },
    /// `-v <= -lo`
    VarLower { var: usize },
    /// `v <= hi`
    VarUpper { var: usize },
}

/// One linear row over the extended variable space (original variables
/// followed by product variables).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelaxRow {
    pub kind: RelaxRowKind,
    /// coefficients over extended variables, sparse
    pub coeffs: Vec<(usize, Rat)>,
    pub rhs: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoxCert {
    /// interval lower bound of the row's lhs exceeds its rhs on this box
    IntervalViolation { row: usize, lower: Rat },
    /// nonnegative multipliers over an explicit linear relaxation combining
    /// to `0 <= negative`
    FarkasRelaxation { products: Vec<(usize, usize)>, rows: Vec<RelaxRow>, lambda: Vec<Rat> },
    /// nonnegative multipliers over the problem rows and variable bound
    /// rows whose exact polynomial combination has an interval lower bound
    /// exceeding the combined rhs on this box (cancelling monomials makes
    /// this decisive for uniform contradictions)
    RowCombination { lambda: Vec<Rat> },
}

/// Fixed row order for `RowCombination` certificates: problem rows, then a
/// lower-bound row `-v <= -lo` per variable, then an upper-bound row
/// `v <= hi` per boxed variable.
pub fn combination_rows(p: &RealProblem, boxes: &[(Rat, Option<Rat>)]) -> Vec<PolyRow> {
    let mut rows: Vec<PolyRow> = p.rows.clone();
    for (v, (lo, _)) in boxes.iter().enumerate() {
        rows.push(PolyRow {
            linear: vec![(v, -Rat::one())],
            quad: Vec::new(),
            rhs: -lo.clone(),
            weakenable: false,
        });
    }
    for (v, (_, hi)) in boxes.iter().enumerate() {
        if let Some(h) = hi {
            rows.push(PolyRow {
                linear: vec![(v, Rat::one())],
                quad: Vec::new(),
                rhs: h.clone(),
                weakenable: false,
            });
        }
    }
    rows
}

/// Exact polynomial combination `sum lambda_r * row_r` as a single row.
fn combine_rows(rows: &[PolyRow], lambda: &[Rat]) -> PolyRow {
    use std::collections::BTreeMap;
    let mut linear: BTreeMap<usize, Rat> = BTreeMap::new();
    let mut quad: BTreeMap<(usize, usize), Rat> = BTreeMap::new();
    let mut rhs = Rat::zero();
    for (l, row) in lambda.iter().zip(rows) {
        if l.is_zero() {
            continue;
        }
        for (v, c) in &row.linear {
            *linear.entry(*v).or_insert_with(Rat::zero) += l * c;
        }
        for (i, j, c) in &row.quad {
            let key = (*i.min(j), *i.max(j));
            *quad.entry(key).or_insert_with(Rat::zero) += l * c;
        }
        rhs += l * &row.rhs;
    }
    PolyRow {
        linear: linear.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        quad: quad
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((i, j), c)| (i, j, c))
            .collect(),
        rhs,
        weakenable: false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefuteTree {
    Leaf { boxes: Vec<(Rat, Option<Rat>)>, cert: BoxCert },
    Split { var: usize, at: Rat, below: Box<RefuteTree>, above: Box<RefuteTree> },
}

impl RefuteTree {
    /// Flatten to the list of certified leaf boxes.
    pub fn leaves(&self) -> Vec<(&Vec<(Rat, Option<Rat>)>, &BoxCert)> {
        match self {
            RefuteTree::Leaf { boxes, cert } => vec![(boxes, cert)],
            RefuteTree::Split { below, above, .. } => {
                let mut v = below.leaves();
                v.extend(above.leaves());
                v
            }
        }
    }
}

// ---------------------------------------------------------------------------
// kernel
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct KernelBudget {
    pub max_nodes: u64,
}

impl Default for KernelBudget {
    fn default() -> Self {
        KernelBudget { max_nodes: u64::MAX }
    }
}

struct Kernel<'a> {
    p: &'a RealProblem,
    branch_vars: Vec<usize>,
    lp_vars: Vec<usize>,
    /// sorted unique (i, j) products of branch variables, i <= j
    products: Vec<(usize, usize)>,
    width_min: Option<Rat>,
    stuck_floor: Rat,
    nodes: u64,
    max_nodes: u64,
    fully_boxed: bool,
}

enum Explore {
    Witness(Vec<Rat>, bool),
    Refuted(RefuteTree),
    Exhausted,
}

/// Decide feasibility of a fully boxed problem. Always terminates with a
/// verdict: the weakening budget bounds the box resolution at which every
/// box either weak-passes at a sampled point or carries a certificate.
pub fn decide(p: &RealProblem) -> Result<RealVerdict, RealFeasError> {
    for (v, b) in p.vars.iter().enumerate() {
        if b.hi.is_none() {
            return Err(RealFeasError::Unbounded(v));
        }
    }
    match decide_budgeted(p, &KernelBudget::default())? {
        KernelOutcome::Verdict(v) => Ok(v),
        KernelOutcome::Exhausted { .. } => Err(RealFeasError::ResolutionFailure),
    }
}

/// Budgeted variant that also accepts variables unbounded above.
pub fn decide_budgeted(
    p: &RealProblem,
    budget: &KernelBudget,
) -> Result<KernelOutcome, RealFeasError> {
    if !p.delta.is_positive() {
        return Err(RealFeasError::NonPositiveDelta);
    }
    let n = p.vars.len();
    for (v, b) in p.vars.iter().enumerate() {
        if let Some(h) = &b.hi {
            if h < &b.lo {
                // empty domain: the bound pair of v combines to a contradiction
                let boxes: Vec<(Rat, Option<Rat>)> =
                    p.vars.iter().map(|b| (b.lo.clone(), b.hi.clone())).collect();
                let rows = combination_rows(p, &boxes);
                let mut lambda = vec![Rat::zero(); rows.len()];
                lambda[p.rows.len() + v] = Rat::one();
                let upper_idx = p.rows.len()
                    + n
                    + p.vars.iter().take(v).filter(|b| b.hi.is_some()).count();
                lambda[upper_idx] = Rat::one();
                let cert = BoxCert::RowCombination { lambda };
                debug_assert!(verify_box_cert(p, &boxes, &cert).is_ok());
                return Ok(KernelOutcome::Verdict(RealVerdict::Refuted {
                    cover: RefuteTree::Leaf { boxes, cert },
                }));
            }
        }
    }

    // classify variables
    let mut in_quad = vec![false; n];
    for row in &p.rows {
        for (i, j, c) in &row.quad {
            if c.is_zero() {
                continue;
            }
            in_quad[*i] = true;
            in_quad[*j] = true;
            let ui = p.vars[*i].hi.is_none();
            let uj = p.vars[*j].hi.is_none();
            if ui && uj {
                return Err(RealFeasError::UnboundedProduct(*i, *j));
            }
        }
    }
    let branch_vars: Vec<usize> =
        (0..n).filter(|&v| in_quad[v] && p.vars[v].hi.is_some()).collect();
    let lp_vars: Vec<usize> = (0..n).filter(|v| !branch_vars.contains(v)).collect();
    let mut products: Vec<(usize, usize)> = Vec::new();
    for row in &p.rows {
        for (i, j, c) in &row.quad {
            if c.is_zero() {
                continue;
            }
            let key = (*i.min(j), *i.max(j));
            if !products.contains(&key) {
                products.push(key);
            }
        }
    }
    products.sort();

    let fully_boxed = p.vars.iter().all(|b| b.hi.is_some());
    let width_min = if fully_boxed { Some(resolution_width(p)) } else { None };
    let stuck_floor = &p.delta / crate::num::rat_int(1 << 20);

    let mut kernel = Kernel {
        p,
        branch_vars,
        lp_vars,
        products,
        width_min,
        stuck_floor,
        nodes: 0,
        max_nodes: budget.max_nodes,
        fully_boxed,
    };
    let root: Vec<(Rat, Option<Rat>)> =
        p.vars.iter().map(|b| (b.lo.clone(), b.hi.clone())).collect();
    let out = kernel.explore(&root, 0)?;
    Ok(match out {
        Explore::Witness(point, weakened) => {
            KernelOutcome::Verdict(RealVerdict::Witness { point, weakened })
        }
        Explore::Refuted(tree) => KernelOutcome::Verdict(RealVerdict::Refuted { cover: tree }),
        Explore::Exhausted => KernelOutcome::Exhausted { nodes: kernel.nodes },
    })
}

/// Resolution below which every box of a fully boxed problem is decidable:
/// interval widths of all rows shrink under `delta / 2` there.
fn resolution_width(p: &RealProblem) -> Rat {
    let mag = |v: usize| -> Rat {
        let b = &p.vars[v];
        let hi = b.hi.as_ref().expect("fully boxed");
        b.lo.abs().max(hi.abs())
    };
    let mut k_max = Rat::one();
    for row in &p.rows {
        let mut k = Rat::zero();
        for (v, c) in &row.linear {
            let _ = v;
            k += c.abs();
        }
        for (i, j, c) in &row.quad {
            k += c.abs() * (mag(*i) + mag(*j) + Rat::one());
        }
        if k > k_max {
            k_max = k;
        }
    }
    let dim = crate::num::rat_int(p.vars.len().max(1) as i64);
    (&p.delta / crate::num::rat_int(2)) / (k_max * dim + Rat::one())
}

impl<'a> Kernel<'a> {
    fn explore(&mut self, boxes: &[(Rat, Option<Rat>)], depth: usize) -> Result<Explore, RealFeasError> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Ok(Explore::Exhausted);
        }

        // refутation by plain interval evaluation
        for (i, row) in self.p.rows.iter().enumerate() {
            let iv = row_interval(row, boxes);
            if let Ext::Fin(lo) = &iv.lo {
                if lo > &row.rhs {
                    return Ok(Explore::Refuted(RefuteTree::Leaf {
                        boxes: boxes.to_vec(),
                        cert: BoxCert::IntervalViolation { row: i, lower: lo.clone() },
                    }));
                }
            }
        }

        // witness candidates: box centre, corners of small branch sets, and
        // the branch coordinates of a feasible relaxation point
        let mut candidates: Vec<Vec<Rat>> = vec![self.center_candidate(boxes)];
        if self.branch_vars.len() <= 3 {
            self.push_corner_candidates(boxes, &mut candidates);
        }

        // relaxation LP: refute or harvest a candidate
        let mut farkas_cert: Option<BoxCert> = None;
        match self.relaxation_lp(boxes) {
            RelaxOutcome::Infeasible(cert) => farkas_cert = Some(cert),
            RelaxOutcome::Feasible(point) => candidates.push(point),
        }

        let mut weak: Option<Vec<Rat>> = None;
        let mut center_infeasible = false;
        for (ci, cand) in candidates.iter().enumerate() {
            match self.try_witness_at(boxes, cand) {
                CandidateOutcome::Exact(point) => return Ok(Explore::Witness(point, false)),
                CandidateOutcome::Weak(point) => {
                    if weak.is_none() {
                        weak = Some(point);
                    }
                }
                CandidateOutcome::Infeasible => {
                    if ci == 0 {
                        center_infeasible = true;
                    }
                }
            }
        }

        // exact Farkas at the centre, verified over the whole box by
        // polynomial combination: decisive when the contradiction is
        // uniform in the branch variables
        if center_infeasible && !self.lp_vars.is_empty() {
            if let Some(cert) = self.row_combination_refute(boxes) {
                return Ok(Explore::Refuted(RefuteTree::Leaf { boxes: boxes.to_vec(), cert }));
            }
        }

        if let Some(cert) = farkas_cert {
            return Ok(Explore::Refuted(RefuteTree::Leaf { boxes: boxes.to_vec(), cert }));
        }
        if let Some(point) = weak {
            return Ok(Explore::Witness(point, true));
        }

        // split the widest branch interval, round-robin on ties
        let split = self.pick_split(boxes, depth);
        let Some((var, mid)) = split else {
            // nothing left to split
            return if self.fully_boxed {
                Err(RealFeasError::ResolutionFailure)
            } else {
                Ok(Explore::Exhausted)
            };
        };
        let mut below = boxes.to_vec();
        below[var].1 = Some(mid.clone());
        let mut above = boxes.to_vec();
        above[var].0 = mid.clone();
        let lo_out = self.explore(&below, depth + 1)?;
        let lo_tree = match lo_out {
            Explore::Witness(p, w) => return Ok(Explore::Witness(p, w)),
            Explore::Exhausted => return Ok(Explore::Exhausted),
            Explore::Refuted(t) => t,
        };
        let hi_out = self.explore(&above, depth + 1)?;
        let hi_tree = match hi_out {
            Explore::Witness(p, w) => return Ok(Explore::Witness(p, w)),
            Explore::Exhausted => return Ok(Explore::Exhausted),
            Explore::Refuted(t) => t,
        };
        Ok(Explore::Refuted(RefuteTree::Split {
            var,
            at: mid,
            below: Box::new(lo_tree),
            above: Box::new(hi_tree),
        }))
    }

    fn pick_split(&self, boxes: &[(Rat, Option<Rat>)], depth: usize) -> Option<(usize, Rat)> {
        let nb = self.branch_vars.len();
        if nb == 0 {
            return None;
        }
        let width = |v: usize| -> Rat {
            let (lo, hi) = &boxes[v];
            match hi {
                Some(h) => h - lo,
                None => unreachable!("branch variables are boxed"),
            }
        };
        let mut best: Option<(usize, Rat)> = None;
        for k in 0..nb {
            let v = self.branch_vars[(depth + k) % nb];
            let w = width(v);
            match &best {
                None => best = Some((v, w)),
                Some((_, bw)) if w > *bw => best = Some((v, w)),
                _ => {}
            }
        }
        let (var, w) = best?;
        let floor = match &self.width_min {
            Some(wm) => wm.clone(),
            None => self.stuck_floor.clone(),
        };
        if w <= floor || w.is_zero() {
            return None;
        }
        let (lo, hi) = &boxes[var];
        let mid = (lo + hi.as_ref().unwrap()) / crate::num::rat_int(2);
        Some((var, mid))
    }

    fn center_candidate(&self, boxes: &[(Rat, Option<Rat>)]) -> Vec<Rat> {
        boxes
            .iter()
            .map(|(lo, hi)| match hi {
                Some(h) => (lo + h) / crate::num::rat_int(2),
                None => lo + Rat::one(),
            })
            .collect()
    }

    fn push_corner_candidates(&self, boxes: &[(Rat, Option<Rat>)], out: &mut Vec<Vec<Rat>>) {
        let nb = self.branch_vars.len();
        let base = self.center_candidate(boxes);
        for mask in 0..(1u32 << nb) {
            let mut cand = base.clone();
            for (k, &v) in self.branch_vars.iter().enumerate() {
                let (lo, hi) = &boxes[v];
                cand[v] = if mask & (1 << k) != 0 { hi.clone().unwrap() } else { lo.clone() };
            }
            out.push(cand);
        }
    }

    /// Exact feasibility at fixed branch coordinates: LP over the linearly
    /// occurring variables maximizing the margin on weakenable rows,
    /// followed by an authoritative exact re-check.
    fn try_witness_at(
        &mut self,
        boxes: &[(Rat, Option<Rat>)],
        cand: &[Rat],
    ) -> CandidateOutcome {
        let nl = self.lp_vars.len();
        if nl == 0 {
            return match check_witness(self.p, cand) {
                WitnessCheck::ExactPass => CandidateOutcome::Exact(cand.to_vec()),
                WitnessCheck::WeakPass => CandidateOutcome::Weak(cand.to_vec()),
                WitnessCheck::Fail { .. } => CandidateOutcome::Infeasible,
            };
        }
        // columns: lp vars then the margin t
        let dim = nl + 1;
        let mut a: Vec<Vec<Rat>> = Vec::new();
        let mut b: Vec<Rat> = Vec::new();
        for row in &self.p.rows {
            let mut coeffs = vec![Rat::zero(); dim];
            let mut constant = Rat::zero();
            for (v, c) in &row.linear {
                match self.lp_vars.iter().position(|x| x == v) {
                    Some(k) => coeffs[k] += c.clone(),
                    None => constant += c * &cand[*v],
                }
            }
            for (i, j, c) in &row.quad {
                if c.is_zero() {
                    continue;
                }
                let pi = self.lp_vars.iter().position(|x| x == i);
                let pj = self.lp_vars.iter().position(|x| x == j);
                match (pi, pj) {
                    (None, None) => constant += c * &cand[*i] * &cand[*j],
                    (Some(k), None) => coeffs[k] += c * &cand[*j],
                    (None, Some(k)) => coeffs[k] += c * &cand[*i],
                    (Some(_), Some(_)) => {
                        unreachable!("products of two lp variables are rejected up front")
                    }
                }
            }
            if row.weakenable {
                coeffs[nl] = Rat::one();
            }
            a.push(coeffs);
            b.push(&row.rhs - constant);
        }
        for (k, &v) in self.lp_vars.iter().enumerate() {
            let (lo, hi) = &boxes[v];
            let mut r = vec![Rat::zero(); dim];
            r[k] = -Rat::one();
            a.push(r);
            b.push(-lo.clone());
            if let Some(h) = hi {
                let mut r = vec![Rat::zero(); dim];
                r[k] = Rat::one();
                a.push(r);
                b.push(h.clone());
            }
        }
        // -delta <= t <= 1
        let mut r = vec![Rat::zero(); dim];
        r[nl] = -Rat::one();
        a.push(r);
        b.push(self.p.delta.clone());
        let mut r = vec![Rat::zero(); dim];
        r[nl] = Rat::one();
        a.push(r);
        b.push(Rat::one());

        let poly = Polyhedron::new(a, b).expect("consistent rows");
        let mut obj = vec![Rat::zero(); dim];
        obj[nl] = Rat::one();
        match geometry::lp_solve(&poly, &obj, Direction::Maximize) {
            Ok(LpOutcome::Feasible { point, .. }) => {
                let mut full = cand.to_vec();
                for (k, &v) in self.lp_vars.iter().enumerate() {
                    full[v] = point[k].clone();
                }
                match check_witness(self.p, &full) {
                    WitnessCheck::ExactPass => CandidateOutcome::Exact(full),
                    WitnessCheck::WeakPass => CandidateOutcome::Weak(full),
                    WitnessCheck::Fail { .. } => CandidateOutcome::Infeasible,
                }
            }
            Ok(LpOutcome::Infeasible { .. }) => CandidateOutcome::Infeasible,
            Ok(LpOutcome::Unbounded { .. }) | Err(_) => {
                unreachable!("margin column is boxed, LP cannot be unbounded")
            }
        }
    }

    /// Plain (unweakened) LP at the box centre over the combination row
    /// list; an infeasibility certificate is kept only when its exact
    /// polynomial combination refutes the entire box.
    fn row_combination_refute(&mut self, boxes: &[(Rat, Option<Rat>)]) -> Option<BoxCert> {
        let center = self.center_candidate(boxes);
        let rows = combination_rows(self.p, boxes);
        let nl = self.lp_vars.len();
        let mut a: Vec<Vec<Rat>> = Vec::with_capacity(rows.len());
        let mut b: Vec<Rat> = Vec::with_capacity(rows.len());
        for row in &rows {
            let mut coeffs = vec![Rat::zero(); nl];
            let mut constant = Rat::zero();
            for (v, c) in &row.linear {
                match self.lp_vars.iter().position(|x| x == v) {
                    Some(k) => coeffs[k] += c.clone(),
                    None => constant += c * &center[*v],
                }
            }
            for (i, j, c) in &row.quad {
                if c.is_zero() {
                    continue;
                }
                let pi = self.lp_vars.iter().position(|x| x == i);
                let pj = self.lp_vars.iter().position(|x| x == j);
                match (pi, pj) {
                    (None, None) => constant += c * &center[*i] * &center[*j],
                    (Some(k), None) => coeffs[k] += c * &center[*j],
                    (None, Some(k)) => coeffs[k] += c * &center[*i],
                    (Some(_), Some(_)) => {
                        unreachable!("products of two lp variables are rejected up front")
                    }
                }
            }
            a.push(coeffs);
            b.push(&row.rhs - constant);
        }
        let poly = Polyhedron::new(a, b).expect("consistent rows");
        let zero = vec![Rat::zero(); nl];
        let LpOutcome::Infeasible { farkas } =
            geometry::lp_solve(&poly, &zero, Direction::Maximize).ok()?
        else {
            return None;
        };
        let combined = combine_rows(&rows, &farkas);
        let iv = row_interval(&combined, boxes);
        match iv.lo {
            Ext::Fin(lo) if lo > combined.rhs => {
                let cert = BoxCert::RowCombination { lambda: farkas };
                debug_assert!(verify_box_cert(self.p, boxes, &cert).is_ok());
                Some(cert)
            }
            _ => None,
        }
    }

    /// Per-box linear relaxation over original variables plus product
    /// variables. Infeasibility yields a recorded Farkas certificate; a
    /// feasible point is harvested as a witness candidate.
    fn relaxation_lp(&mut self, boxes: &[(Rat, Option<Rat>)]) -> RelaxOutcome {
        let rows = build_relaxation_rows(self.p, &self.products, boxes);
        let n_ext = self.p.vars.len() + self.products.len();
        let a: Vec<Vec<Rat>> = rows
            .iter()
            .map(|r| {
                let mut dense = vec![Rat::zero(); n_ext];
                for (v, c) in &r.coeffs {
                    dense[*v] += c.clone();
                }
                dense
            })
            .collect();
        let b: Vec<Rat> = rows.iter().map(|r| r.rhs.clone()).collect();
        let poly = Polyhedron::new(a, b).expect("consistent relaxation");
        let zero = vec![Rat::zero(); n_ext];
        match geometry::lp_solve(&poly, &zero, Direction::Maximize) {
            Ok(LpOutcome::Feasible { point, .. }) => {
                RelaxOutcome::Feasible(point[..self.p.vars.len()].to_vec())
            }
            Ok(LpOutcome::Infeasible { farkas }) => {
                let cert = BoxCert::FarkasRelaxation {
                    products: self.products.clone(),
                    rows,
                    lambda: farkas,
                };
                debug_assert!(verify_box_cert(self.p, boxes, &cert).is_ok());
                RelaxOutcome::Infeasible(cert)
            }
            Ok(LpOutcome::Unbounded { .. }) | Err(_) => {
                unreachable!("feasibility objective is constant")
            }
        }
    }
}

enum RelaxOutcome {
    Feasible(Vec<Rat>),
    Infeasible(BoxCert),
}

enum CandidateOutcome {
    Exact(Vec<Rat>),
    Weak(Vec<Rat>),
    Infeasible,
}

/// Build the sound linear relaxation of a problem on a box: variable bound
/// rows, envelope rows binding each product variable to its factors (full
/// McCormick when both factors are boxed, the two envelope rows that need
/// no upper bound when one factor is unbounded above), and the problem rows
/// rewritten exactly over the product variables.
fn build_relaxation_rows(
    p: &RealProblem,
    products: &[(usize, usize)],
    boxes: &[(Rat, Option<Rat>)],
) -> Vec<RelaxRow> {
    let n = p.vars.len();
    let prod_index = |i: usize, j: usize| -> Option<usize> {
        let key = (i.min(j), i.max(j));
        products.iter().position(|&k| k == key)
    };
    let mut rows: Vec<RelaxRow> = Vec::new();
    for v in 0..n {
        rows.push(RelaxRow {
            kind: RelaxRowKind::VarLower { var: v },
            coeffs: vec![(v, -Rat::one())],
            rhs: -boxes[v].0.clone(),
        });
        if let Some(h) = &boxes[v].1 {
            rows.push(RelaxRow {
                kind: RelaxRowKind::VarUpper { var: v },
                coeffs: vec![(v, Rat::one())],
                rhs: h.clone(),
            });
        }
    }
    for (pidx, &(i, j)) in products.iter().enumerate() {
        let w = n + pidx;
        let mk = |which: u8, ci: Rat, cj: Rat, cw: Rat, rhs: Rat| {
            let mut coeffs: Vec<(usize, Rat)> = Vec::new();
            if i == j {
                coeffs.push((i, ci + cj));
            } else {
                coeffs.push((i, ci));
                coeffs.push((j, cj));
            }
            coeffs.push((w, cw));
            RelaxRow { kind: RelaxRowKind::McCormick { prod: pidx, which }, coeffs, rhs }
        };
        match (&boxes[i].1, &boxes[j].1) {
            (Some(hi_), Some(hj)) => {
                let (li, lj) = (&boxes[i].0, &boxes[j].0);
                // w >= lj vi + li vj - li lj   w >= hj vi + hi vj - hi hj
                // w <= lj vi + hi vj - hi lj   w <= hj vi + li vj - li hj
                rows.push(mk(0, lj.clone(), li.clone(), -Rat::one(), li * lj));
                rows.push(mk(1, hj.clone(), hi_.clone(), -Rat::one(), hi_ * hj));
                rows.push(mk(2, -lj.clone(), -hi_.clone(), Rat::one(), -(hi_ * lj)));
                rows.push(mk(3, -hj.clone(), -li.clone(), Rat::one(), -(li * hj)));
            }
            _ => {
                // exactly one factor unbounded above (two-unbounded products
                // are rejected during classification); the derivations
                // (u - ulo)(b - blo) >= 0 and (u - ulo)(bhi - b) >= 0 need
                // no upper bound on u
                let (u, bx) = if boxes[i].1.is_none() { (i, j) } else { (j, i) };
                let ulo = &boxes[u].0;
                let blo = &boxes[bx].0;
                let bhi = boxes[bx].1.as_ref().expect("one factor is boxed");
                // w >= blo u + ulo b - ulo blo -> -w + blo u + ulo b <= ulo blo
                let mut coeffs = vec![(u, blo.clone()), (bx, ulo.clone()), (w, -Rat::one())];
                rows.push(RelaxRow {
                    kind: RelaxRowKind::McCormick { prod: pidx, which: 0 },
                    coeffs: coeffs.clone(),
                    rhs: ulo * blo,
                });
                // w <= bhi u + ulo b - ulo bhi -> w - bhi u - ulo b <= -ulo bhi
                coeffs = vec![(u, -bhi.clone()), (bx, -ulo.clone()), (w, Rat::one())];
                rows.push(RelaxRow {
                    kind: RelaxRowKind::McCormick { prod: pidx, which: 1 },
                    coeffs,
                    rhs: -(ulo * bhi),
                });
            }
        }
    }
    for (ridx, row) in p.rows.iter().enumerate() {
        // exact rewrite over product variables
        let mut coeffs: Vec<(usize, Rat)> = Vec::new();
        for (v, c) in &row.linear {
            coeffs.push((*v, c.clone()));
        }
        for (i, j, c) in &row.quad {
            if c.is_zero() {
                continue;
            }
            let pidx = prod_index(*i, *j).expect("every quad monomial has a product variable");
            coeffs.push((n + pidx, c.clone()));
        }
        rows.push(RelaxRow {
            kind: RelaxRowKind::OriginalLower { row: ridx },
            coeffs,
            rhs: row.rhs.clone(),
        });
    }
    rows
}

// ---------------------------------------------------------------------------
// independent certificate verification
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("refutation tree does not tile the declared domain")]
    BadPartition,
    #[error("certificate on a leaf box is invalid: {0}")]
    BadCert(String),
}

/// Re-check a refutation cover in exact arithmetic, independently of the
/// search: the tree must tile the problem domain and every leaf certificate
/// must hold on its box.
pub fn verify_refutation(p: &RealProblem, tree: &RefuteTree) -> Result<(), VerifyError> {
    let root: Vec<(Rat, Option<Rat>)> =
        p.vars.iter().map(|b| (b.lo.clone(), b.hi.clone())).collect();
    verify_tree(p, &root, tree)
}

fn verify_tree(
    p: &RealProblem,
    boxes: &[(Rat, Option<Rat>)],
    tree: &RefuteTree,
) -> Result<(), VerifyError> {
    match tree {
        RefuteTree::Leaf { boxes: leaf, cert } => {
            if leaf.as_slice() != boxes {
                return Err(VerifyError::BadPartition);
            }
            verify_box_cert(p, boxes, cert)
        }
        RefuteTree::Split { var, at, below, above } => {
            if *var >= boxes.len() {
                return Err(VerifyError::BadPartition);
            }
            let (lo, hi) = &boxes[*var];
            let inside = lo <= at && hi.as_ref().map(|h| at <= h).unwrap_or(true);
            if !inside {
                return Err(VerifyError::BadPartition);
            }
            let mut b = boxes.to_vec();
            b[*var].1 = Some(at.clone());
            verify_tree(p, &b, below)?;
            let mut a = boxes.to_vec();
            a[*var].0 = at.clone();
            verify_tree(p, &a, above)
        }
    }
}

fn verify_box_cert(
    p: &RealProblem,
    boxes: &[(Rat, Option<Rat>)],
    cert: &BoxCert,
) -> Result<(), VerifyError> {
    match cert {
        BoxCert::IntervalViolation { row, lower } => {
            let r = p.rows.get(*row).ok_or_else(|| VerifyError::BadCert("row index".into()))?;
            let iv = row_interval(r, boxes);
            match iv.lo {
                Ext::Fin(lo) if &lo >= lower && lower > &r.rhs => Ok(()),
                _ => Err(VerifyError::BadCert(format!(
                    "interval bound on row {row} does not exceed its rhs"
                ))),
            }
        }
        BoxCert::RowCombination { lambda } => {
            let rows = combination_rows(p, boxes);
            if lambda.len() != rows.len() || lambda.iter().any(|l| l.is_negative()) {
                return Err(VerifyError::BadCert("bad multipliers".into()));
            }
            let combined = combine_rows(&rows, lambda);
            match row_interval(&combined, boxes).lo {
                Ext::Fin(lo) if lo > combined.rhs => Ok(()),
                _ => Err(VerifyError::BadCert(
                    "combined row does not refute the box".into(),
                )),
            }
        }
        BoxCert::FarkasRelaxation { products, rows, lambda } => {
            // the recorded rows must be exactly the relaxation of this box
            let rebuilt = build_relaxation_rows(p, products, boxes);
            if &rebuilt != rows {
                return Err(VerifyError::BadCert("recorded relaxation rows differ".into()));
            }
            if lambda.len() != rows.len() || lambda.iter().any(|l| l.is_negative()) {
                return Err(VerifyError::BadCert("bad multipliers".into()));
            }
            let n_ext = p.vars.len() + products.len();
            let mut comb = vec![Rat::zero(); n_ext];
            let mut rhs = Rat::zero();
            for (l, row) in lambda.iter().zip(rows) {
                for (v, c) in &row.coeffs {
                    comb[*v] += l * c;
                }
                rhs += l * &row.rhs;
            }
            if comb.iter().any(|c| !c.is_zero()) {
                return Err(VerifyError::BadCert("combination does not cancel".into()));
            }
            if !rhs.is_negative() {
                return Err(VerifyError::BadCert("combination is not contradictory".into()));
            }
            Ok(())
        }
    }
}

/// Convenience constructor: bilinear row `c * v_i * v_j (+ linear) <= rhs`.
pub fn row(linear: &[(usize, Rat)], quad: &[(usize, usize, Rat)], rhs: Rat, weakenable: bool) -> PolyRow {
    PolyRow { linear: linear.to_vec(), quad: quad.to_vec(), rhs, weakenable }
}

pub fn primitive(v: &[Rat]) -> Vec<Int> {
    crate::num::primitive_direction(v)
}
