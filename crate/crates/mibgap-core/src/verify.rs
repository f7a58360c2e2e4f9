//! Independent re-verification of solver outputs: witnesses by exact
//! substitution, refutation trees by re-deriving every branch step and
//! re-checking every leaf certificate in exact arithmetic.
//!
//! Nothing here trusts solver state. Trees are replayed against the
//! instance: decompositions and branch enumerations are recomputed and must
//! match the recorded structure, relaxations are rebuilt from the recorded
//! width directions, and all Farkas and interval certificates are checked
//! by direct evaluation.

use crate::engine::{enumerate_splits, split_bound, EngineCaps, UnsatNode};
use crate::geometry::{self, Polyhedron};
use crate::mib::{
    check_assignment, substitute, to_standard_form, Assignment, CheckOutcome, MibSystem,
};
use crate::mpta::{enumerate_integer_runs_by_sequence, Mpta};
use crate::num::{norm2_sq_int, rat_int, rat_vec, to_rat, Int, Rat};
use crate::realfeas;
use crate::relax::{build_relaxed_with_dirs, compute_constants, DirectionSet};
use num_traits::{One, Signed, Zero};

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("witness check failed: {0}")]
    Witness(String),
    #[error("refutation check failed: {0}")]
    Refutation(String),
}

fn wfail(msg: impl Into<String>) -> CheckError {
    CheckError::Witness(msg.into())
}

fn rfail(msg: impl Into<String>) -> CheckError {
    CheckError::Refutation(msg.into())
}

/// Exact re-verification of a SAT witness: the assignment must satisfy
/// every row and reproduce the claimed bilinear margin.
pub fn verify_witness(
    s: &MibSystem,
    eps: &Rat,
    a: &Assignment,
    claimed_margin: Option<&Rat>,
) -> Result<(), CheckError> {
    let outcome = check_assignment(s, a, eps).map_err(|e| wfail(e.to_string()))?;
    let margin = match outcome {
        CheckOutcome::SatWithSlack { margin } | CheckOutcome::SatNoSlack { margin } => margin,
        CheckOutcome::Violated { row } => {
            return Err(wfail(format!("assignment violates row {row:?}")));
        }
    };
    if let Some(claimed) = claimed_margin {
        if claimed != &margin {
            return Err(wfail(format!(
                "claimed margin {claimed} differs from recomputed {margin}"
            )));
        }
    }
    Ok(())
}

/// Exact re-verification of an UNSAT tree against the original system.
pub fn verify_unsat_tree(s: &MibSystem, eps: &Rat, node: &UnsatNode) -> Result<(), CheckError> {
    match node {
        UnsatNode::Decomposed { pieces } => {
            let expected = to_standard_form(s).map_err(|e| rfail(e.to_string()))?;
            if expected.len() != pieces.len() {
                return Err(rfail(format!(
                    "decomposition has {} pieces, tree records {}",
                    expected.len(),
                    pieces.len()
                )));
            }
            for ((sys, map), (rec_map, child)) in expected.iter().zip(pieces) {
                if map != rec_map {
                    return Err(rfail("decomposition map differs from the recorded one"));
                }
                verify_standard_tree(sys, eps, child)?;
            }
            Ok(())
        }
        other => verify_standard_tree(s, eps, other),
    }
}

fn verify_farkas_or_fail(poly: &Polyhedron, farkas: &[Rat], what: &str) -> Result<(), CheckError> {
    if geometry::verify_farkas(poly, farkas) {
        Ok(())
    } else {
        Err(rfail(format!("invalid Farkas certificate for {what}")))
    }
}

fn verify_standard_tree(s: &MibSystem, eps: &Rat, node: &UnsatNode) -> Result<(), CheckError> {
    match node {
        UnsatNode::RealBlockInfeasible { farkas } => {
            verify_farkas_or_fail(&s.real_polyhedron(), farkas, "the real block")
        }
        UnsatNode::RealRelaxationInfeasible { refutation } => {
            let plain = crate::relax::build_plain_relaxation(s)
                .map_err(|e| rfail(e.to_string()))?;
            realfeas::verify_refutation(&plain, refutation)
                .map_err(|e| rfail(format!("plain relaxation cover: {e}")))
        }
        UnsatNode::BaseInfeasible { farkas } => {
            if s.m != 0 {
                return Err(rfail("base-case certificate on a system with integer variables"));
            }
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
            let poly = Polyhedron::new(a, b).map_err(|e| rfail(e.to_string()))?;
            verify_farkas_or_fail(&poly, farkas, "the combined linear rows")
        }
        UnsatNode::Decomposed { .. } => {
            Err(rfail("unexpected nested decomposition in a standard-form tree"))
        }
        UnsatNode::SplitRefuted { width_dirs, refutation, branch_bound, branches } => {
            let ledger = compute_constants(s, eps).map_err(|e| rfail(e.to_string()))?;
            // every recorded width direction must belong to the ledger set,
            // exactly: 4 r^2 |u|^2 < (omega + 1/2)^2
            let thr = &ledger.omega_upper + crate::num::rat(1, 2);
            let thr_sq = &thr * &thr;
            for u in width_dirs {
                if u.iter().all(|v| v.is_zero()) {
                    return Err(rfail("zero width direction"));
                }
                let lhs = rat_int(4) * &ledger.r * &ledger.r * to_rat(&norm2_sq_int(u));
                if lhs >= thr_sq {
                    return Err(rfail("width direction outside the ledger set"));
                }
            }
            // the refutation must certify the relaxation rebuilt from the
            // recorded directions
            let relaxed =
                build_relaxed_with_dirs(s, eps, &ledger, width_dirs.clone(), false)
                    .map_err(|e| rfail(e.to_string()))?;
            realfeas::verify_refutation(&relaxed.problem, refutation)
                .map_err(|e| rfail(format!("kernel cover: {e}")))?;
            // the branch bound must reach the required coverage bound
            let required = split_bound(s, eps, &ledger).map_err(|e| rfail(e.to_string()))?;
            if branch_bound < &required {
                return Err(rfail(format!(
                    "recorded branch bound {branch_bound} is below the required {required}"
                )));
            }
            if matches!(ledger.u_set, DirectionSet::TooLarge { .. }) {
                return Err(rfail("branch step recorded for a non-enumerable direction set"));
            }
            // re-enumerate the branch set and match it one for one
            let caps = EngineCaps {
                split_children: usize::MAX / 2,
                ..EngineCaps::default()
            };
            let specs = enumerate_splits(s, &ledger, branch_bound, &caps)
                .map_err(|e| rfail(e.to_string()))?
                .ok_or_else(|| rfail("branch enumeration unexpectedly failed"))?;
            if specs.len() != branches.len() {
                return Err(rfail(format!(
                    "branch step has {} children, tree records {}",
                    specs.len(),
                    branches.len()
                )));
            }
            for (spec, rec) in specs.iter().zip(branches) {
                if spec.desc != rec.desc {
                    return Err(rfail("branch label mismatch"));
                }
                if spec.map != rec.map {
                    return Err(rfail("branch substitution mismatch"));
                }
                let child = substitute(s, &rec.map.w, &rec.map.p)
                    .map_err(|e| rfail(e.to_string()))?;
                if child.m >= s.m {
                    return Err(rfail("branch child does not lose an integer variable"));
                }
                verify_standard_tree(&child, eps, &rec.child)?;
            }
            Ok(())
        }
    }
}

/// Exact re-verification of a domination witness: convex weights, the
/// combination arithmetic, the componentwise target comparison, and (when
/// enumeration bounds are recorded) that the tuple's values are all
/// realized on one common edge sequence of the automaton.
pub fn verify_domination_witness(
    a: &Mpta,
    gamma: &[Rat],
    eps: &Rat,
    lambdas: &[Rat],
    tuples: &[Vec<Int>],
    combination: &[Rat],
    enumerate: Option<(u64, u64)>,
) -> Result<(), CheckError> {
    let d = a.observers.len();
    if gamma.len() != d {
        return Err(wfail("target dimension differs from the observer count"));
    }
    if tuples.len() != d + 1 || lambdas.len() != d + 1 {
        return Err(wfail("witness must carry d+1 tuples and weights"));
    }
    if tuples.iter().any(|t| t.len() != d) || combination.len() != d {
        return Err(wfail("tuple dimension mismatch"));
    }
    if lambdas.iter().any(|l| l.is_negative()) {
        return Err(wfail("negative convex weight"));
    }
    let one: Rat = lambdas.iter().cloned().sum();
    if !one.is_one() {
        return Err(wfail("convex weights do not sum to one"));
    }
    for y in 0..d {
        let recomputed: Rat =
            (0..=d).map(|i| &lambdas[i] * to_rat(&tuples[i][y])).sum();
        if recomputed != combination[y] {
            return Err(wfail("recorded combination differs from the recomputation"));
        }
        if combination[y] > gamma[y] {
            return Err(wfail("combination exceeds the target"));
        }
    }
    let _ = eps;
    if let Some((steps, time)) = enumerate {
        let grouped = enumerate_integer_runs_by_sequence(a, steps, time);
        let all_on_common_sequence = grouped
            .values()
            .any(|vals| tuples.iter().all(|t| vals.contains(t)));
        if !all_on_common_sequence {
            return Err(wfail(
                "witness tuples are not realized on a common enumerated edge sequence",
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{solve, GapVerdict, Resources};
    use crate::mib::{BilinearRow, Form, LinearBlock};
    use crate::num::{int, rat};

    fn iv(v: &[i64]) -> Vec<Int> {
        v.iter().map(|&x| int(x)).collect()
    }

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
    fn unsat_tree_verifies_and_tampering_fails() {
        let s = unsat_toy();
        let eps = rat(1, 4);
        let budget = Resources { wall_ms: Some(60_000), max_nodes: 500_000 };
        let GapVerdict::Unsat { tree } = solve(&s, &eps, &budget).unwrap() else {
            panic!("expected unsat");
        };
        verify_unsat_tree(&s, &eps, &tree).unwrap();
        // tamper: the same tree presented for a different system must fail
        let mut other = s.clone();
        other.bilinear[1].c = crate::num::int(0);
        assert!(verify_unsat_tree(&other, &eps, &tree).is_err());
    }

    #[test]
    fn witness_verifies_and_perturbation_fails() {
        let s = unsat_toy();
        let sat = MibSystem::new(
            1,
            1,
            vec![BilinearRow { a: vec![iv(&[1])], b: iv(&[0]), c: int(1) }],
            MibSystem::standard_int_block(1),
            LinearBlock { rows: vec![iv(&[1]), iv(&[-1])], rhs: iv(&[1, 0]) },
            Form::Standard,
        )
        .unwrap();
        let eps = rat(1, 2);
        let budget = Resources::default();
        let GapVerdict::Sat { assignment, margin } = solve(&sat, &eps, &budget).unwrap() else {
            panic!("expected sat");
        };
        verify_witness(&sat, &eps, &assignment, Some(&margin)).unwrap();
        let mut bad = assignment.clone();
        bad.x[0] += 5;
        bad.y[0] = crate::num::rat_int(1);
        assert!(verify_witness(&sat, &eps, &bad, Some(&margin)).is_err());
        let _ = s;
    }
}
