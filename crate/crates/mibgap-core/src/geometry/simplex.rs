//! Exact two-phase primal simplex on standard-form problems
//! `min c.z  s.t.  M z = q, z >= 0`, with Bland's rule throughout so that
//! every run terminates and is deterministic for fixed input.
//!
//! Infeasibility returns dual row multipliers `y` with `y^T M <= 0`
//! componentwise and `y^T q > 0`; unboundedness returns an improving ray.
//! Both certificates are verified by exact substitution before they are
//! returned.

use crate::num::{Int, Rat};
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone)]
pub enum StandardOutcome {
    Optimal { solution: Vec<Rat>, value: Rat },
    /// `multipliers` is over the original (un-normalized) rows.
    Infeasible { multipliers: Vec<Rat> },
    Unbounded { solution: Vec<Rat>, ray: Vec<Rat> },
}

struct Tableau {
    /// rows x (cols + 1); last column is the rhs
    t: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rat {
        &self.t[i][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.t[row][col].clone();
        for x in self.t[row].iter_mut() {
            *x = &*x / &inv;
        }
        for i in 0..self.t.len() {
            if i != row && !self.t[i][col].is_zero() {
                let f = self.t[i][col].clone();
                for j in 0..=self.cols {
                    let v = &self.t[row][j] * &f;
                    self.t[i][j] = &self.t[i][j] - v;
                }
            }
        }
        self.basis[row] = col;
    }

    fn solution(&self) -> Vec<Rat> {
        let mut z = vec![Rat::zero(); self.cols];
        for (i, &b) in self.basis.iter().enumerate() {
            z[b] = self.rhs(i).clone();
        }
        z
    }
}

enum PhaseResult {
    Optimal,
    /// entering column with no positive pivot entry
    Unbounded(usize),
}

/// Primal simplex with Bland's rule: entering column is the lowest-index
/// eligible column, leaving row breaks ratio ties by lowest basic variable.
fn run_simplex(tab: &mut Tableau, cost: &[Rat], allowed: impl Fn(usize) -> bool) -> PhaseResult {
    loop {
        // simplex multipliers via basic costs, then reduced costs
        let mut entering = None;
        for j in 0..tab.cols {
            if !allowed(j) || tab.basis.contains(&j) {
                continue;
            }
            let mut red = cost[j].clone();
            for (i, &b) in tab.basis.iter().enumerate() {
                if !cost[b].is_zero() && !tab.t[i][j].is_zero() {
                    let v = &cost[b] * &tab.t[i][j];
                    red = red - v;
                }
            }
            if red.is_negative() {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return PhaseResult::Optimal;
        };
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..tab.t.len() {
            if tab.t[i][j].is_positive() {
                let ratio = tab.rhs(i) / &tab.t[i][j];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && tab.basis[i] < tab.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        match leave {
            Some((i, _)) => tab.pivot(i, j),
            None => return PhaseResult::Unbounded(j),
        }
    }
}

/// Solve `min cost.z  s.t.  rows.z = rhs, z >= 0`.
pub fn solve_standard(rows: &[Vec<Rat>], rhs: &[Rat], cost: &[Rat]) -> StandardOutcome {
    let r = rows.len();
    let s = if r == 0 { cost.len() } else { rows[0].len() };
    assert!(rows.iter().all(|row| row.len() == s));
    assert_eq!(rhs.len(), r);
    assert_eq!(cost.len(), s);
    if r == 0 {
        // no constraints: z = 0 is optimal unless some cost is negative
        if let Some(j) = (0..s).find(|&j| cost[j].is_negative()) {
            let mut ray = vec![Rat::zero(); s];
            ray[j] = Rat::one();
            return StandardOutcome::Unbounded { solution: vec![Rat::zero(); s], ray };
        }
        return StandardOutcome::Optimal { solution: vec![Rat::zero(); s], value: Rat::zero() };
    }

    // normalize rhs >= 0 and remember flipped rows for the certificate
    let mut flipped = vec![false; r];
    let mut t: Vec<Vec<Rat>> = Vec::with_capacity(r);
    for i in 0..r {
        let mut row: Vec<Rat> = Vec::with_capacity(s + r + 1);
        let neg = rhs[i].is_negative();
        flipped[i] = neg;
        for j in 0..s {
            row.push(if neg { -rows[i][j].clone() } else { rows[i][j].clone() });
        }
        for k in 0..r {
            row.push(if k == i { Rat::one() } else { Rat::zero() });
        }
        row.push(if neg { -rhs[i].clone() } else { rhs[i].clone() });
        t.push(row);
    }
    let mut tab = Tableau { t, basis: (s..s + r).collect(), cols: s + r };

    // phase 1: minimize the artificial sum
    let mut cost1 = vec![Rat::zero(); s + r];
    for j in s..s + r {
        cost1[j] = Rat::one();
    }
    match run_simplex(&mut tab, &cost1, |_| true) {
        PhaseResult::Optimal => {}
        PhaseResult::Unbounded(_) => unreachable!("phase-1 objective is bounded below by zero"),
    }
    let w: Rat = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= s)
        .map(|(i, _)| tab.rhs(i).clone())
        .sum();
    if w.is_positive() {
        // Farkas multipliers y_i = (cost1_B)^T (M_B^{-1})_i, read off the
        // artificial block of the tableau, then un-flip the normalized rows.
        let mut y = vec![Rat::zero(); r];
        for k in 0..r {
            let mut acc = Rat::zero();
            for (i, &b) in tab.basis.iter().enumerate() {
                if !cost1[b].is_zero() {
                    let v = &cost1[b] * &tab.t[i][s + k];
                    acc = acc + v;
                }
            }
            y[k] = if flipped[k] { -acc } else { acc };
        }
        // verify: y^T M <= 0 per column, y^T q > 0
        for j in 0..s {
            let col: Rat = (0..r).map(|i| &y[i] * &rows[i][j]).sum();
            assert!(!col.is_positive(), "invalid infeasibility certificate (column {j})");
        }
        let val: Rat = (0..r).map(|i| &y[i] * &rhs[i]).sum();
        assert!(val.is_positive(), "invalid infeasibility certificate (value)");
        return StandardOutcome::Infeasible { multipliers: y };
    }

    // drive artificials out of the basis; drop rows that became redundant
    let mut drop_rows: Vec<usize> = Vec::new();
    for i in 0..tab.basis.len() {
        if tab.basis[i] >= s {
            if let Some(j) = (0..s).find(|&j| !tab.t[i][j].is_zero()) {
                tab.pivot(i, j);
            } else {
                drop_rows.push(i);
            }
        }
    }
    for &i in drop_rows.iter().rev() {
        tab.t.remove(i);
        tab.basis.remove(i);
    }

    // phase 2 on the original columns only
    let mut cost2 = cost.to_vec();
    cost2.extend(std::iter::repeat(Rat::zero()).take(r));
    match run_simplex(&mut tab, &cost2, |j| j < s) {
        PhaseResult::Optimal => {
            let z = tab.solution();
            let solution: Vec<Rat> = z[..s].to_vec();
            // verify feasibility exactly
            for i in 0..r {
                let lhs: Rat = (0..s).map(|j| &rows[i][j] * &solution[j]).sum();
                assert_eq!(lhs, rhs[i], "simplex produced an infeasible point");
            }
            let value: Rat = (0..s).map(|j| &cost[j] * &solution[j]).sum();
            StandardOutcome::Optimal { solution, value }
        }
        PhaseResult::Unbounded(j) => {
            let z = tab.solution();
            let mut ray = vec![Rat::zero(); s + r];
            ray[j] = Rat::one();
            for (i, &b) in tab.basis.iter().enumerate() {
                ray[b] = -tab.t[i][j].clone();
            }
            let ray: Vec<Rat> = ray[..s].to_vec();
            for i in 0..r {
                let lhs: Rat = (0..s).map(|k| &rows[i][k] * &ray[k]).sum();
                assert!(lhs.is_zero(), "unbounded ray leaves the feasible subspace");
            }
            assert!(ray.iter().all(|x| !x.is_negative()), "unbounded ray not nonnegative");
            let dir: Rat = (0..s).map(|k| &cost[k] * &ray[k]).sum();
            assert!(dir.is_negative(), "unbounded ray does not improve the objective");
            StandardOutcome::Unbounded { solution: z[..s].to_vec(), ray }
        }
    }
}

/// Scale a rational vector to primitive integer form (for canonical
/// certificates such as Farkas multipliers and rays).
pub fn primitive_certificate(v: &[Rat]) -> Vec<Int> {
    crate::num::primitive_direction(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat_int;

    fn rv(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn optimal_basic() {
        // min -z1 s.t. z1 + z2 = 1 -> z1 = 1
        let out = solve_standard(&[rv(&[1, 1])], &rv(&[1]), &rv(&[-1, 0]));
        match out {
            StandardOutcome::Optimal { solution, value } => {
                assert_eq!(solution, rv(&[1, 0]));
                assert_eq!(value, rat_int(-1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn infeasible_certificate() {
        // z1 + z2 = -1 with z >= 0: infeasible
        let rows = vec![rv(&[1, 1])];
        let rhs = rv(&[-1]);
        match solve_standard(&rows, &rhs, &rv(&[0, 0])) {
            StandardOutcome::Infeasible { multipliers } => {
                let val: Rat = multipliers.iter().zip(&rhs).map(|(y, q)| y * q).sum();
                assert!(val.is_positive());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unbounded_ray() {
        // min -z1 s.t. z1 - z2 = 0: ray (1,1)
        match solve_standard(&[rv(&[1, -1])], &rv(&[0]), &rv(&[-1, 0])) {
            StandardOutcome::Unbounded { ray, .. } => {
                assert_eq!(ray, rv(&[1, 1]));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_cycling_guard() {
        // classic degenerate instance; Bland must terminate
        let rows = vec![rv(&[1, 1, 1, 0]), rv(&[1, -1, 0, 1])];
        let rhs = rv(&[1, 0]);
        let cost = rv(&[-1, -1, 0, 0]);
        match solve_standard(&rows, &rhs, &cost) {
            StandardOutcome::Optimal { value, .. } => assert_eq!(value, rat_int(-1)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
