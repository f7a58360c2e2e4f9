//! Exact dense linear algebra over the rationals, plus integer lattice
//! solving via Hermite normal form.

use crate::num::{Int, Rat};
use num_traits::{One, Signed, Zero};

/// Row echelon elimination in place. Returns the pivot columns.
fn echelon(a: &mut Vec<Vec<Rat>>) -> Vec<usize> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].clone();
        for x in a[r].iter_mut() {
            *x = &*x / &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let v = &a[r][j] * &f;
                    a[i][j] = &a[i][j] - v;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

/// Rank of a rational matrix.
pub fn rank(a: &[Vec<Rat>]) -> usize {
    let mut m: Vec<Vec<Rat>> = a.to_vec();
    echelon(&mut m).len()
}

/// Solve a square system `A x = b` exactly. `None` if `A` is singular.
pub fn solve_square(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = a.len();
    assert!(a.iter().all(|r| r.len() == n) && b.len() == n);
    let mut aug: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = echelon(&mut aug);
    if pivots.len() != n || pivots.iter().any(|&c| c >= n) {
        return None;
    }
    let mut x = vec![Rat::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][n].clone();
    }
    Some(x)
}

/// Any rational solution of `A x = b`, or `None` if inconsistent.
pub fn solve_general(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut aug: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = echelon(&mut aug);
    // inconsistent iff a pivot lands in the rhs column
    if pivots.iter().any(|&c| c == cols) {
        return None;
    }
    let mut x = vec![Rat::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][cols].clone();
    }
    Some(x)
}

/// Basis of the rational null space of `A` (free-variable back substitution).
pub fn nullspace(a: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m: Vec<Vec<Rat>> = a.to_vec();
    let pivots = echelon(&mut m);
    let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![Rat::zero(); cols];
        v[free] = Rat::one();
        for (r, &c) in pivots.iter().enumerate() {
            v[c] = -m[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Column-style Hermite normal form: returns `(h, u)` with `a * u = h`,
/// `u` unimodular `n x n`, and `h` in lower-triangular column echelon form
/// (pivot entries positive, zero columns last).
pub fn hnf_columns(a: &[Vec<Int>]) -> (Vec<Vec<Int>>, Vec<Vec<Int>>) {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut h: Vec<Vec<Int>> = a.to_vec();
    let mut u: Vec<Vec<Int>> = (0..cols)
        .map(|i| (0..cols).map(|j| if i == j { Int::one() } else { Int::zero() }).collect())
        .collect();
    let col_swap = |h: &mut Vec<Vec<Int>>, u: &mut Vec<Vec<Int>>, i: usize, j: usize| {
        for row in h.iter_mut() {
            row.swap(i, j);
        }
        for row in u.iter_mut() {
            row.swap(i, j);
        }
    };
    // add t * column i to column j
    let col_addmul = |h: &mut Vec<Vec<Int>>, u: &mut Vec<Vec<Int>>, i: usize, j: usize, t: &Int| {
        for row in h.iter_mut() {
            let v = &row[i] * t;
            row[j] = &row[j] + v;
        }
        for row in u.iter_mut() {
            let v = &row[i] * t;
            row[j] = &row[j] + v;
        }
    };
    let col_negate = |h: &mut Vec<Vec<Int>>, u: &mut Vec<Vec<Int>>, i: usize| {
        for row in h.iter_mut() {
            row[i] = -row[i].clone();
        }
        for row in u.iter_mut() {
            row[i] = -row[i].clone();
        }
    };

    let mut pc = 0; // pivot column
    for r in 0..rows {
        if pc == cols {
            break;
        }
        // Euclidean reduction across columns pc..cols on row r.
        loop {
            let mut best: Option<usize> = None;
            for c in pc..cols {
                if !h[r][c].is_zero() {
                    best = match best {
                        None => Some(c),
                        Some(b) => {
                            if h[r][c].abs() < h[r][b].abs() {
                                Some(c)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
            }
            let Some(b) = best else {
                break;
            };
            col_swap(&mut h, &mut u, pc, b);
            if h[r][pc].is_negative() {
                col_negate(&mut h, &mut u, pc);
            }
            let mut all_reduced = true;
            for c in pc + 1..cols {
                if !h[r][c].is_zero() {
                    let q = h[r][c].div_euclid(&h[r][pc]);
                    let t = -q;
                    col_addmul(&mut h, &mut u, pc, c, &t);
                    if !h[r][c].is_zero() {
                        all_reduced = false;
                    }
                }
            }
            if all_reduced {
                break;
            }
        }
        if !h[r][pc].is_zero() {
            // reduce earlier columns against this pivot for canonical-ish form
            for c in 0..pc {
                if !h[r][c].is_zero() {
                    let q = h[r][c].div_euclid(&h[r][pc]);
                    let t = -q;
                    col_addmul(&mut h, &mut u, pc, c, &t);
                }
            }
            pc += 1;
        }
    }
    (h, u)
}

/// Integer solutions of `E x = g`: returns `(x0, basis)` so that the solution
/// set is `{ x0 + basis * t : t integer }`, or `None` when no integer
/// solution exists. `basis` is a list of column vectors.
pub fn lattice_solve(e: &[Vec<Int>], g: &[Int]) -> Option<(Vec<Int>, Vec<Vec<Int>>)> {
    let rows = e.len();
    let cols = if rows == 0 { 0 } else { e[0].len() };
    assert_eq!(g.len(), rows);
    if rows == 0 {
        let basis = (0..cols)
            .map(|i| (0..cols).map(|j| if i == j { Int::one() } else { Int::zero() }).collect())
            .collect();
        return Some((vec![Int::zero(); cols], basis));
    }
    let (h, u) = hnf_columns(e);
    // Solve h * t = g by forward elimination: h is in column echelon form,
    // each pivot column has its first nonzero at a strictly increasing row.
    let mut t = vec![Int::zero(); cols];
    let mut resid: Vec<Int> = g.to_vec();
    let mut next_col = 0;
    for r in 0..rows {
        if next_col < cols && !h[r][next_col].is_zero() {
            let p = &h[r][next_col];
            let (q, rem) = (resid[r].div_euclid(p), resid[r].rem_euclid(p));
            if !rem.is_zero() {
                return None;
            }
            t[next_col] = q;
            for rr in r..rows {
                let v = &h[rr][next_col] * &t[next_col];
                resid[rr] = &resid[rr] - v;
            }
            next_col += 1;
        } else if !resid[r].is_zero() {
            return None;
        }
    }
    // x0 = u * t; null lattice basis = columns of u past the pivot columns.
    let x0: Vec<Int> = (0..cols).map(|i| (0..cols).map(|j| &u[i][j] * &t[j]).sum()).collect();
    let basis: Vec<Vec<Int>> = (next_col..cols)
        .map(|c| (0..cols).map(|i| u[i][c].clone()).collect())
        .collect();
    // exactness guard: E * x0 == g and E * basis_k == 0
    debug_assert!({
        let ok_x0 = (0..rows).all(|r| {
            let s: Int = (0..cols).map(|j| &e[r][j] * &x0[j]).sum();
            s == g[r]
        });
        let ok_basis = basis.iter().all(|col| {
            (0..rows).all(|r| {
                let s: Int = (0..cols).map(|j| &e[r][j] * &col[j]).sum();
                s.is_zero()
            })
        });
        ok_x0 && ok_basis
    });
    Some((x0, basis))
}

trait DivEuclid {
    fn div_euclid(&self, other: &Self) -> Self;
    fn rem_euclid(&self, other: &Self) -> Self;
}

impl DivEuclid for Int {
    fn div_euclid(&self, other: &Self) -> Self {
        let (mut q, r) = num_integer::Integer::div_rem(self, other);
        if r.is_negative() {
            if other.is_negative() {
                q += 1;
            } else {
                q -= 1;
            }
        }
        q
    }
    fn rem_euclid(&self, other: &Self) -> Self {
        let r = num_integer::Integer::mod_floor(self, &other.abs());
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat_int};

    fn iv(v: &[i64]) -> Vec<Int> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn solve_square_basic() {
        let a = vec![vec![rat_int(2), rat_int(1)], vec![rat_int(1), rat_int(3)]];
        let b = vec![rat_int(5), rat_int(10)];
        let x = solve_square(&a, &b).unwrap();
        assert_eq!(x, vec![rat_int(1), rat_int(3)]);
        let sing = vec![vec![rat_int(1), rat_int(2)], vec![rat_int(2), rat_int(4)]];
        assert!(solve_square(&sing, &b).is_none());
    }

    #[test]
    fn rank_and_nullspace() {
        let a = vec![vec![rat_int(1), rat_int(2), rat_int(3)], vec![rat_int(2), rat_int(4), rat_int(6)]];
        assert_eq!(rank(&a), 1);
        let ns = nullspace(&a);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let s: Rat = v.iter().zip(&a[0]).map(|(x, c)| x * c).sum();
            assert!(s.is_zero());
        }
    }

    #[test]
    fn lattice_line() {
        // 2x - 3y = 1 over Z: x = 2 + 3t, y = 1 + 2t (up to basis sign)
        let e = vec![iv(&[2, -3])];
        let (x0, basis) = lattice_solve(&e, &iv(&[1])).unwrap();
        assert_eq!(&x0[0] * 2 - &x0[1] * 3, int(1));
        assert_eq!(basis.len(), 1);
        let b = &basis[0];
        assert_eq!(&b[0] * 2 - &b[1] * 3, int(0));
        assert!(!b[0].is_zero() || !b[1].is_zero());
    }

    #[test]
    fn lattice_no_solution() {
        // 2x = 1 has no integer solution
        let e = vec![iv(&[2])];
        assert!(lattice_solve(&e, &iv(&[1])).is_none());
    }

    #[test]
    fn lattice_two_equations() {
        // x + y = 2, x - y = 0 -> unique (1,1)
        let e = vec![iv(&[1, 1]), iv(&[1, -1])];
        let (x0, basis) = lattice_solve(&e, &iv(&[2, 0])).unwrap();
        assert_eq!(x0, iv(&[1, 1]));
        assert!(basis.is_empty());
    }
}
