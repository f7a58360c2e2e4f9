//! End-to-end check of the margin scheme behind relaxation rounding: on
//! sampled instances and real points where every ledger direction has
//! width at least `omega_hat - 1/2` and some real `x >= 1` meets the
//! bilinear rows with margin `eps/2`, the ball of radius `r` around that
//! point lies inside the fixed-`y` polyhedron (checked by exact
//! substitution of rational boundary points) and the integer point search
//! succeeds.

use mibgap_core::engine::find_integer_point;
use mibgap_core::geometry::{self, Direction, LpOutcome, Polyhedron, Width};
use mibgap_core::mib::{BilinearRow, Form, LinearBlock, MibSystem};
use mibgap_core::num::{int, norm2_sq, rat, rat_int, rat_vec, to_rat, Int, Rat};
use mibgap_core::relax::{compute_constants, p_of_y, DirectionSet};
use num_traits::{One, Signed, Zero};

struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }
    fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        lo + (self.next() % (hi - lo + 1) as u64) as i64
    }
}

/// Unit-norm rational directions for exact ball-boundary sampling.
fn unit_directions(m: usize) -> Vec<Vec<Rat>> {
    let mut dirs = Vec::new();
    for i in 0..m {
        for sign in [1i64, -1] {
            let mut d = vec![Rat::zero(); m];
            d[i] = rat_int(sign);
            dirs.push(d);
        }
    }
    if m == 2 {
        for (a, b) in [(3i64, 4i64), (4, 3), (-3, 4), (3, -4), (-4, 3), (4, -3), (-3, -4), (-4, -3)]
        {
            dirs.push(vec![rat(a, 5), rat(b, 5)]);
        }
    }
    dirs
}

/// A real `x >= 1` meeting every bilinear row at `y` with margin `eps/2`,
/// when one exists.
fn interior_x(s: &MibSystem, y: &[Rat], eps: &Rat) -> Option<Vec<Rat>> {
    let p = p_of_y(s, y);
    let m = s.m;
    let mut a: Vec<Vec<Rat>> = Vec::new();
    let mut b: Vec<Rat> = Vec::new();
    let half = eps / rat_int(2);
    for i in 0..p.rows() {
        let (row, rhs) = p.row(i);
        let is_nonneg_row = row.iter().filter(|c| !c.is_zero()).count() == 1
            && row.iter().all(|c| !c.is_positive())
            && rhs.is_zero();
        a.push(row.to_vec());
        b.push(if is_nonneg_row { rhs.clone() } else { rhs - &half });
    }
    for i in 0..m {
        let mut row = vec![Rat::zero(); m];
        row[i] = -Rat::one();
        a.push(row);
        b.push(-Rat::one());
    }
    let poly = Polyhedron::new(a, b).ok()?;
    match geometry::lp_solve(&poly, &vec![Rat::zero(); m], Direction::Maximize) {
        Ok(LpOutcome::Feasible { point, .. }) => Some(point),
        _ => None,
    }
}

#[test]
fn ball_containment_and_integer_point() {
    let mut rng = Rng(0x5eed5eed5eed5eedu64);
    let eps = rat(1, 2);
    let mut triggered = 0;
    for _case in 0..400 {
        let m = 1 + (rng.next() % 2) as usize;
        let n = 1 + (rng.next() % 2) as usize;
        // weak bilinear rows with generous right-hand sides keep the
        // fixed-y polyhedron wide enough to trigger the hinge
        let h = rng.int_in(2, 3);
        let mut bilinear = Vec::new();
        for _ in 0..(1 + rng.next() % 2) {
            let mut a = vec![vec![Int::zero(); n]; m];
            for row in a.iter_mut() {
                for v in row.iter_mut() {
                    if rng.next() % 2 == 0 {
                        *v = int(rng.int_in(-1, 1));
                    }
                }
            }
            bilinear.push(BilinearRow { a, b: vec![Int::zero(); n], c: int(rng.int_in(1, h)) });
        }
        let mut real_rows = Vec::new();
        let mut real_rhs = Vec::new();
        for j in 0..n {
            let mut up = vec![Int::zero(); n];
            up[j] = Int::one();
            real_rows.push(up.clone());
            real_rhs.push(int(h));
            let mut down = vec![Int::zero(); n];
            down[j] = -Int::one();
            real_rows.push(down);
            real_rhs.push(Int::zero());
        }
        let Ok(s) = MibSystem::new(
            m,
            n,
            bilinear,
            MibSystem::standard_int_block(m),
            LinearBlock { rows: real_rows, rhs: real_rhs },
            Form::Standard,
        ) else {
            continue;
        };
        let Ok(ledger) = compute_constants(&s, &eps) else { continue };
        let DirectionSet::Materialized(us) = &ledger.u_set else { continue };

        // sample a rational y inside the box and inside the kappa1 ball
        let y: Vec<Rat> = (0..n).map(|_| rat(rng.int_in(0, 2 * h), 2)).collect();
        if norm2_sq(&y) > &ledger.kappa1_upper * &ledger.kappa1_upper {
            continue;
        }
        let within_box = s
            .real_linear
            .rows
            .iter()
            .zip(&s.real_linear.rhs)
            .all(|(row, rhs)| {
                let v: Rat = row.iter().zip(&y).map(|(c, yv)| to_rat(c) * yv).sum();
                v <= to_rat(rhs)
            });
        if !within_box {
            continue;
        }

        let poly = p_of_y(&s, &y);
        let threshold = &ledger.omega_hat - rat(1, 2);
        let widths_ok = us.iter().all(|u| match geometry::width_along(&poly, u) {
            Ok(Width::Infinite) => true,
            Ok(Width::Finite(w)) => w >= threshold,
            Err(_) => false,
        });
        if !widths_ok {
            continue;
        }
        let Some(x_tilde) = interior_x(&s, &y, &eps) else { continue };
        triggered += 1;

        // ball boundary points stay inside P(y)
        for d in unit_directions(m) {
            let pt: Vec<Rat> =
                x_tilde.iter().zip(&d).map(|(x, dv)| x + &ledger.r * dv).collect();
            assert!(
                poly.contains(&pt),
                "boundary point of the radius-r ball escapes P(y)"
            );
        }
        // and the integer search succeeds end to end
        let found = find_integer_point(&s, &y, Some(&rat_vec(
            &x_tilde.iter().map(|v| mibgap_core::num::floor_int(v)).collect::<Vec<_>>(),
        )));
        let found = match found {
            Some(x) => x,
            None => find_integer_point(&s, &y, None).expect("integer point search failed"),
        };
        assert!(poly.contains(&rat_vec(&found)));
    }
    assert!(triggered >= 25, "hinge preconditions triggered only {triggered} times");
}
