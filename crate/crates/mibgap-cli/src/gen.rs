//! Instance generators: the bounded multiplication gadget over unit
//! fractions, its deliberately unbounded companion, the double-exponential
//! chain family, and seeded random bounded systems.

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use mibgap_core::json;
use mibgap_core::mib::{BilinearRow, Form, LinearBlock, MibSystem};
use mibgap_core::num::{int, Int};
use num_traits::Zero;
use std::path::PathBuf;

#[derive(Args)]
pub struct GenArgs {
    /// hilbert | hilbert-unbounded | doubleexp | random
    pub kind: String,
    /// equation of the form xI=xJ+xK or xI=xJ*xK (repeatable; hilbert kinds)
    #[arg(long = "eq")]
    pub equations: Vec<String>,
    /// chain length for doubleexp
    #[arg(long)]
    pub n: Option<usize>,
    /// seed for random instances
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// integer dimension for random instances
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// real dimension for random instances
    #[arg(long = "nreal", default_value_t = 2)]
    pub n_real: usize,
    /// magnitude bound for random instances
    #[arg(long, default_value_t = 3)]
    pub h: i64,
    /// write to a file instead of stdout
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
enum Equation {
    Sum { i: usize, j: usize, k: usize },
    Product { i: usize, j: usize, k: usize },
}

/// Parse `xI=xJ+xK` or `xI=xJ*xK` (1-based indices).
fn parse_equation(s: &str) -> Result<Equation> {
    let clean: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (lhs, rhs) = clean
        .split_once('=')
        .ok_or_else(|| anyhow!("equation `{s}` has no `=`"))?;
    let var = |t: &str| -> Result<usize> {
        let idx = t
            .strip_prefix('x')
            .ok_or_else(|| anyhow!("`{t}` is not of the form xI"))?
            .parse::<usize>()
            .map_err(|_| anyhow!("`{t}` has a bad index"))?;
        if idx == 0 {
            bail!("variable indices start at 1");
        }
        Ok(idx)
    };
    let i = var(lhs)?;
    if let Some((j, k)) = rhs.split_once('+') {
        return Ok(Equation::Sum { i, j: var(j)?, k: var(k)? });
    }
    if let Some((j, k)) = rhs.split_once('*') {
        return Ok(Equation::Product { i, j: var(j)?, k: var(k)? });
    }
    bail!("equation `{s}` must use `+` or `*`")
}

fn max_var(eqs: &[Equation]) -> usize {
    eqs.iter()
        .map(|e| match *e {
            Equation::Sum { i, j, k } | Equation::Product { i, j, k } => i.max(j).max(k),
        })
        .max()
        .unwrap_or(0)
}

fn zeros(n: usize) -> Vec<Int> {
    vec![Int::zero(); n]
}

fn unit(n: usize, at: usize, v: i64) -> Vec<Int> {
    let mut row = zeros(n);
    row[at] = int(v);
    row
}

/// Push the pair of rows encoding `row . v = rhs`.
fn push_eq(rows: &mut Vec<Vec<Int>>, rhs_vec: &mut Vec<Int>, row: Vec<Int>, rhs: Int) {
    rows.push(row.iter().map(|v| -v.clone()).collect());
    rhs_vec.push(-rhs.clone());
    rows.push(row);
    rhs_vec.push(rhs);
}

/// Push bilinear rows for `x^T a y = 0` (as a pair of inequalities).
fn push_bilinear_eq(bilinear: &mut Vec<BilinearRow>, a: Vec<Vec<Int>>, n: usize) {
    let neg: Vec<Vec<Int>> = a.iter().map(|r| r.iter().map(|v| -v.clone()).collect()).collect();
    bilinear.push(BilinearRow { a, b: zeros(n), c: Int::zero() });
    bilinear.push(BilinearRow { a: neg, b: zeros(n), c: Int::zero() });
}

/// Bounded gadget: positive-integer equation systems reduce to gap
/// satisfiability by pairing each integer `x_i` with a real reciprocal
/// `y_i` in `[0, 1]` via `x_i y_i = 1`, carrying sums over directly, and
/// encoding each product equation as `(x_j + x_k) y_i = x_0 (y_j + y_k)`
/// with an anchor variable `x_0 = 1`.
fn gen_hilbert(eqs: &[Equation]) -> Result<MibSystem> {
    let nvars = max_var(eqs);
    if nvars == 0 {
        bail!("at least one equation is required");
    }
    let m = nvars + 1; // x0 .. xn
    let n = nvars; // y1 .. yn (y_i at column i-1)
    let ycol = |i: usize| i - 1;
    let mut bilinear = Vec::new();
    // x_i y_i = 1
    for i in 1..=nvars {
        let mut a = vec![zeros(n); m];
        a[i][ycol(i)] = int(1);
        let neg: Vec<Vec<Int>> =
            a.iter().map(|r| r.iter().map(|v| -v.clone()).collect()).collect();
        bilinear.push(BilinearRow { a, b: zeros(n), c: int(1) });
        bilinear.push(BilinearRow { a: neg, b: zeros(n), c: int(-1) });
    }
    let mut int_rows = Vec::new();
    let mut int_rhs = Vec::new();
    // x0 = 1
    push_eq(&mut int_rows, &mut int_rhs, unit(m, 0, 1), int(1));
    // x >= 0
    for i in 0..m {
        int_rows.push(unit(m, i, -1));
        int_rhs.push(Int::zero());
    }
    for eq in eqs {
        match *eq {
            Equation::Sum { i, j, k } => {
                // x_i - x_j - x_k = 0
                let mut row = zeros(m);
                row[i] += int(1);
                row[j] -= int(1);
                row[k] -= int(1);
                push_eq(&mut int_rows, &mut int_rhs, row, Int::zero());
            }
            Equation::Product { i, j, k } => {
                // (x_j + x_k) y_i = x_0 (y_j + y_k)
                let mut a = vec![zeros(n); m];
                a[j][ycol(i)] += int(1);
                a[k][ycol(i)] += int(1);
                a[0][ycol(j)] -= int(1);
                a[0][ycol(k)] -= int(1);
                push_bilinear_eq(&mut bilinear, a, n);
            }
        }
    }
    // 0 <= y_i <= 1
    let mut real_rows = Vec::new();
    let mut real_rhs = Vec::new();
    for i in 1..=nvars {
        real_rows.push(unit(n, ycol(i), 1));
        real_rhs.push(int(1));
        real_rows.push(unit(n, ycol(i), -1));
        real_rhs.push(Int::zero());
    }
    Ok(MibSystem::new(
        m,
        n,
        bilinear,
        LinearBlock { rows: int_rows, rhs: int_rhs },
        LinearBlock { rows: real_rows, rhs: real_rhs },
        Form::General,
    )?)
}

/// Unbounded companion gadget (demonstration only; the gap procedure
/// rejects it as unbounded): reals mirror the integers through anchor
/// rows `|x_i y_0 - x_0 y_i| <= 1`, a large pivot variable forces the
/// mirrors close via `|x_{n+1} y_i - x_i y_{n+1}| <= 1` and
/// `x_{n+1} y_0 >= 4 (x_0 + x_i)(y_0 + y_i) + 1`, and each product
/// equation becomes `|2 x_i y_0 - 2 x_j y_k| <= 1` (scaled to integers).
fn gen_hilbert_unbounded(eqs: &[Equation]) -> Result<MibSystem> {
    let nvars = max_var(eqs);
    if nvars == 0 {
        bail!("at least one equation is required");
    }
    let m = nvars + 2; // x0 .. x_{n+1}
    let n = nvars + 2; // y0 .. y_{n+1}
    let last = nvars + 1;
    let mut bilinear = Vec::new();
    fn abs_pair(bilinear: &mut Vec<BilinearRow>, n: usize, a: Vec<Vec<Int>>, bound: i64) {
        let neg: Vec<Vec<Int>> =
            a.iter().map(|r| r.iter().map(|v| -v.clone()).collect()).collect();
        bilinear.push(BilinearRow { a, b: zeros(n), c: int(bound) });
        bilinear.push(BilinearRow { a: neg, b: zeros(n), c: int(bound) });
    }
    for i in 1..=last {
        // |x_i y_0 - x_0 y_i| <= 1
        let mut a = vec![zeros(n); m];
        a[i][0] += int(1);
        a[0][i] -= int(1);
        abs_pair(&mut bilinear, n, a, 1);
        // |x_{n+1} y_i - x_i y_{n+1}| <= 1
        let mut a = vec![zeros(n); m];
        a[last][i] += int(1);
        a[i][last] -= int(1);
        abs_pair(&mut bilinear, n, a, 1);
        // x_{n+1} y_0 - 4 (x_0 + x_i)(y_0 + y_i) >= 1
        let mut a = vec![zeros(n); m];
        a[last][0] += int(1);
        for xs in [0, i] {
            for ys in [0, i] {
                a[xs][ys] -= int(4);
            }
        }
        let neg: Vec<Vec<Int>> =
            a.iter().map(|r| r.iter().map(|v| -v.clone()).collect()).collect();
        bilinear.push(BilinearRow { a: neg, b: zeros(n), c: int(-1) });
    }
    for eq in eqs {
        if let Equation::Product { i, j, k } = *eq {
            // |2 x_i y_0 - 2 x_j y_k| <= 1
            let mut a = vec![zeros(n); m];
            a[i][0] += int(2);
            a[j][k] -= int(2);
            abs_pair(&mut bilinear, n, a, 1);
        }
    }
    let mut int_rows = Vec::new();
    let mut int_rhs = Vec::new();
    push_eq(&mut int_rows, &mut int_rhs, unit(m, 0, 1), int(1));
    for i in 0..m {
        int_rows.push(unit(m, i, -1));
        int_rhs.push(Int::zero());
    }
    for eq in eqs {
        if let Equation::Sum { i, j, k } = *eq {
            let mut row = zeros(m);
            row[i] += int(1);
            row[j] -= int(1);
            row[k] -= int(1);
            push_eq(&mut int_rows, &mut int_rhs, row, Int::zero());
        }
    }
    // y0 = 1, y >= 0; no upper bounds, deliberately unbounded
    let mut real_rows = Vec::new();
    let mut real_rhs = Vec::new();
    push_eq(&mut real_rows, &mut real_rhs, unit(n, 0, 1), int(1));
    for i in 0..n {
        real_rows.push(unit(n, i, -1));
        real_rhs.push(Int::zero());
    }
    Ok(MibSystem::new(
        m,
        n,
        bilinear,
        LinearBlock { rows: int_rows, rhs: int_rhs },
        LinearBlock { rows: real_rows, rhs: real_rhs },
        Form::General,
    )?)
}

/// Chain family whose smallest satisfying assignments grow doubly
/// exponentially: `x_i y_i <= 1`, `x_{i+1} y_i >= x_i y_0`, `x_1 = 2`,
/// `y_0 = 1`, all variables nonnegative and the reals boxed by 1 (which
/// cuts no solutions: every solution has `y_i <= 1/x_i`).
fn gen_doubleexp(chain: usize) -> Result<MibSystem> {
    if chain == 0 {
        bail!("chain length must be at least 1");
    }
    let m = chain; // x1 .. xn at columns 0..chain
    let n = chain + 1; // y0 .. yn
    let xcol = |i: usize| i - 1;
    let mut bilinear = Vec::new();
    for i in 1..=chain {
        // x_i y_i <= 1
        let mut a = vec![zeros(n); m];
        a[xcol(i)][i] = int(1);
        bilinear.push(BilinearRow { a, b: zeros(n), c: int(1) });
    }
    for i in 1..chain {
        // x_{i+1} y_i - x_i y_0 >= 0
        let mut a = vec![zeros(n); m];
        a[xcol(i + 1)][i] -= int(1);
        a[xcol(i)][0] += int(1);
        bilinear.push(BilinearRow { a, b: zeros(n), c: Int::zero() });
    }
    let mut int_rows = Vec::new();
    let mut int_rhs = Vec::new();
    push_eq(&mut int_rows, &mut int_rhs, unit(m, xcol(1), 1), int(2));
    for i in 0..m {
        int_rows.push(unit(m, i, -1));
        int_rhs.push(Int::zero());
    }
    let mut real_rows = Vec::new();
    let mut real_rhs = Vec::new();
    push_eq(&mut real_rows, &mut real_rhs, unit(n, 0, 1), int(1));
    for j in 0..n {
        real_rows.push(unit(n, j, 1));
        real_rhs.push(int(1));
        real_rows.push(unit(n, j, -1));
        real_rhs.push(Int::zero());
    }
    Ok(MibSystem::new(
        m,
        n,
        bilinear,
        LinearBlock { rows: int_rows, rhs: int_rhs },
        LinearBlock { rows: real_rows, rhs: real_rhs },
        Form::General,
    )?)
}

/// Deterministic generator state (xorshift), reproducible across platforms.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.wrapping_mul(0x9e3779b97f4a7c15).max(1))
    }
    pub fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }
    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
    pub fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        lo + self.below((hi - lo + 1) as u64) as i64
    }
}

/// Random bounded system: the real block is a box `0 <= y_j <= h_j`, the
/// integer block always contains `x >= 0` and often explicit upper bounds,
/// and one to three bilinear rows carry entries within the magnitude bound.
pub fn gen_random(seed: u64, m: usize, n: usize, h: i64) -> Result<MibSystem> {
    if m == 0 || n == 0 || h < 1 {
        bail!("random instances need m >= 1, n >= 1, h >= 1");
    }
    let mut rng = Rng::new(seed);
    let mut bilinear = Vec::new();
    let nrows = 1 + rng.below(3) as usize;
    for _ in 0..nrows {
        let mut a = vec![zeros(n); m];
        let mut nonzero = false;
        for row in a.iter_mut() {
            for v in row.iter_mut() {
                let draw = rng.int_in(-h, h);
                if rng.below(100) < 60 {
                    *v = int(draw);
                    nonzero |= draw != 0;
                }
            }
        }
        if !nonzero {
            a[rng.below(m as u64) as usize][rng.below(n as u64) as usize] = int(1.max(h / 2));
        }
        bilinear.push(BilinearRow { a, b: zeros(n), c: int(rng.int_in(-h, h)) });
    }
    let mut int_rows = Vec::new();
    let mut int_rhs = Vec::new();
    for i in 0..m {
        int_rows.push(unit(m, i, -1));
        int_rhs.push(Int::zero());
        if rng.below(100) < 60 {
            int_rows.push(unit(m, i, 1));
            int_rhs.push(int(rng.int_in(1, h)));
        }
    }
    let mut real_rows = Vec::new();
    let mut real_rhs = Vec::new();
    for j in 0..n {
        real_rows.push(unit(n, j, 1));
        real_rhs.push(int(rng.int_in(1, h)));
        real_rows.push(unit(n, j, -1));
        real_rhs.push(Int::zero());
    }
    Ok(MibSystem::new(
        m,
        n,
        bilinear,
        LinearBlock { rows: int_rows, rhs: int_rhs },
        LinearBlock { rows: real_rows, rhs: real_rhs },
        Form::General,
    )?)
}

pub fn run(args: GenArgs) -> Result<()> {
    let eqs: Vec<Equation> = args
        .equations
        .iter()
        .map(|s| parse_equation(s))
        .collect::<Result<_>>()?;
    let sys = match args.kind.as_str() {
        "hilbert" => gen_hilbert(&eqs)?,
        "hilbert-unbounded" => gen_hilbert_unbounded(&eqs)?,
        "doubleexp" => gen_doubleexp(args.n.ok_or_else(|| anyhow!("doubleexp requires --n"))?)?,
        "random" => gen_random(args.seed, args.m, args.n_real, args.h)?,
        k => bail!("unknown generator kind `{k}`"),
    };
    let text = json::canonical(&json::mib_to_json(&sys));
    match &args.output {
        Some(path) => std::fs::write(path, &text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mibgap_core::engine::{oracle, OracleVerdict};
    use mibgap_core::num::rat;

    fn eqs(list: &[&str]) -> Vec<Equation> {
        list.iter().map(|s| parse_equation(s).unwrap()).collect()
    }

    #[test]
    fn equation_parsing() {
        assert!(matches!(
            parse_equation("x1=x2+x3").unwrap(),
            Equation::Sum { i: 1, j: 2, k: 3 }
        ));
        assert!(matches!(
            parse_equation(" x2 = x2 * x2 ").unwrap(),
            Equation::Product { i: 2, j: 2, k: 2 }
        ));
        assert!(parse_equation("x1=x2-x3").is_err());
        assert!(parse_equation("x0=x1+x1").is_err());
    }

    #[test]
    fn square_gadget_admits_the_unit_solution() {
        // x1 = x1 * x1 is solved by x1 = 1, y1 = 1
        let sys = gen_hilbert(&eqs(&["x1=x1*x1"])).unwrap();
        match oracle(&sys, &rat(1, 2), 2) {
            OracleVerdict::SatNoSlack { x, .. } | OracleVerdict::SatSlack { x, .. } => {
                assert_eq!(x[1], int(1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn doubling_gadget_is_unsatisfiable() {
        // x1 = x1 + x1 forces x1 = 0, clashing with x1 y1 = 1
        let sys = gen_hilbert(&eqs(&["x1=x1+x1"])).unwrap();
        assert_eq!(oracle(&sys, &rat(1, 2), 20), OracleVerdict::UnsatWithinBound);
    }

    #[test]
    fn doubleexp_oracle_golden_witness() {
        // the bounded oracle on the length-2 chain finds exactly x = (2, 5)
        // as the first slack witness at eps = 1/8
        let sys = gen_doubleexp(2).unwrap();
        match oracle(&sys, &rat(1, 8), 8) {
            OracleVerdict::SatSlack { x, margin, .. } => {
                assert_eq!(x, vec![int(2), int(5)]);
                assert!(margin.unwrap() >= rat(1, 8));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn doubleexp_minimal_tail_grows() {
        // n = 3: any satisfying assignment has x3 >= 16 = 2^(2^2)
        let sys = gen_doubleexp(3).unwrap();
        match oracle(&sys, &rat(1, 32), 16) {
            OracleVerdict::SatSlack { x, .. } | OracleVerdict::SatNoSlack { x, .. } => {
                assert!(x[2] >= int(16), "x3 = {} below the double-exponential floor", x[2]);
            }
            other => panic!("unexpected {other:?}"),
        }
        // and nothing below 16 works at all
        let shrunk = oracle(&sys, &rat(1, 32), 15);
        assert_eq!(shrunk, OracleVerdict::UnsatWithinBound);
    }

    #[test]
    fn unbounded_gadget_is_rejected_by_the_solver() {
        let sys = gen_hilbert_unbounded(&eqs(&["x1=x1*x1"])).unwrap();
        let budget = mibgap_core::engine::Resources::default();
        assert!(matches!(
            mibgap_core::engine::solve(&sys, &rat(1, 2), &budget),
            Err(mibgap_core::engine::EngineError::UnboundedSystem)
        ));
    }

    #[test]
    fn random_instances_parse_and_are_bounded() {
        for seed in 1..=10 {
            let sys = gen_random(seed, 1 + (seed as usize % 3), 1 + (seed as usize % 2), 3).unwrap();
            assert!(matches!(
                mibgap_core::mib::is_bounded(&sys),
                mibgap_core::mib::Boundedness::Bounded { .. }
            ));
            let text = json::canonical(&json::mib_to_json(&sys));
            let mibgap_core::json::Instance::Mib(parsed) =
                json::parse_instance(&text).unwrap()
            else {
                panic!("wrong kind");
            };
            assert_eq!(parsed, sys);
        }
    }
}
