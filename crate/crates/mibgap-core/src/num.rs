//! Exact number helpers: arbitrary-precision rationals, parsing of the
//! `"p/q"` wire format, and rational square-root upper bounds.
//!
//! No floating point is used anywhere in the crate; all certified paths go
//! through [`Rat`] and [`Int`].

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision integer.
pub type Int = BigInt;
/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type Rat = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumError {
    #[error("invalid integer literal `{0}`")]
    BadInt(String),
    #[error("invalid rational literal `{0}` (expected `p` or `p/q`)")]
    BadRat(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

pub fn int(n: i64) -> Int {
    Int::from(n)
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(Int::from(n))
}

pub fn to_rat(n: &Int) -> Rat {
    Rat::from_integer(n.clone())
}

/// Parse a decimal integer string (optional leading `-`).
pub fn parse_int(s: &str) -> Result<Int, NumError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(NumError::BadInt(s.to_string()));
    }
    t.parse::<BigInt>().map_err(|_| NumError::BadInt(s.to_string()))
}

/// Parse `"p"` or `"p/q"`. Float literals are rejected.
pub fn parse_rat(s: &str) -> Result<Rat, NumError> {
    let t = s.trim();
    match t.split_once('/') {
        None => Ok(Rat::from_integer(parse_int(t).map_err(|_| NumError::BadRat(s.to_string()))?)),
        Some((p, q)) => {
            let num = parse_int(p).map_err(|_| NumError::BadRat(s.to_string()))?;
            let den = parse_int(q).map_err(|_| NumError::BadRat(s.to_string()))?;
            if den.is_zero() {
                return Err(NumError::ZeroDenominator(s.to_string()));
            }
            Ok(Rat::new(num, den))
        }
    }
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn fmt_rat(r: &Rat) -> String {
    r.to_string()
}

pub fn fmt_int(n: &Int) -> String {
    n.to_string()
}

pub fn floor_int(r: &Rat) -> Int {
    r.floor().to_integer()
}

pub fn ceil_int(r: &Rat) -> Int {
    r.ceil().to_integer()
}

/// Floor square root of a nonnegative integer.
pub fn isqrt_floor(n: &Int) -> Int {
    assert!(!n.is_negative(), "isqrt of negative integer");
    num_integer::Roots::sqrt(n)
}

/// Smallest half-integer `t/2` with `(t/2)^2 >= x` (for `x >= 0`).
///
/// Used wherever a rational upper bound on a square root is needed (Frobenius
/// norms, `sqrt(m)` factors in the constant ledger). The half-integer grid is
/// deterministic and tight enough for every bound in the pipeline: for
/// example `sqrt_upper(2) = 3/2` and `sqrt_upper(4) = 2`.
pub fn sqrt_upper(x: &Rat) -> Rat {
    assert!(!x.is_negative(), "sqrt_upper of negative rational");
    if x.is_zero() {
        return Rat::zero();
    }
    // t^2 >= 4x  <=>  t^2 >= ceil(4x) for integer t.
    let c = ceil_int(&(x * rat_int(4)));
    let mut t = isqrt_floor(&c);
    if &t * &t < c {
        t += 1;
    }
    Rat::new(t, Int::from(2))
}

/// Squared Euclidean norm of an integer vector.
pub fn norm2_sq_int(v: &[Int]) -> Int {
    v.iter().map(|a| a * a).sum()
}

/// Squared Euclidean norm of a rational vector.
pub fn norm2_sq(v: &[Rat]) -> Rat {
    v.iter().map(|a| a * a).sum()
}

/// Exact dot product.
pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_int(a: &[Int], b: &[Int]) -> Int {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scale a rational vector to a primitive integer vector (same direction).
///
/// Returns the zero vector unchanged.
pub fn primitive_direction(v: &[Rat]) -> Vec<Int> {
    let mut lcm = Int::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<Int> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut g = Int::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn rat_vec(v: &[Int]) -> Vec<Rat> {
    v.iter().map(to_rat).collect()
}
