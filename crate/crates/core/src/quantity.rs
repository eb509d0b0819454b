//! Exact quantities (Mbps, utilizations, costs) and the numeric abstraction
//! shared by the exact and the floating-point routing paths.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Sub};

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

/// Exact rational used for volumes, capacities and reported metrics.
pub type Q = BigRational;

/// Arithmetic needed by load propagation and the cost function.
///
/// Implemented for [`Q`] (exact, used for reporting and tests) and `f64`
/// (used inside the optimizer's candidate evaluation).
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    fn from_q(q: &Q) -> Self;
    fn from_usize(n: usize) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for Q {
    fn from_q(q: &Q) -> Self {
        q.clone()
    }

    fn from_usize(n: usize) -> Self {
        Q::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn from_q(q: &Q) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn from_usize(n: usize) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `12`, `-3`, `35.6`, `1e3`-free decimals, or `a/b` fractions.
pub fn parse_quantity(text: &str) -> Option<Q> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let denom = num::pow(BigInt::from(10u32), frac_part.len());
    let q = Q::new(numer, denom);
    Some(if negative { -q } else { q })
}

/// Canonical text form: integers plainly, terminating decimals as decimals,
/// everything else as `a/b`. [`parse_quantity`] inverts it exactly.
pub fn format_quantity(q: &Q) -> String {
    if q.is_integer() {
        return q.numer().to_string();
    }
    let mut d = q.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let ten = BigInt::from(10u32);
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", q.numer(), q.denom());
    }
    let places = twos.max(fives);
    let scaled = (q * Q::from_integer(num::pow(ten.clone(), places))).to_integer();
    let negative = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (ip, fp) = digits.split_at(digits.len() - places);
    format!("{}{}.{}", if negative { "-" } else { "" }, ip, fp)
}

/// Fixed-precision decimal rendering for reports.
pub fn format_fixed(q: &Q, places: usize) -> String {
    format!("{:.*}", places, Scalar::to_f64(q))
}

/// Relative comparison used wherever a floating path is checked against
/// an exact or independent one.
pub fn approx_eq(a: f64, b: f64, rel: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= rel * scale
}
