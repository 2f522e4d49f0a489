//! Scalar helpers shared by the exact and floating code paths.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::{BigRational, Integer, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Rational = BigRational;

/// Arithmetic used for a computation. Float is IEEE binary64.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarMode {
    Exact,
    Float,
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMode::Exact => f.write_str("exact"),
            ScalarMode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for ScalarMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" | "rational" => Ok(ScalarMode::Exact),
            "float" | "f64" => Ok(ScalarMode::Float),
            other => Err(format!("unknown scalar mode `{other}` (expected exact|float)")),
        }
    }
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"num/den"`, a bare integer, or a terminating decimal such as
/// `"0.25"`; decimals are converted exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut n = BigInt::from_str(&digits).ok()?;
        if negative {
            n = -n;
        }
        let d = num::pow(BigInt::from(10), frac.len());
        return Some(Rational::new(n, d));
    }
    BigInt::from_str(t).ok().map(Rational::from_integer)
}

/// Correctly rounded conversion; saturates to ±inf outside the f64 range.
pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact rational value of a finite f64.
pub fn from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

/// `floor(x * 2^bits) / 2^bits`.
pub fn dyadic_floor(x: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    let scaled = x.numer() * &scale;
    let q = scaled.div_floor(x.denom());
    Rational::new(q, scale)
}

pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// 17 significant digits in scientific notation; round-trips every f64.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Field operations shared by the exact (`Rational`) and binary64 paths.
pub trait Real: Clone + PartialOrd + fmt::Debug + num::Num + std::ops::Neg<Output = Self> {
    const MODE: ScalarMode;
    fn from_rational(x: &Rational) -> Self;
    fn from_usize(n: usize) -> Self;
    fn to_f64_lossy(&self) -> f64;
}

impl Real for f64 {
    const MODE: ScalarMode = ScalarMode::Float;
    fn from_rational(x: &Rational) -> Self {
        to_f64(x)
    }
    fn from_usize(n: usize) -> Self {
        n as f64
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Real for Rational {
    const MODE: ScalarMode = ScalarMode::Exact;
    fn from_rational(x: &Rational) -> Self {
        x.clone()
    }
    fn from_usize(n: usize) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
    fn to_f64_lossy(&self) -> f64 {
        to_f64(self)
    }
}

pub(crate) fn sign(x: &Rational) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}
