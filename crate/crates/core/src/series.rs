//! Truncated power series over exact rationals or binary64.
//!
//! Every series carries an explicit truncation order `N` (coefficients
//! `c_0..c_N`). Binary operations produce the smaller of the two orders and
//! never read past what is stored.

use std::ops::{Add, Mul, Sub};

use num::{One, Zero};

use crate::distributions::ClaimDistribution;
use crate::error::{Error, Result};
use crate::scalar::{Rational, Real, ScalarMode};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Real> PowerSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a power series needs at least c_0");
        PowerSeries { coeffs }
    }

    /// Polynomial padded with zeros (or cut) to the given order.
    pub fn from_poly(poly: &[T], order: usize) -> Self {
        let coeffs = (0..=order)
            .map(|k| poly.get(k).cloned().unwrap_or_else(T::zero))
            .collect();
        PowerSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    pub fn scalar_mode(&self) -> ScalarMode {
        T::MODE
    }

    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order(), "cannot extend a truncated series");
        PowerSeries {
            coeffs: self.coeffs[..=order].to_vec(),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        PowerSeries {
            coeffs: self.coeffs.iter().map(|x| x.clone() * c.clone()).collect(),
        }
    }

    /// Multiplication by `(1 - s)`, keeping the order.
    pub fn times_one_minus_s(&self) -> Self {
        let coeffs = (0..self.coeffs.len())
            .map(|k| {
                let prev = if k == 0 { T::zero() } else { self.coeffs[k - 1].clone() };
                self.coeffs[k].clone() - prev
            })
            .collect();
        PowerSeries { coeffs }
    }

    /// Horner evaluation of the stored polynomial.
    pub fn eval(&self, s: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * s.clone() + c.clone())
    }

    pub fn to_f64(&self) -> PowerSeries<f64> {
        PowerSeries {
            coeffs: self.coeffs.iter().map(Real::to_f64_lossy).collect(),
        }
    }
}

impl<T: Real> Add for &PowerSeries<T> {
    type Output = PowerSeries<T>;

    fn add(self, rhs: Self) -> PowerSeries<T> {
        let n = self.order().min(rhs.order());
        PowerSeries {
            coeffs: (0..=n)
                .map(|k| self.coeffs[k].clone() + rhs.coeffs[k].clone())
                .collect(),
        }
    }
}

impl<T: Real> Sub for &PowerSeries<T> {
    type Output = PowerSeries<T>;

    fn sub(self, rhs: Self) -> PowerSeries<T> {
        let n = self.order().min(rhs.order());
        PowerSeries {
            coeffs: (0..=n)
                .map(|k| self.coeffs[k].clone() - rhs.coeffs[k].clone())
                .collect(),
        }
    }
}

impl<T: Real> Mul for &PowerSeries<T> {
    type Output = PowerSeries<T>;

    fn mul(self, rhs: Self) -> PowerSeries<T> {
        let n = self.order().min(rhs.order());
        let coeffs = (0..=n)
            .map(|k| {
                (0..=k).fold(T::zero(), |acc, i| {
                    acc + self.coeffs[i].clone() * rhs.coeffs[k - i].clone()
                })
            })
            .collect();
        PowerSeries { coeffs }
    }
}

/// Quotient `q` with `denominator * q = numerator` through order `n_max`.
///
/// Forward substitution: `q_k = (a_k - sum_{i=1..k} b_i q_{k-i}) / b_0`.
pub fn series_divide<T: Real>(
    numerator: &PowerSeries<T>,
    denominator: &PowerSeries<T>,
    n_max: usize,
) -> Result<PowerSeries<T>> {
    let have = numerator.order().min(denominator.order());
    if have < n_max {
        return Err(Error::SeriesTooShort { needed: n_max, have });
    }
    let b0 = denominator.coeffs[0].clone();
    if b0.is_zero() {
        return Err(Error::NonInvertibleSeries);
    }
    let inv = T::one() / b0;
    let b = &denominator.coeffs;
    let mut q: Vec<T> = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        let mut acc = numerator.coeffs[k].clone();
        for i in 1..=k {
            if !b[i].is_zero() {
                acc = acc - b[i].clone() * q[k - i].clone();
            }
        }
        q.push(acc * inv.clone());
    }
    Ok(PowerSeries { coeffs: q })
}

/// `H(s)` through order `n`, exact.
pub fn pgf_series(dist: &ClaimDistribution, n: usize) -> PowerSeries<Rational> {
    PowerSeries::new(dist.pmf_prefix(n))
}

/// `H(s) - s^2` through order `n` (`n >= 2`), exact.
pub fn pgf_minus_square(dist: &ClaimDistribution, n: usize) -> PowerSeries<Rational> {
    assert!(n >= 2, "order must reach the s^2 term");
    let mut c = dist.pmf_prefix(n);
    c[2] -= Rational::one();
    PowerSeries::new(c)
}

/// `G(s) = (H(s) - s^2) / (1 - s)` through order `n_max`:
/// `g_n = sum_{k<=n} h_k` for `n < 2` and `g_n = -1 + sum_{k<=n} h_k` otherwise.
pub fn deflate_g(dist: &ClaimDistribution, n_max: usize) -> PowerSeries<Rational> {
    let h = dist.pmf_prefix(n_max);
    let mut cumulative = Rational::zero();
    let coeffs = h
        .iter()
        .enumerate()
        .map(|(n, hn)| {
            cumulative += hn;
            if n < 2 {
                cumulative.clone()
            } else {
                &cumulative - Rational::one()
            }
        })
        .collect();
    PowerSeries::new(coeffs)
}

/// Generating function of `x_n`: `X(s) = H(s) / (H(s) - s^2)`.
pub fn x_series(dist: &ClaimDistribution, n_max: usize) -> Result<PowerSeries<Rational>> {
    let n = n_max.max(2);
    let q = series_divide(&pgf_series(dist, n), &pgf_minus_square(dist, n), n)?;
    Ok(q.truncate(n_max))
}

/// Generating function of `y_n`: `Y(s) = h_0 s / (H(s) - s^2)`.
pub fn y_series(dist: &ClaimDistribution, n_max: usize) -> Result<PowerSeries<Rational>> {
    let n = n_max.max(2);
    let num = PowerSeries::from_poly(&[Rational::zero(), dist.h0()], n);
    let q = series_divide(&num, &pgf_minus_square(dist, n), n)?;
    Ok(q.truncate(n_max))
}
