//! Claim-size laws on the non-negative integers.
//!
//! A [`ClaimDistribution`] is either a finite tabulated pmf or one of the
//! named families (Bernoulli, geometric), optionally pushed onto the even
//! lattice by `Z -> 2Z`. Everything downstream reads the law through this
//! module: exact pmf prefixes for the recurrences, p.g.f. values and
//! derivatives for root finding and the asymptotic coefficients, and a
//! truncated binary64 pmf for the simulation oracles.

mod spec;

use std::fmt;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, int, to_f64, Rational, Real};

pub use spec::parse_distribution;

/// Default truncation threshold for infinite-support laws.
pub const DEFAULT_TAIL_EPSILON: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq)]
pub enum ClaimKind {
    /// `pmf[k] = P(Z = k)`; trailing zeros are trimmed at construction.
    Tabulated(Vec<Rational>),
    /// `P(Z = 1) = p`, `P(Z = 0) = 1 - p`.
    Bernoulli(Rational),
    /// `P(Z = k) = p (1 - p)^k`.
    Geometric(Rational),
    /// Law of `2 Y` where `Y` follows the base distribution.
    EvenLattice(Box<ClaimDistribution>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimDistribution {
    kind: ClaimKind,
    tail_epsilon: f64,
}

/// A p.g.f. derivative (factorial moment) at `s = 1`; infinite when the
/// defining series diverges.
#[derive(Debug, Clone, PartialEq)]
pub enum Moment {
    Finite(Rational),
    Infinite,
}

impl Moment {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            Moment::Finite(v) => Some(v),
            Moment::Infinite => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Moment::Finite(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Moment::Finite(v) => to_f64(v),
            Moment::Infinite => f64::INFINITY,
        }
    }
}

/// Derivatives `H^(j)(1)` and raw moments of `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    /// `derivatives[j - 1] = H^(j)(1)`.
    pub derivatives: Vec<Moment>,
    pub mean: Moment,
    pub m2: Moment,
    pub m3: Option<Moment>,
    pub m4: Option<Moment>,
}

impl MomentReport {
    /// `H^(order)(1)`; `None` when the order was not requested.
    pub fn derivative(&self, order: usize) -> Option<&Moment> {
        order.checked_sub(1).and_then(|i| self.derivatives.get(i))
    }

    /// Builds the report from factorial moments `H^(1)(1), H^(2)(1), ...`
    /// using Stirling numbers of the second kind.
    pub fn from_derivatives(derivatives: Vec<Moment>) -> Self {
        const STIRLING2: [[i64; 4]; 4] = [[1, 0, 0, 0], [1, 1, 0, 0], [1, 3, 1, 0], [1, 7, 6, 1]];
        let raw = |k: usize| -> Option<Moment> {
            if derivatives.len() < k {
                return None;
            }
            let mut acc = Rational::zero();
            for (j, &c) in STIRLING2[k - 1].iter().enumerate().take(k) {
                match &derivatives[j] {
                    Moment::Finite(v) => acc += v * int(c),
                    Moment::Infinite => return Some(Moment::Infinite),
                }
            }
            Some(Moment::Finite(acc))
        };
        let mean = raw(1).unwrap_or(Moment::Infinite);
        let m2 = raw(2).unwrap_or(Moment::Infinite);
        let m3 = raw(3);
        let m4 = raw(4);
        MomentReport {
            derivatives,
            mean,
            m2,
            m3,
            m4,
        }
    }
}

impl ClaimDistribution {
    pub fn tabulated(pmf: Vec<Rational>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::invalid("pmf", "empty pmf"));
        }
        for (k, h) in pmf.iter().enumerate() {
            if h.is_negative() {
                return Err(Error::invalid(format!("pmf[{k}]"), "negative probability"));
            }
        }
        let total: Rational = pmf.iter().sum();
        if !total.is_one() {
            return Err(Error::invalid(
                "pmf",
                format!("probabilities sum to {}, expected 1", format_rational(&total)),
            ));
        }
        let mut pmf = pmf;
        while pmf.len() > 1 && pmf.last().is_some_and(Zero::is_zero) {
            pmf.pop();
        }
        Self::validated(ClaimKind::Tabulated(pmf))
    }

    pub fn bernoulli(p: Rational) -> Result<Self> {
        check_open_unit("p", &p)?;
        Self::validated(ClaimKind::Bernoulli(p))
    }

    pub fn geometric(p: Rational) -> Result<Self> {
        check_open_unit("p", &p)?;
        Self::validated(ClaimKind::Geometric(p))
    }

    pub fn even_lattice(base: ClaimDistribution) -> Result<Self> {
        let eps = base.tail_epsilon;
        Self::validated(ClaimKind::EvenLattice(Box::new(base))).map(|d| d.with_tail_epsilon(eps))
    }

    pub fn with_tail_epsilon(mut self, tail_epsilon: f64) -> Self {
        assert!(
            tail_epsilon > 0.0 && tail_epsilon < 1.0,
            "tail_epsilon must lie in (0, 1)"
        );
        self.tail_epsilon = tail_epsilon;
        self
    }

    fn validated(kind: ClaimKind) -> Result<Self> {
        let dist = ClaimDistribution {
            kind,
            tail_epsilon: DEFAULT_TAIL_EPSILON,
        };
        let head = dist.pmf_prefix(2);
        if head[2].is_one() {
            return Err(Error::invalid(
                "pmf",
                "degenerate law P(Z = 2) = 1: H(s) = s^2 has no survival problem",
            ));
        }
        if !head[0].is_positive() {
            return Err(Error::invalid("pmf[0]", "P(Z = 0) must be positive"));
        }
        Ok(dist)
    }

    pub fn kind(&self) -> &ClaimKind {
        &self.kind
    }

    pub fn tail_epsilon(&self) -> f64 {
        self.tail_epsilon
    }

    /// `h_0 .. h_n`, exact.
    pub fn pmf_prefix(&self, n: usize) -> Vec<Rational> {
        match &self.kind {
            ClaimKind::Tabulated(pmf) => (0..=n)
                .map(|k| pmf.get(k).cloned().unwrap_or_else(Rational::zero))
                .collect(),
            ClaimKind::Bernoulli(p) => (0..=n)
                .map(|k| match k {
                    0 => Rational::one() - p,
                    1 => p.clone(),
                    _ => Rational::zero(),
                })
                .collect(),
            ClaimKind::Geometric(p) => {
                let q = Rational::one() - p;
                let mut out = Vec::with_capacity(n + 1);
                let mut term = p.clone();
                for _ in 0..=n {
                    out.push(term.clone());
                    term *= &q;
                }
                out
            }
            ClaimKind::EvenLattice(base) => {
                let half = base.pmf_prefix(n / 2);
                (0..=n)
                    .map(|k| {
                        if k % 2 == 0 {
                            half[k / 2].clone()
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn h0(&self) -> Rational {
        self.pmf_prefix(0).swap_remove(0)
    }

    /// Largest support point, `None` for infinite support.
    pub fn support_max(&self) -> Option<usize> {
        match &self.kind {
            ClaimKind::Tabulated(pmf) => Some(pmf.len() - 1),
            ClaimKind::Bernoulli(_) => Some(1),
            ClaimKind::Geometric(_) => None,
            ClaimKind::EvenLattice(base) => base.support_max().map(|m| 2 * m),
        }
    }

    /// Cut index `K`: the smallest index whose tail mass `P(Z > K)` is below
    /// `tail_epsilon` (exactly zero for finite support).
    pub fn truncation_cap(&self) -> usize {
        match &self.kind {
            ClaimKind::Geometric(p) => {
                let q = 1.0 - to_f64(p);
                let mut k = 0usize;
                let mut tail = q; // P(Z > k) = q^{k+1}
                while tail >= self.tail_epsilon {
                    k += 1;
                    tail *= q;
                }
                k
            }
            ClaimKind::EvenLattice(base) => 2 * base.truncation_cap(),
            _ => self.support_max().expect("finite support"),
        }
    }

    /// Truncated binary64 pmf `h_0..h_K` and the dropped tail mass `P(Z > K)`.
    pub fn pmf_f64(&self) -> (Vec<f64>, f64) {
        let cap = self.truncation_cap();
        let pmf: Vec<f64> = self.pmf_prefix(cap).iter().map(to_f64).collect();
        let tail = match &self.kind {
            ClaimKind::Geometric(p) => (1.0 - to_f64(p)).powi(cap as i32 + 1),
            ClaimKind::EvenLattice(base) => base.pmf_f64().1,
            _ => 0.0,
        };
        (pmf, tail)
    }

    /// `H(s)` in closed form. Valid for `|s| <= 1` (and beyond, up to the
    /// radius of convergence, for the named families).
    pub fn pgf(&self, s: f64) -> f64 {
        self.pgf_derivative(&s, 0)
    }

    /// `H(s)` by direct summation of the truncated pmf.
    pub fn pgf_series(&self, s: f64) -> f64 {
        let (pmf, _) = self.pmf_f64();
        pmf.iter().rev().fold(0.0, |acc, h| acc * s + h)
    }

    /// `H^(order)(s)` for `order <= 4`, in either arithmetic.
    pub fn pgf_derivative<T: Real>(&self, s: &T, order: usize) -> T {
        assert!(order <= 4, "derivatives above order 4 are not provided");
        match &self.kind {
            ClaimKind::Tabulated(pmf) => {
                let mut acc = T::zero();
                for (k, h) in pmf.iter().enumerate().skip(order).rev() {
                    acc = acc * s.clone() + T::from_rational(h) * T::from_usize(falling(k, order));
                }
                acc
            }
            ClaimKind::Bernoulli(p) => {
                let p = T::from_rational(p);
                match order {
                    0 => T::one() - p.clone() + p * s.clone(),
                    1 => p,
                    _ => T::zero(),
                }
            }
            ClaimKind::Geometric(p) => {
                // j! p q^j / (1 - q s)^{j+1}
                let p = T::from_rational(p);
                let q = T::one() - p.clone();
                let base = T::one() - q.clone() * s.clone();
                let mut num = p * T::from_usize(falling(order, order));
                let mut den = base.clone();
                for _ in 0..order {
                    num = num * q.clone();
                    den = den * base.clone();
                }
                num / den
            }
            ClaimKind::EvenLattice(base) => {
                let t = s.clone() * s.clone();
                let b = |j| base.pgf_derivative(&t, j);
                let c = |n: usize| T::from_usize(n);
                match order {
                    0 => b(0),
                    1 => c(2) * s.clone() * b(1),
                    2 => c(2) * b(1) + c(4) * t.clone() * b(2),
                    3 => c(12) * s.clone() * b(2) + c(8) * s.clone() * t.clone() * b(3),
                    _ => {
                        c(12) * b(2)
                            + c(48) * t.clone() * b(3)
                            + c(16) * t.clone() * t.clone() * b(4)
                    }
                }
            }
        }
    }

    /// Exact `H^(j)(1)` for `j = 1..=max(max_order, 2)` plus raw moments.
    pub fn pgf_derivatives_at_one(&self, max_order: usize) -> MomentReport {
        assert!(
            (1..=4).contains(&max_order),
            "max_order must be in 1..=4, got {max_order}"
        );
        let one = Rational::one();
        // Every supported family has all moments finite; `Moment::Infinite`
        // only arises from hand-built reports.
        let derivatives = (1..=max_order.max(2))
            .map(|j| Moment::Finite(self.pgf_derivative(&one, j)))
            .collect();
        MomentReport::from_derivatives(derivatives)
    }

    /// Exact `E Z = H'(1)`.
    pub fn mean(&self) -> Rational {
        self.pgf_derivative(&Rational::one(), 1)
    }

    /// True iff `P(Z odd) > 0`, i.e. `H(s) - s^2` is primitive.
    pub fn is_primitive(&self) -> bool {
        match &self.kind {
            ClaimKind::Tabulated(pmf) => pmf.iter().skip(1).step_by(2).any(|h| !h.is_zero()),
            ClaimKind::Bernoulli(_) | ClaimKind::Geometric(_) => true,
            ClaimKind::EvenLattice(_) => false,
        }
    }

    /// For an even-lattice law, the law of `Z / 2`.
    pub fn half_law(&self) -> Option<ClaimDistribution> {
        match &self.kind {
            ClaimKind::EvenLattice(base) => Some((**base).clone()),
            ClaimKind::Tabulated(pmf) if !self.is_primitive() => {
                let half: Vec<Rational> = pmf.iter().step_by(2).cloned().collect();
                Some(
                    ClaimDistribution::tabulated(half)
                        .expect("halving a valid law")
                        .with_tail_epsilon(self.tail_epsilon),
                )
            }
            _ => None,
        }
    }
}

impl fmt::Display for ClaimDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ClaimKind::Tabulated(pmf) => {
                let parts: Vec<String> = pmf.iter().map(format_rational).collect();
                write!(f, "pmf({})", parts.join(","))
            }
            ClaimKind::Bernoulli(p) => write!(f, "bernoulli({})", format_rational(p)),
            ClaimKind::Geometric(p) => write!(f, "geometric({})", format_rational(p)),
            ClaimKind::EvenLattice(base) => write!(f, "even({base})"),
        }
    }
}

fn check_open_unit(field: &str, p: &Rational) -> Result<()> {
    if p.is_positive() && p < &Rational::one() {
        Ok(())
    } else {
        Err(Error::invalid(field, "parameter must lie in (0, 1)"))
    }
}

/// `k (k-1) ... (k-j+1)`.
fn falling(k: usize, j: usize) -> usize {
    (0..j).map(|i| k - i).product()
}
