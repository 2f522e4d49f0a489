//! Partial-fraction coefficients of `X(s) = H(s) / (H(s) - s^2)` and the
//! large-`n` behaviour of `x_n` and `D_n`.
//!
//! ```text
//! x_n ~ a (-alpha)^n + b beta^n + c1 + c2 (n + 1)
//! D_n ~ (-1)^n h0 a c_r (1 + alpha)^2 n^{r-1} alpha^n        (E Z <= 2)
//! D_n ~ (-1)^n h0 a b (alpha + beta)^2 (alpha beta)^n        (E Z >  2)
//! ```

use num::{One, Signed, Zero};
use serde::Serialize;

use crate::distributions::{ClaimDistribution, ClaimKind, Moment};
use crate::error::{Error, Result};
use crate::recurrence::ExactTable;
use crate::roots::{self, RootProfile};
use crate::scalar::{dyadic_floor, int, to_f64, Rational, Real};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticCoefficients {
    pub a: f64,
    /// Zero when `E Z <= 2`.
    pub b: f64,
    pub c1: f64,
    /// Zero when `r = 1`.
    pub c2: f64,
    pub r: u8,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub h0: f64,
}

/// Coefficient of `1 / (1 + alpha s)` in `X`: `1 / (2 + alpha H'(-1/alpha))`.
pub fn negative_pole_coefficient<T: Real>(dist: &ClaimDistribution, alpha: &T) -> T {
    let s = -(T::one() / alpha.clone());
    let two = T::one() + T::one();
    T::one() / (two + alpha.clone() * dist.pgf_derivative(&s, 1))
}

/// Coefficient of `1 / (1 - beta s)` in `X`: `1 / (2 - beta H'(1/beta))`.
///
/// Also meaningful for a zero `1/beta` outside the unit disk, as long as it
/// lies inside the radius of convergence of `H`.
pub fn positive_pole_coefficient<T: Real>(dist: &ClaimDistribution, beta: &T) -> T {
    let s = T::one() / beta.clone();
    let two = T::one() + T::one();
    T::one() / (two - beta.clone() * dist.pgf_derivative(&s, 1))
}

/// `(c1, c2)` from the derivatives of `H` at 1, exact.
pub fn unit_pole_coefficients(dist: &ClaimDistribution, r: u8) -> Result<(Rational, Rational)> {
    let finite = |m: Option<&Moment>, what: &str| -> Result<Rational> {
        m.and_then(Moment::value).cloned().ok_or_else(|| {
            Error::MomentCondition(format!("{what} must be finite for the r = {r} branch"))
        })
    };
    let two = int(2);
    if r == 1 {
        let m = dist.pgf_derivatives_at_one(1);
        let mean = finite(m.derivative(1), "H'(1)")?;
        return Ok((int(1) / (&two - mean), Rational::zero()));
    }
    let m = dist.pgf_derivatives_at_one(3);
    let h2 = finite(m.derivative(2), "H''(1)")?;
    let h3 = finite(m.derivative(3), "H'''(1)")?;
    let d = &h2 - &two;
    let c2 = &two / &d;
    let c1 = (&two * &h3 - int(12) * &h2 + int(24)) / (int(3) * &d * &d);
    Ok((c1, c2))
}

/// Coefficients from a root profile (binary64).
pub fn compute_coefficients(
    dist: &ClaimDistribution,
    roots: &RootProfile,
) -> Result<AsymptoticCoefficients> {
    if !dist.is_primitive() {
        return Err(Error::Imprimitive);
    }
    let (c1, c2) = unit_pole_coefficients(dist, roots.r)?;
    Ok(AsymptoticCoefficients {
        a: negative_pole_coefficient(dist, &roots.alpha),
        b: roots.beta.map_or(0.0, |b| positive_pole_coefficient(dist, &b)),
        c1: to_f64(&c1),
        c2: to_f64(&c2),
        r: roots.r,
        alpha: roots.alpha,
        beta: roots.beta,
        h0: to_f64(&dist.h0()),
    })
}

/// `a (-alpha)^n + b beta^n + c1 + c2 (n + 1)`, without the remainder.
pub fn predict_xn(c: &AsymptoticCoefficients, n: usize) -> f64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let n_f = n as f64;
    let mut v = sign * c.a * c.alpha.powf(n_f) + c.c1 + c.c2 * (n_f + 1.0);
    if let Some(beta) = c.beta {
        v += c.b * beta.powf(n_f);
    }
    v
}

/// Leading term of `D_n`.
pub fn predict_dn(c: &AsymptoticCoefficients, n: usize) -> f64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let n_f = n as f64;
    match c.beta {
        Some(beta) => {
            sign * c.h0 * c.a * c.b * (c.alpha + beta).powi(2) * (c.alpha * beta).powf(n_f)
        }
        None => {
            let cr = if c.r == 2 { c.c2 } else { c.c1 };
            sign * c.h0 * c.a * cr * (1.0 + c.alpha).powi(2) * n_f.powi(c.r as i32 - 1) * c.alpha.powf(n_f)
        }
    }
}

/// `lim D_{n+2} / D_n`: `alpha^2` when `E Z <= 2`, `(alpha beta)^2` otherwise.
pub fn limiting_ratio(c: &AsymptoticCoefficients) -> f64 {
    let m = c.alpha * c.beta.unwrap_or(1.0);
    m * m
}

/// `D_{n+2} / D_n` from an exact table.
pub fn ratio_estimate(table: &ExactTable, n: usize) -> Result<f64> {
    let d = crate::recurrence::determinants(table, n + 2)?;
    if d[n].is_zero() {
        return Err(Error::SingularDeterminant { n });
    }
    Ok(to_f64(&(&d[n + 2] / &d[n])))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignMonotonicityReport {
    pub horizon: usize,
    /// Empirical stabilisation index: the smallest `n0` such that the chain
    /// conditions hold for every checked `n > n0`. `None` if the last checked
    /// `n` fails.
    pub n0: Option<usize>,
    /// Strict inequalities were tested (primitive laws); imprimitive laws
    /// can have constant `D_n` and are held to the non-strict form.
    pub strict: bool,
    /// Every `n` (pair index) at which the chain conditions fail.
    pub failures: Vec<usize>,
    /// `sign(D_n) = (-1)^n` for every `D_n` with `n > 2 n0`.
    pub signs_alternate: bool,
    /// `D_N / predict_dn(N)` at the last index, for primitive laws.
    pub leading_term_ratio: Option<f64>,
}

/// Checks `1 < D_{2n} < D_{2n+2}` and `D_{2n+3} < D_{2n+1} < -1` over the
/// table and reports where the pattern stabilises.
pub fn verify_sign_monotonicity(
    table: &ExactTable,
    coeffs: Option<&AsymptoticCoefficients>,
) -> Result<SignMonotonicityReport> {
    let d = table.d();
    if d.len() < 40 {
        return Err(Error::TableTooShort { needed: 41, have: table.horizon() + 1 });
    }
    let strict = table.dist().is_primitive();
    let one = Rational::one();
    let m_one = -Rational::one();
    let lt = |a: &Rational, b: &Rational| if strict { a < b } else { a <= b };

    let last_pair = (d.len() - 4) / 2;
    let failures: Vec<usize> = (0..=last_pair)
        .filter(|&n| {
            let (e0, e1) = (&d[2 * n], &d[2 * n + 2]);
            let (o0, o1) = (&d[2 * n + 1], &d[2 * n + 3]);
            !(lt(&one, e0) && lt(e0, e1) && lt(o1, o0) && lt(o0, &m_one))
        })
        .collect();
    let n0 = match failures.last() {
        None => Some(0),
        Some(&n) if n == last_pair => None,
        Some(&n) => Some(n),
    };
    let signs_alternate = n0.is_some_and(|n0| {
        d.iter()
            .enumerate()
            .skip(2 * n0 + 1)
            .all(|(k, v)| if k % 2 == 0 { v.is_positive() } else { v.is_negative() })
    });
    let leading_term_ratio = coeffs.map(|c| {
        let n = d.len() - 1;
        to_f64(&d[n]) / predict_dn(c, n)
    });
    Ok(SignMonotonicityReport {
        horizon: d.len() - 1,
        n0,
        strict,
        failures,
        signs_alternate,
        leading_term_ratio,
    })
}

/// Coefficients with `alpha`, `beta` refined to dyadic rationals, so the
/// expansion can be compared against exact `x_n` without binary64 cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCoefficients {
    pub a: Rational,
    pub b: Rational,
    pub c1: Rational,
    pub c2: Rational,
    pub alpha: Rational,
    pub beta: Option<Rational>,
    pub bits: u32,
}

pub fn exact_coefficients(
    dist: &ClaimDistribution,
    roots: &RootProfile,
    bits: u32,
) -> Result<ExactCoefficients> {
    let alpha = roots::refine_alpha_exact(dist, roots.alpha, bits)?;
    let beta = match roots.beta {
        Some(b) => Some(roots::refine_beta_exact(dist, b, bits)?),
        None => None,
    };
    let (c1, c2) = unit_pole_coefficients(dist, roots.r)?;
    let trim = |x: Rational| dyadic_floor(&x, bits);
    Ok(ExactCoefficients {
        a: trim(negative_pole_coefficient(dist, &alpha)),
        b: beta
            .as_ref()
            .map_or_else(Rational::zero, |b| trim(positive_pole_coefficient(dist, b))),
        c1,
        c2,
        alpha,
        beta,
        bits,
    })
}

/// `|x_n - predict(n)|` for `n = 0..=N`, evaluated in rationals.
pub fn residual_profile(table: &ExactTable, c: &ExactCoefficients) -> Vec<f64> {
    let x = table.x();
    let bits = c.bits + 8;
    let neg_alpha = -c.alpha.clone();
    let mut pow_a = Rational::one();
    let mut pow_b = Rational::one();
    let mut out = Vec::with_capacity(x.len());
    for (n, xn) in x.iter().enumerate() {
        let mut p = &c.a * &pow_a + &c.c1 + &c.c2 * int(n as i64 + 1);
        if let Some(beta) = &c.beta {
            p += &c.b * &pow_b;
            pow_b = dyadic_floor(&(&pow_b * beta), bits);
        }
        out.push(to_f64(&(xn - p)).abs());
        pow_a = dyadic_floor(&(&pow_a * &neg_alpha), bits);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualDecay {
    pub decays: bool,
    /// Largest residual over the last quarter.
    pub tail_max: f64,
    pub noise_floor: f64,
}

/// Residuals decay if they strictly decrease over the last quarter of the
/// profile, or if they are already below `noise_floor` there.
pub fn residual_decay(residuals: &[f64], noise_floor: f64) -> ResidualDecay {
    let start = residuals.len() - residuals.len() / 4;
    let tail = &residuals[start..];
    let tail_max = tail.iter().cloned().fold(0.0, f64::max);
    let strictly = tail.windows(2).all(|w| w[1] < w[0] || w[0] <= noise_floor);
    ResidualDecay {
        decays: tail_max <= noise_floor || strictly,
        tail_max,
        noise_floor,
    }
}

/// For `geometric(p)`: `(f(p), p^2 (alpha + p - 2) / (1 - p)^3)` with
/// `f(p) = c1 (1 - beta)(alpha - beta) / (a (1 + beta)(alpha + beta))`.
///
/// `beta` is the root from [`RootProfile`] when `E Z > 2`; otherwise the
/// third zero of `H(s) - s^2` lies outside the unit disk and `beta` comes
/// from `alpha beta = q / p`.
pub fn geometric_f(dist: &ClaimDistribution, roots: &RootProfile) -> Result<(f64, f64)> {
    let p = match dist.kind() {
        ClaimKind::Geometric(p) => to_f64(p),
        _ => return Err(Error::InvalidArgument("f(p) is defined for geometric laws".into())),
    };
    if roots.r != 1 {
        return Err(Error::InvalidArgument("f(p) is undefined at p = 1/3".into()));
    }
    let q = 1.0 - p;
    let alpha = roots.alpha;
    let beta = roots.beta.unwrap_or(q / (p * alpha));
    let a = negative_pole_coefficient(dist, &alpha);
    let c1 = 1.0 / (2.0 - q / p);
    let f = c1 * (1.0 - beta) * (alpha - beta) / (a * (1.0 + beta) * (alpha + beta));
    let closed = p * p * (alpha + p - 2.0) / q.powi(3);
    Ok((f, closed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::build_exact;
    use crate::roots::{root_profile, working_bits, DEFAULT_TOL};
    use crate::scalar::rat;

    fn geom(n: i64, d: i64) -> ClaimDistribution {
        ClaimDistribution::geometric(rat(n, d)).unwrap()
    }

    fn coeffs(d: &ClaimDistribution) -> AsymptoticCoefficients {
        compute_coefficients(d, &root_profile(d, DEFAULT_TOL).unwrap()).unwrap()
    }

    #[test]
    fn bernoulli_coefficients() {
        for (n, den) in [(1, 5), (1, 2), (4, 5)] {
            let d = ClaimDistribution::bernoulli(rat(n, den)).unwrap();
            let q = 1.0 - n as f64 / den as f64;
            let c = coeffs(&d);
            assert!((c.a - q / (1.0 + q)).abs() < 1e-13);
            assert!((c.c1 - 1.0 / (1.0 + q)).abs() < 1e-13);
            assert_eq!((c.b, c.c2, c.r), (0.0, 0.0, 1));
        }
    }

    #[test]
    fn geometric_third_coefficients() {
        let c = coeffs(&geom(1, 3));
        assert_eq!(c.r, 2);
        assert!((c.a - 4.0 / 9.0).abs() < 1e-12);
        assert!((c.c1 - 2.0 / 9.0).abs() < 1e-15);
        assert!((c.c2 - 1.0 / 3.0).abs() < 1e-15);
        // x_5 = -12.
        assert!((predict_xn(&c, 5) + 12.0).abs() < 1e-10);
    }

    #[test]
    fn geometric_quarter_coefficients() {
        let d = geom(1, 4);
        let c = coeffs(&d);
        let (alpha, beta) = (c.alpha, c.beta.unwrap());
        let q = 0.75;
        assert!((c.a - (q + alpha) / (3.0 * q + 2.0 * alpha)).abs() < 1e-12);
        assert!((c.b - (q - beta) / (3.0 * q - 2.0 * beta)).abs() < 1e-12);
        assert!((c.c1 - 0.25 / (0.75 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_prediction_is_exact() {
        let d = ClaimDistribution::bernoulli(rat(1, 2)).unwrap();
        let c = coeffs(&d);
        let t = build_exact(&d, 20).unwrap();
        for n in 0..=20 {
            let want = to_f64(&t.x()[n]);
            assert!((predict_xn(&c, n) - want).abs() < 1e-9 * want.abs().max(1.0));
            let dn = n.min(19);
            let want_d = to_f64(&t.d()[dn]);
            assert!((predict_dn(&c, dn) - want_d).abs() < 1e-9 * want_d.abs());
        }
    }

    #[test]
    fn ratio_limits() {
        let d = geom(1, 2);
        let c = coeffs(&d);
        let t = build_exact(&d, 64).unwrap();
        let r = ratio_estimate(&t, 60).unwrap();
        assert!((r - limiting_ratio(&c)).abs() < 1e-3);
        assert!((limiting_ratio(&c) - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sign_monotonicity_fixtures() {
        for d in [
            ClaimDistribution::bernoulli(rat(1, 2)).unwrap(),
            geom(1, 3),
            geom(1, 2),
        ] {
            let t = build_exact(&d, 60).unwrap();
            let c = coeffs(&d);
            let r = verify_sign_monotonicity(&t, Some(&c)).unwrap();
            assert_eq!(r.n0, Some(0), "{d}");
            assert!(r.strict && r.signs_alternate);
            let lead = r.leading_term_ratio.unwrap();
            assert!((lead - 1.0).abs() < 0.1, "{d}: {lead}");
        }
        let d = ClaimDistribution::tabulated(vec![rat(1, 2), int(0), rat(1, 2)]).unwrap();
        let r = verify_sign_monotonicity(&build_exact(&d, 60).unwrap(), None).unwrap();
        assert_eq!(r.n0, Some(0));
        assert!(!r.strict);
    }

    #[test]
    fn residuals_decay_for_fixtures() {
        for d in [
            geom(1, 2),
            geom(1, 4),
            ClaimDistribution::tabulated(vec![rat(2, 5), rat(1, 5), rat(1, 5), rat(1, 5)]).unwrap(),
            ClaimDistribution::bernoulli(rat(1, 3)).unwrap(),
        ] {
            let roots = root_profile(&d, DEFAULT_TOL).unwrap();
            let bits = working_bits(roots.alpha, 200, 256);
            let c = exact_coefficients(&d, &roots, bits).unwrap();
            let t = build_exact(&d, 200).unwrap();
            let res = residual_profile(&t, &c);
            let decay = residual_decay(&res, 1e-40);
            assert!(decay.decays, "{d}: {decay:?}");
        }
    }

    #[test]
    fn geometric_f_identity() {
        for k in 1..20 {
            if k * 3 == 20 {
                continue;
            }
            let d = geom(k, 20);
            // Near p = 1, alpha + p - 2 is tiny: bisect to full float resolution.
            let (f, closed) = geometric_f(&d, &root_profile(&d, 1e-17).unwrap()).unwrap();
            assert!((f - closed).abs() < 1e-12, "p={k}/20: {f} vs {closed}");
        }
    }
}
