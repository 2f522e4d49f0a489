//! Zeros of `H(s) - s^2` inside the unit disk and its vanishing order at 1.
//!
//! The negative zero `-1/alpha` is bracketed by `[-1, 0]` (`H(0) = h_0 > 0`,
//! `H(-1) - 1 < 0` for primitive laws). The positive zero `1/beta` exists only
//! when `E Z > 2` and is bisected on the deflated series
//! `G(s) = (H(s) - s^2) / (1 - s)`, for which `G(0) = h_0 > 0` and
//! `G(1) = 2 - E Z < 0`.

use num::One;
use serde::Serialize;

use crate::distributions::{ClaimDistribution, ClaimKind, Moment, MomentReport};
use crate::error::{Error, Result};
use crate::scalar::{dyadic_floor, from_f64, int, sign, Rational, Real};
use crate::series;

pub const DEFAULT_TOL: f64 = 1e-14;
pub const MAX_ITERATIONS: usize = 200;
pub const GRID_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub root: f64,
    pub width: f64,
    pub iterations: usize,
}

/// Bisection of a continuous `f` with `f(lo)` and `f(hi)` of opposite signs.
///
/// Stops when the bracket is narrower than `tol * max(|mid|, tol)`, when it
/// cannot shrink further in binary64, or after [`MAX_ITERATIONS`].
pub fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<Bracket> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(Bracket { root: lo, width: 0.0, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Bracket { root: hi, width: 0.0, iterations: 0 });
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoBracket { lo, hi });
    }
    let lo_negative = f_lo < 0.0;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * mid.abs().max(tol) || mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(Bracket { root: mid, width: 0.0, iterations });
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bracket {
        root: 0.5 * (lo + hi),
        width: hi - lo,
        iterations,
    })
}

/// `H(s) - s^2`.
pub fn characteristic<T: Real>(dist: &ClaimDistribution, s: &T) -> T {
    dist.pgf_derivative(s, 0) - s.clone() * s.clone()
}

/// `G(s) = (H(s) - s^2) / (1 - s)` for a primitive law, evaluated without
/// dividing by `1 - s`.
pub fn deflated<T: Real>(dist: &ClaimDistribution, s: &T) -> Result<T> {
    match dist.kind() {
        ClaimKind::Geometric(p) => {
            // g_n = -q^{n+1} for n >= 2.
            let p = T::from_rational(p);
            let q = T::one() - p.clone();
            let q3 = q.clone() * q.clone() * q.clone();
            let head = p.clone() + (p.clone() + p * q.clone()) * s.clone();
            Ok(head - q3 * s.clone() * s.clone() / (T::one() - q * s.clone()))
        }
        ClaimKind::EvenLattice(_) => Err(Error::Imprimitive),
        _ => {
            let m = dist.support_max().expect("finite support").max(2);
            let g = series::deflate_g(dist, m);
            Ok(g
                .coeffs()
                .iter()
                .rev()
                .fold(T::zero(), |acc, c| acc * s.clone() + T::from_rational(c)))
        }
    }
}

/// Interior zeros of `H(s) - s^2` and the vanishing order at `s = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootProfile {
    pub alpha: f64,
    /// Present iff `E Z > 2`; then `1 < beta < alpha`.
    pub beta: Option<f64>,
    pub r: u8,
    pub tol: f64,
    /// Widest final bisection bracket over the roots found.
    pub bracket_width: f64,
    /// `|H(-1/alpha) - alpha^-2|`.
    pub alpha_residual: f64,
    /// `|H(1/beta) - beta^-2|`.
    pub beta_residual: Option<f64>,
    /// Sign changes of `H(s) - s^2` on the grid over `(-1, 0)`.
    pub negative_sign_changes: usize,
    /// Sign changes of `G` on the grid over `(0, 1)`.
    pub positive_sign_changes: usize,
    /// Leading coefficients of `G` (through the truncation cap).
    pub deflated: Vec<f64>,
    pub anomalies: Vec<String>,
}

fn require_primitive(dist: &ClaimDistribution) -> Result<()> {
    if dist.is_primitive() {
        Ok(())
    } else {
        Err(Error::Imprimitive)
    }
}

pub fn find_alpha_bracket(dist: &ClaimDistribution, tol: f64) -> Result<Bracket> {
    require_primitive(dist)?;
    bisect(|s| characteristic(dist, &s), -1.0, 0.0, tol)
}

/// `alpha > 1` with `-1/alpha` the negative zero of `H(s) - s^2`.
pub fn find_alpha(dist: &ClaimDistribution, tol: f64) -> Result<f64> {
    Ok(-1.0 / find_alpha_bracket(dist, tol)?.root)
}

pub fn find_beta_bracket(dist: &ClaimDistribution, tol: f64) -> Result<Option<Bracket>> {
    require_primitive(dist)?;
    if dist.mean() <= int(2) {
        return Ok(None);
    }
    let g = |s: f64| deflated(dist, &s).expect("primitive");
    // G(1) = 2 - E Z, exact.
    let g1 = 2.0 - crate::scalar::to_f64(&dist.mean());
    let g = move |s: f64| if s == 1.0 { g1 } else { g(s) };
    bisect(g, 0.0, 1.0, tol).map(Some)
}

/// `beta` with `1/beta` the zero of `G` in `(0, 1)`; `None` when `E Z <= 2`.
pub fn find_beta(dist: &ClaimDistribution, tol: f64) -> Result<Option<f64>> {
    Ok(find_beta_bracket(dist, tol)?.map(|b| 1.0 / b.root))
}

/// `r = 1` if `H'(1) != 2`; `r = 2` if `H'(1) = 2` and `H''(1)` is finite and `!= 2`.
pub fn vanishing_order_from(moments: &MomentReport) -> Result<u8> {
    let two = int(2);
    match &moments.mean {
        Moment::Infinite => Ok(1),
        Moment::Finite(m) if *m != two => Ok(1),
        Moment::Finite(_) => match moments.derivative(2) {
            Some(Moment::Finite(h2)) if *h2 != two => Ok(2),
            Some(Moment::Finite(_)) => Err(Error::MomentCondition(
                "H'(1) = 2 and H''(1) = 2 means Z = 2 almost surely".into(),
            )),
            _ => Err(Error::MomentCondition(
                "asymptotic branch undefined: H'(1) = 2 requires a finite H''(1)".into(),
            )),
        },
    }
}

pub fn vanishing_order(dist: &ClaimDistribution) -> Result<u8> {
    vanishing_order_from(&dist.pgf_derivatives_at_one(2))
}

fn sign_changes(values: impl Iterator<Item = f64>) -> usize {
    let mut count = 0;
    let mut last = 0.0f64;
    for v in values {
        if v != 0.0 && last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        if v != 0.0 {
            last = v;
        }
    }
    count
}

/// Bisection for both interior roots, a grid pre-scan, residuals and `r`.
pub fn root_profile(dist: &ClaimDistribution, tol: f64) -> Result<RootProfile> {
    require_primitive(dist)?;
    let steps = (1.0 / GRID_STEP).round() as usize;
    let negative_sign_changes = sign_changes(
        (0..=steps).map(|k| characteristic(dist, &(-1.0 + k as f64 * GRID_STEP))),
    );
    let g1 = 2.0 - crate::scalar::to_f64(&dist.mean());
    let positive_sign_changes = sign_changes((0..=steps).map(|k| {
        if k == steps {
            g1
        } else {
            deflated(dist, &(k as f64 * GRID_STEP)).expect("primitive")
        }
    }));

    let a = find_alpha_bracket(dist, tol)?;
    let b = find_beta_bracket(dist, tol)?;
    let alpha = -1.0 / a.root;
    let beta = b.map(|b| 1.0 / b.root);
    let residual = |s: f64| (dist.pgf(s) - s * s).abs();

    let mut anomalies = Vec::new();
    if negative_sign_changes != 1 {
        anomalies.push(format!(
            "{negative_sign_changes} sign changes of H(s)-s^2 on (-1,0), expected 1"
        ));
    }
    let expected_positive = usize::from(beta.is_some());
    if positive_sign_changes != expected_positive {
        anomalies.push(format!(
            "{positive_sign_changes} sign changes of G on (0,1), expected {expected_positive}"
        ));
    }
    if let Some(beta) = beta {
        if !(1.0 < beta && beta < alpha) {
            anomalies.push(format!("ordering 1 < beta < alpha fails: beta={beta}, alpha={alpha}"));
        }
    }

    let g = series::deflate_g(dist, dist.truncation_cap().max(2));
    Ok(RootProfile {
        alpha,
        beta,
        r: vanishing_order(dist)?,
        tol,
        bracket_width: b.map_or(a.width, |b| a.width.max(b.width)),
        alpha_residual: residual(-1.0 / alpha),
        beta_residual: beta.map(|b| residual(1.0 / b)),
        negative_sign_changes,
        positive_sign_changes,
        deflated: g.to_f64().into_coeffs(),
        anomalies,
    })
}

/// Exact bisection on rationals, seeded with a binary64 estimate.
fn refine_exact(
    f: impl Fn(&Rational) -> Rational,
    guess: f64,
    outer: (Rational, Rational),
    bits: u32,
) -> Rational {
    let pad = from_f64(1e-12_f64.max(guess.abs() * 1e-12));
    let g = from_f64(guess);
    let (mut lo, mut hi) = (&g - &pad, &g + &pad);
    let mut s_lo = sign(&f(&lo));
    let mut s_hi = sign(&f(&hi));
    if s_lo * s_hi >= 0 || lo < outer.0 || hi > outer.1 {
        lo = outer.0;
        hi = outer.1;
        s_lo = sign(&f(&lo));
        s_hi = sign(&f(&hi));
    }
    if s_lo == 0 {
        return lo;
    }
    if s_hi == 0 {
        return hi;
    }
    let width = Rational::new(1.into(), num::BigInt::one() << bits);
    let two = int(2);
    while &hi - &lo > width {
        // Keep endpoints dyadic so their size stays proportional to `bits`.
        let mid = dyadic_floor(&((&lo + &hi) / &two), bits + 2);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = sign(&f(&mid));
        if s == 0 {
            return mid;
        }
        if s == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / two
}

/// `alpha` to within about `2^-bits` as a dyadic rational.
pub fn refine_alpha_exact(dist: &ClaimDistribution, alpha: f64, bits: u32) -> Result<Rational> {
    require_primitive(dist)?;
    let s = refine_exact(
        |s| characteristic(dist, s),
        -1.0 / alpha,
        (int(-1), int(0)),
        bits + 4,
    );
    Ok(dyadic_floor(&(-s.recip()), bits))
}

/// `beta` to within about `2^-bits` as a dyadic rational.
pub fn refine_beta_exact(dist: &ClaimDistribution, beta: f64, bits: u32) -> Result<Rational> {
    require_primitive(dist)?;
    let one = Rational::one();
    let g1 = int(2) - dist.mean();
    let s = refine_exact(
        |s| if *s == one { g1.clone() } else { deflated(dist, s).expect("primitive") },
        1.0 / beta,
        (int(0), one.clone()),
        bits + 4,
    );
    Ok(dyadic_floor(&s.recip(), bits))
}

/// Bits of precision needed so that `alpha^n` errors stay below `2^-margin`
/// up to `n = n_max`.
pub fn working_bits(alpha: f64, n_max: usize, margin: u32) -> u32 {
    ((n_max as f64 + 2.0) * (alpha + 1.0).log2()).ceil() as u32 + margin
}
