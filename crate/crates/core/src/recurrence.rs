//! The sequences `x_n`, `y_n` with `phi(n) = x_n phi(0) + y_n phi(1)`, the
//! determinants `D_n = x_n y_{n+1} - x_{n+1} y_n`, and the exact checker for
//!
//! ```text
//! 1 <= D_{2n} <= D_{2n+2}   and   D_{2n+3} <= D_{2n+1} <= -1.
//! ```

use num::{One, Zero};
use serde::Serialize;

use crate::distributions::ClaimDistribution;
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Rational, Real, ScalarMode};
use crate::series;

/// Float-mode conjecture checks are refused beyond this horizon.
pub const FLOAT_CONJECTURE_LIMIT: usize = 200;

/// Float tables rescale once a stored magnitude passes `2^RESCALE_BITS`.
const RESCALE_BITS: i32 = 600;

/// `x_0..x_N`, `y_0..y_N`, `D_0..D_{N-1}` for a claim law.
///
/// In float mode the stored `x`, `y` are mantissas: the true values are
/// `stored * 2^scale_log2` and the true determinants `stored * 2^(2 scale_log2)`.
#[derive(Debug, Clone)]
pub struct SequenceTable<T> {
    dist: ClaimDistribution,
    x: Vec<T>,
    y: Vec<T>,
    d: Vec<T>,
    scale_log2: i64,
    dual_discrepancy: f64,
}

pub type ExactTable = SequenceTable<Rational>;
pub type FloatTable = SequenceTable<f64>;

#[derive(Debug, Clone)]
pub enum AnyTable {
    Exact(ExactTable),
    Float(FloatTable),
}

impl<T: Real> SequenceTable<T> {
    pub fn horizon(&self) -> usize {
        self.x.len() - 1
    }

    pub fn dist(&self) -> &ClaimDistribution {
        &self.dist
    }

    pub fn scalar_mode(&self) -> ScalarMode {
        T::MODE
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    /// `D_0..D_{N-1}`.
    pub fn d(&self) -> &[T] {
        &self.d
    }

    pub fn scale_log2(&self) -> i64 {
        self.scale_log2
    }

    /// Largest relative gap between the two determinant formulas, measured
    /// against the size of the cancelling terms. Always 0 in exact mode.
    pub fn dual_discrepancy(&self) -> f64 {
        self.dual_discrepancy
    }
}

impl FloatTable {
    fn unscale(&self, v: f64, power: i64, n: usize) -> Result<f64> {
        let out = scale2(v, power * self.scale_log2);
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::FloatOverflow { n })
        }
    }

    pub fn x_value(&self, n: usize) -> Result<f64> {
        self.unscale(self.x[n], 1, n)
    }

    pub fn y_value(&self, n: usize) -> Result<f64> {
        self.unscale(self.y[n], 1, n)
    }

    pub fn d_value(&self, n: usize) -> Result<f64> {
        self.unscale(self.d[n], 2, n)
    }
}

impl AnyTable {
    pub fn horizon(&self) -> usize {
        match self {
            AnyTable::Exact(t) => t.horizon(),
            AnyTable::Float(t) => t.horizon(),
        }
    }

    pub fn scalar_mode(&self) -> ScalarMode {
        match self {
            AnyTable::Exact(_) => ScalarMode::Exact,
            AnyTable::Float(_) => ScalarMode::Float,
        }
    }
}

fn scale2(v: f64, exp: i64) -> f64 {
    // Split to keep each factor representable.
    let mut v = v;
    let mut e = exp;
    while e != 0 {
        let step = e.clamp(-1000, 1000);
        v *= 2f64.powi(step as i32);
        e -= step;
    }
    v
}

/// One step of `z_n = (z_{n-2} - sum_{i=1}^{n-1} h_{n-i} z_i) / h_0`.
fn next_term<T: Real>(z: &[T], h: &[T], inv_h0: &T) -> T {
    let n = z.len();
    let mut acc = z[n - 2].clone();
    for i in 1..n {
        let hk = &h[n - i];
        if !hk.is_zero() {
            acc = acc - hk.clone() * z[i].clone();
        }
    }
    acc * inv_h0.clone()
}

/// Exact table through horizon `n_max`, with both determinant formulas
/// required to agree.
pub fn build_exact(dist: &ClaimDistribution, n_max: usize) -> Result<ExactTable> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!("horizon must be >= 2, got {n_max}")));
    }
    let h = dist.pmf_prefix(n_max + 1);
    let inv_h0 = h[0].recip();
    // One extra term so the Hankel form is available for every stored D_n.
    let mut x = vec![Rational::one(), Rational::zero()];
    let mut y = vec![Rational::zero(), Rational::one()];
    while x.len() < n_max + 2 {
        let xn = next_term(&x, &h, &inv_h0);
        let yn = next_term(&y, &h, &inv_h0);
        x.push(xn);
        y.push(yn);
    }
    let d: Vec<Rational> = (0..n_max)
        .map(|n| &x[n] * &y[n + 1] - &x[n + 1] * &y[n])
        .collect();
    for (n, dn) in d.iter().enumerate() {
        let hankel = &h[0] * (&x[n] * &x[n + 2] - &x[n + 1] * &x[n + 1]);
        if &hankel != dn {
            return Err(Error::Inconsistent(format!(
                "determinant and Hankel forms of D_{n} disagree"
            )));
        }
    }
    x.truncate(n_max + 1);
    y.truncate(n_max + 1);
    Ok(SequenceTable {
        dist: dist.clone(),
        x,
        y,
        d,
        scale_log2: 0,
        dual_discrepancy: 0.0,
    })
}

/// Binary64 table with a shared power-of-two scale to postpone overflow.
pub fn build_float(dist: &ClaimDistribution, n_max: usize) -> Result<FloatTable> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!("horizon must be >= 2, got {n_max}")));
    }
    let h: Vec<f64> = dist.pmf_prefix(n_max + 1).iter().map(to_f64).collect();
    let inv_h0 = 1.0 / h[0];
    let limit = 2f64.powi(RESCALE_BITS);
    let shrink = 2f64.powi(-RESCALE_BITS);
    let mut scale_log2 = 0i64;
    let mut x = vec![1.0, 0.0];
    let mut y = vec![0.0, 1.0];
    // Rescaling multiplies every stored entry by 2^-RESCALE_BITS, so the
    // recurrence (linear and homogeneous in the x's) stays consistent; the
    // inhomogeneous-looking x_{n-2} term is itself a stored entry.
    let h_scaled = h.clone();
    while x.len() < n_max + 2 {
        let xn = next_term(&x, &h_scaled, &inv_h0);
        let yn = next_term(&y, &h_scaled, &inv_h0);
        if !xn.is_finite() || !yn.is_finite() {
            return Err(Error::FloatOverflow { n: x.len() });
        }
        x.push(xn);
        y.push(yn);
        if xn.abs().max(yn.abs()) > limit {
            x.iter_mut().chain(y.iter_mut()).for_each(|v| *v *= shrink);
            scale_log2 += RESCALE_BITS as i64;
        }
    }
    let mut dual_discrepancy = 0.0f64;
    let d: Vec<f64> = (0..n_max)
        .map(|n| {
            let a = x[n] * y[n + 1];
            let b = x[n + 1] * y[n];
            let det = a - b;
            let hankel = h[0] * (x[n] * x[n + 2] - x[n + 1] * x[n + 1]);
            let size = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            dual_discrepancy = dual_discrepancy.max((det - hankel).abs() / size);
            det
        })
        .collect();
    x.truncate(n_max + 1);
    y.truncate(n_max + 1);
    Ok(SequenceTable {
        dist: dist.clone(),
        x,
        y,
        d,
        scale_log2,
        dual_discrepancy,
    })
}

pub fn build_table(dist: &ClaimDistribution, n_max: usize, mode: ScalarMode) -> Result<AnyTable> {
    Ok(match mode {
        ScalarMode::Exact => AnyTable::Exact(build_exact(dist, n_max)?),
        ScalarMode::Float => AnyTable::Float(build_float(dist, n_max)?),
    })
}

/// `D_0..D_n` for a table whose horizon is at least `n + 1`.
pub fn determinants<T: Real>(table: &SequenceTable<T>, n: usize) -> Result<&[T]> {
    if n + 1 > table.d.len() {
        return Err(Error::TableTooShort {
            needed: n + 2,
            have: table.horizon() + 1,
        });
    }
    Ok(&table.d[..=n])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "n")]
pub enum Verdict {
    HoldsUpTo(usize),
    ViolatedAt(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub horizon: usize,
    pub mode: ScalarMode,
    pub verdict: Verdict,
    /// `min_n D_{2n} - 1`.
    pub even_floor_margin: f64,
    /// `min_n (-1 - D_{2n+1})`.
    pub odd_ceiling_margin: f64,
    /// `min_n D_{2n+2} - D_{2n}`.
    pub even_growth_margin: f64,
    /// `min_n D_{2n+1} - D_{2n+3}`.
    pub odd_decay_margin: f64,
}

/// Checks both chains for `D_0..D_{n_max}`.
pub fn check_conjecture(
    dist: &ClaimDistribution,
    n_max: usize,
    mode: ScalarMode,
) -> Result<ConjectureReport> {
    let n_max = n_max.max(3);
    match mode {
        ScalarMode::Exact => {
            let table = build_exact(dist, n_max + 1)?;
            Ok(conjecture_verdict(table.d(), n_max, mode))
        }
        ScalarMode::Float => {
            if n_max > FLOAT_CONJECTURE_LIMIT {
                return Err(Error::FloatHorizon {
                    requested: n_max,
                    limit: FLOAT_CONJECTURE_LIMIT,
                });
            }
            let table = build_float(dist, n_max + 1)?;
            let d: Vec<f64> = table
                .d()
                .iter()
                .map(|v| scale2(*v, 2 * table.scale_log2))
                .collect();
            Ok(conjecture_verdict(&d, n_max, mode))
        }
    }
}

fn conjecture_verdict<T: Real>(d: &[T], n_max: usize, mode: ScalarMode) -> ConjectureReport {
    let one = T::one();
    let mut first_violation: Option<usize> = None;
    let mut note = |k: usize| {
        first_violation = Some(first_violation.map_or(k, |v: usize| v.min(k)));
    };
    let mut margins = [f64::INFINITY; 4];
    for k in 0..=n_max {
        let dk = &d[k];
        if k % 2 == 0 {
            let m = (dk.clone() - one.clone()).to_f64_lossy();
            margins[0] = margins[0].min(m);
            if *dk < one {
                note(k);
            }
            if k + 2 <= n_max {
                margins[2] = margins[2].min((d[k + 2].clone() - dk.clone()).to_f64_lossy());
                if d[k + 2] < *dk {
                    note(k + 2);
                }
            }
        } else {
            let m = (-one.clone() - dk.clone()).to_f64_lossy();
            margins[1] = margins[1].min(m);
            if *dk > -one.clone() {
                note(k);
            }
            if k + 2 <= n_max {
                margins[3] = margins[3].min((dk.clone() - d[k + 2].clone()).to_f64_lossy());
                if d[k + 2] > *dk {
                    note(k + 2);
                }
            }
        }
    }
    ConjectureReport {
        horizon: n_max,
        mode,
        verdict: match first_violation {
            None => Verdict::HoldsUpTo(n_max),
            Some(k) => Verdict::ViolatedAt(k),
        },
        even_floor_margin: margins[0],
        odd_ceiling_margin: margins[1],
        even_growth_margin: margins[2],
        odd_decay_margin: margins[3],
    }
}

/// Structural identities of an exact table, each checked exactly:
///
/// * `y_n = h_0 x_{n+1}`;
/// * `x_{2n} <= x_{2n+2}`, `x_{2n} >= 1`, `x_{2n+3} <= x_{2n+1} <= 0`;
/// * `x_{2n+1} = 0` when the law lives on the even lattice;
/// * the coefficients of `H / (H - s^2)` reproduce `x_n`;
/// * `(1 - s) G(s) = H(s) - s^2` coefficientwise.
///
/// Returns a description of every failure (empty when all hold). The
/// determinant dual-formula identity is enforced by [`build_exact`] itself.
pub fn identity_violations(table: &ExactTable) -> Vec<String> {
    let dist = table.dist();
    let x = table.x();
    let y = table.y();
    let n_max = table.horizon();
    let h0 = dist.h0();
    let mut out = Vec::new();

    for n in 0..n_max {
        if y[n] != &h0 * &x[n + 1] {
            out.push(format!("y_{n} != h0 * x_{}", n + 1));
        }
    }
    let one = Rational::one();
    let zero = Rational::zero();
    for n in (0..=n_max).step_by(2) {
        if x[n] < one {
            out.push(format!("x_{n} < 1"));
        }
        if n + 2 <= n_max && x[n + 2] < x[n] {
            out.push(format!("x_{} < x_{n}", n + 2));
        }
    }
    for n in (1..=n_max).step_by(2) {
        if x[n] > zero {
            out.push(format!("x_{n} > 0"));
        }
        if n + 2 <= n_max && x[n + 2] > x[n] {
            out.push(format!("x_{} > x_{n}", n + 2));
        }
        if !dist.is_primitive() && !x[n].is_zero() {
            out.push(format!("imprimitive law but x_{n} != 0"));
        }
    }
    match series::x_series(dist, n_max) {
        Ok(xs) => {
            if let Some(n) = xs.coeffs().iter().zip(x).position(|(a, b)| a != b) {
                out.push(format!("series coefficient {n} of H/(H-s^2) != x_{n}"));
            }
        }
        Err(e) => out.push(format!("series division failed: {e}")),
    }
    let g = series::deflate_g(dist, n_max);
    if g.times_one_minus_s() != series::pgf_minus_square(dist, n_max) {
        out.push("(1-s)G(s) != H(s) - s^2".to_string());
    }
    out
}
