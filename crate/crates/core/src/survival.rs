//! Ultimate survival probabilities `phi(u)`.
//!
//! `phi(0)` and `phi(1)` come from three independent routes:
//!
//! * closed form: `phi(0) = alpha (2 - EZ) / (1 + alpha)`,
//!   `phi(1) = (2 - EZ) / (h0 (1 + alpha))`, or `(2 - EZ)/2`, `(2 - EZ)/(2 h0)`
//!   for laws on the even lattice;
//! * the limits `phi(0) = lim (y_{n+1} - y_n) / D_n`,
//!   `phi(1) = lim (x_n - x_{n+1}) / D_n`;
//! * the coefficients of `Xi(s) = (2 - EZ)^+ (1 + alpha s) / ((1 + alpha)(H(s) - s^2))`,
//!   whose `u`-th coefficient is `phi(u + 1)`.
//!
//! The rest of the table follows from `phi(n) = x_n phi(0) + y_n phi(1)`.
//! Because `x_n` grows like `alpha^n`, the table and the `Xi` coefficients are
//! evaluated with a dyadic rational `alpha` carrying enough bits to absorb
//! that growth.

use num::{One, Zero};
use serde::Serialize;

use crate::distributions::ClaimDistribution;
use crate::error::{Error, Result};
use crate::recurrence::{build_exact, ExactTable};
use crate::roots::{self, RootProfile};
use crate::scalar::{int, to_f64, Rational, Real};
use crate::series::{self, PowerSeries};

/// Order `n` at which the limit route is evaluated by default.
pub const DEFAULT_LIMIT_N: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `E Z < 2`.
    Survivable,
    /// `E Z = 2`.
    Critical,
    /// `E Z > 2`.
    Ruinous,
}

impl Regime {
    pub fn of(dist: &ClaimDistribution) -> Regime {
        match dist.mean().cmp(&int(2)) {
            std::cmp::Ordering::Less => Regime::Survivable,
            std::cmp::Ordering::Equal => Regime::Critical,
            std::cmp::Ordering::Greater => Regime::Ruinous,
        }
    }

    pub fn survivable(self) -> bool {
        self == Regime::Survivable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ClosedForm,
    LimitRatio,
    XiSeries,
}

impl Route {
    pub const ALL: [Route; 3] = [Route::ClosedForm, Route::LimitRatio, Route::XiSeries];

    pub fn name(self) -> &'static str {
        match self {
            Route::ClosedForm => "closed_form",
            Route::LimitRatio => "limit_ratio",
            Route::XiSeries => "xi_series",
        }
    }
}

impl std::str::FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Route> {
        match s {
            "closed" | "closed_form" => Ok(Route::ClosedForm),
            "limit" | "limit_ratio" => Ok(Route::LimitRatio),
            "xi" | "xi_series" => Ok(Route::XiSeries),
            _ => Err(Error::InvalidArgument(format!(
                "unknown route `{s}` (closed|limit|xi)"
            ))),
        }
    }
}

/// `phi(0)`, `phi(1)` in closed form. `alpha` is ignored for laws on the even
/// lattice and required otherwise (in the survivable regime).
pub fn initial_values_closed_form<T: Real>(
    dist: &ClaimDistribution,
    alpha: Option<&T>,
) -> Result<(T, T)> {
    if !Regime::of(dist).survivable() {
        return Ok((T::zero(), T::zero()));
    }
    let slack = T::from_rational(&(int(2) - dist.mean()));
    let h0 = T::from_rational(&dist.h0());
    if !dist.is_primitive() {
        let two = T::one() + T::one();
        return Ok((slack.clone() / two.clone(), slack / (two * h0)));
    }
    let alpha = alpha.ok_or_else(|| {
        Error::InvalidArgument("primitive law: closed form needs alpha".into())
    })?;
    let denom = T::one() + alpha.clone();
    Ok((
        alpha.clone() * slack.clone() / denom.clone(),
        slack / (h0 * denom),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub phi0: f64,
    pub phi1: f64,
    pub n: usize,
    /// `max(|phi0(n) - phi0(n-2)|, |phi1(n) - phi1(n-2)|)`.
    pub delta: f64,
}

fn limit_at(table: &ExactTable, n: usize) -> Result<(Rational, Rational)> {
    let d = &table.d()[n];
    if d.is_zero() {
        return Err(Error::SingularDeterminant { n });
    }
    let (x, y) = (table.x(), table.y());
    Ok(((&y[n + 1] - &y[n]) / d, (&x[n] - &x[n + 1]) / d))
}

/// `phi(0) ~ (y_{n+1} - y_n) / D_n`, `phi(1) ~ (x_n - x_{n+1}) / D_n`.
///
/// Only meaningful when `E Z < 2` (it relies on `phi(infinity) = 1`).
pub fn initial_values_limit(table: &ExactTable, n: usize) -> Result<LimitEstimate> {
    if !Regime::of(table.dist()).survivable() {
        return Err(Error::InvalidArgument(
            "the limit route needs E Z < 2".into(),
        ));
    }
    if n < 2 || n >= table.d().len() {
        return Err(Error::TableTooShort {
            needed: n + 2,
            have: table.horizon() + 1,
        });
    }
    let (p0, p1) = limit_at(table, n)?;
    let (q0, q1) = limit_at(table, n - 2)?;
    Ok(LimitEstimate {
        phi0: to_f64(&p0),
        phi1: to_f64(&p1),
        n,
        delta: to_f64(&(&p0 - &q0)).abs().max(to_f64(&(&p1 - &q1)).abs()),
    })
}

/// `xi_0..xi_{n_max}` with `xi_u = phi(u + 1)`, exact in `alpha`.
pub fn xi_series(
    dist: &ClaimDistribution,
    alpha: &Rational,
    n_max: usize,
) -> Result<PowerSeries<Rational>> {
    if !dist.is_primitive() {
        return Err(Error::Imprimitive);
    }
    if !Regime::of(dist).survivable() {
        return Ok(PowerSeries::new(vec![Rational::zero(); n_max + 1]));
    }
    let n = n_max.max(2);
    let scale = (int(2) - dist.mean()) / (Rational::one() + alpha);
    let num = PowerSeries::from_poly(&[scale.clone(), &scale * alpha], n);
    let q = series::series_divide(&num, &series::pgf_minus_square(dist, n), n)?;
    Ok(q.truncate(n_max))
}

/// `phi(0..=u_max)` from the initial values.
///
/// Primitive laws use `phi(n) = x_n phi(0) + y_n phi(1)`. Laws on the even
/// lattice use the half process `Z/2` with unit income:
/// `psi(v+1) = (psi(v) - sum_{k=1}^{v} g_k psi(v+1-k)) / g_0` from
/// `psi(0) = phi(0)`, `psi(1) = phi(1)`, and `phi(2v) = phi(2v-1) = psi(v)`.
pub fn phi_table<T: Real>(
    dist: &ClaimDistribution,
    phi0: &T,
    phi1: &T,
    u_max: usize,
) -> Result<Vec<T>> {
    if dist.is_primitive() {
        let t = build_exact(dist, u_max.max(2))?;
        return Ok((0..=u_max)
            .map(|u| {
                T::from_rational(&t.x()[u]) * phi0.clone()
                    + T::from_rational(&t.y()[u]) * phi1.clone()
            })
            .collect());
    }
    let half = dist.half_law().expect("imprimitive laws have a half law");
    let v_max = u_max / 2 + 1;
    let g: Vec<T> = half.pmf_prefix(v_max).iter().map(T::from_rational).collect();
    let inv_g0 = T::one() / g[0].clone();
    let mut psi = vec![phi0.clone(), phi1.clone()];
    for v in 1..v_max {
        let mut acc = psi[v].clone();
        for k in 1..=v {
            acc = acc - g[k].clone() * psi[v + 1 - k].clone();
        }
        psi.push(acc * inv_g0.clone());
    }
    Ok((0..=u_max)
        .map(|u| if u == 0 { psi[0].clone() } else { psi[u.div_ceil(2)].clone() })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiValues {
    pub pi0: f64,
    pub pi1: f64,
    /// Residuals of `(2h0 + h1) pi0 + h0 pi1 = 2 - EZ` and
    /// `pi0 (h0 + h1 - h0 alpha) + h0 pi1 = 0` (the second is `None` for
    /// laws on the even lattice, where `alpha` is undefined).
    pub residuals: (f64, Option<f64>),
}

/// `P(M+ = 0)` and `P(M+ = 1)` for the nonnegative part of the maximum.
pub fn pi_values(dist: &ClaimDistribution, alpha: Option<f64>) -> Result<PiValues> {
    let h = dist.pmf_prefix(1);
    let (h0, h1) = (to_f64(&h[0]), to_f64(&h[1]));
    let slack = to_f64(&(int(2) - dist.mean()));
    let eq1 = |p0: f64, p1: f64| ((2.0 * h0 + h1) * p0 + h0 * p1 - slack.max(0.0)).abs();
    if !Regime::of(dist).survivable() {
        return Ok(PiValues { pi0: 0.0, pi1: 0.0, residuals: (eq1(0.0, 0.0), Some(0.0)) });
    }
    if !dist.is_primitive() {
        // phi(2) = phi(1), so pi_1 = 0.
        let pi0 = slack / (2.0 * h0);
        return Ok(PiValues { pi0, pi1: 0.0, residuals: (eq1(pi0, 0.0), None) });
    }
    let alpha = alpha.ok_or_else(|| Error::InvalidArgument("primitive law: pi needs alpha".into()))?;
    let pi0 = slack / (h0 * (1.0 + alpha));
    let pi1 = slack * (alpha - 1.0 - h1 / h0) / (h0 * (1.0 + alpha));
    let eq2 = (pi0 * (h0 + h1 - h0 * alpha) + pi1 * h0).abs();
    Ok(PiValues { pi0, pi1, residuals: (eq1(pi0, pi1), Some(eq2)) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteEstimate {
    pub route: Route,
    pub phi0: f64,
    pub phi1: f64,
    /// Order used by the limit route.
    pub n_used: Option<usize>,
    /// Convergence diagnostic of the limit route.
    pub delta: Option<f64>,
    /// Why the route was not evaluated (its values are then the regime's zeros).
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub u_max: usize,
    pub routes: Vec<Route>,
    pub limit_n: usize,
    pub tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            u_max: 100,
            routes: Route::ALL.to_vec(),
            limit_n: DEFAULT_LIMIT_N,
            tol: roots::DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalSolution {
    pub regime: Regime,
    /// Route of record: the closed form when requested, else the first route.
    pub method: Route,
    pub phi0: f64,
    pub phi1: f64,
    pub phi_table: Vec<f64>,
    pub pi0: f64,
    pub pi1: f64,
    pub pi_residuals: (f64, Option<f64>),
    /// `xi_u = phi(u + 1)`, `u = 0..u_max`.
    pub xi: Vec<f64>,
    pub routes: Vec<RouteEstimate>,
    /// `max_u |xi_u - (x_{u+1} phi(0) + y_{u+1} phi(1))|`.
    pub xi_consistency: Option<f64>,
    /// Largest pairwise gap between the routes' `phi(0)`, `phi(1)`.
    pub route_spread: f64,
    pub alpha: Option<f64>,
    /// Precision of the dyadic `alpha` used for the table.
    pub alpha_bits: Option<u32>,
}

/// All requested routes, the `phi` table and `pi`.
pub fn solve(dist: &ClaimDistribution, cfg: &SolveConfig) -> Result<SurvivalSolution> {
    if cfg.routes.is_empty() {
        return Err(Error::InvalidArgument("no route requested".into()));
    }
    let regime = Regime::of(dist);
    let primitive = dist.is_primitive();
    let u_max = cfg.u_max.max(1);

    let profile: Option<RootProfile> = if primitive {
        Some(roots::root_profile(dist, cfg.tol)?)
    } else {
        None
    };
    let alpha_f = profile.as_ref().map(|p| p.alpha);
    let bits = alpha_f.map(|a| roots::working_bits(a, u_max.max(cfg.limit_n) + 2, 128));
    let alpha_exact = match (&profile, bits) {
        (Some(p), Some(b)) if regime.survivable() => Some(roots::refine_alpha_exact(dist, p.alpha, b)?),
        _ => None,
    };

    let (cf0, cf1) = match &alpha_exact {
        Some(a) => initial_values_closed_form(dist, Some(a))?,
        None => initial_values_closed_form::<Rational>(dist, None)?,
    };

    let mut routes = Vec::new();
    let mut xi_exact: Option<PowerSeries<Rational>> = None;
    for &route in &cfg.routes {
        let est = match route {
            Route::ClosedForm => RouteEstimate {
                route,
                phi0: to_f64(&cf0),
                phi1: to_f64(&cf1),
                n_used: None,
                delta: None,
                skipped: None,
            },
            Route::LimitRatio if regime.survivable() => {
                let table = build_exact(dist, cfg.limit_n + 2)?;
                let l = initial_values_limit(&table, cfg.limit_n)?;
                RouteEstimate {
                    route,
                    phi0: l.phi0,
                    phi1: l.phi1,
                    n_used: Some(l.n),
                    delta: Some(l.delta),
                    skipped: None,
                }
            }
            Route::XiSeries if primitive => {
                let alpha = alpha_exact.clone().unwrap_or_else(Rational::one);
                let xi = xi_series(dist, &alpha, u_max)?;
                // Survival recursion at u = 0: phi(0) = h0 phi(2) + h1 phi(1).
                let h = dist.pmf_prefix(1);
                let phi1 = xi.coeff(0).clone();
                let phi0 = &h[0] * xi.coeff(1) + &h[1] * &phi1;
                let est = RouteEstimate {
                    route,
                    phi0: to_f64(&phi0),
                    phi1: to_f64(&phi1),
                    n_used: None,
                    delta: None,
                    skipped: None,
                };
                xi_exact = Some(xi);
                est
            }
            _ => RouteEstimate {
                route,
                phi0: 0.0,
                phi1: 0.0,
                n_used: None,
                delta: None,
                skipped: Some(if route == Route::LimitRatio {
                    format!("regime {regime:?}: the limit route needs E Z < 2").to_lowercase()
                } else {
                    "law on the even lattice: use the half-process table".into()
                }),
            },
        };
        routes.push(est);
    }

    let record = routes
        .iter()
        .find(|r| r.route == Route::ClosedForm)
        .unwrap_or(&routes[0])
        .clone();

    let table_exact = phi_table(dist, &cf0, &cf1, u_max)?;
    let phi_table: Vec<f64> = table_exact.iter().map(to_f64).collect();

    let xi: Vec<f64> = match &xi_exact {
        Some(x) => x.coeffs()[..u_max].iter().map(to_f64).collect(),
        None => phi_table[1..].to_vec(),
    };
    let xi_consistency = xi_exact.as_ref().map(|x| {
        (0..u_max.min(x.order() + 1))
            .map(|u| to_f64(&(x.coeff(u) - &table_exact[u + 1])).abs())
            .fold(0.0, f64::max)
    });

    let live: Vec<&RouteEstimate> = routes.iter().filter(|r| r.skipped.is_none()).collect();
    let mut route_spread = 0.0f64;
    for (i, a) in live.iter().enumerate() {
        for b in &live[i + 1..] {
            route_spread = route_spread.max((a.phi0 - b.phi0).abs()).max((a.phi1 - b.phi1).abs());
        }
    }

    let pi = pi_values(dist, alpha_f)?;
    Ok(SurvivalSolution {
        regime,
        method: record.route,
        phi0: record.phi0,
        phi1: record.phi1,
        phi_table,
        pi0: pi.pi0,
        pi1: pi.pi1,
        pi_residuals: pi.residuals,
        xi,
        routes,
        xi_consistency,
        route_spread,
        alpha: alpha_f,
        alpha_bits: alpha_exact.as_ref().and(bits),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn geom(n: i64, d: i64) -> ClaimDistribution {
        ClaimDistribution::geometric(rat(n, d)).unwrap()
    }

    fn four_point() -> ClaimDistribution {
        ClaimDistribution::tabulated(vec![rat(2, 5), rat(1, 5), rat(1, 5), rat(1, 5)]).unwrap()
    }

    const GOLDEN: f64 = 0.618_033_988_749_894_8;

    #[test]
    fn closed_form_examples() {
        let b = ClaimDistribution::bernoulli(rat(1, 3)).unwrap();
        let alpha = roots::find_alpha(&b, 1e-15).unwrap();
        let (p0, p1) = initial_values_closed_form(&b, Some(&alpha)).unwrap();
        assert!((p0 - 1.0).abs() < 1e-13 && (p1 - 1.0).abs() < 1e-13);

        let e = ClaimDistribution::tabulated(vec![rat(1, 2), int(0), rat(1, 2)]).unwrap();
        let (p0, p1) = initial_values_closed_form::<Rational>(&e, None).unwrap();
        assert_eq!((p0, p1), (rat(1, 2), int(1)));

        let g = geom(1, 2);
        let alpha = roots::find_alpha(&g, 1e-15).unwrap();
        let (p0, p1) = initial_values_closed_form(&g, Some(&alpha)).unwrap();
        assert!((p0 - GOLDEN).abs() < 1e-12);
        assert!((p1 - 2.0 / (1.0 + (1.0 + 5f64.sqrt()) / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn limit_route_converges() {
        let b = ClaimDistribution::bernoulli(rat(1, 2)).unwrap();
        let l = initial_values_limit(&build_exact(&b, 12).unwrap(), 10).unwrap();
        assert!((l.phi0 - 1.0).abs() < 1e-9 && (l.phi1 - 1.0).abs() < 1e-9);

        let l = initial_values_limit(&build_exact(&geom(1, 2), 42).unwrap(), 40).unwrap();
        assert!((l.phi0 - GOLDEN).abs() < 1e-6);
        assert!((l.phi1 - 0.763_932).abs() < 1e-6);
        assert!(l.delta < 1e-6);

        let t = build_exact(&geom(1, 3), 12).unwrap();
        assert!(initial_values_limit(&t, 10).is_err());
    }

    #[test]
    fn xi_examples() {
        let b = ClaimDistribution::bernoulli(rat(1, 4)).unwrap();
        let xi = xi_series(&b, &rat(4, 3), 10).unwrap();
        assert!(xi.coeffs().iter().all(|c| *c == int(1)));
        let zero = xi_series(&geom(1, 4), &int(2), 10).unwrap();
        assert!(zero.coeffs().iter().all(Zero::is_zero));
        let e = ClaimDistribution::tabulated(vec![rat(1, 2), int(0), rat(1, 2)]).unwrap();
        assert_eq!(xi_series(&e, &int(2), 3), Err(Error::Imprimitive));
    }

    #[test]
    fn geometric_half_solution() {
        let s = solve(&geom(1, 2), &SolveConfig { u_max: 200, ..Default::default() }).unwrap();
        assert_eq!(s.regime, Regime::Survivable);
        assert_eq!(s.method, Route::ClosedForm);
        assert!(s.route_spread < 1e-8, "{}", s.route_spread);
        assert!(s.xi_consistency.unwrap() < 1e-10);
        assert!((s.phi_table[2] - 0.854_102).abs() < 1e-5);
        assert!((s.pi0 - 0.763_932_0).abs() < 1e-7);
        assert!((s.pi1 - 0.090_169_9).abs() < 1e-7);
        assert!((s.phi_table[2] - s.phi_table[1] - s.pi1).abs() < 1e-12);
        assert!(s.pi_residuals.0 < 1e-12 && s.pi_residuals.1.unwrap() < 1e-12);
        assert!(s.phi_table[200] > 1.0 - 1e-3);
        assert!(s.phi_table.windows(2).all(|w| 0.0 <= w[0] && w[0] <= w[1] && w[1] <= 1.0));
    }

    #[test]
    fn four_point_routes_agree() {
        let s = solve(&four_point(), &SolveConfig::default()).unwrap();
        assert!(s.route_spread < 1e-8, "{:?}", s.routes);
        assert!(s.phi_table.windows(2).all(|w| w[0] <= w[1] + 1e-15 && w[1] <= 1.0 + 1e-15));
    }

    #[test]
    fn imprimitive_table_uses_half_process() {
        let e = ClaimDistribution::tabulated(vec![rat(1, 2), int(0), rat(1, 2)]).unwrap();
        let s = solve(&e, &SolveConfig { u_max: 20, ..Default::default() }).unwrap();
        assert_eq!((s.phi0, s.phi1), (0.5, 1.0));
        assert!(s.phi_table.iter().skip(1).all(|v| *v == 1.0));
        assert!(s.routes[2].skipped.is_some());
        // The x/y representation gives the same table.
        let t = build_exact(&e, 20).unwrap();
        let half = rat(1, 2);
        let table = phi_table(&e, &half, &int(1), 20).unwrap();
        for u in 0..=20 {
            assert_eq!(table[u], &t.x()[u] * &half + &t.y()[u]);
        }
        let even = ClaimDistribution::even_lattice(geom(2, 3)).unwrap();
        let s = solve(&even, &SolveConfig { u_max: 30, ..Default::default() }).unwrap();
        let t = build_exact(&even, 30).unwrap();
        for u in 0..=30 {
            let via_xy = to_f64(&t.x()[u]) * s.phi0 + to_f64(&t.y()[u]) * s.phi1;
            assert!((via_xy - s.phi_table[u]).abs() < 1e-9, "u={u}");
        }
    }

    #[test]
    fn degenerate_regimes_are_zero() {
        for d in [geom(1, 4), geom(1, 3)] {
            let s = solve(&d, &SolveConfig::default()).unwrap();
            assert_ne!(s.regime, Regime::Survivable);
            assert!(s.phi_table.iter().chain(&s.xi).all(|v| *v == 0.0));
            assert!(s.routes.iter().all(|r| r.phi0 == 0.0 && r.phi1 == 0.0));
            assert_eq!((s.pi0, s.pi1), (0.0, 0.0));
        }
    }

    #[test]
    fn route_names_parse() {
        for r in Route::ALL {
            assert_eq!(r.name().parse::<Route>().unwrap(), r);
        }
        assert!("newton".parse::<Route>().is_err());
    }
}
