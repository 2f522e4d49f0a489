//! `ruinkit verify`: every applicable cross-check on a matrix of claim laws.
//!
//! Fixtures run concurrently; results are keyed by fixture name, so the
//! report does not depend on scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use ruinkit_core::asymptotics::{compute_coefficients, predict_dn, ratio_estimate};
use ruinkit_core::oracle::{finite_horizon_dp, mc_estimate};
use ruinkit_core::recurrence::{build_exact, check_conjecture, identity_violations};
use ruinkit_core::roots::{root_profile, DEFAULT_TOL};
use ruinkit_core::survival::{self, Regime, SolveConfig};
use ruinkit_core::{ClaimDistribution, DpConfig, McConfig, ScalarMode, Verdict};
use serde::Serialize;
use serde_json::json;

use crate::commands::ROUTE_TOLERANCE;
use crate::report::{RunReport, Status};
use crate::{load_dist, VerifyArgs};

/// The default fixture laws.
pub const FIXTURES: [&str; 14] = [
    "bernoulli(1/5)",
    "bernoulli(1/3)",
    "bernoulli(1/2)",
    "bernoulli(4/5)",
    "geometric(1/5)",
    "geometric(1/3)",
    "geometric(1/2)",
    "geometric(2/3)",
    "pmf(1/2,0,1/2)",
    "pmf(1/3,1/3,1/3)",
    "pmf(2/5,1/5,1/5,1/5)",
    "even(geometric(2/3))",
    "geometric(1/4)",
    "pmf(1/4,1/4,1/4,1/4)",
];

const IDENTITY_HORIZON: usize = 120;
const RATIO_INDEX: usize = 60;
/// With a double zero at 1 the ratio carries a `(n + 2) / n` factor and its
/// next correction is `O(1/n^2)`, so it is checked further out.
const CRITICAL_RATIO_INDEX: usize = 200;
const RATIO_TOLERANCE: f64 = 1e-3;
const ROOT_TOLERANCE: f64 = 1e-12;
const PI_TOLERANCE: f64 = 1e-12;
const DP_HORIZON: usize = 1500;
const DP_TOLERANCE: f64 = 1e-7;
const DP_POINTS: [usize; 3] = [0, 1, 5];
const MC_HORIZON: usize = 40;
const MC_SURPLUS: usize = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub passed: bool,
    /// The measured discrepancy or quantity.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: Option<String>,
}

impl Check {
    fn within(value: f64, tolerance: f64) -> Check {
        Check { passed: value <= tolerance, value: Some(value), tolerance: Some(tolerance), detail: None }
    }

    fn flag(passed: bool, detail: impl Into<String>) -> Check {
        Check { passed, value: None, tolerance: None, detail: Some(detail.into()) }
    }

    fn error(e: impl std::fmt::Display) -> Check {
        Check::flag(false, format!("error: {e}"))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureOutcome {
    pub regime: Regime,
    pub primitive: bool,
    pub checks: BTreeMap<&'static str, Check>,
    pub passed: bool,
}

pub struct Settings {
    pub conjecture_n: usize,
    pub trials: u64,
    pub seed: u64,
}

/// Runs every check that applies to `dist`.
pub fn check_fixture(dist: &ClaimDistribution, s: &Settings) -> FixtureOutcome {
    let mut checks = BTreeMap::new();
    let regime = Regime::of(dist);
    let primitive = dist.is_primitive();

    checks.insert(
        "identities",
        match build_exact(dist, IDENTITY_HORIZON) {
            Ok(t) => {
                let v = identity_violations(&t);
                Check::flag(v.is_empty(), v.first().cloned().unwrap_or_else(|| format!("exact through n = {IDENTITY_HORIZON}")))
            }
            Err(e) => Check::error(e),
        },
    );

    checks.insert(
        "conjecture",
        match check_conjecture(dist, s.conjecture_n, ScalarMode::Exact) {
            Ok(r) => match r.verdict {
                Verdict::HoldsUpTo(n) => Check::flag(true, format!("holds up to {n}")),
                Verdict::ViolatedAt(n) => Check::flag(false, format!("violated at {n}")),
            },
            Err(e) => Check::error(e),
        },
    );

    let profile = if primitive { Some(root_profile(dist, DEFAULT_TOL)) } else { None };
    match &profile {
        Some(Ok(p)) => {
            let residual = p.alpha_residual.max(p.beta_residual.unwrap_or(0.0));
            let mut c = Check::within(residual, ROOT_TOLERANCE);
            if !p.anomalies.is_empty() {
                c.passed = false;
                c.detail = Some(p.anomalies.join("; "));
            }
            checks.insert("root_residuals", c);
            checks.insert("asymptotic_ratio", ratio_check(dist, p));
        }
        Some(Err(e)) => {
            checks.insert("root_residuals", Check::error(e));
        }
        None => {}
    }

    match survival::solve(dist, &SolveConfig { u_max: 20, ..Default::default() }) {
        Ok(sol) if regime.survivable() => {
            checks.insert("route_agreement", Check::within(sol.route_spread, ROUTE_TOLERANCE));
            if let Some(xi) = sol.xi_consistency {
                checks.insert("xi_consistency", Check::within(xi, ROUTE_TOLERANCE));
            }
            let pi = sol.pi_residuals.0.max(sol.pi_residuals.1.unwrap_or(0.0));
            checks.insert("pi_residuals", Check::within(pi, PI_TOLERANCE));
            let monotone = sol.phi_table.windows(2).all(|w| w[0] <= w[1])
                && sol.phi_table.iter().all(|p| (0.0..=1.0).contains(p));
            checks.insert("phi_monotone_bounded", Check::flag(monotone, "0 <= phi(u) <= phi(u+1) <= 1"));
            checks.insert("dp_oracle", dp_check(dist, &sol.phi_table));
        }
        Ok(sol) => {
            let zero = sol.phi_table.iter().chain(&sol.xi).all(|v| *v == 0.0)
                && (sol.pi0, sol.pi1) == (0.0, 0.0)
                && sol.routes.iter().all(|r| (r.phi0, r.phi1) == (0.0, 0.0));
            checks.insert("zero_survival", Check::flag(zero, "E Z >= 2: every route and pi vanish"));
            checks.insert("dp_decreasing", dp_decreasing(dist));
        }
        Err(e) => {
            checks.insert("route_agreement", Check::error(e));
        }
    }

    checks.insert("mc_vs_dp", mc_check(dist, s));

    let passed = checks.values().all(|c| c.passed);
    FixtureOutcome { regime, primitive, checks, passed }
}

fn ratio_check(dist: &ClaimDistribution, p: &ruinkit_core::RootProfile) -> Check {
    let run = || -> ruinkit_core::Result<Check> {
        let c = compute_coefficients(dist, p)?;
        let n = if c.r == 2 { CRITICAL_RATIO_INDEX } else { RATIO_INDEX };
        let table = build_exact(dist, n + 3)?;
        let predicted = predict_dn(&c, n + 2) / predict_dn(&c, n);
        let ratio = ratio_estimate(&table, n)?;
        let mut check = Check::within((ratio - predicted).abs(), RATIO_TOLERANCE);
        check.detail = Some(format!("D_{}/D_{n} = {ratio} vs leading term {predicted}", n + 2));
        Ok(check)
    };
    run().unwrap_or_else(Check::error)
}

fn dp_at(dist: &ClaimDistribution, u: usize, horizon: usize) -> ruinkit_core::Result<f64> {
    Ok(finite_horizon_dp(dist, u, &DpConfig { horizon, surplus_cap: None })?.phi)
}

/// `phi_N(u) >= phi(u)` and the gap is small at the oracle horizon.
fn dp_check(dist: &ClaimDistribution, phi: &[f64]) -> Check {
    let mut worst = 0.0f64;
    for &u in &DP_POINTS {
        match dp_at(dist, u, DP_HORIZON) {
            Ok(v) => {
                let gap = v - phi[u];
                if gap < -1e-10 {
                    return Check::flag(false, format!("phi_N({u}) = {v} is below phi({u}) = {}", phi[u]));
                }
                worst = worst.max(gap.abs());
            }
            Err(e) => return Check::error(e),
        }
    }
    Check::within(worst, DP_TOLERANCE)
}

fn dp_decreasing(dist: &ClaimDistribution) -> Check {
    match (dp_at(dist, 0, 250), dp_at(dist, 0, 1000)) {
        (Ok(a), Ok(b)) => Check::flag(b <= a + 1e-15 && b >= 0.0, format!("phi_250(0) = {a:.6e}, phi_1000(0) = {b:.6e}")),
        (Err(e), _) | (_, Err(e)) => Check::error(e),
    }
}

fn mc_check(dist: &ClaimDistribution, s: &Settings) -> Check {
    let cfg = McConfig { trials: s.trials, horizon: MC_HORIZON, seed: s.seed };
    match (mc_estimate(dist, MC_SURPLUS, &cfg), dp_at(dist, MC_SURPLUS, MC_HORIZON)) {
        (Ok(m), Ok(exact)) => {
            // The empirical half-width is 0 when no trial survives; the
            // oracle's own binomial spread keeps the bound meaningful.
            let oracle_hw = 1.96 * (exact * (1.0 - exact) / s.trials as f64).sqrt();
            let bound = 3.0 * m.half_width.max(oracle_hw) + 1e-12;
            let mut c = Check::within((m.estimate - exact).abs(), bound);
            c.detail = Some(format!("mc {} vs dp {exact} over N = {MC_HORIZON}", m.estimate));
            c
        }
        (Err(e), _) | (_, Err(e)) => Check::error(e),
    }
}

pub fn run(args: &VerifyArgs) -> Result<RunReport, String> {
    let names: Vec<String> = if args.dist.is_empty() {
        FIXTURES.iter().map(|s| s.to_string()).collect()
    } else {
        args.dist.clone()
    };
    let dists = names
        .iter()
        .map(|n| load_dist(n).map(|d| (d.to_string(), d)))
        .collect::<Result<Vec<_>, _>>()?;
    let settings = Settings { conjecture_n: args.n, trials: args.trials, seed: args.seed };
    let outcomes: BTreeMap<String, FixtureOutcome> = dists
        .par_iter()
        .map(|(name, d)| (name.clone(), check_fixture(d, &settings)))
        .collect();

    let total: usize = outcomes.values().map(|o| o.checks.len()).sum();
    let failed: Vec<String> = outcomes
        .iter()
        .flat_map(|(name, o)| {
            o.checks.iter().filter(|(_, c)| !c.passed).map(move |(k, _)| format!("{name}:{k}"))
        })
        .collect();

    let fixture_names: Vec<&String> = outcomes.keys().collect();
    let mut r = RunReport::new(
        json!({
            "subcommand": "verify",
            "fixtures": fixture_names,
            "n": args.n,
            "trials": args.trials,
            "seed": args.seed,
        }),
        None,
        vec!["exact", "float"],
    );
    if !failed.is_empty() {
        r.status = Status::CrossCheckFailed;
        r.note = Some(format!("{} of {total} checks failed: {}", failed.len(), failed.join(", ")));
    }
    let mut rows = Vec::new();
    for (name, o) in &outcomes {
        for (check, c) in &o.checks {
            let f = |v: Option<f64>| v.map(ruinkit_core::scalar::format_f64).unwrap_or_default();
            rows.push(vec![
                name.clone(),
                check.to_string(),
                c.passed.to_string(),
                f(c.value),
                f(c.tolerance),
            ]);
        }
    }
    r.rows = Some((vec!["fixture", "check", "passed", "value", "tolerance"], rows));
    r.results = json!({
        "fixtures": outcomes,
        "summary": {"fixtures": outcomes.len(), "checks": total, "failed": failed},
    });
    r.diagnostics = json!({
        "identity_horizon": IDENTITY_HORIZON,
        "ratio_index": RATIO_INDEX,
        "ratio_tolerance": RATIO_TOLERANCE,
        "root_tolerance": ROOT_TOLERANCE,
        "route_tolerance": ROUTE_TOLERANCE,
        "pi_tolerance": PI_TOLERANCE,
        "dp_horizon": DP_HORIZON,
        "dp_tolerance": DP_TOLERANCE,
        "mc_horizon": MC_HORIZON,
    });
    Ok(r)
}
