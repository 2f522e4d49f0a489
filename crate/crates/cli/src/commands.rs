use ruinkit_core::asymptotics::{
    compute_coefficients, exact_coefficients, limiting_ratio, ratio_estimate, residual_decay,
    residual_profile, verify_sign_monotonicity,
};
use ruinkit_core::oracle::{finite_horizon_dp, mc_estimate};
use ruinkit_core::recurrence::{build_exact, build_table, check_conjecture, identity_violations, AnyTable};
use ruinkit_core::roots::{root_profile, working_bits};
use ruinkit_core::scalar::{format_f64, format_rational};
use ruinkit_core::survival::{self, Regime, SolveConfig};
use ruinkit_core::{ClaimDistribution, DpConfig, McConfig, ScalarMode, Verdict};
use serde_json::{json, Value};

use crate::report::{RunReport, Status};
use crate::{load_dist, verify, Command};

/// Residuals of the asymptotic expansion below this count as converged.
const RESIDUAL_NOISE_FLOOR: f64 = 1e-40;
/// Largest tolerated pairwise gap between the survival routes.
pub const ROUTE_TOLERANCE: f64 = 1e-8;

type Outcome = Result<RunReport, String>;

pub fn execute(cmd: &Command) -> Outcome {
    match cmd {
        Command::Table(a) => table(&load_dist(&a.dist.dist)?, a.n, a.mode),
        Command::Conjecture(a) => conjecture(&load_dist(&a.dist.dist)?, a.n, a.mode),
        Command::Roots(a) => roots(&load_dist(&a.dist.dist)?, a.tol),
        Command::Asympt(a) => asympt(&load_dist(&a.dist.dist)?, a.n, a.tol),
        Command::Solve(a) => {
            let cfg = SolveConfig {
                u_max: a.u_max,
                routes: a.route.routes(),
                limit_n: a.n,
                tol: a.tol,
            };
            solve(&load_dist(&a.dist.dist)?, &cfg)
        }
        Command::Dp(a) => dp(&load_dist(&a.dist.dist)?, a.u, a.horizon, a.cap),
        Command::Simulate(a) => {
            let cfg = McConfig { trials: a.trials, horizon: a.horizon, seed: a.seed };
            simulate(&load_dist(&a.dist.dist)?, a.u, &cfg)
        }
        Command::Verify(a) => verify::run(a),
    }
}

fn err(e: ruinkit_core::Error) -> String {
    e.to_string()
}

fn rationals(v: &[ruinkit_core::Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn table(dist: &ClaimDistribution, n: usize, mode: ScalarMode) -> Outcome {
    let mut r = RunReport::new(
        json!({"subcommand": "table", "n": n, "mode": mode}),
        Some(dist),
        vec![mode_name(mode)],
    );
    // One extra order so D_n is available for every reported n.
    let t = build_table(dist, n + 1, mode).map_err(err)?;
    let (x, y, d): (Vec<String>, Vec<String>, Vec<String>) = match &t {
        AnyTable::Exact(t) => {
            let violations = identity_violations(t);
            if !violations.is_empty() {
                r.status = Status::CrossCheckFailed;
                r.note = Some(format!("identity check failed: {}", violations[0]));
            }
            r.diagnostics = json!({"identity_violations": violations, "dual_discrepancy": 0.0});
            (rationals(&t.x()[..=n]), rationals(&t.y()[..=n]), rationals(&t.d()[..=n]))
        }
        AnyTable::Float(t) => {
            r.diagnostics = json!({
                "dual_discrepancy": t.dual_discrepancy(),
                "scale_log2": t.scale_log2(),
                "note": "x, y are mantissas scaled by 2^scale_log2, d by 2^(2 scale_log2)",
            });
            let f = |v: &[f64]| v[..=n].iter().map(|x| format_f64(*x)).collect::<Vec<_>>();
            (f(t.x()), f(t.y()), f(t.d()))
        }
    };
    r.rows = Some((
        vec!["n", "x", "y", "d"],
        (0..=n)
            .map(|i| vec![i.to_string(), x[i].clone(), y[i].clone(), d[i].clone()])
            .collect(),
    ));
    r.results = json!({"horizon": n, "x": x, "y": y, "d": d});
    Ok(r)
}

fn mode_name(mode: ScalarMode) -> &'static str {
    match mode {
        ScalarMode::Exact => "exact",
        ScalarMode::Float => "float",
    }
}

fn conjecture(dist: &ClaimDistribution, n: usize, mode: ScalarMode) -> Outcome {
    let mut r = RunReport::new(
        json!({"subcommand": "conjecture", "n": n, "mode": mode}),
        Some(dist),
        vec![mode_name(mode)],
    );
    let report = check_conjecture(dist, n, mode).map_err(err)?;
    if let Verdict::ViolatedAt(k) = report.verdict {
        r.status = Status::Violation;
        r.note = Some(format!("conjecture violated at n = {k}"));
    }
    // The empirical n0 needs exact determinants and at least 40 of them.
    let monotonicity = if mode == ScalarMode::Exact && n >= 40 {
        let coeffs = root_profile(dist, ruinkit_core::roots::DEFAULT_TOL)
            .and_then(|p| compute_coefficients(dist, &p))
            .ok();
        let table = build_exact(dist, n).map_err(err)?;
        serde_json::to_value(verify_sign_monotonicity(&table, coeffs.as_ref()).map_err(err)?).unwrap()
    } else {
        Value::Null
    };
    r.results = serde_json::to_value(&report).unwrap();
    r.diagnostics = json!({"sign_monotonicity": monotonicity});
    Ok(r)
}

fn roots(dist: &ClaimDistribution, tol: f64) -> Outcome {
    let mut r = RunReport::new(json!({"subcommand": "roots", "tol": tol}), Some(dist), vec!["float"]);
    let p = root_profile(dist, tol).map_err(err)?;
    if !p.anomalies.is_empty() {
        r.status = Status::CrossCheckFailed;
        r.note = Some(format!("root anomaly: {}", p.anomalies[0]));
    }
    r.results = json!({
        "alpha": p.alpha,
        "beta": p.beta,
        "r": p.r,
        "residuals": {"alpha": p.alpha_residual, "beta": p.beta_residual},
    });
    r.diagnostics = json!({
        "tol": p.tol,
        "bracket_width": p.bracket_width,
        "negative_sign_changes": p.negative_sign_changes,
        "positive_sign_changes": p.positive_sign_changes,
        "deflated": p.deflated,
        "anomalies": p.anomalies,
    });
    Ok(r)
}

fn asympt(dist: &ClaimDistribution, n: usize, tol: f64) -> Outcome {
    let mut r = RunReport::new(
        json!({"subcommand": "asympt", "n": n, "tol": tol}),
        Some(dist),
        vec!["exact", "float"],
    );
    let profile = root_profile(dist, tol).map_err(err)?;
    let c = compute_coefficients(dist, &profile).map_err(err)?;
    let horizon = (n + 3).max(41);
    let table = build_exact(dist, horizon).map_err(err)?;
    let ratio = ratio_estimate(&table, n).map_err(err)?;
    let limit = limiting_ratio(&c);
    let signs = verify_sign_monotonicity(&table, Some(&c)).map_err(err)?;
    let bits = working_bits(profile.alpha, horizon, 64);
    let exact = exact_coefficients(dist, &profile, bits).map_err(err)?;
    let decay = residual_decay(&residual_profile(&table, &exact), RESIDUAL_NOISE_FLOOR);
    r.results = json!({
        "a": c.a,
        "b": c.b,
        "c1": c.c1,
        "c2": c.c2,
        "r": c.r,
        "alpha": c.alpha,
        "beta": c.beta,
        "n0": signs.n0,
        "ratio_estimate": ratio,
        "ratio_index": n,
        "limiting_ratio": limit,
    });
    r.diagnostics = json!({
        "tol": tol,
        "ratio_error": (ratio - limit).abs(),
        "sign_monotonicity": signs,
        "residual_decay": decay,
        "working_bits": bits,
    });
    Ok(r)
}

fn solve(dist: &ClaimDistribution, cfg: &SolveConfig) -> Outcome {
    let routes: Vec<&str> = cfg.routes.iter().map(|r| r.name()).collect();
    let mut r = RunReport::new(
        json!({
            "subcommand": "solve",
            "u_max": cfg.u_max,
            "routes": routes,
            "limit_n": cfg.limit_n,
            "tol": cfg.tol,
        }),
        Some(dist),
        vec!["exact", "float"],
    );
    let s = survival::solve(dist, cfg).map_err(err)?;
    if s.regime == Regime::Survivable {
        let worst = s.route_spread.max(s.xi_consistency.unwrap_or(0.0));
        if worst > ROUTE_TOLERANCE {
            r.status = Status::CrossCheckFailed;
            let mut note = format!("routes disagree by {} (tolerance {ROUTE_TOLERANCE:e})", format_f64(worst));
            if let Some(delta) = s.routes.iter().find_map(|e| e.delta).filter(|d| *d > 1e-10) {
                note.push_str(&format!(
                    "; the limit route has not converged at n = {} (delta {}), try a larger --n",
                    cfg.limit_n,
                    format_f64(delta)
                ));
            }
            r.note = Some(note);
        }
    }
    r.rows = Some((
        vec!["u", "phi"],
        s.phi_table.iter().enumerate().map(|(u, p)| vec![u.to_string(), format_f64(*p)]).collect(),
    ));
    r.results = json!({
        "regime": s.regime,
        "method": s.method,
        "phi0": s.phi0,
        "phi1": s.phi1,
        "pi0": s.pi0,
        "pi1": s.pi1,
        "phi_table": s.phi_table,
        "route_diagnostics": {
            "routes": s.routes,
            "route_spread": s.route_spread,
            "xi_consistency": s.xi_consistency,
            "pi_residuals": s.pi_residuals,
        },
    });
    r.diagnostics = json!({
        "route_tolerance": ROUTE_TOLERANCE,
        "alpha": s.alpha,
        "alpha_bits": s.alpha_bits,
        "truncation_cap": dist.truncation_cap(),
    });
    Ok(r)
}

fn dp(dist: &ClaimDistribution, u: usize, horizon: usize, cap: Option<usize>) -> Outcome {
    let cfg = DpConfig { horizon, surplus_cap: cap };
    let mut r = RunReport::new(
        json!({"subcommand": "dp", "u": u, "horizon": horizon, "cap": cap}),
        Some(dist),
        vec!["float"],
    );
    let d = finite_horizon_dp(dist, u, &cfg).map_err(err)?;
    r.results = json!({"phi": d.phi, "u": d.u, "horizon": d.horizon});
    r.diagnostics = json!({
        "surplus_cap": d.surplus_cap,
        "claim_cap": d.claim_cap,
        "truncation_bound": d.truncation_bound,
        "cap_bound": d.cap_bound,
    });
    Ok(r)
}

fn simulate(dist: &ClaimDistribution, u: usize, cfg: &McConfig) -> Outcome {
    let mut r = RunReport::new(
        json!({
            "subcommand": "simulate",
            "u": u,
            "horizon": cfg.horizon,
            "trials": cfg.trials,
            "seed": cfg.seed,
        }),
        Some(dist),
        vec!["float"],
    );
    let m = mc_estimate(dist, u, cfg).map_err(err)?;
    r.results = json!({
        "estimate": m.estimate,
        "half_width": m.half_width,
        "survivors": m.survivors,
        "trials": m.trials,
    });
    r.diagnostics = json!({
        "confidence": 0.95,
        "rng": "chacha8, one stream per trial",
        "claim_cap": dist.truncation_cap(),
    });
    Ok(r)
}
