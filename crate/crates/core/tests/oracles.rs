//! Cross-checks of the analytic results against the finite-horizon oracles.

use ruinkit_core::oracle::{finite_horizon_dp, mc_estimate, DpConfig, McConfig};
use ruinkit_core::scalar::{int, rat};
use ruinkit_core::survival::{self, SolveConfig};
use ruinkit_core::ClaimDistribution;

fn dp(d: &ClaimDistribution, u: usize, n: usize) -> f64 {
    finite_horizon_dp(d, u, &DpConfig { horizon: n, surplus_cap: None }).unwrap().phi
}

#[test]
fn geometric_half_initial_values_against_dp() {
    let d = ClaimDistribution::geometric(rat(1, 2)).unwrap();
    let s = survival::solve(&d, &SolveConfig { u_max: 10, ..Default::default() }).unwrap();
    for u in 0..=10 {
        let v = dp(&d, u, 2000);
        assert!((v - s.phi_table[u]).abs() < 1e-10, "u={u}: {v} vs {}", s.phi_table[u]);
    }
    // pi_1 = phi(2) - phi(1) from the oracle.
    assert!(((dp(&d, 2, 2000) - dp(&d, 1, 2000)) - s.pi1).abs() < 1e-10);
}

#[test]
fn imprimitive_law_against_dp() {
    let d = ClaimDistribution::tabulated(vec![rat(1, 2), int(0), rat(1, 2)]).unwrap();
    let s = survival::solve(&d, &SolveConfig { u_max: 6, ..Default::default() }).unwrap();
    assert_eq!((s.phi0, s.phi1), (0.5, 1.0));
    // The half process has income 1 and mean claim 1/2: phi_N converges fast.
    let v = dp(&d, 0, 10_000);
    assert!((v - 0.5).abs() < 1e-6, "{v}");
    let e = ClaimDistribution::even_lattice(ClaimDistribution::geometric(rat(2, 3)).unwrap()).unwrap();
    let s = survival::solve(&e, &SolveConfig { u_max: 8, ..Default::default() }).unwrap();
    for u in 0..=8 {
        assert!((dp(&e, u, 3000) - s.phi_table[u]).abs() < 1e-9, "u={u}");
    }
}

#[test]
fn four_point_law_against_dp() {
    let d = ClaimDistribution::tabulated(vec![rat(2, 5), rat(1, 5), rat(1, 5), rat(1, 5)]).unwrap();
    let s = survival::solve(&d, &SolveConfig { u_max: 12, ..Default::default() }).unwrap();
    for u in [0, 1, 5, 12] {
        assert!((dp(&d, u, 3000) - s.phi_table[u]).abs() < 1e-9, "u={u}");
    }
}

#[test]
fn large_surplus_survives() {
    let d = ClaimDistribution::geometric(rat(1, 2)).unwrap();
    assert!(dp(&d, 200, 500) > 1.0 - 1e-9);
}

#[test]
fn monte_carlo_agrees_with_dp() {
    for (d, u, n) in [
        (ClaimDistribution::geometric(rat(1, 2)).unwrap(), 0, 2),
        (ClaimDistribution::geometric(rat(1, 2)).unwrap(), 3, 40),
        (ClaimDistribution::tabulated(vec![rat(2, 5), rat(1, 5), rat(1, 5), rat(1, 5)]).unwrap(), 1, 40),
        (ClaimDistribution::geometric(rat(1, 4)).unwrap(), 5, 30),
    ] {
        let mc = mc_estimate(&d, u, &McConfig { trials: 20_000, horizon: n, seed: 2024 }).unwrap();
        let exact = dp(&d, u, n);
        assert!(
            (mc.estimate - exact).abs() < 3.0 * mc.half_width,
            "{d} u={u} N={n}: {} vs {exact} (hw {})",
            mc.estimate,
            mc.half_width
        );
    }
}
