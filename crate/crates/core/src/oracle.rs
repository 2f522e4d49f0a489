//! Independent ground truth for `phi`: finite-horizon survival
//! `phi_N(u) = P(W(n) > 0 for 1 <= n <= N)` by dynamic programming over the
//! surplus, and by seeded Monte Carlo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::ClaimDistribution;
use crate::error::{Error, Result};

/// Masses below this are dropped to keep the DP out of subnormals.
const FLUSH: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpConfig {
    pub horizon: usize,
    /// Surplus values above the cap are absorbed as safe. `None` means
    /// `u + 2N`, which is never exceeded, so no cap error arises.
    pub surplus_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpResult {
    pub phi: f64,
    pub u: usize,
    pub horizon: usize,
    pub surplus_cap: usize,
    /// Claims above this index are treated as ruinous.
    pub claim_cap: usize,
    /// Upper bound on the probability lost to claim truncation (`N * tail`).
    pub truncation_bound: f64,
    /// Mass absorbed above the surplus cap; `phi` overstates `phi_N(u)` by at
    /// most this much.
    pub cap_bound: f64,
}

/// Dot product with four accumulators so the loop vectorises.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Forward DP on the surplus lattice; ruin (`W <= 0`) is absorbing.
pub fn finite_horizon_dp(dist: &ClaimDistribution, u: usize, cfg: &DpConfig) -> Result<DpResult> {
    if cfg.horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let cap = cfg.surplus_cap.unwrap_or(u + 2 * cfg.horizon);
    if cap < u.max(1) {
        return Err(Error::InvalidArgument(format!(
            "surplus cap {cap} is below the initial surplus {u}"
        )));
    }
    let (h, tail) = dist.pmf_f64();
    let k_max = h.len() - 1;
    // Gather form: new[t] = sum_k h[k] old[t - 2 + k], a forward dot product
    // of old[t-2+k0 ..= t-2+k1] against h[k0..=k1].
    let mut old = vec![0.0f64; cap + 1];
    let mut new = vec![0.0f64; cap + 1];
    old[u] = 1.0;
    let (mut lo, mut hi) = (u, u);
    let mut absorbed = 0.0f64;

    for _ in 0..cfg.horizon {
        // Mass that would land above the cap.
        for s in lo.max((cap + 1).saturating_sub(2))..=hi {
            let over: f64 = h.iter().take(s + 2 - cap).sum();
            absorbed += old[s] * over;
        }
        let new_lo = (lo + 2).saturating_sub(k_max).max(1);
        let new_hi = (hi + 2).min(cap);
        for t in new_lo..=new_hi {
            // Sources s = t - 2 + k within [lo, hi].
            let k0 = (lo + 2).saturating_sub(t);
            let k1 = (hi + 2 - t).min(k_max);
            new[t] = if k0 > k1 {
                0.0
            } else {
                let s0 = t + k0 - 2;
                let v = dot(&old[s0..=s0 + (k1 - k0)], &h[k0..=k1]);
                if v < FLUSH {
                    0.0
                } else {
                    v
                }
            };
        }
        old[lo..=hi].iter_mut().for_each(|v| *v = 0.0);
        std::mem::swap(&mut old, &mut new);
        lo = new_lo;
        hi = new_hi;
        while lo < hi && old[lo] == 0.0 {
            lo += 1;
        }
        while hi > lo && old[hi] == 0.0 {
            hi -= 1;
        }
        if old[lo] == 0.0 {
            break;
        }
    }
    let live: f64 = old[lo..=hi].iter().sum();
    Ok(DpResult {
        phi: (live + absorbed).min(1.0),
        u,
        horizon: cfg.horizon,
        surplus_cap: cap,
        claim_cap: k_max,
        truncation_bound: cfg.horizon as f64 * tail,
        cap_bound: absorbed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McConfig {
    pub trials: u64,
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McResult {
    pub estimate: f64,
    /// Normal-approximation 95% half-width, `1.96 sqrt(p (1 - p) / n)`.
    pub half_width: f64,
    pub survivors: u64,
    pub trials: u64,
    pub horizon: usize,
    pub seed: u64,
}

/// Trial `i` draws from `ChaCha8(seed)` on stream `i`, so the estimate does
/// not depend on how trials are scheduled across threads.
pub fn mc_estimate(dist: &ClaimDistribution, u: usize, cfg: &McConfig) -> Result<McResult> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let (h, _) = dist.pmf_f64();
    let cdf: Vec<f64> = h
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let survive = |trial: u64| -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(trial);
        let mut w = u as i64;
        for _ in 0..cfg.horizon {
            let x: f64 = rng.random();
            // Draws past the truncation cap count as an arbitrarily large claim.
            let z = cdf.partition_point(|&c| c <= x);
            if z == cdf.len() {
                return false;
            }
            w += 2 - z as i64;
            if w <= 0 {
                return false;
            }
        }
        true
    };
    let survivors = (0..cfg.trials).into_par_iter().filter(|&i| survive(i)).count() as u64;
    let n = cfg.trials as f64;
    let p = survivors as f64 / n;
    Ok(McResult {
        estimate: p,
        half_width: 1.96 * (p * (1.0 - p) / n).sqrt(),
        survivors,
        trials: cfg.trials,
        horizon: cfg.horizon,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, to_f64};

    fn geom(n: i64, d: i64) -> ClaimDistribution {
        ClaimDistribution::geometric(rat(n, d)).unwrap()
    }

    fn dp(dist: &ClaimDistribution, u: usize, n: usize) -> f64 {
        finite_horizon_dp(dist, u, &DpConfig { horizon: n, surplus_cap: None }).unwrap().phi
    }

    /// Brute force over all claim paths with claims <= k_max.
    fn enumerate(h: &[f64], u: i64, n: usize) -> f64 {
        if n == 0 {
            return 1.0;
        }
        h.iter()
            .enumerate()
            .filter(|(k, _)| u + 2 - (*k as i64) > 0)
            .map(|(k, p)| p * enumerate(h, u + 2 - k as i64, n - 1))
            .sum()
    }

    #[test]
    fn one_step() {
        for d in [geom(1, 2), geom(1, 5)] {
            let h = d.pmf_prefix(1);
            assert!((dp(&d, 0, 1) - to_f64(&(&h[0] + &h[1]))).abs() < 1e-15);
        }
    }

    #[test]
    fn bernoulli_never_ruins() {
        let d = ClaimDistribution::bernoulli(rat(1, 3)).unwrap();
        assert!((dp(&d, 0, 50) - 1.0).abs() < 1e-13);
        let r = mc_estimate(&d, 0, &McConfig { trials: 200, horizon: 50, seed: 1 }).unwrap();
        assert_eq!((r.estimate, r.half_width), (1.0, 0.0));
    }

    #[test]
    fn two_steps_geometric_half() {
        assert!((dp(&geom(1, 2), 0, 2) - 0.6875).abs() < 1e-15);
    }

    #[test]
    fn matches_enumeration() {
        let d = ClaimDistribution::tabulated(vec![rat(2, 5), rat(1, 5), rat(1, 5), rat(1, 5)]).unwrap();
        let h: Vec<f64> = d.pmf_f64().0;
        for u in 0..3 {
            for n in 1..7 {
                assert!((dp(&d, u, n) - enumerate(&h, u as i64, n)).abs() < 1e-14);
            }
        }
        let g = geom(1, 2);
        let (h, _) = g.pmf_f64();
        assert!((dp(&g, 1, 4) - enumerate(&h, 1, 4)).abs() < 1e-14);
    }

    #[test]
    fn monotone_in_horizon_and_surplus() {
        let d = geom(1, 2);
        let mut last = 1.0;
        for n in [1, 2, 5, 20, 100] {
            let v = dp(&d, 0, n);
            assert!(v <= last + 1e-15);
            last = v;
        }
        for u in 0..10 {
            assert!(dp(&d, u, 50) <= dp(&d, u + 1, 50) + 1e-15);
        }
    }

    #[test]
    fn small_cap_is_an_upper_bound() {
        let d = geom(1, 2);
        let exact = dp(&d, 0, 200);
        let capped = finite_horizon_dp(&d, 0, &DpConfig { horizon: 200, surplus_cap: Some(40) }).unwrap();
        assert!(capped.phi >= exact - 1e-12);
        assert!(capped.phi - exact <= capped.cap_bound + 1e-12);
        assert!(capped.cap_bound > 0.0);
    }

    #[test]
    fn imprimitive_half_of_survival() {
        let d = ClaimDistribution::tabulated(vec![rat(1, 2), int(0), rat(1, 2)]).unwrap();
        let v = dp(&d, 0, 2000);
        assert!(v >= 0.5 && v - 0.5 < 0.02, "{v}");
    }

    #[test]
    fn monte_carlo_is_reproducible_and_consistent() {
        let d = geom(1, 2);
        let cfg = McConfig { trials: 20_000, horizon: 2, seed: 42 };
        let a = mc_estimate(&d, 0, &cfg).unwrap();
        let b = mc_estimate(&d, 0, &cfg).unwrap();
        assert_eq!(a, b);
        assert!((a.estimate - 0.6875).abs() < 3.0 * a.half_width);
        let c = mc_estimate(&d, 0, &McConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.survivors, c.survivors);
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let d = geom(1, 3);
        let cfg = McConfig { trials: 3000, horizon: 30, seed: 7 };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| mc_estimate(&d, 3, &cfg)).unwrap();
        let b = four.install(|| mc_estimate(&d, 3, &cfg)).unwrap();
        assert_eq!(a, b);
    }
}
