//! Shared fixtures for the benchmarks.

use ruinkit_core::scalar::rat;
use ruinkit_core::ClaimDistribution;

/// Laws spanning the three support shapes: two-point, infinite, tabulated.
pub fn fixtures() -> Vec<(&'static str, ClaimDistribution)> {
    vec![
        ("bernoulli(1/3)", ClaimDistribution::bernoulli(rat(1, 3)).unwrap()),
        ("geometric(1/2)", ClaimDistribution::geometric(rat(1, 2)).unwrap()),
        (
            "pmf(2/5,1/5,1/5,1/5)",
            ClaimDistribution::tabulated(vec![rat(2, 5), rat(1, 5), rat(1, 5), rat(1, 5)]).unwrap(),
        ),
    ]
}

pub fn geometric_half() -> ClaimDistribution {
    ClaimDistribution::geometric(rat(1, 2)).unwrap()
}
