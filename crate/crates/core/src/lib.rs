//! Ultimate-time survival in the discrete-time risk model
//! `W(n) = u + 2n - (Z_1 + ... + Z_n)` with i.i.d. integer claims.
//!
//! The crate is organised bottom-up:
//!
//! * [`distributions`]: the claim law `Z`, its p.g.f. and moments.
//! * [`series`]: truncated power-series arithmetic (exact or binary64).
//! * [`recurrence`]: the `x_n`, `y_n` tables, the determinants `D_n` and
//!   the exact checker for the determinant sign/monotonicity conjecture.
//! * [`roots`]: the zeros `-1/alpha` and `1/beta` of `H(s) - s^2` and the
//!   vanishing order at `s = 1`.
//! * [`asymptotics`]: partial-fraction coefficients and the asymptotic
//!   behaviour of `x_n` and `D_n`.
//! * [`survival`]: `phi(0)`, `phi(1)` by three routes, the full
//!   `phi` table and the maximum distribution `pi_0`, `pi_1`.
//! * [`oracle`]: finite-horizon dynamic programming and seeded Monte Carlo.

pub mod asymptotics;
pub mod distributions;
pub mod error;
pub mod oracle;
pub mod recurrence;
pub mod roots;
pub mod scalar;
pub mod series;
pub mod survival;

pub use asymptotics::{AsymptoticCoefficients, SignMonotonicityReport};
pub use distributions::{parse_distribution, ClaimDistribution, ClaimKind, Moment, MomentReport};
pub use error::{Error, Result};
pub use oracle::{DpConfig, DpResult, McConfig, McResult};
pub use recurrence::{ConjectureReport, SequenceTable, Verdict};
pub use roots::RootProfile;
pub use scalar::{Rational, ScalarMode};
pub use series::PowerSeries;
pub use survival::{Regime, Route, SurvivalSolution};
