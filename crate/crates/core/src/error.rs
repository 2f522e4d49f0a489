use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A distribution spec or parameter failed validation. `field` is a
    /// dotted path into the spec (e.g. `dist.pmf[2]`).
    #[error("invalid distribution at `{field}`: {reason}")]
    InvalidDistribution { field: String, reason: String },

    #[error("non-invertible series: denominator has zero constant term")]
    NonInvertibleSeries,

    #[error("series of order {have} is too short for order {needed}")]
    SeriesTooShort { needed: usize, have: usize },

    #[error(
        "float overflow at n = {n}; use exact mode or read the scaled mantissas \
         together with `scale_log2`"
    )]
    FloatOverflow { n: usize },

    #[error("float mode is refused above n = {limit} (requested {requested}); use exact mode")]
    FloatHorizon { requested: usize, limit: usize },

    #[error("table has {have} entries, {needed} required")]
    TableTooShort { needed: usize, have: usize },

    #[error("no interior negative root guaranteed; use imprimitive branch")]
    Imprimitive,

    #[error("moment condition violated: {0}")]
    MomentCondition(String),

    #[error("determinant D_{n} vanishes")]
    SingularDeterminant { n: usize },

    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidDistribution {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
