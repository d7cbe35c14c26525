use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("site index {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("{n_sites} sites exceeds the configured maximum of {max}")]
    DimensionOverflow { n_sites: usize, max: usize },

    #[error("operator is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    #[error("operator is not a projector (residual {0:.3e})")]
    NotProjector(f64),

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("detector grid is empty for the given parameters")]
    EmptyGrid,

    #[error("outcome index {index} out of range ({len} outcomes)")]
    OutcomeOutOfRange { index: usize, len: usize },

    #[error("projector set does not resolve the identity (residual {0:.3e})")]
    NonResolvingProjectors(f64),

    #[error("Kraus completeness violated (residual {0:.3e})")]
    CompletenessViolated(f64),

    #[error("probability normalization drifted by {0:.3e}")]
    NormalizationDrift(f64),

    #[error("weak value undefined: postselection overlap vanishes for ({i}, {f})")]
    UndefinedWeakValue { i: String, f: String },

    #[error("instance exceeds the exact-overlap budget ({cost} > {budget})")]
    BudgetExceeded { cost: usize, budget: usize },

    #[error("projector sequence must contain an even number of slots, got {0}")]
    OddSequence(usize),

    #[error("inconsistent slot counts: {0}")]
    InconsistentSlots(String),

    #[error("all outcome tuples were excluded from the minimization")]
    AllTuplesExcluded,
}

pub type Result<T> = std::result::Result<T, Error>;
