use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero matrix has no thin SVD")]
    ZeroMatrix,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix must have at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("columns are not orthonormal (max |UᵀU - I| entry = {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("rank-deficient input: numerical rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("coreset size must exceed subspace dimension (r = {r}, required > {min_exclusive})")]
    CoresetTooSmall { r: usize, min_exclusive: usize },

    #[error("coreset size r = {r} exceeds the number of rows n = {n}")]
    CoresetTooLarge { r: usize, n: usize },

    #[error("lifted problem too large ({entries} entries, limit {limit})")]
    LiftedTooLarge { entries: usize, limit: usize },

    #[error("generic bound precondition violated: rank(DS·U_A) = {rank} < k = {k}")]
    SampledRankLost { rank: usize, k: usize },

    #[error("no admissible index at barrier step {step}: numerical fault in row selection")]
    NumericalFault { step: usize },

    #[error(
        "NNLS did not converge after {iterations} iterations \
         (objective {objective:.6e}, KKT violation {kkt_violation:.3e})"
    )]
    NoConvergence {
        iterations: usize,
        objective: f64,
        kkt_violation: f64,
    },

    #[error("enumeration too large: {0}")]
    EnumerationTooLarge(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("constraint-domain solver failed: {0}")]
    Domain(String),
}
