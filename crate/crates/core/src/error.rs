use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are split into two families: domain errors (bad input, a
/// configuration the operation is not defined on) and numerical hard
/// failures (quadrature, conditioning, root counting). The CLI maps the
/// first family to exit code 1 and the second to exit code 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("branch points {0} and {1} coincide within tolerance")]
    DuplicateBranchPoint(usize, usize),
    #[error("odd model needs an odd number (>= 3) of branch points, got {0}")]
    EvenCount(usize),
    #[error("x = {0} lies on a branch point")]
    AtBranchPoint(String),
    #[error("point with |x| = {0} is inside the infinity-chart radius {1}")]
    NotNearInfinity(f64, f64),
    #[error("branch-point chain passes too close to branch point {0}")]
    DegenerateChain(usize),
    #[error("cycle is not closed: {0}")]
    NotClosed(String),
    #[error("homology class residual {0:e} exceeds rounding threshold")]
    LatticeResidualTooLarge(f64),
    #[error("series order {0} exceeds the implemented truncation {1}")]
    SeriesDivergence(usize, usize),
    #[error("quadrature error estimate {0:e} above threshold after refinement")]
    QuadratureFailure(f64),
    #[error("imaginary part of the period matrix is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("singular part is identically zero")]
    TrivialSingularPart,
    #[error("real-normalization system is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("real-normalization certificate {0:e} above threshold")]
    NotCertified(f64),
    #[error("exact differential but no polynomial antiderivative found (remainder {0:e})")]
    WitnessReconstructionFailed(f64),
    #[error("found {found} zeros with multiplicity, expected {expected}")]
    CountMismatch { found: usize, expected: usize },
    #[error("ray step size underflow at x = {0}")]
    StiffnessFailure(String),
    #[error("non-generic configuration: {0}")]
    NonGenericConfiguration(String),
    #[error("no zero has a nonvanishing dual period")]
    EmptyS,
    #[error("period jacobian has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("leaf correction diverged (drift {0:e})")]
    CorrectionDiverged(f64),
    #[error("probe disk crossed a non-generic configuration: {0}")]
    NonGenericOnDisk(String),
    #[error("scale factor must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("invalid job: {0}")]
    SchemaError(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier written to stderr by the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DuplicateBranchPoint(..) => "DuplicateBranchPoint",
            Error::EvenCount(_) => "EvenCount",
            Error::AtBranchPoint(_) => "AtBranchPoint",
            Error::NotNearInfinity(..) => "NotNearInfinity",
            Error::DegenerateChain(_) => "DegenerateChain",
            Error::NotClosed(_) => "NotClosed",
            Error::LatticeResidualTooLarge(_) => "LatticeResidualTooLarge",
            Error::SeriesDivergence(..) => "SeriesDivergence",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::NotPositiveDefinite(_) => "NotPositiveDefinite",
            Error::TrivialSingularPart => "TrivialSingularPart",
            Error::IllConditioned(_) => "IllConditioned",
            Error::NotCertified(_) => "NotCertified",
            Error::WitnessReconstructionFailed(_) => "WitnessReconstructionFailed",
            Error::CountMismatch { .. } => "CountMismatch",
            Error::StiffnessFailure(_) => "StiffnessFailure",
            Error::NonGenericConfiguration(_) => "NonGenericConfiguration",
            Error::EmptyS => "EmptyS",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::CorrectionDiverged(_) => "CorrectionDiverged",
            Error::NonGenericOnDisk(_) => "NonGenericOnDisk",
            Error::NonPositiveLambda(_) => "NonPositiveLambda",
            Error::SchemaError(_) => "SchemaError",
            Error::Io(_) => "Io",
        }
    }

    /// True for numerical hard failures, false for domain errors.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::LatticeResidualTooLarge(_)
                | Error::SeriesDivergence(..)
                | Error::QuadratureFailure(_)
                | Error::NotPositiveDefinite(_)
                | Error::IllConditioned(_)
                | Error::NotCertified(_)
                | Error::WitnessReconstructionFailed(_)
                | Error::CountMismatch { .. }
                | Error::StiffnessFailure(_)
                | Error::RankDeficient { .. }
                | Error::CorrectionDiverged(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
