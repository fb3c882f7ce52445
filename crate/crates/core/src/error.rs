use alloc::boxed::Box;
use alloc::string::String;

use crate::gar::SkewTFit;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("distribution has zero total probability mass")]
    ZeroMass,
    #[error("distribution has no bins")]
    EmptyDistribution,
    #[error("invalid bins: {0}")]
    InvalidBins(String),
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
    #[error("distribution is not normalized (total mass {0})")]
    NotNormalized(f64),
    #[error("open tail bin has no closed neighbour to copy a width from")]
    NoClosedNeighbor,

    #[error("bins with maximum probability are not adjacent; mode is indeterminate")]
    IndeterminateMode,
    #[error("mean {0} is too close to zero for a coefficient of variation")]
    MeanNearZero(f64),
    #[error("interquartile range is zero")]
    DegenerateIqr,
    #[error("standard deviation is zero")]
    ZeroStdDev,
    #[error("P90 equals P10")]
    DegenerateRange,
    #[error("Q(6/8) equals Q(2/8)")]
    DegenerateOctiles,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("series has zero variance: {0}")]
    ConstantSeries(String),

    #[error("no records to aggregate")]
    EmptyRound,
    #[error("series is identically zero and cannot be normalized")]
    AllZeroSeries,
    #[error("series are not aligned on the same rounds")]
    AlignmentError,

    #[error("regressor matrix is rank deficient")]
    RankDeficient,
    #[error("regressor layout mismatch: expected {expected} columns, got {got}")]
    LayoutMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("input quantiles are not strictly increasing")]
    NonIncreasingQuantiles,
    #[error("skewed-t fit did not converge (residual {})", .0.residual)]
    ConvergenceFailure(Box<SkewTFit>),
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
}
