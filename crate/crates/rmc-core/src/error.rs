use alloc::string::String;

/// Failures surfaced by the arithmetic, enumeration and evaluation layers.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("unit part is not a square modulo p")]
    NonResidue,
    #[error("odd valuation {0}: square root needs a ramified extension")]
    OddValuation(i64),
    #[error("precision exhausted: {0}")]
    PrecisionLoss(String),
    #[error("vector {0} meets the path improperly")]
    ImproperIntersection(String),
    #[error("exponent sum {sum} is nonzero at level {level} ({scope})")]
    WeightNotZero { level: u32, sum: i64, scope: String },
    #[error("point is not in X_p at precision {0}")]
    NotInXp(u32),
    #[error("normalizing denominator vanishes at working precision")]
    ZeroDenominator,
    #[error("point meets the divisor of {0}")]
    NotRegular(String),
    #[error("no fundamental Pell solution for discriminant {0} (needs a positive nonsquare)")]
    NoFundamentalSolution(i64),
    #[error("no relation of height at most {0}")]
    NoRelation(String),
    #[error("Gauss sum has modulus {0} relative to sqrt|D|")]
    NonUnitGaussSum(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("level {level} needs norms up to {norm}, above the limit {limit}; lower the digits or pass explicit levels")]
    TooLarge { level: u32, norm: u64, limit: u64 },
}

pub type Result<T> = core::result::Result<T, Error>;
