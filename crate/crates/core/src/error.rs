use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("probability {0} is outside [0, 1]")]
    Probability(f64),
    #[error("count k = {k} is outside [0, n = {n}]")]
    CountOutOfRange { k: u64, n: u64 },
    #[error("n must be positive")]
    ZeroTrials,
    #[error("n = {0} must be even")]
    OddTrials(u64),
    #[error("p = {0} must not exceed 1/2")]
    UpperHalf(f64),
    #[error("Robbins bounds are undefined for n = 0")]
    ZeroFactorialBound,
    #[error("invalid probability vector for prompt `{id}`: {reason}")]
    ProbabilityVector { id: String, reason: &'static str },
    #[error("weight {weight} of prompt `{id}` must be finite and nonnegative")]
    Weight { id: String, weight: f64 },
    #[error("domain has no prompts")]
    EmptyDomain,
    #[error("domain weights sum to zero")]
    ZeroTotalWeight,
    #[error("duplicate prompt id `{0}`")]
    DuplicateId(String),
    #[error("counts for prompt `{id}` sum to {sum}, expected n = {n}")]
    CountSum { id: String, sum: u64, n: u64 },
    #[error("no samples to estimate from")]
    EmptySample,
    #[error("batch mixes binary and multiclass counts")]
    MixedKinds,
    #[error("m and n must both be positive (got m = {m}, n = {n})")]
    ZeroSplit { m: u64, n: u64 },
    #[error("budget must be positive and finite (got {0})")]
    Budget(f64),
    #[error("budget {budget} cannot fit an even n >= 2")]
    BudgetTooSmall { budget: u64 },
    #[error("split ({m}, {n}) uses {calls} calls, over the budget {budget}")]
    SplitOverBudget { m: u64, n: u64, calls: u64, budget: u64 },
    #[error("intraclass correlation {0} is outside [0, 1]")]
    Correlation(f64),
    #[error("correlated sampling is only defined for binary prompts")]
    CorrelatedMulticlass,
    #[error("replicates must be positive")]
    ZeroReplicates,
    #[error("exact oracle needs {cells} enumeration cells, above the limit {limit}")]
    EnumerationTooLarge { cells: u128, limit: u128 },
    #[error("verification needs max_n >= 2 (got {0})")]
    MaxNTooSmall(u64),
    #[error("exact oracle only enumerates binary prompts")]
    OracleMulticlass,
}
