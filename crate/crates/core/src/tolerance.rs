//! Numeric policy shared by the property suites, the simulator, and the CLI.

/// Every tolerance used by the crate, in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Agreement required between two exact evaluation routes.
    pub identity: f64,
    /// Slack on Monte Carlo aggregates that should agree exactly.
    pub monte_carlo: f64,
    /// Allowed deviation of a multiclass probability vector's sum from 1.
    pub distribution_sum: f64,
    /// Standard errors allowed above the bound before a violation is flagged.
    pub bound_margin_se: f64,
    /// Standard errors allowed between a Monte Carlo mean and an exact oracle.
    pub oracle_margin_se: f64,
}

pub const POLICY: NumericPolicy = NumericPolicy {
    identity: 1e-12,
    monte_carlo: 1e-9,
    distribution_sum: 1e-9,
    bound_margin_se: 3.0,
    oracle_margin_se: 4.0,
};
