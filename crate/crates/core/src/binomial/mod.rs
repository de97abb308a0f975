//! Exact binomial computations and the analytic bounds on the plug-in
//! estimator's bias and variance.
//!
//! Everything is evaluated in log space with one exponentiation per term, and
//! sums over `k` use compensated accumulation. Probability arguments are
//! validated; `p ∈ {0, 1}` degenerates to a point mass.

mod bias;
pub(crate) use bias::{expected_plugin_error_from, tail_identity_from, variance_from};
mod factorial;
mod pmf;

pub use bias::{
    bias_exact, bias_tail_identity, bias_upper_bound, expected_plugin_error,
    plugin_variance_exact, BiasDecomposition, BiasUpperBound,
};
pub use factorial::{
    log_factorial, robbins_bounds, stirling_base, stirling_remainder, LogFactorialBounds,
    LogFactorialTable, DEFAULT_LOG_FACTORIAL_CAP,
};
pub use pmf::{binom_log_pmf, central_binom_ratio, BinomialPmf};

use crate::error::{Error, Result};

pub(crate) fn check_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::Probability(p))
    }
}

pub(crate) fn check_even(n: u64) -> Result<u64> {
    if n == 0 {
        Err(Error::ZeroTrials)
    } else if n % 2 == 1 {
        Err(Error::OddTrials(n))
    } else {
        Ok(n)
    }
}
