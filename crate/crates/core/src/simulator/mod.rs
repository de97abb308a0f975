//! Monte Carlo validation of the plug-in estimator.
//!
//! A trial draws `m` prompts with replacement according to `q`, asks each
//! `n` times, and records `(E - Ê)²`. Trial `i` reads its randomness only
//! from the ChaCha8 stream `i` keyed by the experiment seed, so any execution
//! order (or thread count) reproduces the same trials, and reports aggregate
//! them in replicate order.

mod correlation;
mod experiment;
mod oracle;
mod sampling;

pub use correlation::{CorrelationKind, CorrelationModel};
pub use experiment::{
    check_splits, mse_sweep, run_experiment, run_trial, DecompositionSummary, DecompositionTerms,
    DeviationQuantiles, Experiment, ExperimentConfig, ExperimentReport, TrialOutcome,
    TrialSummary,
};
pub use oracle::{exact_mse_oracle, ORACLE_CELL_LIMIT};
pub use sampling::{
    replicate_rng, sample_counts_correlated, sample_counts_iid, sample_prompt, PromptSampler,
};
