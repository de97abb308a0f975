//! Estimation of the self-consistency error of repeated categorical model
//! responses.
//!
//! A prompt `x` answered `n` times with `k` positive responses has plug-in
//! error `min{k/n, 1 - k/n}`; averaging over `m` prompts drawn from a domain
//! gives the domain estimate. This crate carries everything that does not
//! touch the filesystem or a process:
//!
//! * [`binomial`]: exact binomial pmf in log space, Stirling remainder and
//!   Robbins bounds, and the exact bias/variance of the plug-in estimator.
//! * [`estimator`]: prompt domains, response counts, plug-in estimates.
//! * [`planner`]: the three-term MSE bound `1/(8m) + 1/(πn) + 1/(2nm)` and
//!   budget splits `B = m·n`.
//! * [`simulator`]: deterministic Monte Carlo trials (iid, beta-binomial
//!   correlated, multiclass) and a brute-force exact MSE oracle.
//! * [`verify`]: the battery of analytic inequalities, reported with slack.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod binomial;
pub mod error;
pub mod estimator;
pub mod planner;
pub mod simulator;
pub mod sum;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use estimator::{
    DomainEstimate, PromptDistribution, PromptDomain, PromptSpec, ResponseCounts, Tally,
};
pub use planner::{BoundBreakdown, BudgetPlan, IntegerPlan, PlanMethod};
pub use simulator::{CorrelationModel, ExperimentConfig, ExperimentReport};
