//! Multi-threaded replicate execution.
//!
//! Each replicate draws only from its own substream, and summaries are
//! collected back in replicate order before aggregation, so reports are
//! identical for every thread count.

use rayon::prelude::*;
use selfconsist_core::simulator::{Experiment, ExperimentConfig, ExperimentReport, TrialSummary};

pub fn thread_pool(threads: Option<usize>) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("thread pool")
}

pub fn run_summaries(pool: &rayon::ThreadPool, experiment: &Experiment<'_>) -> Vec<TrialSummary> {
    let replicates = experiment.config().replicates;
    pool.install(|| (0..replicates).into_par_iter().map(|r| experiment.trial_summary(r)).collect())
}

pub fn run_experiment(
    pool: &rayon::ThreadPool,
    config: &ExperimentConfig,
) -> selfconsist_core::Result<(ExperimentReport, Vec<TrialSummary>)> {
    let experiment = Experiment::prepare(config)?;
    let trials = run_summaries(pool, &experiment);
    Ok((experiment.report(&trials), trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use selfconsist_core::estimator::PromptDomain;

    #[test]
    fn matches_serial_run() {
        let domain = PromptDomain::uniform_binary(&[0.1, 0.4, 0.5]).unwrap();
        let cfg = ExperimentConfig::new(domain, 3, 4, 2000, 0.0, 11).unwrap();
        let serial = selfconsist_core::simulator::run_experiment(&cfg).unwrap();
        for threads in [1, 3] {
            let (report, _) = run_experiment(&thread_pool(Some(threads)), &cfg).unwrap();
            assert_eq!(report, serial);
        }
    }
}
