use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use super::correlation::{CorrelationKind, CorrelationModel};
use super::sampling::{draw_correlated, draw_iid, replicate_rng, PromptSampler};
use crate::binomial::{expected_plugin_error, BinomialPmf};
use crate::error::{Error, Result};
use crate::estimator::{
    domain_estimate, domain_true_error, DomainEstimate, PromptDistribution, PromptDomain,
    ResponseCounts, Tally,
};
use crate::planner::BoundBreakdown;
use crate::sum::CompensatedSum;
use crate::tolerance::POLICY;

/// One Monte Carlo experiment: `replicates` independent estimates of the
/// domain error from `m` prompts × `n` calls.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExperimentConfig {
    pub domain: PromptDomain,
    pub m: u64,
    pub n: u64,
    pub replicates: u64,
    pub rho: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(domain: PromptDomain, m: u64, n: u64, replicates: u64, rho: f64, seed: u64) -> Result<Self> {
        let config = Self { domain, m, n, replicates, rho, seed };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::ZeroSplit { m: self.m, n: self.n });
        }
        if self.replicates == 0 {
            return Err(Error::ZeroReplicates);
        }
        let model = CorrelationModel::new(self.rho)?;
        if model.kind() != CorrelationKind::Iid && !self.domain.is_binary() {
            return Err(Error::CorrelatedMulticlass);
        }
        Ok(())
    }

    pub fn with_split(&self, m: u64, n: u64) -> Self {
        Self { m, n, ..self.clone() }
    }
}

/// `Ẽ`, `a_i = E(x_i) - E[Ê(x_i)]` and `b_i = E[Ê(x_i)] - Ê(x_i)` for one
/// trial, so that `E(x_i) - Ê(x_i) = a_i + b_i`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DecompositionTerms {
    pub tilde_e: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// The sampled prompts' counts, in draw order.
    pub counts: Vec<ResponseCounts>,
    pub estimate: DomainEstimate,
    pub truth: f64,
    pub sq_error: f64,
    /// Present for iid runs on binary domains.
    pub decomposition: Option<DecompositionTerms>,
}

/// The per-replicate numbers a report aggregates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TrialSummary {
    pub replicate: u64,
    pub estimate: f64,
    pub sq_error: f64,
    pub tilde_e: Option<f64>,
    /// Mean of `a_i·b_i` over the trial's prompts.
    pub cross_ab: Option<f64>,
    pub max_a: Option<f64>,
}

/// `|Ê - E|` quantiles, linearly interpolated between order statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DeviationQuantiles {
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DecompositionSummary {
    pub tilde_mean: f64,
    pub tilde_mean_std_err: f64,
    pub tilde_variance: f64,
    pub tilde_variance_std_err: f64,
    /// `1/(16m)`
    pub tilde_variance_bound: f64,
    pub cross_mean: f64,
    pub cross_std_err: f64,
    pub max_a: f64,
    /// `√(1/(2πn))`, for even `n` only.
    pub a_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExperimentReport {
    pub m: u64,
    pub n: u64,
    pub replicates: u64,
    pub rho: f64,
    pub seed: u64,
    pub correlation_model: CorrelationKind,
    pub true_error: f64,
    pub empirical_mse: f64,
    pub mse_std_err: f64,
    /// Set when `replicates = 1`; the standard error is then reported as 0.
    pub std_err_degenerate: bool,
    pub mean_estimate: f64,
    pub bias_of_estimate: f64,
    pub deviation_quantiles: DeviationQuantiles,
    pub bound: BoundBreakdown,
    /// `empirical_mse ≤ bound.total + 3·mse_std_err`
    pub bound_satisfied: bool,
    /// Whether the bound is a proven claim for this run (iid calls, binary
    /// prompts, even `n`).
    pub bound_applies: bool,
    pub decomposition: Option<DecompositionSummary>,
}

/// A configuration with everything trials share precomputed.
#[derive(Debug, Clone)]
pub struct Experiment<'a> {
    config: &'a ExperimentConfig,
    model: CorrelationModel,
    sampler: PromptSampler,
    errors: Vec<f64>,
    expected: Option<Vec<f64>>,
    truth: f64,
}

impl<'a> Experiment<'a> {
    pub fn prepare(config: &'a ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let model = CorrelationModel::new(config.rho)?;
        let prompts = config.domain.prompts();
        let errors = prompts.iter().map(crate::estimator::true_error).collect();
        let expected = if model.kind() == CorrelationKind::Iid && config.domain.is_binary() {
            let mut v = Vec::with_capacity(prompts.len());
            for p in prompts {
                let PromptDistribution::Binary(prob) = p.distribution() else { unreachable!() };
                v.push(expected_plugin_error(config.n, *prob)?);
            }
            Some(v)
        } else {
            None
        };
        Ok(Self {
            config,
            model,
            sampler: PromptSampler::new(&config.domain),
            errors,
            expected,
            truth: domain_true_error(&config.domain),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        self.config
    }

    /// `E`, the weighted domain error.
    pub fn truth(&self) -> f64 {
        self.truth
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, Tally) {
        let index = self.sampler.sample(rng);
        let dist = self.config.domain.prompts()[index].distribution();
        let tally = match (dist, self.model.kind()) {
            (PromptDistribution::Binary(p), CorrelationKind::BetaBinomial) => Tally::Binary {
                n: self.config.n,
                k: draw_correlated(*p, self.config.n, &self.model, rng),
            },
            _ => draw_iid(dist, self.config.n, rng),
        };
        (index, tally)
    }

    /// Replicate `replicate` in full: counts, estimate and decomposition.
    pub fn trial(&self, replicate: u64) -> TrialOutcome {
        let mut rng = replicate_rng(self.config.seed, replicate);
        let prompts = self.config.domain.prompts();
        let mut indices = Vec::with_capacity(self.config.m as usize);
        let mut counts = Vec::with_capacity(self.config.m as usize);
        for _ in 0..self.config.m {
            let (index, tally) = self.draw(&mut rng);
            indices.push(index);
            counts.push(ResponseCounts::from_tally(prompts[index].id(), tally));
        }
        let estimate = domain_estimate(&counts).expect("m >= 1, one kind");
        let diff = self.truth - estimate.value;
        let decomposition = self.expected.as_ref().map(|expected| {
            let tilde = crate::sum::sum(indices.iter().map(|&i| self.errors[i]));
            let a = indices.iter().map(|&i| self.errors[i] - expected[i]).collect();
            let b = indices
                .iter()
                .zip(&estimate.per_prompt)
                .map(|(&i, (_, e))| expected[i] - e)
                .collect();
            DecompositionTerms { tilde_e: tilde / self.config.m as f64, a, b }
        });
        TrialOutcome { counts, truth: self.truth, sq_error: diff * diff, estimate, decomposition }
    }

    /// Replicate `replicate` reduced to the numbers a report needs. Consumes
    /// the same random stream as [`Experiment::trial`].
    pub fn trial_summary(&self, replicate: u64) -> TrialSummary {
        let mut rng = replicate_rng(self.config.seed, replicate);
        let m = self.config.m as f64;
        let mut est = CompensatedSum::new();
        let mut tilde = CompensatedSum::new();
        let mut cross = CompensatedSum::new();
        let mut max_a = f64::NEG_INFINITY;
        for _ in 0..self.config.m {
            let (index, tally) = self.draw(&mut rng);
            let e = tally.plugin_estimate();
            est.add(e);
            if let Some(expected) = &self.expected {
                let a = self.errors[index] - expected[index];
                tilde.add(self.errors[index]);
                cross.add(a * (expected[index] - e));
                max_a = max_a.max(a);
            }
        }
        let estimate = est.value() / m;
        let diff = self.truth - estimate;
        let has = self.expected.is_some();
        TrialSummary {
            replicate,
            estimate,
            sq_error: diff * diff,
            tilde_e: has.then(|| tilde.value() / m),
            cross_ab: has.then(|| cross.value() / m),
            max_a: has.then_some(max_a),
        }
    }

    /// All replicates, serially, in index order.
    pub fn summaries(&self) -> Vec<TrialSummary> {
        (0..self.config.replicates).map(|r| self.trial_summary(r)).collect()
    }

    /// Aggregates trial summaries (which must be in replicate order) into a
    /// report.
    pub fn report(&self, trials: &[TrialSummary]) -> ExperimentReport {
        let cfg = self.config;
        let r = trials.len();
        let (mse, mse_se) = mean_and_std_err(trials.iter().map(|t| t.sq_error));
        let (mean_estimate, _) = mean_and_std_err(trials.iter().map(|t| t.estimate));
        let mut deviations: Vec<f64> = trials.iter().map(|t| libm::fabs(t.estimate - self.truth)).collect();
        deviations.sort_by(f64::total_cmp);
        let bound = BoundBreakdown::new(cfg.m, cfg.n).expect("validated split");
        let decomposition = self.expected.as_ref().map(|_| {
            let tildes = || trials.iter().map(|t| t.tilde_e.unwrap_or(0.0));
            let (tilde_mean, tilde_mean_std_err) = mean_and_std_err(tildes());
            let (tilde_variance, tilde_variance_std_err) = variance_and_std_err(tildes(), tilde_mean);
            let (cross_mean, cross_std_err) = mean_and_std_err(trials.iter().map(|t| t.cross_ab.unwrap_or(0.0)));
            DecompositionSummary {
                tilde_mean,
                tilde_mean_std_err,
                tilde_variance,
                tilde_variance_std_err,
                tilde_variance_bound: 1.0 / (16.0 * cfg.m as f64),
                cross_mean,
                cross_std_err,
                max_a: trials.iter().filter_map(|t| t.max_a).fold(f64::NEG_INFINITY, f64::max),
                a_bound: (cfg.n % 2 == 0).then(|| libm::sqrt(1.0 / (2.0 * PI * cfg.n as f64))),
            }
        });
        ExperimentReport {
            m: cfg.m,
            n: cfg.n,
            replicates: r as u64,
            rho: cfg.rho,
            seed: cfg.seed,
            correlation_model: self.model.kind(),
            true_error: self.truth,
            empirical_mse: mse,
            mse_std_err: mse_se,
            std_err_degenerate: r < 2,
            mean_estimate,
            bias_of_estimate: mean_estimate - self.truth,
            deviation_quantiles: DeviationQuantiles {
                q50: quantile(&deviations, 0.5),
                q90: quantile(&deviations, 0.9),
                q99: quantile(&deviations, 0.99),
            },
            bound,
            bound_satisfied: mse <= bound.total + POLICY.bound_margin_se * mse_se,
            bound_applies: self.model.kind() == CorrelationKind::Iid && cfg.domain.is_binary() && cfg.n % 2 == 0,
            decomposition,
        }
    }
}

/// Sample mean and its standard error (0 for fewer than two values).
fn mean_and_std_err(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut count = 0usize;
    let mut acc = CompensatedSum::new();
    for v in values.clone() {
        acc.add(v);
        count += 1;
    }
    if count == 0 {
        return (0.0, 0.0);
    }
    let mean = acc.value() / count as f64;
    if count < 2 {
        return (mean, 0.0);
    }
    let mut ss = CompensatedSum::new();
    for v in values {
        ss.add((v - mean) * (v - mean));
    }
    let var = ss.value() / (count - 1) as f64;
    (mean, libm::sqrt(var / count as f64))
}

/// Unbiased sample variance and the large-sample standard error of that
/// estimate, `√((μ₄ - σ⁴)/R)`.
fn variance_and_std_err(values: impl Iterator<Item = f64> + Clone, mean: f64) -> (f64, f64) {
    let mut count = 0usize;
    let mut m2 = CompensatedSum::new();
    let mut m4 = CompensatedSum::new();
    for v in values {
        let d = (v - mean) * (v - mean);
        m2.add(d);
        m4.add(d * d);
        count += 1;
    }
    if count < 2 {
        return (0.0, 0.0);
    }
    let r = count as f64;
    let var = m2.value() / (r - 1.0);
    let pop = m2.value() / r;
    let fourth = m4.value() / r;
    (var, libm::sqrt(((fourth - pop * pop).max(0.0)) / r))
}

fn quantile(sorted: &[f64], level: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        len => {
            let pos = level * (len - 1) as f64;
            let lo = libm::floor(pos) as usize;
            let hi = (lo + 1).min(len - 1);
            let frac = pos - lo as f64;
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        }
    }
}

/// One replicate of `config`: draw `m` prompts, `n` calls each, and compare
/// the plug-in estimate with the domain error.
pub fn run_trial(config: &ExperimentConfig, replicate: u64) -> Result<TrialOutcome> {
    Ok(Experiment::prepare(config)?.trial(replicate))
}

/// All replicates of `config`, serially.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let experiment = Experiment::prepare(config)?;
    Ok(experiment.report(&experiment.summaries()))
}

/// One report per split, in input order, all sharing `base`'s domain, seed,
/// replicate count and correlation. Every split is checked against the
/// budget before anything runs.
pub fn mse_sweep(budget: u64, splits: &[(u64, u64)], base: &ExperimentConfig) -> Result<Vec<ExperimentReport>> {
    check_splits(budget, splits)?;
    splits
        .iter()
        .map(|&(m, n)| run_experiment(&base.with_split(m, n)))
        .collect()
}

/// Rejects zero-sized splits and splits using more than `budget` calls.
pub fn check_splits(budget: u64, splits: &[(u64, u64)]) -> Result<()> {
    for &(m, n) in splits {
        if m == 0 || n == 0 {
            return Err(Error::ZeroSplit { m, n });
        }
        let calls = m.saturating_mul(n);
        if calls > budget {
            return Err(Error::SplitOverBudget { m, n, calls, budget });
        }
    }
    Ok(())
}

/// Binary pmf of a prompt, shared with the exact oracle.
pub(crate) fn pmf_for(dist: &PromptDistribution, n: u64) -> Result<BinomialPmf> {
    match dist {
        PromptDistribution::Binary(p) => BinomialPmf::new(n, *p),
        PromptDistribution::Multiclass(_) => Err(Error::OracleMulticlass),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::PromptSpec;
    use alloc::vec;

    fn single(p: f64, m: u64, n: u64, r: u64) -> ExperimentConfig {
        ExperimentConfig::new(PromptDomain::uniform_binary(&[p]).unwrap(), m, n, r, 0.0, 42).unwrap()
    }

    #[test]
    fn all_zero_domain_has_zero_error() {
        let cfg = ExperimentConfig::new(PromptDomain::uniform_binary(&[0.0, 0.0]).unwrap(), 3, 4, 10, 0.0, 1).unwrap();
        for r in 0..10 {
            assert_eq!(run_trial(&cfg, r).unwrap().sq_error, 0.0);
        }
    }

    #[test]
    fn fair_coin_two_calls() {
        let cfg = single(0.5, 1, 2, 1000);
        let exp = Experiment::prepare(&cfg).unwrap();
        for r in 0..1000 {
            let t = exp.trial(r);
            assert!(t.sq_error == 0.25 || t.sq_error == 0.0);
        }
    }

    #[test]
    fn summary_matches_full_trial() {
        let domain = PromptDomain::uniform_binary(&[0.1, 0.45, 0.7, 0.95]).unwrap();
        let cfg = ExperimentConfig::new(domain, 5, 6, 50, 0.0, 9).unwrap();
        let exp = Experiment::prepare(&cfg).unwrap();
        for r in 0..50 {
            let full = exp.trial(r);
            let s = exp.trial_summary(r);
            assert!((full.estimate.value - s.estimate).abs() < 1e-15);
            assert!((full.sq_error - s.sq_error).abs() < 1e-15);
            let d = full.decomposition.unwrap();
            assert!((d.tilde_e - s.tilde_e.unwrap()).abs() < 1e-15);
            for (i, (_, e)) in full.estimate.per_prompt.iter().enumerate() {
                let err = cfg.domain.prompts().iter().find(|p| p.id() == full.estimate.per_prompt[i].0).unwrap();
                let lhs = crate::estimator::true_error(err) - e;
                assert!((lhs - (d.a[i] + d.b[i])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn a_terms_within_bias_bound() {
        let domain = PromptDomain::uniform_binary(&[0.02, 0.2, 0.5, 0.5, 0.61, 0.99]).unwrap();
        let cfg = ExperimentConfig::new(domain, 4, 8, 10_000, 0.0, 3).unwrap();
        let report = run_experiment(&cfg).unwrap();
        let d = report.decomposition.unwrap();
        assert!(d.max_a <= d.a_bound.unwrap());
        assert!(d.max_a >= 0.0);
    }

    #[test]
    fn single_replicate_is_flagged() {
        let report = run_experiment(&single(0.3, 2, 4, 1)).unwrap();
        assert!(report.std_err_degenerate);
        assert_eq!(report.mse_std_err, 0.0);
    }

    #[test]
    fn deterministic() {
        let cfg = single(0.3, 3, 5, 500);
        assert_eq!(run_experiment(&cfg).unwrap(), run_experiment(&cfg).unwrap());
    }

    #[test]
    fn quantiles_ordered() {
        let domain = PromptDomain::uniform_binary(&[0.1, 0.3, 0.5]).unwrap();
        let cfg = ExperimentConfig::new(domain, 3, 4, 2000, 0.0, 5).unwrap();
        let q = run_experiment(&cfg).unwrap().deviation_quantiles;
        assert!(0.0 <= q.q50 && q.q50 <= q.q90 && q.q90 <= q.q99);
        assert_eq!(quantile(&[1.0, 2.0, 3.0], 0.5), 2.0);
        assert_eq!(quantile(&[0.0, 10.0], 0.9), 9.0);
    }

    #[test]
    fn config_validation() {
        let d = PromptDomain::uniform_binary(&[0.3]).unwrap();
        assert!(ExperimentConfig::new(d.clone(), 0, 2, 1, 0.0, 0).is_err());
        assert!(ExperimentConfig::new(d.clone(), 1, 0, 1, 0.0, 0).is_err());
        assert_eq!(ExperimentConfig::new(d.clone(), 1, 1, 0, 0.0, 0), Err(Error::ZeroReplicates));
        assert!(ExperimentConfig::new(d, 1, 1, 1, 1.2, 0).is_err());
        let mc = PromptDomain::new(vec![PromptSpec::multiclass("a", vec![0.6, 0.4], 1.0).unwrap()]).unwrap();
        assert_eq!(ExperimentConfig::new(mc, 1, 1, 1, 0.5, 0), Err(Error::CorrelatedMulticlass));
    }

    #[test]
    fn sweep_rejects_over_budget_first() {
        let cfg = single(0.3, 1, 1, 10);
        assert_eq!(
            mse_sweep(10, &[(2, 5), (3, 4)], &cfg),
            Err(Error::SplitOverBudget { m: 3, n: 4, calls: 12, budget: 10 })
        );
        let rows = mse_sweep(10, &[(2, 5), (1, 10), (10, 1)], &cfg).unwrap();
        assert_eq!(rows.iter().map(|r| (r.m, r.n)).collect::<Vec<_>>(), vec![(2, 5), (1, 10), (10, 1)]);
    }

    #[test]
    fn one_call_per_prompt_estimates_zero() {
        // n = 1 forces Ê = 0, so every squared error is E².
        let domain = PromptDomain::uniform_binary(&[0.1, 0.4, 0.8]).unwrap();
        let cfg = ExperimentConfig::new(domain, 12, 1, 200, 0.0, 8).unwrap();
        let report = run_experiment(&cfg).unwrap();
        let e = report.true_error;
        assert_eq!(report.mean_estimate, 0.0);
        assert!((report.empirical_mse - e * e).abs() < 1e-15);
    }

    #[test]
    fn multiclass_runs_without_decomposition() {
        let mc = PromptDomain::new(vec![
            PromptSpec::multiclass("a", vec![0.6, 0.3, 0.1], 1.0).unwrap(),
            PromptSpec::multiclass("b", vec![0.2, 0.2, 0.6], 2.0).unwrap(),
        ])
        .unwrap();
        let cfg = ExperimentConfig::new(mc, 4, 5, 300, 0.0, 4).unwrap();
        let report = run_experiment(&cfg).unwrap();
        assert!(report.decomposition.is_none());
        assert!(!report.bound_applies);
        assert!(report.empirical_mse > 0.0);
    }
}
