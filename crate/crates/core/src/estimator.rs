//! Plug-in self-consistency estimators and ground-truth errors for synthetic
//! domains.
//!
//! Binary prompts have error `min{p, 1-p}`; multiclass prompts `1 - max_c p_c`.
//! Estimates replace the probabilities by observed frequencies.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sum::{self, CompensatedSum};
use crate::tolerance::POLICY;

/// Response distribution of a single prompt.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PromptDistribution {
    /// Probability of a positive response.
    Binary(f64),
    /// Probability of each class.
    Multiclass(Vec<f64>),
}

impl PromptDistribution {
    pub fn is_binary(&self) -> bool {
        matches!(self, Self::Binary(_))
    }

    pub fn classes(&self) -> usize {
        match self {
            Self::Binary(_) => 2,
            Self::Multiclass(v) => v.len(),
        }
    }

    /// `min{p, 1-p}` or `1 - max_c p_c`.
    pub fn error(&self) -> f64 {
        match self {
            Self::Binary(p) => p.min(1.0 - p),
            Self::Multiclass(v) => 1.0 - v.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// A prompt with known response distribution and unnormalized weight `q(x)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PromptSpec {
    id: String,
    distribution: PromptDistribution,
    weight: f64,
}

impl PromptSpec {
    pub fn binary(id: impl Into<String>, p: f64, weight: f64) -> Result<Self> {
        Self::new(id, PromptDistribution::Binary(p), weight)
    }

    pub fn multiclass(id: impl Into<String>, probs: Vec<f64>, weight: f64) -> Result<Self> {
        Self::new(id, PromptDistribution::Multiclass(probs), weight)
    }

    pub fn new(id: impl Into<String>, distribution: PromptDistribution, weight: f64) -> Result<Self> {
        let id = id.into();
        match &distribution {
            PromptDistribution::Binary(p) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::Probability(*p));
                }
            }
            PromptDistribution::Multiclass(v) => {
                let reason = if v.len() < 2 {
                    Some("needs at least two classes")
                } else if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    Some("components must lie in [0, 1]")
                } else if (sum::sum(v.iter().copied()) - 1.0).abs() > POLICY.distribution_sum {
                    Some("components must sum to 1")
                } else {
                    None
                };
                if let Some(reason) = reason {
                    return Err(Error::ProbabilityVector { id, reason });
                }
            }
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::Weight { id, weight });
        }
        Ok(Self { id, distribution, weight })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn distribution(&self) -> &PromptDistribution {
        &self.distribution
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn is_binary(&self) -> bool {
        self.distribution.is_binary()
    }
}

/// `min{p, 1-p}` for binary prompts, `1 - max_c p_c` for multiclass.
pub fn true_error(spec: &PromptSpec) -> f64 {
    spec.distribution.error()
}

/// A nonempty set of prompts with positive total weight and unique ids.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PromptDomain {
    prompts: Vec<PromptSpec>,
    total_weight: f64,
}

impl PromptDomain {
    pub fn new(prompts: Vec<PromptSpec>) -> Result<Self> {
        if prompts.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let mut seen = BTreeSet::new();
        for p in &prompts {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::DuplicateId(p.id.clone()));
            }
        }
        let total_weight = sum::sum(prompts.iter().map(|p| p.weight));
        if total_weight <= 0.0 {
            return Err(Error::ZeroTotalWeight);
        }
        Ok(Self { prompts, total_weight })
    }

    /// Binary prompts with unit weights.
    pub fn uniform_binary(ps: &[f64]) -> Result<Self> {
        let prompts = ps
            .iter()
            .enumerate()
            .map(|(i, &p)| PromptSpec::binary(alloc::format!("x{i}"), p, 1.0))
            .collect::<Result<Vec<_>>>()?;
        Self::new(prompts)
    }

    pub fn prompts(&self) -> &[PromptSpec] {
        &self.prompts
    }

    pub fn len(&self) -> usize {
        self.prompts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// `q(x_i) = weight_i / Σ weight`
    pub fn probability(&self, index: usize) -> f64 {
        self.prompts[index].weight / self.total_weight
    }

    pub fn is_binary(&self) -> bool {
        self.prompts.iter().all(PromptSpec::is_binary)
    }
}

/// `Σ_x true_error(x)·q(x)`.
pub fn domain_true_error(domain: &PromptDomain) -> f64 {
    let weighted = sum::sum(domain.prompts.iter().map(|p| true_error(p) * p.weight));
    weighted / domain.total_weight
}

/// Observed responses for one prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Tally {
    Binary { n: u64, k: u64 },
    /// Per-class counts; `n` is their sum.
    Multiclass { counts: Vec<u64> },
}

impl Tally {
    pub fn n(&self) -> u64 {
        match self {
            Self::Binary { n, .. } => *n,
            Self::Multiclass { counts } => counts.iter().sum(),
        }
    }

    /// `min{k, n-k}/n` or `(n - max_c count_c)/n`.
    pub fn plugin_estimate(&self) -> f64 {
        match self {
            Self::Binary { n, k } => (*k).min(n - k) as f64 / *n as f64,
            Self::Multiclass { counts } => {
                let n: u64 = counts.iter().sum();
                let max = counts.iter().copied().max().unwrap_or(0);
                (n - max) as f64 / n as f64
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResponseCounts {
    prompt_id: String,
    tally: Tally,
}

impl ResponseCounts {
    pub fn binary(prompt_id: impl Into<String>, k: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroTrials);
        }
        if k > n {
            return Err(Error::CountOutOfRange { k, n });
        }
        Ok(Self { prompt_id: prompt_id.into(), tally: Tally::Binary { n, k } })
    }

    /// Per-class counts. Classes with zero count are allowed.
    pub fn multiclass(prompt_id: impl Into<String>, counts: Vec<u64>) -> Result<Self> {
        if counts.iter().sum::<u64>() == 0 {
            return Err(Error::ZeroTrials);
        }
        Ok(Self { prompt_id: prompt_id.into(), tally: Tally::Multiclass { counts } })
    }

    /// Multiclass counts checked against an expected total.
    pub fn multiclass_with_total(prompt_id: impl Into<String>, counts: Vec<u64>, n: u64) -> Result<Self> {
        let sum = counts.iter().sum::<u64>();
        let id = prompt_id.into();
        if sum != n {
            return Err(Error::CountSum { id, sum, n });
        }
        Self::multiclass(id, counts)
    }

    pub(crate) fn from_tally(prompt_id: impl Into<String>, tally: Tally) -> Self {
        Self { prompt_id: prompt_id.into(), tally }
    }

    pub fn prompt_id(&self) -> &str {
        &self.prompt_id
    }

    pub fn tally(&self) -> &Tally {
        &self.tally
    }

    pub fn n(&self) -> u64 {
        self.tally.n()
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.tally, Tally::Binary { .. })
    }

    /// Class with the most responses, ties toward the lowest index. For binary
    /// tallies class 1 is "positive".
    pub fn majority_label(&self) -> usize {
        match &self.tally {
            Tally::Binary { n, k } => usize::from(*k > n - k),
            Tally::Multiclass { counts } => {
                let mut best = 0;
                for (i, &c) in counts.iter().enumerate() {
                    if c > counts[best] {
                        best = i;
                    }
                }
                best
            }
        }
    }
}

/// `min{k/n, 1-k/n}` or `1 - max_c count_c/n`, with a single division.
pub fn per_prompt_estimate(counts: &ResponseCounts) -> f64 {
    counts.tally.plugin_estimate()
}

/// The domain estimate and the per-prompt plug-ins it averages.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DomainEstimate {
    pub per_prompt: Vec<(String, f64)>,
    pub value: f64,
    /// `Some(n)` when every prompt received the same number of calls.
    pub common_n: Option<u64>,
}

impl DomainEstimate {
    pub fn m(&self) -> usize {
        self.per_prompt.len()
    }
}

/// `(1/m) Σ per_prompt_estimate(sample_i)`. Prompts may have different `n`;
/// `common_n` records whether they did not.
pub fn domain_estimate(samples: &[ResponseCounts]) -> Result<DomainEstimate> {
    let first = samples.first().ok_or(Error::EmptySample)?;
    if samples.iter().any(|s| s.is_binary() != first.is_binary()) {
        return Err(Error::MixedKinds);
    }
    let n0 = first.n();
    let common_n = samples.iter().all(|s| s.n() == n0).then_some(n0);
    let mut acc = CompensatedSum::new();
    let per_prompt = samples
        .iter()
        .map(|s| {
            let e = per_prompt_estimate(s);
            acc.add(e);
            (s.prompt_id.clone(), e)
        })
        .collect::<Vec<_>>();
    Ok(DomainEstimate {
        value: acc.value() / samples.len() as f64,
        per_prompt,
        common_n,
    })
}
