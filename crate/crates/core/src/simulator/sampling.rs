use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution};

use super::correlation::CorrelationModel;
use crate::error::{Error, Result};
use crate::estimator::{PromptDistribution, PromptDomain, PromptSpec, ResponseCounts, Tally};

/// Random stream for one replicate: ChaCha8 keyed by `seed`, stream
/// `replicate`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Draws prompt indices with probability `q(x)` (inverse CDF over the
/// cumulative weights).
#[derive(Debug, Clone)]
pub struct PromptSampler {
    cumulative: Vec<f64>,
}

impl PromptSampler {
    pub fn new(domain: &PromptDomain) -> Self {
        let mut acc = 0.0;
        let cumulative = domain
            .prompts()
            .iter()
            .map(|p| {
                acc += p.weight();
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("domain is nonempty");
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        if i < self.cumulative.len() {
            return i;
        }
        // u rounded up to the total: take the last prompt with positive weight.
        let mut j = self.cumulative.len() - 1;
        while j > 0 && self.cumulative[j] == self.cumulative[j - 1] {
            j -= 1;
        }
        j
    }
}

/// One prompt drawn according to `q`.
pub fn sample_prompt<'d, R: Rng + ?Sized>(domain: &'d PromptDomain, rng: &mut R) -> &'d PromptSpec {
    &domain.prompts()[PromptSampler::new(domain).sample(rng)]
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
    }
}

/// `n` independent calls: `Binomial(n, p)` for binary prompts,
/// `Multinomial(n, p_vec)` (as sequential conditional binomials) otherwise.
pub fn sample_counts_iid<R: Rng + ?Sized>(spec: &PromptSpec, n: u64, rng: &mut R) -> ResponseCounts {
    assert!(n > 0, "n must be positive");
    ResponseCounts::from_tally(spec.id(), draw_iid(spec.distribution(), n, rng))
}

pub(crate) fn draw_iid<R: Rng + ?Sized>(dist: &PromptDistribution, n: u64, rng: &mut R) -> Tally {
    match dist {
        PromptDistribution::Binary(p) => Tally::Binary { n, k: binomial(n, *p, rng) },
        PromptDistribution::Multiclass(probs) => {
            let mut remaining = n;
            let mut mass = 1.0;
            let mut counts = Vec::with_capacity(probs.len());
            for (c, &pc) in probs.iter().enumerate() {
                let k = if c + 1 == probs.len() {
                    remaining
                } else if remaining == 0 || mass <= 0.0 {
                    0
                } else {
                    binomial(remaining, (pc / mass).clamp(0.0, 1.0), rng)
                };
                counts.push(k);
                remaining -= k;
                mass -= pc;
            }
            Tally::Multiclass { counts }
        }
    }
}

/// `n` exchangeable calls with intraclass correlation `ρ` (binary only).
pub fn sample_counts_correlated<R: Rng + ?Sized>(
    spec: &PromptSpec,
    n: u64,
    model: &CorrelationModel,
    rng: &mut R,
) -> Result<ResponseCounts> {
    let p = match spec.distribution() {
        PromptDistribution::Binary(p) => *p,
        PromptDistribution::Multiclass(_) => return Err(Error::CorrelatedMulticlass),
    };
    if n == 0 {
        return Err(Error::ZeroTrials);
    }
    let k = draw_correlated(p, n, model, rng);
    ResponseCounts::binary(spec.id(), k, n)
}

pub(crate) fn draw_correlated<R: Rng + ?Sized>(p: f64, n: u64, model: &CorrelationModel, rng: &mut R) -> u64 {
    let rho = model.rho();
    if rho == 0.0 {
        binomial(n, p, rng)
    } else if rho == 1.0 {
        if rng.random::<f64>() < p {
            n
        } else {
            0
        }
    } else {
        match model.beta_shape(p) {
            Some((alpha, beta)) => {
                let theta = Beta::new(alpha, beta).expect("positive shapes").sample(rng);
                binomial(n, theta, rng)
            }
            None => binomial(n, p, rng),
        }
    }
}
