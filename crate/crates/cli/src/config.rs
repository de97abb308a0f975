//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "domain": { "prompts": [ { "id": "a", "p": 0.5 } ] },
//!   "m": 1, "n": 2, "replicates": 100000, "rho": 0.0, "seed": 7
//! }
//! ```
//!
//! `domain` holds either inline `prompts` (binary `p` or class
//! probabilities `p_vec`, optional `weight`) or a `generator`:
//! `grid` (evenly spaced `p` in `[low, high]`), `beta` (`p ~ Beta(alpha,
//! beta)`) or `dirichlet` (class probabilities `~ Dir(concentration)`).
//! Random generators carry their own `seed`, so a config always names one
//! domain. Unknown fields are rejected.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma};
use selfconsist_core::estimator::{PromptDomain, PromptSpec};
use selfconsist_core::simulator::ExperimentConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
}

impl ConfigError {
    fn field(field: impl Into<String>, message: impl ToString) -> Self {
        Self::Field { field: field.into(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub domain: DomainSection,
    #[serde(default)]
    pub m: Option<u64>,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sampling: Sampling,
}

fn default_replicates() -> u64 {
    10_000
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    WithReplacement,
    WithoutReplacement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompts: Option<Vec<PromptEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_vec: Option<Vec<f64>>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    Grid { count: usize, low: f64, high: f64 },
    Beta { count: usize, alpha: f64, beta: f64, seed: u64 },
    Dirichlet { count: usize, concentration: Vec<f64>, seed: u64 },
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<root>".to_owned() } else { path };
            ConfigError::field(field, e.into_inner())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn build_domain(&self) -> Result<PromptDomain, ConfigError> {
        if self.sampling == Sampling::WithoutReplacement {
            return Err(ConfigError::field("sampling", "only with_replacement prompt sampling is supported"));
        }
        let specs = match (&self.domain.prompts, &self.domain.generator) {
            (Some(prompts), None) => inline_specs(prompts)?,
            (None, Some(generator)) => generated_specs(generator)?,
            _ => return Err(ConfigError::field("domain", "exactly one of `prompts` or `generator` is required")),
        };
        PromptDomain::new(specs).map_err(|e| ConfigError::field("domain", e))
    }

    /// The experiment with `seed` and `m × n` filled in.
    pub fn experiment(&self, seed: u64, split: Option<(u64, u64)>) -> Result<ExperimentConfig, ConfigError> {
        let domain = self.build_domain()?;
        let (m, n) = match split {
            Some(split) => split,
            None => (
                self.m.ok_or_else(|| ConfigError::field("m", "missing"))?,
                self.n.ok_or_else(|| ConfigError::field("n", "missing"))?,
            ),
        };
        ExperimentConfig::new(domain, m, n, self.replicates, self.rho, seed).map_err(|e| {
            let field = match e {
                selfconsist_core::Error::ZeroSplit { m: 0, .. } => "m",
                selfconsist_core::Error::ZeroSplit { .. } => "n",
                selfconsist_core::Error::ZeroReplicates => "replicates",
                _ => "rho",
            };
            ConfigError::field(field, e)
        })
    }
}

fn inline_specs(prompts: &[PromptEntry]) -> Result<Vec<PromptSpec>, ConfigError> {
    prompts
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            let spec = match (entry.p, &entry.p_vec) {
                (Some(p), None) => PromptSpec::binary(entry.id.clone(), p, entry.weight),
                (None, Some(v)) => PromptSpec::multiclass(entry.id.clone(), v.clone(), entry.weight),
                _ => {
                    return Err(ConfigError::field(
                        format!("domain.prompts[{i}]"),
                        "exactly one of `p` or `p_vec` is required",
                    ))
                }
            };
            spec.map_err(|e| ConfigError::field(format!("domain.prompts[{i}]"), e))
        })
        .collect()
}

fn generated_specs(generator: &Generator) -> Result<Vec<PromptSpec>, ConfigError> {
    let field = |name: &str, message: &str| ConfigError::field(format!("domain.generator.{name}"), message);
    let count = match generator {
        Generator::Grid { count, .. } | Generator::Beta { count, .. } | Generator::Dirichlet { count, .. } => *count,
    };
    if count == 0 {
        return Err(field("count", "must be at least 1"));
    }
    let id = |i: usize| format!("x{i}");
    let specs = match generator {
        Generator::Grid { low, high, .. } => {
            if !(0.0..=1.0).contains(low) || !(0.0..=1.0).contains(high) || low > high {
                return Err(field("low", "need 0 ≤ low ≤ high ≤ 1"));
            }
            (0..count)
                .map(|i| {
                    let p = if count == 1 { *low } else { low + (high - low) * i as f64 / (count - 1) as f64 };
                    PromptSpec::binary(id(i), p.clamp(0.0, 1.0), 1.0)
                })
                .collect::<Result<Vec<_>, _>>()
        }
        Generator::Beta { alpha, beta, seed, .. } => {
            let dist = Beta::new(*alpha, *beta).map_err(|e| field("alpha", &e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..count).map(|i| PromptSpec::binary(id(i), dist.sample(&mut rng), 1.0)).collect()
        }
        Generator::Dirichlet { concentration, seed, .. } => {
            if concentration.len() < 2 {
                return Err(field("concentration", "need at least two classes"));
            }
            // Dirichlet draws as normalized independent Gamma(α_j, 1) variates.
            let gammas = concentration
                .iter()
                .map(|&a| Gamma::new(a, 1.0))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| field("concentration", &e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..count)
                .map(|i| {
                    let draw = gammas.iter().map(|g| g.sample(&mut rng)).collect();
                    PromptSpec::multiclass(id(i), normalized(draw), 1.0)
                })
                .collect()
        }
    };
    specs.map_err(|e| ConfigError::field("domain.generator", e))
}

/// Rescales so the entries sum to one to within rounding.
fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use selfconsist_core::estimator::PromptDistribution;

    #[test]
    fn inline_binary_config() {
        let cfg = ConfigFile::parse(
            r#"{"domain":{"prompts":[{"id":"a","p":0.5}]},"m":1,"n":2,"replicates":10,"seed":3}"#,
        )
        .unwrap();
        let exp = cfg.experiment(cfg.seed.unwrap(), None).unwrap();
        assert_eq!((exp.m, exp.n, exp.replicates, exp.seed), (1, 2, 10, 3));
        assert_eq!(exp.domain.len(), 1);
    }

    #[test]
    fn unknown_field_is_named() {
        let err = ConfigFile::parse(r#"{"domain":{"prompts":[{"id":"a","p":0.5,"wieght":2}]}}"#).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("domain.prompts[0]"), "{text}");
        assert!(text.contains("wieght"), "{text}");
    }

    #[test]
    fn wrong_type_is_named() {
        let err = ConfigFile::parse(r#"{"domain":{"prompts":[]},"m":"two"}"#).unwrap_err();
        assert!(err.to_string().contains("`m`"), "{err}");
    }

    #[test]
    fn bad_probability_is_named() {
        let cfg = ConfigFile::parse(r#"{"domain":{"prompts":[{"id":"a","p":0.1},{"id":"b","p":1.5}]},"m":1,"n":2}"#)
            .unwrap();
        let err = cfg.build_domain().unwrap_err();
        assert!(err.to_string().contains("domain.prompts[1]"), "{err}");
    }

    #[test]
    fn without_replacement_rejected() {
        let cfg = ConfigFile::parse(r#"{"domain":{"prompts":[{"id":"a","p":0.1}]},"sampling":"without_replacement"}"#)
            .unwrap();
        assert!(cfg.build_domain().unwrap_err().to_string().contains("sampling"));
    }

    #[test]
    fn grid_generator_spans_range() {
        let cfg = ConfigFile::parse(r#"{"domain":{"generator":{"kind":"grid","count":5,"low":0.0,"high":0.4}}}"#)
            .unwrap();
        let domain = cfg.build_domain().unwrap();
        let ps: Vec<f64> = domain
            .prompts()
            .iter()
            .map(|spec| match spec.distribution() {
                PromptDistribution::Binary(p) => *p,
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        let want = [0.0, 0.1, 0.2, 0.3, 0.4];
        for (got, want) in ps.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn seeded_generators_are_reproducible() {
        for text in [
            r#"{"domain":{"generator":{"kind":"beta","count":20,"alpha":2.0,"beta":5.0,"seed":9}}}"#,
            r#"{"domain":{"generator":{"kind":"dirichlet","count":20,"concentration":[1.0,1.0,1.0],"seed":9}}}"#,
        ] {
            let cfg = ConfigFile::parse(text).unwrap();
            assert_eq!(cfg.build_domain().unwrap(), cfg.build_domain().unwrap());
        }
    }

    #[test]
    fn domain_needs_exactly_one_source() {
        let cfg = ConfigFile::parse(r#"{"domain":{}}"#).unwrap();
        assert!(cfg.build_domain().unwrap_err().to_string().contains("`domain`"));
    }

    #[test]
    fn missing_split_is_named() {
        let cfg = ConfigFile::parse(r#"{"domain":{"prompts":[{"id":"a","p":0.1}]},"m":2}"#).unwrap();
        assert!(cfg.experiment(1, None).unwrap_err().to_string().contains("`n`"));
        assert!(cfg.experiment(1, Some((2, 4))).is_ok());
    }
}
