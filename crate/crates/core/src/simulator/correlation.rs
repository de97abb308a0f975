use crate::error::{Error, Result};

/// Exchangeable correlation among the `n` calls made for one prompt.
///
/// For `0 < ρ < 1` a prompt with mean `p` draws a latent success rate
/// `θ ~ Beta(α, β)` with `α = p(1-ρ)/ρ`, `β = (1-p)(1-ρ)/ρ`, then `k ~
/// Binomial(n, θ)`. This keeps the per-call marginal at `p` and gives pairwise
/// correlation `1/(α+β+1) = ρ`. `ρ = 0` is iid; `ρ = 1` repeats one draw.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationModel {
    rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CorrelationKind {
    Iid,
    BetaBinomial,
}

impl CorrelationModel {
    pub const IID: Self = Self { rho: 0.0 };

    pub fn new(rho: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&rho) {
            Ok(Self { rho })
        } else {
            Err(Error::Correlation(rho))
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn kind(&self) -> CorrelationKind {
        if self.rho == 0.0 {
            CorrelationKind::Iid
        } else {
            CorrelationKind::BetaBinomial
        }
    }

    /// `(α, β)` for a prompt with mean `p`; `None` when the mixture is
    /// degenerate (`ρ ∈ {0, 1}` or `p ∈ {0, 1}`).
    pub fn beta_shape(&self, p: f64) -> Option<(f64, f64)> {
        if self.rho <= 0.0 || self.rho >= 1.0 || p <= 0.0 || p >= 1.0 {
            return None;
        }
        let scale = (1.0 - self.rho) / self.rho;
        Some((p * scale, (1.0 - p) * scale))
    }

    /// Pairwise correlation of two calls under `Beta(α, β)` mixing.
    pub fn implied_correlation(alpha: f64, beta: f64) -> f64 {
        1.0 / (alpha + beta + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_recover_rho() {
        for rho in [0.01, 0.25, 0.5, 0.75, 0.99] {
            let model = CorrelationModel::new(rho).unwrap();
            for p in [0.01, 0.3, 0.5, 0.8] {
                let (a, b) = model.beta_shape(p).unwrap();
                assert!((a / (a + b) - p).abs() < 1e-12);
                assert!((CorrelationModel::implied_correlation(a, b) - rho).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(CorrelationModel::IID.beta_shape(0.4), None);
        assert_eq!(CorrelationModel::new(1.0).unwrap().beta_shape(0.4), None);
        assert_eq!(CorrelationModel::new(0.5).unwrap().beta_shape(0.0), None);
        assert_eq!(CorrelationModel::IID.kind(), CorrelationKind::Iid);
        assert!(CorrelationModel::new(1.5).is_err());
        assert!(CorrelationModel::new(f64::NAN).is_err());
    }
}
