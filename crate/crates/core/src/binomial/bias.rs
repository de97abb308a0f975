use core::f64::consts::PI;

use super::pmf::{central_binom_ratio, BinomialPmf};
use super::{check_even, check_probability};
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BiasDecomposition {
    pub n: u64,
    pub p: f64,
    /// `min{p, 1-p}`
    pub true_error: f64,
    /// `E[min{k/n, 1-k/n}]` under `k ~ Binomial(n, p)`
    pub expected_estimate: f64,
    /// `true_error - expected_estimate`
    pub bias: f64,
}

fn plugin_value(n: u64, k: u64) -> f64 {
    k.min(n - k) as f64 / n as f64
}

/// `E[min{k, n-k}] / n` by full enumeration over `k`.
pub fn expected_plugin_error(n: u64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroTrials);
    }
    let pmf = BinomialPmf::new(n, p)?;
    Ok(expected_plugin_error_from(&pmf))
}

pub(crate) fn expected_plugin_error_from(pmf: &BinomialPmf) -> f64 {
    let n = pmf.n();
    let mut acc = CompensatedSum::new();
    for (k, pr) in pmf.iter() {
        acc.add(pr * k.min(n - k) as f64);
    }
    acc.value() / n as f64
}

pub fn bias_exact(n: u64, p: f64) -> Result<BiasDecomposition> {
    let expected_estimate = expected_plugin_error(n, p)?;
    let true_error = p.min(1.0 - p);
    Ok(BiasDecomposition {
        n,
        p,
        true_error,
        expected_estimate,
        bias: true_error - expected_estimate,
    })
}

/// `(1/n) Σ_{k > n/2} (2k - n) C(n,k) p^k (1-p)^{n-k}`, the bias written as
/// an upper-tail sum. Only valid for even `n` and `p ≤ 1/2`.
pub fn bias_tail_identity(n: u64, p: f64) -> Result<f64> {
    let n = check_even(n)?;
    let p = check_probability(p)?;
    if p > 0.5 {
        return Err(Error::UpperHalf(p));
    }
    Ok(tail_identity_from(&BinomialPmf::new(n, p)?))
}

pub(crate) fn tail_identity_from(pmf: &BinomialPmf) -> f64 {
    let n = pmf.n();
    let mut acc = CompensatedSum::new();
    for (k, pr) in pmf.iter().skip(n as usize / 2 + 1) {
        acc.add((2 * k - n) as f64 * pr);
    }
    acc.value() / n as f64
}

/// Upper bounds on the worst-case bias for even `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BiasUpperBound {
    pub n: u64,
    /// `(1/2)·C(n, n/2)·2^{-n}`, attained at `p = 1/2`.
    pub central: f64,
    /// `√(1/(2πn))`
    pub closed_form: f64,
}

pub fn bias_upper_bound(n: u64) -> Result<BiasUpperBound> {
    let central = 0.5 * central_binom_ratio(n)?;
    Ok(BiasUpperBound {
        n,
        central,
        closed_form: libm::sqrt(1.0 / (2.0 * PI * n as f64)),
    })
}

/// `Var[min{k/n, 1-k/n}]` by enumeration (two-pass, centred).
pub fn plugin_variance_exact(n: u64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroTrials);
    }
    Ok(variance_from(&BinomialPmf::new(n, p)?))
}

pub(crate) fn variance_from(pmf: &BinomialPmf) -> f64 {
    let n = pmf.n();
    let mean = pmf.expect(|k| plugin_value(n, k));
    pmf.expect(|k| {
        let d = plugin_value(n, k) - mean;
        d * d
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct enumeration over all 2^n response sequences.
    fn brute_expected(n: u32, p: f64) -> f64 {
        let mut total = CompensatedSum::new();
        for mask in 0u32..(1 << n) {
            let mut prob = 1.0;
            for bit in 0..n {
                prob *= if mask >> bit & 1 == 1 { p } else { 1.0 - p };
            }
            let k = mask.count_ones();
            total.add(prob * f64::from(k.min(n - k)));
        }
        total.value() / f64::from(n)
    }

    #[test]
    fn expected_examples() {
        assert!((expected_plugin_error(2, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((expected_plugin_error(2, 0.25).unwrap() - 0.1875).abs() < 1e-15);
        for p in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert_eq!(expected_plugin_error(1, p).unwrap(), 0.0);
        }
        assert_eq!(expected_plugin_error(0, 0.5), Err(Error::ZeroTrials));
    }

    #[test]
    fn expected_matches_sequence_enumeration() {
        for n in 1..=14 {
            for &p in &[0.0, 0.05, 0.3, 0.5, 0.71, 1.0] {
                let want = brute_expected(n, p);
                let got = expected_plugin_error(u64::from(n), p).unwrap();
                assert!((got - want).abs() < 2e-15, "n={n} p={p}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn bias_examples() {
        assert!((bias_exact(2, 0.5).unwrap().bias - 0.25).abs() < 1e-15);
        assert!((bias_exact(2, 0.25).unwrap().bias - 0.0625).abs() < 1e-15);
        let b = bias_exact(9, 0.0).unwrap();
        assert_eq!((b.true_error, b.expected_estimate, b.bias), (0.0, 0.0, 0.0));
    }

    #[test]
    fn tail_identity_examples() {
        assert!((bias_tail_identity(2, 0.25).unwrap() - 0.0625).abs() < 1e-15);
        assert!((bias_tail_identity(2, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(bias_tail_identity(4, 0.0).unwrap(), 0.0);
        assert_eq!(bias_tail_identity(3, 0.2), Err(Error::OddTrials(3)));
        assert_eq!(bias_tail_identity(4, 0.6), Err(Error::UpperHalf(0.6)));
    }

    #[test]
    fn upper_bound_examples() {
        let b = bias_upper_bound(2).unwrap();
        assert!((b.closed_form - 0.282_094_8).abs() < 1e-7);
        assert!((b.central - 0.25).abs() < 1e-15);
        assert!((bias_exact(2, 0.5).unwrap().bias - b.central).abs() < 1e-15);
        assert!((bias_upper_bound(100).unwrap().closed_form - 0.039_894_2).abs() < 1e-7);
        assert_eq!(bias_upper_bound(7), Err(Error::OddTrials(7)));
    }

    #[test]
    fn odd_n_one_exceeds_closed_form() {
        // n = 1 is why odd n gets no analytic bound.
        let b = bias_exact(1, 0.5).unwrap().bias;
        assert_eq!(b, 0.5);
        assert!(b > libm::sqrt(1.0 / (2.0 * PI)));
    }

    #[test]
    fn variance_examples() {
        assert_eq!(plugin_variance_exact(1, 0.5).unwrap(), 0.0);
        let v = plugin_variance_exact(2, 0.5).unwrap();
        assert!((v - 0.0625).abs() < 1e-15);
        assert!(v <= 1.0 / 8.0);
    }
}
