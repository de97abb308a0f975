use alloc::vec::Vec;
use core::f64::consts::PI;

use super::factorial::stirling_remainder;
use super::{check_even, check_probability};
use crate::error::{Error, Result};

/// `x ln(x/np) + np - x`, the deviance part of the saddle-point expansion.
/// Switches to a series when `x ≈ np` to avoid cancellation.
fn deviance(x: f64, np: f64) -> f64 {
    if libm::fabs(x - np) < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        let mut j = 1.0;
        loop {
            ej *= v2;
            let next = s + ej / (2.0 * j + 1.0);
            if next == s {
                return s;
            }
            s = next;
            j += 1.0;
        }
    }
    x * libm::log(x / np) + np - x
}

/// Natural log of the binomial probability `C(n,k) p^k (1-p)^{n-k}`.
///
/// Uses the saddle-point form of the pmf: the Stirling remainders of `n`, `k`
/// and `n-k` plus two deviance terms, so there is no cancellation between
/// large log-factorials. Returns `-inf` for impossible outcomes and treats
/// `0·ln 0` as `0` at the endpoints.
pub fn binom_log_pmf(n: u64, k: u64, p: f64) -> Result<f64> {
    let p = check_probability(p)?;
    if k > n {
        return Err(Error::CountOutOfRange { k, n });
    }
    Ok(log_pmf_unchecked(n, k, p))
}

pub(crate) fn log_pmf_unchecked(n: u64, k: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if k == 0 {
        return nf * libm::log1p(-p);
    }
    if k == n {
        return nf * libm::log(p);
    }
    let kf = k as f64;
    let rest = nf - kf;
    let lc = stirling_remainder(n)
        - stirling_remainder(k)
        - stirling_remainder(n - k)
        - deviance(kf, nf * p)
        - deviance(rest, nf * q);
    let lf = libm::log(2.0 * PI) + libm::log(kf) + libm::log1p(-kf / nf);
    lc - 0.5 * lf
}

/// `C(n, n/2)·2^{-n}`, the probability of an exact tie among `n` fair coin
/// flips.
pub fn central_binom_ratio(n: u64) -> Result<f64> {
    let n = check_even(n)?;
    Ok(libm::exp(log_pmf_unchecked(n, n / 2, 0.5)))
}

// Stride between fresh saddle-point evaluations when tabulating a pmf; the
// ratio recurrence in between adds at most a few ulps per step.
const ANCHOR_STRIDE: u64 = 32;

/// The whole pmf of `Binomial(n, p)` for `k = 0..=n`.
///
/// Entries at multiples of 32 come straight from [`binom_log_pmf`]; the rest
/// follow from the ratio `P(k)/P(k-1) = (n-k+1)/k · p/(1-p)`, keeping the
/// relative error of every entry within a few hundred ulps.
#[derive(Debug, Clone)]
pub struct BinomialPmf {
    n: u64,
    p: f64,
    probs: Vec<f64>,
}

impl BinomialPmf {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        let p = check_probability(p)?;
        let len = n as usize + 1;
        let mut probs = Vec::with_capacity(len);
        let q = 1.0 - p;
        if p == 0.0 || q == 0.0 {
            probs.resize(len, 0.0);
            let at = if p == 0.0 { 0 } else { n as usize };
            probs[at] = 1.0;
            return Ok(Self { n, p, probs });
        }
        let odds = p / q;
        let mut prev = 0.0;
        for k in 0..=n {
            let v = if k % ANCHOR_STRIDE == 0 {
                libm::exp(log_pmf_unchecked(n, k, p))
            } else {
                prev * ((n - k + 1) as f64 / k as f64) * odds
            };
            probs.push(v);
            prev = v;
        }
        Ok(Self { n, p, probs })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `(k, P(K = k))` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs.iter().enumerate().map(|(k, &pr)| (k as u64, pr))
    }

    /// `E[f(K)]` with compensated summation.
    pub fn expect(&self, mut f: impl FnMut(u64) -> f64) -> f64 {
        crate::sum::sum(self.iter().filter(|&(_, pr)| pr > 0.0).map(|(k, pr)| pr * f(k)))
    }
}
