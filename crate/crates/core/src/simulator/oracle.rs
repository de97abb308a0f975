use alloc::vec::Vec;

use super::experiment::pmf_for;
use crate::error::{Error, Result};
use crate::estimator::{domain_true_error, PromptDomain};
use crate::sum::CompensatedSum;

/// Largest enumeration `|X|^m · (n+1)^m` the exact oracle accepts.
pub const ORACLE_CELL_LIMIT: u128 = 10_000_000;

/// `E[(E - Ê)²]` by brute force: every ordered draw of `m` prompts (weighted
/// by `q`) and every count outcome for each (weighted by its binomial pmf).
pub fn exact_mse_oracle(domain: &PromptDomain, m: u64, n: u64) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::ZeroSplit { m, n });
    }
    let per_draw = domain.len() as u128 * (n as u128 + 1);
    let cells = (0..m).try_fold(1u128, |acc, _| acc.checked_mul(per_draw));
    match cells {
        Some(c) if c <= ORACLE_CELL_LIMIT => {}
        other => {
            return Err(Error::EnumerationTooLarge {
                cells: other.unwrap_or(u128::MAX),
                limit: ORACLE_CELL_LIMIT,
            })
        }
    }

    // Every (prompt, k) outcome of a single draw with its probability.
    let mut outcomes: Vec<(f64, f64)> = Vec::with_capacity(per_draw as usize);
    for (i, spec) in domain.prompts().iter().enumerate() {
        let q = domain.probability(i);
        let pmf = pmf_for(spec.distribution(), n)?;
        for (k, pr) in pmf.iter() {
            outcomes.push((q * pr, k.min(n - k) as f64 / n as f64));
        }
    }

    let truth = domain_true_error(domain);
    let mut acc = CompensatedSum::new();
    enumerate(&outcomes, m as usize, 1.0, 0.0, &mut |weight, total| {
        let diff = truth - total / m as f64;
        acc.add(weight * diff * diff);
    });
    Ok(acc.value())
}

fn enumerate(outcomes: &[(f64, f64)], depth: usize, weight: f64, total: f64, leaf: &mut impl FnMut(f64, f64)) {
    if depth == 0 {
        leaf(weight, total);
        return;
    }
    for &(w, e) in outcomes {
        enumerate(outcomes, depth - 1, weight * w, total + e, leaf);
    }
}
