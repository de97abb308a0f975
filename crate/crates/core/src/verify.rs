//! Battery of the analytic inequalities behind the MSE bound, each checked
//! exhaustively over `n ≤ max_n` and a grid of `p`, reporting the tightest
//! slack and the `(n, p)` that witnesses it.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::binomial::{
    binom_log_pmf, expected_plugin_error_from, log_factorial, robbins_bounds, stirling_remainder,
    tail_identity_from, variance_from, BinomialPmf,
};
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;
use crate::tolerance::POLICY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Check {
    /// `1/(12n+1) < ln n! - stirling_base(n) < 1/(12n)`
    RobbinsSandwich,
    /// `C(n, n/2) 2^{-n} < √(2/(πn))`, even `n`
    CentralBinomialBound,
    /// Tail-sum bias equals enumerated bias, even `n`, `p ≤ 1/2`
    BiasIdentity,
    /// Bias ≥ 0 for even `n`, `p ≤ 1/2`
    BiasNonnegative,
    /// Bias is largest at `p = 1/2`, where it equals `C(n, n/2) 2^{-n} / 2`
    BiasWorstCase,
    /// `C(n, n/2) 2^{-n} / 2 < √(1/(2πn))`, even `n`
    BiasClosedForm,
    /// `Var[Ê(x)] ≤ 1/(4n)`
    VarianceBound,
    /// `E[Ê(x)]` is the same at `p` and `1-p`
    Symmetry,
    /// `Σ_k exp(binom_log_pmf(n, k, p)) = 1`
    PmfNormalization,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::RobbinsSandwich,
        Check::CentralBinomialBound,
        Check::BiasIdentity,
        Check::BiasNonnegative,
        Check::BiasWorstCase,
        Check::BiasClosedForm,
        Check::VarianceBound,
        Check::Symmetry,
        Check::PmfNormalization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::RobbinsSandwich => "robbins_sandwich",
            Check::CentralBinomialBound => "central_binomial_bound",
            Check::BiasIdentity => "bias_identity",
            Check::BiasNonnegative => "bias_nonnegative",
            Check::BiasWorstCase => "bias_worst_case",
            Check::BiasClosedForm => "bias_closed_form",
            Check::VarianceBound => "variance_bound",
            Check::Symmetry => "symmetry",
            Check::PmfNormalization => "pmf_normalization",
        }
    }
}

/// Outcome of one inequality over all its cases. `slack` is "allowed minus
/// observed": negative slack is a violation, and strict inequalities also
/// fail at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CheckOutcome {
    pub check: Check,
    pub cases: u64,
    pub violations: u64,
    pub worst_slack: f64,
    pub witness_n: u64,
    pub witness_p: Option<f64>,
}

impl CheckOutcome {
    fn new(check: Check) -> Self {
        Self { check, cases: 0, violations: 0, worst_slack: f64::INFINITY, witness_n: 0, witness_p: None }
    }

    fn record(&mut self, slack: f64, strict: bool, n: u64, p: Option<f64>) {
        self.cases += 1;
        let ok = if strict { slack > 0.0 } else { slack >= 0.0 };
        if !ok {
            self.violations += 1;
        }
        if slack < self.worst_slack || slack.is_nan() {
            self.worst_slack = slack;
            self.witness_n = n;
            self.witness_p = p;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// `bias(n, 1/2)` against `(1/2)·C(n, n/2)·2^{-n}` at the largest even `n`
/// checked: the worst case attains the intermediate bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EqualityWitness {
    pub n: u64,
    pub bias_at_half: f64,
    pub half_central_ratio: f64,
    pub residual: f64,
    /// Largest residual over every even `n` checked.
    pub worst_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VerifyReport {
    pub max_n: u64,
    pub grid: u32,
    pub checks: Vec<CheckOutcome>,
    pub equality: EqualityWitness,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }

    pub fn get(&self, check: Check) -> &CheckOutcome {
        self.checks.iter().find(|c| c.check == check).expect("every check is reported")
    }
}

/// Runs every check for `1 ≤ n ≤ max_n` on `p ∈ {0, 1/grid, …, 1}` (plus
/// `p = 1/2` when `grid` is odd).
pub fn run_battery(max_n: u64, grid: u32) -> Result<VerifyReport> {
    if max_n < 2 {
        return Err(Error::MaxNTooSmall(max_n));
    }
    let grid = grid.max(1);
    let mut ps: Vec<f64> = (0..=grid).map(|i| f64::from(i) / f64::from(grid)).collect();
    if grid % 2 == 1 {
        ps.push(0.5);
        ps.sort_by(f64::total_cmp);
    }
    let tol = POLICY.identity;

    let mut out: Vec<CheckOutcome> = Check::ALL.iter().map(|&c| CheckOutcome::new(c)).collect();
    let idx = |c: Check| Check::ALL.iter().position(|&x| x == c).expect("listed");
    let mut equality = EqualityWitness {
        n: 0,
        bias_at_half: 0.0,
        half_central_ratio: 0.0,
        residual: 0.0,
        worst_residual: 0.0,
    };

    for n in 1..=max_n {
        let bounds = robbins_bounds(n)?;
        let r = stirling_remainder(n);
        let lf = log_factorial(n);
        let remainder_slack = (r - bounds.lower_correction()).min(bounds.upper_correction() - r);
        out[idx(Check::RobbinsSandwich)].record(remainder_slack, true, n, None);
        // The raw values may touch at large n: ulp(ln n!) exceeds the gap.
        let raw_slack = (lf - bounds.lower).min(bounds.upper - lf);
        out[idx(Check::RobbinsSandwich)].record(raw_slack, false, n, None);

        let even = n % 2 == 0;
        let mut half_bias = 0.0;
        let mut max_bias: (f64, f64) = (f64::NEG_INFINITY, 0.0);
        for &p in &ps {
            let pmf = BinomialPmf::new(n, p)?;
            let expected = expected_plugin_error_from(&pmf);
            let truth = p.min(1.0 - p);
            let bias = truth - expected;

            let var = variance_from(&pmf);
            out[idx(Check::VarianceBound)].record(1.0 / (4.0 * n as f64) - var, false, n, Some(p));
            if n == 1 {
                out[idx(Check::VarianceBound)].record(-libm::fabs(var), false, n, Some(p));
            }

            let mirrored = expected_plugin_error_from(&BinomialPmf::new(n, 1.0 - p)?);
            out[idx(Check::Symmetry)].record(tol - libm::fabs(expected - mirrored), false, n, Some(p));

            let mut total = CompensatedSum::new();
            for k in 0..=n {
                total.add(libm::exp(binom_log_pmf(n, k, p)?));
            }
            out[idx(Check::PmfNormalization)].record(tol - libm::fabs(total.value() - 1.0), false, n, Some(p));

            if even {
                if bias > max_bias.0 {
                    max_bias = (bias, p);
                }
                if p <= 0.5 {
                    let tail = tail_identity_from(&pmf);
                    out[idx(Check::BiasIdentity)].record(tol - libm::fabs(tail - bias), false, n, Some(p));
                    out[idx(Check::BiasNonnegative)].record(bias + tol, false, n, Some(p));
                }
                if p == 0.5 {
                    half_bias = bias;
                }
            }
        }

        if even {
            let central = libm::exp(binom_log_pmf(n, n / 2, 0.5)?);
            let closed = libm::sqrt(2.0 / (PI * n as f64));
            out[idx(Check::CentralBinomialBound)].record(closed - central, true, n, None);

            let half_central = 0.5 * central;
            let residual = libm::fabs(half_bias - half_central);
            let worst_case = out.get_mut(idx(Check::BiasWorstCase)).expect("listed");
            worst_case.record(tol - (max_bias.0 - half_bias), false, n, Some(max_bias.1));
            worst_case.record(tol - residual, false, n, Some(0.5));
            equality = EqualityWitness {
                n,
                bias_at_half: half_bias,
                half_central_ratio: half_central,
                residual,
                worst_residual: equality.worst_residual.max(residual),
            };

            let bound = libm::sqrt(1.0 / (2.0 * PI * n as f64));
            out[idx(Check::BiasClosedForm)].record(bound - half_central, true, n, Some(0.5));
        }
    }

    Ok(VerifyReport { max_n, grid, checks: out, equality })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes_to_256() {
        let report = run_battery(256, 100).unwrap();
        for c in &report.checks {
            assert!(c.passed(), "{:?}", c);
            assert!(c.cases > 0);
        }
        assert!(report.passed());
        assert!(report.equality.worst_residual < 1e-12);
        assert_eq!(report.equality.n, 256);
        let identity = report.get(Check::BiasIdentity);
        assert!(POLICY.identity - identity.worst_slack < 1e-12);
    }

    #[test]
    fn minimal_run() {
        let report = run_battery(2, 4).unwrap();
        assert!(report.passed());
        assert_eq!(report.equality.n, 2);
        assert!((report.equality.bias_at_half - 0.25).abs() < 1e-15);
    }

    #[test]
    fn odd_grid_still_includes_half() {
        let report = run_battery(4, 3).unwrap();
        assert!(report.passed());
        assert_eq!(report.get(Check::BiasWorstCase).violations, 0);
        assert!((report.equality.bias_at_half - report.equality.half_central_ratio).abs() < 1e-15);
    }

    #[test]
    fn rejects_tiny_max_n() {
        assert!(run_battery(1, 10).is_err());
    }
}
