//! The three-term mean-squared-error bound and budget splits `B ≥ m·n`.

use core::f64::consts::PI;

use crate::error::{Error, Result};

/// `1/(8m) + 1/(πn) + 1/(2nm)`, term by term.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundBreakdown {
    pub m: u64,
    pub n: u64,
    /// `1/(8m)`, from sampling prompts.
    pub term_prompt: f64,
    /// `1/(πn)`, from the bias of each per-prompt plug-in.
    pub term_bias: f64,
    /// `1/(2nm)`, from the per-prompt variance.
    pub term_cross: f64,
    pub total: f64,
}

impl BoundBreakdown {
    pub fn new(m: u64, n: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::ZeroSplit { m, n });
        }
        let (mf, nf) = (m as f64, n as f64);
        let term_prompt = 1.0 / (8.0 * mf);
        let term_bias = 1.0 / (PI * nf);
        let term_cross = 1.0 / (2.0 * nf * mf);
        Ok(Self {
            m,
            n,
            term_prompt,
            term_bias,
            term_cross,
            total: term_prompt + term_bias + term_cross,
        })
    }
}

pub fn bound_value(m: u64, n: u64) -> Result<BoundBreakdown> {
    BoundBreakdown::new(m, n)
}

/// `(√(πB/8), √(8B/π))`, the minimizer of `1/(8m) + 1/(πn)` on `m·n = B`.
pub fn continuous_optimum(budget: f64) -> Result<(f64, f64)> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::Budget(budget));
    }
    Ok((libm::sqrt(PI * budget / 8.0), libm::sqrt(8.0 * budget / PI)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PlanMethod {
    /// Closed form rounded to integers, then clamped into the budget.
    Rounded,
    /// Exact minimizer of the full bound over feasible integer pairs.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BudgetPlan {
    pub budget: u64,
    pub m_star: f64,
    pub n_star: f64,
    pub m: u64,
    pub n: u64,
    pub calls_used: u64,
    pub require_even_n: bool,
    pub bound: BoundBreakdown,
    pub method: PlanMethod,
}

/// The exhaustive plan alongside the rounded closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegerPlan {
    pub best: BudgetPlan,
    pub rounded: BudgetPlan,
}

fn min_n(budget: u64, require_even_n: bool) -> Result<u64> {
    if budget == 0 {
        return Err(Error::Budget(0.0));
    }
    if require_even_n {
        if budget < 2 {
            return Err(Error::BudgetTooSmall { budget });
        }
        Ok(2)
    } else {
        Ok(1)
    }
}

fn make_plan(budget: u64, m: u64, n: u64, require_even_n: bool, method: PlanMethod) -> BudgetPlan {
    let (m_star, n_star) = continuous_optimum(budget as f64).expect("budget checked");
    BudgetPlan {
        budget,
        m_star,
        n_star,
        m,
        n,
        calls_used: m * n,
        require_even_n,
        bound: BoundBreakdown::new(m, n).expect("m, n positive"),
        method,
    }
}

/// Minimizer of the bound over `m·n ≤ B` (and even `n` if requested).
///
/// The bound decreases in `n` at fixed `m`, so each `m` only needs
/// `n = ⌊B/m⌋` (rounded down to even). Ties go to the pair using more calls,
/// then to the smaller `m`.
pub fn exhaustive_plan(budget: u64, require_even_n: bool) -> Result<BudgetPlan> {
    let lowest_n = min_n(budget, require_even_n)?;
    let mut best: Option<(f64, u64, u64)> = None;
    for m in 1..=budget {
        let mut n = budget / m;
        if require_even_n {
            n -= n % 2;
        }
        if n < lowest_n {
            break;
        }
        let total = BoundBreakdown::new(m, n)?.total;
        let better = match best {
            None => true,
            Some((t, bm, bn)) => total < t || (total == t && m * n > bm * bn),
        };
        if better {
            best = Some((total, m, n));
        }
    }
    let (_, m, n) = best.expect("at least m = 1 is feasible");
    Ok(make_plan(budget, m, n, require_even_n, PlanMethod::Exhaustive))
}

/// The closed form rounded to the nearest integers (nearest even `n` if
/// requested), with `n` then lowered until `m·n ≤ B`.
pub fn rounded_plan(budget: u64, require_even_n: bool) -> Result<BudgetPlan> {
    let lowest_n = min_n(budget, require_even_n)?;
    let (m_star, n_star) = continuous_optimum(budget as f64)?;
    let mut m = (libm::round(m_star) as u64).max(1);
    let mut n = libm::round(n_star) as u64;
    let step = if require_even_n { 2 } else { 1 };
    if require_even_n && n % 2 == 1 {
        let (lo, hi) = (n - 1, n + 1);
        n = if n_star - lo as f64 <= hi as f64 - n_star { lo } else { hi };
    }
    n = n.max(lowest_n);
    while m * n > budget {
        if n - step >= lowest_n {
            n -= step;
        } else {
            m -= 1;
        }
    }
    Ok(make_plan(budget, m, n, require_even_n, PlanMethod::Rounded))
}

pub fn integer_plan(budget: u64, require_even_n: bool) -> Result<IntegerPlan> {
    Ok(IntegerPlan {
        best: exhaustive_plan(budget, require_even_n)?,
        rounded: rounded_plan(budget, require_even_n)?,
    })
}

pub fn plan(budget: u64, require_even_n: bool, method: PlanMethod) -> Result<BudgetPlan> {
    match method {
        PlanMethod::Rounded => rounded_plan(budget, require_even_n),
        PlanMethod::Exhaustive => exhaustive_plan(budget, require_even_n),
    }
}
