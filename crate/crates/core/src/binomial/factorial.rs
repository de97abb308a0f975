use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use once_cell::race::OnceBox;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Largest `n` served from the shared cumulative table.
pub const DEFAULT_LOG_FACTORIAL_CAP: usize = 1_000_000;

/// Cumulative table of `ln n!` for `0 ≤ n ≤ cap`, built by compensated
/// summation of `ln i`.
#[derive(Debug, Clone)]
pub struct LogFactorialTable {
    values: Vec<f64>,
}

impl LogFactorialTable {
    pub fn new(cap: usize) -> Self {
        let mut values = Vec::with_capacity(cap + 1);
        let mut acc = CompensatedSum::new();
        values.push(0.0);
        for i in 1..=cap {
            acc.add(libm::log(i as f64));
            values.push(acc.value());
        }
        Self { values }
    }

    pub fn cap(&self) -> usize {
        self.values.len() - 1
    }

    /// `ln n!`; beyond the cap falls back to Stirling's series with its
    /// remainder.
    pub fn get(&self, n: u64) -> f64 {
        match self.values.get(n as usize) {
            Some(&v) if n <= usize::MAX as u64 => v,
            _ => stirling_base(n) + stirling_remainder(n),
        }
    }
}

static SHARED_TABLE: OnceBox<LogFactorialTable> = OnceBox::new();

fn shared_table() -> &'static LogFactorialTable {
    SHARED_TABLE.get_or_init(|| Box::new(LogFactorialTable::new(DEFAULT_LOG_FACTORIAL_CAP)))
}

/// `ln n!` from the shared table (built on first use; safe to race).
pub fn log_factorial(n: u64) -> f64 {
    shared_table().get(n)
}

/// `ln √(2πn) + n ln(n/e)`, the leading part of Stirling's formula.
pub fn stirling_base(n: u64) -> f64 {
    assert!(n > 0, "Stirling's formula needs n >= 1");
    let x = n as f64;
    0.5 * libm::log(2.0 * PI * x) + x * (libm::log(x) - 1.0)
}

// Coefficients of the asymptotic expansion of ln n! - stirling_base(n) in
// odd powers of 1/n.
const SERIES: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

const SERIES_FROM: u64 = 15;

/// Stirling remainder `ln n! - stirling_base(n)` to full relative precision.
///
/// For `n ≥ 15` the asymptotic series (truncation error below 1e-20) is used.
/// Below that, `r(n) = r(n+1) + atanh(y)/y - 1` with `y = 1/(2n+1)`, where
/// `atanh(y)/y - 1 = Σ y^{2j}/(2j+1)` is summed as a positive series so no
/// cancellation occurs.
pub fn stirling_remainder(n: u64) -> f64 {
    assert!(n > 0, "Stirling remainder needs n >= 1");
    if n >= SERIES_FROM {
        let x = n as f64;
        let inv2 = 1.0 / (x * x);
        let mut acc = 0.0;
        for &c in SERIES.iter().rev() {
            acc = acc * inv2 + c;
        }
        return acc / x;
    }
    let mut r = stirling_remainder(SERIES_FROM);
    for j in (n..SERIES_FROM).rev() {
        r += ratio_step(j);
    }
    r
}

/// `(j + 1/2) ln(1 + 1/j) - 1`, as a positive series in `y = 1/(2j+1)`.
fn ratio_step(j: u64) -> f64 {
    let y = 1.0 / (2 * j + 1) as f64;
    let y2 = y * y;
    let mut power = y2;
    let mut acc = 0.0;
    let mut k = 1u32;
    loop {
        let term = power / f64::from(2 * k + 1);
        acc += term;
        if term < acc * 1e-18 {
            return acc;
        }
        power *= y2;
        k += 1;
    }
}

/// Two-sided bounds on `ln n!`:
/// `base + 1/(12n+1) ≤ ln n! ≤ base + 1/(12n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogFactorialBounds {
    pub n: u64,
    pub lower: f64,
    pub upper: f64,
}

impl LogFactorialBounds {
    pub fn base(&self) -> f64 {
        stirling_base(self.n)
    }

    /// `1/(12n+1)`
    pub fn lower_correction(&self) -> f64 {
        1.0 / (12.0 * self.n as f64 + 1.0)
    }

    /// `1/(12n)`
    pub fn upper_correction(&self) -> f64 {
        1.0 / (12.0 * self.n as f64)
    }

    /// Whether a Stirling remainder lies strictly between the two
    /// corrections. At large `n` the gap `upper - ln n!` falls below one ulp
    /// of `ln n!`, so strictness is only decidable in remainder space.
    pub fn brackets_remainder(&self, remainder: f64) -> bool {
        self.lower_correction() < remainder && remainder < self.upper_correction()
    }

    pub fn contains(&self, log_factorial: f64) -> bool {
        self.lower <= log_factorial && log_factorial <= self.upper
    }
}

pub fn robbins_bounds(n: u64) -> Result<LogFactorialBounds> {
    if n == 0 {
        return Err(Error::ZeroFactorialBound);
    }
    let base = stirling_base(n);
    let x = n as f64;
    Ok(LogFactorialBounds {
        n,
        lower: base + 1.0 / (12.0 * x + 1.0),
        upper: base + 1.0 / (12.0 * x),
    })
}
