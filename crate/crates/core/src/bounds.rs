//! Sample-count formulas.

use libm::{ceil, log, round};

/// A real-valued sample-count formula and the integer actually used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleCount {
    pub real: f64,
    pub samples: u64,
}

impl SampleCount {
    fn of(real: f64) -> Self {
        SampleCount { real, samples: ceil_tolerant(real) }
    }
}

/// Ceiling that ignores floating-point noise just above an integer, so
/// that e.g. `2 * 200 * 100 / 0.05` stays 800000.
pub fn ceil_tolerant(x: f64) -> u64 {
    let r = round(x);
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as u64
    } else {
        ceil(x) as u64
    }
}

/// `8 Gamma / eps^2 * ln(1/delta)`.
pub fn chernoff_samples(eps: f64, delta: f64, gamma: f64) -> SampleCount {
    SampleCount::of(8.0 * gamma / (eps * eps) * log(1.0 / delta))
}

/// `2 C Gamma / eps`.
pub fn budget_samples(eps: f64, budget: u64, gamma: f64) -> SampleCount {
    SampleCount::of(2.0 * budget as f64 * gamma / eps)
}

/// `max(ceil(8 Gamma / eps^2 ln(1/delta)), ceil(2 C Gamma / eps))`: enough
/// P-samples for `(eps, delta)`-maximin security with a known budget.
pub fn known_budget_samples(eps: f64, delta: f64, budget: u64, gamma: f64) -> SampleCount {
    let a = chernoff_samples(eps, delta, gamma);
    let b = budget_samples(eps, budget, gamma);
    SampleCount { real: a.real.max(b.real), samples: a.samples.max(b.samples) }
}

/// `R0 = 8 Gamma / eps^2 (ln(16 Gamma / eps^2) + ln(1/delta))`, the minimum
/// sample count of the unknown-budget rule.
pub fn unknown_budget_min_samples(eps: f64, delta: f64, gamma: f64) -> SampleCount {
    let e2 = eps * eps;
    SampleCount::of(8.0 * gamma / e2 * (log(16.0 * gamma / e2) + log(1.0 / delta)))
}

/// Sample count at which the adaptive rule may move to level `level`:
/// `8 Gamma / eps_level^2 ln(2^level / delta)` with `eps_level = 2^-level`.
pub fn adaptive_threshold(level: u32, delta: f64, gamma: f64) -> f64 {
    let eps = adaptive_epsilon(level);
    8.0 * gamma / (eps * eps) * (level as f64 * core::f64::consts::LN_2 - log(delta))
}

pub fn adaptive_epsilon(level: u32) -> f64 {
    libm::ldexp(1.0, -(level as i32))
}

/// `ceil(Gamma C / eps)`: enough for `eps`-expected maximin security with
/// `NaivePerm`.
pub fn expected_security_samples(eps: f64, budget: u64, gamma: f64) -> SampleCount {
    SampleCount::of(gamma * budget as f64 / eps)
}

/// `n C / (10 eps)`: below this, the lower-bound game defeats `SeqPerm`.
pub fn lower_bound_samples(n: usize, budget: u64, eps: f64) -> f64 {
    n as f64 * budget as f64 / (10.0 * eps)
}
