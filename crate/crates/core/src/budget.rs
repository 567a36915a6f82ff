//! Violation budgets.

use libm::floor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetKind {
    /// At most `C` violations, and the protocol knows `C`.
    Known(u64),
    /// At most `C` violations; `C` is hidden from the stopping rule.
    Unknown(u64),
    /// At most `floor(f * T)` violations within the first `T` P-samples.
    Rate(f64),
}

impl BudgetKind {
    /// The total cap, when there is one.
    pub fn cap(&self) -> Option<u64> {
        match *self {
            BudgetKind::Known(c) | BudgetKind::Unknown(c) => Some(c),
            BudgetKind::Rate(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    kind: BudgetKind,
    used: u64,
    sample: u64,
}

impl Budget {
    pub fn new(kind: BudgetKind) -> Self {
        Budget { kind, used: 0, sample: 0 }
    }

    pub fn kind(&self) -> BudgetKind {
        self.kind
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    /// Marks the start of P-sample `sample` (0-based).
    pub fn begin_sample(&mut self, sample: u64) {
        self.sample = sample;
    }

    pub fn remaining(&self) -> u64 {
        let allowed = match self.kind {
            BudgetKind::Known(c) | BudgetKind::Unknown(c) => c,
            BudgetKind::Rate(f) => floor(f * (self.sample + 1) as f64) as u64,
        };
        allowed.saturating_sub(self.used)
    }

    /// Spends one unit if any is left.
    pub fn try_consume(&mut self) -> bool {
        if self.remaining() > 0 {
            self.used += 1;
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_budget_runs_out() {
        let mut b = Budget::new(BudgetKind::Known(2));
        assert!(b.try_consume() && b.try_consume());
        assert!(!b.try_consume());
        assert_eq!(b.used(), 2);
    }

    #[test]
    fn rate_budget_tracks_prefixes() {
        let mut b = Budget::new(BudgetKind::Rate(0.25));
        let mut granted = 0;
        for t in 0..40u64 {
            b.begin_sample(t);
            while b.try_consume() {
                granted += 1;
            }
            assert!(b.used() as f64 <= 0.25 * (t + 1) as f64);
        }
        assert_eq!(granted, 10);
    }
}
