//! Built-in adversary strategies.

use alloc::vec::Vec;

use rand::RngCore;

use crate::protocol::{uniform_commits, Adversary, Commit, OpenAction, PhaseView};

mod block;
mod cyclic;
pub mod dp;

pub use block::{block_attack, opportunity_probability, BlockAttack};
pub use cyclic::{cyclic_shift, CyclicShift};
pub use dp::{DpAdversary, DpTable, FullTable, StateSpace};

/// Never violates; commits uniform values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Passive;

pub fn passive() -> Passive {
    Passive
}

impl Adversary for Passive {
    fn commit(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<Commit> {
        uniform_commits(view, rng)
    }

    fn open(&mut self, _: &PhaseView<'_>, _: &mut dyn RngCore) -> Vec<OpenAction> {
        Vec::new()
    }
}

/// Aborts the smallest susceptible player in the first round of every
/// P-sample, whenever budget is left.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysAbort;

pub fn always_abort() -> AlwaysAbort {
    AlwaysAbort
}

impl Adversary for AlwaysAbort {
    fn commit(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<Commit> {
        uniform_commits(view, rng)
    }

    fn open(&mut self, view: &PhaseView<'_>, _: &mut dyn RngCore) -> Vec<OpenAction> {
        if view.step.round == 0 && view.budget_remaining > 0 && !view.susceptible.is_empty() {
            let mut actions = Vec::with_capacity(view.susceptible.len());
            actions.push(OpenAction::Abort);
            actions
        } else {
            Vec::new()
        }
    }
}
