//! Distributed Shapley-value allocation under rushing adversaries.
//!
//! Games and exact Shapley values, the permutation-sampling protocols
//! (`NaivePerm`, `RandElim`, `SeqPerm`) run against pluggable adversaries
//! with violation budgets, the optimal dynamic-programming adversary, and
//! the allocation loop with its stopping rules.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adversary;
pub mod bounds;
pub mod budget;
pub mod coalition;
pub mod error;
pub mod game;
pub mod games;
pub mod hypergraph;
pub mod math;
pub mod protocol;
pub mod rng;
pub mod runner;
pub mod shapley;

pub use coalition::Coalition;
pub use error::{Error, Result};
pub use game::{marginal_contribution, ClosedForm, FnGame, Game, TableGame, WithFixed};
pub use hypergraph::{Hyperedge, Hypergraph};
pub use shapley::{gamma, shapley_exact, ShapleyReport};
pub use budget::{Budget, BudgetKind};
pub use protocol::{Adversary, PSampleOutcome, Protocol};
pub use runner::{run_adaptive, run_allocation, Punishment, RunConfig, RunRecord, StoppingRule};
