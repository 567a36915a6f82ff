use alloc::format;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::protocol::{uniform_commits, Adversary, Commit, OpenAction, PhaseView, Revealed, RoundKind};

/// The cyclic-shift attack on `NaivePerm`.
///
/// The `j`-th susceptible player (1-based, ascending id) commits `tau^j`
/// for the shift `tau(x) = x + 1 mod m`. Once the honest permutation is
/// open, dropping the one player whose exponent makes the total shift land
/// the honest player on rank 1 costs at most one violation. This requires
/// the honest player to be composed first or last, i.e. to have the
/// smallest or largest id among the active players; otherwise, and in
/// `RandElim` rounds, the adversary stays passive.
#[derive(Debug, Clone)]
pub struct CyclicShift {
    target: usize,
    /// P-samples in which the shift could not be applied.
    pub fallbacks: u64,
}

/// `honest` lists the players the adversary does not control.
pub fn cyclic_shift(players: usize, honest: &[usize]) -> Result<CyclicShift> {
    let &[target] = honest else {
        return Err(Error::Infeasible(format!("the cyclic shift needs exactly one honest player, got {}", honest.len())));
    };
    if target >= players {
        return Err(Error::UnknownPlayer { player: target, players });
    }
    if target != 0 && target + 1 != players {
        return Err(Error::Infeasible(format!(
            "with ascending composition the honest player must be 0 or {}, got {target}",
            players - 1
        )));
    }
    Ok(CyclicShift { target, fallbacks: 0 })
}

impl CyclicShift {
    fn slot(&self, view: &PhaseView<'_>) -> Option<usize> {
        let m = view.active.len();
        match view.active.binary_search(&self.target) {
            Ok(0) => Some(0),
            Ok(s) if s + 1 == m => Some(s),
            _ => None,
        }
    }
}

impl Adversary for CyclicShift {
    fn commit(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<Commit> {
        let RoundKind::Permutation { size: m } = view.step.kind else {
            return uniform_commits(view, rng);
        };
        if self.slot(view).is_none() {
            self.fallbacks += 1;
            return uniform_commits(view, rng);
        }
        (1..=view.susceptible.len())
            .map(|j| Commit::Value(Revealed::Permutation((0..m).map(|x| (x + j) % m).collect())))
            .collect()
    }

    fn open(&mut self, view: &PhaseView<'_>, _: &mut dyn RngCore) -> Vec<OpenAction> {
        let (RoundKind::Permutation { size: m }, Some(slot), Some(Revealed::Permutation(pi))) =
            (view.step.kind, self.slot(view), view.honest_revealed)
        else {
            return Vec::new();
        };
        // Composition is ascending, each later permutation applied outside.
        // Last: sigma = pi ∘ tau^k, so sigma(0) = pi(k) must be the honest slot.
        // First: sigma = tau^k ∘ pi, so pi(0) + k must be 0.
        let needed = if slot == 0 {
            (m - pi[0]) % m
        } else {
            pi.iter().position(|&x| x == slot).unwrap_or(0)
        };
        let total = m * (m - 1) / 2 % m;
        let drop = (total + m - needed) % m;
        if drop == 0 || view.budget_remaining == 0 {
            return Vec::new();
        }
        (1..=view.susceptible.len()).map(|j| if j == drop { OpenAction::Abort } else { OpenAction::Open }).collect()
    }
}
