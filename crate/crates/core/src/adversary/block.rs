use alloc::vec::Vec;

use libm::ceil;
use rand::RngCore;

use crate::coalition::Coalition;
use crate::games::LowerBoundGame;
use crate::protocol::{uniform_commits, Adversary, Commit, OpenAction, PhaseView};

/// The lower-bound attack on `SeqPerm` over [`LowerBoundGame`].
///
/// An opportunity arises when the pool is `{i*, q, y}` with `q` in `Q`,
/// `y` outside `Q` and `y` about to be eliminated. Aborting `q` instead
/// leaves `{i*, y}`, which halves the honest player's expected reward for
/// that P-sample. The run is cut into blocks of `ceil(n / (10 eps))`
/// P-samples and at most one opportunity per block is taken; the greedy
/// variant takes every opportunity while budget lasts.
#[derive(Debug, Clone)]
pub struct BlockAttack {
    honest: usize,
    q: Coalition,
    block_len: u64,
    greedy: bool,
    last_block: Option<u64>,
    pub opportunities: u64,
    pub seized: u64,
}

pub fn block_attack(game: &LowerBoundGame, eps: f64, greedy: bool) -> BlockAttack {
    let n = crate::game::Game::players(game) as f64;
    BlockAttack {
        honest: game.honest(),
        q: game.q_set(),
        block_len: (ceil(n / (10.0 * eps)) as u64).max(1),
        greedy,
        last_block: None,
        opportunities: 0,
        seized: 0,
    }
}

impl BlockAttack {
    pub fn block_len(&self) -> u64 {
        self.block_len
    }
}

/// Probability that a uniform `SeqPerm` over `n - s` players with the
/// honest player and `n/2 - s` members of `Q` still present (and `n/2 - 1`
/// players outside) presents an opportunity.
pub fn opportunity_probability(n: usize, s: usize) -> f64 {
    let (n, s) = (n as f64, s as f64);
    let m = n - s;
    let q = n / 2.0 - s;
    let y = n / 2.0 - 1.0;
    // Last three are {i*, q, y}, then y goes first among them.
    (3.0 / m) * (2.0 * q * y / ((m - 1.0) * (m - 2.0))) / 3.0
}

impl Adversary for BlockAttack {
    fn commit(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<Commit> {
        uniform_commits(view, rng)
    }

    fn open(&mut self, view: &PhaseView<'_>, _: &mut dyn RngCore) -> Vec<OpenAction> {
        if view.active.len() != 3 || !view.honest_active() {
            return Vec::new();
        }
        let Some(y) = view.tentative() else {
            return Vec::new();
        };
        if y == self.honest || self.q.contains(y) {
            return Vec::new();
        }
        let Some(&q) = view.susceptible.iter().find(|&&p| p != y) else {
            return Vec::new();
        };
        if !self.q.contains(q) {
            return Vec::new();
        }
        self.opportunities += 1;
        let block = view.step.sample / self.block_len;
        if view.budget_remaining == 0 || (!self.greedy && self.last_block == Some(block)) {
            return Vec::new();
        }
        self.last_block = Some(block);
        self.seized += 1;
        view.susceptible.iter().map(|&p| if p == q { OpenAction::Abort } else { OpenAction::Open }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::{Budget, BudgetKind};
    use crate::games::make_lb_game;
    use crate::protocol::Protocol;
    use crate::protocol::Parties;
    use crate::rng::Streams;

    #[test]
    fn opportunity_formula() {
        let n = 100.0;
        let p0 = n * (n / 2.0 - 1.0) / (n * (n - 1.0) * (n - 2.0));
        assert!((opportunity_probability(100, 0) - p0).abs() < 1e-15);
    }

    #[test]
    fn opportunity_frequency_matches_formula() {
        let game = make_lb_game(10).unwrap();
        let mut adv = block_attack(&game, 0.05, false);
        let mut streams = Streams::for_run(11, 0);
        let mut budget = Budget::new(BudgetKind::Known(0));
        let active: Vec<usize> = (0..10).collect();
        let trials = 40_000u64;
        for sample in 0..trials {
            let mut parties =
                Parties { honest: 0, streams: &mut streams, adversary: &mut adv, budget: &mut budget, sample, pinned: &[] };
            Protocol::Seq.sample(&mut parties, &active);
        }
        let p = opportunity_probability(10, 0);
        let freq = adv.opportunities as f64 / trials as f64;
        let sd = libm::sqrt(p * (1.0 - p) / trials as f64);
        assert!((freq - p).abs() < 4.0 * sd, "{freq} vs {p}");
        assert_eq!(adv.seized, 0);
    }

    #[test]
    fn at_most_one_abort_per_block() {
        let game = make_lb_game(4).unwrap();
        let mut adv = block_attack(&game, 0.1, false);
        assert_eq!(adv.block_len(), 4);
        let mut streams = Streams::for_run(5, 0);
        let mut budget = Budget::new(BudgetKind::Known(1000));
        let active: Vec<usize> = (0..4).collect();
        let mut per_block = [0u64; 250];
        for sample in 0..1000u64 {
            let mut parties =
                Parties { honest: 0, streams: &mut streams, adversary: &mut adv, budget: &mut budget, sample, pinned: &[] };
            per_block[(sample / 4) as usize] += Protocol::Seq.sample(&mut parties, &active).violations_used;
        }
        assert!(per_block.iter().all(|&v| v <= 1));
        assert!(adv.seized > 0);
    }
}
