// Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use maximin_core::{Coalition, Game};

fn value_of<G: Game + ?Sized>(game: &G, mask: u64) -> f64 {
    game.value(&Coalition::from_mask(mask))
}

/// Every permutation of `0..n`, in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// Shapley values as the average marginal contribution over all `n!`
/// join orders (position 0 joins first).
pub fn shapley_by_permutations<G: Game + ?Sized>(game: &G) -> Vec<f64> {
    let n = game.players();
    let perms = permutations(n);
    let mut phi = vec![0.0; n];
    for p in &perms {
        let mut mask = 0u64;
        for &i in p {
            phi[i] += value_of(game, mask | 1 << i) - value_of(game, mask);
            mask |= 1 << i;
        }
    }
    phi.iter().map(|v| v / perms.len() as f64).collect()
}

/// Honest expectation when `pinned` always joins first and the others
/// follow in uniformly random order.
pub fn pinned_by_permutations<G: Game + ?Sized>(game: &G, honest: usize, pinned: usize) -> f64 {
    let n = game.players();
    let rest: Vec<usize> = (0..n).filter(|&p| p != pinned).collect();
    let perms = permutations(rest.len());
    let mut total = 0.0;
    for p in &perms {
        let mut mask = 1u64 << pinned;
        for &slot in p {
            let i = rest[slot];
            if i == honest {
                total += value_of(game, mask | 1 << i) - value_of(game, mask);
                break;
            }
            mask |= 1 << i;
        }
    }
    total / perms.len() as f64
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AbortRule {
    /// One abort per round, never the drawn player.
    Restricted,
    /// Any nonempty set of non-honest pool members, the drawn one included.
    AnySet,
}

/// Worst-case honest revenue over `samples` `SeqPerm` P-samples with
/// `budget` violations, by explicit minimization over the game tree.
pub struct GameTree<'g, G: Game + ?Sized> {
    game: &'g G,
    honest: usize,
    n: usize,
    rule: AbortRule,
    memo: HashMap<(usize, u64, usize), f64>,
}

impl<'g, G: Game + ?Sized> GameTree<'g, G> {
    pub fn new(game: &'g G, honest: usize, rule: AbortRule) -> Self {
        GameTree { game, honest, n: game.players(), rule, memo: HashMap::new() }
    }

    /// `samples_left` includes the current P-sample.
    pub fn worst(&mut self, samples_left: usize, budget: usize) -> f64 {
        if samples_left == 0 {
            return 0.0;
        }
        self.pool((samples_left, (1u64 << self.n) - 1, budget))
    }

    fn pool(&mut self, key: (usize, u64, usize)) -> f64 {
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let (t, s, c) = key;
        let full = (1u64 << self.n) - 1;
        let h = self.honest;
        let members: Vec<usize> = (0..self.n).filter(|&p| s >> p & 1 == 1).collect();
        let mut total = 0.0;
        for &i in &members {
            if i == h {
                let before = full & !s;
                let mu = value_of(self.game, before | 1 << h) - value_of(self.game, before);
                total += mu + self.worst(t - 1, c);
                continue;
            }
            let mut best = self.pool((t, s & !(1 << i), c));
            let others: Vec<usize> = members.iter().copied().filter(|&p| p != h).collect();
            match self.rule {
                AbortRule::Restricted => {
                    if c >= 1 {
                        for &j in others.iter().filter(|&&j| j != i) {
                            best = best.min(self.pool((t, s & !(1 << j), c - 1)));
                        }
                    }
                }
                AbortRule::AnySet => {
                    for sub in 1u64..1 << others.len() {
                        let k = sub.count_ones() as usize;
                        if k > c {
                            continue;
                        }
                        let mut d = 0u64;
                        for (b, &p) in others.iter().enumerate() {
                            if sub >> b & 1 == 1 {
                                d |= 1 << p;
                            }
                        }
                        best = best.min(self.pool((t, s & !d, c - k)));
                    }
                }
            }
            total += best;
        }
        let v = total / members.len() as f64;
        self.memo.insert(key, v);
        v
    }
}
