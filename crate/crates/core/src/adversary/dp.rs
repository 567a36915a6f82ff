//! The optimal adversary against `SeqPerm`.
//!
//! `E[T][S][c]` is the honest player's expected revenue when the current
//! P-sample has pool `S` (containing the honest player `h`), `T` further
//! P-samples follow it, and `c` violations are left:
//!
//! ```text
//! E[T][S][c] = 1/|S| * ( mu_h(N \ S) + E[T-1][N][c]
//!              + sum_{i in S, i != h} min( E[T][S-i][c],
//!                                          min_{j in S, j != h, i} E[T][S-j][c-1] ) )
//! ```
//!
//! with `E[-1][N][c] = 0`. Drawing `h` ends the P-sample for the honest
//! player; drawing `i` lets the adversary either accept or have some other
//! `j` abort, which removes `j` instead at the price of one violation.
//!
//! States are compressed: `S \ {h}` is described by how many players of
//! each honest-view class it holds. Only the boundary `E[T][N][c]` is kept
//! for every `T`; a full slice over all states is rebuilt from the previous
//! boundary on demand.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::Game;
use crate::protocol::{uniform_commits, Adversary, Commit, OpenAction, PhaseView, RoundKind};
use crate::runner::{Allocation, RunConfig, RunRecord};

/// Default cap on the bytes a table may allocate.
pub const DEFAULT_MEMORY_CAP: u128 = 1 << 30;

const NONE: usize = usize::MAX;

/// Compressed pools: counts per honest-view class, mixed-radix encoded.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    n: usize,
    honest: usize,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    strides: Vec<usize>,
    states: usize,
}

impl StateSpace {
    /// Uses the game's honest-view classes, or one class per player for
    /// games with at most 20 players that declare none.
    pub fn new<G: Game + ?Sized>(game: &G, honest: usize) -> Result<Self> {
        match game.honest_view_classes(honest) {
            Some(classes) => Self::from_classes(game.players(), honest, classes),
            None if game.players() <= 20 => Self::bitset(game, honest),
            None => Err(Error::Infeasible(format!(
                "{} players without honest-view classes; the uncompressed state space is limited to 20",
                game.players()
            ))),
        }
    }

    /// One class per player, i.e. plain subsets.
    pub fn bitset<G: Game + ?Sized>(game: &G, honest: usize) -> Result<Self> {
        let n = game.players();
        Self::from_classes(n, honest, (0..n).filter(|&p| p != honest).map(|p| vec![p]).collect())
    }

    pub fn from_classes(n: usize, honest: usize, mut classes: Vec<Vec<usize>>) -> Result<Self> {
        if honest >= n {
            return Err(Error::UnknownPlayer { player: honest, players: n });
        }
        let mut class_of = vec![NONE; n];
        classes.retain(|c| !c.is_empty());
        for (k, class) in classes.iter_mut().enumerate() {
            class.sort_unstable();
            for &p in class.iter() {
                if p >= n {
                    return Err(Error::UnknownPlayer { player: p, players: n });
                }
                if p == honest || class_of[p] != NONE {
                    return Err(Error::InvalidParameter(format!("player {p} appears twice in the honest-view classes")));
                }
                class_of[p] = k;
            }
        }
        if let Some(p) = (0..n).find(|&p| p != honest && class_of[p] == NONE) {
            return Err(Error::InvalidParameter(format!("player {p} is missing from the honest-view classes")));
        }
        let mut strides = Vec::with_capacity(classes.len());
        let mut states = 1usize;
        for class in &classes {
            strides.push(states);
            states = states
                .checked_mul(class.len() + 1)
                .ok_or(Error::StateSpaceTooLarge { required: u128::MAX, cap: DEFAULT_MEMORY_CAP })?;
        }
        Ok(StateSpace { n, honest, classes, class_of, strides, states })
    }

    pub fn players(&self) -> usize {
        self.n
    }

    pub fn honest(&self) -> usize {
        self.honest
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn states(&self) -> usize {
        self.states
    }

    /// Index of the full pool `N`.
    pub fn full(&self) -> usize {
        self.states - 1
    }

    /// Index of a pool given by its members; the honest player is ignored.
    pub fn index_of(&self, pool: &[usize]) -> usize {
        pool.iter().filter(|&&p| p != self.honest).map(|&p| self.strides[self.class_of[p]]).sum()
    }

    /// Index of `pool` without `player`.
    pub fn stride_of(&self, player: usize) -> usize {
        self.strides[self.class_of[player]]
    }

    pub fn counts(&self, mut index: usize) -> Vec<usize> {
        self.classes
            .iter()
            .map(|c| {
                let radix = c.len() + 1;
                let d = index % radix;
                index /= radix;
                d
            })
            .collect()
    }

    /// A coalition of players outside a pool with these counts.
    fn outside(&self, counts: &[usize]) -> Coalition {
        let mut s = Coalition::empty();
        for (class, &c) in self.classes.iter().zip(counts) {
            for &p in &class[..class.len() - c] {
                s.insert(p);
            }
        }
        s
    }
}

/// Fills one slice `E[T][.][.]` given the boundary `E[T-1][N][.]`.
fn fill_slice(space: &StateSpace, mu: &[f64], prev: Option<&[f64]>, cb: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(space.states * cb, 0.0);
    let kk = space.classes.len();
    let mut digits = vec![0usize; kk];
    let mut size = 1usize;
    // Per budget level b - 1: best and second-best abort values by class.
    for idx in 0..space.states {
        for b in 0..cb {
            let (mut m1, mut l1, mut m2) = (f64::INFINITY, NONE, f64::INFINITY);
            if b > 0 {
                for l in 0..kk {
                    if digits[l] == 0 {
                        continue;
                    }
                    let v = out[(idx - space.strides[l]) * cb + b - 1];
                    if v < m1 {
                        m2 = m1;
                        m1 = v;
                        l1 = l;
                    } else if v < m2 {
                        m2 = v;
                    }
                }
            }
            let mut sum = 0.0;
            for k in 0..kk {
                let c = digits[k];
                if c == 0 {
                    continue;
                }
                let stay = out[(idx - space.strides[k]) * cb + b];
                let abort = if l1 != k || c >= 2 { m1 } else { m2 };
                sum += c as f64 * if abort < stay { abort } else { stay };
            }
            let carry = prev.map_or(0.0, |p| p[b]);
            out[idx * cb + b] = (mu[idx] + carry + sum) / size as f64;
        }
        for (k, d) in digits.iter_mut().enumerate() {
            if *d < space.classes[k].len() {
                *d += 1;
                size += 1;
                break;
            }
            size -= *d;
            *d = 0;
        }
    }
}

/// Boundary values `E[T][N][c]` for `0 <= T < R`, `0 <= c <= C`.
#[derive(Debug, Clone)]
pub struct DpTable {
    space: StateSpace,
    mu: Vec<f64>,
    budget: usize,
    boundary: Vec<f64>,
    memory_cap: u128,
}

impl DpTable {
    pub fn build<G: Game + ?Sized>(game: &G, honest: usize, samples: usize, budget: usize) -> Result<Self> {
        Self::build_in(StateSpace::new(game, honest)?, game, samples, budget, DEFAULT_MEMORY_CAP)
    }

    pub fn build_in<G: Game + ?Sized>(
        space: StateSpace,
        game: &G,
        samples: usize,
        budget: usize,
        memory_cap: u128,
    ) -> Result<Self> {
        let cb = budget as u128 + 1;
        let required = 8 * (space.states as u128 * (cb + 1) + samples as u128 * cb);
        if required > memory_cap {
            return Err(Error::StateSpaceTooLarge { required, cap: memory_cap });
        }
        let honest = space.honest;
        let mu = (0..space.states)
            .map(|idx| {
                let out = space.outside(&space.counts(idx));
                game.value(&out.with(honest)) - game.value(&out)
            })
            .collect();
        let mut table = DpTable { space, mu, budget, boundary: Vec::new(), memory_cap };
        table.extend_to(samples)?;
        debug_assert!(table.check_invariants(1e-6).is_ok(), "{:?}", table.check_invariants(1e-6));
        Ok(table)
    }

    /// Appends boundary rows up to `samples`.
    pub fn extend_to(&mut self, samples: usize) -> Result<()> {
        let cb = self.budget + 1;
        let required = 8 * (self.space.states as u128 * (cb as u128 + 1) + samples as u128 * cb as u128);
        if required > self.memory_cap {
            return Err(Error::StateSpaceTooLarge { required, cap: self.memory_cap });
        }
        let mut slice = Vec::new();
        for t in self.samples()..samples {
            self.fill(t, &mut slice);
            let full = self.space.full();
            self.boundary.extend_from_slice(&slice[full * cb..(full + 1) * cb]);
        }
        Ok(())
    }

    /// Rebuilds `E[t][.][.]` into `out`, indexed `state * (C + 1) + c`.
    /// Needs the boundary row `t - 1`.
    pub fn fill(&self, t: usize, out: &mut Vec<f64>) {
        let cb = self.budget + 1;
        assert!(t <= self.samples(), "slice {t} needs boundary row {}", t as isize - 1);
        let prev = (t > 0).then(|| &self.boundary[(t - 1) * cb..t * cb]);
        fill_slice(&self.space, &self.mu, prev, cb, out);
    }

    pub fn slice(&self, t: usize) -> Vec<f64> {
        let mut out = Vec::new();
        self.fill(t, &mut out);
        out
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn samples(&self) -> usize {
        self.boundary.len() / (self.budget + 1)
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// `E[t][N][c]`.
    pub fn boundary(&self, t: usize, c: usize) -> f64 {
        self.boundary[t * (self.budget + 1) + c]
    }

    /// All boundary values, row `t` at `t * (C + 1)`.
    pub fn boundary_values(&self) -> &[f64] {
        &self.boundary
    }

    /// Honest Shapley value, i.e. `E[0][N][0]`.
    pub fn phi(&self) -> f64 {
        self.boundary(0, 0)
    }

    /// Largest honest marginal contribution.
    pub fn u_max(&self) -> f64 {
        self.mu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `E[T][N][0] = (T+1) phi`, monotone in `c`, and at least
    /// `(T+1) phi - c U_max` when marginal contributions are non-negative.
    pub fn check_invariants(&self, tol: f64) -> core::result::Result<(), (usize, usize)> {
        if self.samples() == 0 {
            return Ok(());
        }
        let (phi, u) = (self.phi(), self.u_max());
        let monotone = self.mu.iter().all(|&m| m >= 0.0);
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
        for t in 0..self.samples() {
            let zero = self.boundary(t, 0);
            if !close(zero, (t + 1) as f64 * phi) {
                return Err((t, 0));
            }
            for c in 1..=self.budget {
                let e = self.boundary(t, c);
                if e > self.boundary(t, c - 1) + tol * e.abs().max(1.0) {
                    return Err((t, c));
                }
                let floor = (t + 1) as f64 * phi - c as f64 * u;
                if monotone && e < floor - tol * floor.abs().max(1.0) {
                    return Err((t, c));
                }
            }
        }
        Ok(())
    }

    /// The optimal response in pool `pool` (holding the honest player) when
    /// `drawn` is about to be eliminated and `b` violations are left:
    /// the player to abort, if aborting strictly helps. Ties go to the
    /// smallest id.
    pub fn decide(&self, slice: &[f64], pool: &[usize], drawn: usize, b: usize) -> Option<usize> {
        let space = &self.space;
        let h = space.honest;
        if drawn == h || b == 0 {
            return None;
        }
        let cb = self.budget + 1;
        let b = b.min(self.budget);
        let idx = space.index_of(pool);
        let stay = slice[(idx - space.stride_of(drawn)) * cb + b];
        let mut best = (f64::INFINITY, NONE);
        for &j in pool {
            if j == h || j == drawn {
                continue;
            }
            let v = slice[(idx - space.stride_of(j)) * cb + b - 1];
            if v < best.0 {
                best = (v, j);
            }
        }
        (best.0 < stay).then_some(best.1)
    }
}

/// Every slice kept in memory; the reference for the two-pass scheme.
#[derive(Debug, Clone)]
pub struct FullTable {
    table: DpTable,
    slices: Vec<Vec<f64>>,
}

impl FullTable {
    pub fn new(table: DpTable) -> Result<Self> {
        let required = 8 * table.samples() as u128 * table.space.states as u128 * (table.budget as u128 + 1);
        if required > table.memory_cap {
            return Err(Error::StateSpaceTooLarge { required, cap: table.memory_cap });
        }
        let slices = (0..table.samples()).map(|t| table.slice(t)).collect();
        Ok(FullTable { table, slices })
    }

    pub fn table(&self) -> &DpTable {
        &self.table
    }

    /// `E[t][state][c]`.
    pub fn value(&self, t: usize, state: usize, c: usize) -> f64 {
        self.slices[t][state * (self.table.budget + 1) + c]
    }
}

#[derive(Debug, Clone, Copy)]
enum Source<'a> {
    Full(&'a FullTable),
    Slice { t: usize, values: &'a [f64] },
}

/// Plays the minimizing strategy of a table built for the run's `R` and
/// `C`. Commits uniform residues from its own stream, so with no budget it
/// produces the passive transcript.
#[derive(Debug, Clone)]
pub struct DpAdversary<'a> {
    table: &'a DpTable,
    source: Source<'a>,
    pub aborts: u64,
}

impl<'a> DpAdversary<'a> {
    pub fn new(full: &'a FullTable) -> Self {
        DpAdversary { table: &full.table, source: Source::Full(full), aborts: 0 }
    }

    /// Valid only during the P-sample whose remaining count is `t`.
    pub fn with_slice(table: &'a DpTable, t: usize, values: &'a [f64]) -> Self {
        DpAdversary { table, source: Source::Slice { t, values }, aborts: 0 }
    }

    fn slice_for(&self, sample: u64) -> Option<&'a [f64]> {
        let r = self.table.samples() as u64;
        let t = r.checked_sub(sample + 1)? as usize;
        match self.source {
            Source::Full(f) => Some(&f.slices[t]),
            Source::Slice { t: at, values } => {
                assert_eq!(at, t, "slice for T = {at} used at T = {t}");
                Some(values)
            }
        }
    }
}

impl Adversary for DpAdversary<'_> {
    fn commit(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<Commit> {
        uniform_commits(view, rng)
    }

    fn open(&mut self, view: &PhaseView<'_>, _: &mut dyn RngCore) -> Vec<OpenAction> {
        if !matches!(view.step.kind, RoundKind::Residue { .. }) || !view.honest_active() || view.budget_remaining == 0 {
            return Vec::new();
        }
        let (Some(drawn), Some(slice)) = (view.tentative(), self.slice_for(view.step.sample)) else {
            return Vec::new();
        };
        let b = view.budget_remaining.min(self.table.budget as u64) as usize;
        match self.table.decide(slice, view.active, drawn, b) {
            Some(j) => {
                self.aborts += 1;
                view.susceptible.iter().map(|&p| if p == j { OpenAction::Abort } else { OpenAction::Open }).collect()
            }
            None => Vec::new(),
        }
    }
}

/// Runs `runs` allocations of `table.samples()` P-samples in lockstep: for
/// each P-sample index one slice is rebuilt from the boundary and every
/// run advances through it. Run `m` uses run index
/// `template.run_index + m`.
pub fn simulate_two_pass<G: Game + ?Sized>(
    game: &G,
    table: &DpTable,
    template: &RunConfig,
    runs: u64,
) -> Result<Vec<RunRecord>> {
    let r = table.samples();
    let mut allocs = (0..runs)
        .map(|m| Allocation::new(game, RunConfig { run_index: template.run_index + m, ..template.clone() }))
        .collect::<Result<Vec<_>>>()?;
    let mut slice = Vec::new();
    for j in 0..r {
        let t = r - 1 - j;
        table.fill(t, &mut slice);
        for a in &mut allocs {
            let mut adv = DpAdversary::with_slice(table, t, &slice);
            a.step(&mut adv);
        }
    }
    Ok(allocs.into_iter().map(|a| a.finish_average(None)).collect())
}

/// The same runs, each played independently against a full table.
pub fn simulate_full_table<G: Game + ?Sized>(
    game: &G,
    full: &FullTable,
    template: &RunConfig,
    runs: u64,
) -> Result<Vec<RunRecord>> {
    let r = full.table.samples();
    (0..runs)
        .map(|m| {
            let mut a = Allocation::new(game, RunConfig { run_index: template.run_index + m, ..template.clone() })?;
            let mut adv = DpAdversary::new(full);
            for _ in 0..r {
                a.step(&mut adv);
            }
            Ok(a.finish_average(None))
        })
        .collect()
}

/// Outcome of a scan for the smallest `R` with
/// `E[R-1][N][C] / R >= (1 - eps) phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinSamples {
    pub samples: Option<u64>,
    /// `E[R-1][N][C] / R` for `R = 1..=max`.
    pub ratios: Vec<f64>,
    pub target: f64,
    /// Whether every scanned `R` past the crossing also meets the target.
    pub stays_above: bool,
}

pub fn min_samples<G: Game + ?Sized>(game: &G, honest: usize, budget: usize, eps: f64, max_samples: usize) -> Result<MinSamples> {
    let mut table = DpTable::build(game, honest, 0, budget)?;
    min_samples_in(&mut table, eps, max_samples)
}

pub fn min_samples_in(table: &mut DpTable, eps: f64, max_samples: usize) -> Result<MinSamples> {
    if max_samples == 0 {
        return Err(Error::InvalidParameter("the scan needs at least one sample".into()));
    }
    table.extend_to(max_samples)?;
    let c = table.budget;
    let target = (1.0 - eps) * table.phi();
    let slack = 1e-12 * target.abs().max(1e-300);
    let ratios: Vec<f64> = (1..=max_samples).map(|r| table.boundary(r - 1, c) / r as f64).collect();
    let first = ratios.iter().position(|&x| x >= target - slack);
    let stays_above = first.is_none_or(|i| ratios[i..].iter().all(|&x| x >= target - slack));
    Ok(MinSamples { samples: first.map(|i| i as u64 + 1), ratios, target, stays_above })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::BudgetKind;
    use crate::games::{make_lb_game, make_pair_game};
    use crate::protocol::Protocol;
    use crate::runner::Punishment;
    use crate::shapley::shapley_exhaustive;

    #[test]
    fn pair_game_attack_value() {
        let g = make_pair_game(3, 0, 1).unwrap();
        let t = DpTable::build(&g, 0, 1, 2).unwrap();
        assert!((t.boundary(0, 2) - 2.0 / 3.0).abs() < 1e-12);
        assert!((t.boundary(0, 0) - 1.0).abs() < 1e-12);
        // Pool {i*}: everybody else precedes the honest player.
        let s = t.slice(0);
        assert_eq!(s[0], 2.0);
    }

    #[test]
    fn no_budget_gives_shapley_multiples() {
        let g = make_lb_game(8).unwrap();
        let t = DpTable::build(&g, 0, 20, 3).unwrap();
        for r in 0..20 {
            assert!((t.boundary(r, 0) - (r + 1) as f64).abs() < 1e-9);
        }
        assert!(t.check_invariants(1e-9).is_ok());
        assert_eq!(t.u_max(), g.alpha());
    }

    #[test]
    fn compressed_equals_bitset() {
        let g = make_lb_game(8).unwrap();
        let a = DpTable::build(&g, 0, 4, 2).unwrap();
        let b = DpTable::build_in(StateSpace::bitset(&g, 0).unwrap(), &g, 4, 2, DEFAULT_MEMORY_CAP).unwrap();
        assert_eq!(a.space().states(), 5 * 4);
        for (x, y) in a.boundary_values().iter().zip(b.boundary_values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn memory_cap_reports_required_size() {
        let g = make_lb_game(8).unwrap();
        let err = DpTable::build_in(StateSpace::new(&g, 0).unwrap(), &g, 1000, 2, 64).unwrap_err();
        assert!(matches!(err, Error::StateSpaceTooLarge { required, cap: 64 } if required > 64));
    }

    #[test]
    fn zero_budget_scan_needs_one_sample() {
        let g = make_lb_game(6).unwrap();
        let m = min_samples(&g, 0, 0, 0.1, 10).unwrap();
        assert_eq!(m.samples, Some(1));
        assert!(m.stays_above);
    }

    #[test]
    fn two_pass_matches_full_table_and_passive_without_budget() {
        let g = make_lb_game(4).unwrap();
        let cfg = RunConfig {
            protocol: Protocol::Seq,
            punishment: Punishment::CountOnly,
            budget: BudgetKind::Known(2),
            record_sigmas: true,
            ..RunConfig::new(0, 9)
        };
        let table = DpTable::build(&g, 0, 3, 2).unwrap();
        let full = FullTable::new(table.clone()).unwrap();
        let a = simulate_two_pass(&g, &table, &cfg, 20).unwrap();
        let b = simulate_full_table(&g, &full, &cfg, 20).unwrap();
        assert_eq!(a, b);

        let none = RunConfig { budget: BudgetKind::Known(0), ..cfg.clone() };
        let dp = simulate_two_pass(&g, &table, &none, 5).unwrap();
        for (m, rec) in dp.iter().enumerate() {
            let mut alloc = Allocation::new(&g, RunConfig { run_index: m as u64, ..none.clone() }).unwrap();
            for _ in 0..3 {
                alloc.step(&mut crate::adversary::Passive);
            }
            assert_eq!(rec, &alloc.finish_average(None));
        }
    }

    #[test]
    fn phi_matches_exhaustive_shapley() {
        let g = make_pair_game(5, 2, 4).unwrap();
        let t = DpTable::build(&g, 2, 1, 0).unwrap();
        let r = shapley_exhaustive(&g).unwrap();
        assert!((t.phi() - r.phi[2]).abs() < 1e-12);
    }
}
