//! Commit/open permutation-generation protocols.
//!
//! Each round has a commit phase and an open phase. The adversary controls
//! every active player except the honest one and is rushing: it moves after
//! the honest player in both phases, but commitments are ideal, so during
//! the commit phase it never sees the honest value and during the open
//! phase it can only open what it committed or refuse. Refusing (at either
//! phase) or opening a different value is a violation and costs one unit of
//! budget; when the budget is exhausted the deviation is ignored.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::budget::Budget;
use crate::coalition::Coalition;
use crate::rng::Streams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Commit,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundKind {
    /// Every player contributes a permutation of `0..size`.
    Permutation { size: usize },
    /// Every player contributes a residue in `0..modulus`.
    Residue { modulus: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    /// 0-based P-sample index within the run.
    pub sample: u64,
    /// 0-based round within the P-sample.
    pub round: usize,
    pub phase: Phase,
    pub kind: RoundKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Revealed {
    Permutation(Vec<usize>),
    Residue(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Commit {
    Value(Revealed),
    Withhold,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpenAction {
    Open,
    Abort,
    /// Open a value other than the committed one. Binding turns this into a
    /// detected violation.
    Equivocate(Revealed),
}

/// What the adversary sees at a decision point.
#[derive(Debug, Clone, Copy)]
pub struct PhaseView<'a> {
    pub step: Step,
    pub honest: usize,
    /// Players taking part in this round, ascending.
    pub active: &'a [usize],
    /// `active` without the honest player.
    pub susceptible: &'a [usize],
    /// Players already ranked in this P-sample, least preferable first.
    /// Starts with the pinned players.
    pub filled: &'a [usize],
    /// The honest player's value for this round; `None` during the commit
    /// phase.
    pub honest_revealed: Option<&'a Revealed>,
    /// Values committed for `susceptible` (`None` if withheld); empty during
    /// the commit phase.
    pub committed: &'a [Option<Revealed>],
    pub budget_remaining: u64,
}

impl PhaseView<'_> {
    pub fn honest_active(&self) -> bool {
        self.active.binary_search(&self.honest).is_ok()
    }

    /// Player that `RandElim` eliminates if everybody opens, once all
    /// values are visible.
    pub fn tentative(&self) -> Option<usize> {
        let RoundKind::Residue { modulus } = self.step.kind else {
            return None;
        };
        if self.step.phase != Phase::Open {
            return None;
        }
        let mut sum = match (self.honest_active(), self.honest_revealed) {
            (true, Some(Revealed::Residue(r))) => *r,
            (true, _) => return None,
            (false, _) => 0,
        };
        for c in self.committed {
            if let Some(Revealed::Residue(r)) = c {
                sum += r;
            }
        }
        Some(self.active[sum % modulus])
    }
}

pub trait Adversary {
    fn begin_sample(&mut self, _sample: u64) {}

    /// One commitment per player in `view.susceptible`. Missing entries
    /// count as withheld.
    fn commit(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<Commit>;

    /// One action per player in `view.susceptible`; entries for players
    /// that withheld are ignored, missing entries mean `Open`.
    fn open(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<OpenAction>;

    fn end_sample(&mut self, _outcome: &PSampleOutcome) {}
}

impl<A: Adversary + ?Sized> Adversary for &mut A {
    fn begin_sample(&mut self, sample: u64) {
        (**self).begin_sample(sample)
    }
    fn commit(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<Commit> {
        (**self).commit(view, rng)
    }
    fn open(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<OpenAction> {
        (**self).open(view, rng)
    }
    fn end_sample(&mut self, outcome: &PSampleOutcome) {
        (**self).end_sample(outcome)
    }
}

impl<A: Adversary + ?Sized> Adversary for alloc::boxed::Box<A> {
    fn begin_sample(&mut self, sample: u64) {
        (**self).begin_sample(sample)
    }
    fn commit(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<Commit> {
        (**self).commit(view, rng)
    }
    fn open(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<OpenAction> {
        (**self).open(view, rng)
    }
    fn end_sample(&mut self, outcome: &PSampleOutcome) {
        (**self).end_sample(outcome)
    }
}

/// Uniform commitments for every susceptible player, as an honest player
/// would draw them.
pub fn uniform_commits(view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<Commit> {
    view.susceptible
        .iter()
        .map(|_| Commit::Value(draw(view.step.kind, rng)))
        .collect()
}

fn draw(kind: RoundKind, rng: &mut dyn RngCore) -> Revealed {
    match kind {
        RoundKind::Permutation { size } => {
            let mut p: Vec<usize> = (0..size).collect();
            p.shuffle(rng);
            Revealed::Permutation(p)
        }
        RoundKind::Residue { modulus } => Revealed::Residue(rng.random_range(0..modulus)),
    }
}

fn valid(kind: RoundKind, v: &Revealed) -> bool {
    match (kind, v) {
        (RoundKind::Permutation { size }, Revealed::Permutation(p)) => is_permutation(p, size),
        (RoundKind::Residue { modulus }, Revealed::Residue(r)) => *r < modulus,
        _ => false,
    }
}

fn neutral(kind: RoundKind) -> Revealed {
    match kind {
        RoundKind::Permutation { size } => Revealed::Permutation((0..size).collect()),
        RoundKind::Residue { .. } => Revealed::Residue(0),
    }
}

pub fn is_permutation(p: &[usize], size: usize) -> bool {
    if p.len() != size {
        return false;
    }
    let mut seen = vec![false; size];
    p.iter().all(|&x| x < size && !core::mem::replace(&mut seen[x], true))
}

/// `(outer ∘ inner)[x] = outer[inner[x]]`.
pub fn compose(outer: &[usize], inner: &[usize]) -> Vec<usize> {
    inner.iter().map(|&x| outer[x]).collect()
}

/// Result of one P-sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PSampleOutcome {
    /// Players by rank, least preferable first. Covers the pinned players
    /// followed by the active ones.
    pub sigma: Vec<usize>,
    /// Players detected violating in this P-sample.
    pub dev: Coalition,
    pub violations_used: u64,
    /// The permutation the same transcript would have produced without the
    /// violations of this P-sample. `None` when there were none.
    pub counterfactual: Option<Vec<usize>>,
}

impl PSampleOutcome {
    /// 1-based rank of `player`.
    pub fn rank_of(&self, player: usize) -> Option<usize> {
        self.sigma.iter().position(|&p| p == player).map(|i| i + 1)
    }
}

/// Everything a protocol run needs besides the active set.
pub struct Parties<'a> {
    pub honest: usize,
    pub streams: &'a mut Streams,
    pub adversary: &'a mut dyn Adversary,
    pub budget: &'a mut Budget,
    pub sample: u64,
    /// Players pinned below every active player, least preferable first.
    pub pinned: &'a [usize],
}

struct Round {
    honest_value: Option<Revealed>,
    /// Per susceptible player: the committed value, `None` if withheld.
    committed: Vec<Option<Revealed>>,
    /// Per susceptible player: whether they opened as committed.
    opened: Vec<bool>,
    dev: Vec<usize>,
    used: u64,
}

fn run_round(parties: &mut Parties<'_>, kind: RoundKind, round: usize, active: &[usize], filled: &[usize]) -> Round {
    let honest = parties.honest;
    let susceptible: Vec<usize> = active.iter().copied().filter(|&p| p != honest).collect();
    let honest_active = susceptible.len() < active.len();
    let mut step = Step { sample: parties.sample, round, phase: Phase::Commit, kind };
    let mut used = 0;
    let mut dev = Vec::new();

    let view = PhaseView {
        step,
        honest,
        active,
        susceptible: &susceptible,
        filled,
        honest_revealed: None,
        committed: &[],
        budget_remaining: parties.budget.remaining(),
    };
    let mut commits = parties.adversary.commit(&view, &mut parties.streams.adversary).into_iter();
    let mut committed = Vec::with_capacity(susceptible.len());
    for &p in &susceptible {
        match commits.next() {
            Some(Commit::Value(v)) if valid(kind, &v) => committed.push(Some(v)),
            _ => {
                if parties.budget.try_consume() {
                    used += 1;
                    dev.push(p);
                    committed.push(None);
                } else {
                    committed.push(Some(neutral(kind)));
                }
            }
        }
    }
    let honest_value = honest_active.then(|| draw(kind, &mut parties.streams.honest));

    step.phase = Phase::Open;
    let view = PhaseView {
        step,
        committed: &committed,
        honest_revealed: honest_value.as_ref(),
        budget_remaining: parties.budget.remaining(),
        ..view
    };
    let mut actions = parties.adversary.open(&view, &mut parties.streams.adversary).into_iter();
    let mut opened = Vec::with_capacity(susceptible.len());
    for (&p, c) in susceptible.iter().zip(&committed) {
        let action = actions.next().unwrap_or(OpenAction::Open);
        let Some(value) = c else {
            opened.push(false);
            continue;
        };
        let deviates = match &action {
            OpenAction::Open => false,
            OpenAction::Abort => true,
            OpenAction::Equivocate(v) => v != value,
        };
        if deviates && parties.budget.try_consume() {
            used += 1;
            dev.push(p);
            opened.push(false);
        } else {
            opened.push(true);
        }
    }
    dev.sort_unstable();
    Round { honest_value, committed, opened, dev, used }
}

/// `NaivePerm`: every active player contributes a permutation and the
/// opened ones are composed in ascending player order, each applied after
/// the previous ones. Violators stay in the permutation and are reported in
/// `dev`.
pub fn naive_perm(parties: &mut Parties<'_>, active: &[usize]) -> PSampleOutcome {
    let m = active.len();
    let kind = RoundKind::Permutation { size: m };
    let r = run_round(parties, kind, 0, active, parties.pinned);
    let identity: Vec<usize> = (0..m).collect();
    let mut actual = identity.clone();
    let mut every = identity.clone();
    let mut slot = 0;
    for &p in active {
        let (value, open) = if p == parties.honest {
            (r.honest_value.as_ref(), true)
        } else {
            let v = (r.committed[slot].as_ref(), r.opened[slot]);
            slot += 1;
            v
        };
        let perm = match value {
            Some(Revealed::Permutation(q)) => q.as_slice(),
            _ => identity.as_slice(),
        };
        if open {
            actual = compose(perm, &actual);
        }
        every = compose(perm, &every);
    }
    let place = |order: &[usize]| -> Vec<usize> {
        parties.pinned.iter().copied().chain(order.iter().map(|&s| active[s])).collect()
    };
    let dev: Coalition = r.dev.iter().collect();
    PSampleOutcome {
        sigma: place(&actual),
        counterfactual: (!dev.is_empty()).then(|| place(&every)),
        dev,
        violations_used: r.used,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elimination {
    pub eliminated: usize,
    /// Violators, ascending.
    pub dev: Vec<usize>,
    /// Player the committed values select, ignoring the violations.
    pub tentative: usize,
    pub violations_used: u64,
}

/// `RandElim` over the active set. Without violations the player at index
/// `(sum of residues) mod |S|` is eliminated; otherwise the smallest
/// violator is.
pub fn rand_elim(parties: &mut Parties<'_>, active: &[usize]) -> Elimination {
    rand_elim_round(parties, active, parties.pinned, 0)
}

fn rand_elim_round(parties: &mut Parties<'_>, active: &[usize], filled: &[usize], round: usize) -> Elimination {
    let k = active.len();
    let r = run_round(parties, RoundKind::Residue { modulus: k }, round, active, filled);
    let residue = |v: Option<&Revealed>| match v {
        Some(Revealed::Residue(x)) => *x,
        _ => 0,
    };
    let mut sum = residue(r.honest_value.as_ref());
    for c in &r.committed {
        sum += residue(c.as_ref());
    }
    let tentative = active[sum % k];
    Elimination {
        eliminated: r.dev.first().copied().unwrap_or(tentative),
        dev: r.dev,
        tentative,
        violations_used: r.used,
    }
}

/// `SeqPerm`: ranks are filled from the least preferable one by repeated
/// `RandElim`. Violators of a round take the next ranks together, in
/// ascending order.
pub fn seq_perm(parties: &mut Parties<'_>, active: &[usize]) -> PSampleOutcome {
    let mut pool = active.to_vec();
    let mut filled = parties.pinned.to_vec();
    let mut dev = Coalition::empty();
    let mut used = 0;
    let mut counterfactual = None;
    let mut round = 0;
    while !pool.is_empty() {
        let e = rand_elim_round(parties, &pool, &filled, round);
        round += 1;
        used += e.violations_used;
        if e.dev.is_empty() {
            pool.retain(|&p| p != e.eliminated);
            filled.push(e.eliminated);
            continue;
        }
        if counterfactual.is_none() {
            let mut cf = filled.clone();
            cf.push(e.tentative);
            let mut rest: Vec<usize> = pool.iter().copied().filter(|&p| p != e.tentative).collect();
            rest.shuffle(&mut parties.streams.shadow);
            cf.extend(rest);
            counterfactual = Some(cf);
        }
        for &d in &e.dev {
            dev.insert(d);
            filled.push(d);
        }
        pool.retain(|p| e.dev.binary_search(p).is_err());
    }
    PSampleOutcome { sigma: filled, dev, violations_used: used, counterfactual }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Naive,
    Seq,
}

impl Protocol {
    /// One P-sample, with the adversary and budget hooks around it.
    pub fn sample(self, parties: &mut Parties<'_>, active: &[usize]) -> PSampleOutcome {
        parties.budget.begin_sample(parties.sample);
        parties.adversary.begin_sample(parties.sample);
        let out = match self {
            Protocol::Naive => naive_perm(parties, active),
            Protocol::Seq => seq_perm(parties, active),
        };
        debug_assert!(
            {
                let mut s = out.sigma.clone();
                s.sort_unstable();
                let mut e: Vec<usize> = parties.pinned.iter().chain(active).copied().collect();
                e.sort_unstable();
                s == e
            },
            "sigma is not a permutation of the players"
        );
        parties.adversary.end_sample(&out);
        out
    }
}
