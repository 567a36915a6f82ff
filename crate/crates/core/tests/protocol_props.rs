use maximin_core::adversary::{always_abort, block_attack, cyclic_shift, passive, DpAdversary, DpTable, FullTable};
use maximin_core::budget::{Budget, BudgetKind};
use maximin_core::games::{make_lb_game, make_pair_game};
use maximin_core::protocol::{
    is_permutation, rand_elim, uniform_commits, Adversary, Commit, OpenAction, Parties, PhaseView, Phase, Protocol,
    Revealed, RoundKind,
};
use maximin_core::rng::Streams;
use proptest::prelude::*;
use rand::RngCore;

/// Records everything visible at each decision point and deviates at random.
struct Spy {
    seen_at_commit: Vec<Option<Revealed>>,
    seen_at_open: Vec<Option<Revealed>>,
    chaos: u64,
}

impl Adversary for Spy {
    fn commit(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<Commit> {
        assert_eq!(view.step.phase, Phase::Commit);
        assert!(view.committed.is_empty());
        self.seen_at_commit.push(view.honest_revealed.cloned());
        let mut c = uniform_commits(view, rng);
        if self.chaos % 7 == 0 && !c.is_empty() {
            c[0] = Commit::Withhold;
        }
        c
    }

    fn open(&mut self, view: &PhaseView<'_>, rng: &mut dyn RngCore) -> Vec<OpenAction> {
        assert_eq!(view.step.phase, Phase::Open);
        self.seen_at_open.push(view.honest_revealed.cloned());
        self.chaos = rng.next_u64();
        view.susceptible
            .iter()
            .map(|_| match rng.next_u32() % 5 {
                0 => OpenAction::Abort,
                1 => OpenAction::Equivocate(match view.step.kind {
                    RoundKind::Residue { .. } => Revealed::Residue(0),
                    RoundKind::Permutation { size } => Revealed::Permutation((0..size).rev().collect()),
                }),
                _ => OpenAction::Open,
            })
            .collect()
    }
}

fn protocol() -> impl Strategy<Value = Protocol> {
    prop_oneof![Just(Protocol::Naive), Just(Protocol::Seq)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn outcomes_are_permutations_and_respect_budget(
        seed in any::<u64>(), n in 1usize..=7, honest_pick in 0usize..7, pinned in 0usize..3, cap in 0u64..4, p in protocol()
    ) {
        let honest = honest_pick % n;
        let pinned_players: Vec<usize> = (0..n).filter(|&q| q != honest).take(pinned.min(n.saturating_sub(1))).collect();
        let active: Vec<usize> = (0..n).filter(|q| !pinned_players.contains(q)).collect();
        let mut spy = Spy { seen_at_commit: vec![], seen_at_open: vec![], chaos: seed };
        let mut streams = Streams::for_run(seed, 0);
        let mut budget = Budget::new(BudgetKind::Known(cap));
        let mut used = 0;
        for sample in 0..5u64 {
            let mut parties = Parties {
                honest, streams: &mut streams, adversary: &mut spy, budget: &mut budget, sample, pinned: &pinned_players,
            };
            let out = p.sample(&mut parties, &active);
            prop_assert!(is_permutation(&out.sigma, n));
            prop_assert_eq!(&out.sigma[..pinned_players.len()], &pinned_players[..]);
            prop_assert!(!out.dev.contains(honest));
            prop_assert!(out.dev.iter().all(|d| active.contains(&d)));
            prop_assert_eq!(out.dev.len() as u64, out.violations_used);
            if let Some(cf) = &out.counterfactual {
                prop_assert!(is_permutation(cf, n));
            }
            used += out.violations_used;
            prop_assert!(used <= cap);
        }
        // Hiding: nothing of the honest player is visible at commit time.
        prop_assert!(spy.seen_at_commit.iter().all(Option::is_none));
    }

    #[test]
    fn rate_budget_is_prefix_sound(seed in any::<u64>(), f in 0.0f64..0.5) {
        let mut streams = Streams::for_run(seed, 1);
        let mut budget = Budget::new(BudgetKind::Rate(f));
        let mut adv = always_abort();
        let active: Vec<usize> = (0..4).collect();
        let mut used = 0;
        for sample in 0..200u64 {
            let mut parties = Parties { honest: 3, streams: &mut streams, adversary: &mut adv, budget: &mut budget, sample, pinned: &[] };
            used += Protocol::Naive.sample(&mut parties, &active).violations_used;
            prop_assert!(used as f64 <= f * (sample + 1) as f64 + 1e-12);
        }
    }
}

#[test]
fn honest_values_appear_only_at_open() {
    // The honest value seen at open is the one that drives the outcome:
    // with a passive spy, NaivePerm's output is the composition including it.
    let mut spy = Spy { seen_at_commit: vec![], seen_at_open: vec![], chaos: 1 };
    let mut streams = Streams::for_run(77, 0);
    let mut budget = Budget::new(BudgetKind::Known(0));
    let active = [0usize, 1, 2, 3];
    let mut parties = Parties { honest: 2, streams: &mut streams, adversary: &mut spy, budget: &mut budget, sample: 0, pinned: &[] };
    let e = rand_elim(&mut parties, &active);
    assert!(spy.seen_at_commit[0].is_none());
    let Some(Revealed::Residue(r)) = spy.seen_at_open[0] else { panic!("honest residue not revealed at open") };
    assert!(r < 4);
    assert!(e.dev.is_empty());
}

fn elimination_frequencies(n: usize, trials: u64, adv: &mut dyn Adversary, budget: BudgetKind, honest: usize) -> Vec<f64> {
    let mut streams = Streams::for_run(2024, n as u64);
    let mut b = Budget::new(budget);
    let active: Vec<usize> = (0..n).collect();
    let mut counts = vec![0u64; n];
    for sample in 0..trials {
        let mut parties = Parties { honest, streams: &mut streams, adversary: adv, budget: &mut b, sample, pinned: &[] };
        counts[rand_elim(&mut parties, &active).eliminated] += 1;
    }
    counts.iter().map(|&c| c as f64 / trials as f64).collect()
}

#[test]
fn passive_rand_elim_is_uniform() {
    let f = elimination_frequencies(4, 100_000, &mut passive(), BudgetKind::Known(0), 0);
    assert!(f.iter().all(|&x| (x - 0.25).abs() < 0.01), "{f:?}");
}

#[test]
fn passive_seq_perm_rank_is_uniform() {
    let mut streams = Streams::for_run(99, 0);
    let mut b = Budget::new(BudgetKind::Known(0));
    let active: Vec<usize> = (0..5).collect();
    let mut counts = [0u64; 5];
    let trials = 100_000;
    for sample in 0..trials {
        let mut parties = Parties { honest: 1, streams: &mut streams, adversary: &mut passive(), budget: &mut b, sample, pinned: &[] };
        counts[Protocol::Seq.sample(&mut parties, &active).rank_of(1).unwrap() - 1] += 1;
    }
    assert!(counts.iter().all(|&c| (c as f64 / trials as f64 - 0.2).abs() < 0.01), "{counts:?}");
}

#[test]
fn cyclic_shift_enumerated_for_three_players() {
    // Every honest opening, every pinned-free pool of 3: rank 1, at most one violation.
    for seed in 0..600 {
        for target in [0, 2] {
            let mut adv = cyclic_shift(3, &[target]).unwrap();
            let mut streams = Streams::for_run(seed, 0);
            let mut b = Budget::new(BudgetKind::Known(1));
            let mut parties = Parties { honest: target, streams: &mut streams, adversary: &mut adv, budget: &mut b, sample: 0, pinned: &[] };
            let out = Protocol::Naive.sample(&mut parties, &[0, 1, 2]);
            assert_eq!(out.rank_of(target), Some(1));
            assert!(out.violations_used <= 1);
        }
    }
}

#[test]
fn dp_adversary_without_budget_replays_passive() {
    let g = make_pair_game(4, 0, 1).unwrap();
    let full = FullTable::new(DpTable::build(&g, 0, 6, 2).unwrap()).unwrap();
    let active: Vec<usize> = (0..4).collect();
    let run = |adv: &mut dyn Adversary| {
        let mut streams = Streams::for_run(5, 0);
        let mut b = Budget::new(BudgetKind::Known(0));
        (0..6u64)
            .map(|sample| {
                let mut parties = Parties { honest: 0, streams: &mut streams, adversary: adv, budget: &mut b, sample, pinned: &[] };
                Protocol::Seq.sample(&mut parties, &active)
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(&mut DpAdversary::new(&full)), run(&mut passive()));
}

#[test]
fn block_attack_halves_reward_from_the_opportunity_state() {
    // Pool {i*, q, y} with y drawn: without the attack {i*, q} remains and the
    // honest player gets alpha either way; with it {i*, y} remains and only
    // the order y, i* pays.
    let g = make_lb_game(6).unwrap();
    let q = 1;
    let y = 5;
    let mu = |before: &[usize]| {
        use maximin_core::{Coalition, Game};
        let s: Coalition = before.iter().collect();
        g.value(&s.with(0)) - g.value(&s)
    };
    let rest: Vec<usize> = vec![2, 3, 4];
    let with = |extra: &[usize]| rest.iter().chain(extra).copied().collect::<Vec<_>>();
    let keep = 0.5 * mu(&with(&[y])) + 0.5 * mu(&with(&[y, q]));
    let attacked = 0.5 * mu(&with(&[q])) + 0.5 * mu(&with(&[q, y]));
    assert!((keep - g.alpha()).abs() < 1e-12);
    assert!((keep - attacked - g.alpha() / 2.0).abs() < 1e-12);
    let _ = block_attack(&g, 0.1, false);
}
