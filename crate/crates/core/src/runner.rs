//! The allocation loop and its stopping rules.
//!
//! Every P-sample adds each player's marginal contribution to its
//! predecessors to `z`; the allocation is `z / R`. For the honest player
//! each P-sample's reward `X_j` is logged next to the counterfactual reward
//! `Y_j` it would have received without that sample's violations, so that
//! `Z_j = Y_j - X_j` is the damage done.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::bounds::{adaptive_epsilon, adaptive_threshold, budget_samples, known_budget_samples, unknown_budget_min_samples, SampleCount};
use crate::budget::{Budget, BudgetKind};
use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::Game;
use crate::protocol::{Adversary, PSampleOutcome, Parties, Protocol};
use crate::rng::Streams;

/// Default hard cap when the stopping rule gives no scale.
pub const DEFAULT_HARD_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Punishment {
    /// Violations are only counted.
    CountOnly,
    /// Violators are pinned below everybody else in every later P-sample.
    Perpetual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    Fixed(u64),
    KnownBudget { eps: f64, delta: f64, budget: u64, gamma: f64 },
    /// Stop at the first `R >= R0` where at most an `eps / (2 Gamma)`
    /// fraction of the P-samples had violations.
    UnknownBudget { eps: f64, delta: f64, gamma: f64 },
    Adaptive { eps: f64, delta: f64, gamma: f64 },
}

impl StoppingRule {
    pub fn eps(&self) -> Option<f64> {
        match *self {
            StoppingRule::Fixed(_) => None,
            StoppingRule::KnownBudget { eps, .. }
            | StoppingRule::UnknownBudget { eps, .. }
            | StoppingRule::Adaptive { eps, .. } => Some(eps),
        }
    }

    /// Number of P-samples fixed in advance, if any.
    pub fn planned(&self) -> Option<SampleCount> {
        match *self {
            StoppingRule::Fixed(r) => Some(SampleCount { real: r as f64, samples: r }),
            StoppingRule::KnownBudget { eps, delta, budget, gamma } => Some(known_budget_samples(eps, delta, budget, gamma)),
            _ => None,
        }
    }

    /// `10 max(R0, 2 C Gamma / eps)` when the budget cap is known to the
    /// caller, [`DEFAULT_HARD_CAP`] otherwise.
    pub fn default_hard_cap(&self, budget: BudgetKind) -> u64 {
        match (*self, budget.cap()) {
            (StoppingRule::UnknownBudget { eps, delta, gamma }, Some(c)) => {
                let r0 = unknown_budget_min_samples(eps, delta, gamma).samples;
                10 * r0.max(budget_samples(eps, c, gamma).samples)
            }
            _ => DEFAULT_HARD_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub honest: usize,
    pub protocol: Protocol,
    pub punishment: Punishment,
    pub budget: BudgetKind,
    pub seed: u64,
    pub run_index: u64,
    pub hard_cap: Option<u64>,
    /// Keep one [`SampleRecord`] per P-sample.
    pub record_samples: bool,
    /// Keep every permutation.
    pub record_sigmas: bool,
}

impl RunConfig {
    /// `NaivePerm`, count-only punishment, no budget, per-sample records on.
    pub fn new(honest: usize, seed: u64) -> Self {
        RunConfig {
            honest,
            protocol: Protocol::Naive,
            punishment: Punishment::CountOnly,
            budget: BudgetKind::Known(0),
            seed,
            run_index: 0,
            hard_cap: None,
            record_samples: true,
            record_sigmas: false,
        }
    }
}

/// Reward decomposition of one P-sample for the honest player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    /// Reward without this sample's violations.
    pub y: f64,
    /// Damage `y - x`.
    pub z: f64,
    /// Reward received.
    pub x: f64,
    pub dev: u32,
    pub used: u64,
    /// 1-based rank of the honest player.
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub x: Vec<f64>,
    /// Error level reported by the adaptive rule, or the configured `eps`.
    pub epsilon_hat: Option<f64>,
    pub per_sample: Vec<SampleRecord>,
    pub samples_used: u64,
    /// Total violations, i.e. budget units spent.
    pub violations: u64,
    /// P-samples with at least one violation.
    pub violated_samples: u64,
    /// `sum_j Z_j`.
    pub damage: f64,
    /// `sum_j X_j`.
    pub honest_total: f64,
    pub seed: u64,
    pub run_index: u64,
    /// Players punished, in order of detection.
    pub punished: Vec<usize>,
    pub sigmas: Vec<Vec<usize>>,
}

impl RunRecord {
    pub fn honest_share(&self, honest: usize) -> f64 {
        self.x[honest]
    }
}

/// The sampling allocation as a state machine: one call to [`Allocation::step`] per
/// P-sample.
pub struct Allocation<'g, G: Game + ?Sized> {
    game: &'g G,
    config: RunConfig,
    streams: Streams,
    budget: Budget,
    z: Vec<f64>,
    samples: u64,
    violations: u64,
    violated_samples: u64,
    damage: f64,
    honest_total: f64,
    active: Vec<usize>,
    pinned: Vec<usize>,
    punished: Vec<usize>,
    per_sample: Vec<SampleRecord>,
    sigmas: Vec<Vec<usize>>,
}

impl<'g, G: Game + ?Sized> Allocation<'g, G> {
    pub fn new(game: &'g G, config: RunConfig) -> Result<Self> {
        let n = game.players();
        if config.honest >= n {
            return Err(Error::UnknownPlayer { player: config.honest, players: n });
        }
        if let BudgetKind::Rate(f) = config.budget {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidParameter(alloc::format!("violation rate {f} is outside [0, 1]")));
            }
        }
        Ok(Allocation {
            game,
            streams: Streams::for_run(config.seed, config.run_index),
            budget: Budget::new(config.budget),
            z: vec![0.0; n],
            samples: 0,
            violations: 0,
            violated_samples: 0,
            damage: 0.0,
            honest_total: 0.0,
            active: (0..n).collect(),
            pinned: Vec::new(),
            punished: Vec::new(),
            per_sample: Vec::new(),
            sigmas: Vec::new(),
            config,
        })
    }

    pub fn step(&mut self, adversary: &mut dyn Adversary) -> SampleRecord {
        let honest = self.config.honest;
        let mut parties = Parties {
            honest,
            streams: &mut self.streams,
            adversary,
            budget: &mut self.budget,
            sample: self.samples,
            pinned: &self.pinned,
        };
        let out = self.config.protocol.sample(&mut parties, &self.active);
        let rec = self.account(&out);
        if self.config.punishment == Punishment::Perpetual {
            for d in out.dev.iter().filter(|&d| d != honest) {
                self.punished.push(d);
                self.pinned.push(d);
                self.active.retain(|&p| p != d);
            }
            self.pinned.sort_unstable();
        }
        if self.config.record_samples {
            self.per_sample.push(rec);
        }
        if self.config.record_sigmas {
            self.sigmas.push(out.sigma);
        }
        rec
    }

    fn account(&mut self, out: &PSampleOutcome) -> SampleRecord {
        let honest = self.config.honest;
        let mut pred = Coalition::empty();
        let mut before = self.game.value(&pred);
        let (mut x, mut rank) = (0.0, 0);
        for (j, &p) in out.sigma.iter().enumerate() {
            pred.insert(p);
            let after = self.game.value(&pred);
            self.z[p] += after - before;
            if p == honest {
                x = after - before;
                rank = j as u32 + 1;
            }
            before = after;
        }
        let y = match &out.counterfactual {
            Some(cf) => honest_reward(self.game, cf, honest),
            None => x,
        };
        self.samples += 1;
        self.violations += out.violations_used;
        if !out.dev.is_empty() {
            self.violated_samples += 1;
        }
        self.damage += y - x;
        self.honest_total += x;
        SampleRecord { y, z: y - x, x, dev: out.dev.len() as u32, used: out.violations_used, rank }
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn violations(&self) -> u64 {
        self.violations
    }

    pub fn violated_samples(&self) -> u64 {
        self.violated_samples
    }

    /// `z / R`, or zeros before the first P-sample.
    pub fn average(&self) -> Vec<f64> {
        let r = self.samples.max(1) as f64;
        self.z.iter().map(|v| v / r).collect()
    }

    pub fn finish(self, x: Vec<f64>, epsilon_hat: Option<f64>) -> RunRecord {
        RunRecord {
            x,
            epsilon_hat,
            per_sample: self.per_sample,
            samples_used: self.samples,
            violations: self.violations,
            violated_samples: self.violated_samples,
            damage: self.damage,
            honest_total: self.honest_total,
            seed: self.config.seed,
            run_index: self.config.run_index,
            punished: self.punished,
            sigmas: self.sigmas,
        }
    }

    pub fn finish_average(self, epsilon_hat: Option<f64>) -> RunRecord {
        let x = self.average();
        self.finish(x, epsilon_hat)
    }
}

/// `mu_honest` of its predecessors in `sigma`.
pub fn honest_reward<G: Game + ?Sized>(game: &G, sigma: &[usize], honest: usize) -> f64 {
    let at = sigma.iter().position(|&p| p == honest).expect("honest player missing from the permutation");
    let pred: Coalition = sigma[..at].iter().collect();
    game.value(&pred.with(honest)) - game.value(&pred)
}

/// Runs the sampling allocation under `stopping`; adaptive rules go to [`run_adaptive`].
pub fn run_allocation<G: Game + ?Sized>(
    game: &G,
    config: &RunConfig,
    stopping: StoppingRule,
    adversary: &mut dyn Adversary,
) -> Result<RunRecord> {
    let mut a = Allocation::new(game, config.clone())?;
    match stopping {
        StoppingRule::Fixed(_) | StoppingRule::KnownBudget { .. } => {
            let r = stopping.planned().map_or(0, |p| p.samples);
            for _ in 0..r {
                a.step(adversary);
            }
            Ok(a.finish_average(stopping.eps()))
        }
        StoppingRule::UnknownBudget { eps, delta, gamma } => {
            let r0 = unknown_budget_min_samples(eps, delta, gamma).samples.max(1);
            let cap = config.hard_cap.unwrap_or_else(|| stopping.default_hard_cap(config.budget));
            loop {
                a.step(adversary);
                let r = a.samples();
                if r >= r0 && a.violated_samples() as f64 <= eps / (2.0 * gamma) * r as f64 {
                    return Ok(a.finish_average(Some(eps)));
                }
                if r >= cap {
                    return Err(Error::HardCapReached { cap, violated: a.violated_samples() });
                }
            }
        }
        StoppingRule::Adaptive { eps, delta, gamma } => run_adaptive(game, config, eps, delta, gamma, adversary),
    }
}

/// Adaptive allocation for a rate budget. Levels `eps_k = 2^-k` are certified one at a time; the run
/// stops when `eps_k <= eps` or when the violation count
/// `V = sum_j |Dev_j|` exceeds `eps_{k+1} / (2 Gamma)` of the samples at a
/// certification point. Returns the last certified average and `eps_k`.
pub fn run_adaptive<G: Game + ?Sized>(
    game: &G,
    config: &RunConfig,
    eps: f64,
    delta: f64,
    gamma: f64,
    adversary: &mut dyn Adversary,
) -> Result<RunRecord> {
    if !(eps > 0.0 && delta > 0.0 && delta < 1.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "adaptive rule needs eps > 0, 0 < delta < 1, Gamma > 0; got {eps}, {delta}, {gamma}"
        )));
    }
    let mut a = Allocation::new(game, config.clone())?;
    let mut k = 0u32;
    let mut x = vec![0.0; game.players()];
    let mut v = 0u64;
    while adaptive_epsilon(k) > eps {
        let rec = a.step(adversary);
        v += rec.dev as u64;
        let r = a.samples() as f64;
        if r >= adaptive_threshold(k + 1, delta, gamma) {
            if v as f64 > adaptive_epsilon(k + 1) / (2.0 * gamma) * r {
                break;
            }
            x = a.average();
            k += 1;
        }
    }
    Ok(a.finish(x, Some(adaptive_epsilon(k))))
}

/// Mean and standard error of the honest allocation over repeated runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub runs: u64,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        Estimate { mean, stderr: sqrt(var / m), runs: values.len() as u64 }
    }
}

/// `runs` independent allocations with `samples` P-samples each; run `m`
/// uses run index `config.run_index + m` and a fresh adversary.
pub fn expected_reward_estimate<G, A, F>(
    game: &G,
    config: &RunConfig,
    samples: u64,
    runs: u64,
    mut adversary: F,
) -> Result<Estimate>
where
    G: Game + ?Sized,
    A: Adversary,
    F: FnMut(u64) -> A,
{
    if runs == 0 {
        return Err(Error::InvalidParameter("at least one run is needed".into()));
    }
    let cfg = RunConfig { record_samples: false, record_sigmas: false, ..config.clone() };
    let mut shares = Vec::with_capacity(runs as usize);
    for m in 0..runs {
        let mut adv = adversary(m);
        let rec = run_allocation(game, &RunConfig { run_index: cfg.run_index + m, ..cfg.clone() }, StoppingRule::Fixed(samples), &mut adv)?;
        shares.push(rec.x[config.honest]);
    }
    Ok(Estimate::from_samples(&shares))
}
