//! Drivers behind the CLI subcommands. Each returns a [`Table`]; rows are
//! assembled in a fixed order whatever the worker count.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use maximin_core::adversary::{always_abort, block_attack, cyclic_shift, passive, DpAdversary, DpTable, StateSpace};
use maximin_core::adversary::dp::{min_samples_in, DEFAULT_MEMORY_CAP};
use maximin_core::bounds::{adaptive_epsilon, adaptive_threshold, budget_samples, ceil_tolerant, lower_bound_samples, unknown_budget_min_samples};
use maximin_core::games::{make_lb_game, make_max_gamma_game, make_pair_game, make_synergy_game, LowerBoundGame};
use maximin_core::runner::Allocation;
use maximin_core::{
    run_allocation, shapley_exact, Adversary, BudgetKind, Error, Game, RunConfig, RunRecord, ShapleyReport, StoppingRule,
};

use crate::cells;
use crate::config::{AdversaryKind, ExperimentConfig, GameSpec, StoppingKind, Sweep};
use crate::csvout::Table;
use crate::error::CliError;
use crate::hgfile;

/// Environment variable naming the directory for relative or default
/// output paths.
pub const OUT_DIR_ENV: &str = "MAXIMIN_OUT_DIR";

/// Largest `R * M * n` run without `full_scale`.
pub const DESK_SAMPLE_WORK: f64 = 2e8;
/// Largest number of optimal-adversary table cells computed without
/// `full_scale`.
pub const DESK_DP_CELLS: f64 = 5e9;

/// A game with its honest player and exact Shapley report.
pub struct Instance {
    pub game: Box<dyn Game>,
    pub lb: Option<LowerBoundGame>,
    pub honest: usize,
    pub report: ShapleyReport,
    pub name: String,
}

impl Instance {
    pub fn build(spec: &GameSpec, honest: usize) -> Result<Self, CliError> {
        let (game, lb, name): (Box<dyn Game>, _, _) = match spec {
            GameSpec::LowerBound { n } => {
                let g = make_lb_game(*n)?;
                (Box::new(g.clone()), Some(g), format!("lb(n={n})"))
            }
            GameSpec::Pair { n, partner } => (Box::new(make_pair_game(*n, honest, *partner)?), None, format!("pair(n={n})")),
            GameSpec::MaxGamma { n } => (Box::new(make_max_gamma_game(*n)?), None, format!("max-gamma(n={n})")),
            GameSpec::Hypergraph { path, total, padding } => {
                let graph = hgfile::load(path)?;
                let extra = match total {
                    Some(t) if *t < graph.vertices() => {
                        return Err(CliError::Core(Error::InvalidParameter(format!(
                            "n = {t} is below the {} vertices of {}",
                            graph.vertices(),
                            path.display()
                        ))))
                    }
                    Some(t) => t - graph.vertices(),
                    None => *padding,
                };
                let graph = graph.padded(extra)?;
                let n = graph.vertices();
                (Box::new(make_synergy_game(graph)), None, format!("synergy({}, n={n})", path.display()))
            }
        };
        if honest >= game.players() {
            return Err(Error::UnknownPlayer { player: honest, players: game.players() }.into());
        }
        let report = shapley_exact(&*game)?;
        Ok(Instance { game, lb, honest, report, name })
    }

    pub fn players(&self) -> usize {
        self.game.players()
    }

    pub fn phi(&self) -> f64 {
        self.report.phi[self.honest]
    }

    pub fn u_max(&self) -> f64 {
        self.report.u_max[self.honest]
    }
}

/// The configured Gamma override, else the game's Gamma.
pub fn gamma_for(cfg: &ExperimentConfig, inst: &Instance) -> f64 {
    cfg.gamma.unwrap_or(inst.report.gamma)
}

pub fn stopping_rule(cfg: &ExperimentConfig, gamma: f64) -> StoppingRule {
    let (eps, delta) = (cfg.eps, cfg.delta);
    match cfg.stopping {
        StoppingKind::Fixed => StoppingRule::Fixed(cfg.samples.expect("validated")),
        StoppingKind::Known => StoppingRule::KnownBudget { eps, delta, budget: cfg.budget_cap(), gamma },
        StoppingKind::Unknown => StoppingRule::UnknownBudget { eps, delta, gamma },
        StoppingKind::Adaptive => StoppingRule::Adaptive { eps, delta, gamma },
    }
}

/// P-samples a run is expected to take: exact for planned rules, the
/// guaranteed termination point `max(R0, 2 C Gamma / eps)` for the
/// unknown-budget rule, and the last level's threshold for the adaptive
/// rule.
pub fn expected_samples(cfg: &ExperimentConfig, rule: StoppingRule) -> u64 {
    match rule {
        StoppingRule::Fixed(_) | StoppingRule::KnownBudget { .. } => rule.planned().expect("planned").samples,
        StoppingRule::UnknownBudget { eps, delta, gamma } => unknown_budget_min_samples(eps, delta, gamma)
            .samples
            .max(budget_samples(eps, cfg.budget_cap(), gamma).samples)
            .max(1),
        StoppingRule::Adaptive { eps, delta, gamma } => {
            let mut k = 0;
            while adaptive_epsilon(k) > eps {
                k += 1;
            }
            ceil_tolerant(adaptive_threshold(k.max(1), delta, gamma))
        }
    }
}

fn gate(cfg: &ExperimentConfig, amount: f64, limit: f64, what: &str) -> Result<(), CliError> {
    if amount > limit && !cfg.full_scale {
        return Err(CliError::Gated(format!("{what} is about {amount:.3e}, above the desk-scale limit of {limit:.0e}")));
    }
    Ok(())
}

fn dp_cells(space: &StateSpace, budget: u64, samples: u64) -> f64 {
    space.states() as f64 * (budget as f64 + 1.0) * samples as f64
}

fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        b = b.num_threads(j);
    }
    b.build().map_err(|e| CliError::Pool(e.to_string()))
}

fn template(cfg: &ExperimentConfig) -> RunConfig {
    RunConfig {
        protocol: cfg.protocol,
        punishment: cfg.punishment,
        budget: cfg.budget,
        hard_cap: cfg.hard_cap,
        record_samples: cfg.per_sample.unwrap_or(cfg.runs == 1),
        ..RunConfig::new(0, cfg.seed)
    }
}

/// A fresh non-table adversary for one run.
pub fn make_adversary<'a>(cfg: &ExperimentConfig, inst: &'a Instance) -> Result<Box<dyn Adversary + 'a>, CliError> {
    Ok(match cfg.adversary {
        AdversaryKind::Passive => Box::new(passive()),
        AdversaryKind::Always => Box::new(always_abort()),
        AdversaryKind::Cyclic => Box::new(cyclic_shift(inst.players(), &[inst.honest])?),
        AdversaryKind::Block => {
            let lb = inst.lb.as_ref().ok_or_else(|| Error::Infeasible("the block attack needs the lower-bound game".into()))?;
            Box::new(block_attack(lb, cfg.eps, cfg.greedy))
        }
        AdversaryKind::Dp => unreachable!("the optimal adversary is driven in lockstep"),
    })
}

/// `cfg.runs` independent runs; run `m` uses run index `m`.
pub fn run_many(cfg: &ExperimentConfig, inst: &Instance) -> Result<Vec<RunRecord>, CliError> {
    let gamma = gamma_for(cfg, inst);
    let rule = stopping_rule(cfg, gamma);
    let expected = expected_samples(cfg, rule);
    gate(cfg, expected as f64 * cfg.runs as f64 * inst.players() as f64, DESK_SAMPLE_WORK, "R * M * n")?;
    let base = RunConfig { honest: inst.honest, ..template(cfg) };
    let pool = pool(cfg)?;
    if cfg.adversary == AdversaryKind::Dp {
        return pool.install(|| run_lockstep(cfg, inst, rule, expected, &base));
    }
    pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|m| {
                let mut adv = make_adversary(cfg, inst)?;
                let rc = RunConfig { run_index: m, ..base.clone() };
                Ok(run_allocation(&*inst.game, &rc, rule, &mut *adv)?)
            })
            .collect()
    })
}

/// Two-pass optimal adversary: the boundary is computed once, then for
/// each P-sample index one slice is rebuilt and every run still going
/// advances through it. Past the table's horizon the adversary is passive.
fn run_lockstep(
    cfg: &ExperimentConfig,
    inst: &Instance,
    rule: StoppingRule,
    horizon: u64,
    base: &RunConfig,
) -> Result<Vec<RunRecord>, CliError> {
    let game: &dyn Game = &*inst.game;
    let space = StateSpace::new(game, inst.honest)?;
    let c = cfg.budget_cap();
    gate(cfg, 2.0 * dp_cells(&space, c, horizon), DESK_DP_CELLS, "optimal-adversary table work")?;
    let table = DpTable::build_in(space, game, horizon as usize, c as usize, cfg.memory_cap.unwrap_or(DEFAULT_MEMORY_CAP))?;

    let cap = match rule {
        StoppingRule::UnknownBudget { .. } => cfg.hard_cap.unwrap_or_else(|| rule.default_hard_cap(cfg.budget)),
        _ => horizon,
    };
    let done = |a: &Allocation<'_, dyn Game>| -> bool {
        let r = a.samples();
        match rule {
            StoppingRule::UnknownBudget { eps, delta, gamma } => {
                r >= unknown_budget_min_samples(eps, delta, gamma).samples.max(1)
                    && a.violated_samples() as f64 <= eps / (2.0 * gamma) * r as f64
            }
            _ => r >= horizon,
        }
    };
    let mut runs = (0..cfg.runs)
        .map(|m| Allocation::new(game, RunConfig { run_index: m, ..base.clone() }).map(|a| (a, false)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut slice = Vec::new();
    let mut j = 0u64;
    while runs.iter().any(|(_, d)| !*d) {
        if j >= cap {
            let violated = runs.iter().filter(|(_, d)| !*d).map(|(a, _)| a.violated_samples()).max().unwrap_or(0);
            return Err(Error::HardCapReached { cap, violated }.into());
        }
        let t = horizon.checked_sub(j + 1).map(|t| t as usize);
        if let Some(t) = t {
            table.fill(t, &mut slice);
        }
        let slice = &slice;
        let table = &table;
        runs.par_iter_mut().filter(|(_, d)| !*d).for_each(|(a, d)| {
            match t {
                Some(t) => a.step(&mut DpAdversary::with_slice(table, t, slice)),
                None => a.step(&mut passive()),
            };
            *d = done(a);
        });
        j += 1;
    }
    Ok(runs.into_iter().map(|(a, _)| a.finish_average(rule.eps())).collect())
}

fn describe(t: &mut Table, cfg: &ExperimentConfig, inst: &Instance) {
    t.comment("game", inst.name.as_str())
        .comment("players", inst.players())
        .comment("honest", inst.honest)
        .comment("phi_honest", inst.phi())
        .comment("gamma", gamma_for(cfg, inst))
        .comment("seed", cfg.seed);
}

pub fn cmd_shapley(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let inst = Instance::build(&cfg.game, cfg.honest)?;
    let r = &inst.report;
    let mut t = Table::new(&["player", "phi", "u_max", "gamma_i"]);
    t.comment("game", inst.name.as_str())
        .comment("players", inst.players())
        .comment("gamma", r.gamma)
        .comment("closed_form", r.closed_form);
    for p in 0..inst.players() {
        t.row(cells![p, r.phi[p], r.u_max[p], r.gamma_per_player[p]]);
    }
    Ok(t)
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let inst = Instance::build(&cfg.game, cfg.honest)?;
    let records = run_many(cfg, &inst)?;
    let mut t = Table::new(&[
        "kind", "run", "j", "y", "z", "dev", "samples", "violations", "x_honest", "epsilon_hat", "seed",
    ]);
    describe(&mut t, cfg, &inst);
    t.comment("expected_samples", expected_samples(cfg, stopping_rule(cfg, gamma_for(cfg, &inst))));
    for rec in &records {
        for (j, s) in rec.per_sample.iter().enumerate() {
            t.row(cells![
                "sample", rec.run_index, j + 1, s.y, s.z, s.dev, None::<u64>, None::<u64>, None::<f64>, None::<f64>, None::<u64>
            ]);
        }
        t.row(cells![
            "trailer",
            rec.run_index,
            None::<u64>,
            None::<f64>,
            None::<f64>,
            None::<u64>,
            rec.samples_used,
            rec.violations,
            rec.x[inst.honest],
            rec.epsilon_hat,
            rec.seed
        ]);
    }
    Ok(t)
}

/// Multiplicative error `max(0, 1 - x / phi)`.
pub fn epsilon_hat(x: f64, phi: f64) -> f64 {
    if phi <= 0.0 {
        0.0
    } else {
        (1.0 - x / phi).max(0.0)
    }
}

/// Empirical CDF of the multiplicative error and where `(eps, 1 - delta)`
/// lies relative to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    pub sorted: Vec<f64>,
    /// Fraction of runs with error above `eps`.
    pub failure_fraction: f64,
    /// The point `(eps, 1 - delta)` is on or right of the curve.
    pub right_of_curve: bool,
}

impl Cdf {
    pub fn new(mut errors: Vec<f64>, eps: f64, delta: f64) -> Self {
        errors.sort_by(f64::total_cmp);
        let m = errors.len().max(1) as f64;
        let failure_fraction = errors.iter().filter(|&&e| e > eps).count() as f64 / m;
        Cdf { sorted: errors, failure_fraction, right_of_curve: 1.0 - failure_fraction >= 1.0 - delta }
    }
}

pub fn cdf_of(cfg: &ExperimentConfig) -> Result<(Instance, Cdf), CliError> {
    let inst = Instance::build(&cfg.game, cfg.honest)?;
    let records = run_many(cfg, &inst)?;
    let phi = inst.phi();
    let errors = records.iter().map(|r| epsilon_hat(r.x[inst.honest], phi)).collect();
    Ok((inst, Cdf::new(errors, cfg.eps, cfg.delta)))
}

pub fn cmd_cdf(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let (inst, cdf) = cdf_of(cfg)?;
    let mut t = Table::new(&["kind", "epsilon_hat", "cumulative"]);
    describe(&mut t, cfg, &inst);
    t.comment("runs", cfg.runs)
        .comment("failure_fraction", cdf.failure_fraction)
        .comment("right_of_curve", cdf.right_of_curve);
    let m = cdf.sorted.len() as f64;
    for (i, e) in cdf.sorted.iter().enumerate() {
        t.row(cells!["sample", *e, (i + 1) as f64 / m]);
    }
    t.row(cells!["theory", cfg.eps, 1.0 - cfg.delta]);
    Ok(t)
}

pub fn cmd_dp_table(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let inst = Instance::build(&cfg.game, cfg.honest)?;
    let gamma = gamma_for(cfg, &inst);
    let r = match cfg.stopping {
        StoppingKind::Fixed | StoppingKind::Known => expected_samples(cfg, stopping_rule(cfg, gamma)),
        _ => return Err(CliError::Gated("dp-table needs `r` or known-budget stopping".into())),
    };
    let c = cfg.budget_cap();
    let space = StateSpace::new(&*inst.game, inst.honest)?;
    gate(cfg, dp_cells(&space, c, r), DESK_DP_CELLS, "optimal-adversary table work")?;
    let table = DpTable::build_in(space, &*inst.game, r as usize, c as usize, cfg.memory_cap.unwrap_or(DEFAULT_MEMORY_CAP))?;
    let mut t = Table::new(&["T", "c", "E_worst"]);
    describe(&mut t, cfg, &inst);
    t.comment("u_max_honest", inst.u_max()).comment("states", table.space().states());
    for tt in 0..table.samples() {
        for cc in 0..=table.budget() {
            t.row(cells![tt, cc, table.boundary(tt, cc)]);
        }
    }
    Ok(t)
}

/// One point of a minimal-R scan.
#[derive(Debug, Clone, PartialEq)]
pub struct MinSamplesPoint {
    pub n: usize,
    pub budget: u64,
    pub eps: f64,
    pub gamma: f64,
    pub phi: f64,
    pub samples: Option<u64>,
    pub scanned: u64,
    pub best: f64,
    pub target: f64,
    /// `n C / (10 eps)`, for the lower-bound game.
    pub lower: Option<f64>,
    /// `Gamma C / eps`.
    pub upper: f64,
    pub stays_above: bool,
}

fn with_players(spec: &GameSpec, n: usize) -> GameSpec {
    match spec {
        GameSpec::LowerBound { .. } => GameSpec::LowerBound { n },
        GameSpec::Pair { partner, .. } => GameSpec::Pair { n, partner: *partner },
        GameSpec::MaxGamma { .. } => GameSpec::MaxGamma { n },
        GameSpec::Hypergraph { path, .. } => GameSpec::Hypergraph { path: path.clone(), total: Some(n), padding: 0 },
    }
}

/// The scan behind `min-samples` for a single parameter setting.
pub fn min_samples_point(cfg: &ExperimentConfig) -> Result<MinSamplesPoint, CliError> {
    let inst = Instance::build(&cfg.game, cfg.honest)?;
    let gamma = gamma_for(cfg, &inst);
    let c = cfg.budget_cap();
    let upper = gamma * c as f64 / cfg.eps;
    let max = cfg.max_samples.unwrap_or_else(|| ceil_tolerant(4.0 * upper).max(16));
    let space = StateSpace::new(&*inst.game, inst.honest)?;
    gate(cfg, dp_cells(&space, c, max), DESK_DP_CELLS, "optimal-adversary table work")?;
    let mut table = DpTable::build_in(space, &*inst.game, 0, c as usize, cfg.memory_cap.unwrap_or(DEFAULT_MEMORY_CAP))?;
    let scan = min_samples_in(&mut table, cfg.eps, max as usize)?;
    Ok(MinSamplesPoint {
        n: inst.players(),
        budget: c,
        eps: cfg.eps,
        gamma,
        phi: inst.phi(),
        samples: scan.samples,
        scanned: max,
        best: scan.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        target: scan.target,
        lower: inst.lb.as_ref().map(|_| lower_bound_samples(inst.players(), c, cfg.eps)),
        upper,
        stays_above: scan.stays_above,
    })
}

/// Every sweep point, in sweep order.
pub fn min_samples_sweep(cfg: &ExperimentConfig) -> Result<Vec<(String, MinSamplesPoint)>, CliError> {
    let points: Vec<(String, ExperimentConfig)> = match &cfg.sweep {
        None => vec![(String::new(), cfg.clone())],
        Some(Sweep::N(v)) => v.iter().map(|&n| (n.to_string(), ExperimentConfig { game: with_players(&cfg.game, n), ..cfg.clone() })).collect(),
        Some(Sweep::C(v)) => v
            .iter()
            .map(|&c| {
                let budget = match cfg.budget {
                    BudgetKind::Unknown(_) => BudgetKind::Unknown(c),
                    _ => BudgetKind::Known(c),
                };
                (c.to_string(), ExperimentConfig { budget, ..cfg.clone() })
            })
            .collect(),
        Some(Sweep::Eps(v)) => v.iter().map(|&e| (crate::csvout::real(e), ExperimentConfig { eps: e, ..cfg.clone() })).collect(),
    };
    pool(cfg)?.install(|| points.into_par_iter().map(|(label, p)| Ok((label, min_samples_point(&p)?))).collect())
}

pub fn cmd_min_samples(cfg: &ExperimentConfig) -> Result<(Table, Option<CliError>), CliError> {
    let points = min_samples_sweep(cfg)?;
    let param = cfg.sweep.as_ref().map_or("none", Sweep::parameter);
    let mut t = Table::new(&[
        "parameter", "value", "n", "c", "eps", "gamma", "phi", "r_min", "lower", "upper", "ratio", "stays_above",
    ]);
    t.comment("game", format!("{:?}", cfg.game)).comment("honest", cfg.honest);
    let mut exhausted = None;
    for (label, p) in &points {
        let ratio = p.samples.filter(|_| p.upper > 0.0).map(|r| r as f64 / p.upper);
        t.row(cells![param, label.as_str(), p.n, p.budget, p.eps, p.gamma, p.phi, p.samples, p.lower, p.upper, ratio, p.stays_above]);
        if p.samples.is_none() {
            t.comment(&format!("exhausted {param}={label}"), format!("scanned 1..={}, best ratio {} against target {}", p.scanned, crate::csvout::real(p.best), crate::csvout::real(p.target)));
            exhausted.get_or_insert(CliError::SearchExhausted { max: p.scanned, best: p.best, target: p.target });
        }
    }
    Ok((t, exhausted))
}

/// Where a subcommand's CSV goes: the configured path (relative paths
/// resolved against `$MAXIMIN_OUT_DIR` when set), else
/// `$MAXIMIN_OUT_DIR/<command>.csv`, else standard output.
pub fn output_path(cfg: &ExperimentConfig, command: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    match (&cfg.output, dir) {
        (Some(p), Some(d)) if p.is_relative() => Some(d.join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(d)) => Some(d.join(format!("{command}.csv"))),
        (None, None) => None,
    }
}

pub fn write_table(table: &Table, path: Option<&Path>) -> Result<(), CliError> {
    fn io(p: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: p.display().to_string(), source }
    }
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(io(parent))?;
            }
            let file = std::fs::File::create(p).map_err(io(p))?;
            table.write_to(std::io::BufWriter::new(file)).map_err(io(p))
        }
        None => table.write_to(std::io::stdout().lock()).map_err(io(Path::new("<stdout>"))),
    }
}
