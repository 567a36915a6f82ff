//! Experiment configuration: a flat `key = value` file, overridden by
//! command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use maximin_core::{BudgetKind, Protocol, Punishment};

/// Every recognised key. Dashes in keys are read as underscores.
pub const KEYS: &[&str] = &[
    "game",
    "n",
    "honest",
    "partner",
    "hypergraph",
    "padding",
    "protocol",
    "adversary",
    "budget",
    "c",
    "f",
    "eps",
    "delta",
    "gamma",
    "stopping",
    "r",
    "m",
    "seed",
    "output",
    "punishment",
    "greedy",
    "max_r",
    "sweep",
    "jobs",
    "full_scale",
    "hard_cap",
    "per_sample",
    "memory_cap",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag => f.write_str("command line"),
            Origin::Default => f.write_str("defaults"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{origin}: `{key}`: {message}")]
    Field { origin: Origin, key: String, message: String },
    #[error("{origin}: {message}")]
    Syntax { origin: Origin, message: String },
    #[error("{0}")]
    Inconsistent(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Unparsed key/value pairs with where each came from.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Origin)>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl RawConfig {
    pub fn parse_file(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let origin = Origin::File { path: path.to_path_buf(), line: i + 1 };
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::Syntax { origin, message: format!("expected `key = value`, found `{body}`") });
            };
            let key = normalize(k);
            if let Some((_, Origin::File { line, .. })) = raw.entries.get(&key) {
                return Err(ConfigError::Field { origin, key, message: format!("already set on line {line}") });
            }
            raw.set(&key, v.trim(), origin)?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse_file(&text, path)
    }

    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        let key = normalize(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::Field { origin, key, message: "unknown key".into() });
        }
        self.entries.insert(key, (value.to_string(), origin));
        Ok(())
    }

    /// Applies `(key, value)` flag overrides; flags win over the file.
    pub fn override_with<'a, I>(&mut self, flags: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        for (k, v) in flags {
            self.set(k, v, Origin::Flag)?;
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, &Origin)> {
        self.entries.get(key).map(|(v, o)| (v.as_str(), o))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some((v, origin)) => v.parse::<T>().map(Some).map_err(|_| ConfigError::Field {
                origin: origin.clone(),
                key: key.into(),
                message: format!("cannot parse `{v}`"),
            }),
        }
    }

    fn field_err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let origin = self.get(key).map_or(Origin::Default, |(_, o)| o.clone());
        ConfigError::Field { origin, key: key.into(), message: message.into() }
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Result<Option<T>, ConfigError> {
        let Some((v, _)) = self.get(key) else { return Ok(None) };
        let v = v.to_ascii_lowercase().replace('_', "-");
        options.iter().find(|(name, _)| *name == v).map(|&(_, t)| Some(t)).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            self.field_err(key, format!("expected one of {}", names.join(", ")))
        })
    }

    fn boolean(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.choice(key, &[("true", true), ("false", false), ("1", true), ("0", false), ("yes", true), ("no", false)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameSpec {
    /// The lower-bound game; the honest player is 0.
    LowerBound { n: usize },
    Pair { n: usize, partner: usize },
    MaxGamma { n: usize },
    /// Edge synergy game read from a file, padded with isolated players up
    /// to `total` players when set.
    Hypergraph { path: PathBuf, total: Option<usize>, padding: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameName {
    LowerBound,
    Pair,
    MaxGamma,
    Hypergraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryKind {
    Passive,
    Cyclic,
    Block,
    Dp,
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoppingKind {
    Fixed,
    Known,
    Unknown,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BudgetName {
    Known,
    Unknown,
    Rate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    N(Vec<usize>),
    C(Vec<u64>),
    Eps(Vec<f64>),
}

impl Sweep {
    pub fn parameter(&self) -> &'static str {
        match self {
            Sweep::N(_) => "n",
            Sweep::C(_) => "c",
            Sweep::Eps(_) => "eps",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::N(v) => v.len(),
            Sweep::C(v) => v.len(),
            Sweep::Eps(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub honest: usize,
    pub protocol: Protocol,
    pub adversary: AdversaryKind,
    pub budget: BudgetKind,
    pub eps: f64,
    pub delta: f64,
    /// Replaces the computed Gamma in every formula when set.
    pub gamma: Option<f64>,
    pub stopping: StoppingKind,
    pub samples: Option<u64>,
    pub runs: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub punishment: Punishment,
    pub greedy: bool,
    pub max_samples: Option<u64>,
    pub sweep: Option<Sweep>,
    pub jobs: Option<usize>,
    pub full_scale: bool,
    pub hard_cap: Option<u64>,
    pub per_sample: Option<bool>,
    pub memory_cap: Option<u128>,
}

fn list<T: std::str::FromStr>(raw: &RawConfig, text: &str) -> Result<Vec<T>, ConfigError> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| raw.field_err("sweep", format!("cannot parse `{}`", s.trim()))))
        .collect()
}

impl ExperimentConfig {
    /// Reads `file` if given, applies `flags`, then validates.
    pub fn resolve<'a, I>(file: Option<&Path>, flags: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut raw = match file {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::default(),
        };
        raw.override_with(flags)?;
        Self::from_raw(&raw)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let name = raw.choice(
            "game",
            &[
                ("lb", GameName::LowerBound),
                ("lower-bound", GameName::LowerBound),
                ("pair", GameName::Pair),
                ("max-gamma", GameName::MaxGamma),
                ("hypergraph", GameName::Hypergraph),
                ("synergy", GameName::Hypergraph),
            ],
        )?;
        let path: Option<PathBuf> = raw.get("hypergraph").map(|(v, _)| PathBuf::from(v));
        let name = match (name, &path) {
            (None, None) => return Err(ConfigError::Inconsistent("no game given: set `game` or `hypergraph`".into())),
            (None, Some(_)) => GameName::Hypergraph,
            (Some(GameName::Hypergraph), None) => {
                return Err(raw.field_err("hypergraph", "the hypergraph game needs a file path"));
            }
            (Some(g), Some(_)) if g != GameName::Hypergraph => {
                return Err(raw.field_err("hypergraph", "two game specifications: `game` names a built-in game"));
            }
            (Some(g), _) => g,
        };
        let n: Option<usize> = raw.parsed("n")?;
        let honest: Option<usize> = raw.parsed("honest")?;
        let padding: Option<usize> = raw.parsed("padding")?;
        if name != GameName::Hypergraph && padding.is_some() {
            return Err(raw.field_err("padding", "only the hypergraph game takes padding"));
        }
        if name != GameName::Pair && raw.get("partner").is_some() {
            return Err(raw.field_err("partner", "only the pair game has a partner"));
        }
        let need_n = || n.ok_or_else(|| raw.field_err("n", "the player count is required for this game"));
        let honest_default = honest.unwrap_or(0);
        let game = match name {
            GameName::LowerBound => {
                if honest_default != 0 {
                    return Err(raw.field_err("honest", "the lower-bound game's honest player is 0"));
                }
                GameSpec::LowerBound { n: need_n()? }
            }
            GameName::MaxGamma => GameSpec::MaxGamma { n: need_n()? },
            GameName::Pair => {
                let partner = raw.parsed("partner")?.unwrap_or(if honest_default == 0 { 1 } else { 0 });
                GameSpec::Pair { n: need_n()?, partner }
            }
            GameName::Hypergraph => {
                if n.is_some() && padding.is_some() {
                    return Err(raw.field_err("padding", "give either `n` or `padding`, not both"));
                }
                GameSpec::Hypergraph { path: path.expect("checked above"), total: n, padding: padding.unwrap_or(0) }
            }
        };

        let protocol = raw.choice("protocol", &[("naive", Protocol::Naive), ("seq", Protocol::Seq)])?.unwrap_or(Protocol::Seq);
        let adversary = raw
            .choice(
                "adversary",
                &[
                    ("passive", AdversaryKind::Passive),
                    ("cyclic", AdversaryKind::Cyclic),
                    ("block", AdversaryKind::Block),
                    ("dp", AdversaryKind::Dp),
                    ("always", AdversaryKind::Always),
                ],
            )?
            .unwrap_or(AdversaryKind::Passive);
        let budget_name = raw
            .choice("budget", &[("known", BudgetName::Known), ("unknown", BudgetName::Unknown), ("rate", BudgetName::Rate)])?
            .unwrap_or(BudgetName::Known);
        let c: Option<u64> = raw.parsed("c")?;
        let f: Option<f64> = raw.parsed("f")?;
        let budget = match budget_name {
            BudgetName::Rate => {
                if c.is_some() {
                    return Err(raw.field_err("c", "a rate budget is set with `f`"));
                }
                let f = f.ok_or_else(|| raw.field_err("f", "a rate budget needs `f`"))?;
                if !(0.0..=1.0).contains(&f) {
                    return Err(raw.field_err("f", "the violation rate must lie in [0, 1]"));
                }
                BudgetKind::Rate(f)
            }
            kind => {
                if f.is_some() {
                    return Err(raw.field_err("f", "`f` only applies to `budget = rate`"));
                }
                let c = c.unwrap_or(0);
                if kind == BudgetName::Known {
                    BudgetKind::Known(c)
                } else {
                    BudgetKind::Unknown(c)
                }
            }
        };

        let eps: f64 = raw.parsed("eps")?.unwrap_or(0.1);
        if !(eps > 0.0 && eps < 1.0) {
            return Err(raw.field_err("eps", "must lie in (0, 1)"));
        }
        let delta: f64 = raw.parsed("delta")?.unwrap_or(0.1);
        if !(delta > 0.0 && delta < 1.0) {
            return Err(raw.field_err("delta", "must lie in (0, 1)"));
        }
        let gamma: Option<f64> = raw.parsed("gamma")?;
        if gamma.is_some_and(|g| !(g.is_finite() && g > 0.0)) {
            return Err(raw.field_err("gamma", "must be a positive real"));
        }
        let samples: Option<u64> = raw.parsed("r")?;
        if samples == Some(0) {
            return Err(raw.field_err("r", "at least one P-sample is needed"));
        }
        let stopping = raw
            .choice(
                "stopping",
                &[
                    ("fixed", StoppingKind::Fixed),
                    ("known", StoppingKind::Known),
                    ("known-budget", StoppingKind::Known),
                    ("unknown", StoppingKind::Unknown),
                    ("unknown-budget", StoppingKind::Unknown),
                    ("adaptive", StoppingKind::Adaptive),
                ],
            )?
            .unwrap_or(if samples.is_some() { StoppingKind::Fixed } else { StoppingKind::Known });
        match stopping {
            StoppingKind::Fixed if samples.is_none() => return Err(raw.field_err("r", "fixed stopping needs `r`")),
            StoppingKind::Fixed => {}
            _ if samples.is_some() => return Err(raw.field_err("r", "`r` only applies to `stopping = fixed`")),
            _ => {}
        }
        let runs: u64 = raw.parsed("m")?.unwrap_or(1);
        if runs == 0 {
            return Err(raw.field_err("m", "at least one run is needed"));
        }
        let punishment = raw
            .choice(
                "punishment",
                &[("count-only", Punishment::CountOnly), ("count", Punishment::CountOnly), ("perpetual", Punishment::Perpetual)],
            )?
            .unwrap_or(Punishment::CountOnly);
        let sweep = match raw.get("sweep") {
            None => None,
            Some((text, _)) => {
                let (param, values) =
                    text.split_once(':').ok_or_else(|| raw.field_err("sweep", "expected `<n|c|eps>:v1,v2,..`"))?;
                let sweep = match normalize(param).as_str() {
                    "n" => Sweep::N(list(raw, values)?),
                    "c" => Sweep::C(list(raw, values)?),
                    "eps" => Sweep::Eps(list(raw, values)?),
                    other => return Err(raw.field_err("sweep", format!("cannot sweep over `{other}`"))),
                };
                if let Sweep::Eps(v) = &sweep {
                    if v.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                        return Err(raw.field_err("sweep", "every eps must lie in (0, 1)"));
                    }
                }
                Some(sweep)
            }
        };
        let jobs: Option<usize> = raw.parsed("jobs")?;
        if jobs == Some(0) {
            return Err(raw.field_err("jobs", "at least one worker is needed"));
        }

        let cfg = ExperimentConfig {
            game,
            honest: honest_default,
            protocol,
            adversary,
            budget,
            eps,
            delta,
            gamma,
            stopping,
            samples,
            runs,
            seed: raw.parsed("seed")?.unwrap_or(0),
            output: raw.get("output").map(|(v, _)| PathBuf::from(v)),
            punishment,
            greedy: raw.boolean("greedy")?.unwrap_or(false),
            max_samples: raw.parsed("max_r")?,
            sweep,
            jobs,
            full_scale: raw.boolean("full_scale")?.unwrap_or(false),
            hard_cap: raw.parsed("hard_cap")?,
            per_sample: raw.boolean("per_sample")?,
            memory_cap: raw.parsed("memory_cap")?,
        };
        cfg.check_combination(raw)?;
        Ok(cfg)
    }

    fn check_combination(&self, raw: &RawConfig) -> Result<(), ConfigError> {
        let adv = |m: &str| raw.field_err("adversary", m.to_string());
        match self.adversary {
            AdversaryKind::Cyclic if self.protocol != Protocol::Naive => return Err(adv("cyclic shift attacks NaivePerm")),
            AdversaryKind::Block => {
                if !matches!(self.game, GameSpec::LowerBound { .. }) {
                    return Err(adv("the block attack needs the lower-bound game"));
                }
                if self.protocol != Protocol::Seq {
                    return Err(adv("the block attack targets SeqPerm"));
                }
            }
            AdversaryKind::Dp => {
                if self.protocol != Protocol::Seq {
                    return Err(adv("the optimal adversary targets SeqPerm"));
                }
                if matches!(self.budget, BudgetKind::Rate(_)) {
                    return Err(adv("the optimal adversary needs a budget count, not a rate"));
                }
                if self.stopping == StoppingKind::Adaptive {
                    return Err(adv("the optimal adversary needs the number of P-samples in advance"));
                }
            }
            _ => {}
        }
        if self.stopping == StoppingKind::Adaptive && self.protocol != Protocol::Naive {
            return Err(raw.field_err("protocol", "the adaptive rule runs on NaivePerm"));
        }
        if self.stopping == StoppingKind::Known && !matches!(self.budget, BudgetKind::Known(_)) {
            return Err(raw.field_err("stopping", "known-budget stopping needs `budget = known`"));
        }
        if self.greedy && self.adversary != AdversaryKind::Block {
            return Err(raw.field_err("greedy", "only the block attack has a greedy variant"));
        }
        if self.honest >= self.players_hint().unwrap_or(usize::MAX) {
            return Err(raw.field_err("honest", "out of range"));
        }
        if let GameSpec::Pair { partner, n } = self.game {
            if partner == self.honest || partner >= n {
                return Err(raw.field_err("partner", "must be another player"));
            }
        }
        Ok(())
    }

    /// Player count when it is known without reading files.
    pub fn players_hint(&self) -> Option<usize> {
        match self.game {
            GameSpec::LowerBound { n } | GameSpec::Pair { n, .. } | GameSpec::MaxGamma { n } => Some(n),
            GameSpec::Hypergraph { total, .. } => total,
        }
    }

    pub fn budget_cap(&self) -> u64 {
        self.budget.cap().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(file: &str, flags: &[(&str, &str)]) -> Result<ExperimentConfig, ConfigError> {
        let mut raw = RawConfig::parse_file(file, Path::new("exp.cfg"))?;
        raw.override_with(flags.iter().copied())?;
        ExperimentConfig::from_raw(&raw)
    }

    #[test]
    fn flags_win() {
        let cfg = resolve("game = lb\nn = 8\neps = 0.2 # comment\n", &[("eps", "0.05"), ("seed", "7")]).unwrap();
        assert_eq!(cfg.eps, 0.05);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.game, GameSpec::LowerBound { n: 8 });
        assert_eq!(cfg.stopping, StoppingKind::Known);
    }

    #[test]
    fn exactly_one_game() {
        assert!(matches!(resolve("n = 4\n", &[]), Err(ConfigError::Inconsistent(_))));
        assert!(resolve("game = lb\nn = 4\nhypergraph = g.hg\n", &[]).is_err());
        let cfg = resolve("hypergraph = g.hg\npadding = 3\n", &[]).unwrap();
        assert!(matches!(cfg.game, GameSpec::Hypergraph { padding: 3, .. }));
    }

    #[test]
    fn diagnostics_name_line_and_key() {
        let err = resolve("game = lb\n\nn = x\n", &[]).unwrap_err().to_string();
        assert!(err.contains("exp.cfg:3") && err.contains("`n`"), "{err}");
        let err = resolve("game = lb\nbogus = 1\n", &[]).unwrap_err().to_string();
        assert!(err.contains("exp.cfg:2") && err.contains("unknown key"), "{err}");
        let err = resolve("game lb\n", &[]).unwrap_err().to_string();
        assert!(err.contains("exp.cfg:1"), "{err}");
        let err = resolve("game = lb\nn = 4\n", &[("eps", "2")]).unwrap_err().to_string();
        assert!(err.contains("command line"), "{err}");
    }

    #[test]
    fn combinations_are_checked() {
        assert!(resolve("game = pair\nn = 4\nadversary = block\n", &[]).is_err());
        assert!(resolve("game = lb\nn = 4\nadversary = cyclic\n", &[]).is_err());
        assert!(resolve("game = lb\nn = 4\nadversary = dp\nbudget = rate\nf = 0.1\nstopping = unknown\n", &[]).is_err());
        assert!(resolve("game = lb\nn = 4\nstopping = adaptive\n", &[]).is_err());
        assert!(resolve("game = lb\nn = 4\nstopping = adaptive\nprotocol = naive\nbudget = rate\nf = 0.1\n", &[]).is_ok());
        assert!(resolve("game = pair\nn = 4\npartner = 0\n", &[]).is_err());
    }

    #[test]
    fn sweeps() {
        let cfg = resolve("game = lb\nn = 10\nsweep = c:1,2,3\n", &[]).unwrap();
        assert_eq!(cfg.sweep, Some(Sweep::C(vec![1, 2, 3])));
        assert!(resolve("game = lb\nn = 10\nsweep = q:1\n", &[]).is_err());
    }
}
