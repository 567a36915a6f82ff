use crate::config::ConfigError;
use crate::hgfile::HgError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COMPUTE_CAP: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("hypergraph: {0}")]
    Hypergraph(#[from] HgError),
    #[error("{0}")]
    Core(#[from] maximin_core::Error),
    /// The workload exceeds desk scale and `full_scale` is off.
    #[error("{0}; pass --full-scale to run it anyway")]
    Gated(String),
    /// The sample-count scan ended without reaching the target.
    #[error("no R up to {max} reaches (1 - eps) phi; best ratio {best} against target {target}")]
    SearchExhausted { max: u64, best: f64, target: f64 },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use maximin_core::Error as E;
        match self {
            CliError::Config(ConfigError::Io { .. })
            | CliError::Hypergraph(HgError::Io { .. })
            | CliError::Io { .. }
            | CliError::Pool(_) => EXIT_IO,
            CliError::Config(_) | CliError::Hypergraph(_) | CliError::Gated(_) => EXIT_CONFIG,
            CliError::Core(E::HardCapReached { .. } | E::StateSpaceTooLarge { .. }) | CliError::SearchExhausted { .. } => {
                EXIT_COMPUTE_CAP
            }
            CliError::Core(_) => EXIT_CONFIG,
        }
    }
}
