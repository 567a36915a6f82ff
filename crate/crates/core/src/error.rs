use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("player {player} is already a member of the coalition")]
    PlayerInCoalition { player: usize },

    #[error("player {player} is out of range for a game with {players} players")]
    UnknownPlayer { player: usize, players: usize },

    #[error("rank {rank} is out of range 1..={players}")]
    RankOutOfRange { rank: usize, players: usize },

    #[error("{what} needs at most {limit} players, the game has {players}")]
    TooManyPlayers {
        what: &'static str,
        players: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("utility of coalition {mask:#x} is {value}, expected a finite non-negative real")]
    InvalidUtility { mask: u64, value: f64 },

    #[error("adversary strategy infeasible: {0}")]
    Infeasible(String),

    #[error("state space needs {required} bytes, above the configured cap of {cap} bytes")]
    StateSpaceTooLarge { required: u128, cap: u128 },

    #[error("stopping rule not satisfied after the hard cap of {cap} P-samples ({violated} samples with violations)")]
    HardCapReached { cap: u64, violated: u64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
