use thiserror::Error;

use crate::world::VehicleId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("vehicle {0} is not an alive agent")]
    UnknownAgent(VehicleId),

    #[error("policy failed at tick {tick}: {reason}")]
    Policy { tick: u64, reason: String },

    #[error("chain is reducible: states {unreachable:?} are not mutually reachable with state 0")]
    Reducible { unreachable: Vec<usize> },

    #[error("basis matrix is rank deficient; dependent basis functions {indices:?}")]
    RankDeficient { indices: Vec<usize> },

    #[error("gradient objective cannot identify parameters: every basis function is constant")]
    AllConstantBasis,

    #[error("lateral gradient undefined at the target lane")]
    LateralKink,

    #[error("chain diverged: {0}")]
    Diverged(String),

    #[error("invalid MDP: {0}")]
    Mdp(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
