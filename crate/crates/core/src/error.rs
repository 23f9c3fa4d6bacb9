use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown history {0}")]
    UnknownHistory(String),

    #[error("unknown information set {0}")]
    UnknownInfoSet(String),

    #[error("information set {set} has no action {action:?}")]
    UnknownAction { set: String, action: String },

    #[error("strategy profile has no action for information set {0}")]
    MissingChoice(String),

    #[error("player {0} is not a prover of this game")]
    NotAProver(String),

    #[error("belief is not a distribution: {0}")]
    BadBelief(String),

    #[error("Bayes undefined: information set {0} is unreachable under the profile")]
    BayesUndefined(String),

    #[error("game is invalid: {0}")]
    InvalidGame(String),

    #[error("game does not have perfect recall: {0}")]
    ImperfectRecall(String),

    #[error("profile is not a strong sequential equilibrium")]
    NotAnSse,

    #[error("enumeration cap exceeded: profile space has {profiles} profiles, search visited more than {cap} candidates")]
    CapExceeded { profiles: String, cap: u64 },

    #[error("game has {nodes} nodes, above the limit of {cap}")]
    TooManyNodes { nodes: usize, cap: usize },

    #[error("{0}")]
    Instance(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("payment {0} is outside [-1, 1]")]
    PaymentOutOfRange(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
