use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("duplicate entity id {id}")]
    DuplicateEntity { id: String },

    #[error("row {row}: duplicate edge ({owner},{owned})")]
    DuplicateEdge {
        row: usize,
        owner: String,
        owned: String,
    },

    #[error("row {row}: unknown entity id {id}")]
    DanglingEdge { row: usize, id: String },

    #[error("row {row}: share out of range (0,1]: {value}")]
    ShareOutOfRange { row: usize, value: String },

    #[error("unknown entity {id}")]
    UnknownEntity { id: String },

    #[error("{id} is not a company")]
    NotACompany { id: String },

    #[error("seller {seller} holds {holds:.2} < {needed:.2}")]
    InsufficientShare {
        seller: String,
        holds: f64,
        needed: f64,
    },

    #[error("divergent cycle {cycle:?}: edge product >= 1")]
    DivergentCycle { cycle: Vec<String> },

    #[error("takeover pre-exists: {0}")]
    TakeoverPreexists(String),

    #[error("{id} is not part of the base graph")]
    NotSubgraph { id: String },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible generator configuration: {0}")]
    InfeasibleConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
