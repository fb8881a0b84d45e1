use thiserror::Error;

use crate::topology::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("no PCIe gen {generation} width up to x16 carries {demand_gbps} Gb/s")]
    NoFeasibleWidth { generation: u8, demand_gbps: f64 },

    #[error("invalid topology: {}", join_violations(.0))]
    InvalidTopology(Vec<Violation>),

    #[error("unknown stage index {0}")]
    UnknownStage(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("incomparable runs: {0}")]
    Incomparable(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("malformed tabular export: {0}")]
    Tabular(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}
