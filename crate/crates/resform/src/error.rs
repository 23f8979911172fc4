use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("conductance on edge ({u}, {v}) is {value}, must be strictly positive")]
    NonPositiveConductance { u: u64, v: u64, value: f64 },

    #[error("self-loop on vertex {vertex}")]
    SelfLoop { vertex: u64 },

    #[error("graph is disconnected: vertex {vertex} is not reachable from vertex {from}")]
    Disconnected { vertex: u64, from: u64 },

    #[error("root {root} is not a declared vertex")]
    UnknownRoot { root: u64 },

    #[error("edge references undeclared vertex {id}")]
    UnknownVertex { id: u64 },

    #[error("vertex {id} declared more than once")]
    DuplicateVertex { id: u64 },

    #[error("edge ({u}, {v}) given twice with different weights ({first} vs {second})")]
    DuplicateEdge {
        u: u64,
        v: u64,
        first: f64,
        second: f64,
    },

    #[error("function defined on {got} vertices, network has {expected}")]
    DomainMismatch { expected: usize, got: usize },

    #[error("subset must be non-empty")]
    EmptySet,

    #[error("subset must be a proper subset (complement is empty)")]
    FullSet,

    #[error("root must belong to the subset")]
    RootOutsideB,

    #[error("path start must belong to the subset")]
    StartOutsideB,

    #[error("subset needs at least {needed} vertices, got {got}")]
    SubsetTooSmall { needed: usize, got: usize },

    #[error("matrix is not a resistance metric: {reason}")]
    NotResistanceMetric { reason: String },

    #[error("matrix is not a metric: {reason}")]
    NotAMetric { reason: String },

    #[error("grid time {t} outside simulated horizon {horizon}")]
    GridOutOfRange { t: f64, horizon: f64 },

    #[error("delta {delta} must lie in (0, {limit})")]
    DeltaTooLarge { delta: f64, limit: f64 },

    #[error("ball of radius {radius} covers the whole network, no complement to exit to")]
    EmptyComplement { radius: f64 },

    #[error("alpha {alpha} outside (0, 1/2)")]
    AlphaOutOfRange { alpha: f64 },

    #[error("scale {scale} must be strictly positive")]
    NonPositiveScale { scale: f64 },

    #[error("exact covering supports at most {limit} points, space has {points}")]
    TooLargeForExact { points: usize, limit: usize },

    #[error("operation only defined for discrete-time paths")]
    DiscreteOnly,

    #[error("vertex index {index} out of range ({len} vertices)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("verified bound violated: {what} = {value} exceeds {bound}")]
    BoundViolated {
        what: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
