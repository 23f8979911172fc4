//! Electrical networks as resistance metric spaces, at desk scale.
//!
//! The crate provides:
//! - validated finite electrical networks with their Dirichlet energy form,
//!   Laplacian, transition matrix and associated vertex measure ([`network`]);
//! - effective resistance metrics, resistance between sets, fused networks
//!   and the inverse map from resistance matrices to conductances
//!   ([`resistance`]);
//! - network reduction onto subsets by Schur complement, with the
//!   hitting-probability route as an independent second method ([`trace`]);
//! - simulation of the discrete-time chain and the constant-speed walk,
//!   local times, path traces, and Monte Carlo diagnostic reports ([`walk`]);
//! - finite rooted measured metric spaces: covering numbers, entropy tail
//!   sums, Hausdorff/Prohorov distances and Gromov-Hausdorff-Prohorov
//!   bounds ([`metric`]);
//! - Sierpinski-gasket approximation networks with deterministic or random
//!   conductances ([`gasket`]).

pub mod error;
pub mod gasket;
pub mod linalg;
pub mod metric;
pub mod network;
pub mod resistance;
pub mod trace;
pub mod walk;

pub use error::{Error, Result};
pub use metric::{ghp_distance_bounds, FiniteMetricMeasureSpace, GhpBounds};
pub use network::{build_network, ElectricalNetwork, NetworkSpec, VertexFunction, VertexMeasure};
pub use resistance::{
    conductances_from_resistance, effective_resistance, fuse_complement, fused_metric_error_report,
    resistance_between_sets, resistance_matrix, ResistanceMatrix,
};
pub use trace::{
    ball_trace, crossing_conductance, harmonic_extension, resistance_ball, trace_network,
    TraceMethod, TraceResult,
};
