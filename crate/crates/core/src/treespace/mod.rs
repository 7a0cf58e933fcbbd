//! Semi-ultrametrics, their decomposition into external branches plus
//! subtree, finite marked metric measure spaces and Prohorov distances.

mod io;
mod matrix;
mod mmspace;
mod prohorov;

pub use io::{read_marks, read_matrix, read_space, write_marks, write_matrix, write_space};
pub use matrix::{
    alpha, beta_finite, external_branches, validate_marked, validate_matrix, DistanceMatrix,
    MarkedMatrix, MetricKind, Tolerances, ValidationReport, Violation,
};
pub use mmspace::{psi_hat_n, reconstruction_gap, sample_distance_matrix, FiniteMMSpace};
pub use prohorov::{marked_ground_metric, prohorov_exact, MAX_PROHOROV_SUPPORT};
