//! Calibration solvers.
//!
//! All T-matrix manipulation follows the convention in [`crate::sparams`].

use thiserror::Error;

use crate::error_model::ModelError;
use crate::sparams::NetworkError;
use crate::standards::StandardError;

pub mod characterize;
pub mod fourport;
pub mod mtrl;
pub mod sol;
pub mod solr;

pub use characterize::{characterize_standards, Characterization};
pub use fourport::{build_fourport_cal, port_label, FourPortCal, PairwiseCal, PORT_LABELS};
pub use mtrl::{solve_mtrl, solve_trl_classic, GammaEstimate, DEFAULT_DEGENERATE_TOL, MtrlInput, MtrlLine, MtrlOptions, MtrlResult, ReflectHint};
pub use sol::solve_one_port_sol;
pub use solr::{check_thru_phase, solve_solr, unambiguous_delay_limit, SolrInput, SolrPort, SolrResult, ThruPhaseCheck};

/// Minimum pairwise |ΔΓ| between SOL definitions.
pub const DISTINCT_GAMMA_TOL: f64 = 1e-6;
/// Minimum |S21| and |S12| of a raw thru.
pub const MIN_TRANSMISSION: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("standard definitions not distinct at {freq} Hz (|ΔΓ| = {separation:e})")]
    DegenerateStandards { freq: f64, separation: f64 },
    #[error("singular system at {freq} Hz")]
    SingularSystem { freq: f64 },
    #[error(
        "thru sign ambiguous at {freq} Hz: candidate phases {candidates:?} rad, predicted {predicted} rad; \
         use a finer grid or a better delay estimate"
    )]
    SignAmbiguous { freq: f64, candidates: [f64; 2], predicted: f64 },
    #[error("raw thru transmission {magnitude:e} below {MIN_TRANSMISSION:e} at {freq} Hz")]
    LowTransmission { freq: f64, magnitude: f64 },
    #[error("every line pair is near a half-wavelength multiple at all {points} points ({start} to {stop} Hz)")]
    AllPairsDegenerate { start: f64, stop: f64, points: usize },
    #[error("propagation-constant branch tracking lost at {freq} Hz (deviation {deviation} rad)")]
    BranchTrackingLost { freq: f64, deviation: f64 },
    #[error("port pairs do not connect all {n_ports} ports")]
    DisconnectedTree { n_ports: usize },
    #[error("port {port} terms differ between pairs by {residual:e} (relative)")]
    InconsistentSharedPort { port: usize, residual: f64 },
    #[error("redundant pair ({i}, {j}) disagrees with the tree by {residual:e} (relative)")]
    InconsistentK { i: usize, j: usize, residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Standard(#[from] StandardError),
    #[error(transparent)]
    Model(ModelError),
}

impl From<ModelError> for SolverError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Disconnected { n_ports } => SolverError::DisconnectedTree { n_ports },
            ModelError::InconsistentK { i, j, residual } => SolverError::InconsistentK { i, j, residual },
            ModelError::Network(n) => SolverError::Network(n),
            other => SolverError::Model(other),
        }
    }
}
