//! Multiport vector-network-analyzer calibration.
//!
//! * [`sparams`]: frequency grids, S/T conversion, cascading.
//! * [`touchstone`]: `.sNp` reading and writing.
//! * [`standards`]: circuit models of on-chip reflect, load, line and fixture
//!   standards, polynomial reflect fitting, and threshold reports.
//! * [`pack`]: standard definitions loaded from TOML packs.
//! * [`error_model`]: per-port error boxes and n-port embedding/correction.
//! * [`calfile`]: text storage of calibration models.
//! * [`solvers`]: SOL, SOLR, multiline TRL, standard characterization and
//!   four-port assembly.

pub mod calfile;
pub mod error_model;
pub mod pack;
pub mod solvers;
pub mod sparams;
pub mod standards;
pub mod touchstone;

pub use error_model::{MultiPortCalModel, OnePortTerms, PortErrorBox};
pub use sparams::{FrequencyGrid, Network, C64};
