//! Command-line front end: synthetic measurement harness, calibration sessions and reports.

pub mod error;
pub mod harness;
pub mod io;
pub mod scenario;
pub mod session;
pub mod commands;
pub mod simulate;
