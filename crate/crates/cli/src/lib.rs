//! Data owners and server processes for three-party AUC evaluation.

pub mod app;
pub mod dataset;
pub mod decode;
pub mod error;
pub mod outsource;
pub mod session;

pub use error::{CliError, Result};
