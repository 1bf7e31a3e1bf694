pub mod config;
pub mod error;
pub mod identities;
pub mod integrals;
pub mod lab;
pub mod large_deviations;
pub mod processes;
pub mod report;
pub mod runner;
pub mod sums;
pub mod tensor;

pub use error::{Error, Result};
