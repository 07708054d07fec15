//! Front end for `fck-core`: run configuration, JSON formats, reports and
//! the verification suite behind `fck verify`.

pub mod config;
pub mod error;
pub mod json;
pub mod report;
pub mod seed;
pub mod suite;

pub use config::{BackendArg, Format, RunConfig};
pub use error::CliError;
pub use report::{Report, Row, Verdict};
