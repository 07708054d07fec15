use clap::{Args, ValueEnum};
use fck_core::{scalar::set_float_digits, Backend, Scalar};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Exact,
    Float,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Float => Backend::Float,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Plain,
}

/// Flags shared by every subcommand. Each can also be set through an
/// `FCK_`-prefixed environment variable.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Series order N.
    #[arg(long, global = true, env = "FCK_ORDER", default_value_t = 12)]
    pub order: usize,
    #[arg(long, global = true, env = "FCK_BACKEND", value_enum, default_value_t = BackendArg::Exact)]
    pub backend: BackendArg,
    /// Significant decimal digits of the float backend.
    #[arg(long, global = true, env = "FCK_PRECISION", default_value_t = 100)]
    pub precision: usize,
    /// Comparison tolerance on the float backend (default 1e-40); ignored when exact.
    #[arg(long, global = true, env = "FCK_TOLERANCE")]
    pub tolerance: Option<String>,
    /// Seed for randomised sweeps.
    #[arg(long, global = true, env = "FCK_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write the output here instead of stdout.
    #[arg(long, global = true, env = "FCK_OUT")]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, global = true, env = "FCK_FORMAT", value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            order: 12,
            backend: BackendArg::Exact,
            precision: 100,
            tolerance: None,
            seed: 0,
            out: None,
            format: Format::Json,
        }
    }
}

impl RunConfig {
    /// Applies the float precision; call once before computing.
    pub fn apply(&self) {
        set_float_digits(self.precision);
    }

    /// Tolerance in backend `F`: zero on the exact backend.
    pub fn tolerance<F: Scalar>(&self) -> CliResult<F> {
        if F::BACKEND == Backend::Exact {
            return Ok(F::zero());
        }
        let s = self.tolerance.as_deref().unwrap_or("1e-40");
        F::parse(s).ok_or_else(|| CliError::Usage(format!("bad tolerance {s:?}")))
    }
}
