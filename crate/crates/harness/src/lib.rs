//! Configuration, orchestration and persistence for the `gplimit` command-line tool.

pub mod config;
pub mod output;
pub mod plots;
pub mod run;
pub mod seeds;
pub mod table;

pub use config::{parse_config, IneqCase, RunConfig, Study, StudyKind};
pub use output::{replay, write_result, Manifest, ReplayReport};
pub use run::{run, Dump, StudyResult};
pub use table::Table;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error {0}")]
    Config(String),
    #[error("compute failure: {0}")]
    Compute(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Process exit code: 2 for configuration errors, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }
}

impl From<gplimit_core::Error> for RunError {
    fn from(e: gplimit_core::Error) -> Self {
        match e {
            gplimit_core::Error::InvalidParameter(m) => RunError::Config(m),
            other => RunError::Compute(other.to_string()),
        }
    }
}
