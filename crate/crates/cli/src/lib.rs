//! Experiment harness behind the `hypzero` command: configuration, run
//! records, the Monte Carlo experiments and the `verify` driver.

pub mod config;
pub mod experiments;
pub mod record;
pub mod verify;

/// Exit status for a failed verification or a numerical/I-O failure.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for bad usage.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] hypzero::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Model(hypzero::Error::Domain(_)) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Runs `f` on a pool of `threads` workers (rayon's default when `None`).
pub fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Usage(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
