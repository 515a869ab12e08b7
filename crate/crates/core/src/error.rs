use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A state variable became NaN or infinite during stepping.
    #[error("simulation aborted at t = {t:.4} s: `{field}` is not finite")]
    SimulationAbort { field: &'static str, t: f64 },

    #[error("simulation diverged at t = {t:.4} s: delta_f = {delta_f:.4} Hz")]
    Diverged { t: f64, delta_f: f64 },

    #[error("root finding failed: {0}")]
    RootFind(String),

    #[error("optimizer failed (seed {seed}): {reason}")]
    OptimizerFailed { seed: u64, reason: String },

    #[error(
        "Levenberg-Marquardt training stalled: damping reached {lambda:e} without an accepted step"
    )]
    TrainingStalled { lambda: f64 },

    #[error("excitation drove the plant out of range (|y| = {peak:.3} Hz); reduce the excitation amplitude")]
    ExcitationAmplitude { peak: f64 },

    /// Every violated field is listed, one message per entry.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SimulationAbort { .. }
                | Error::Diverged { .. }
                | Error::RootFind(_)
                | Error::OptimizerFailed { .. }
                | Error::TrainingStalled { .. }
                | Error::ExcitationAmplitude { .. }
        )
    }
}

/// Accumulates validation messages so a caller sees every problem at once.
#[derive(Debug, Default)]
pub(crate) struct Violations(Vec<String>);

impl Violations {
    pub fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(msg());
        }
    }

    pub fn push(&mut self, msg: String) {
        self.0.push(msg);
    }

    pub fn extend(&mut self, other: Violations) {
        self.0.extend(other.0);
    }

    pub fn prefixed(self, prefix: &str) -> Violations {
        Violations(
            self.0
                .into_iter()
                .map(|m| format!("{prefix}.{m}"))
                .collect(),
        )
    }

    pub fn into_result(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(self.0))
        }
    }
}
