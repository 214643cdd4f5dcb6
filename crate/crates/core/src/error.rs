use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solvers, the bound evaluators and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error in {what:?}: {msg}")]
    Parse { what: String, msg: String },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("tolerance not met: best interval [{lo}, {hi}]")]
    ToleranceNotMet { lo: f64, hi: f64 },

    #[error("cannot decide convergence of the kappa integral for kernel {0}")]
    UndecidableConvergence(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("step size underflow at t = {t} (step {h})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("step budget exhausted at t = {t}")]
    StepBudget { t: f64 },

    #[error("out of range: {0}")]
    Range(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path:?}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(what: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            what: what.into(),
            msg: msg.into(),
        }
    }
}
