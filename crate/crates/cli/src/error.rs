use std::path::PathBuf;

use thiserror::Error;

/// Everything that ends a run early, each with its own exit code.
#[derive(Debug, Error)]
pub enum Failure {
    /// Malformed or out-of-range input, including parameters rejected by the
    /// numerical library.
    #[error("invalid input: {0}")]
    Input(String),
    #[error("missing required key {0}")]
    MissingKey(String),
    #[error("cannot read {}: {source}", path.display())]
    Unreadable { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Unwritable { path: PathBuf, source: std::io::Error },
    /// A numerical routine gave up (non-finite values, step underflow, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0} invariant check(s) failed")]
    Violations(usize),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Violations(_) | Failure::Numerical(_) => 1,
            Failure::Input(_) => 2,
            Failure::MissingKey(_) => 3,
            Failure::Unreadable { .. } | Failure::Unwritable { .. } => 4,
        }
    }
}

impl From<bhl_core::Error> for Failure {
    fn from(e: bhl_core::Error) -> Self {
        use bhl_core::Error as E;
        match e {
            E::Consistency { .. }
            | E::StepUnderflow { .. }
            | E::NonFinite { .. }
            | E::Quadrature(_)
            | E::TimeLevels { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}
