//! Synthetic problems, file formats, figure data and batch checks.

pub mod bench;
pub mod datagen;
pub mod figures;
pub mod io;
pub mod record;
pub mod verify;

use std::path::PathBuf;

use thiserror::Error;

use crate::criteria::CriteriaError;
use crate::priors::PriorError;
use crate::quadrature::QuadratureError;
use crate::section::SectionError;
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: invalid JSON: {message}")]
    Json { path: PathBuf, message: String },
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Section(#[from] SectionError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
