//! Crate-wide error type and exit-code mapping for the CLI.

use crate::arch::PeType;
use crate::costmodel::Target;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed line in one of the plain-text input formats.
    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },

    /// A domain invariant was violated (layer shapes, table orderings, ...).
    #[error("invalid {subject}: {msg}")]
    Invariant { subject: String, msg: String },

    #[error("unknown network '{name}'; valid names: vgg16, resnet34, resnet50")]
    UnknownNetwork { name: String },

    /// An accelerator configuration cannot hold a layer's working set.
    #[error(
        "infeasible config: {capacity} too small for layer '{layer}' \
         (need {need_bytes} B, have {have_bytes} B)"
    )]
    Infeasible {
        layer: String,
        capacity: String,
        need_bytes: u64,
        have_bytes: u64,
    },

    #[error(
        "underdetermined fit for degree {degree}: {rows} rows < {coefficients} coefficients"
    )]
    UnderdeterminedFit {
        degree: u32,
        rows: usize,
        coefficients: usize,
    },

    #[error(
        "singular system for degree {degree}: features are degenerate \
         (constant or collinear columns); try a lower degree"
    )]
    SingularSystem { degree: u32 },

    /// A per-fold fit failure during cross-validation.
    #[error("cross-validation fit failed at degree {degree}, fold {fold}: {source}")]
    FoldFit {
        degree: u32,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model is for PE type {model} but config uses {config}")]
    PeTypeMismatch { model: PeType, config: PeType },

    #[error("no {target} model available for PE type {pe_type}")]
    MissingModel { pe_type: PeType, target: Target },

    #[error("empty input: {what}")]
    EmptyInput { what: &'static str },

    #[error("no feasible INT16 point in the sweep; cannot pick a normalization baseline")]
    NoBaseline,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// CLI exit codes: 2 input/validation, 3 model/fit, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Invariant { .. }
            | Error::UnknownNetwork { .. }
            | Error::Infeasible { .. }
            | Error::EmptyInput { .. }
            | Error::NoBaseline
            | Error::Io { .. } => 2,
            Error::UnderdeterminedFit { .. }
            | Error::SingularSystem { .. }
            | Error::FoldFit { .. }
            | Error::PeTypeMismatch { .. }
            | Error::MissingModel { .. } => 3,
        }
    }
}

pub(crate) fn io_err(path: &std::path::Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}
