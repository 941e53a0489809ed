//! Error type shared by all modules.

use crate::grid::{PathKind, TimeGrid};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid time grid: {reason}")]
    InvalidGrid { reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("invalid path: {reason}")]
    InvalidPath { reason: String },

    #[error("grid mismatch: expected {expected:?}, got {actual:?}")]
    GridMismatch { expected: TimeGrid, actual: TimeGrid },

    #[error("unexpected path kind {actual:?}, expected {expected}")]
    KindMismatch {
        expected: &'static str,
        actual: PathKind,
    },

    #[error("{what} is not finite at node {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("value {value} outside the open interval (0, {upper})")]
    Domain { value: f64, upper: f64 },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("unsupported combination: {reason}")]
    Unsupported { reason: String },
}
