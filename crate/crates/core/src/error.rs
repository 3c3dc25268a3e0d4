use thiserror::Error;

use crate::simplex::FaceId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Dimension or degree outside the supported range.
    #[error("size error: {0}")]
    Size(String),
    /// Mismatched chart dimensions or invalid variable slots.
    #[error("shape error: {0}")]
    Shape(String),
    /// A point or time outside the admissible domain.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("faces {child} and {parent} are not adjacent")]
    NotAdjacent { parent: FaceId, child: FaceId },
    #[error("invalid face: {0}")]
    Face(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    /// Missing or malformed caller input.
    #[error("input error: {0}")]
    Input(String),
}
