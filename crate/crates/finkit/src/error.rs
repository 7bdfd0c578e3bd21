//! Shared error type for every fallible operation in the crate.

use thiserror::Error;

/// Errors reported by constructors, parsers, and the combinatorial engines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FinError {
    /// Two summands (or two atom outputs) claim the same support position.
    #[error("overlapping supports at position {0}")]
    OverlappingSupports(u64),
    /// An operation that needs at least one operand received none.
    #[error("empty input")]
    EmptyInput,
    /// Two objects that must live at the same level do not.
    #[error("level mismatch: {left} vs {right}")]
    LevelMismatch {
        /// Level of the left-hand object.
        left: u8,
        /// Level of the right-hand object.
        right: u8,
    },
    /// An index or length exceeds the size of the object it refers to.
    #[error("index {index} out of range for length {len}")]
    OutOfRange {
        /// The offending index or requested length.
        index: usize,
        /// The actual length of the indexed object.
        len: usize,
    },
    /// Two staircase atoms wrote different values to one position.
    #[error("atom outputs collide at position {0}")]
    AtomOverlap(u64),
    /// A value violates a structural invariant; the message says which.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A textual encoding could not be parsed.
    #[error("parse error: {0}")]
    ParseError(String),
    /// No reduct within the horizon is compatible with both approximations.
    #[error("no compatible reduct within the horizon")]
    IncompatibleReduct,
    /// A front whose members must share one arity has members of mixed length.
    #[error("front members do not share a single arity")]
    NonUniformFront,
    /// A coloring or search was handed a front over the wrong base.
    #[error("front base mismatch: {0}")]
    FrontMismatch(String),
    /// A table coloring has no entry for a member it must color.
    #[error("coloring has no entry for member {0:?}")]
    ColorMissing(String),
    /// An arity constraint (map arity, mode restriction, counting rank) fails.
    #[error("invalid arity: {0}")]
    InvalidArity(String),
}
