//! Combinatorics of block sequences of finitely supported `{0, …, k}`-valued
//! vectors: tetris shifts, combinatorial spans, staircase systems, fronts and
//! colorings, mixing analysis, canonical maps, and exhaustive search engines
//! for homogeneous subsequences.

#![warn(missing_docs)]

mod block;
mod canonical;
mod error;
mod front;
mod mixing;
mod pigeonhole;
mod stair;
mod vector;

pub use block::{
    approximations, depth, leq, span_contains, span_enumerate, span_size, subsequences_up_to,
    tail, tail_pair, BlockSequence, Depth, SpanTerm,
};
pub use canonical::{
    apply_canonical, canonize, count_canonical, enumerate_canonical_maps, CanonicalMap,
    CanonizeMode, CanonizeOutcome, CanonizeReport, CountReport, MapGroup,
};
pub use error::FinError;
pub use front::{
    front_check, member_key, ColorRule, ColorSource, Coloring, Front, FrontCheckResult, FrontKind,
};
pub use mixing::{decide_mixing, separates, Horizon, MixReport, MixVerdict};
pub use pigeonhole::{
    certify_homogeneous, find_homogeneous, SearchBudget, SearchOutcome, SearchReport,
};
pub use stair::{
    check_sos, enumerate_stair_functions, enumerate_stair_functions_ref, eval, eval_atom,
    induced_relation, is_sos, is_sos_sequence, make_sos, AtomKind, SosViolation, StairAtom,
    StairFunction,
};
pub use vector::KVector;
