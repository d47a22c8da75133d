//! Attractors of trees of maps, backward staircase trajectories, and the
//! bridge from binary subdivision schemes to sequences of function systems.
//!
//! The crate is organised around the objects it computes with:
//!
//! - [`geometry`] — points, point sets, the Hausdorff metric, axis boxes and
//!   the constrained flats `K^{n-1}_C` used by the subdivision bridge.
//! - [`maps`] — affine maps with certified Lipschitz bounds, composition and
//!   finite function systems acting on point sets.
//! - [`trajectories`] — forward/backward trajectories of map sequences on a
//!   single space, with numerical convergence certificates.
//! - [`tree`] — binary code space, lazy trees of maps, finite-depth tree
//!   attractors and their self-referential decomposition.
//! - [`staircase`] — backward trajectories of map sequences between spaces of
//!   varying dimension, grouping, partial limits and set-valued variants.
//! - [`subdivision`] — masks, refinement, slanted refinement matrices and the
//!   constructions turning subdivision schemes into staircase function
//!   systems or trees of maps.
//! - [`render`] — CSV and SVG emitters for attractor point sets.

pub mod geometry;
pub mod maps;
pub mod render;
pub mod staircase;
pub mod subdivision;
pub mod trajectories;
pub mod tree;

use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}{}", context_suffix(.context))]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("code length mismatch: {a} vs {b}")]
    CodeLengthMismatch { a: usize, b: usize },

    #[error("invalid code symbol {0} (alphabet is {{1, 2}})")]
    InvalidSymbol(u8),

    #[error("truncation length {len} out of range 1..={max}")]
    TruncationOutOfRange { len: usize, max: usize },

    #[error("enumeration budget exceeded: depth {depth} > {max}")]
    BudgetExceeded { depth: usize, max: usize },

    #[error("no convergence certificate within {max_k} steps (best tail bound {best})")]
    NoCertificate { max_k: usize, best: f64 },

    #[error("limit map is not contractive (Lipschitz bound {0})")]
    NotContractive(f64),

    #[error("too few control points: {got} < mask support {support}")]
    TooFewPoints { got: usize, support: usize },

    #[error("data consumed by mask growth at level {level} ({remaining} points left, support {support})")]
    DataConsumed {
        level: usize,
        remaining: usize,
        support: usize,
    },

    #[error("flat not invariant: mask at level {level} does not reproduce constants (even sum {even_sum}, odd sum {odd_sum})")]
    FlatNotInvariant {
        level: usize,
        even_sum: f64,
        odd_sum: f64,
    },

    #[error("subdivision rule undefined at level {level}, position {position}")]
    UndefinedRule { level: usize, position: usize },

    #[error("invalid base matrix: {0}")]
    InvalidBase(String),

    #[error("mask support {support} at level {level} exceeds declared polynomial growth (degree {degree}, base {base})")]
    MaskGrowth {
        level: usize,
        support: usize,
        degree: u32,
        base: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),
}

fn context_suffix(context: &&'static str) -> String {
    if context.is_empty() {
        String::new()
    } else {
        format!(" ({context})")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
