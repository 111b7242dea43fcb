//! Symbolic engine for the equations of motion of reduced density matrices
//! and correlation matrices in the quantum BBGKY hierarchy.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the expression
//! IR ([`ir`]), the rewrite passes that act on it ([`canon`], [`trace`],
//! [`cluster`]), the derivation driver ([`deriver`]) and the plain-text and
//! LaTeX back ends ([`render`]). Everything that touches files, the command
//! line or floating point lives in the companion `bbgky` crate.
//!
//! All equations are written in the interaction picture: the left-hand side
//! is `iħ d/dt` of a reduced matrix and the right-hand side is a signed sum
//! of commutators with the pairwise interaction operators.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod canon;
pub mod cluster;
pub mod deriver;
pub mod error;
pub mod index;
pub mod ir;
pub mod render;
pub mod trace;

pub use canon::{canonicalize, multiply_factors, multiply_terms, normalize, refine_family_sums, take_derivative, terms_equal};
pub use cluster::{cluster_expand, expand_commutator, ExpansionMode};
pub use deriver::{build_master_equation, derive, subtract_scaled, DerivationMemo, MemoStore, SystemSpec};
pub use error::Error;
pub use index::{Family, Index, PairedIndex, Single};
pub use ir::{
    Commutator, Equation, InteractionOp, MatrixFactor, MatrixKind, Mixed, Side, Sign, SignedTerm,
    Tail, Term, TracedCommutator,
};
pub use render::{display, to_latex, Render};
pub use trace::{trace_commutator, trace_matrix, trace_product, trace_terms, TraceSet};
