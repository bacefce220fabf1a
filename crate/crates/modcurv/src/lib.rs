//! Symbolic-numeric verification engine for a family of one-, two- and
//! three-variable spectral kernel functions.
//!
//! * [`expr`] / [`parse`] — exact expression trees and the `def` grammar;
//! * [`eval`] — arbitrary-precision evaluation with exact pole detection
//!   and directional limits at removable singularities;
//! * [`registry`] / [`corpus`] — checksummed corpus loading and lazy
//!   symbolic derivatives;
//! * [`quad`] / [`calculus`] — rearrangement-function recursions with
//!   independent quadrature oracles, cyclic group actions, and the
//!   difference-kernel combinators;
//! * [`relations`] — deterministic sampled verification suites;
//! * [`structure`] — exact monomial lattices, smoothness condition systems,
//!   and fraction-free rank / kernel computations.

pub mod calculus;
pub mod corpus;
pub mod eval;
pub mod expr;
pub mod parse;
pub mod quad;
pub mod registry;
pub mod relations;
pub mod structure;
