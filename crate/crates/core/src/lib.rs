//! Airy-type evolution on metric graphs: indefinite trace forms, vertex
//! couplings and their classification, collocation, time stepping and
//! verification tools.

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod cli;
pub mod chebyshev;
pub mod discretization;
pub mod error;
pub mod evolution;
pub mod graph;
pub mod init;
pub mod krein;
pub mod linalg;
pub mod quadrature;
pub mod verification;
