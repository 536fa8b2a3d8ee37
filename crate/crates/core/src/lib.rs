//! Quadratic Poisson ("q-deformed") structures and their realizations.
//!
//! * [`poisson`], [`builtins`], [`darboux`]: exact polynomial bivectors,
//!   Jacobi and Casimir checks, the one-mode action-angle map.
//! * [`flow`]: Hamiltonian flows with invariant monitors.
//! * [`kahler`], [`dilog`]: the dilogarithm Kähler potential, metric,
//!   curvature and mode-coupling map.
//! * [`dirac`]: second-class constraint embedding and Dirac brackets.
//! * [`ncalg`]: noncommutative normal ordering for the operator algebras.
//! * [`fock`]: truncated Fock-space matrices and the classical limit.
//! * [`expr`], [`serial`], [`report`]: the text and JSON interchange used
//!   by the `qdeform` command-line tool.

pub mod builtins;
pub mod cli;
pub mod chart;
pub mod darboux;
pub mod dilog;
pub mod dirac;
pub mod error;
pub mod expr;
pub mod flow;
pub mod fock;
pub mod kahler;
pub mod ncalg;
pub mod poisson;
pub mod poly;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod serial;

pub use error::{Error, Result};
