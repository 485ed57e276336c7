//! Arbitrage-free pricing of contingent claims.
//!
//! Every price is available through at least two independent routes (tree,
//! closed form, PDE, Monte Carlo) so that they can check each other.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod mathcore;

pub use error::{Error, Result};
pub mod lattice;
pub mod processes;
pub mod analytic;
pub mod pde;
pub mod rates;
pub mod hedge;
pub mod quizoracle;
