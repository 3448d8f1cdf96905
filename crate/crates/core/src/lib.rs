//! Exact truncated power series engine for Frobenius type structures,
//! connection pencils, universal unfoldings and Frobenius manifold germs.

pub mod connection;
pub mod error;
pub mod frobstruct;
pub mod jacobi;
pub mod reconstruct;
pub mod report;
pub mod series;
pub mod unfold;

pub use error::{Error, Result};
