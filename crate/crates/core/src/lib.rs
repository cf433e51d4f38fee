//! Exact symbolic and numeric tools for conformal vector fields on
//! Damek–Ricci spaces and real hyperbolic space.

pub mod busemann;
pub mod cks;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod harmonic;
pub mod liecalc;
pub mod linalg;
pub mod models;
pub mod numlab;

pub use error::{Error, Result};
