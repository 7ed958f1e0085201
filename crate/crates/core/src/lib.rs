//! Numerical projective tractor calculus on coordinate charts.

pub mod affine;
pub mod ambient;
pub mod bgg;
pub mod contact;
pub mod error;
pub mod hermitian;
pub mod jets;
pub mod leafspace;
pub mod linalg;
pub mod models;
pub mod orbits;
pub mod report;
pub mod suites;
pub mod tractor;

pub use error::{GeomError, Result};
