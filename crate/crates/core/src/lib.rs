//! Two-dimensional tensor tomography with attenuated moment ray transforms.
//!
//! The crate simulates the moment transforms of orders 0, 1 and 2 of a
//! vector field plus a symmetric 2-tensor field, and inverts them through
//! the transport equation and Bukhgeim's A-analytic function theory.

pub mod aanalytic;
pub mod attenuation;
pub mod cli;
pub mod error;
pub mod fields;
pub mod forward;
pub mod geometry;
pub mod oracle;
pub mod pipeline;
pub mod trace;

mod fft;
mod interp;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// A point of the plane.
pub type Point = [f64; 2];
