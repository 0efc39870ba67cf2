//! Exact quadrature, discrepancy and energy-measure calculus on p.c.f. self-similar fractals.

pub mod energy;
pub mod error;
pub mod fractal;
pub mod green;
pub mod harmonic;
pub mod io;
pub mod linalg;
pub mod multiharmonic;
pub mod network;
pub mod plot;
pub mod quadrature;
pub mod rational;
pub mod verify;

pub use error::{Error, Result};
pub use rational::Q;
