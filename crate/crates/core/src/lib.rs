//! Numerical laboratory for hyperbolic structures on the Kerr exterior and on
//! 1+1 dimensional Lorentzian cylinders.
//!
//! The crate is organised bottom up: [`tensor`] holds the pointwise tensor
//! kernel, [`kerr`] the closed-form Kerr geometry, and the remaining modules
//! build evolution, conservation and index computations on top of them.

pub mod dual;
pub mod error;
pub mod geodesic;
pub mod hyperbolic;
pub mod index;
pub mod kerr;
pub mod maxwell;
pub mod slice;
pub mod tensor;
pub mod wave;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
