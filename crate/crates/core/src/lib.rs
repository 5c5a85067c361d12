#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds2d;
pub mod disc;
pub mod error;
pub mod perturbed;
pub mod quadrature;
pub mod radial;
pub mod reduction3d;
pub mod series;
pub mod specfun;
pub mod tridiag;

pub use error::{Error, Result};
