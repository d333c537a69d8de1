//! Numerical toolkit for the rotating Kepler problem: rotating-frame
//! dynamics, orbital-element charts, periodic-orbit catalogs, modified
//! Hamiltonians on the (x₂, y₂) cylinder, contact forms, Conley-Zehnder
//! indices and holomorphic leaves of a finite-energy foliation.

// `!(x > 0.0)` is used on purpose so that NaN fails the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod bump;
pub mod catalog;
pub mod contact;
pub mod coords;
pub mod cz;
pub mod error;
pub mod foliation;
pub mod io;
pub mod leaf;
pub mod ode;
pub mod orbits;
pub mod phase;
pub mod roots;
pub mod sampler;
pub mod scenario;
pub mod stack;
pub mod verify;

pub use error::{Error, Result};
