//! Numerical toolkit for almost-conformal maps between grafted hyperbolic
//! pieces.
//!
//! The modules build on each other roughly in this order: [`hyp`] supplies
//! half-plane primitives, [`maps`] turns explicit constructions into
//! [`maps::PlanarC1Map`] values whose dilatation can be measured,
//! [`boundary`] certifies and extends boundary correspondences, [`graft`]
//! assembles model maps for grafted rectangles, [`tracks`] does the exact
//! integer rounding of train-track weights, [`interp`] handles disk and
//! cylinder interpolation, and [`extremal`] computes conformal moduli on
//! grids.

pub mod boundary;
pub mod error;
pub mod extremal;
pub mod graft;
pub mod hyp;
pub mod interp;
pub mod maps;
pub mod tracks;

pub use error::{Error, Result};
pub use num_complex::Complex64;
