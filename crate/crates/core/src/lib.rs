//! Numerical construction and verification of approximation-by-conjugacy
//! schemes on the cylinder, the sphere and the disk.
//!
//! The crate is organised bottom-up:
//!
//! * [`surface`] fixes the three surfaces, their metrics and the stratified
//!   reference measures;
//! * [`bicurve`] describes the cosine bicurves and their bands;
//! * [`ot`] computes Kantorovich distances, dual certificates and distances to
//!   the convex hull of the three reference measures;
//! * [`dynamics`] holds the map algebra, including the box shuffle;
//! * [`scheme`] drives the stage-by-stage construction and its ledger;
//! * [`cli`] and [`verify`] back the `anokat` binary.

pub mod bicurve;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod ot;
pub mod scheme;
pub mod surface;
pub mod verify;

pub use error::{Error, Result};
