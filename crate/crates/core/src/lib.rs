//! Lowest-order virtual element discretization of the resistive MHD
//! Maxwell subsystem on general polygonal meshes.
//!
//! The discrete spaces form the chain `V_h --rot--> E_h --div--> P_h`
//! (vertex values, edge normal components, cell averages). The magnetic
//! flux lives in `E_h` and is advanced by a discrete curl, so its cell
//! divergence never changes over a run.
//!
//! Layout follows the data flow: [`mesh`] builds polygonal meshes and their
//! geometry, [`local_ops`] computes per-cell projectors and mass matrices,
//! [`assembly`] scatters them into global sparse operators, [`timestepper`]
//! advances the θ-scheme, [`diagnostics`] measures errors, divergence and the
//! discrete energy balance, and [`experiments`] drives the benchmark runs
//! behind the `polyvem` binary.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod assembly;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod local_ops;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod sparse;
pub mod timestepper;

pub use error::{Error, Result};

pub type Point = nalgebra::Point2<f64>;
pub type Vector = nalgebra::Vector2<f64>;
