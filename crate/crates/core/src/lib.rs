//! Axisymmetric ALE P1–P1 finite elements for capillary free-surface flow in
//! a cylindrical nozzle, with a moving contact line and an instantaneous
//! adjoint control acting on the bottom stress.

// `!(x > 0.0)` is used on purpose so NaN is rejected; element kernels index
// small fixed arrays in loops that mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adjoint;
pub mod ale;
pub mod assembly;
pub mod control;
pub mod error;
pub mod fields;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod observables;
pub mod parallel;
pub mod params;
pub mod quadrature;
pub mod stepper;
pub mod verify;

pub use error::{Result, SimError};
pub use fields::{ScalarFieldP1, VectorFieldP1};
pub use mesh::{AxiMesh, BoundaryTag};
pub use params::{NumParams, PhysParams};
