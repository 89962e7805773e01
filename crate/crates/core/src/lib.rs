//! Room acoustics from the boundary integral equation, read as a state-space system.
//!
//! The boundary pressure is the state. At a Laplace point `s` the discretized model is
//!
//! ```text
//! q(s) = A(s) q(s) + B(s) x(s)
//! p(s) = C(s) q(s) + D(s) x(s)
//! ```
//!
//! with `q` the Galerkin coefficients of the boundary pressure on orthonormal
//! piecewise-constant basis functions, `x` the source signal and `p` the pressure at a
//! set of receivers. [`assembly`] builds the four operators, [`solver`] solves the state
//! equation directly or as a Neumann series and exposes Markov parameters and
//! observability/controllability matrices, [`response`] sweeps frequencies and renders
//! impulse responses, and [`oracle`] holds independent reference models.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod kernels;
pub mod oracle;
pub mod quadrature;
pub mod response;
pub mod scene;
pub mod solver;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type Complex = num_complex::Complex64;
/// Point or vector in 3D space, meters.
pub type Point3 = nalgebra::Vector3<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex>;

pub use assembly::{Assembler, OperatorSet};
pub use kernels::LaplacePoint;
pub use quadrature::QuadratureRule;
pub use response::{FrequencyGrid, ImpulseResponse, TransferFunction};
pub use scene::{BoundaryMesh, Impedance, Medium, Scene};
