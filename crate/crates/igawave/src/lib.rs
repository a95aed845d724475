//! Tensor-product isogeometric solvers for implicit hyperbolic wave propagation.
//!
//! The library discretizes the unit square/cube with tensor products of
//! one-dimensional B-spline spaces. Because every system matrix is a short sum
//! of Kronecker products of banded 1D matrices, each implicit time step
//! reduces to a sequence of banded one-dimensional solves with many
//! right-hand sides, giving O(N) cost per step in the total number of
//! degrees of freedom.
//!
//! Modules:
//! - [`splines`]: 1D B-spline spaces, basis evaluation, Gauss quadrature.
//! - [`assembly`]: 1D mass/stiffness/mixed Gram matrices and L2 projection.
//! - [`linalg`]: banded LU, multi-RHS solves, Kronecker apply/solve, dense oracle.
//! - [`pwave`]: implicit Newmark scheme for the scalar wave equation (2D/3D)
//!   with a direction-split left-hand side, plus energy diagnostics.
//! - [`stability`]: generalized (K, M) eigenpencils and the modal
//!   amplification matrix with spectral-radius sweeps.
//! - [`elasticity`]: 2D linear elasticity via alternating-triangular
//!   predictor/corrector stages with split factors, plus the energy-norm
//!   diagnostic of the a-priori estimate.
//! - [`harness`]: configuration, experiment drivers, CSV/VTK output.

pub mod assembly;
pub mod elasticity;
mod error;
pub mod harness;
pub mod linalg;
pub mod pwave;
pub mod splines;
pub mod stability;

pub use error::{Error, Result};
