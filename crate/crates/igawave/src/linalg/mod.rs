//! Banded 1D linear algebra and the directional Kronecker solver.
//!
//! A tensor-product operator `A_x ⊗ A_y (⊗ A_z)` is never materialized:
//! applying or inverting it reduces to one banded 1D problem per direction
//! with all remaining indices acting as right-hand-side columns. With banded
//! factors of fixed bandwidth this gives O(N) work in the total number of
//! unknowns, both for factorization and for every solve.

mod banded;
mod dense;
mod kron;
mod tensor;

pub use banded::{BandedMatrix, FactoredBanded};
pub use dense::{dense_kron_matrix, dense_oracle_solve, dense_solve, DENSE_ORACLE_CAP};
pub use kron::{kron_apply, kron_apply_into, KronSum, KroneckerOperator};
pub use tensor::CoefficientTensor;
