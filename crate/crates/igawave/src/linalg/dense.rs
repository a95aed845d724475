use super::banded::BandedMatrix;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Maximum number of unknowns the dense reference path accepts.
pub const DENSE_ORACLE_CAP: usize = 4096;

/// Materialize `A_x ⊗ A_y (⊗ A_z)` as a dense matrix in the x-fastest
/// vectorization used by [`super::CoefficientTensor`]. Reference path for
/// cross-validating the directional sweeps; capped at
/// [`DENSE_ORACLE_CAP`] unknowns.
pub fn dense_kron_matrix(factors: &[&BandedMatrix]) -> Result<DMatrix<f64>> {
    let dims: Vec<usize> = factors.iter().map(|f| f.dim()).collect();
    let total: usize = dims.iter().product();
    if total > DENSE_ORACLE_CAP {
        return Err(Error::SizeGuard(format!(
            "{total} unknowns exceed the dense-oracle cap of {DENSE_ORACLE_CAP}"
        )));
    }
    let decompose = |mut flat: usize| -> Vec<usize> {
        dims.iter()
            .map(|&d| {
                let i = flat % d;
                flat /= d;
                i
            })
            .collect()
    };
    let mut out = DMatrix::zeros(total, total);
    for row in 0..total {
        let ri = decompose(row);
        for col in 0..total {
            let ci = decompose(col);
            let mut v = 1.0;
            for (d, f) in factors.iter().enumerate() {
                v *= f.get(ri[d], ci[d]);
                if v == 0.0 {
                    break;
                }
            }
            out[(row, col)] = v;
        }
    }
    Ok(out)
}

/// Reference solve of a Kronecker operator through the dense path:
/// materialize the product matrix and run a dense LU. Cross-validates
/// [`KroneckerOperator::solve`](super::KroneckerOperator::solve) on small
/// instances.
pub fn dense_oracle_solve(
    op: &super::KroneckerOperator,
    b: &super::CoefficientTensor,
) -> Result<super::CoefficientTensor> {
    let refs: Vec<&BandedMatrix> = op.factors().iter().collect();
    let dense = dense_kron_matrix(&refs)?;
    let x = dense_solve(&dense, b.data())?;
    super::CoefficientTensor::from_data(b.dims(), x)
}

/// Dense LU solve used as the reference ("standard direct solver") path.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "dense matrix {}x{} is not square",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() > DENSE_ORACLE_CAP {
        return Err(Error::SizeGuard(format!(
            "{} unknowns exceed the dense-oracle cap of {DENSE_ORACLE_CAP}",
            a.nrows()
        )));
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} vs matrix dimension {}",
            b.len(),
            a.nrows()
        )));
    }
    let lu = a.clone().lu();
    let x = lu
        .solve(&DVector::from_column_slice(b))
        .ok_or_else(|| Error::SingularMatrix("dense LU found no solution".into()))?;
    // nalgebra's LU can return a "solution" for nearly singular systems;
    // verify the residual before trusting it.
    let r = a * &x - DVector::from_column_slice(b);
    let scale = b.iter().fold(1e-300_f64, |m, v| m.max(v.abs()));
    if r.amax() > 1e-8 * scale.max(x.amax()) {
        return Err(Error::SingularMatrix(format!(
            "dense solve residual {:e} indicates singularity",
            r.amax()
        )));
    }
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CoefficientTensor, KroneckerOperator};

    #[test]
    fn identity_returns_rhs() {
        let a = DMatrix::identity(5, 5);
        let b = vec![1.0, -2.0, 3.0, -4.0, 5.0];
        assert_eq!(dense_solve(&a, &b).unwrap(), b);
    }

    #[test]
    fn singular_dense_input_errors() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(dense_solve(&a, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn size_guard() {
        let f = BandedMatrix::identity(17);
        assert!(dense_kron_matrix(&[&f, &f, &f]).is_err()); // 4913 > 4096
    }

    #[test]
    fn matches_kron_solve_on_small_random_cases() {
        use crate::assembly::{assemble_mass, assemble_stiffness};
        use crate::splines::BSplineSpace1D;
        let mut state = 1234_u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (1u64 << 31) as f64 - 0.5
        };
        for &(p, n_el) in &[(1usize, 3usize), (2, 4), (3, 2)] {
            let s = BSplineSpace1D::uniform(p, n_el).unwrap();
            let m = assemble_mass(&s);
            let k = assemble_stiffness(&s).unwrap();
            let a = m.add_scaled(0.37, &k).unwrap();
            let n = s.n_basis();
            let op = KroneckerOperator::new(vec![a.clone(), a.clone()]).unwrap();
            let b = CoefficientTensor::from_fn(&[n, n], |_| next());
            let x = op.solve(&b).unwrap();
            let dense = dense_kron_matrix(&[&a, &a]).unwrap();
            let xd = dense_solve(&dense, b.data()).unwrap();
            let scale = x.norm_inf();
            for (u, v) in x.data().iter().zip(&xd) {
                assert!((u - v).abs() / scale < 1e-10);
            }
        }
    }
}
