//! Modal stability analysis of the split scalar scheme.
//!
//! Each direction contributes a generalized eigenpencil `K_ξ v = λ M_ξ v`.
//! In the joint eigenbasis the one-step map of the scheme block-diagonalizes
//! into independent 3×3 matrices over the modal triple `(U, τU̇, τ²Ü)`,
//! parameterized only by the eigenvalue pair. Spectral radii of those blocks
//! across time-step sweeps witness unconditional stability.

use crate::linalg::BandedMatrix;
use crate::{Error, Result};
use nalgebra::{Complex, DMatrix, Matrix3};

/// Largest direction size accepted by the dense generalized eigensolver.
pub const EIG_DENSE_CAP: usize = 512;

/// Generalized eigen-decomposition of a directional `(K, M)` pencil:
/// `K P = M P D` with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct EigenPencil {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl EigenPencil {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector matrix; column `i` pairs with `eigenvalues()[i]`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Solve `K v = λ M v` densely via the Cholesky transform
/// `L⁻¹ K L⁻ᵀ w = λ w`, `M = L Lᵀ`, `v = L⁻ᵀ w`.
pub fn generalized_eig(k: &BandedMatrix, m: &BandedMatrix) -> Result<EigenPencil> {
    if k.dim() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "pencil dimensions {} vs {}",
            k.dim(),
            m.dim()
        )));
    }
    let n = k.dim();
    if n > EIG_DENSE_CAP {
        return Err(Error::SizeGuard(format!(
            "pencil dimension {n} exceeds the dense cap {EIG_DENSE_CAP}"
        )));
    }
    let md = m.to_dense();
    let kd = k.to_dense();
    let chol = md
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("mass factor in the pencil".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&kd)
        .ok_or_else(|| Error::SingularMatrix("triangular solve in pencil transform".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::SingularMatrix("triangular solve in pencil transform".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();

    // back-transform and sort ascending
    let lt = l.transpose();
    let w = lt
        .solve_upper_triangular(&eig.eigenvectors)
        .ok_or_else(|| Error::SingularMatrix("back substitution in pencil transform".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &w.column(src));
    }
    Ok(EigenPencil {
        eigenvalues,
        vectors,
    })
}

/// Which 3×3 block table parameterizes the modal amplification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplificationVariant {
    /// Blocks induced by the implemented time step; the one-step modal map
    /// of [`crate::pwave::step`] and the default everywhere.
    #[default]
    Scheme,
    /// Closed-form block table in terms of `ζ` and `Ẽ`, with the
    /// under-determined entry in block (1,3) read as `Ẽ`. Reproduces the
    /// upper-triangular `τ → 0` and `τ → ∞` limit matrices; kept for
    /// comparison against [`AmplificationVariant::Scheme`], which is what the
    /// cross-validation against the stepper arbitrates (see the tests).
    Reference,
}

/// The reduced modal amplification matrix: per eigenvalue pair
/// `(λ_x, λ_y)` a scalar 3×3 matrix acting on `(U, τU̇, τ²Ü)`.
#[derive(Debug, Clone)]
pub struct AmplificationMatrix {
    dx: Vec<f64>,
    dy: Vec<f64>,
    tau: f64,
    variant: AmplificationVariant,
}

/// Assemble the modal amplification for a pair of directional pencils.
pub fn build_amplification(
    pencil_x: &EigenPencil,
    pencil_y: &EigenPencil,
    tau: f64,
    variant: AmplificationVariant,
) -> Result<AmplificationMatrix> {
    if tau < 0.0 {
        return Err(Error::InvalidInput(format!(
            "time step must be non-negative, got {tau}"
        )));
    }
    Ok(AmplificationMatrix {
        dx: pencil_x.eigenvalues.clone(),
        dy: pencil_y.eigenvalues.clone(),
        tau,
        variant,
    })
}

impl AmplificationMatrix {
    pub fn n_modes(&self) -> (usize, usize) {
        (self.dx.len(), self.dy.len())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// The 3×3 block of modal pair `(i, j)`.
    pub fn mode_block(&self, i: usize, j: usize) -> Matrix3<f64> {
        let (lx, ly) = (self.dx[i].max(0.0), self.dy[j].max(0.0));
        mode_block(self.tau, lx, ly, self.variant)
    }

    pub fn mode_eigenvalues(&self, i: usize, j: usize) -> [Complex<f64>; 3] {
        let ev = self.mode_block(i, j).complex_eigenvalues();
        [ev[0], ev[1], ev[2]]
    }

    pub fn mode_spectral_radius(&self, i: usize, j: usize) -> f64 {
        self.mode_eigenvalues(i, j)
            .iter()
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Maximum spectral radius over all modal pairs.
    pub fn max_spectral_radius(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..self.dx.len() {
            for j in 0..self.dy.len() {
                r = r.max(self.mode_spectral_radius(i, j));
            }
        }
        r
    }
}

/// Scalar modal block for eigenvalue pair `(lx, ly)` at time step `tau`.
pub fn mode_block(tau: f64, lx: f64, ly: f64, variant: AmplificationVariant) -> Matrix3<f64> {
    let eta = 0.25 * tau * tau;
    let ex = 1.0 / (1.0 + eta * lx);
    let ey = 1.0 / (1.0 + eta * ly);
    let e_tilde = ex * ey;
    let zeta = e_tilde * (lx + ly);
    let s = tau * tau * zeta;
    match variant {
        AmplificationVariant::Scheme => Matrix3::new(
            1.0 - 0.25 * s,
            1.0 - 0.25 * s,
            0.25 - s / 16.0,
            -0.5 * s,
            1.0 - 0.5 * s,
            0.5 - s / 8.0,
            -s,
            -s,
            -0.25 * s,
        ),
        AmplificationVariant::Reference => Matrix3::new(
            1.0 - s,
            1.0 - s,
            0.5 - e_tilde - 0.5 * s,
            -0.5 * s,
            1.0 - 0.5 * s,
            1.0 - 0.5 * e_tilde - 0.25 * s,
            -s,
            -s,
            1.0 - e_tilde - 0.5 * s,
        ),
    }
}

/// Maximum modal spectral radius for each requested time step.
pub fn spectral_radius_sweep(
    pencil_x: &EigenPencil,
    pencil_y: &EigenPencil,
    taus: &[f64],
    variant: AmplificationVariant,
) -> Result<Vec<(f64, f64)>> {
    if taus.is_empty() {
        return Err(Error::InvalidInput("empty time-step list".into()));
    }
    taus.iter()
        .map(|&tau| {
            let amp = build_amplification(pencil_x, pencil_y, tau, variant)?;
            Ok((tau, amp.max_spectral_radius()))
        })
        .collect()
}
