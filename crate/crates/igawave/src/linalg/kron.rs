use super::banded::{BandedMatrix, FactoredBanded};
use super::tensor::CoefficientTensor;
use crate::{Error, Result};

/// Kronecker product of per-direction banded factors, `A_x ⊗ A_y (⊗ A_z)`,
/// with each factor's LU cached at construction.
///
/// Acting on a coefficient tensor, the operator contracts factor `d` over
/// index `d`; its inverse is applied by sweeping the directions one at a
/// time, each sweep being a banded 1D solve with all remaining indices as
/// right-hand-side columns.
#[derive(Debug, Clone)]
pub struct KroneckerOperator {
    factors: Vec<BandedMatrix>,
    lu: Vec<FactoredBanded>,
    dims: Vec<usize>,
}

impl KroneckerOperator {
    pub fn new(factors: Vec<BandedMatrix>) -> Result<Self> {
        if !(2..=3).contains(&factors.len()) {
            return Err(Error::InvalidInput(format!(
                "expected 2 or 3 directional factors, got {}",
                factors.len()
            )));
        }
        let lu = factors
            .iter()
            .map(|f| f.factorize())
            .collect::<Result<Vec<_>>>()?;
        let dims = factors.iter().map(|f| f.dim()).collect();
        Ok(Self { factors, lu, dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn factors(&self) -> &[BandedMatrix] {
        &self.factors
    }

    fn check_dims(&self, t: &CoefficientTensor) -> Result<()> {
        if t.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "tensor dims {:?} vs operator dims {:?}",
                t.dims(),
                self.dims
            )));
        }
        Ok(())
    }

    /// Solve `(A_x ⊗ A_y [⊗ A_z]) x = b` by directional sweeps, in place.
    pub fn solve_in_place(&self, b: &mut CoefficientTensor) -> Result<()> {
        self.check_dims(b)?;
        let dims = self.dims.clone();
        let total: usize = dims.iter().product();
        for (d, lu) in self.lu.iter().enumerate() {
            let n_d = dims[d];
            let stride: usize = dims[..d].iter().product();
            let block = stride * n_d;
            let data = b.data_mut();
            let mut base = 0;
            while base < total {
                for inner in 0..stride {
                    lu.solve_strided(data, base + inner, stride);
                }
                base += block;
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &CoefficientTensor) -> Result<CoefficientTensor> {
        let mut x = b.clone();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Apply the operator (not its inverse).
    pub fn apply(&self, x: &CoefficientTensor) -> Result<CoefficientTensor> {
        self.check_dims(x)?;
        let refs: Vec<&BandedMatrix> = self.factors.iter().collect();
        kron_apply(&refs, x)
    }
}

/// Apply `A_x ⊗ A_y (⊗ A_z)` to a coefficient tensor by directional banded
/// contractions; O(N) for fixed bandwidths.
pub fn kron_apply(factors: &[&BandedMatrix], x: &CoefficientTensor) -> Result<CoefficientTensor> {
    let mut out = x.clone();
    kron_apply_in_place(factors, &mut out)?;
    Ok(out)
}

/// Apply into a caller-provided output tensor (`out` is overwritten),
/// avoiding an allocation in hot loops.
pub fn kron_apply_into(
    factors: &[&BandedMatrix],
    x: &CoefficientTensor,
    out: &mut CoefficientTensor,
) -> Result<()> {
    if out.dims() != x.dims() {
        return Err(Error::DimensionMismatch(format!(
            "output dims {:?} vs input dims {:?}",
            out.dims(),
            x.dims()
        )));
    }
    out.data_mut().copy_from_slice(x.data());
    kron_apply_in_place(factors, out)
}

/// A short sum of Kronecker products, `Σ_t c_t · (A_t,x ⊗ A_t,y [⊗ A_t,z])`.
///
/// System operators in this crate (mixed stiffness sums, elastic blocks) are
/// all of this form; applying one costs O(N) per term.
#[derive(Debug, Clone, Default)]
pub struct KronSum {
    terms: Vec<(f64, Vec<BandedMatrix>)>,
}

impl KronSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_term(mut self, coeff: f64, factors: Vec<BandedMatrix>) -> Self {
        self.push(coeff, factors);
        self
    }

    pub fn push(&mut self, coeff: f64, factors: Vec<BandedMatrix>) {
        if !self.terms.is_empty() {
            assert_eq!(
                self.terms[0].1.len(),
                factors.len(),
                "mixed-rank Kronecker sum"
            );
        }
        self.terms.push((coeff, factors));
    }

    pub fn terms(&self) -> &[(f64, Vec<BandedMatrix>)] {
        &self.terms
    }

    /// `out = Σ_t c_t (⊗ A_t) x`.
    pub fn apply_into(&self, x: &CoefficientTensor, out: &mut CoefficientTensor) -> Result<()> {
        out.fill(0.0);
        self.accumulate_into(1.0, x, out)
    }

    /// `out += s · Σ_t c_t (⊗ A_t) x`.
    pub fn accumulate_into(
        &self,
        s: f64,
        x: &CoefficientTensor,
        out: &mut CoefficientTensor,
    ) -> Result<()> {
        let mut tmp = CoefficientTensor::zeros(x.dims());
        for (coeff, factors) in &self.terms {
            let refs: Vec<&BandedMatrix> = factors.iter().collect();
            kron_apply_into(&refs, x, &mut tmp)?;
            out.axpy(s * coeff, &tmp);
        }
        Ok(())
    }

    pub fn apply(&self, x: &CoefficientTensor) -> Result<CoefficientTensor> {
        let mut out = CoefficientTensor::zeros(x.dims());
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    /// Dense materialization (reference/tests only; capped like the oracle).
    pub fn to_dense(&self) -> Result<nalgebra::DMatrix<f64>> {
        let (_, first) = self
            .terms
            .first()
            .map(|t| (t.0, &t.1))
            .ok_or_else(|| Error::InvalidInput("empty Kronecker sum".into()))?;
        let total: usize = first.iter().map(|f| f.dim()).product();
        let mut out = nalgebra::DMatrix::zeros(total, total);
        for (coeff, factors) in &self.terms {
            let refs: Vec<&BandedMatrix> = factors.iter().collect();
            out += super::dense::dense_kron_matrix(&refs)? * *coeff;
        }
        Ok(out)
    }
}

fn kron_apply_in_place(factors: &[&BandedMatrix], x: &mut CoefficientTensor) -> Result<()> {
    if factors.len() != x.rank() {
        return Err(Error::DimensionMismatch(format!(
            "{} factors for rank-{} tensor",
            factors.len(),
            x.rank()
        )));
    }
    for (d, f) in factors.iter().enumerate() {
        if f.dim() != x.dims()[d] {
            return Err(Error::DimensionMismatch(format!(
                "factor {d} has dimension {} but tensor direction {d} has {}",
                f.dim(),
                x.dims()[d]
            )));
        }
    }
    let dims = x.dims().to_vec();
    let total: usize = dims.iter().product();
    let mut scratch = vec![0.0; *dims.iter().max().unwrap()];
    for (d, f) in factors.iter().enumerate() {
        let n_d = dims[d];
        let stride: usize = dims[..d].iter().product();
        let block = stride * n_d;
        let data = x.data_mut();
        let mut base = 0;
        while base < total {
            for inner in 0..stride {
                let offset = base + inner;
                f.matvec_strided(data, &mut scratch[..n_d], offset, stride);
                for (i, v) in scratch[..n_d].iter().enumerate() {
                    data[offset + i * stride] = *v;
                }
            }
            base += block;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_mass;
    use crate::linalg::dense::{dense_kron_matrix, dense_solve};
    use crate::splines::BSplineSpace1D;
    use approx::assert_abs_diff_eq;

    fn random_spd(s: &BSplineSpace1D, eta: f64) -> BandedMatrix {
        let m = assemble_mass(s);
        let k = crate::assembly::assemble_stiffness(s).unwrap();
        m.add_scaled(eta, &k).unwrap()
    }

    fn lcg(state: &mut u64) -> f64 {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*state >> 33) as f64) / (1u64 << 31) as f64 - 0.5
    }

    #[test]
    fn diagonal_kronecker_solve() {
        let op = KroneckerOperator::new(vec![
            BandedMatrix::scaled_identity(3, 2.0),
            BandedMatrix::scaled_identity(4, 3.0),
        ])
        .unwrap();
        let b = CoefficientTensor::from_fn(&[3, 4], |_| 1.0);
        let x = op.solve(&b).unwrap();
        for v in x.data() {
            assert_abs_diff_eq!(*v, 1.0 / 6.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn mass_forward_multiply_roundtrip() {
        let s = BSplineSpace1D::uniform(1, 2).unwrap();
        let m = assemble_mass(&s);
        let op = KroneckerOperator::new(vec![m.clone(), m.clone()]).unwrap();
        let c = CoefficientTensor::from_fn(&[3, 3], |idx| (1 + idx[0] + 2 * idx[1]) as f64);
        let b = op.apply(&c).unwrap();
        let rec = op.solve(&b).unwrap();
        for (a, b) in rec.data().iter().zip(c.data()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-11);
        }
    }

    #[test]
    fn three_dim_solve_matches_dense_oracle() {
        // 6 x 6 x 6 unknowns, SPD-shifted banded factors, dense 216 x 216 oracle.
        let s = BSplineSpace1D::uniform(2, 4).unwrap();
        assert_eq!(s.n_basis(), 6);
        let fx = random_spd(&s, 0.17);
        let fy = random_spd(&s, 0.41);
        let fz = random_spd(&s, 0.83);
        let op = KroneckerOperator::new(vec![fx.clone(), fy.clone(), fz.clone()]).unwrap();
        let mut state = 7_u64;
        let b = CoefficientTensor::from_fn(&[6, 6, 6], |_| lcg(&mut state));
        let x = op.solve(&b).unwrap();

        let dense = dense_kron_matrix(&[&fx, &fy, &fz]).unwrap();
        let xd = dense_solve(&dense, b.data()).unwrap();
        let scale = x.norm_inf();
        for (a, b) in x.data().iter().zip(&xd) {
            assert!((a - b).abs() / scale < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn apply_identity_factors_is_identity() {
        let id3 = BandedMatrix::identity(3);
        let id4 = BandedMatrix::identity(4);
        let x = CoefficientTensor::from_fn(&[3, 4], |idx| (idx[0] * 7 + idx[1]) as f64);
        let y = kron_apply(&[&id3, &id4], &x).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn apply_mass_to_ones_gives_row_sums() {
        let s = BSplineSpace1D::uniform(1, 2).unwrap();
        let m = assemble_mass(&s);
        let ones = CoefficientTensor::from_fn(&[3, 3], |_| 1.0);
        let y = kron_apply(&[&m, &m], &ones).unwrap();
        let row_sum: Vec<f64> = (0..3).map(|i| (0..3).map(|j| m.get(i, j)).sum()).collect();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(y.get(&[i, j]), row_sum[i] * row_sum[j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn apply_matches_dense_on_random_3d() {
        let s = BSplineSpace1D::uniform(2, 3).unwrap();
        assert_eq!(s.n_basis(), 5);
        let a = random_spd(&s, 0.2);
        let b = random_spd(&s, 0.5);
        let c = random_spd(&s, 0.9);
        let mut state = 99_u64;
        let x = CoefficientTensor::from_fn(&[5, 5, 5], |_| lcg(&mut state));
        let y = kron_apply(&[&a, &b, &c], &x).unwrap();
        let dense = dense_kron_matrix(&[&a, &b, &c]).unwrap();
        let xv = nalgebra::DVector::from_column_slice(x.data());
        let yd = &dense * xv;
        for (i, v) in y.data().iter().enumerate() {
            assert_abs_diff_eq!(*v, yd[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn apply_then_solve_is_identity() {
        let s = BSplineSpace1D::uniform(3, 3).unwrap();
        let f = random_spd(&s, 0.25);
        let op = KroneckerOperator::new(vec![f.clone(), f.clone(), f]).unwrap();
        let n = s.n_basis();
        let mut state = 3_u64;
        let x = CoefficientTensor::from_fn(&[n, n, n], |_| lcg(&mut state));
        let y = op.apply(&x).unwrap();
        let rec = op.solve(&y).unwrap();
        let scale = x.norm_inf();
        for (a, b) in rec.data().iter().zip(x.data()) {
            assert!((a - b).abs() / scale < 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch_errors() {
        let op = KroneckerOperator::new(vec![BandedMatrix::identity(3), BandedMatrix::identity(3)])
            .unwrap();
        let b = CoefficientTensor::zeros(&[4, 3]);
        assert!(op.solve(&b).is_err());
        assert!(op.apply(&b).is_err());
    }

    #[test]
    fn oracle_equivalence_across_degrees_and_meshes() {
        // p in {1,2,3}, n_el in {2,4,8}, 3D SPD-shifted factors
        use crate::linalg::dense_oracle_solve;
        let mut state = 77_u64;
        for &p in &[1usize, 2, 3] {
            for &n_el in &[2usize, 4, 8] {
                let s = BSplineSpace1D::uniform(p, n_el).unwrap();
                let a = random_spd(&s, 0.1);
                let b_mat = random_spd(&s, 0.6);
                let c = random_spd(&s, 1.9);
                let n = s.n_basis();
                let op = KroneckerOperator::new(vec![a, b_mat, c]).unwrap();
                let rhs = CoefficientTensor::from_fn(&[n, n, n], |_| lcg(&mut state));
                let x = op.solve(&rhs).unwrap();
                let xd = dense_oracle_solve(&op, &rhs).unwrap();
                let scale = x.norm_inf();
                for (u, v) in x.data().iter().zip(xd.data()) {
                    assert!(
                        (u - v).abs() / scale < 1e-10,
                        "p={p} n_el={n_el}: {u} vs {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn singular_factor_is_rejected_at_construction() {
        let s = BSplineSpace1D::uniform(1, 2).unwrap();
        let k = crate::assembly::assemble_stiffness(&s).unwrap();
        assert!(KroneckerOperator::new(vec![k.clone(), k]).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        /// kron_solve agrees with the dense direct solver on random
        /// SPD-shifted factors and right-hand sides.
        #[test]
        fn kron_solve_matches_dense_oracle(
            px in 1usize..=3,
            py in 1usize..=3,
            nx in 2usize..=5,
            ny in 2usize..=5,
            ex in 0.0f64..2.0,
            ey in 0.0f64..2.0,
            seed in 0u64..1_000_000,
        ) {
            let sx = BSplineSpace1D::uniform(px, nx).unwrap();
            let sy = BSplineSpace1D::uniform(py, ny).unwrap();
            let ax = random_spd(&sx, ex);
            let ay = random_spd(&sy, ey);
            let op = KroneckerOperator::new(vec![ax.clone(), ay.clone()]).unwrap();
            let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(1);
            let b = CoefficientTensor::from_fn(
                &[sx.n_basis(), sy.n_basis()],
                |_| lcg(&mut state),
            );
            let x = op.solve(&b).unwrap();
            let dense = dense_kron_matrix(&[&ax, &ay]).unwrap();
            let xd = dense_solve(&dense, b.data()).unwrap();
            let scale = x.norm_inf().max(1e-300);
            for (u, v) in x.data().iter().zip(&xd) {
                proptest::prop_assert!((u - v).abs() / scale < 1e-10);
            }
        }
    }
}
