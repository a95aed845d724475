use crate::{Error, Result};
use nalgebra::DMatrix;

/// Relative pivot threshold below which factorization reports singularity.
const PIVOT_GUARD: f64 = 1e-14;

/// Symmetric-bandwidth banded matrix.
///
/// Stores the `2p + 1` diagonals of an `n x n` matrix row-major: entry
/// `(i, j)` lives at `data[i * (2p + 1) + (j - i + p)]` and is implicitly
/// zero whenever `|i - j| > p`.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    half_bandwidth: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        Self {
            n,
            half_bandwidth,
            data: vec![0.0; n * (2 * half_bandwidth + 1)],
        }
    }

    /// `s * I` stored with zero bandwidth.
    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n, 0);
        for i in 0..n {
            m.data[i] = s;
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.in_band(i, j));
        i * (2 * self.half_bandwidth + 1) + (j + self.half_bandwidth - i)
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i.abs_diff(j) <= self.half_bandwidth
    }

    /// Entry `(i, j)`; zero outside the band.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// `self + s * other`; the result carries the larger bandwidth.
    pub fn add_scaled(&self, s: f64, other: &BandedMatrix) -> Result<BandedMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "banded add: {} vs {}",
                self.n, other.n
            )));
        }
        let p = self.half_bandwidth.max(other.half_bandwidth);
        let mut out = BandedMatrix::zeros(self.n, p);
        for i in 0..self.n {
            let lo = i.saturating_sub(p);
            let hi = (i + p).min(self.n - 1);
            for j in lo..=hi {
                let v = self.get(i, j) + s * other.get(i, j);
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> BandedMatrix {
        let mut out = BandedMatrix::zeros(self.n, self.half_bandwidth);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.half_bandwidth);
            let hi = (i + self.half_bandwidth).min(self.n - 1);
            for j in lo..=hi {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// `y[i] = (A x)[i]` with `x` sampled at `offset + j * stride`; the
    /// output is contiguous of length `n`.
    pub(crate) fn matvec_strided(&self, x: &[f64], y: &mut [f64], offset: usize, stride: usize) {
        let p = self.half_bandwidth;
        let w = 2 * p + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(p);
            let hi = (i + p).min(self.n - 1);
            let row = &self.data[i * w..(i + 1) * w];
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += row[j + p - i] * x[offset + j * stride];
            }
            y[i] = acc;
        }
    }

    /// y = A x for contiguous vectors.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        self.matvec_strided(x, &mut y, 0, 1);
        y
    }

    /// LU factorization without pivoting, kept in band storage.
    ///
    /// The factors of interest here are shifted mass matrices `M + ηK`
    /// (symmetric positive definite), for which no pivoting is needed and
    /// the band structure is preserved; the work is linear in `n` for fixed
    /// bandwidth. A pivot below `1e-14` times the largest band entry is
    /// reported as singular.
    pub fn factorize(&self) -> Result<FactoredBanded> {
        let n = self.n;
        let p = self.half_bandwidth;
        let w = 2 * p + 1;
        let mut lu = self.data.clone();
        let scale = lu.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let guard = PIVOT_GUARD * if scale > 0.0 { scale } else { 1.0 };
        for k in 0..n {
            let pivot = lu[k * w + p];
            if pivot.abs() < guard {
                return Err(Error::SingularMatrix(format!(
                    "pivot {pivot:e} at row {k} below guard {guard:e}"
                )));
            }
            let hi = (k + p).min(n - 1);
            for i in k + 1..=hi {
                // column k entry of row i: j + p - i with j = k
                let lik = lu[i * w + (k + p - i)] / pivot;
                lu[i * w + (k + p - i)] = lik;
                for j in k + 1..=hi {
                    if j + p >= i && j <= i + p {
                        lu[i * w + (j + p - i)] -= lik * lu[k * w + (j + p - k)];
                    }
                }
            }
        }
        Ok(FactoredBanded {
            n,
            half_bandwidth: p,
            lu,
        })
    }
}

/// Banded LU factors (unit lower triangle below the diagonal, U on and
/// above), in the same band layout as [`BandedMatrix`].
#[derive(Debug, Clone)]
pub struct FactoredBanded {
    n: usize,
    half_bandwidth: usize,
    lu: Vec<f64>,
}

impl FactoredBanded {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    /// Entry of the combined LU band (tests only).
    pub fn lu_entry(&self, i: usize, j: usize) -> f64 {
        let p = self.half_bandwidth;
        if i.abs_diff(j) > p {
            return 0.0;
        }
        self.lu[i * (2 * p + 1) + (j + p - i)]
    }

    /// Solve `A x = b` in place over a strided view of `data`.
    pub(crate) fn solve_strided(&self, data: &mut [f64], offset: usize, stride: usize) {
        let n = self.n;
        let p = self.half_bandwidth;
        let w = 2 * p + 1;
        // forward substitution with unit lower factor
        for i in 1..n {
            let lo = i.saturating_sub(p);
            let row = &self.lu[i * w..(i + 1) * w];
            let mut acc = data[offset + i * stride];
            for j in lo..i {
                acc -= row[j + p - i] * data[offset + j * stride];
            }
            data[offset + i * stride] = acc;
        }
        // back substitution
        for i in (0..n).rev() {
            let hi = (i + p).min(n - 1);
            let row = &self.lu[i * w..(i + 1) * w];
            let mut acc = data[offset + i * stride];
            for j in i + 1..=hi {
                acc -= row[j + p - i] * data[offset + j * stride];
            }
            data[offset + i * stride] = acc / row[p];
        }
    }

    /// Solve for every column of a row-major `n x k` right-hand-side block.
    pub fn solve_multi_rhs(&self, rhs: &mut [f64], k: usize) -> Result<()> {
        if rhs.len() != self.n * k {
            return Err(Error::DimensionMismatch(format!(
                "multi-RHS block of {} entries is not {} x {k}",
                rhs.len(),
                self.n
            )));
        }
        for col in 0..k {
            self.solve_strided(rhs, col, k);
        }
        Ok(())
    }

    /// Solve a single contiguous right-hand side.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} vs dimension {}",
                b.len(),
                self.n
            )));
        }
        let mut x = b.to_vec();
        self.solve_strided(&mut x, 0, 1);
        Ok(x)
    }
}
