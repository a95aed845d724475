use crate::{Error, Result};

/// Dense coefficient tensor over a 2D or 3D tensor-product space.
///
/// Layout is x-fastest: entry `(i, j, k)` sits at `i + n*j + n*m*k`. The
/// directional solves and applications view the same buffer through strides,
/// so no sweep ever transposes the data.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl CoefficientTensor {
    pub fn zeros(dims: &[usize]) -> Self {
        assert!(
            (2..=3).contains(&dims.len()),
            "tensor rank must be 2 or 3, got {}",
            dims.len()
        );
        let n: usize = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn from_data(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if data.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for dims {dims:?}",
                data.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    /// Fill from a function of the multi-index.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for flat in 0..t.len() {
            let mut rem = flat;
            for (d, i) in idx.iter_mut().enumerate() {
                *i = rem % dims[d];
                rem /= dims[d];
            }
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0;
        let mut stride = 1;
        for (d, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.dims[d]);
            flat += i * stride;
            stride *= self.dims[d];
        }
        flat
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: &[usize], v: f64) {
        let k = self.flat_index(idx);
        self.data[k] = v;
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// self += s * other
    pub fn axpy(&mut self, s: f64, other: &CoefficientTensor) {
        assert_eq!(self.dims, other.dims, "axpy shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn dot(&self, other: &CoefficientTensor) -> f64 {
        assert_eq!(self.dims, other.dims, "dot shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Copy of `self` scaled and shifted: `a * self + b * other`.
    pub fn linear_combination(
        a: f64,
        x: &CoefficientTensor,
        b: f64,
        y: &CoefficientTensor,
    ) -> Self {
        assert_eq!(x.dims, y.dims);
        let data = x
            .data
            .iter()
            .zip(&y.data)
            .map(|(xi, yi)| a * xi + b * yi)
            .collect();
        Self {
            dims: x.dims.clone(),
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_fastest_layout() {
        let t = CoefficientTensor::from_fn(&[3, 2], |idx| (idx[0] + 10 * idx[1]) as f64);
        assert_eq!(t.data(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert_eq!(t.get(&[2, 1]), 12.0);
        assert_eq!(t.flat_index(&[2, 1]), 5);
    }

    #[test]
    fn three_dim_layout() {
        let t =
            CoefficientTensor::from_fn(&[2, 3, 2], |idx| (idx[0] + 2 * idx[1] + 6 * idx[2]) as f64);
        // flat index equals the mixed-radix value by construction
        for (flat, v) in t.data().iter().enumerate() {
            assert_eq!(*v, flat as f64);
        }
    }

    #[test]
    fn vector_ops() {
        let a = CoefficientTensor::from_fn(&[2, 2], |_| 1.0);
        let mut b = CoefficientTensor::zeros(&[2, 2]);
        b.axpy(2.0, &a);
        assert_eq!(b.data(), &[2.0; 4]);
        assert_eq!(a.dot(&b), 8.0);
        assert_eq!(b.norm_inf(), 2.0);
    }
}
