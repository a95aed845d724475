//! One-dimensional B-spline spaces on [0, 1] with open uniform knot vectors,
//! basis/derivative evaluation and per-span Gauss-Legendre quadrature.

use crate::{Error, Result};

/// One coordinate direction of a tensor-product spline space.
///
/// The knot vector is open (clamped) and uniform on [0, 1]: the first and
/// last knots repeat `p + 1` times, interior knots sit at `i / n_el`. The
/// space has `n_el + p` basis functions, each supported on at most `p + 1`
/// elements.
#[derive(Debug, Clone)]
pub struct BSplineSpace1D {
    degree: usize,
    n_elements: usize,
    knots: Vec<f64>,
}

impl BSplineSpace1D {
    /// Build the open uniform space of degree `p` with `n_el` elements.
    pub fn uniform(p: usize, n_el: usize) -> Result<Self> {
        if n_el < 1 {
            return Err(Error::InvalidInput(format!(
                "element count must be >= 1, got {n_el}"
            )));
        }
        let mut knots = Vec::with_capacity(n_el + 2 * p + 1);
        knots.extend(std::iter::repeat_n(0.0, p + 1));
        for i in 1..n_el {
            knots.push(i as f64 / n_el as f64);
        }
        knots.extend(std::iter::repeat_n(1.0, p + 1));
        Ok(Self {
            degree: p,
            n_elements: n_el,
            knots,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// Number of basis functions, `n_el + p` for open uniform knots.
    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Bounds [a, b] of element `e`.
    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        let ne = self.n_elements as f64;
        (e as f64 / ne, (e + 1) as f64 / ne)
    }

    /// Index of the knot span containing `x` (the element index plus `p`).
    fn find_span(&self, x: f64) -> usize {
        let e = ((x * self.n_elements as f64) as usize).min(self.n_elements - 1);
        e + self.degree
    }

    /// Greville abscissa of basis function `a`: the mean of `p` consecutive
    /// interior knots.
    pub fn greville(&self, a: usize) -> f64 {
        let p = self.degree;
        if p == 0 {
            let (lo, hi) = (self.knots[a], self.knots[a + 1]);
            return 0.5 * (lo + hi);
        }
        self.knots[a + 1..=a + p].iter().sum::<f64>() / p as f64
    }

    /// Evaluate the `p + 1` basis functions that are nonzero at `x`.
    ///
    /// Returns the index of the first active basis function and the values
    /// (`order` 0) or first derivatives (`order` 1) of the active functions.
    /// All other basis functions vanish identically at `x`.
    pub fn eval_basis(&self, x: f64, order: usize) -> Result<(usize, Vec<f64>)> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidInput(format!(
                "evaluation point {x} outside [0, 1]"
            )));
        }
        if order > 1 {
            return Err(Error::InvalidInput(format!(
                "derivative order {order} not supported (0 or 1)"
            )));
        }
        let p = self.degree;
        let span = self.find_span(x);
        let first = span - p;
        let values = if order == 0 {
            self.basis_funs(span, x, p)
        } else {
            self.basis_deriv(span, x)
        };
        Ok((first, values))
    }

    /// Values and first derivatives of the active basis functions at `x`,
    /// in one call (used by assembly loops).
    pub fn eval_basis_with_deriv(&self, x: f64) -> Result<(usize, Vec<f64>, Vec<f64>)> {
        let (first, vals) = self.eval_basis(x, 0)?;
        let span = self.find_span(x);
        let ders = self.basis_deriv(span, x);
        Ok((first, vals, ders))
    }

    /// Cox-de Boor recursion for the nonzero functions of degree `deg` on the
    /// span; `deg <= self.degree`.
    fn basis_funs(&self, span: usize, x: f64, deg: usize) -> Vec<f64> {
        let t = &self.knots;
        let mut n = vec![0.0; deg + 1];
        let mut left = vec![0.0; deg + 1];
        let mut right = vec![0.0; deg + 1];
        n[0] = 1.0;
        for j in 1..=deg {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            n[j] = saved;
        }
        n
    }

    /// First derivatives of the degree-p active functions, from the
    /// degree-(p-1) values.
    fn basis_deriv(&self, span: usize, x: f64) -> Vec<f64> {
        let p = self.degree;
        if p == 0 {
            return vec![0.0];
        }
        let t = &self.knots;
        // Degree p-1 functions nonzero on this span: indices span-p+1 ..= span.
        let lower = self.basis_funs(span, x, p - 1);
        let mut ders = vec![0.0; p + 1];
        let pf = p as f64;
        for (j, der) in ders.iter_mut().enumerate() {
            let i = span - p + j; // global index of the degree-p function
                                  // N'_{i,p} = p * ( N_{i,p-1}/(t_{i+p}-t_i) - N_{i+1,p-1}/(t_{i+p+1}-t_{i+1}) )
            let mut v = 0.0;
            if j >= 1 {
                let den = t[i + p] - t[i];
                if den > 0.0 {
                    v += lower[j - 1] / den;
                }
            }
            if j < p {
                let den = t[i + p + 1] - t[i + 1];
                if den > 0.0 {
                    v -= lower[j] / den;
                }
            }
            *der = pf * v;
        }
        ders
    }

    /// Gauss-Legendre rule with `p + 1` points per knot span, exact for the
    /// degree-2p mass integrands.
    pub fn quadrature(&self) -> QuadratureRule {
        QuadratureRule::per_span(self, self.degree + 1)
    }
}

/// Gauss-Legendre points and weights mapped onto every knot span.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    points_per_span: usize,
    /// Flattened (point, weight) pairs, span-major.
    points: Vec<f64>,
    weights: Vec<f64>,
    n_spans: usize,
}

impl QuadratureRule {
    fn per_span(space: &BSplineSpace1D, k: usize) -> Self {
        let (nodes, wts) = gauss_legendre(k);
        let n_spans = space.n_elements();
        let mut points = Vec::with_capacity(n_spans * k);
        let mut weights = Vec::with_capacity(n_spans * k);
        for e in 0..n_spans {
            let (a, b) = space.element_bounds(e);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for q in 0..k {
                points.push(mid + half * nodes[q]);
                weights.push(half * wts[q]);
            }
        }
        Self {
            points_per_span: k,
            points,
            weights,
            n_spans,
        }
    }

    pub fn n_spans(&self) -> usize {
        self.n_spans
    }

    pub fn points_per_span(&self) -> usize {
        self.points_per_span
    }

    /// Points of span `e`.
    pub fn span_points(&self, e: usize) -> &[f64] {
        let k = self.points_per_span;
        &self.points[e * k..(e + 1) * k]
    }

    /// Weights of span `e`; they sum to the span length.
    pub fn span_weights(&self, e: usize) -> &[f64] {
        let k = self.points_per_span;
        &self.weights[e * k..(e + 1) * k]
    }

    /// All (point, weight) pairs in span-major order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }
}

/// Nodes and weights of the k-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; accurate to machine
/// precision for the small k used here.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k {
        // Chebyshev-like initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[k - 1 - i] = x;
        weights[k - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_deriv(k: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if k == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_knot_fixtures() {
        let s = BSplineSpace1D::uniform(1, 1).unwrap();
        assert_eq!(s.knots(), &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(s.n_basis(), 2);

        let s = BSplineSpace1D::uniform(2, 1).unwrap();
        assert_eq!(s.knots(), &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(s.n_basis(), 3);

        let s = BSplineSpace1D::uniform(2, 32).unwrap();
        assert_eq!(s.n_basis(), 34);
    }

    #[test]
    fn rejects_empty_mesh() {
        assert!(BSplineSpace1D::uniform(2, 0).is_err());
    }

    #[test]
    fn rejects_out_of_domain_points() {
        let s = BSplineSpace1D::uniform(2, 4).unwrap();
        assert!(s.eval_basis(-0.1, 0).is_err());
        assert!(s.eval_basis(1.1, 0).is_err());
        assert!(s.eval_basis(0.5, 2).is_err());
    }

    #[test]
    fn linear_hat_functions_at_midpoint() {
        let s = BSplineSpace1D::uniform(1, 1).unwrap();
        let (first, vals) = s.eval_basis(0.5, 0).unwrap();
        assert_eq!(first, 0);
        assert_abs_diff_eq!(vals[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(vals[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn clamped_endpoint_interpolation() {
        let s = BSplineSpace1D::uniform(2, 1).unwrap();
        let (first, vals) = s.eval_basis(0.0, 0).unwrap();
        assert_eq!(first, 0);
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(vals[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(vals[2], 0.0, epsilon = 1e-15);

        let (first, vals) = s.eval_basis(1.0, 0).unwrap();
        assert_eq!(first, 0);
        assert_abs_diff_eq!(vals[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn partition_of_unity_random_points() {
        let mut state = 0x1234_5678_u64;
        let mut next = || {
            // xorshift, plenty for test point placement
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for &(p, n_el) in &[(1usize, 7usize), (2, 5), (3, 9), (4, 3)] {
            let s = BSplineSpace1D::uniform(p, n_el).unwrap();
            for _ in 0..1000 {
                let x = next();
                let (_, vals) = s.eval_basis(x, 0).unwrap();
                let sum: f64 = vals.iter().sum();
                assert!(
                    (sum - 1.0).abs() < 1e-12,
                    "p={p} n_el={n_el} x={x} sum={sum}"
                );
                let (_, ders) = s.eval_basis(x, 1).unwrap();
                let dsum: f64 = ders.iter().sum();
                assert!(dsum.abs() < 1e-10, "derivative sum {dsum}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let s = BSplineSpace1D::uniform(3, 8).unwrap();
        let h = 1e-6;
        // stay away from knots (multiples of 1/8)
        for &x in &[0.07, 0.21, 0.33, 0.481, 0.66, 0.93] {
            let (first, ders) = s.eval_basis(x, 1).unwrap();
            let (fp, vp) = s.eval_basis(x + h, 0).unwrap();
            let (fm, vm) = s.eval_basis(x - h, 0).unwrap();
            assert_eq!(fp, fm);
            assert_eq!(fp, first);
            for j in 0..ders.len() {
                let fd = (vp[j] - vm[j]) / (2.0 * h);
                assert!(
                    (ders[j] - fd).abs() < 1e-6,
                    "x={x} j={j} der={} fd={fd}",
                    ders[j]
                );
            }
        }
    }

    #[test]
    fn support_locality() {
        // Every basis function vanishes outside its p+1 supporting elements:
        // evaluation reports a window of p+1 active functions, so any index
        // outside that window has exact value zero at x.
        let p = 2;
        let s = BSplineSpace1D::uniform(p, 8).unwrap();
        let n = s.n_basis();
        for k in 0..200 {
            let x = k as f64 / 199.0;
            let (first, vals) = s.eval_basis(x, 0).unwrap();
            let mut dense = vec![0.0; n];
            for (j, v) in vals.iter().enumerate() {
                dense[first + j] = *v;
            }
            // Cross-check against the knot-support definition.
            for (a, value) in dense.iter().enumerate() {
                let lo = s.knots()[a];
                let hi = s.knots()[a + p + 1];
                if x < lo || x > hi {
                    assert_eq!(*value, 0.0);
                }
            }
        }
    }

    #[test]
    fn quadrature_weights_sum_to_span_length() {
        for &(p, n_el) in &[(1usize, 4usize), (2, 5), (3, 3)] {
            let s = BSplineSpace1D::uniform(p, n_el).unwrap();
            let q = s.quadrature();
            for e in 0..q.n_spans() {
                let (a, b) = s.element_bounds(e);
                let sum: f64 = q.span_weights(e).iter().sum();
                assert_abs_diff_eq!(sum, b - a, epsilon = 1e-14);
                assert!(q.span_weights(e).iter().all(|&w| w > 0.0));
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        /// Partition of unity and its derivative for arbitrary spaces and
        /// evaluation points.
        #[test]
        fn partition_of_unity_holds_everywhere(
            p in 0usize..=4,
            n_el in 1usize..=12,
            x in 0.0f64..=1.0,
        ) {
            let s = BSplineSpace1D::uniform(p, n_el).unwrap();
            let (_, vals) = s.eval_basis(x, 0).unwrap();
            let sum: f64 = vals.iter().sum();
            proptest::prop_assert!((sum - 1.0).abs() < 1e-12);
            let (_, ders) = s.eval_basis(x, 1).unwrap();
            let dsum: f64 = ders.iter().sum();
            proptest::prop_assert!(dsum.abs() < 1e-9);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // k points are exact through degree 2k-1.
        for k in 1..=6 {
            let (x, w) = gauss_legendre(k);
            for deg in 0..2 * k {
                let integral: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&xi, &wi)| wi * xi.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 0 {
                    2.0 / (deg as f64 + 1.0)
                } else {
                    0.0
                };
                assert_abs_diff_eq!(integral, exact, epsilon = 1e-13);
            }
        }
    }
}
