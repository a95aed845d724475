//! Assembly of the one-dimensional Gram matrices — mass `M`, stiffness `K`,
//! mixed `B` — and L2 projection onto the tensor-product space.
//!
//! All matrices are built directly in banded storage (half-bandwidth equal to
//! the degree); the linear-cost factorization downstream depends on never
//! forming a dense intermediate.

use crate::linalg::{BandedMatrix, CoefficientTensor, KroneckerOperator};
use crate::splines::BSplineSpace1D;
use crate::{Error, Result};

/// Mass matrix `M(a, c) = ∫ N_a N_c dx`; symmetric positive definite.
pub fn assemble_mass(space: &BSplineSpace1D) -> BandedMatrix {
    assemble_gram(space, 0, 0)
}

/// Stiffness matrix `K(a, c) = ∫ N'_a N'_c dx`; symmetric positive
/// semi-definite with the constants in its kernel. Rejects degree 0, whose
/// derivatives vanish inside every element.
pub fn assemble_stiffness(space: &BSplineSpace1D) -> Result<BandedMatrix> {
    if space.degree() == 0 {
        return Err(Error::InvalidInput("stiffness requires degree >= 1".into()));
    }
    Ok(assemble_gram(space, 1, 1))
}

/// Mixed matrix `B(a, c) = ∫ N'_a N_c dx` (derivative on the first slot).
/// Its transpose is `Bᵀ(a, c) = ∫ N_a N'_c dx`.
pub fn assemble_mixed(space: &BSplineSpace1D) -> Result<BandedMatrix> {
    if space.degree() == 0 {
        return Err(Error::InvalidInput(
            "mixed matrix requires degree >= 1".into(),
        ));
    }
    Ok(assemble_gram(space, 1, 0))
}

fn assemble_gram(space: &BSplineSpace1D, row_order: usize, col_order: usize) -> BandedMatrix {
    let n = space.n_basis();
    let p = space.degree();
    let mut out = BandedMatrix::zeros(n, p);
    let quad = space.quadrature();
    for e in 0..space.n_elements() {
        let pts = quad.span_points(e);
        let wts = quad.span_weights(e);
        for (x, w) in pts.iter().zip(wts) {
            let (first, vals, ders) = space.eval_basis_with_deriv(*x).expect("x inside [0,1]");
            let rows = if row_order == 0 { &vals } else { &ders };
            let cols = if col_order == 0 { &vals } else { &ders };
            for (a, ra) in rows.iter().enumerate() {
                for (c, rc) in cols.iter().enumerate() {
                    out.add(first + a, first + c, w * ra * rc);
                }
            }
        }
    }
    out
}

/// Load tensor `L[a] = ∫ f(x) Π_d N_{a_d}(x_d) dx` assembled by tensor
/// quadrature, element by element.
pub fn load_tensor(
    f: &dyn Fn(&[f64]) -> f64,
    spaces: &[BSplineSpace1D],
) -> Result<CoefficientTensor> {
    let rank = spaces.len();
    if !(2..=3).contains(&rank) {
        return Err(Error::InvalidInput(format!(
            "expected 2 or 3 directions, got {rank}"
        )));
    }
    let dims: Vec<usize> = spaces.iter().map(|s| s.n_basis()).collect();
    let mut out = CoefficientTensor::zeros(&dims);

    // Per-direction tables of quadrature points with their active basis windows.
    struct DirTable {
        coords: Vec<f64>,
        weights: Vec<f64>,
        firsts: Vec<usize>,
        values: Vec<Vec<f64>>,
    }
    let tables: Vec<DirTable> = spaces
        .iter()
        .map(|s| {
            let quad = s.quadrature();
            let mut t = DirTable {
                coords: Vec::new(),
                weights: Vec::new(),
                firsts: Vec::new(),
                values: Vec::new(),
            };
            for e in 0..s.n_elements() {
                for (x, w) in quad.span_points(e).iter().zip(quad.span_weights(e)) {
                    let (first, vals) = s.eval_basis(*x, 0)?;
                    t.coords.push(*x);
                    t.weights.push(*w);
                    t.firsts.push(first);
                    t.values.push(vals);
                }
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;

    let counts: Vec<usize> = tables.iter().map(|t| t.coords.len()).collect();
    let mut q = vec![0usize; rank];
    let mut point = vec![0.0; rank];
    loop {
        let mut w = 1.0;
        for d in 0..rank {
            point[d] = tables[d].coords[q[d]];
            w *= tables[d].weights[q[d]];
        }
        let fw = w * f(&point);
        if fw != 0.0 {
            if rank == 2 {
                let (tx, ty) = (&tables[0], &tables[1]);
                let (fx, fy) = (tx.firsts[q[0]], ty.firsts[q[1]]);
                for (b, vy) in ty.values[q[1]].iter().enumerate() {
                    let row = fw * vy;
                    for (a, vx) in tx.values[q[0]].iter().enumerate() {
                        let idx = out.flat_index(&[fx + a, fy + b]);
                        out.data_mut()[idx] += row * vx;
                    }
                }
            } else {
                let (tx, ty, tz) = (&tables[0], &tables[1], &tables[2]);
                let (fx, fy, fz) = (tx.firsts[q[0]], ty.firsts[q[1]], tz.firsts[q[2]]);
                for (c, vz) in tz.values[q[2]].iter().enumerate() {
                    for (b, vy) in ty.values[q[1]].iter().enumerate() {
                        let row = fw * vy * vz;
                        for (a, vx) in tx.values[q[0]].iter().enumerate() {
                            let idx = out.flat_index(&[fx + a, fy + b, fz + c]);
                            out.data_mut()[idx] += row * vx;
                        }
                    }
                }
            }
        }
        // advance the mixed-radix quadrature counter
        let mut d = 0;
        loop {
            q[d] += 1;
            if q[d] < counts[d] {
                break;
            }
            q[d] = 0;
            d += 1;
            if d == rank {
                return Ok(out);
            }
        }
    }
}

/// L2-project `f` onto the tensor-product space: solve
/// `(M_x ⊗ M_y [⊗ M_z]) c = load`.
///
/// `mass_op` must be the Kronecker operator of the per-direction mass
/// matrices of `spaces` (callers typically keep it factored across many
/// projections).
pub fn l2_project(
    f: &dyn Fn(&[f64]) -> f64,
    spaces: &[BSplineSpace1D],
    mass_op: &KroneckerOperator,
) -> Result<CoefficientTensor> {
    let load = load_tensor(f, spaces)?;
    mass_op.solve(&load)
}

/// Convenience constructor for the factored mass operator of `spaces`.
pub fn mass_operator(spaces: &[BSplineSpace1D]) -> Result<KroneckerOperator> {
    KroneckerOperator::new(spaces.iter().map(assemble_mass).collect())
}
