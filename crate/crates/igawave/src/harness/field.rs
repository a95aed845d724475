use crate::linalg::CoefficientTensor;
use crate::splines::BSplineSpace1D;
use crate::Result;

/// Evaluate the spline field at one point of the unit square/cube.
pub fn eval_field(
    coeffs: &CoefficientTensor,
    spaces: &[BSplineSpace1D],
    point: &[f64],
) -> Result<f64> {
    let rank = spaces.len();
    debug_assert_eq!(rank, coeffs.rank());
    let mut windows = Vec::with_capacity(rank);
    for (s, &x) in spaces.iter().zip(point) {
        windows.push(s.eval_basis(x, 0)?);
    }
    let mut acc = 0.0;
    match rank {
        2 => {
            let (fx, vx) = &windows[0];
            let (fy, vy) = &windows[1];
            for (b, wy) in vy.iter().enumerate() {
                for (a, wx) in vx.iter().enumerate() {
                    acc += coeffs.get(&[fx + a, fy + b]) * wx * wy;
                }
            }
        }
        3 => {
            let (fx, vx) = &windows[0];
            let (fy, vy) = &windows[1];
            let (fz, vz) = &windows[2];
            for (c, wz) in vz.iter().enumerate() {
                for (b, wy) in vy.iter().enumerate() {
                    for (a, wx) in vx.iter().enumerate() {
                        acc += coeffs.get(&[fx + a, fy + b, fz + c]) * wx * wy * wz;
                    }
                }
            }
        }
        _ => unreachable!("rank is 2 or 3"),
    }
    Ok(acc)
}

/// L2 distance between the spline field and a reference function, via the
/// spaces' Gauss rule.
pub fn field_l2_error(
    coeffs: &CoefficientTensor,
    spaces: &[BSplineSpace1D],
    reference: &dyn Fn(&[f64]) -> f64,
) -> Result<f64> {
    let rank = spaces.len();
    let quads: Vec<_> = spaces.iter().map(|s| s.quadrature()).collect();
    let mut acc = 0.0;
    let mut point = vec![0.0; rank];
    // iterate the tensor quadrature grid with a mixed-radix counter
    let counts: Vec<usize> = quads
        .iter()
        .map(|q| q.n_spans() * q.points_per_span())
        .collect();
    let coords: Vec<(Vec<f64>, Vec<f64>)> = quads
        .iter()
        .map(|q| {
            let mut xs = Vec::new();
            let mut ws = Vec::new();
            for e in 0..q.n_spans() {
                xs.extend_from_slice(q.span_points(e));
                ws.extend_from_slice(q.span_weights(e));
            }
            (xs, ws)
        })
        .collect();
    let mut idx = vec![0usize; rank];
    loop {
        let mut w = 1.0;
        for d in 0..rank {
            point[d] = coords[d].0[idx[d]];
            w *= coords[d].1[idx[d]];
        }
        let diff = eval_field(coeffs, spaces, &point)? - reference(&point);
        acc += w * diff * diff;
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < counts[d] {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == rank {
                return Ok(acc.sqrt());
            }
        }
    }
}

/// Sample the field on a uniform grid (endpoints included), x-fastest.
/// Returns the grid dimensions and the flat sample array.
pub fn sample_on_grid(
    coeffs: &CoefficientTensor,
    spaces: &[BSplineSpace1D],
    points_per_dir: &[usize],
) -> Result<(Vec<usize>, Vec<f64>)> {
    let rank = spaces.len();
    debug_assert_eq!(points_per_dir.len(), rank);
    // precompute the active windows per direction
    struct Table {
        firsts: Vec<usize>,
        values: Vec<Vec<f64>>,
    }
    let tables: Vec<Table> = spaces
        .iter()
        .zip(points_per_dir)
        .map(|(s, &np)| {
            let mut t = Table {
                firsts: Vec::with_capacity(np),
                values: Vec::with_capacity(np),
            };
            for i in 0..np {
                let x = if np == 1 {
                    0.0
                } else {
                    i as f64 / (np - 1) as f64
                };
                let (first, vals) = s.eval_basis(x, 0)?;
                t.firsts.push(first);
                t.values.push(vals);
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;

    let total: usize = points_per_dir.iter().product();
    let mut out = vec![0.0; total];
    let mut idx = vec![0usize; rank];
    for (flat, slot) in out.iter_mut().enumerate() {
        let mut rem = flat;
        for (d, i) in idx.iter_mut().enumerate() {
            *i = rem % points_per_dir[d];
            rem /= points_per_dir[d];
        }
        let mut acc = 0.0;
        match rank {
            2 => {
                let (tx, ty) = (&tables[0], &tables[1]);
                for (b, wy) in ty.values[idx[1]].iter().enumerate() {
                    for (a, wx) in tx.values[idx[0]].iter().enumerate() {
                        acc +=
                            coeffs.get(&[tx.firsts[idx[0]] + a, ty.firsts[idx[1]] + b]) * wx * wy;
                    }
                }
            }
            3 => {
                let (tx, ty, tz) = (&tables[0], &tables[1], &tables[2]);
                for (c, wz) in tz.values[idx[2]].iter().enumerate() {
                    for (b, wy) in ty.values[idx[1]].iter().enumerate() {
                        for (a, wx) in tx.values[idx[0]].iter().enumerate() {
                            acc += coeffs.get(&[
                                tx.firsts[idx[0]] + a,
                                ty.firsts[idx[1]] + b,
                                tz.firsts[idx[2]] + c,
                            ]) * wx
                                * wy
                                * wz;
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        *slot = acc;
    }
    Ok((points_per_dir.to_vec(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{l2_project, mass_operator};

    #[test]
    fn constant_field_evaluates_to_constant() {
        let spaces = vec![
            BSplineSpace1D::uniform(2, 4).unwrap(),
            BSplineSpace1D::uniform(2, 4).unwrap(),
        ];
        let dims: Vec<usize> = spaces.iter().map(|s| s.n_basis()).collect();
        let c = CoefficientTensor::from_fn(&dims, |_| 2.5);
        assert!((eval_field(&c, &spaces, &[0.3, 0.7]).unwrap() - 2.5).abs() < 1e-13);
        let err = field_l2_error(&c, &spaces, &|_| 2.5).unwrap();
        assert!(err < 1e-13);
    }

    #[test]
    fn projection_error_is_small_for_resolved_function() {
        let spaces = vec![
            BSplineSpace1D::uniform(3, 8).unwrap(),
            BSplineSpace1D::uniform(3, 8).unwrap(),
        ];
        let op = mass_operator(&spaces).unwrap();
        let f =
            |x: &[f64]| (std::f64::consts::PI * x[0]).cos() * (std::f64::consts::PI * x[1]).cos();
        let c = l2_project(&f, &spaces, &op).unwrap();
        let err = field_l2_error(&c, &spaces, &f).unwrap();
        // h = 1/8, p = 3: the best-approximation error sits around 1e-5
        assert!(err < 1e-4, "projection error {err:e}");
    }

    #[test]
    fn grid_sampling_matches_pointwise_evaluation() {
        let spaces = vec![
            BSplineSpace1D::uniform(2, 3).unwrap(),
            BSplineSpace1D::uniform(1, 5).unwrap(),
        ];
        let dims: Vec<usize> = spaces.iter().map(|s| s.n_basis()).collect();
        let c = CoefficientTensor::from_fn(&dims, |idx| (idx[0] * 3 + idx[1]) as f64 * 0.1);
        let (gdims, samples) = sample_on_grid(&c, &spaces, &[7, 5]).unwrap();
        assert_eq!(gdims, vec![7, 5]);
        for j in 0..5 {
            for i in 0..7 {
                let x = i as f64 / 6.0;
                let y = j as f64 / 4.0;
                let direct = eval_field(&c, &spaces, &[x, y]).unwrap();
                assert!((samples[i + 7 * j] - direct).abs() < 1e-13);
            }
        }
    }
}
