use crate::Result;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// One row of an energy series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub step: usize,
    pub time: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

/// `energy.csv`: `step,time,kinetic,potential,total`, 17 significant digits.
pub fn write_energy_csv(path: &Path, records: &[EnergyRecord]) -> Result<()> {
    let mut s = String::from("step,time,kinetic,potential,total\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.step, r.time, r.kinetic, r.potential, r.total
        );
    }
    fs::write(path, s)?;
    Ok(())
}

/// `starnorm.csv`: `step,time,starnorm`.
pub fn write_starnorm_csv(path: &Path, rows: &[(usize, f64, f64)]) -> Result<()> {
    let mut s = String::from("step,time,starnorm\n");
    for (step, time, value) in rows {
        let _ = writeln!(s, "{step},{time:.16e},{value:.16e}");
    }
    fs::write(path, s)?;
    Ok(())
}

/// Two-column CSV with a caller-provided header (stability and convergence
/// tables).
pub fn write_pairs_csv(path: &Path, header: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut s = format!("{header}\n");
    for (a, b) in rows {
        let _ = writeln!(s, "{a:.16e},{b:.16e}");
    }
    fs::write(path, s)?;
    Ok(())
}

/// `scaling.csv`: `n_dofs,seconds_per_step`.
pub fn write_scaling_csv(path: &Path, rows: &[(usize, f64)]) -> Result<()> {
    let mut s = String::from("n_dofs,seconds_per_step\n");
    for (n, t) in rows {
        let _ = writeln!(s, "{n},{t:.16e}");
    }
    fs::write(path, s)?;
    Ok(())
}

/// Legacy VTK structured-points snapshot of one scalar field sampled on a
/// uniform grid (x fastest, matching the VTK point order).
pub fn write_vtk_scalar(path: &Path, grid_dims: &[usize], values: &[f64]) -> Result<()> {
    let s = vtk_text(grid_dims, &[("u", values)], false)?;
    fs::write(path, s)?;
    Ok(())
}

/// Legacy VTK structured-points snapshot of a 2D vector field (z = 0).
pub fn write_vtk_vector2(path: &Path, grid_dims: &[usize], ux: &[f64], uy: &[f64]) -> Result<()> {
    let s = vtk_text(grid_dims, &[("displacement", ux), ("", uy)], true)?;
    fs::write(path, s)?;
    Ok(())
}

fn vtk_text(grid_dims: &[usize], fields: &[(&str, &[f64])], vector: bool) -> Result<String> {
    let (nx, ny, nz) = match grid_dims.len() {
        2 => (grid_dims[0], grid_dims[1], 1),
        3 => (grid_dims[0], grid_dims[1], grid_dims[2]),
        other => {
            return Err(crate::Error::InvalidInput(format!(
                "vtk grids are 2D or 3D, got rank {other}"
            )))
        }
    };
    let n = nx * ny * nz;
    let spacing = |k: usize| if k > 1 { 1.0 / (k - 1) as f64 } else { 1.0 };
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("igawave snapshot\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET STRUCTURED_POINTS\n");
    let _ = writeln!(s, "DIMENSIONS {nx} {ny} {nz}");
    s.push_str("ORIGIN 0 0 0\n");
    let _ = writeln!(
        s,
        "SPACING {:.12e} {:.12e} {:.12e}",
        spacing(nx),
        spacing(ny),
        spacing(nz)
    );
    let _ = writeln!(s, "POINT_DATA {n}");
    if vector {
        let (name, ux) = fields[0];
        let (_, uy) = fields[1];
        debug_assert_eq!(ux.len(), n);
        debug_assert_eq!(uy.len(), n);
        let _ = writeln!(s, "VECTORS {name} double");
        for i in 0..n {
            let _ = writeln!(s, "{:.9e} {:.9e} 0", ux[i], uy[i]);
        }
    } else {
        let (name, values) = fields[0];
        debug_assert_eq!(values.len(), n);
        let _ = writeln!(s, "SCALARS {name} double 1");
        s.push_str("LOOKUP_TABLE default\n");
        for v in values {
            let _ = writeln!(s, "{v:.9e}");
        }
    }
    Ok(s)
}
