//! Experiment drivers: configured runs, convergence and stability studies,
//! scaling benchmarks, and their CSV/VTK outputs.

mod config;
mod field;
mod output;

pub use config::{
    parse_f64_list, parse_usize_list, InitialCondition, ProblemKind, SimulationConfig,
};
pub use field::{eval_field, field_l2_error, sample_on_grid};
pub use output::{
    write_energy_csv, write_pairs_csv, write_scaling_csv, write_starnorm_csv, write_vtk_scalar,
    write_vtk_vector2, EnergyRecord,
};

use crate::assembly::{assemble_mass, assemble_stiffness, l2_project, mass_operator};
use crate::elasticity::{
    advance, bootstrap_first_step, build_elastic_operator, elastic_energies, star_norm,
    virtual_previous_state, ElasticField, MaterialParams,
};
use crate::linalg::CoefficientTensor;
use crate::pwave::{build_split_operator, energies, step, SplitOperator, WaveState};
use crate::splines::BSplineSpace1D;
use crate::stability::{generalized_eig, spectral_radius_sweep, AmplificationVariant};
use crate::{Error, Result};
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

/// Result of a time-stepping run: the energy series plus the produced files.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<EnergyRecord>,
    /// `(step, time, starnorm)` rows; empty for scalar runs.
    pub star_records: Vec<(usize, f64, f64)>,
    pub out_dir: PathBuf,
}

/// Result of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub taus: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

fn make_spaces(config: &SimulationConfig) -> Result<Vec<BSplineSpace1D>> {
    config
        .elements
        .iter()
        .map(|&n_el| BSplineSpace1D::uniform(config.degree, n_el))
        .collect()
}

fn ensure_out_dir(config: &SimulationConfig) -> Result<()> {
    fs::create_dir_all(&config.out_dir)?;
    fs::write(config.out_dir.join("config.echo"), config.echo())?;
    Ok(())
}

fn gaussian_fn(center: Vec<f64>, width: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        let r2: f64 = x
            .iter()
            .zip(&center)
            .map(|(xi, ci)| (xi - ci) * (xi - ci))
            .sum();
        (-r2 / (2.0 * width * width)).exp()
    }
}

fn cosine_mode_fn(k: Vec<usize>) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        x.iter()
            .zip(&k)
            .map(|(xi, &ki)| (ki as f64 * std::f64::consts::PI * xi).cos())
            .product()
    }
}

/// Initial displacement coefficients for the scalar problem.
fn scalar_initial_condition(
    config: &SimulationConfig,
    spaces: &[BSplineSpace1D],
) -> Result<CoefficientTensor> {
    let dims: Vec<usize> = spaces.iter().map(|s| s.n_basis()).collect();
    match &config.ic {
        InitialCondition::Zero => Ok(CoefficientTensor::zeros(&dims)),
        InitialCondition::Gaussian { center, width } => {
            let mass = mass_operator(spaces)?;
            let f = gaussian_fn(center.clone(), *width);
            l2_project(&f, spaces, &mass)
        }
        InitialCondition::Mode { k } => {
            let mass = mass_operator(spaces)?;
            let f = cosine_mode_fn(k.clone());
            l2_project(&f, spaces, &mass)
        }
    }
}

/// The divergence-free shear mode `(−cos(kπx) sin(kπy), sin(kπx) cos(kπy))`;
/// it satisfies `ρü = ∇·σ` with traction-free boundaries and angular
/// frequency `ω = kπ√(2μ/ρ)`.
fn shear_mode_components(k: usize) -> (impl Fn(&[f64]) -> f64, impl Fn(&[f64]) -> f64) {
    let kp = k as f64 * std::f64::consts::PI;
    (
        move |x: &[f64]| -(kp * x[0]).cos() * (kp * x[1]).sin(),
        move |x: &[f64]| (kp * x[0]).sin() * (kp * x[1]).cos(),
    )
}

fn elastic_initial_condition(
    config: &SimulationConfig,
    spaces: &[BSplineSpace1D],
) -> Result<ElasticField> {
    let dims: Vec<usize> = spaces.iter().map(|s| s.n_basis()).collect();
    match &config.ic {
        InitialCondition::Zero => Ok(ElasticField::zeros(&dims)),
        InitialCondition::Gaussian { center, width } => {
            let mass = mass_operator(spaces)?;
            let f = gaussian_fn(center.clone(), *width);
            Ok(ElasticField::new(
                l2_project(&f, spaces, &mass)?,
                CoefficientTensor::zeros(&dims),
            ))
        }
        InitialCondition::Mode { k } => {
            let mass = mass_operator(spaces)?;
            let (fx, fy) = shear_mode_components(k[0]);
            Ok(ElasticField::new(
                l2_project(&fx, spaces, &mass)?,
                l2_project(&fy, spaces, &mass)?,
            ))
        }
    }
}

fn snapshot_grid(config: &SimulationConfig) -> Vec<usize> {
    config.elements.iter().map(|&n_el| 4 * n_el).collect()
}

/// Run the scalar wave experiment: energy CSV every step, snapshots at the
/// configured cadence.
pub fn run_pwave(config: &SimulationConfig) -> Result<RunOutput> {
    if config.kind == ProblemKind::Elasticity2d {
        return Err(Error::InvalidInput(
            "run_pwave expects a pwave2d or pwave3d configuration".into(),
        ));
    }
    config.validate()?;
    config.check_scale_gate()?;
    ensure_out_dir(config)?;
    let spaces = make_spaces(config)?;
    let op = build_split_operator(&spaces, config.tau)?;

    let u0 = scalar_initial_condition(config, &spaces)?;
    let udot0 = CoefficientTensor::zeros(u0.dims());
    let uddot0 = op.initial_acceleration(&u0, None)?;
    let mut state = WaveState::new(u0, udot0, uddot0);

    let mut records = Vec::with_capacity(config.steps + 1);
    let record =
        |state: &WaveState, op: &SplitOperator, records: &mut Vec<EnergyRecord>| -> Result<()> {
            let e = energies(state, op, 1.0)?;
            records.push(EnergyRecord {
                step: state.step_index,
                time: state.time,
                kinetic: e.kinetic,
                potential: e.potential,
                total: e.total,
            });
            Ok(())
        };
    record(&state, &op, &mut records)?;
    maybe_snapshot_scalar(config, &spaces, &state.u, 0)?;
    for _ in 0..config.steps {
        step(&mut state, &op, None)?;
        record(&state, &op, &mut records)?;
        if config.snapshot_every > 0 && state.step_index.is_multiple_of(config.snapshot_every) {
            maybe_snapshot_scalar(config, &spaces, &state.u, state.step_index)?;
        }
    }
    write_energy_csv(&config.out_dir.join("energy.csv"), &records)?;
    Ok(RunOutput {
        records,
        star_records: Vec::new(),
        out_dir: config.out_dir.clone(),
    })
}

fn maybe_snapshot_scalar(
    config: &SimulationConfig,
    spaces: &[BSplineSpace1D],
    u: &CoefficientTensor,
    step: usize,
) -> Result<()> {
    if config.snapshot_every == 0 {
        return Ok(());
    }
    let grid = snapshot_grid(config);
    let (dims, values) = sample_on_grid(u, spaces, &grid)?;
    write_vtk_scalar(
        &config.out_dir.join(format!("snapshot_{step}.vtk")),
        &dims,
        &values,
    )
}

/// Run the 2D elasticity experiment: bootstrap then predictor-corrector
/// stepping, with energy and star-norm series.
pub fn run_elasticity(config: &SimulationConfig) -> Result<RunOutput> {
    if config.kind != ProblemKind::Elasticity2d {
        return Err(Error::InvalidInput(
            "run_elasticity expects an elasticity2d configuration".into(),
        ));
    }
    config.validate()?;
    config.check_scale_gate()?;
    ensure_out_dir(config)?;
    let spaces = make_spaces(config)?;
    let material = MaterialParams::new(config.rho, config.mu, config.lambda)?;
    let mut op = build_elastic_operator(&spaces, material, config.tau)?;
    op.set_sigma(config.sigma);

    let u0 = elastic_initial_condition(config, &spaces)?;
    let v0 = ElasticField::zeros(u0.dims());

    // row 0 uses the same staggered functional as every later row, via the
    // time-reversed Taylor state
    let mut records = Vec::with_capacity(config.steps + 1);
    let virtual0 = virtual_previous_state(&u0, &v0, &op, None)?;
    let e0 = elastic_energies(&virtual0, &op)?;
    records.push(EnergyRecord {
        step: 0,
        time: 0.0,
        kinetic: e0.kinetic,
        potential: e0.potential,
        total: e0.total,
    });
    maybe_snapshot_elastic(config, &spaces, &u0, 0)?;

    let mut star_records = Vec::with_capacity(config.steps);
    let mut state = bootstrap_first_step(&u0, &v0, &op, None)?;
    let record = |state: &crate::elasticity::ElasticState,
                  records: &mut Vec<EnergyRecord>,
                  star_records: &mut Vec<(usize, f64, f64)>|
     -> Result<()> {
        let e = elastic_energies(state, &op)?;
        records.push(EnergyRecord {
            step: state.step_index,
            time: state.time,
            kinetic: e.kinetic,
            potential: e.potential,
            total: e.total,
        });
        star_records.push((state.step_index, state.time, star_norm(state, &op)?));
        Ok(())
    };
    record(&state, &mut records, &mut star_records)?;
    for _ in 1..config.steps {
        advance(&mut state, &op, None)?;
        record(&state, &mut records, &mut star_records)?;
        if config.snapshot_every > 0 && state.step_index % config.snapshot_every == 0 {
            maybe_snapshot_elastic(config, &spaces, &state.u, state.step_index)?;
        }
    }
    write_energy_csv(&config.out_dir.join("energy.csv"), &records)?;
    write_starnorm_csv(&config.out_dir.join("starnorm.csv"), &star_records)?;
    Ok(RunOutput {
        records,
        star_records,
        out_dir: config.out_dir.clone(),
    })
}

fn maybe_snapshot_elastic(
    config: &SimulationConfig,
    spaces: &[BSplineSpace1D],
    u: &ElasticField,
    step: usize,
) -> Result<()> {
    if config.snapshot_every == 0 {
        return Ok(());
    }
    let grid = snapshot_grid(config);
    let (dims, ux) = sample_on_grid(&u.x, spaces, &grid)?;
    let (_, uy) = sample_on_grid(&u.y, spaces, &grid)?;
    write_vtk_vector2(
        &config.out_dir.join(format!("snapshot_{step}.vtk")),
        &dims,
        &ux,
        &uy,
    )
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Manufactured-solution convergence study: run the configured scheme at
/// `tau, tau/2, …, tau/2^(levels-1)` on the fixed mesh and fit the slope of
/// the terminal L2 error.
pub fn run_convergence(config: &SimulationConfig, levels: usize) -> Result<ConvergenceReport> {
    config.validate()?;
    if levels < 3 {
        return Err(Error::InvalidInput(format!(
            "a slope needs at least 3 refinement levels, got {levels}"
        )));
    }
    let k = match &config.ic {
        InitialCondition::Mode { k } => k.clone(),
        _ => {
            return Err(Error::InvalidInput(
                "convergence studies need the manufactured mode initial condition".into(),
            ))
        }
    };
    ensure_out_dir(config)?;
    let spaces = make_spaces(config)?;
    let horizon = config.tau * config.steps as f64;

    let mut taus = Vec::with_capacity(levels);
    let mut errors = Vec::with_capacity(levels);
    for level in 0..levels {
        let tau = config.tau / (1 << level) as f64;
        let n_steps = config.steps << level;
        let error = match config.kind {
            ProblemKind::Pwave2d | ProblemKind::Pwave3d => {
                let omega = std::f64::consts::PI
                    * (k.iter().map(|&ki| (ki * ki) as f64).sum::<f64>()).sqrt();
                let op = build_split_operator(&spaces, tau)?;
                let u0 = scalar_initial_condition(config, &spaces)?;
                let udot0 = CoefficientTensor::zeros(u0.dims());
                let uddot0 = op.initial_acceleration(&u0, None)?;
                let mut state = WaveState::new(u0, udot0, uddot0);
                for _ in 0..n_steps {
                    step(&mut state, &op, None)?;
                }
                let phase = (omega * horizon).cos();
                let mode = cosine_mode_fn(k.clone());
                let exact = move |x: &[f64]| phase * mode(x);
                field_l2_error(&state.u, &spaces, &exact)?
            }
            ProblemKind::Elasticity2d => {
                let material = MaterialParams::new(config.rho, config.mu, config.lambda)?;
                let omega =
                    k[0] as f64 * std::f64::consts::PI * (2.0 * material.mu / material.rho).sqrt();
                let op = build_elastic_operator(&spaces, material, tau)?;
                let u0 = elastic_initial_condition(config, &spaces)?;
                let v0 = ElasticField::zeros(u0.dims());
                let mut state = bootstrap_first_step(&u0, &v0, &op, None)?;
                for _ in 1..n_steps {
                    advance(&mut state, &op, None)?;
                }
                let phase = (omega * horizon).cos();
                let (fx, fy) = shear_mode_components(k[0]);
                let ex = field_l2_error(&state.u.x, &spaces, &move |x: &[f64]| phase * fx(x))?;
                let ey = field_l2_error(&state.u.y, &spaces, &move |x: &[f64]| phase * fy(x))?;
                (ex * ex + ey * ey).sqrt()
            }
        };
        taus.push(tau);
        errors.push(error);
    }
    let slope = fit_loglog_slope(&taus, &errors);
    let rows: Vec<(f64, f64)> = taus.iter().copied().zip(errors.iter().copied()).collect();
    write_pairs_csv(
        &config.out_dir.join("convergence.csv"),
        "tau,l2_error",
        &rows,
    )?;
    Ok(ConvergenceReport {
        taus,
        errors,
        slope,
    })
}

/// Spectral-radius sweep of the modal amplification over a time-step list;
/// writes `stability.csv` with columns `tau,max_radius`.
pub fn run_stability_sweep(config: &SimulationConfig, taus: &[f64]) -> Result<Vec<(f64, f64)>> {
    if taus.is_empty() {
        return Err(Error::InvalidInput("empty time-step list".into()));
    }
    config.validate()?;
    ensure_out_dir(config)?;
    let sx = BSplineSpace1D::uniform(config.degree, config.elements[0])?;
    let sy = BSplineSpace1D::uniform(config.degree, config.elements[1])?;
    let px = generalized_eig(&assemble_stiffness(&sx)?, &assemble_mass(&sx))?;
    let py = generalized_eig(&assemble_stiffness(&sy)?, &assemble_mass(&sy))?;
    let rows = spectral_radius_sweep(&px, &py, taus, AmplificationVariant::Scheme)?;
    write_pairs_csv(
        &config.out_dir.join("stability.csv"),
        "tau,max_radius",
        &rows,
    )?;
    Ok(rows)
}

/// Per-step wall-time benchmark of the 3D scalar solver across mesh sizes;
/// writes `scaling.csv` with columns `n_dofs,seconds_per_step`.
pub fn run_scaling_bench(
    config: &SimulationConfig,
    sizes: &[usize],
    timed_steps: usize,
) -> Result<Vec<(usize, f64)>> {
    if sizes.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "scaling needs at least 3 sizes, got {}",
            sizes.len()
        )));
    }
    if sizes.iter().any(|&s| s < 2) {
        return Err(Error::InvalidInput(
            "element counts must be >= 2 per direction".into(),
        ));
    }
    let timed_steps = timed_steps.max(5);
    ensure_out_dir(config)?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &n_el in sizes {
        let spaces: Vec<BSplineSpace1D> = (0..3)
            .map(|_| BSplineSpace1D::uniform(config.degree, n_el))
            .collect::<Result<_>>()?;
        let op = build_split_operator(&spaces, config.tau)?;
        let dims: Vec<usize> = spaces.iter().map(|s| s.n_basis()).collect();
        let n_dofs: usize = dims.iter().product();
        let mass = mass_operator(&spaces)?;
        let f = gaussian_fn(vec![0.5; 3], 0.2);
        let u0 = l2_project(&f, &spaces, &mass)?;
        let uddot0 = op.initial_acceleration(&u0, None)?;
        let mut state = WaveState::new(u0, CoefficientTensor::zeros(&dims), uddot0);
        for _ in 0..2 {
            step(&mut state, &op, None)?; // warmup
        }
        let mut samples = Vec::with_capacity(timed_steps);
        for _ in 0..timed_steps {
            let t0 = Instant::now();
            step(&mut state, &op, None)?;
            samples.push(t0.elapsed().as_secs_f64());
        }
        samples.sort_by(f64::total_cmp);
        let median = samples[samples.len() / 2];
        rows.push((n_dofs, median));
    }
    write_scaling_csv(&config.out_dir.join("scaling.csv"), &rows)?;
    Ok(rows)
}

/// Convenience used by tests and the CLI: maximum relative drift of the
/// total-energy column.
pub fn max_relative_drift(records: &[EnergyRecord]) -> f64 {
    let e0 = records[0].total;
    if e0 == 0.0 {
        return records.iter().fold(0.0, |m, r| m.max(r.total.abs()));
    }
    records
        .iter()
        .fold(0.0_f64, |m, r| m.max((r.total - e0).abs() / e0))
}
