//! Python bindings for the igawave solvers: 1D spline spaces and Gram
//! matrices, the split scalar wave stepper, the elastic predictor-corrector
//! stepper, and the modal stability sweep.

use igawave::assembly::{
    assemble_mass, assemble_mixed, assemble_stiffness, l2_project, mass_operator,
};
use igawave::elasticity::{
    advance, bootstrap_first_step, build_elastic_operator, elastic_energies, star_norm,
    virtual_previous_state, ElasticField, ElasticState, MaterialParams,
};
use igawave::harness::eval_field;
use igawave::linalg::{BandedMatrix, CoefficientTensor};
use igawave::pwave::{build_split_operator, energies, step, SplitOperator, WaveState};
use igawave::splines::BSplineSpace1D;
use igawave::stability::{generalized_eig, spectral_radius_sweep, AmplificationVariant};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn to_py_err(e: igawave::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn banded_to_rows(m: &BandedMatrix) -> Vec<Vec<f64>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect())
        .collect()
}

/// One-dimensional B-spline space on [0, 1] with an open uniform knot vector.
#[pyclass]
struct Space1D {
    inner: BSplineSpace1D,
}

#[pymethods]
impl Space1D {
    #[new]
    fn new(degree: usize, n_elements: usize) -> PyResult<Self> {
        Ok(Self {
            inner: BSplineSpace1D::uniform(degree, n_elements).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.inner.n_elements()
    }

    #[getter]
    fn n_basis(&self) -> usize {
        self.inner.n_basis()
    }

    fn knots(&self) -> Vec<f64> {
        self.inner.knots().to_vec()
    }

    /// Nonzero basis values (order 0) or first derivatives (order 1) at x;
    /// returns (first_active_index, values).
    #[pyo3(signature = (x, order = 0))]
    fn eval_basis(&self, x: f64, order: usize) -> PyResult<(usize, Vec<f64>)> {
        self.inner.eval_basis(x, order).map_err(to_py_err)
    }

    fn greville(&self, index: usize) -> f64 {
        self.inner.greville(index)
    }
}

/// Dense rows of the 1D mass matrix of a space.
#[pyfunction]
fn mass_matrix(space: &Space1D) -> Vec<Vec<f64>> {
    banded_to_rows(&assemble_mass(&space.inner))
}

/// Dense rows of the 1D stiffness matrix.
#[pyfunction]
fn stiffness_matrix(space: &Space1D) -> PyResult<Vec<Vec<f64>>> {
    Ok(banded_to_rows(
        &assemble_stiffness(&space.inner).map_err(to_py_err)?,
    ))
}

/// Dense rows of the 1D mixed (derivative-value) matrix.
#[pyfunction]
fn mixed_matrix(space: &Space1D) -> PyResult<Vec<Vec<f64>>> {
    Ok(banded_to_rows(
        &assemble_mixed(&space.inner).map_err(to_py_err)?,
    ))
}

fn gaussian(center: Vec<f64>, width: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        let r2: f64 = x
            .iter()
            .zip(&center)
            .map(|(xi, ci)| (xi - ci) * (xi - ci))
            .sum();
        (-r2 / (2.0 * width * width)).exp()
    }
}

/// Scalar wave simulation with the direction-split implicit stepper.
#[pyclass]
struct PWaveSim {
    spaces: Vec<BSplineSpace1D>,
    op: SplitOperator,
    state: WaveState,
}

#[pymethods]
impl PWaveSim {
    /// Gaussian initial displacement, zero initial velocity.
    #[new]
    #[pyo3(signature = (elements, degree, tau, center = None, width = 0.2))]
    fn new(
        elements: Vec<usize>,
        degree: usize,
        tau: f64,
        center: Option<Vec<f64>>,
        width: f64,
    ) -> PyResult<Self> {
        let spaces: Vec<BSplineSpace1D> = elements
            .iter()
            .map(|&n| BSplineSpace1D::uniform(degree, n))
            .collect::<igawave::Result<_>>()
            .map_err(to_py_err)?;
        let op = build_split_operator(&spaces, tau).map_err(to_py_err)?;
        let mass = mass_operator(&spaces).map_err(to_py_err)?;
        let center = center.unwrap_or_else(|| vec![0.5; spaces.len()]);
        if center.len() != spaces.len() || width <= 0.0 {
            return Err(PyValueError::new_err("bad gaussian parameters"));
        }
        let f = gaussian(center, width);
        let u0 = l2_project(&f, &spaces, &mass).map_err(to_py_err)?;
        let udot0 = CoefficientTensor::zeros(u0.dims());
        let uddot0 = op.initial_acceleration(&u0, None).map_err(to_py_err)?;
        let state = WaveState::new(u0, udot0, uddot0);
        Ok(Self { spaces, op, state })
    }

    /// Advance by n time steps.
    #[pyo3(signature = (n = 1))]
    fn step(&mut self, n: usize) -> PyResult<()> {
        for _ in 0..n {
            step(&mut self.state, &self.op, None).map_err(to_py_err)?;
        }
        Ok(())
    }

    #[getter]
    fn time(&self) -> f64 {
        self.state.time
    }

    #[getter]
    fn step_index(&self) -> usize {
        self.state.step_index
    }

    /// (kinetic, potential, total) of the current state.
    fn energies(&self) -> PyResult<(f64, f64, f64)> {
        let e = energies(&self.state, &self.op, 1.0).map_err(to_py_err)?;
        Ok((e.kinetic, e.potential, e.total))
    }

    /// Displacement field value at a point of the unit square/cube.
    fn field_at(&self, point: Vec<f64>) -> PyResult<f64> {
        eval_field(&self.state.u, &self.spaces, &point).map_err(to_py_err)
    }
}

/// 2D linear elasticity simulation (alternating-triangular
/// predictor-corrector with split factors).
#[pyclass]
struct ElasticSim {
    op: igawave::elasticity::ElasticOperator,
    state: ElasticState,
    initial_total: f64,
}

#[pymethods]
impl ElasticSim {
    /// Gaussian x-displacement pulse, zero initial velocity.
    #[new]
    #[pyo3(signature = (elements, degree, tau, rho = 1.0, mu = 1.0, lam = 1.0, width = 0.2))]
    fn new(
        elements: Vec<usize>,
        degree: usize,
        tau: f64,
        rho: f64,
        mu: f64,
        lam: f64,
        width: f64,
    ) -> PyResult<Self> {
        if elements.len() != 2 {
            return Err(PyValueError::new_err("elasticity is two-dimensional"));
        }
        let spaces: Vec<BSplineSpace1D> = elements
            .iter()
            .map(|&n| BSplineSpace1D::uniform(degree, n))
            .collect::<igawave::Result<_>>()
            .map_err(to_py_err)?;
        let material = MaterialParams::new(rho, mu, lam).map_err(to_py_err)?;
        let op = build_elastic_operator(&spaces, material, tau).map_err(to_py_err)?;
        let mass = mass_operator(&spaces).map_err(to_py_err)?;
        let f = gaussian(vec![0.5, 0.5], width);
        let ux = l2_project(&f, &spaces, &mass).map_err(to_py_err)?;
        let u0 = ElasticField::new(ux.clone(), CoefficientTensor::zeros(ux.dims()));
        let v0 = ElasticField::zeros(u0.dims());
        let staggered0 = virtual_previous_state(&u0, &v0, &op, None).map_err(to_py_err)?;
        let initial_total = elastic_energies(&staggered0, &op).map_err(to_py_err)?.total;
        let state = bootstrap_first_step(&u0, &v0, &op, None).map_err(to_py_err)?;
        Ok(Self {
            op,
            state,
            initial_total,
        })
    }

    /// Advance by n predictor-corrector steps.
    #[pyo3(signature = (n = 1))]
    fn step(&mut self, n: usize) -> PyResult<()> {
        for _ in 0..n {
            advance(&mut self.state, &self.op, None).map_err(to_py_err)?;
        }
        Ok(())
    }

    #[getter]
    fn time(&self) -> f64 {
        self.state.time
    }

    fn energies(&self) -> PyResult<(f64, f64, f64)> {
        let e = elastic_energies(&self.state, &self.op).map_err(to_py_err)?;
        Ok((e.kinetic, e.potential, e.total))
    }

    /// Relative total-energy drift against the initial staggered energy.
    fn energy_drift(&self) -> PyResult<f64> {
        let e = elastic_energies(&self.state, &self.op).map_err(to_py_err)?;
        Ok((e.total - self.initial_total).abs() / self.initial_total)
    }

    fn star_norm(&self) -> PyResult<f64> {
        star_norm(&self.state, &self.op).map_err(to_py_err)
    }
}

/// Max modal spectral radius of the split scheme for each time step in
/// `taus`, on a `elements[0] x elements[1]` mesh of the given degree.
#[pyfunction]
fn stability_sweep(
    elements: Vec<usize>,
    degree: usize,
    taus: Vec<f64>,
) -> PyResult<Vec<(f64, f64)>> {
    if elements.len() != 2 {
        return Err(PyValueError::new_err("the stability sweep is 2D"));
    }
    let sx = BSplineSpace1D::uniform(degree, elements[0]).map_err(to_py_err)?;
    let sy = BSplineSpace1D::uniform(degree, elements[1]).map_err(to_py_err)?;
    let px = generalized_eig(
        &assemble_stiffness(&sx).map_err(to_py_err)?,
        &assemble_mass(&sx),
    )
    .map_err(to_py_err)?;
    let py = generalized_eig(
        &assemble_stiffness(&sy).map_err(to_py_err)?,
        &assemble_mass(&sy),
    )
    .map_err(to_py_err)?;
    spectral_radius_sweep(&px, &py, &taus, AmplificationVariant::Scheme).map_err(to_py_err)
}

#[pymodule]
fn igawave_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Space1D>()?;
    m.add_class::<PWaveSim>()?;
    m.add_class::<ElasticSim>()?;
    m.add_function(wrap_pyfunction!(mass_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(stiffness_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(stability_sweep, m)?)?;
    Ok(())
}
