//! Python bindings: models, bounds, the dual solver, the randomness check
//! and Monte Carlo simulation, exchanged as nested lists of floats.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use qcr_core::model::operator_from_parts;
use qcr_core::{
    CMatrix, DensityOperator, HermitianOperator, RMatrix, SolveStatus, SolverConfig,
    StatisticalModel, WeightMatrix,
};

type Rows = Vec<Vec<f64>>;

fn err(e: qcr_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &Rows, what: &str) -> PyResult<RMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!(
            "{what}: expected a non-empty rectangular list of rows"
        )));
    }
    Ok(RMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn to_rows(m: &RMatrix) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn complex_rows(m: &CMatrix) -> (Rows, Rows) {
    (to_rows(&m.map(|z| z.re)), to_rows(&m.map(|z| z.im)))
}

fn operator(re: &Rows, im: Option<&Rows>, what: &str) -> PyResult<HermitianOperator> {
    let re = to_matrix(re, what)?;
    let im = match im {
        Some(rows) => to_matrix(rows, what)?,
        None => RMatrix::zeros(re.nrows(), re.ncols()),
    };
    operator_from_parts(&re, &im, 1e-9).map_err(err)
}

fn weight(model: &StatisticalModel, g: Option<Rows>) -> PyResult<WeightMatrix> {
    match g {
        Some(rows) => WeightMatrix::new(to_matrix(&rows, "g")?).map_err(err),
        None => Ok(WeightMatrix::identity(model.n_params())),
    }
}

/// A model point: a full-rank state with tangent directions.
#[pyclass(module = "qcr", frozen)]
pub struct Model {
    inner: StatisticalModel,
}

#[pymethods]
impl Model {
    /// `Model(rho_re, tangent_re, rho_im=None, tangent_im=None)`.
    #[new]
    #[pyo3(signature = (rho_re, tangent_re, rho_im=None, tangent_im=None))]
    fn new(
        rho_re: Rows,
        tangent_re: Vec<Rows>,
        rho_im: Option<Rows>,
        tangent_im: Option<Vec<Rows>>,
    ) -> PyResult<Self> {
        let rho = operator(&rho_re, rho_im.as_ref(), "rho")?;
        let rho = DensityOperator::new(rho).map_err(err)?;
        if let Some(im) = &tangent_im {
            if im.len() != tangent_re.len() {
                return Err(PyValueError::new_err(
                    "tangent_im must match tangent_re in length",
                ));
            }
        }
        let tangent = tangent_re
            .iter()
            .enumerate()
            .map(|(i, re)| {
                operator(
                    re,
                    tangent_im.as_ref().map(|v| &v[i]),
                    &format!("tangent[{i}]"),
                )
            })
            .collect::<PyResult<Vec<_>>>()?;
        let inner = StatisticalModel::new(rho, tangent).map_err(err)?;
        Ok(Self { inner })
    }

    /// Builtin family: `qubit-full`, `qubit-equatorial` (one parameter alpha)
    /// or `qutrit-diagonal` (three probabilities).
    #[staticmethod]
    fn builtin(name: &str, params: Vec<f64>) -> PyResult<Self> {
        let inner = qcr_core::builtin_model(name, &params).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    #[getter]
    fn fisher(&self) -> Rows {
        to_rows(self.inner.fisher())
    }

    #[getter]
    fn fisher_inv(&self) -> Rows {
        to_rows(self.inner.fisher_inv())
    }

    #[getter]
    fn rho_eigenvalues(&self) -> Vec<f64> {
        self.inner.rho().eigenvalues().to_vec()
    }

    fn submodel(&self, indices: Vec<usize>) -> PyResult<Self> {
        let inner = self.inner.submodel(&indices).map_err(err)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(dim={}, n_params={})",
            self.inner.dim(),
            self.inner.n_params()
        )
    }
}

/// Result of the dual solver.
#[pyclass(module = "qcr", frozen, get_all)]
pub struct DualResult {
    optimum: f64,
    upper_bound: f64,
    rounds: usize,
    cuts: usize,
    feasibility: f64,
    converged: bool,
    a: Rows,
    s_re: Rows,
    s_im: Rows,
}

#[pymethods]
impl DualResult {
    fn __repr__(&self) -> String {
        format!(
            "DualResult(optimum={}, rounds={}, converged={})",
            self.optimum, self.rounds, self.converged
        )
    }
}

/// Randomness verdict; `witness` is a zero-based index pair.
#[pyclass(module = "qcr", frozen, get_all)]
pub struct RandomnessResult {
    verdict: bool,
    score: f64,
    witness: Option<(usize, usize)>,
    c_re: Option<Rows>,
    c_im: Option<Rows>,
}

/// Monte Carlo moments of the optimal random measurement.
#[pyclass(module = "qcr", frozen, get_all)]
pub struct SimulationResult {
    samples: usize,
    mean: Vec<f64>,
    mean_std_error: Vec<f64>,
    second_moment: Rows,
    risk: f64,
    risk_std_error: f64,
}

/// `(tr √(J^{-1/2} G J^{-1/2}))²`; `g` defaults to the identity.
#[pyfunction]
#[pyo3(signature = (model, g=None))]
fn random_bound(model: &Model, g: Option<Rows>) -> PyResult<f64> {
    let g = weight(&model.inner, g)?;
    qcr_core::optimal_random_bound(&model.inner, &g).map_err(err)
}

/// Covariance of the optimal random measurement for `g`.
#[pyfunction]
#[pyo3(signature = (model, g=None))]
fn q_r_map(model: &Model, g: Option<Rows>) -> PyResult<Rows> {
    let g = weight(&model.inner, g)?;
    let v = qcr_core::q_r_map(&model.inner, &g).map_err(err)?;
    Ok(to_rows(v.entries()))
}

#[pyfunction]
#[pyo3(signature = (model, tol=1e-8))]
fn is_random_model(model: &Model, tol: f64) -> PyResult<RandomnessResult> {
    let v = qcr_core::is_random_model(&model.inner, tol).map_err(err)?;
    let (c_re, c_im) = match &v.c {
        Some(c) => {
            let (re, im) = complex_rows(c.matrix());
            (Some(re), Some(im))
        }
        None => (None, None),
    };
    Ok(RandomnessResult {
        verdict: v.verdict,
        score: v.score,
        witness: v.witness,
        c_re,
        c_im,
    })
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (model, g=None, obj_tol=1e-6, feas_tol=1e-7, max_rounds=200, multistart=32, seed=0))]
fn solve_dual(
    py: Python<'_>,
    model: &Model,
    g: Option<Rows>,
    obj_tol: f64,
    feas_tol: f64,
    max_rounds: usize,
    multistart: usize,
    seed: u64,
) -> PyResult<DualResult> {
    let g = weight(&model.inner, g)?;
    let config = SolverConfig {
        obj_tol,
        feas_tol,
        max_rounds,
        multistart,
        seed,
        ..SolverConfig::default()
    };
    let inner = model.inner.clone();
    let sol = py
        .detach(move || qcr_core::solve_dual(&inner, &g, &config))
        .map_err(err)?;
    let (s_re, s_im) = complex_rows(sol.dual.s.matrix());
    Ok(DualResult {
        optimum: sol.optimum,
        upper_bound: sol.upper_bound,
        rounds: sol.rounds,
        cuts: sol.cuts.len(),
        feasibility: sol.feasibility,
        converged: sol.status == SolveStatus::Converged,
        a: to_rows(&sol.dual.a),
        s_re,
        s_im,
    })
}

/// Dual optima of a submodel and of the full model under the lifted weight.
#[pyfunction]
#[pyo3(signature = (model, indices, g1=None, seed=0))]
fn submodel_inequality(
    model: &Model,
    indices: Vec<usize>,
    g1: Option<Rows>,
    seed: u64,
) -> PyResult<(f64, f64, bool)> {
    let g1 = match g1 {
        Some(rows) => WeightMatrix::new(to_matrix(&rows, "g1")?).map_err(err)?,
        None => WeightMatrix::identity(indices.len()),
    };
    let config = SolverConfig {
        seed,
        ..SolverConfig::default()
    };
    let cmp =
        qcr_core::dual_submodel_inequality(&model.inner, &indices, &g1, &config).map_err(err)?;
    Ok((cmp.opt1, cmp.opt2, cmp.holds))
}

/// Covariances on the random limit set.
#[pyfunction]
#[pyo3(signature = (model, count, seed=0))]
fn limit_set_sample(model: &Model, count: usize, seed: u64) -> PyResult<Vec<Rows>> {
    let samples = qcr_core::limit_set_sample(&model.inner, count, seed).map_err(err)?;
    Ok(samples.iter().map(|v| to_rows(v.entries())).collect())
}

/// Simulates the optimal random measurement for `g`.
#[pyfunction]
#[pyo3(signature = (model, samples, seed=0, g=None))]
fn simulate(
    model: &Model,
    samples: usize,
    seed: u64,
    g: Option<Rows>,
) -> PyResult<SimulationResult> {
    let g = weight(&model.inner, g)?;
    let p = qcr_core::optimal_random_measurement(&model.inner, &g).map_err(err)?;
    let options = qcr_core::SimulationOptions {
        weight: Some(g),
        ..qcr_core::SimulationOptions::new(samples, seed)
    };
    let r = qcr_core::simulate_with(&model.inner, &p, &options).map_err(err)?;
    let (risk, risk_std_error) = r.risk.unwrap_or((f64::NAN, f64::NAN));
    Ok(SimulationResult {
        samples: r.samples,
        mean: r.empirical_mean.iter().copied().collect(),
        mean_std_error: r.mean_std_error.iter().copied().collect(),
        second_moment: to_rows(&r.empirical_cov),
        risk,
        risk_std_error,
    })
}

#[pymodule]
fn qcr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<DualResult>()?;
    m.add_class::<RandomnessResult>()?;
    m.add_class::<SimulationResult>()?;
    m.add_function(wrap_pyfunction!(random_bound, m)?)?;
    m.add_function(wrap_pyfunction!(q_r_map, m)?)?;
    m.add_function(wrap_pyfunction!(is_random_model, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dual, m)?)?;
    m.add_function(wrap_pyfunction!(submodel_inequality, m)?)?;
    m.add_function(wrap_pyfunction!(limit_set_sample, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
