//! Python bindings. Symbols and operators cross the boundary as complex
//! numpy arrays; grids are small value classes.

use numpy::{Complex64, IntoPyArray, PyArray1, PyArray2, PyReadonlyArray1, PyReadonlyArray2};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use semiclassical::classical::solve_vlasov;
use semiclassical::coherent::{self, CoherentIndex};
use semiclassical::harness::{self, ExperimentConfig, Suite};
use semiclassical::moyal;
use semiclassical::potential::{PotentialSpec, PotentialTerm};
use semiclassical::quantum::propagate_tdhf;
use semiclassical::weyl;
use semiclassical::{OperatorMatrix, SymbolField};

fn err(e: semiclassical::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "SpaceGrid", frozen)]
#[derive(Clone, Copy)]
struct PySpaceGrid(semiclassical::SpaceGrid);

#[pymethods]
impl PySpaceGrid {
    #[new]
    fn new(half_width: f64, points: usize) -> PyResult<Self> {
        semiclassical::SpaceGrid::new(half_width, points).map(Self).map_err(err)
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.0.half_width()
    }

    #[getter]
    fn points(&self) -> usize {
        self.0.count()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn nodes<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.0.nodes().into_pyarray(py)
    }

    /// Momentum axis conjugate to this grid at `h`.
    fn dual(&self, h: f64) -> PyResult<Self> {
        self.0.dual(h).map(Self).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("SpaceGrid(half_width={}, points={})", self.0.half_width(), self.0.count())
    }
}

#[pyclass(name = "PhaseGrid", frozen)]
#[derive(Clone, Copy)]
struct PyPhaseGrid(semiclassical::PhaseGrid);

#[pymethods]
impl PyPhaseGrid {
    #[new]
    fn new(x: PySpaceGrid, xi: PySpaceGrid) -> Self {
        Self(semiclassical::PhaseGrid::new(x.0, xi.0))
    }

    /// Grid whose momentum axis is the `h`-dual of `x`.
    #[staticmethod]
    fn dual(x: PySpaceGrid, h: f64) -> PyResult<Self> {
        semiclassical::PhaseGrid::dual(x.0, h).map(Self).map_err(err)
    }

    #[getter]
    fn x(&self) -> PySpaceGrid {
        PySpaceGrid(self.0.x)
    }

    #[getter]
    fn xi(&self) -> PySpaceGrid {
        PySpaceGrid(self.0.xi)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    #[getter]
    fn cell_area(&self) -> f64 {
        self.0.cell_area()
    }

    fn __repr__(&self) -> String {
        format!("PhaseGrid({:?})", self.0.shape())
    }
}

#[pyclass(name = "Potential", frozen)]
#[derive(Clone)]
struct PyPotential(PotentialSpec);

#[pymethods]
impl PyPotential {
    /// `external` and `interaction` are lists of `(amplitude, center, width)`
    /// Gaussian terms `a exp(-(x - c)^2 / w)`.
    #[new]
    #[pyo3(signature = (external = vec![], interaction = vec![]))]
    fn new(external: Vec<(f64, f64, f64)>, interaction: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let terms = |v: Vec<(f64, f64, f64)>| {
            v.into_iter()
                .map(|(amplitude, center, width)| PotentialTerm::Gaussian { amplitude, center, width })
                .collect()
        };
        PotentialSpec::new(terms(external), terms(interaction)).map(Self).map_err(err)
    }

    #[staticmethod]
    fn free() -> Self {
        Self(PotentialSpec::free())
    }

    #[staticmethod]
    fn gaussian_bumps(v_amplitude: f64, w_amplitude: f64, width: f64) -> PyResult<Self> {
        PotentialSpec::gaussian_bumps(v_amplitude, w_amplitude, width).map(Self).map_err(err)
    }

    /// `d^order V / dx^order` at `x`.
    #[pyo3(signature = (x, order = 0))]
    fn external(&self, x: f64, order: u32) -> f64 {
        self.0.external(x, order)
    }

    #[pyo3(signature = (x, order = 0))]
    fn interaction(&self, x: f64, order: u32) -> f64 {
        self.0.interaction(x, order)
    }
}

#[pyclass(name = "Operator", frozen)]
#[derive(Clone)]
struct PyOperator(OperatorMatrix);

#[pymethods]
impl PyOperator {
    /// Kernel matrix `K(x_j, x_l) dx` on `grid`.
    #[new]
    fn new(h: f64, grid: PySpaceGrid, data: PyReadonlyArray2<'_, Complex64>) -> PyResult<Self> {
        OperatorMatrix::new(h, grid.0, data.as_array().to_owned()).map(Self).map_err(err)
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    #[getter]
    fn grid(&self) -> PySpaceGrid {
        PySpaceGrid(*self.0.grid())
    }

    fn matrix<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<Complex64>> {
        self.0.data().clone().into_pyarray(py)
    }

    fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    fn trace_norm(&self) -> PyResult<f64> {
        self.0.trace_norm().map_err(err)
    }

    fn operator_norm(&self) -> PyResult<f64> {
        self.0.operator_norm().map_err(err)
    }

    fn eigenvalues<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyArray1<f64>>> {
        Ok(self.0.eigenvalues_hermitian().map_err(err)?.into_pyarray(py))
    }

    fn hermiticity_defect(&self) -> f64 {
        self.0.hermiticity_defect()
    }

    fn __matmul__(&self, other: &PyOperator) -> PyResult<Self> {
        self.0.matmul(&other.0).map(Self).map_err(err)
    }

    fn commutator(&self, other: &PyOperator) -> PyResult<Self> {
        self.0.commutator(&other.0).map(Self).map_err(err)
    }
}

fn to_field(grid: &PyPhaseGrid, values: PyReadonlyArray2<'_, Complex64>) -> PyResult<SymbolField> {
    SymbolField::new(grid.0, values.as_array().to_owned()).map_err(err)
}

fn from_field<'py>(py: Python<'py>, f: SymbolField) -> Bound<'py, PyArray2<Complex64>> {
    f.into_values().into_pyarray(py)
}

/// Weyl quantization of samples on `grid`, which must be `h`-dual.
#[pyfunction]
fn quantize_weyl(grid: PyPhaseGrid, values: PyReadonlyArray2<'_, Complex64>, h: f64) -> PyResult<PyOperator> {
    weyl::quantize_weyl(&to_field(&grid, values)?, h).map(PyOperator).map_err(err)
}

/// Weyl symbol on the dual phase grid; returns `(grid, values)`.
#[pyfunction]
fn symbol_weyl<'py>(py: Python<'py>, a: &PyOperator) -> PyResult<(PyPhaseGrid, Bound<'py, PyArray2<Complex64>>)> {
    let s = weyl::symbol_weyl(&a.0).map_err(err)?;
    Ok((PyPhaseGrid(*s.grid()), from_field(py, s)))
}

#[pyfunction]
fn quantize_antiwick(grid: PyPhaseGrid, values: PyReadonlyArray2<'_, Complex64>, h: f64) -> PyResult<PyOperator> {
    coherent::quantize_antiwick(&to_field(&grid, values)?, h).map(PyOperator).map_err(err)
}

/// `exp((h/4) Laplacian) G`.
#[pyfunction]
fn heat_smooth<'py>(
    py: Python<'py>,
    grid: PyPhaseGrid,
    values: PyReadonlyArray2<'_, Complex64>,
    h: f64,
) -> PyResult<Bound<'py, PyArray2<Complex64>>> {
    let f = coherent::heat_smooth(&to_field(&grid, values)?, h).map_err(err)?;
    Ok(from_field(py, f))
}

#[pyfunction]
fn coherent_vector<'py>(
    py: Python<'py>,
    x: f64,
    xi: f64,
    h: f64,
    grid: PySpaceGrid,
) -> PyResult<Bound<'py, PyArray1<Complex64>>> {
    let c = CoherentIndex::new(x, xi, h).map_err(err)?;
    Ok(coherent::coherent_vector(&c, &grid.0).map_err(err)?.into_pyarray(py))
}

#[pyfunction]
fn coherent_projector(x: f64, xi: f64, h: f64, grid: PySpaceGrid) -> PyResult<PyOperator> {
    let c = CoherentIndex::new(x, xi, h).map_err(err)?;
    coherent::coherent_projector(&c, &grid.0).map(PyOperator).map_err(err)
}

/// Exact bracket `sigma(Op F Op G - Op G Op F)`.
#[pyfunction]
fn moyal_bracket<'py>(
    py: Python<'py>,
    grid: PyPhaseGrid,
    f: PyReadonlyArray2<'_, Complex64>,
    g: PyReadonlyArray2<'_, Complex64>,
    h: f64,
) -> PyResult<Bound<'py, PyArray2<Complex64>>> {
    let m = moyal::moyal_exact(&to_field(&grid, f)?, &to_field(&grid, g)?, h).map_err(err)?;
    Ok(from_field(py, m))
}

/// Expansion coefficient `C_k(F, G)`.
#[pyfunction]
fn moyal_term<'py>(
    py: Python<'py>,
    grid: PyPhaseGrid,
    f: PyReadonlyArray2<'_, Complex64>,
    g: PyReadonlyArray2<'_, Complex64>,
    k: u32,
) -> PyResult<Bound<'py, PyArray2<Complex64>>> {
    let c = moyal::ck_term(&to_field(&grid, f)?, &to_field(&grid, g)?, k).map_err(err)?;
    Ok(from_field(py, c))
}

type Snapshots<'py> = (Vec<f64>, Vec<Bound<'py, PyArray2<Complex64>>>);

/// TDHF run from `rho0`; returns snapshot times and Weyl symbols.
#[pyfunction]
#[pyo3(signature = (rho0, potential, t_end, dt, snapshot_every))]
fn propagate<'py>(
    py: Python<'py>,
    rho0: &PyOperator,
    potential: &PyPotential,
    t_end: f64,
    dt: f64,
    snapshot_every: f64,
) -> PyResult<Snapshots<'py>> {
    let (rho, pot) = (rho0.0.clone(), potential.0.clone());
    let tr = py
        .detach(move || propagate_tdhf(&rho, &pot, rho.h(), t_end, dt, snapshot_every))
        .map_err(err)?;
    let symbols = tr.symbols.into_iter().map(|s| from_field(py, s)).collect();
    Ok((tr.times, symbols))
}

/// Vlasov run from phase-space density samples; returns times and densities.
#[pyfunction]
fn vlasov<'py>(
    py: Python<'py>,
    grid: PyPhaseGrid,
    v0: PyReadonlyArray2<'_, Complex64>,
    potential: &PyPotential,
    t_end: f64,
    dt: f64,
    snapshot_every: f64,
) -> PyResult<Snapshots<'py>> {
    let v = to_field(&grid, v0)?;
    let pot = potential.0.clone();
    let tr = py
        .detach(move || solve_vlasov(&v, &pot, t_end, dt, snapshot_every))
        .map_err(err)?;
    let fields = tr.snapshots.into_iter().map(|s| from_field(py, s)).collect();
    Ok((tr.times, fields))
}

/// Runs a named suite; returns `(criterion, passed, summary)` per outcome.
#[pyfunction]
#[pyo3(signature = (name, config = None))]
fn run_suite(py: Python<'_>, name: &str, config: Option<&str>) -> PyResult<Vec<(Option<u8>, bool, String)>> {
    let suite = Suite::parse(name).map_err(err)?;
    let cfg = match config {
        Some(text) => ExperimentConfig::from_toml(text).map_err(err)?,
        None => ExperimentConfig::default(),
    };
    let outcomes = py.detach(move || suite.run(&cfg));
    Ok(outcomes.iter().map(|o| (o.criterion, o.passed(), o.summary())).collect())
}

#[pyfunction]
fn config_template() -> String {
    harness::config_template()
}

/// Overlap `<Psi_X, Psi_Y>` computed on `grid`.
#[pyfunction]
fn coherent_overlap(x: (f64, f64), y: (f64, f64), h: f64, grid: PySpaceGrid) -> PyResult<Complex64> {
    let a = coherent::coherent_vector(&CoherentIndex::new(x.0, x.1, h).map_err(err)?, &grid.0).map_err(err)?;
    let b = coherent::coherent_vector(&CoherentIndex::new(y.0, y.1, h).map_err(err)?, &grid.0).map_err(err)?;
    Ok(semiclassical::operator::inner(&a, &b, &grid.0))
}

/// Applies an operator to a grid vector.
#[pyfunction]
fn apply<'py>(py: Python<'py>, a: &PyOperator, f: PyReadonlyArray1<'_, Complex64>) -> PyResult<Bound<'py, PyArray1<Complex64>>> {
    let v = a.0.apply(f.as_slice()?).map_err(err)?;
    Ok(v.into_pyarray(py))
}

#[pymodule]
fn semiclassical_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpaceGrid>()?;
    m.add_class::<PyPhaseGrid>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyOperator>()?;
    m.add_function(wrap_pyfunction!(quantize_weyl, m)?)?;
    m.add_function(wrap_pyfunction!(symbol_weyl, m)?)?;
    m.add_function(wrap_pyfunction!(quantize_antiwick, m)?)?;
    m.add_function(wrap_pyfunction!(heat_smooth, m)?)?;
    m.add_function(wrap_pyfunction!(coherent_vector, m)?)?;
    m.add_function(wrap_pyfunction!(coherent_projector, m)?)?;
    m.add_function(wrap_pyfunction!(coherent_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(moyal_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(moyal_term, m)?)?;
    m.add_function(wrap_pyfunction!(apply, m)?)?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(vlasov, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(config_template, m)?)?;
    Ok(())
}
