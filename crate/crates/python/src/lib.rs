use dop_core::estimators::{estimate_p2 as core_estimate_p2, EstimatorKind};
use dop_core::imaging::{estimate_map as core_estimate_map, ImagePair};
use dop_core::montecarlo::{run_campaign as core_run_campaign, variance_statistics as core_variance_statistics};
use dop_core::speckle::{sample_records as core_sample_records, IntensityRecord};
use dop_core::{CampaignSpec, Complex, DopError, NamedMatrix, SamplerConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: DopError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_kind(kind: &str) -> PyResult<EstimatorKind> {
    kind.parse().map_err(to_py)
}

/// 2x2 Hermitian coherency matrix [[a1, a2], [conj(a2), a4]].
#[pyclass(frozen, from_py_object, name = "CoherencyMatrix", module = "speckle_dop")]
#[derive(Clone)]
struct PyCoherencyMatrix {
    inner: dop_core::CoherencyMatrix,
}

#[pymethods]
impl PyCoherencyMatrix {
    #[new]
    #[pyo3(signature = (a1, a2, a4))]
    fn new(a1: f64, a2: Complex, a4: f64) -> PyResult<Self> {
        Ok(Self { inner: dop_core::CoherencyMatrix::new(a1, a2, a4).map_err(to_py)? })
    }

    #[getter]
    fn a1(&self) -> f64 {
        self.inner.a1()
    }

    #[getter]
    fn a2(&self) -> Complex {
        self.inner.a2()
    }

    #[getter]
    fn a4(&self) -> f64 {
        self.inner.a4()
    }

    fn trace(&self) -> f64 {
        self.inner.trace()
    }

    fn determinant(&self) -> f64 {
        self.inner.determinant()
    }

    /// Squared degree of polarization.
    fn p2(&self) -> PyResult<f64> {
        self.inner.degree_of_polarization_squared().map_err(to_py)
    }

    fn eigenvalues(&self) -> (f64, f64) {
        self.inner.eigenvalues()
    }

    /// (c1, c2, c4) of the inverse matrix.
    fn invert(&self) -> PyResult<(f64, Complex, f64)> {
        let c = self.inner.invert().map_err(to_py)?;
        Ok((c.c1, c.c2, c.c4))
    }

    /// (<I1 I2>, <I1 I2> - <I1><I2>) under fully developed speckle.
    fn intensity_correlation(&self) -> PyResult<(f64, f64)> {
        let c = self.inner.theoretical_intensity_correlation().map_err(to_py)?;
        Ok((c.delta12, c.centered))
    }

    fn __repr__(&self) -> String {
        let (a1, re, im, a4) = self.inner.to_tuple();
        format!("CoherencyMatrix(a1={a1}, a2=({re}{im:+}j), a4={a4})")
    }
}

/// The six reference matrices G1..G6 as (name, matrix) pairs.
#[pyfunction]
fn paper_matrices() -> Vec<(String, PyCoherencyMatrix)> {
    dop_core::paper_matrices()
        .into_iter()
        .map(|(n, m)| (n, PyCoherencyMatrix { inner: m }))
        .collect()
}

#[pyfunction]
fn osci_correction(eta_squared: f64, centered: f64, mean_i1: f64, mean_i2: f64) -> PyResult<f64> {
    dop_core::osci_correction(eta_squared, centered, mean_i1, mean_i2).map_err(to_py)
}

type SampledRecords = (Vec<f64>, Vec<f64>, Option<Vec<Complex>>);

/// Draws n speckle samples; returns (i1, i2, cross or None).
#[pyfunction]
#[pyo3(signature = (gamma, n, seed, stream_id = 0, keep_cross = false))]
fn sample_records(
    gamma: &PyCoherencyMatrix,
    n: usize,
    seed: u64,
    stream_id: u64,
    keep_cross: bool,
) -> PyResult<SampledRecords> {
    let recs = core_sample_records(&gamma.inner, n, SamplerConfig::new(seed, stream_id), keep_cross)
        .map_err(to_py)?;
    let cross = keep_cross.then(|| recs.iter().map(|r| r.cross.unwrap()).collect());
    Ok((recs.iter().map(|r| r.i1).collect(), recs.iter().map(|r| r.i2).collect(), cross))
}

fn records(i1: &[f64], i2: &[f64], cross: Option<&[Complex]>) -> PyResult<Vec<IntensityRecord>> {
    if i1.len() != i2.len() || cross.is_some_and(|c| c.len() != i1.len()) {
        return Err(PyValueError::new_err("i1, i2 and cross must have equal length"));
    }
    Ok((0..i1.len())
        .map(|i| IntensityRecord { i1: i1[i], i2: i2[i], cross: cross.map(|c| c[i]) })
        .collect())
}

/// Region-level P² estimate; kind is four_image, osci or correlated_pair.
#[pyfunction]
#[pyo3(signature = (i1, i2, kind, cross = None))]
fn estimate_p2<'py>(
    py: Python<'py>,
    i1: Vec<f64>,
    i2: Vec<f64>,
    kind: &str,
    cross: Option<Vec<Complex>>,
) -> PyResult<Bound<'py, PyDict>> {
    let recs = records(&i1, &i2, cross.as_deref())?;
    let r = core_estimate_p2(&recs, parse_kind(kind)?).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("kind", r.kind.name())?;
    d.set_item("a1_hat", r.a1_hat)?;
    d.set_item("a4_hat", r.a4_hat)?;
    d.set_item("a2_sq_hat", r.a2_sq_hat)?;
    d.set_item("p2_hat", r.p2_hat)?;
    d.set_item("n", r.n)?;
    Ok(d)
}

#[pyfunction]
fn variance_statistics(samples: Vec<f64>, n: usize) -> PyResult<(f64, f64, f64)> {
    let s = core_variance_statistics(&samples, n).map_err(to_py)?;
    Ok((s.mean, s.variance, s.n_times_variance))
}

/// Sliding-window P² map over row-major images; returns (p2, counts).
#[pyfunction]
fn estimate_map(
    i1: Vec<f64>,
    i2: Vec<f64>,
    width: usize,
    height: usize,
    window: usize,
    kind: &str,
) -> PyResult<(Vec<f64>, Vec<usize>)> {
    let pair = ImagePair::from_intensities(width, height, i1, i2).map_err(to_py)?;
    let m = core_estimate_map(&pair, window, parse_kind(kind)?).map_err(to_py)?;
    Ok((m.p2.data, m.counts.data))
}

/// Runs a Monte Carlo campaign; one dict per (matrix, n, estimator) cell.
#[pyfunction]
#[pyo3(signature = (matrices, n_values, realizations, seed, estimators = None, workers = 1))]
fn run_campaign<'py>(
    py: Python<'py>,
    matrices: Vec<(String, PyCoherencyMatrix)>,
    n_values: Vec<usize>,
    realizations: usize,
    seed: u64,
    estimators: Option<Vec<String>>,
    workers: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let estimators = match estimators {
        Some(names) => names.iter().map(|n| parse_kind(n)).collect::<PyResult<Vec<_>>>()?,
        None => EstimatorKind::ALL.to_vec(),
    };
    let spec = CampaignSpec {
        matrices: matrices.into_iter().map(|(n, m)| NamedMatrix::new(n, m.inner)).collect(),
        n_values,
        realizations,
        master_seed: seed,
        estimators,
    };
    let report = py.detach(|| core_run_campaign(&spec, workers)).map_err(to_py)?;
    report
        .cells
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("matrix", &c.matrix)?;
            d.set_item("n", c.n)?;
            d.set_item("estimator", c.estimator.name())?;
            d.set_item("true_p2", c.true_p2)?;
            d.set_item("mean_p2", c.mean_p2())?;
            d.set_item("var_p2", c.var_p2())?;
            d.set_item("n_times_var", c.n_times_var())?;
            d.set_item("realization_count", c.realization_count)?;
            d.set_item("failures", c.failures)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn speckle_dop(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCoherencyMatrix>()?;
    m.add_function(wrap_pyfunction!(paper_matrices, m)?)?;
    m.add_function(wrap_pyfunction!(osci_correction, m)?)?;
    m.add_function(wrap_pyfunction!(sample_records, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_p2, m)?)?;
    m.add_function(wrap_pyfunction!(variance_statistics, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_map, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    Ok(())
}
