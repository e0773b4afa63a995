//! Python bindings: filter banks, coefficient sets, statistical profiles,
//! synthesis and the one-dimensional theorem checks.

use numpy::{Complex64, IntoPyArray, PyArray2, PyReadonlyArray2};
use pyo3::exceptions::{PyIOError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use wavetex::filterbank::{self, FilterKey};
use wavetex::transform::{self, CoefficientSet, ReluKey};
use wavetex::{imageio, projection, statistics, synthesis, theoremlab, Error, Image};

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Io(_) | Error::Image { .. } => PyIOError::new_err(msg),
        Error::MissingKey(_) => PyKeyError::new_err(msg),
        Error::InvalidConfig(_) | Error::ShapeMismatch { .. } | Error::InfeasibleTarget(_) | Error::DegenerateWindow(_) => {
            PyValueError::new_err(msg)
        }
        _ => PyRuntimeError::new_err(msg),
    }
}

fn image(a: PyReadonlyArray2<'_, f64>) -> Image {
    a.as_array().to_owned()
}

fn array<'py>(py: Python<'py>, x: Image) -> Bound<'py, PyArray2<f64>> {
    x.into_pyarray(py)
}

#[pyclass(name = "BankConfig", module = "wavetex_py")]
#[derive(Clone)]
struct PyBankConfig {
    inner: filterbank::FilterBankConfig,
}

#[pymethods]
impl PyBankConfig {
    #[new]
    #[pyo3(signature = (size=256, scales=5, orientations=4, angular=4, window_sigma=None, central_freq=None, lowpass_sigma=None, tighten=true))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        size: usize,
        scales: usize,
        orientations: usize,
        angular: usize,
        window_sigma: Option<f64>,
        central_freq: Option<f64>,
        lowpass_sigma: Option<f64>,
        tighten: bool,
    ) -> PyResult<Self> {
        let mut inner = filterbank::FilterBankConfig::new(size, scales, orientations, angular).with_tighten(tighten);
        if let Some(v) = window_sigma {
            inner.window_sigma = v;
        }
        if let Some(v) = central_freq {
            inner.central_freq = v;
        }
        if let Some(v) = lowpass_sigma {
            inner.lowpass_sigma = v;
        }
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.grid_size
    }

    #[getter]
    fn scales(&self) -> usize {
        self.inner.num_scales
    }

    #[getter]
    fn orientations(&self) -> usize {
        self.inner.num_orientations
    }

    #[getter]
    fn angular(&self) -> usize {
        self.inner.num_angular
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "BankConfig(size={}, scales={}, orientations={}, angular={})",
            self.inner.grid_size, self.inner.num_scales, self.inner.num_orientations, self.inner.num_angular
        )
    }
}

fn filter_key(key: &str) -> PyResult<FilterKey> {
    key.parse().map_err(to_py)
}

#[pyclass(name = "FilterBank", module = "wavetex_py")]
struct PyFilterBank {
    inner: filterbank::FilterBank,
}

#[pymethods]
impl PyFilterBank {
    #[new]
    fn new(config: &PyBankConfig) -> PyResult<Self> {
        Ok(Self {
            inner: filterbank::build_bank(&config.inner).map_err(to_py)?,
        })
    }

    fn keys(&self) -> Vec<String> {
        self.inner.keys().map(|k| k.to_string()).collect()
    }

    /// Frequency response on the DFT grid (natural order).
    fn spectrum<'py>(&self, py: Python<'py>, key: &str) -> PyResult<Bound<'py, PyArray2<Complex64>>> {
        let k = filter_key(key)?;
        let s = self.inner.get(&k).ok_or_else(|| PyKeyError::new_err(key.to_string()))?;
        Ok(s.clone().into_pyarray(py))
    }

    /// Real spatial filter with its origin at index (0, 0).
    fn spatial<'py>(&self, py: Python<'py>, key: &str) -> PyResult<Bound<'py, PyArray2<f64>>> {
        let k = filter_key(key)?;
        let s = self.inner.spatial(&k).ok_or_else(|| PyKeyError::new_err(key.to_string()))?;
        Ok(array(py, s))
    }

    /// `(A, B)` with `A ≤ Σ_k |f̂_k|² ≤ B`.
    fn frame_bounds(&self) -> (f64, f64) {
        let b = self.inner.frame_bounds();
        (b.lower, b.upper)
    }

    /// Number of grid points violating the odd-wavelet scale-sum inequality.
    fn lp_violations(&self) -> usize {
        theoremlab::lp_frame_check(&self.inner).violations()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "Banks", module = "wavetex_py")]
struct PyBanks {
    inner: transform::Banks,
}

#[pymethods]
impl PyBanks {
    #[new]
    fn new(config: &PyBankConfig) -> PyResult<Self> {
        Ok(Self {
            inner: transform::Banks::new(&config.inner).map_err(to_py)?,
        })
    }
}

/// First-layer coefficients: `lowpass`, `highpass` and ReLU maps keyed like
/// `psi_e_j0_m0+`.
#[pyclass(name = "Coefficients", module = "wavetex_py")]
struct PyCoefficients {
    inner: CoefficientSet,
}

impl PyCoefficients {
    fn slot(&mut self, key: &str) -> PyResult<&mut Image> {
        match key {
            "lowpass" => return Ok(&mut self.inner.low),
            "highpass" => return Ok(&mut self.inner.high),
            "residual" => return self.inner.residual.as_mut().ok_or_else(|| PyKeyError::new_err("residual")),
            _ => {}
        }
        let k: ReluKey = key.parse().map_err(to_py)?;
        self.inner
            .pair_mut(&k.filter)
            .map(|p| p.get_mut(k.sign))
            .ok_or_else(|| PyKeyError::new_err(key.to_string()))
    }
}

#[pymethods]
impl PyCoefficients {
    fn keys(&self) -> Vec<String> {
        let mut out = vec!["lowpass".to_string(), "highpass".to_string()];
        if self.inner.residual.is_some() {
            out.push("residual".into());
        }
        out.extend(self.inner.relu_maps(None).into_iter().map(|(k, _)| k.to_string()));
        out
    }

    fn get<'py>(&mut self, py: Python<'py>, key: &str) -> PyResult<Bound<'py, PyArray2<f64>>> {
        let m = self.slot(key)?.clone();
        Ok(array(py, m))
    }

    fn set(&mut self, key: &str, value: PyReadonlyArray2<'_, f64>) -> PyResult<()> {
        let v = image(value);
        let slot = self.slot(key)?;
        if slot.dim() != v.dim() {
            return Err(to_py(Error::ShapeMismatch {
                expected: slot.dim(),
                actual: v.dim(),
            }));
        }
        *slot = v;
        Ok(())
    }

    /// Dual-frame reconstruction.
    fn invert<'py>(&self, py: Python<'py>, banks: &PyBanks) -> PyResult<Bound<'py, PyArray2<f64>>> {
        let x = transform::invert_u1(&self.inner, &banks.inner.first_duals).map_err(to_py)?;
        Ok(array(py, x))
    }
}

#[pyfunction]
fn forward_u1(x: PyReadonlyArray2<'_, f64>, banks: &PyBanks) -> PyResult<PyCoefficients> {
    Ok(PyCoefficients {
        inner: transform::forward_u1(&image(x), &banks.inner.first).map_err(to_py)?,
    })
}

/// Forward second layer followed by its inverse.
#[pyfunction]
fn u2_round_trip<'py>(py: Python<'py>, x: PyReadonlyArray2<'_, f64>, banks: &PyBanks) -> PyResult<Bound<'py, PyArray2<f64>>> {
    let c = transform::forward_u1(&image(x), &banks.inner.first).map_err(to_py)?;
    let u2 = transform::forward_u2(&c, &banks.inner).map_err(to_py)?;
    let back = transform::invert_u2(&c.low, &c.high, &u2, &banks.inner).map_err(to_py)?;
    Ok(array(py, back))
}

#[pyclass(name = "Profile", module = "wavetex_py")]
#[derive(Clone)]
struct PyProfile {
    inner: statistics::StatProfile,
}

#[pymethods]
impl PyProfile {
    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: statistics::StatProfile::from_json(text).map_err(to_py)?,
        })
    }

    fn layer1_vector(&self) -> Vec<f64> {
        self.inner.layer1_vector()
    }

    fn layer2_vector(&self) -> Option<Vec<f64>> {
        self.inner.layer2_vector()
    }

    /// `(mean, variance, skewness, kurtosis, min, max)`.
    fn pixel_stats(&self) -> (f64, f64, f64, f64, f64, f64) {
        let s = &self.inner.s0;
        (s.mean, s.variance, s.skewness, s.kurtosis, s.min, s.max)
    }
}

#[pyfunction]
#[pyo3(signature = (x, banks, layers=2))]
fn profile(x: PyReadonlyArray2<'_, f64>, banks: &PyBanks, layers: usize) -> PyResult<PyProfile> {
    Ok(PyProfile {
        inner: statistics::profile(&image(x), &banks.inner, layers).map_err(to_py)?,
    })
}

/// `(loss1, loss2)`; `loss2` is `None` unless both profiles have two layers.
#[pyfunction]
fn relative_loss(reference: &PyProfile, current: &PyProfile) -> PyResult<(f64, Option<f64>)> {
    let l = statistics::relative_loss(&reference.inner, &current.inner).map_err(to_py)?;
    Ok((l.loss1, l.loss2))
}

/// Returns the image and a list of `(iteration, loss1, loss2)`.
#[pyfunction]
#[pyo3(signature = (reference, config, layers=2, iters1=100, iters2=600, seed=0, stop_epsilon=0.0, init=None))]
#[allow(clippy::too_many_arguments)]
fn synthesize<'py>(
    py: Python<'py>,
    reference: PyReadonlyArray2<'_, f64>,
    config: &PyBankConfig,
    layers: usize,
    iters1: usize,
    iters2: usize,
    seed: u64,
    stop_epsilon: f64,
    init: Option<PyReadonlyArray2<'_, f64>>,
) -> PyResult<(Bound<'py, PyArray2<f64>>, Vec<(usize, f64, Option<f64>)>)> {
    let reference = image(reference);
    let cfg = synthesis::SynthesisConfig {
        bank: config.inner.clone(),
        layers,
        iterations_layer1: iters1,
        iterations_layer2: iters2,
        stop_epsilon,
        rng_seed: seed,
        init: init.map_or(synthesis::Init::Noise, |i| synthesis::Init::Image(image(i))),
    };
    let out = py.allow_threads(|| synthesis::synthesize(&reference, &cfg)).map_err(to_py)?;
    let history = out.loss_history.iter().map(|r| (r.iteration, r.loss1, r.loss2)).collect();
    Ok((array(py, out.image), history))
}

/// Imposes the pixel statistics of `reference` on `x`.
#[pyfunction]
fn match_pixel_stats<'py>(
    py: Python<'py>,
    x: PyReadonlyArray2<'_, f64>,
    reference: PyReadonlyArray2<'_, f64>,
) -> PyResult<Bound<'py, PyArray2<f64>>> {
    let target = statistics::pixel_stats(&image(reference));
    let (y, _) = projection::match_pixel_stats(&image(x), &target).map_err(to_py)?;
    Ok(array(py, y))
}

/// `(periodic, smooth)` with `x = periodic + smooth`.
#[pyfunction]
fn periodic_smooth<'py>(
    py: Python<'py>,
    x: PyReadonlyArray2<'_, f64>,
) -> PyResult<(Bound<'py, PyArray2<f64>>, Bound<'py, PyArray2<f64>>)> {
    let (p, s) = imageio::periodic_smooth(&image(x)).map_err(to_py)?;
    Ok((array(py, p), array(py, s)))
}

/// JSON report of the Dirac/step sign-separation checks.
#[pyfunction]
#[pyo3(signature = (sigma=theoremlab::DEFAULT_SIGMA, xi=theoremlab::DEFAULT_XI, n=theoremlab::DEFAULT_LENGTH))]
fn theorem1_report(sigma: f64, xi: f64, n: usize) -> PyResult<String> {
    theoremlab::theorem1_report(sigma, xi, n).and_then(|r| r.to_json()).map_err(to_py)
}

#[pymodule]
fn wavetex_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBankConfig>()?;
    m.add_class::<PyFilterBank>()?;
    m.add_class::<PyBanks>()?;
    m.add_class::<PyCoefficients>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(forward_u1, m)?)?;
    m.add_function(wrap_pyfunction!(u2_round_trip, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(relative_loss, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(match_pixel_stats, m)?)?;
    m.add_function(wrap_pyfunction!(periodic_smooth, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_report, m)?)?;
    Ok(())
}
