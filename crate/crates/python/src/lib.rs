//! Python bindings: window functions, minimum-phase conversion, metrics,
//! latency arithmetic, weights, and a streaming engine.

use std::sync::{Arc, Mutex};

use deepfir::engine::{build_processor, EvalTrace, HopProcessor, TraceOptions};
use deepfir::latency::{end_to_end_latency, LatencyReport};
use deepfir::minphase::{default_nfft, group_delay as measure_group_delay, to_minimum_phase, DelayWeighting};
use deepfir::model::{HeadKind, ModelDims};
use deepfir::{Error, FirFilter, Mode, ModelWeights, PhaseKind, StreamConfig, Streamer};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

fn py_err(e: Error) -> PyErr {
    let msg = format!("{}: {}", e.kind(), e.message());
    match e {
        Error::Io(_) => PyOSError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for deepfir::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse::<Mode>().py()
}

fn parse_weighting(w: &str) -> PyResult<DelayWeighting> {
    match w {
        "magnitude" | "magnitude-weighted" => Ok(DelayWeighting::MagnitudeWeighted),
        "uniform" => Ok(DelayWeighting::Uniform),
        other => Err(PyValueError::new_err(format!(
            "weighting must be 'magnitude' or 'uniform', got {other:?}"
        ))),
    }
}

fn head_dims(head: &str) -> PyResult<ModelDims> {
    match head {
        "taps" => Ok(ModelDims::taps()),
        "mask" => Ok(ModelDims::mask()),
        other => Err(PyValueError::new_err(format!("head must be 'taps' or 'mask', got {other:?}"))),
    }
}

#[pyfunction]
fn hamming(len: usize) -> PyResult<Vec<f64>> {
    Ok(deepfir::dsp::hamming(len).py()?.into_inner())
}

#[pyfunction]
fn sqrt_hann(len: usize) -> PyResult<Vec<f64>> {
    Ok(deepfir::dsp::sqrt_hann(len).py()?.into_inner())
}

/// Rising and falling halves of the Hann crossfade; they sum to one.
#[pyfunction]
fn hann_crossfade(len: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let (rise, fall) = deepfir::dsp::hann_crossfade(len).py()?;
    Ok((rise.into_inner(), fall.into_inner()))
}

#[pyfunction]
fn extract_features(frame: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(deepfir::features::extract_features(&frame).py()?.0)
}

#[pyfunction]
#[pyo3(signature = (taps, nfft=None))]
fn minimum_phase(taps: Vec<f64>, nfft: Option<usize>) -> PyResult<Vec<f64>> {
    let nfft = nfft.unwrap_or_else(|| default_nfft(taps.len()));
    let filter = FirFilter::new(taps, PhaseKind::LinearIsh).py()?;
    Ok(to_minimum_phase(&filter, nfft).py()?.taps().to_vec())
}

/// Mean group delay as `(samples, milliseconds)`.
#[pyfunction]
#[pyo3(signature = (taps, nfft=None, weighting="magnitude"))]
fn group_delay(taps: Vec<f64>, nfft: Option<usize>, weighting: &str) -> PyResult<(f64, f64)> {
    let nfft = nfft.unwrap_or_else(|| default_nfft(taps.len()));
    let filter = FirFilter::new(taps, PhaseKind::LinearIsh).py()?;
    let p = measure_group_delay(&filter, nfft, parse_weighting(weighting)?).py()?;
    Ok((p.mean_samples, p.mean_ms))
}

#[pyfunction]
fn si_sdr(reference: Vec<f64>, estimate: Vec<f64>) -> PyResult<f64> {
    deepfir::metrics::si_sdr(&reference, &estimate).py()
}

#[pyfunction]
fn si_sdr_improvement(mix: Vec<f64>, reference: Vec<f64>, estimate: Vec<f64>) -> PyResult<f64> {
    deepfir::metrics::si_sdr_improvement(&mix, &reference, &estimate).py()
}

#[pyfunction]
#[pyo3(signature = (reference, estimate, alpha=0.3, beta=0.85))]
fn compressed_spectral_loss(reference: Vec<f64>, estimate: Vec<f64>, alpha: f64, beta: f64) -> PyResult<f64> {
    let cfg = deepfir::metrics::LossConfig { alpha, beta };
    deepfir::metrics::signal_loss(&reference, &estimate, &cfg).py()
}

fn latency_dict<'py>(py: Python<'py>, r: &LatencyReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("synthesis_window_ms", r.synthesis_window_ms)?;
    d.set_item("mean_group_delay_ms", r.mean_group_delay_ms)?;
    d.set_item("hop_ms", r.hop_ms)?;
    d.set_item("hardware_ms", r.hardware_ms)?;
    d.set_item("algorithmic_ms", r.algorithmic_ms)?;
    d.set_item("end_to_end_ms", r.end_to_end_ms)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (mode, synthesis_ms, group_delay_ms, hardware_ms=deepfir::latency::DEFAULT_HARDWARE_MS))]
fn latency<'py>(
    py: Python<'py>,
    mode: &str,
    synthesis_ms: f64,
    group_delay_ms: f64,
    hardware_ms: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = StreamConfig::from_ms(parse_mode(mode)?, synthesis_ms, deepfir::filter::DEFAULT_TAPS, true).py()?;
    latency_dict(py, &end_to_end_latency(&config, group_delay_ms, hardware_ms).py()?)
}

/// Model parameters in the DFW1 layout.
#[pyclass(frozen)]
struct Weights {
    inner: Arc<ModelWeights>,
}

#[pymethods]
impl Weights {
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(ModelWeights::load_file(path).py()?) })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(ModelWeights::load(data).py()?) })
    }

    /// Weights whose output is pinned to a unit impulse delayed by `delay`
    /// (tap head) or to an all-pass mask (mask head).
    #[staticmethod]
    #[pyo3(signature = (head="taps", delay=0))]
    fn identity(head: &str, delay: usize) -> PyResult<Self> {
        let dims = head_dims(head)?;
        let w = match dims.head {
            HeadKind::SigmoidTaps => ModelWeights::pinned_delay(dims, delay),
            HeadKind::SigmoidMask => ModelWeights::pinned_mask(dims, |_| true),
        };
        Ok(Self { inner: Arc::new(w.py()?) })
    }

    #[staticmethod]
    #[pyo3(signature = (head="taps", scale=0.05, seed=0))]
    fn random(head: &str, scale: f32, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(ModelWeights::random(head_dims(head)?, scale, seed).py()?) })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.inner.parameter_count()
    }

    #[getter]
    fn head(&self) -> &'static str {
        match self.inner.head() {
            HeadKind::SigmoidTaps => "taps",
            HeadKind::SigmoidMask => "mask",
        }
    }

    #[getter]
    fn dims<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = self.inner.dims();
        let out = PyDict::new(py);
        out.set_item("feature_dim", d.feature_dim)?;
        out.set_item("hidden", d.hidden)?;
        out.set_item("fc_dim", d.fc_dim)?;
        out.set_item("out_dim", d.out_dim)?;
        Ok(out)
    }
}

type BoxedProcessor = Box<dyn HopProcessor + Send>;

/// One audio stream. Accepts chunks of any size; output is emitted a hop
/// at a time, and `finish` flushes the zero-padded final hop.
#[pyclass]
struct Engine {
    config: StreamConfig,
    streamer: Mutex<Streamer<BoxedProcessor>>,
}

impl Engine {
    fn with_streamer<T>(&self, f: impl FnOnce(&mut Streamer<BoxedProcessor>) -> deepfir::Result<T>) -> PyResult<T> {
        let mut guard = self
            .streamer
            .lock()
            .map_err(|_| PyRuntimeError::new_err("engine poisoned by an earlier panic"))?;
        f(&mut guard).py()
    }

    fn trace(&self) -> PyResult<EvalTrace> {
        self.with_streamer(|s| Ok(s.processor().trace().clone()))
    }
}

#[pymethods]
impl Engine {
    #[new]
    #[pyo3(signature = (weights, mode="deepfir", synthesis_ms=1.0, taps=128, min_phase=true))]
    fn new(weights: &Weights, mode: &str, synthesis_ms: f64, taps: usize, min_phase: bool) -> PyResult<Self> {
        let config = StreamConfig::from_ms(parse_mode(mode)?, synthesis_ms, taps, min_phase).py()?;
        let trace = TraceOptions {
            group_delay: config.mode == Mode::DeepFir,
            timing: false,
        };
        let processor = build_processor(&config, weights.inner.clone(), trace).py()?;
        Ok(Self {
            config,
            streamer: Mutex::new(Streamer::new(processor)),
        })
    }

    fn push(&self, py: Python<'_>, samples: Vec<f64>) -> PyResult<Vec<f64>> {
        py.detach(|| {
            let mut out = Vec::with_capacity(samples.len() + self.config.hop);
            self.with_streamer(|s| s.push(&samples, &mut out))?;
            Ok(out)
        })
    }

    fn finish(&self) -> PyResult<Vec<f64>> {
        let mut out = Vec::new();
        self.with_streamer(|s| s.finish(&mut out))?;
        Ok(out)
    }

    #[getter]
    fn hop(&self) -> usize {
        self.config.hop
    }

    #[getter]
    fn mode(&self) -> String {
        self.config.mode.to_string()
    }

    #[getter]
    fn hops(&self) -> PyResult<usize> {
        Ok(self.trace()?.hops)
    }

    /// Mean measured group delay over processed hops, or None.
    #[getter]
    fn mean_group_delay_ms(&self) -> PyResult<Option<f64>> {
        Ok(self.trace()?.mean_group_delay_ms())
    }
}

#[pymodule]
#[pyo3(name = "deepfir")]
fn deepfir_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SAMPLE_RATE", deepfir::SAMPLE_RATE)?;
    m.add_function(wrap_pyfunction!(hamming, m)?)?;
    m.add_function(wrap_pyfunction!(sqrt_hann, m)?)?;
    m.add_function(wrap_pyfunction!(hann_crossfade, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(minimum_phase, m)?)?;
    m.add_function(wrap_pyfunction!(group_delay, m)?)?;
    m.add_function(wrap_pyfunction!(si_sdr, m)?)?;
    m.add_function(wrap_pyfunction!(si_sdr_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(compressed_spectral_loss, m)?)?;
    m.add_function(wrap_pyfunction!(latency, m)?)?;
    m.add_class::<Weights>()?;
    m.add_class::<Engine>()?;
    Ok(())
}
