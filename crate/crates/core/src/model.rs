//! Two-layer LSTM + two fully connected layers, loaded from `DFW1` weight
//! files and stepped once per hop.
//!
//! File layout, all little-endian:
//!
//! ```text
//! "DFW1" | version u32 = 1 | feature_dim u32 | hidden u32 | fc_dim u32
//!        | out_dim u32 | num_layers u32 = 2 | head_tag u32
//! f32 arrays: W_1, U_1, b_1, W_2, U_2, b_2, FC1_W, FC1_b, FC2_W, FC2_b
//! ```
//!
//! Kernels are row-major with rows indexing the input dimension. LSTM gate
//! blocks are ordered input, forget, cell candidate, output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::features::{FeatureVector, FEATURE_DIM};
use crate::filter::{FirFilter, PhaseKind, DEFAULT_TAPS};

pub const MAGIC: &[u8; 4] = b"DFW1";
pub const FORMAT_VERSION: u32 = 1;
pub const NUM_LAYERS: usize = 2;
const HEADER_LEN: usize = 32;

/// Hidden units per LSTM layer.
pub const DEFAULT_HIDDEN: usize = 200;
/// Width of the ReLU layer.
pub const DEFAULT_FC: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    /// Sigmoid outputs used directly as FIR taps.
    SigmoidTaps,
    /// Sigmoid outputs used as per-bin spectral gains.
    SigmoidMask,
}

impl HeadKind {
    fn tag(self) -> u32 {
        match self {
            HeadKind::SigmoidTaps => 0,
            HeadKind::SigmoidMask => 1,
        }
    }

    fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(HeadKind::SigmoidTaps),
            1 => Ok(HeadKind::SigmoidMask),
            t => Err(Error::Format(format!("unknown head tag {t}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelDims {
    pub feature_dim: usize,
    pub hidden: usize,
    pub fc_dim: usize,
    pub out_dim: usize,
    pub head: HeadKind,
}

impl ModelDims {
    /// Tap-predicting network: 129 features, 200 hidden, 128 ReLU, 128 taps.
    pub fn taps() -> Self {
        Self {
            feature_dim: FEATURE_DIM,
            hidden: DEFAULT_HIDDEN,
            fc_dim: DEFAULT_FC,
            out_dim: DEFAULT_TAPS,
            head: HeadKind::SigmoidTaps,
        }
    }

    /// Mask-predicting network used by the spectral baselines.
    pub fn mask() -> Self {
        Self {
            out_dim: FEATURE_DIM,
            head: HeadKind::SigmoidMask,
            ..Self::taps()
        }
    }

    /// `4H(F+H+1) + 4H(2H+1) + H·C + C + C·O + O`.
    pub fn parameter_count(&self) -> usize {
        let (f, h, c, o) = (self.feature_dim, self.hidden, self.fc_dim, self.out_dim);
        4 * h * (f + h + 1) + 4 * h * (2 * h + 1) + h * c + c + c * o + o
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("feature_dim", self.feature_dim),
            ("hidden", self.hidden),
            ("fc_dim", self.fc_dim),
            ("out_dim", self.out_dim),
        ];
        for (name, v) in named {
            if v == 0 {
                return Err(Error::Format(format!("{name} must be nonzero")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LstmLayer {
    input_dim: usize,
    input_kernel: Vec<f32>,
    recurrent_kernel: Vec<f32>,
    bias: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    input_dim: usize,
    kernel: Vec<f32>,
    bias: Vec<f32>,
}

impl Dense {
    fn output_dim(&self) -> usize {
        self.bias.len()
    }

    fn apply(&self, x: &[f32], out: &mut [f32]) {
        out.copy_from_slice(&self.bias);
        matvec_acc(x, &self.kernel, out);
    }
}

/// Immutable network parameters. Share between streams behind an `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    dims: ModelDims,
    layers: Vec<LstmLayer>,
    fc1: Dense,
    fc2: Dense,
}

/// `out += x · kernel` with `kernel` laid out `x.len() × out.len()`.
#[inline]
fn matvec_acc(x: &[f32], kernel: &[f32], out: &mut [f32]) {
    let cols = out.len();
    for (xi, row) in x.iter().zip(kernel.chunks_exact(cols)) {
        if *xi == 0.0 {
            continue;
        }
        for (o, w) in out.iter_mut().zip(row) {
            *o += xi * w;
        }
    }
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn u32(&mut self, what: &str) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format(format!("truncated header reading {what}")))?;
        self.pos = end;
        Ok(u32::from_le_bytes(chunk.try_into().unwrap()))
    }

    fn floats(&mut self, len: usize, what: &str) -> Result<Vec<f32>> {
        let end = self.pos + 4 * len;
        let chunk = self.bytes.get(self.pos..end).ok_or_else(|| {
            Error::Format(format!(
                "truncated payload in {what}: need {} bytes at offset {}, file has {}",
                4 * len,
                self.pos,
                self.bytes.len()
            ))
        })?;
        self.pos = end;
        let values: Vec<f32> = chunk
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite value in {what}")));
        }
        Ok(values)
    }
}

impl ModelWeights {
    pub fn load(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic, expected \"DFW1\"".into()));
        }
        let mut r = Reader { bytes, pos: 4 };
        let version = r.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let feature_dim = r.u32("feature_dim")? as usize;
        let hidden = r.u32("hidden")? as usize;
        let fc_dim = r.u32("fc_dim")? as usize;
        let out_dim = r.u32("out_dim")? as usize;
        let num_layers = r.u32("num_layers")? as usize;
        let head = HeadKind::from_tag(r.u32("head_tag")?)?;
        if num_layers != NUM_LAYERS {
            return Err(Error::Format(format!(
                "expected {NUM_LAYERS} lstm layers, header says {num_layers}"
            )));
        }
        let dims = ModelDims {
            feature_dim,
            hidden,
            fc_dim,
            out_dim,
            head,
        };
        dims.validate()?;

        let gates = 4 * hidden;
        let mut layers = Vec::with_capacity(NUM_LAYERS);
        for l in 0..NUM_LAYERS {
            let input_dim = if l == 0 { feature_dim } else { hidden };
            layers.push(LstmLayer {
                input_dim,
                input_kernel: r.floats(input_dim * gates, &format!("W_{}", l + 1))?,
                recurrent_kernel: r.floats(hidden * gates, &format!("U_{}", l + 1))?,
                bias: r.floats(gates, &format!("b_{}", l + 1))?,
            });
        }
        let fc1 = Dense {
            input_dim: hidden,
            kernel: r.floats(hidden * fc_dim, "FC1_W")?,
            bias: r.floats(fc_dim, "FC1_b")?,
        };
        let fc2 = Dense {
            input_dim: fc_dim,
            kernel: r.floats(fc_dim * out_dim, "FC2_W")?,
            bias: r.floats(out_dim, "FC2_b")?,
        };
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after payload; header dims do not match file size",
                bytes.len() - r.pos
            )));
        }
        Ok(Self {
            dims,
            layers,
            fc1,
            fc2,
        })
    }

    pub fn load_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::load(&std::fs::read(path).map_err(|e| crate::error::with_path(e, path))?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.parameter_count());
        out.extend_from_slice(MAGIC);
        let d = &self.dims;
        for v in [
            FORMAT_VERSION,
            d.feature_dim as u32,
            d.hidden as u32,
            d.fc_dim as u32,
            d.out_dim as u32,
            NUM_LAYERS as u32,
            d.head.tag(),
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for arr in self.arrays() {
            for v in arr {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    fn arrays(&self) -> Vec<&[f32]> {
        let mut v: Vec<&[f32]> = Vec::new();
        for l in &self.layers {
            v.extend([&l.input_kernel[..], &l.recurrent_kernel, &l.bias]);
        }
        v.extend([
            &self.fc1.kernel[..],
            &self.fc1.bias,
            &self.fc2.kernel,
            &self.fc2.bias,
        ]);
        v
    }

    fn arrays_mut(&mut self) -> Vec<&mut Vec<f32>> {
        let mut v = Vec::new();
        for l in &mut self.layers {
            v.push(&mut l.input_kernel);
            v.push(&mut l.recurrent_kernel);
            v.push(&mut l.bias);
        }
        v.push(&mut self.fc1.kernel);
        v.push(&mut self.fc1.bias);
        v.push(&mut self.fc2.kernel);
        v.push(&mut self.fc2.bias);
        v
    }

    /// All-zero parameters.
    pub fn zeros(dims: ModelDims) -> Result<Self> {
        dims.validate()?;
        let gates = 4 * dims.hidden;
        let layers = (0..NUM_LAYERS)
            .map(|l| {
                let input_dim = if l == 0 { dims.feature_dim } else { dims.hidden };
                LstmLayer {
                    input_dim,
                    input_kernel: vec![0.0; input_dim * gates],
                    recurrent_kernel: vec![0.0; dims.hidden * gates],
                    bias: vec![0.0; gates],
                }
            })
            .collect();
        Ok(Self {
            dims,
            layers,
            fc1: Dense {
                input_dim: dims.hidden,
                kernel: vec![0.0; dims.hidden * dims.fc_dim],
                bias: vec![0.0; dims.fc_dim],
            },
            fc2: Dense {
                input_dim: dims.fc_dim,
                kernel: vec![0.0; dims.fc_dim * dims.out_dim],
                bias: vec![0.0; dims.out_dim],
            },
        })
    }

    /// Uniform random parameters in `[-scale, scale]`, reproducible per seed.
    pub fn random(dims: ModelDims, scale: f32, seed: u64) -> Result<Self> {
        let mut w = Self::zeros(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for arr in w.arrays_mut() {
            for v in arr.iter_mut() {
                *v = rng.gen_range(-scale..=scale);
            }
        }
        Ok(w)
    }

    /// Tap head whose output saturates to exactly a unit impulse at `delay`,
    /// independent of the input: the output biases are +100 / -200 and the
    /// sigmoid rounds them to 1.0 and 0.0 in f32.
    pub fn pinned_delay(dims: ModelDims, delay: usize) -> Result<Self> {
        if dims.head != HeadKind::SigmoidTaps || delay >= dims.out_dim {
            return invalid(format!(
                "delay {delay} needs a tap head with more than {delay} outputs"
            ));
        }
        let mut w = Self::zeros(dims)?;
        w.fc2.bias.fill(-200.0);
        w.fc2.bias[delay] = 100.0;
        Ok(w)
    }

    /// Mask head saturated to a constant gain of exactly 0.0 or 1.0 per bin.
    pub fn pinned_mask(dims: ModelDims, pass: impl Fn(usize) -> bool) -> Result<Self> {
        if dims.head != HeadKind::SigmoidMask {
            return invalid("pinned mask needs a mask head");
        }
        let mut w = Self::zeros(dims)?;
        for (k, b) in w.fc2.bias.iter_mut().enumerate() {
            *b = if pass(k) { 100.0 } else { -200.0 };
        }
        Ok(w)
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn head(&self) -> HeadKind {
        self.dims.head
    }

    pub fn parameter_count(&self) -> usize {
        self.arrays().iter().map(|a| a.len()).sum()
    }

    pub fn new_state(&self) -> ModelState {
        ModelState::new(&self.dims)
    }
}

/// Recurrent state of one stream plus scratch for a forward step.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    hidden: Vec<Vec<f32>>,
    cell: Vec<Vec<f32>>,
    gates: Vec<f32>,
    input: Vec<f32>,
    fc: Vec<f32>,
    out: Vec<f32>,
}

impl ModelState {
    pub fn new(dims: &ModelDims) -> Self {
        Self {
            hidden: vec![vec![0.0; dims.hidden]; NUM_LAYERS],
            cell: vec![vec![0.0; dims.hidden]; NUM_LAYERS],
            gates: vec![0.0; 4 * dims.hidden],
            input: Vec::with_capacity(dims.feature_dim),
            fc: vec![0.0; dims.fc_dim],
            out: vec![0.0; dims.out_dim],
        }
    }

    pub fn reset(&mut self) {
        for v in self.hidden.iter_mut().chain(self.cell.iter_mut()) {
            v.fill(0.0);
        }
    }

    pub fn hidden(&self, layer: usize) -> &[f32] {
        &self.hidden[layer]
    }

    pub fn cell(&self, layer: usize) -> &[f32] {
        &self.cell[layer]
    }
}

fn check_state(weights: &ModelWeights, state: &ModelState) -> Result<()> {
    let d = &weights.dims;
    if state.gates.len() != 4 * d.hidden || state.fc.len() != d.fc_dim || state.out.len() != d.out_dim {
        return invalid("model state was created for different model dimensions");
    }
    Ok(())
}

/// Advance both LSTM layers by one step; returns the top-layer hidden vector.
pub fn lstm_step<'s>(
    weights: &ModelWeights,
    state: &'s mut ModelState,
    input: &[f32],
) -> Result<&'s [f32]> {
    check_state(weights, state)?;
    if input.len() != weights.dims.feature_dim {
        return invalid(format!(
            "input has {} values, model expects {}",
            input.len(),
            weights.dims.feature_dim
        ));
    }
    let h = weights.dims.hidden;
    for (l, layer) in weights.layers.iter().enumerate() {
        let ModelState {
            hidden,
            cell,
            gates,
            ..
        } = state;
        gates.copy_from_slice(&layer.bias);
        if l == 0 {
            matvec_acc(input, &layer.input_kernel, gates);
        } else {
            let (below, _) = hidden.split_at(l);
            matvec_acc(&below[l - 1], &layer.input_kernel, gates);
        }
        debug_assert_eq!(layer.input_kernel.len(), layer.input_dim * 4 * h);
        matvec_acc(&hidden[l], &layer.recurrent_kernel, gates);

        let (hl, cl) = (&mut hidden[l], &mut cell[l]);
        for j in 0..h {
            let i = sigmoid(gates[j]);
            let f = sigmoid(gates[h + j]);
            let g = gates[2 * h + j].tanh();
            let o = sigmoid(gates[3 * h + j]);
            let c = f * cl[j] + i * g;
            cl[j] = c;
            hl[j] = o * c.tanh();
        }
    }
    Ok(&state.hidden[NUM_LAYERS - 1])
}

/// Full forward step: LSTM stack, ReLU layer, sigmoid head.
pub fn forward<'s>(
    weights: &ModelWeights,
    state: &'s mut ModelState,
    input: &[f32],
) -> Result<&'s [f32]> {
    lstm_step(weights, state, input)?;
    let ModelState {
        hidden, fc, out, ..
    } = state;
    weights.fc1.apply(&hidden[NUM_LAYERS - 1], fc);
    for v in fc.iter_mut() {
        *v = v.max(0.0);
    }
    debug_assert_eq!(weights.fc2.input_dim, fc.len());
    debug_assert_eq!(weights.fc2.output_dim(), out.len());
    weights.fc2.apply(fc, out);
    for v in out.iter_mut() {
        *v = sigmoid(*v);
    }
    Ok(&state.out)
}

fn features_to_input(state: &mut ModelState, features: &FeatureVector) -> Vec<f32> {
    let mut input = std::mem::take(&mut state.input);
    input.clear();
    input.extend(features.values().iter().map(|&v| v as f32));
    input
}

fn forward_features<'s>(
    weights: &ModelWeights,
    state: &'s mut ModelState,
    features: &FeatureVector,
) -> Result<&'s [f32]> {
    let input = features_to_input(state, features);
    let res = forward(weights, state, &input).map(|_| ());
    state.input = input;
    res?;
    Ok(&state.out)
}

/// Predict one FIR filter from a feature vector; the state advances one step.
pub fn predict_taps(
    weights: &ModelWeights,
    state: &mut ModelState,
    features: &FeatureVector,
) -> Result<FirFilter> {
    if weights.head() != HeadKind::SigmoidTaps {
        return invalid("weights carry a mask head; tap prediction needs head_tag 0");
    }
    let out = forward_features(weights, state, features)?;
    FirFilter::new(out.iter().map(|&v| v as f64).collect(), PhaseKind::LinearIsh)
}

/// Per-bin gains in `[0, 1]` for the spectral-mask baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskFrame(pub Vec<f64>);

impl MaskFrame {
    pub fn gains(&self) -> &[f64] {
        &self.0
    }
}

pub fn predict_mask(
    weights: &ModelWeights,
    state: &mut ModelState,
    features: &FeatureVector,
) -> Result<MaskFrame> {
    if weights.head() != HeadKind::SigmoidMask {
        return invalid("weights carry a tap head; mask prediction needs head_tag 1");
    }
    let out = forward_features(weights, state, features)?;
    Ok(MaskFrame(out.iter().map(|&v| v as f64).collect()))
}
