use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{check_len, encode_input, AssessmentState, ProbabilityVector};
use crate::seed::Rng;

/// Lower/upper bound applied to sigmoid outputs so that probabilities stay
/// strictly inside (0, 1) in floating point.
pub const OUTPUT_FLOOR: f64 = 1e-12;

/// Layer widths `[n, h1, ..., hL, n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct NetworkArchitecture {
    layer_sizes: Vec<usize>,
}

impl NetworkArchitecture {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 3 {
            return Err(Error::param("layer_sizes", "need input, output and at least one hidden layer"));
        }
        if layer_sizes.iter().any(|&w| w == 0) {
            return Err(Error::param("layer_sizes", "widths must be positive"));
        }
        if layer_sizes[0] != layer_sizes[layer_sizes.len() - 1] {
            return Err(Error::param("layer_sizes", "input and output width must both equal the skill count"));
        }
        Ok(Self { layer_sizes })
    }

    /// `n` skills with the given hidden widths.
    pub fn with_hidden(n: usize, hidden: &[usize]) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(n);
        sizes.extend_from_slice(hidden);
        sizes.push(n);
        Self::new(sizes)
    }

    /// Two hidden layers of width `2n`.
    pub fn default_for(n: usize) -> Result<Self> {
        Self::with_hidden(n, &[2 * n, 2 * n])
    }

    pub fn n_skills(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn hidden(&self) -> &[usize] {
        &self.layer_sizes[1..self.layer_sizes.len() - 1]
    }
}

impl TryFrom<Vec<usize>> for NetworkArchitecture {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<NetworkArchitecture> for Vec<usize> {
    fn from(a: NetworkArchitecture) -> Vec<usize> {
        a.layer_sizes
    }
}

/// One affine map. `weights` is row-major with one row per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParameters {
    pub layers: Vec<Layer>,
}

impl NetworkParameters {
    pub fn zeros(arch: &NetworkArchitecture) -> Self {
        Self {
            layers: arch
                .layer_sizes()
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        }
    }

    /// Weights and biases uniform in `±scale / sqrt(fan_in)`.
    pub fn init(arch: &NetworkArchitecture, scale: f64, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(arch);
        for layer in &mut p.layers {
            let bound = scale / (layer.inputs as f64).sqrt();
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = rng.gen_range(-bound..=bound);
            }
        }
        p
    }

    pub fn architecture(&self) -> Result<NetworkArchitecture> {
        let mut sizes = vec![self.layers.first().map(|l| l.inputs).unwrap_or(0)];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        NetworkArchitecture::new(sizes)
    }

    /// Checks shapes against `arch` and that every entry is finite.
    pub fn validate(&self, arch: &NetworkArchitecture) -> Result<()> {
        let sizes = arch.layer_sizes();
        if self.layers.len() != sizes.len() - 1 {
            return Err(Error::Format(format!(
                "{} layers for architecture {:?}",
                self.layers.len(),
                sizes
            )));
        }
        for (i, (layer, w)) in self.layers.iter().zip(sizes.windows(2)).enumerate() {
            if layer.inputs != w[0]
                || layer.outputs != w[1]
                || layer.weights.len() != w[0] * w[1]
                || layer.bias.len() != w[1]
            {
                return Err(Error::Format(format!("layer {i} shape does not match {}x{}", w[1], w[0])));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite parameter in layer {i}")));
            }
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub(crate) fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights[index];
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }
}

/// Anything that maps an assessment state to mastery probabilities.
pub trait Predictor {
    fn n_skills(&self) -> usize;

    /// Raw model output for `assessment`, before clamping answered skills.
    fn predict(&self, assessment: &AssessmentState) -> Result<ProbabilityVector>;
}

/// Predicts the same probability for every skill regardless of answers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPredictor {
    pub n_skills: usize,
    pub probability: f64,
}

impl ConstantPredictor {
    pub fn uninformed(n_skills: usize) -> Self {
        Self {
            n_skills,
            probability: 0.5,
        }
    }
}

impl Predictor for ConstantPredictor {
    fn n_skills(&self) -> usize {
        self.n_skills
    }

    fn predict(&self, assessment: &AssessmentState) -> Result<ProbabilityVector> {
        check_len(self.n_skills, assessment.len())?;
        ProbabilityVector::constant(self.n_skills, self.probability)
    }
}

impl<T: Predictor + ?Sized> Predictor for &T {
    fn n_skills(&self) -> usize {
        (**self).n_skills()
    }

    fn predict(&self, assessment: &AssessmentState) -> Result<ProbabilityVector> {
        (**self).predict(assessment)
    }
}

impl<T: Predictor + ?Sized> Predictor for std::sync::Arc<T> {
    fn n_skills(&self) -> usize {
        (**self).n_skills()
    }

    fn predict(&self, assessment: &AssessmentState) -> Result<ProbabilityVector> {
        (**self).predict(assessment)
    }
}

/// `c = alpha * a * b + beta * c` on row/column strided buffers.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    assert!(m == 0 || k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(k == 0 || n == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the asserts above bound every index the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    (1.0 / (1.0 + (-x).exp())).clamp(OUTPUT_FLOOR, 1.0 - OUTPUT_FLOOR)
}

/// Activations kept from a batched forward pass, reused by backprop.
pub(crate) struct ForwardTrace {
    pub batch: usize,
    /// `acts[0]` is the input; `acts[l + 1]` is the output of layer `l`.
    pub acts: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

/// Forward pass over a row-major `batch x n` input block.
pub(crate) fn forward_batch(params: &NetworkParameters, input: Vec<f64>, batch: usize) -> ForwardTrace {
    let mut acts = Vec::with_capacity(params.layers.len() + 1);
    acts.push(input);
    let last = params.layers.len() - 1;
    for (li, layer) in params.layers.iter().enumerate() {
        let prev = acts.last().unwrap();
        let mut z = vec![0.0; batch * layer.outputs];
        for row in z.chunks_exact_mut(layer.outputs) {
            row.copy_from_slice(&layer.bias);
        }
        gemm(
            batch,
            layer.inputs,
            layer.outputs,
            prev,
            (layer.inputs, 1),
            &layer.weights,
            (1, layer.inputs),
            1.0,
            &mut z,
        );
        if li == last {
            z.iter_mut().for_each(|v| *v = sigmoid(*v));
        } else {
            z.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        acts.push(z);
    }
    ForwardTrace { batch, acts }
}

/// Gradient buffers shaped like the parameters.
pub(crate) fn zero_grads(params: &NetworkParameters) -> NetworkParameters {
    NetworkParameters {
        layers: params
            .layers
            .iter()
            .map(|l| Layer::zeros(l.inputs, l.outputs))
            .collect(),
    }
}

/// Backpropagates `d_out` (gradient of the objective w.r.t. the sigmoid
/// outputs) and accumulates parameter gradients into `grads`.
pub(crate) fn backward_batch(
    params: &NetworkParameters,
    trace: &ForwardTrace,
    d_out: &[f64],
    grads: &mut NetworkParameters,
) {
    let batch = trace.batch;
    let out = trace.output();
    // sigmoid'(z) = s (1 - s)
    let mut delta: Vec<f64> = d_out
        .iter()
        .zip(out)
        .map(|(g, s)| g * s * (1.0 - s))
        .collect();
    for li in (0..params.layers.len()).rev() {
        let layer = &params.layers[li];
        let input = &trace.acts[li];
        let g = &mut grads.layers[li];
        // dW (out x in) += delta^T (out x batch) * input (batch x in)
        gemm(
            layer.outputs,
            batch,
            layer.inputs,
            &delta,
            (1, layer.outputs),
            input,
            (layer.inputs, 1),
            1.0,
            &mut g.weights,
        );
        for row in delta.chunks_exact(layer.outputs) {
            for (b, d) in g.bias.iter_mut().zip(row) {
                *b += d;
            }
        }
        if li == 0 {
            break;
        }
        // d_input (batch x in) = delta (batch x out) * W (out x in)
        let mut d_in = vec![0.0; batch * layer.inputs];
        gemm(
            batch,
            layer.outputs,
            layer.inputs,
            &delta,
            (layer.outputs, 1),
            &layer.weights,
            (layer.inputs, 1),
            0.0,
            &mut d_in,
        );
        // relu'(z) = 1 where the activation is positive
        for (d, a) in d_in.iter_mut().zip(input) {
            if *a <= 0.0 {
                *d = 0.0;
            }
        }
        delta = d_in;
    }
}

/// Single-input forward pass.
pub fn forward_params(params: &NetworkParameters, assessment: &AssessmentState) -> Result<ProbabilityVector> {
    let n = params.layers[0].inputs;
    check_len(n, assessment.len())?;
    let trace = forward_batch(params, encode_input(assessment), 1);
    let out = trace.output().to_vec();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite network output".into()));
    }
    ProbabilityVector::new(out)
}

impl Predictor for NetworkParameters {
    fn n_skills(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    fn predict(&self, assessment: &AssessmentState) -> Result<ProbabilityVector> {
        forward_params(self, assessment)
    }
}
