use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{
    backward_batch, forward_batch, forward_params, zero_grads, NetworkArchitecture, NetworkParameters, Predictor,
};
use crate::error::{Error, Result};
use crate::ontology::{check_len, encode_input, AssessmentState, ProbabilityVector};
use crate::seed::{derive_seed, rng_from_seed};
use crate::simulation::{Dataset, TrainingExample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean squared distance to the target.
    #[default]
    Squared,
    /// Mean absolute distance to the target.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    #[serde(default)]
    pub loss_kind: LossKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng_seed: u64,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    /// Heavy-ball momentum coefficient; 0 is plain gradient descent.
    #[serde(default)]
    pub momentum: f64,
    /// Drop 0.5 (unknown) targets from the objective instead of fitting them.
    #[serde(default)]
    pub mask_unknown: bool,
}

fn default_init_scale() -> f64 {
    1.0
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            loss_kind: LossKind::Squared,
            learning_rate: 0.5,
            epochs: 40,
            batch_size: 32,
            rng_seed: 0,
            init_scale: 1.0,
            momentum: 0.0,
            mask_unknown: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be positive"));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::param("init_scale", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::param("momentum", "must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Where a model came from. Required on every saved model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: TrainingConfig,
    pub dataset_fingerprint: String,
    /// Learners whose simulated states made up the training set.
    pub learner_ids: Vec<String>,
    pub examples: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub architecture: NetworkArchitecture,
    pub parameters: NetworkParameters,
    pub provenance: Provenance,
}

impl TrainedModel {
    /// Wraps hand-set parameters, e.g. for stubs and fixtures.
    pub fn from_parameters(parameters: NetworkParameters, provenance: Provenance) -> Result<Self> {
        let architecture = parameters.architecture()?;
        parameters.validate(&architecture)?;
        Ok(Self {
            architecture,
            parameters,
            provenance,
        })
    }

    pub fn forward(&self, assessment: &AssessmentState) -> Result<ProbabilityVector> {
        forward_params(&self.parameters, assessment)
    }

    /// Output on the empty assessment.
    pub fn apriori(&self) -> Result<ProbabilityVector> {
        self.forward(&AssessmentState::empty(self.architecture.n_skills()))
    }
}

impl Predictor for TrainedModel {
    fn n_skills(&self) -> usize {
        self.architecture.n_skills()
    }

    fn predict(&self, assessment: &AssessmentState) -> Result<ProbabilityVector> {
        self.forward(assessment)
    }
}

/// Per-example objective: mean over skills of the squared or absolute
/// distance.
pub fn loss(output: &[f64], target: &[f64], kind: LossKind) -> Result<f64> {
    check_len(output.len(), target.len())?;
    let n = output.len() as f64;
    let sum: f64 = output
        .iter()
        .zip(target)
        .map(|(o, t)| match kind {
            LossKind::Squared => (o - t) * (o - t),
            LossKind::Absolute => (o - t).abs(),
        })
        .sum();
    Ok(sum / n)
}

fn masked(target: f64, mask_unknown: bool) -> bool {
    mask_unknown && target == 0.5
}

/// Loss and its gradient w.r.t. the outputs for one row, scaled by `scale`.
fn row_loss_grad(out: &[f64], target: &[f64], kind: LossKind, mask: bool, scale: f64, grad: &mut [f64]) -> f64 {
    let n = out.len() as f64;
    let mut sum = 0.0;
    for ((o, t), g) in out.iter().zip(target).zip(grad.iter_mut()) {
        if masked(*t, mask) {
            *g = 0.0;
            continue;
        }
        let d = o - t;
        match kind {
            LossKind::Squared => {
                sum += d * d;
                *g = scale * 2.0 * d / n;
            }
            LossKind::Absolute => {
                sum += d.abs();
                *g = scale * if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                } / n;
            }
        }
    }
    sum / n
}

fn pack(examples: &[&TrainingExample], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(examples.len() * n);
    let mut t = Vec::with_capacity(examples.len() * n);
    for ex in examples {
        x.extend(encode_input(&ex.input));
        t.extend_from_slice(&ex.target);
    }
    (x, t)
}

const EVAL_CHUNK: usize = 256;

/// Mean objective of `params` over all examples.
pub fn dataset_loss(params: &NetworkParameters, examples: &[TrainingExample], kind: LossKind, mask_unknown: bool) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    let n = params.layers[0].inputs;
    let mut total = 0.0;
    let mut scratch = vec![0.0; n];
    for chunk in examples.chunks(EVAL_CHUNK) {
        let refs: Vec<&TrainingExample> = chunk.iter().collect();
        let (x, t) = pack(&refs, n);
        let trace = forward_batch(params, x, chunk.len());
        for (out, tgt) in trace.output().chunks_exact(n).zip(t.chunks_exact(n)) {
            total += row_loss_grad(out, tgt, kind, mask_unknown, 0.0, &mut scratch);
        }
    }
    let mean = total / examples.len() as f64;
    if !mean.is_finite() {
        return Err(Error::Numeric("non-finite dataset loss".into()));
    }
    Ok(mean)
}

fn check_examples(examples: &[TrainingExample], n: usize) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    for ex in examples {
        check_len(n, ex.input.len())?;
        check_len(n, ex.target.len())?;
    }
    Ok(())
}

/// Mini-batch gradient descent with backpropagation.
///
/// Initialization and shuffling draw from substreams of `config.rng_seed`,
/// so equal inputs give bit-identical parameters.
pub fn train(dataset: &Dataset, arch: &NetworkArchitecture, config: &TrainingConfig) -> Result<TrainedModel> {
    config.validate()?;
    let n = arch.n_skills();
    check_len(n, dataset.n_skills)?;
    check_examples(&dataset.examples, n)?;

    let mut init_rng = rng_from_seed(derive_seed(config.rng_seed, "init", ""));
    let mut shuffle_rng = rng_from_seed(derive_seed(config.rng_seed, "shuffle", ""));
    let mut params = NetworkParameters::init(arch, config.init_scale, &mut init_rng);
    let initial_loss = dataset_loss(&params, &dataset.examples, config.loss_kind, config.mask_unknown)?;

    let mut velocity = zero_grads(&params);
    let mut order: Vec<usize> = (0..dataset.examples.len()).collect();
    let mut d_out = Vec::new();
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch_idx in order.chunks(config.batch_size) {
            let batch: Vec<&TrainingExample> = batch_idx.iter().map(|&i| &dataset.examples[i]).collect();
            let (x, t) = pack(&batch, n);
            let trace = forward_batch(&params, x, batch.len());
            d_out.clear();
            d_out.resize(batch.len() * n, 0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for ((out, tgt), g) in trace
                .output()
                .chunks_exact(n)
                .zip(t.chunks_exact(n))
                .zip(d_out.chunks_exact_mut(n))
            {
                batch_loss += row_loss_grad(out, tgt, config.loss_kind, config.mask_unknown, scale, g);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            let mut grads = zero_grads(&params);
            backward_batch(&params, &trace, &d_out, &mut grads);
            for ((p, v), g) in params.layers.iter_mut().zip(&mut velocity.layers).zip(&grads.layers) {
                step(&mut p.weights, &mut v.weights, &g.weights, config);
                step(&mut p.bias, &mut v.bias, &g.bias, config);
            }
        }
        if params.layers.iter().any(|l| l.weights.iter().chain(&l.bias).any(|w| !w.is_finite())) {
            return Err(Error::Diverged { epoch });
        }
    }
    let final_loss = dataset_loss(&params, &dataset.examples, config.loss_kind, config.mask_unknown)
        .map_err(|_| Error::Diverged { epoch: config.epochs })?;

    Ok(TrainedModel {
        architecture: arch.clone(),
        parameters: params,
        provenance: Provenance {
            config: config.clone(),
            dataset_fingerprint: dataset.fingerprint(),
            learner_ids: dataset.learner_ids.clone(),
            examples: dataset.examples.len(),
            initial_loss,
            final_loss,
        },
    })
}

fn step(params: &mut [f64], velocity: &mut [f64], grads: &[f64], config: &TrainingConfig) {
    if config.momentum == 0.0 {
        for (p, g) in params.iter_mut().zip(grads) {
            *p -= config.learning_rate * g;
        }
    } else {
        for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grads) {
            *v = config.momentum * *v + g;
            *p -= config.learning_rate * *v;
        }
    }
}

/// Analytic gradient of the per-example objective w.r.t. every parameter,
/// in [`NetworkParameters::flat`] order.
pub fn gradient(params: &NetworkParameters, example: &TrainingExample, kind: LossKind) -> Result<Vec<f64>> {
    let n = params.layers[0].inputs;
    check_examples(std::slice::from_ref(example), n)?;
    let trace = forward_batch(params, encode_input(&example.input), 1);
    let mut d_out = vec![0.0; n];
    row_loss_grad(trace.output(), &example.target, kind, false, 1.0, &mut d_out);
    let mut grads = zero_grads(params);
    backward_batch(params, &trace, &d_out, &mut grads);
    Ok(grads.flat())
}

/// Outcome of comparing analytic and central-difference gradients.
#[derive(Debug, Clone)]
pub struct GradCheck {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// Per-coordinate `|a - f| / max(|a|, |f|, GRAD_CHECK_FLOOR)`.
    pub relative_errors: Vec<f64>,
    pub max_relative_error: f64,
}

/// Magnitude below which gradient coordinates are compared absolutely.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

pub fn grad_check(params: &NetworkParameters, example: &TrainingExample, kind: LossKind, step: f64) -> Result<GradCheck> {
    if !(step > 0.0) {
        return Err(Error::param("step", "must be positive"));
    }
    let analytic = gradient(params, example, kind)?;
    let objective = |p: &NetworkParameters| -> Result<f64> {
        let out = forward_params(p, &example.input)?;
        loss(out.values(), &example.target, kind)
    };
    let mut probe = params.clone();
    let mut numeric = Vec::with_capacity(analytic.len());
    for i in 0..analytic.len() {
        let orig = *probe.param_mut(i);
        *probe.param_mut(i) = orig + step;
        let up = objective(&probe)?;
        *probe.param_mut(i) = orig - step;
        let down = objective(&probe)?;
        *probe.param_mut(i) = orig;
        numeric.push((up - down) / (2.0 * step));
    }
    let relative_errors: Vec<f64> = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(GRAD_CHECK_FLOOR))
        .collect();
    let max_relative_error = relative_errors.iter().copied().fold(0.0, f64::max);
    Ok(GradCheck {
        analytic,
        numeric,
        relative_errors,
        max_relative_error,
    })
}
