//! Leave-one-out evaluation, experiment sweeps and the data behind the
//! report tables and plots.
//!
//! Every fold derives its own seeds from the master seed and the held-out
//! learner id, so folds are independent of evaluation order.

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use crate::engine::{run_assessment, AssessmentSpec, RecordedOracle, Transcript};
use crate::error::{Error, Result};
use crate::metrics::{Confusion, PrecisionRecall};
use crate::model::{dataset_loss, train, NetworkArchitecture, Predictor, TrainedModel, TrainingConfig};
use crate::ontology::{AssessmentState, KnowledgeState, Mastery};
use crate::seed::{derive_rng, derive_seed};
use crate::simulation::{build_dataset, Cohort, LearnerRecord, SimulationConfig};
use crate::strategies::{DescentScope, StrategyKind};

/// Everything needed to train a fold model and assess the held-out learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Hidden layer widths; two layers of `2n` when absent.
    #[serde(default)]
    pub hidden: Option<Vec<usize>>,
    pub training: TrainingConfig,
    pub simulation: SimulationConfig,
    #[serde(default = "default_floor")]
    pub completeness_floor: f64,
    #[serde(default)]
    pub strategy: StrategyKind,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub descent_scope: DescentScope,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_floor() -> f64 {
    0.8
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_tau() -> f64 {
    0.5
}

impl EvalConfig {
    pub fn new(training: TrainingConfig, simulation: SimulationConfig, strategy: StrategyKind, master_seed: u64) -> Self {
        Self {
            hidden: None,
            training,
            simulation,
            completeness_floor: default_floor(),
            strategy,
            epsilon: default_epsilon(),
            tau: default_tau(),
            descent_scope: DescentScope::default(),
            master_seed,
        }
    }

    pub fn architecture(&self, n_skills: usize) -> Result<NetworkArchitecture> {
        match &self.hidden {
            Some(h) => NetworkArchitecture::with_hidden(n_skills, h),
            None => NetworkArchitecture::default_for(n_skills),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        self.simulation.validate()?;
        self.strategy.validate()?;
        AssessmentSpec::full(self.strategy.clone(), self.epsilon, self.tau, 0).validate()?;
        if !(0.0..=1.0).contains(&self.completeness_floor) {
            return Err(Error::param("completeness_floor", "must be in [0, 1]"));
        }
        Ok(())
    }

    /// Trains on `cohort` with seeds derived from `master` and `key`.
    pub fn train_on(&self, cohort: &Cohort, master: u64, key: &str) -> Result<TrainedModel> {
        let mut sim = self.simulation.clone();
        sim.rng_seed = derive_seed(master, "simulation", key);
        let mut training = self.training.clone();
        training.rng_seed = derive_seed(master, "training", key);
        let dataset = build_dataset(cohort, &sim, self.completeness_floor)?;
        train(&dataset, &self.architecture(cohort.n_skills())?, &training)
    }

    /// Full-assessment spec with a strategy stream keyed by `key`.
    pub fn assessment_spec(&self, master: u64, key: &str) -> AssessmentSpec {
        let mut spec = AssessmentSpec::full(self.strategy.clone(), self.epsilon, self.tau, derive_seed(master, "strategy", key));
        spec.descent_scope = self.descent_scope;
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub learner_id: String,
    pub transcript: Transcript,
    pub iterations: usize,
    /// Error on skills still unassessed at the stop; zero when none are.
    pub rkse_at_stop: f64,
    /// Predictions vs truth on skills still unassessed at the stop.
    pub confusion: Confusion,
    pub precision_recall: PrecisionRecall,
    pub training_learners: Vec<String>,
    pub dataset_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFailure {
    pub learner_id: String,
    pub error: String,
}

/// Summary statistics over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub learners: usize,
    pub skills: usize,
    pub avg_iterations: f64,
    pub max_iterations: usize,
    pub avg_error: f64,
    /// Population standard deviation of the per-fold error.
    pub std_error: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_learners: usize,
    pub n_skills: usize,
    pub config: EvalConfig,
    pub stats: PathStats,
    /// Confusion counts pooled over all folds.
    pub confusion: Confusion,
    pub precision_recall: PrecisionRecall,
    pub error_curve: Vec<f64>,
    pub uncertainty_curve: Vec<f64>,
    pub folds: Vec<FoldResult>,
    pub failures: Vec<FoldFailure>,
    /// Learners not evaluated because their recorded state is incomplete.
    pub skipped: Vec<String>,
}

/// Assesses one learner with a model trained on `training_cohort`.
fn run_fold(
    model: &TrainedModel,
    learner: &LearnerRecord,
    spec: AssessmentSpec,
    tau: f64,
) -> Result<FoldResult> {
    let mut oracle = RecordedOracle::new(learner.knowledge.clone());
    let transcript = run_assessment(model, &mut oracle, spec, None)?;
    let summary = transcript
        .summary
        .as_ref()
        .ok_or_else(|| Error::Data("assessment did not finish".into()))?;
    let unassessed = summary.assessment.unassessed();
    let predicted: Vec<bool> = unassessed.iter().map(|&s| summary.probabilities[s] > tau).collect();
    let truth: Vec<bool> = unassessed
        .iter()
        .map(|&s| learner.knowledge.get(s) == Mastery::Mastered)
        .collect();
    let confusion = Confusion::from_predictions(&predicted, &truth)?;
    Ok(FoldResult {
        learner_id: learner.learner_id.clone(),
        iterations: transcript.questions(),
        rkse_at_stop: transcript.final_rkse().unwrap_or(0.0),
        confusion,
        precision_recall: confusion.precision_recall(),
        training_learners: model.provenance.learner_ids.clone(),
        dataset_fingerprint: model.provenance.dataset_fingerprint.clone(),
        transcript,
    })
}

/// Holds out each learner in turn, trains on the rest and assesses the
/// held-out learner against their recorded state.
pub fn loo_evaluate(cohort: &Cohort, config: &EvalConfig) -> Result<EvalReport> {
    config.validate()?;
    if cohort.len() < 2 {
        return Err(Error::param("cohort", "needs at least two learners"));
    }
    let master = config.master_seed;
    let mut folds = Vec::new();
    let mut failures = Vec::new();
    let mut skipped = Vec::new();
    for learner in cohort.learners() {
        if !learner.knowledge.is_complete() {
            skipped.push(learner.learner_id.clone());
            continue;
        }
        let id = &learner.learner_id;
        let outcome = config
            .train_on(&cohort.without(id), master, id)
            .and_then(|model| run_fold(&model, learner, config.assessment_spec(master, id), config.tau));
        match outcome {
            Ok(fold) => folds.push(fold),
            Err(e @ (Error::Diverged { .. } | Error::NoTrainableLearners | Error::Numeric(_))) => failures.push(FoldFailure {
                learner_id: id.clone(),
                error: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    let (stats, confusion) = aggregate(&folds, cohort.n_skills());
    Ok(EvalReport {
        n_learners: cohort.len(),
        n_skills: cohort.n_skills(),
        config: config.clone(),
        stats,
        confusion,
        precision_recall: confusion.precision_recall(),
        error_curve: rolled_error_curve(&folds),
        uncertainty_curve: rolled_uncertainty_curve(&folds),
        folds,
        failures,
        skipped,
    })
}

/// Table statistics and pooled confusion counts recomputed from folds.
pub fn aggregate(folds: &[FoldResult], n_skills: usize) -> (PathStats, Confusion) {
    let count = folds.len();
    let mean = |f: &dyn Fn(&FoldResult) -> f64| {
        if count == 0 {
            0.0
        } else {
            folds.iter().map(f).sum::<f64>() / count as f64
        }
    };
    let avg_error = mean(&|f| f.rkse_at_stop);
    let variance = mean(&|f| (f.rkse_at_stop - avg_error).powi(2));
    let mut confusion = Confusion::default();
    for f in folds {
        confusion.add(&f.confusion);
    }
    let stats = PathStats {
        learners: count,
        skills: n_skills,
        avg_iterations: mean(&|f| f.iterations as f64),
        max_iterations: folds.iter().map(|f| f.iterations).max().unwrap_or(0),
        avg_error,
        std_error: variance.sqrt(),
        max_error: folds.iter().map(|f| f.rkse_at_stop).fold(0.0, f64::max),
    };
    (stats, confusion)
}

/// Per-iteration value of one learner, held at its last value after the
/// learner's assessment stopped. Iterations count from 1.
fn rolled_value(t: &Transcript, iteration: usize, metric: impl Fn(Option<f64>, usize) -> f64, initial: (Option<f64>, usize)) -> f64 {
    match t.steps.len() {
        0 => metric(initial.0, initial.1),
        s => {
            let step = &t.steps[iteration.min(s) - 1];
            metric(step.rkse_unassessed, step.ksue)
        }
    }
}

fn rolled_curve(folds: &[FoldResult], metric: impl Fn(Option<f64>, usize) -> f64 + Copy) -> Vec<f64> {
    let len = folds.iter().map(|f| f.iterations).max().unwrap_or(0);
    (1..=len)
        .map(|i| {
            let sum: f64 = folds
                .iter()
                .map(|f| {
                    let t = &f.transcript;
                    rolled_value(t, i, metric, (t.initial.rkse_unassessed, t.initial.ksue))
                })
                .sum();
            sum / folds.len() as f64
        })
        .collect()
}

/// Mean error on unassessed skills per iteration, rolling each learner's
/// error forward after their assessment stopped.
pub fn rolled_error_curve(folds: &[FoldResult]) -> Vec<f64> {
    rolled_curve(folds, |rkse, _| rkse.unwrap_or(0.0))
}

/// Mean count of uncertain unassessed skills per iteration, rolled forward.
pub fn rolled_uncertainty_curve(folds: &[FoldResult]) -> Vec<f64> {
    rolled_curve(folds, |_, ksue| ksue as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k: usize,
    pub seed: u64,
    pub sampled: Vec<String>,
    pub mean_error: f64,
    pub mean_iterations: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
    /// `(k, error averaged over seeds)` in the order of the requested `k`.
    pub by_k: Vec<(usize, f64)>,
    /// Rank correlation between `k` and the seed-averaged error.
    pub spearman: Option<f64>,
}

/// Error as a function of training cohort size. For each `k` and seed, `k`
/// learners are sampled; every learner of the cohort is then assessed with
/// a model trained on the sample minus that learner.
pub fn training_size_sweep(cohort: &Cohort, ks: &[usize], seeds: &[u64], config: &EvalConfig) -> Result<SweepTable> {
    config.validate()?;
    if ks.is_empty() || seeds.is_empty() {
        return Err(Error::param("k", "need at least one size and one seed"));
    }
    if let Some(&k) = ks.iter().find(|&&k| k > cohort.len() || k == 0) {
        return Err(Error::param("k", format!("{k} not in 1..={}", cohort.len())));
    }
    let mut cells = Vec::new();
    for &k in ks {
        for &seed in seeds {
            cells.push(sweep_cell(cohort, k, seed, config)?);
        }
    }
    let by_k: Vec<(usize, f64)> = ks
        .iter()
        .map(|&k| {
            let errs: Vec<f64> = cells.iter().filter(|c| c.k == k).map(|c| c.mean_error).collect();
            (k, errs.iter().sum::<f64>() / errs.len() as f64)
        })
        .collect();
    let xs: Vec<f64> = by_k.iter().map(|(k, _)| *k as f64).collect();
    let ys: Vec<f64> = by_k.iter().map(|(_, e)| *e).collect();
    Ok(SweepTable {
        spearman: spearman(&xs, &ys),
        cells,
        by_k,
    })
}

fn sweep_cell(cohort: &Cohort, k: usize, seed: u64, config: &EvalConfig) -> Result<SweepCell> {
    let mut rng = derive_rng(seed, "sweep", &k.to_string());
    let mut picked: Vec<usize> = sample_indices(&mut rng, cohort.len(), k).into_vec();
    picked.sort_unstable();
    let in_sample = |i: usize| picked.binary_search(&i).is_ok();
    let sample = cohort.filter(|i, _| in_sample(i));
    let mut shared: Option<Result<TrainedModel>> = None;
    let mut errors = Vec::new();
    let mut iterations = Vec::new();
    let mut failures = 0;
    for (i, learner) in cohort.learners().iter().enumerate() {
        if !learner.knowledge.is_complete() {
            continue;
        }
        let id = &learner.learner_id;
        let own;
        let model = if in_sample(i) {
            own = config.train_on(&sample.without(id), seed, id);
            &own
        } else {
            shared.get_or_insert_with(|| config.train_on(&sample, seed, ""))
        };
        let model = match model {
            Ok(m) => m,
            Err(Error::Diverged { .. } | Error::NoTrainableLearners | Error::Numeric(_)) => {
                failures += 1;
                continue;
            }
            Err(e) => return Err(Error::Data(e.to_string())),
        };
        let fold = run_fold(model, learner, config.assessment_spec(seed, id), config.tau)?;
        errors.push(fold.rkse_at_stop);
        iterations.push(fold.iterations as f64);
    }
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    Ok(SweepCell {
        k,
        seed,
        sampled: sample.learners().iter().map(|l| l.learner_id.clone()).collect(),
        mean_error: mean(&errors),
        mean_iterations: mean(&iterations),
        failures,
    })
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant or the inputs are shorter than two.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx).powi(2);
        vy += (b - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriPair {
    pub skill: usize,
    /// Fraction of learners with known state who mastered the skill.
    pub empirical: Option<f64>,
    /// Model output with nothing assessed.
    pub apriori: f64,
}

pub fn apriori_comparison<P: Predictor + ?Sized>(model: &P, cohort: &Cohort) -> Result<Vec<AprioriPair>> {
    let n = model.n_skills();
    if cohort.n_skills() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: cohort.n_skills(),
        });
    }
    let apriori = model.predict(&AssessmentState::empty(n))?;
    Ok((0..n)
        .map(|s| {
            let known: Vec<bool> = cohort
                .learners()
                .iter()
                .filter_map(|l| l.knowledge.get(s).as_bool())
                .collect();
            let empirical = (!known.is_empty()).then(|| known.iter().filter(|&&m| m).count() as f64 / known.len() as f64);
            AprioriPair {
                skill: s,
                empirical,
                apriori: apriori.get(s),
            }
        })
        .collect())
}

/// Mean absolute gap over pairs with a known empirical fraction.
pub fn mean_apriori_gap(pairs: &[AprioriPair]) -> Option<f64> {
    let gaps: Vec<f64> = pairs.iter().filter_map(|p| p.empirical.map(|e| (e - p.apriori).abs())).collect();
    (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub architecture: NetworkArchitecture,
    /// Mean objective on examples simulated from held-out learners.
    pub validation_loss: f64,
    pub validation_learners: Vec<String>,
    pub model: TrainedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Best first.
    pub ranked: Vec<SearchResult>,
    pub failures: Vec<(NetworkArchitecture, String)>,
}

/// Trains every candidate on the same learner split and ranks them by
/// validation loss.
pub fn architecture_search(
    cohort: &Cohort,
    candidates: &[NetworkArchitecture],
    config: &EvalConfig,
    validation_fraction: f64,
) -> Result<SearchOutcome> {
    config.validate()?;
    if candidates.is_empty() {
        return Err(Error::param("candidates", "grid is empty"));
    }
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(Error::param("validation_fraction", "must be in (0, 1)"));
    }
    if cohort.len() < 2 {
        return Err(Error::param("cohort", "needs at least two learners"));
    }
    let master = config.master_seed;
    let held = ((cohort.len() as f64 * validation_fraction).round() as usize).clamp(1, cohort.len() - 1);
    let mut rng = derive_rng(master, "split", "");
    let mut validation: Vec<usize> = sample_indices(&mut rng, cohort.len(), held).into_vec();
    validation.sort_unstable();
    let is_val = |i: usize| validation.binary_search(&i).is_ok();
    let train_cohort = cohort.filter(|i, _| !is_val(i));
    let val_cohort = cohort.filter(|i, _| is_val(i));

    let mut val_sim = config.simulation.clone();
    val_sim.rng_seed = derive_seed(master, "simulation", "validation");
    let val_data = build_dataset(&val_cohort, &val_sim, config.completeness_floor)?;

    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for arch in candidates {
        let mut cfg = config.clone();
        cfg.hidden = Some(arch.hidden().to_vec());
        match cfg.train_on(&train_cohort, master, "search") {
            Ok(model) => {
                let loss = dataset_loss(&model.parameters, &val_data.examples, config.training.loss_kind, config.training.mask_unknown)?;
                ranked.push(SearchResult {
                    architecture: arch.clone(),
                    validation_loss: loss,
                    validation_learners: val_data.learner_ids.clone(),
                    model,
                });
            }
            Err(e @ (Error::Diverged { .. } | Error::Numeric(_))) => failures.push((arch.clone(), e.to_string())),
            Err(e) => return Err(e),
        }
    }
    if ranked.is_empty() {
        return Err(Error::Numeric("every candidate architecture diverged".into()));
    }
    ranked.sort_by(|a, b| a.validation_loss.total_cmp(&b.validation_loss));
    Ok(SearchOutcome { ranked, failures })
}

/// Skills x learners mastery matrix in learn order; `None` marks unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub learners: Vec<String>,
    pub rows: Vec<Vec<Option<bool>>>,
}

pub fn mastery_heatmap(cohort: &Cohort) -> Heatmap {
    let rows = (0..cohort.n_skills())
        .map(|s| cohort.learners().iter().map(|l| l.knowledge.get(s).as_bool()).collect())
        .collect();
    Heatmap {
        learners: cohort.learners().iter().map(|l| l.learner_id.clone()).collect(),
        rows,
    }
}

impl Heatmap {
    pub fn from_knowledge(learners: Vec<String>, states: &[KnowledgeState]) -> Self {
        let n = states.first().map_or(0, |k| k.len());
        Heatmap {
            learners,
            rows: (0..n).map(|s| states.iter().map(|k| k.get(s).as_bool()).collect()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConstantPredictor;
    use crate::simulation::LearnerRecord;

    fn learner(id: &str, bits: &[bool]) -> LearnerRecord {
        LearnerRecord {
            learner_id: id.into(),
            knowledge: KnowledgeState::from_bools(bits),
        }
    }

    fn quick_config(seed: u64) -> EvalConfig {
        let training = TrainingConfig {
            learning_rate: 0.5,
            epochs: 30,
            batch_size: 16,
            momentum: 0.9,
            ..TrainingConfig::default()
        };
        let mut cfg = EvalConfig::new(training, SimulationConfig::new(64, 0), StrategyKind::default(), seed);
        cfg.hidden = Some(vec![8]);
        cfg
    }

    #[test]
    fn identical_experts_stop_early_without_error() {
        let cohort = Cohort::new(4, vec![learner("a", &[true; 4]), learner("b", &[true; 4])]).unwrap();
        let report = loo_evaluate(&cohort, &quick_config(1)).unwrap();
        assert_eq!(report.folds.len(), 2);
        for f in &report.folds {
            assert!(f.iterations < 4, "{}", f.iterations);
            assert_eq!(f.rkse_at_stop, 0.0);
        }
    }

    #[test]
    fn beginner_and_expert_must_extrapolate() {
        let cohort = Cohort::new(4, vec![learner("beginner", &[false; 4]), learner("expert", &[true; 4])]).unwrap();
        let report = loo_evaluate(&cohort, &quick_config(2)).unwrap();
        assert!(report.stats.max_error >= 0.5, "{:?}", report.stats);
    }

    #[test]
    fn folds_never_train_on_held_out_learner() {
        let cohort = Cohort::new(
            3,
            vec![learner("x", &[true, false, false]), learner("y", &[true, true, false]), learner("z", &[true, true, true])],
        )
        .unwrap();
        let report = loo_evaluate(&cohort, &quick_config(3)).unwrap();
        for f in &report.folds {
            assert!(!f.training_learners.contains(&f.learner_id));
            assert_eq!(f.training_learners.len(), 2);
        }
        let (stats, confusion) = aggregate(&report.folds, 3);
        assert_eq!(stats, report.stats);
        assert_eq!(confusion, report.confusion);
    }

    #[test]
    fn rolled_curve_holds_final_values() {
        let cohort = Cohort::new(4, vec![learner("a", &[true, false, true, false])]).unwrap();
        let spec = AssessmentSpec::full(StrategyKind::MaxUncertainty, 0.1, 0.5, 0);
        let mut oracle = RecordedOracle::new(cohort.learners()[0].knowledge.clone());
        let transcript = run_assessment(ConstantPredictor::uninformed(4), &mut oracle, spec, None).unwrap();
        let fold = FoldResult {
            learner_id: "a".into(),
            iterations: transcript.questions(),
            rkse_at_stop: 0.0,
            confusion: Confusion::default(),
            precision_recall: PrecisionRecall::default(),
            training_learners: vec![],
            dataset_fingerprint: String::new(),
            transcript,
        };
        let curve = rolled_error_curve(std::slice::from_ref(&fold));
        let direct: Vec<f64> = fold.transcript.steps.iter().map(|s| s.rkse_unassessed.unwrap()).collect();
        assert_eq!(curve, direct);

        let mut short = fold.clone();
        short.transcript.steps.truncate(1);
        short.iterations = 1;
        let curve = rolled_error_curve(&[fold.clone(), short.clone()]);
        assert_eq!(curve.len(), 4);
        for (t, v) in curve.iter().enumerate() {
            let a = fold.transcript.steps[t].rkse_unassessed.unwrap();
            let b = short.transcript.steps[0].rkse_unassessed.unwrap();
            assert_eq!(*v, (a + b) / 2.0);
        }
        assert_eq!(rolled_error_curve(&[short.clone(), short.clone()]), vec![short.transcript.steps[0].rkse_unassessed.unwrap()]);
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0], &[5.0, 5.0]), None);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(r > 0.9 && r < 1.0);
    }

    #[test]
    fn apriori_pairs() {
        let cohort = Cohort::new(
            2,
            vec![
                learner("a", &[true, false]),
                LearnerRecord {
                    learner_id: "b".into(),
                    knowledge: KnowledgeState::new(vec![Mastery::Mastered, Mastery::UnknownTarget]),
                },
            ],
        )
        .unwrap();
        let pairs = apriori_comparison(&ConstantPredictor::uninformed(2), &cohort).unwrap();
        assert_eq!(pairs[0].empirical, Some(1.0));
        assert_eq!(pairs[1].empirical, Some(0.0));
        assert_eq!(pairs[0].apriori, 0.5);
        let empty = Cohort::new(2, vec![]).unwrap();
        let pairs = apriori_comparison(&ConstantPredictor::uninformed(2), &empty).unwrap();
        assert!(pairs.iter().all(|p| p.empirical.is_none()));
        assert_eq!(mean_apriori_gap(&pairs), None);
    }

    #[test]
    fn heatmap_shape_and_unknowns() {
        let cohort = Cohort::new(
            3,
            vec![LearnerRecord {
                learner_id: "a".into(),
                knowledge: KnowledgeState::new(vec![Mastery::Mastered, Mastery::UnknownTarget, Mastery::Unmastered]),
            }],
        )
        .unwrap();
        let h = mastery_heatmap(&cohort);
        assert_eq!(h.rows, vec![vec![Some(true)], vec![None], vec![Some(false)]]);
    }

    #[test]
    fn single_candidate_search() {
        let cohort = Cohort::new(
            3,
            (0..6).map(|i| learner(&format!("l{i}"), &[i > 0, i > 2, i > 4])).collect(),
        )
        .unwrap();
        let arch = NetworkArchitecture::with_hidden(3, &[4]).unwrap();
        let out = architecture_search(&cohort, std::slice::from_ref(&arch), &quick_config(0), 0.34).unwrap();
        assert_eq!(out.ranked.len(), 1);
        assert_eq!(out.ranked[0].architecture, arch);
        let again = architecture_search(&cohort, std::slice::from_ref(&arch), &quick_config(0), 0.34).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn sweep_rejects_oversized_k() {
        let cohort = Cohort::new(2, vec![learner("a", &[true, false]), learner("b", &[false, false])]).unwrap();
        assert!(matches!(training_size_sweep(&cohort, &[3], &[0], &quick_config(0)), Err(Error::Parameter { .. })));
    }
}
