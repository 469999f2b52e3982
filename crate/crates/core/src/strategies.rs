//! Next-question selection, learnable-skill sets and stopping rules.
//!
//! Ties are always broken towards the lowest skill index.

use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{is_uncertain, ksue, residual_uncertainty, MetricScope};
use crate::model::Predictor;
use crate::ontology::{check_epsilon, check_len, clamp_assessed, AssessmentState, ProbabilityVector, SkillAssessment};
use crate::seed::Rng;

/// Measure whose expected value the descent strategies minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyMeasure {
    /// Count of uncertain skills.
    Ksue,
    /// Mean of `min(p, 1 - p)`.
    #[default]
    Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    Random,
    MaxUncertainty,
    ExpectedDescent {
        #[serde(default)]
        measure: UncertaintyMeasure,
        #[serde(default)]
        candidate_cap: Option<usize>,
    },
    /// Expected descent over the `top_k` most uncertain skills.
    Hybrid {
        #[serde(default = "default_top_k")]
        top_k: usize,
        #[serde(default)]
        measure: UncertaintyMeasure,
    },
}

fn default_top_k() -> usize {
    8
}

impl Default for StrategyKind {
    fn default() -> Self {
        StrategyKind::Hybrid {
            top_k: default_top_k(),
            measure: UncertaintyMeasure::Residual,
        }
    }
}

impl StrategyKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            StrategyKind::Hybrid { top_k: 0, .. } => Err(Error::param("top_k", "must be at least 1")),
            StrategyKind::ExpectedDescent {
                candidate_cap: Some(0),
                ..
            } => Err(Error::param("candidate_cap", "must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// Skills over which the expected-descent measures are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DescentScope {
    /// Skills unassessed before the hypothetical answer (includes the
    /// queried skill).
    #[default]
    Unassessed,
    AllSkills,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopScope {
    AllSkills,
    NextSession { length: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub epsilon: f64,
    pub scope: StopScope,
}

impl StopRule {
    pub fn all_skills(epsilon: f64) -> Self {
        Self {
            epsilon,
            scope: StopScope::AllSkills,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if let StopScope::NextSession { length: 0 } = self.scope {
            return Err(Error::param("session_length", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub length: usize,
    pub exploration: f64,
    pub epsilon: f64,
    pub rng_seed: u64,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.length == 0 {
            return Err(Error::param("session_length", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.exploration) {
            return Err(Error::param("exploration", "must be in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FullyAssessed,
    /// No unassessed skill is uncertain.
    Certain,
    /// Enough predicted learnable skills for the session.
    SessionPlanFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopDecision {
    pub stop: bool,
    pub reason: Option<StopReason>,
}

fn require_candidates(candidates: &[usize]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::NoQuestion);
    }
    Ok(())
}

/// Uniform choice among unassessed skills.
pub fn pick_random(assessment: &AssessmentState, rng: &mut Rng) -> Result<usize> {
    random_among(&assessment.unassessed(), rng)
}

fn random_among(candidates: &[usize], rng: &mut Rng) -> Result<usize> {
    require_candidates(candidates)?;
    Ok(candidates[rng.gen_range(0..candidates.len())])
}

/// Unassessed skill with probability closest to 0.5.
pub fn pick_max_uncertainty(probs: &ProbabilityVector, assessment: &AssessmentState) -> Result<usize> {
    check_len(probs.len(), assessment.len())?;
    max_uncertainty_among(probs, &assessment.unassessed())
}

fn max_uncertainty_among(probs: &ProbabilityVector, candidates: &[usize]) -> Result<usize> {
    require_candidates(candidates)?;
    Ok(most_uncertain(probs, candidates, 1)[0])
}

/// The `k` candidates closest to 0.5, closest first, ties to lower index.
fn most_uncertain(probs: &ProbabilityVector, candidates: &[usize], k: usize) -> Vec<usize> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|&a, &b| {
        let da = (probs.get(a) - 0.5).abs();
        let db = (probs.get(b) - 0.5).abs();
        da.total_cmp(&db).then(a.cmp(&b))
    });
    sorted.truncate(k);
    sorted
}

/// Clamped model output for an assessment state.
pub fn clamped_prediction<P: Predictor + ?Sized>(model: &P, assessment: &AssessmentState) -> Result<ProbabilityVector> {
    clamp_assessed(&model.predict(assessment)?, assessment)
}

fn measure_value(probs: &ProbabilityVector, epsilon: f64, measure: UncertaintyMeasure, scope: MetricScope) -> Result<f64> {
    match measure {
        UncertaintyMeasure::Ksue => Ok(ksue(probs, epsilon, scope)? as f64),
        UncertaintyMeasure::Residual => residual_uncertainty(probs, scope),
    }
}

/// Expected uncertainty after asking `skill`: the measure on each
/// hypothetical answer, weighted by the current probability of that answer.
pub fn expected_uncertainty<P: Predictor + ?Sized>(
    model: &P,
    assessment: &AssessmentState,
    skill: usize,
    epsilon: f64,
    measure: UncertaintyMeasure,
    scope: DescentScope,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    let current = clamped_prediction(model, assessment)?;
    expected_uncertainty_from(model, assessment, &current, skill, epsilon, measure, scope)
}

fn expected_uncertainty_from<P: Predictor + ?Sized>(
    model: &P,
    assessment: &AssessmentState,
    current: &ProbabilityVector,
    skill: usize,
    epsilon: f64,
    measure: UncertaintyMeasure,
    scope: DescentScope,
) -> Result<f64> {
    if assessment.get(skill).is_assessed() {
        return Err(Error::AlreadyAssessed(skill));
    }
    let metric_scope = match scope {
        DescentScope::Unassessed => MetricScope::UnassessedOnly(assessment),
        DescentScope::AllSkills => MetricScope::AllSkills,
    };
    let p = current.get(skill);
    let pos = assessment.with(skill, SkillAssessment::Mastered);
    let neg = assessment.with(skill, SkillAssessment::Unmastered);
    let u_pos = measure_value(&clamped_prediction(model, &pos)?, epsilon, measure, metric_scope)?;
    let u_neg = measure_value(&clamped_prediction(model, &neg)?, epsilon, measure, metric_scope)?;
    Ok(p * u_pos + (1.0 - p) * u_neg)
}

fn argmin_descent<P: Predictor + ?Sized>(
    model: &P,
    assessment: &AssessmentState,
    candidates: &[usize],
    epsilon: f64,
    measure: UncertaintyMeasure,
    scope: DescentScope,
) -> Result<usize> {
    require_candidates(candidates)?;
    let current = clamped_prediction(model, assessment)?;
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    let mut best = (f64::INFINITY, sorted[0]);
    for &s in &sorted {
        let d = expected_uncertainty_from(model, assessment, &current, s, epsilon, measure, scope)?;
        if d < best.0 {
            best = (d, s);
        }
    }
    Ok(best.1)
}

/// Skill minimizing the expected uncertainty, optionally over a seeded
/// uniform sample of `candidate_cap` unassessed skills.
pub fn pick_expected_descent<P: Predictor + ?Sized>(
    model: &P,
    assessment: &AssessmentState,
    epsilon: f64,
    measure: UncertaintyMeasure,
    candidate_cap: Option<usize>,
    scope: DescentScope,
    rng: &mut Rng,
) -> Result<usize> {
    check_epsilon(epsilon)?;
    let candidates = capped(&assessment.unassessed(), candidate_cap, rng);
    argmin_descent(model, assessment, &candidates, epsilon, measure, scope)
}

fn capped(candidates: &[usize], cap: Option<usize>, rng: &mut Rng) -> Vec<usize> {
    match cap {
        Some(c) if c < candidates.len() => sample_indices(rng, candidates.len(), c)
            .into_iter()
            .map(|i| candidates[i])
            .collect(),
        _ => candidates.to_vec(),
    }
}

/// Expected descent restricted to the `top_k` most uncertain unassessed
/// skills.
pub fn pick_hybrid<P: Predictor + ?Sized>(
    model: &P,
    assessment: &AssessmentState,
    epsilon: f64,
    measure: UncertaintyMeasure,
    top_k: usize,
    scope: DescentScope,
) -> Result<usize> {
    check_epsilon(epsilon)?;
    let probs = clamped_prediction(model, assessment)?;
    let top = most_uncertain(&probs, &assessment.unassessed(), top_k);
    argmin_descent(model, assessment, &top, epsilon, measure, scope)
}

/// Applies `strategy` to an explicit candidate set of unassessed skills.
/// Returns the pick and the candidates actually scored.
#[allow(clippy::too_many_arguments)]
pub fn pick_among<P: Predictor + ?Sized>(
    strategy: &StrategyKind,
    model: &P,
    assessment: &AssessmentState,
    probs: &ProbabilityVector,
    candidates: &[usize],
    epsilon: f64,
    scope: DescentScope,
    rng: &mut Rng,
) -> Result<(usize, Vec<usize>)> {
    require_candidates(candidates)?;
    if let Some(&s) = candidates.iter().find(|&&s| assessment.get(s).is_assessed()) {
        return Err(Error::AlreadyAssessed(s));
    }
    match strategy {
        StrategyKind::Random => Ok((random_among(candidates, rng)?, candidates.to_vec())),
        StrategyKind::MaxUncertainty => Ok((max_uncertainty_among(probs, candidates)?, candidates.to_vec())),
        StrategyKind::ExpectedDescent { measure, candidate_cap } => {
            let pool = capped(candidates, *candidate_cap, rng);
            Ok((argmin_descent(model, assessment, &pool, epsilon, *measure, scope)?, pool))
        }
        StrategyKind::Hybrid { top_k, measure } => {
            let pool = most_uncertain(probs, candidates, *top_k);
            Ok((argmin_descent(model, assessment, &pool, epsilon, *measure, scope)?, pool))
        }
    }
}

/// Confirmed next learnable skills: unmastered skills preceded only by
/// assessed skills.
pub fn next_learnable(assessment: &AssessmentState) -> Vec<usize> {
    let mut out = Vec::new();
    for (j, a) in assessment.values().iter().enumerate() {
        match a {
            SkillAssessment::Unassessed => break,
            SkillAssessment::Unmastered => out.push(j),
            SkillAssessment::Mastered => {}
        }
    }
    out
}

/// Predicted next learnable skills: `p <= epsilon`, preceded only by skills
/// outside the open band `(epsilon, 1 - epsilon)`.
pub fn predicted_next_learnable(probs: &ProbabilityVector, epsilon: f64) -> Result<Vec<usize>> {
    check_epsilon(epsilon)?;
    let mut out = Vec::new();
    for (j, &p) in probs.values().iter().enumerate() {
        if p > epsilon && p < 1.0 - epsilon {
            break;
        }
        if p <= epsilon {
            out.push(j);
        }
    }
    Ok(out)
}

pub fn should_stop(probs: &ProbabilityVector, assessment: &AssessmentState, rule: &StopRule) -> Result<StopDecision> {
    rule.validate()?;
    check_len(probs.len(), assessment.len())?;
    let stop = |reason| StopDecision {
        stop: true,
        reason: Some(reason),
    };
    if assessment.is_complete() {
        return Ok(stop(StopReason::FullyAssessed));
    }
    if let StopScope::NextSession { length } = rule.scope {
        if predicted_next_learnable(probs, rule.epsilon)?.len() >= length {
            return Ok(stop(StopReason::SessionPlanFound));
        }
    }
    if ksue(probs, rule.epsilon, MetricScope::UnassessedOnly(assessment))? == 0 {
        return Ok(stop(StopReason::Certain));
    }
    Ok(StopDecision {
        stop: false,
        reason: None,
    })
}

/// Candidate window for a confirmation step: the first `length` predicted
/// learnable skills, topped up with the earliest uncertain unassessed skills,
/// then restricted to unassessed skills.
pub fn session_window(
    probs: &ProbabilityVector,
    assessment: &AssessmentState,
    epsilon: f64,
    length: usize,
) -> Result<Vec<usize>> {
    check_len(probs.len(), assessment.len())?;
    let mut window: Vec<usize> = predicted_next_learnable(probs, epsilon)?;
    window.truncate(length);
    for s in 0..probs.len() {
        if window.len() >= length {
            break;
        }
        if !assessment.get(s).is_assessed() && is_uncertain(probs.get(s), epsilon) && !window.contains(&s) {
            window.push(s);
        }
    }
    window.retain(|&s| !assessment.get(s).is_assessed());
    window.sort_unstable();
    Ok(window)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionPick {
    pub skill: usize,
    pub explored: bool,
    pub candidates: Vec<usize>,
}

/// One exploration-vs-confirmation step: with probability `exploration`
/// the strategy runs over all unassessed skills, otherwise over the session
/// window.
pub fn pick_session<P: Predictor + ?Sized>(
    model: &P,
    assessment: &AssessmentState,
    session: &SessionConfig,
    strategy: &StrategyKind,
    scope: DescentScope,
    rng: &mut Rng,
) -> Result<SessionPick> {
    session.validate()?;
    let unassessed = assessment.unassessed();
    require_candidates(&unassessed)?;
    let probs = clamped_prediction(model, assessment)?;
    let explored = rng.gen::<f64>() < session.exploration;
    let mut pool = if explored {
        unassessed.clone()
    } else {
        session_window(&probs, assessment, session.epsilon, session.length)?
    };
    if pool.is_empty() {
        pool = unassessed;
    }
    let (skill, candidates) = pick_among(strategy, model, assessment, &probs, &pool, session.epsilon, scope, rng)?;
    Ok(SessionPick {
        skill,
        explored,
        candidates,
    })
}
