//! Assessment runs: the ask/answer loop, transcripts and learner
//! corrections.
//!
//! [`AssessmentRun`] is a step machine. It holds the pending question and
//! advances one answer at a time, so a caller can drive it synchronously
//! through a [`Respondent`] or suspend it between requests.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ksue, rkse, MetricScope};
use crate::model::Predictor;
use crate::ontology::{
    check_epsilon, check_len, threshold, AssessmentState, KnowledgeState, Mastery, ProbabilityVector, SkillAssessment,
};
use crate::seed::{rng_from_seed, Rng};
use crate::simulation::LearnerRecord;
use crate::strategies::{
    clamped_prediction, pick_among, pick_session, predicted_next_learnable, should_stop, DescentScope, SessionConfig,
    StopReason, StopRule, StopScope, StrategyKind,
};

pub const TRANSCRIPT_VERSION: u32 = 1;

/// Answers questions about one learner.
pub trait Respondent {
    /// Whether the learner has mastered `skill`.
    fn answer(&mut self, skill: usize) -> Result<bool>;

    /// Ground truth, when the respondent knows it.
    fn truth(&self) -> Option<&KnowledgeState> {
        None
    }
}

/// Answers from a recorded knowledge state.
#[derive(Debug, Clone)]
pub struct RecordedOracle {
    knowledge: KnowledgeState,
}

impl RecordedOracle {
    pub fn new(knowledge: KnowledgeState) -> Self {
        Self { knowledge }
    }
}

impl Respondent for RecordedOracle {
    fn answer(&mut self, skill: usize) -> Result<bool> {
        if skill >= self.knowledge.len() {
            return Err(Error::Respondent(format!("skill {skill} out of range")));
        }
        self.knowledge
            .get(skill)
            .as_bool()
            .ok_or_else(|| Error::Respondent(format!("recorded mastery of skill {skill} is unknown")))
    }

    fn truth(&self) -> Option<&KnowledgeState> {
        self.knowledge.is_complete().then_some(&self.knowledge)
    }
}

/// Answers from a fixed list, in order.
#[derive(Debug, Clone)]
pub struct Scripted {
    answers: VecDeque<bool>,
}

impl Scripted {
    pub fn new(answers: impl IntoIterator<Item = bool>) -> Self {
        Self {
            answers: answers.into_iter().collect(),
        }
    }
}

impl Respondent for Scripted {
    fn answer(&mut self, skill: usize) -> Result<bool> {
        self.answers
            .pop_front()
            .ok_or_else(|| Error::Respondent(format!("script exhausted before skill {skill}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssessmentMode {
    /// Assess until every unassessed skill is certain.
    Full,
    /// Assess until the next `length` learnable skills are known.
    Session { length: usize, exploration: f64 },
}

/// Everything that determines a run besides the model and the answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentSpec {
    pub mode: AssessmentMode,
    #[serde(default)]
    pub strategy: StrategyKind,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub descent_scope: DescentScope,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_tau() -> f64 {
    0.5
}

impl AssessmentSpec {
    pub fn full(strategy: StrategyKind, epsilon: f64, tau: f64, rng_seed: u64) -> Self {
        Self {
            mode: AssessmentMode::Full,
            strategy,
            epsilon,
            tau,
            descent_scope: DescentScope::default(),
            rng_seed,
        }
    }

    pub fn session(session: &SessionConfig, strategy: StrategyKind, tau: f64) -> Self {
        Self {
            mode: AssessmentMode::Session {
                length: session.length,
                exploration: session.exploration,
            },
            strategy,
            epsilon: session.epsilon,
            tau,
            descent_scope: DescentScope::default(),
            rng_seed: session.rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::param("tau", format!("{} not in (0, 1)", self.tau)));
        }
        self.strategy.validate()?;
        if let Some(s) = self.session_config() {
            s.validate()?;
        }
        Ok(())
    }

    pub fn stop_rule(&self) -> StopRule {
        let scope = match self.mode {
            AssessmentMode::Full => StopScope::AllSkills,
            AssessmentMode::Session { length, .. } => StopScope::NextSession { length },
        };
        StopRule {
            epsilon: self.epsilon,
            scope,
        }
    }

    fn session_config(&self) -> Option<SessionConfig> {
        match self.mode {
            AssessmentMode::Full => None,
            AssessmentMode::Session { length, exploration } => Some(SessionConfig {
                length,
                exploration,
                epsilon: self.epsilon,
                rng_seed: self.rng_seed,
            }),
        }
    }
}

/// State before the first question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialSnapshot {
    pub assessment: AssessmentState,
    pub probabilities: Vec<f64>,
    pub ksue: usize,
    pub rkse_unassessed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub iteration: usize,
    pub skill: usize,
    pub answer: bool,
    /// Clamped probabilities after the answer.
    pub probabilities: Vec<f64>,
    /// Uncertain skills among those still unassessed.
    pub ksue: usize,
    /// Error on the still-unassessed skills, when the truth is known.
    pub rkse_unassessed: Option<f64>,
    /// Set for session runs.
    pub explored: Option<bool>,
    pub candidates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunEnd {
    Stopped { reason: StopReason },
    Failed { message: String },
}

impl RunEnd {
    pub fn stop_reason(&self) -> Option<StopReason> {
        match self {
            RunEnd::Stopped { reason } => Some(*reason),
            RunEnd::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub end: RunEnd,
    pub assessment: AssessmentState,
    pub probabilities: Vec<f64>,
    pub predicted: Vec<bool>,
    pub questions: usize,
    pub tau: f64,
    pub epsilon: f64,
    /// Session plan; empty for full runs.
    pub plan: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub version: u32,
    pub n_skills: usize,
    pub spec: AssessmentSpec,
    pub initial: InitialSnapshot,
    pub steps: Vec<TranscriptStep>,
    pub summary: Option<TranscriptSummary>,
}

impl Transcript {
    pub fn questions(&self) -> usize {
        self.steps.len()
    }

    pub fn asked(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.skill).collect()
    }

    /// Error on unassessed skills at the end of the run.
    pub fn final_rkse(&self) -> Option<f64> {
        self.steps.last().map_or(self.initial.rkse_unassessed, |s| s.rkse_unassessed)
    }
}

/// The question currently awaiting an answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingQuestion {
    pub skill: usize,
    pub explored: Option<bool>,
    pub candidates: Vec<usize>,
}

pub struct AssessmentRun<M: Predictor> {
    model: M,
    spec: AssessmentSpec,
    truth: Option<KnowledgeState>,
    assessment: AssessmentState,
    current: ProbabilityVector,
    rng: Rng,
    pending: Option<PendingQuestion>,
    transcript: Transcript,
}

impl<M: Predictor> AssessmentRun<M> {
    /// Starts a run from `prior` (all unassessed when `None`). Prior entries
    /// are treated as settled and never asked.
    pub fn start(model: M, spec: AssessmentSpec, prior: Option<AssessmentState>, truth: Option<KnowledgeState>) -> Result<Self> {
        spec.validate()?;
        let n = model.n_skills();
        let assessment = prior.unwrap_or_else(|| AssessmentState::empty(n));
        check_len(n, assessment.len())?;
        if let Some(t) = &truth {
            check_len(n, t.len())?;
            if !t.is_complete() {
                return Err(Error::Data("truth with unknown entries".into()));
            }
        }
        let current = clamped_prediction(&model, &assessment)?;
        let initial = InitialSnapshot {
            assessment: assessment.clone(),
            probabilities: current.values().to_vec(),
            ksue: ksue(&current, spec.epsilon, MetricScope::UnassessedOnly(&assessment))?,
            rkse_unassessed: unassessed_error(&current, &assessment, truth.as_ref(), spec.tau)?,
        };
        let transcript = Transcript {
            version: TRANSCRIPT_VERSION,
            n_skills: n,
            spec: spec.clone(),
            initial,
            steps: Vec::new(),
            summary: None,
        };
        let mut run = Self {
            rng: rng_from_seed(spec.rng_seed),
            model,
            spec,
            truth,
            assessment,
            current,
            pending: None,
            transcript,
        };
        run.advance()?;
        Ok(run)
    }

    pub fn pending(&self) -> Option<&PendingQuestion> {
        self.pending.as_ref()
    }

    pub fn is_complete(&self) -> bool {
        self.transcript.summary.is_some()
    }

    pub fn assessment(&self) -> &AssessmentState {
        &self.assessment
    }

    /// Current clamped probabilities.
    pub fn probabilities(&self) -> &ProbabilityVector {
        &self.current
    }

    pub fn ksue(&self) -> usize {
        ksue(&self.current, self.spec.epsilon, MetricScope::UnassessedOnly(&self.assessment)).unwrap_or(0)
    }

    pub fn spec(&self) -> &AssessmentSpec {
        &self.spec
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    /// Records the answer to the pending question and moves to the next one.
    pub fn answer(&mut self, skill: usize, mastered: bool) -> Result<()> {
        let pending = match &self.pending {
            Some(p) if p.skill == skill => self.pending.take().unwrap_or_else(|| unreachable!()),
            other => {
                return Err(Error::UnexpectedAnswer {
                    expected: other.as_ref().map(|p| p.skill),
                    actual: skill,
                })
            }
        };
        self.assessment.set(skill, SkillAssessment::from_answer(mastered));
        self.current = clamped_prediction(&self.model, &self.assessment)?;
        let scope = MetricScope::UnassessedOnly(&self.assessment);
        let rkse_unassessed = unassessed_error(&self.current, &self.assessment, self.truth.as_ref(), self.spec.tau)?;
        self.transcript.steps.push(TranscriptStep {
            iteration: self.transcript.steps.len() + 1,
            skill,
            answer: mastered,
            probabilities: self.current.values().to_vec(),
            ksue: ksue(&self.current, self.spec.epsilon, scope)?,
            rkse_unassessed,
            explored: pending.explored,
            candidates: pending.candidates,
        });
        self.advance()
    }

    /// Ends the run early, e.g. after a respondent failure.
    pub fn abort(&mut self, message: impl Into<String>) -> Result<()> {
        if self.is_complete() {
            return Ok(());
        }
        self.pending = None;
        self.finish(RunEnd::Failed {
            message: message.into(),
        })
    }

    fn advance(&mut self) -> Result<()> {
        let decision = should_stop(&self.current, &self.assessment, &self.spec.stop_rule())?;
        if let Some(reason) = decision.reason {
            return self.finish(RunEnd::Stopped { reason });
        }
        let question = match self.spec.session_config() {
            None => {
                let candidates = self.assessment.unassessed();
                let (skill, candidates) = pick_among(
                    &self.spec.strategy,
                    &self.model,
                    &self.assessment,
                    &self.current,
                    &candidates,
                    self.spec.epsilon,
                    self.spec.descent_scope,
                    &mut self.rng,
                )?;
                PendingQuestion {
                    skill,
                    explored: None,
                    candidates,
                }
            }
            Some(session) => {
                let pick = pick_session(
                    &self.model,
                    &self.assessment,
                    &session,
                    &self.spec.strategy,
                    self.spec.descent_scope,
                    &mut self.rng,
                )?;
                PendingQuestion {
                    skill: pick.skill,
                    explored: Some(pick.explored),
                    candidates: pick.candidates,
                }
            }
        };
        self.pending = Some(question);
        Ok(())
    }

    fn finish(&mut self, end: RunEnd) -> Result<()> {
        let plan = match self.spec.mode {
            AssessmentMode::Full => Vec::new(),
            AssessmentMode::Session { length, .. } => {
                let mut plan = predicted_next_learnable(&self.current, self.spec.epsilon)?;
                plan.truncate(length);
                plan
            }
        };
        self.transcript.summary = Some(TranscriptSummary {
            end,
            assessment: self.assessment.clone(),
            probabilities: self.current.values().to_vec(),
            predicted: threshold(&self.current, self.spec.tau)?,
            questions: self.transcript.steps.len(),
            tau: self.spec.tau,
            epsilon: self.spec.epsilon,
            plan,
        });
        Ok(())
    }
}

/// Error on unassessed skills; zero once nothing is left unassessed.
fn unassessed_error(
    probs: &ProbabilityVector,
    assessment: &AssessmentState,
    truth: Option<&KnowledgeState>,
    tau: f64,
) -> Result<Option<f64>> {
    match truth {
        None => Ok(None),
        Some(_) if assessment.is_complete() => Ok(Some(0.0)),
        Some(t) => rkse(probs, t, tau, MetricScope::UnassessedOnly(assessment)).map(Some),
    }
}

/// Drives a run to completion against `respondent`. A respondent failure
/// ends the transcript with a failed stop reason instead of an error.
pub fn run_assessment<M: Predictor, R: Respondent + ?Sized>(
    model: M,
    respondent: &mut R,
    spec: AssessmentSpec,
    prior: Option<AssessmentState>,
) -> Result<Transcript> {
    let mut run = AssessmentRun::start(model, spec, prior, respondent.truth().cloned())?;
    while let Some(skill) = run.pending().map(|p| p.skill) {
        match respondent.answer(skill) {
            Ok(mastered) => run.answer(skill, mastered)?,
            Err(e) => run.abort(e.to_string())?,
        }
    }
    Ok(run.into_transcript())
}

pub fn run_full_assessment<M: Predictor, R: Respondent + ?Sized>(
    model: M,
    respondent: &mut R,
    strategy: StrategyKind,
    stop: &StopRule,
    tau: f64,
    rng_seed: u64,
) -> Result<Transcript> {
    if stop.scope != StopScope::AllSkills {
        return Err(Error::param("stop.scope", "full assessment requires the all-skills scope"));
    }
    run_assessment(model, respondent, AssessmentSpec::full(strategy, stop.epsilon, tau, rng_seed), None)
}

/// Runs one session assessment and returns the session plan with the
/// transcript.
pub fn run_session_assessment<M: Predictor, R: Respondent + ?Sized>(
    model: M,
    respondent: &mut R,
    session: &SessionConfig,
    strategy: StrategyKind,
    tau: f64,
    prior: Option<AssessmentState>,
) -> Result<(Vec<usize>, Transcript)> {
    let transcript = run_assessment(model, respondent, AssessmentSpec::session(session, strategy, tau), prior)?;
    let plan = transcript.summary.as_ref().map(|s| s.plan.clone()).unwrap_or_default();
    Ok((plan, transcript))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub skill: usize,
    pub mastered: bool,
}

/// Full corrected knowledge state for the training pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainingRecord {
    pub knowledge: KnowledgeState,
    pub user_verified: bool,
}

impl RetrainingRecord {
    pub fn to_learner(&self, learner_id: impl Into<String>) -> LearnerRecord {
        LearnerRecord {
            learner_id: learner_id.into(),
            knowledge: self.knowledge.clone(),
        }
    }
}

/// Applies learner corrections to the final prediction of a completed run.
/// Answered skills cannot be corrected.
pub fn apply_correction(transcript: &Transcript, corrections: &[Correction]) -> Result<(KnowledgeState, RetrainingRecord)> {
    let summary = transcript
        .summary
        .as_ref()
        .ok_or_else(|| Error::Correction("assessment has not finished".into()))?;
    let mut knowledge = KnowledgeState::from_bools(&summary.predicted);
    for c in corrections {
        if c.skill >= transcript.n_skills {
            return Err(Error::Correction(format!("skill {} out of range", c.skill)));
        }
        if summary.assessment.get(c.skill).is_assessed() {
            return Err(Error::Correction(format!(
                "skill {} was answered directly; only predicted skills can be corrected",
                c.skill
            )));
        }
        knowledge.set(c.skill, Mastery::from_bool(c.mastered));
    }
    let record = RetrainingRecord {
        knowledge: knowledge.clone(),
        user_verified: true,
    };
    Ok((knowledge, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConstantPredictor;
    use crate::strategies::UncertaintyMeasure;

    /// 0.5 everywhere until something is answered, then 0.99.
    struct SnapAfterFirst(usize);

    impl Predictor for SnapAfterFirst {
        fn n_skills(&self) -> usize {
            self.0
        }
        fn predict(&self, a: &AssessmentState) -> Result<ProbabilityVector> {
            ProbabilityVector::constant(self.0, if a.assessed_count() == 0 { 0.5 } else { 0.99 })
        }
    }

    fn strategies() -> Vec<StrategyKind> {
        vec![
            StrategyKind::Random,
            StrategyKind::MaxUncertainty,
            StrategyKind::ExpectedDescent {
                measure: UncertaintyMeasure::Ksue,
                candidate_cap: None,
            },
            StrategyKind::default(),
        ]
    }

    fn bools(n: usize, f: impl Fn(usize) -> bool) -> KnowledgeState {
        KnowledgeState::from_bools(&(0..n).map(f).collect::<Vec<_>>())
    }

    #[test]
    fn stub_asks_every_question() {
        for strategy in strategies() {
            let mut oracle = RecordedOracle::new(bools(6, |i| i % 2 == 0));
            let t = run_full_assessment(ConstantPredictor::uninformed(6), &mut oracle, strategy, &StopRule::all_skills(0.1), 0.5, 3).unwrap();
            assert_eq!(t.questions(), 6);
            let summary = t.summary.unwrap();
            assert_eq!(summary.end.stop_reason(), Some(StopReason::FullyAssessed));
            assert_eq!(summary.predicted, vec![true, false, true, false, true, false]);
        }
    }

    #[test]
    fn snapping_model_stops_after_one_question() {
        let mut oracle = RecordedOracle::new(bools(5, |_| true));
        let t = run_full_assessment(SnapAfterFirst(5), &mut oracle, StrategyKind::default(), &StopRule::all_skills(0.1), 0.5, 0).unwrap();
        assert_eq!(t.questions(), 1);
        assert_eq!(t.summary.unwrap().end.stop_reason(), Some(StopReason::Certain));
    }

    #[test]
    fn transcript_answers_follow_oracle() {
        let truth = bools(7, |i| i < 3);
        let mut oracle = RecordedOracle::new(truth.clone());
        let t = run_full_assessment(ConstantPredictor::uninformed(7), &mut oracle, StrategyKind::Random, &StopRule::all_skills(0.1), 0.5, 11).unwrap();
        for (i, step) in t.steps.iter().enumerate() {
            assert_eq!(step.iteration, i + 1);
            assert_eq!(Some(step.answer), truth.get(step.skill).as_bool());
        }
        let mut asked = t.asked();
        asked.sort_unstable();
        asked.dedup();
        assert_eq!(asked.len(), t.questions());
    }

    #[test]
    fn ksue_decreases_by_one_with_stub() {
        let mut oracle = RecordedOracle::new(bools(5, |_| false));
        let t = run_full_assessment(ConstantPredictor::uninformed(5), &mut oracle, StrategyKind::MaxUncertainty, &StopRule::all_skills(0.1), 0.5, 0).unwrap();
        assert_eq!(t.initial.ksue, 5);
        let counts: Vec<usize> = t.steps.iter().map(|s| s.ksue).collect();
        assert_eq!(counts, vec![4, 3, 2, 1, 0]);
    }

    #[test]
    fn respondent_failure_truncates_transcript() {
        let mut scripted = Scripted::new([true, false]);
        let t = run_full_assessment(ConstantPredictor::uninformed(4), &mut scripted, StrategyKind::MaxUncertainty, &StopRule::all_skills(0.1), 0.5, 0).unwrap();
        assert_eq!(t.questions(), 2);
        assert!(matches!(t.summary.unwrap().end, RunEnd::Failed { .. }));
    }

    #[test]
    fn out_of_turn_answers_are_rejected() {
        let spec = AssessmentSpec::full(StrategyKind::MaxUncertainty, 0.1, 0.5, 0);
        let mut run = AssessmentRun::start(ConstantPredictor::uninformed(3), spec, None, None).unwrap();
        assert_eq!(run.pending().unwrap().skill, 0);
        assert!(matches!(run.answer(2, true), Err(Error::UnexpectedAnswer { expected: Some(0), actual: 2 })));
        for s in 0..3 {
            run.answer(s, true).unwrap();
        }
        assert!(run.is_complete());
        assert!(matches!(run.answer(0, true), Err(Error::UnexpectedAnswer { expected: None, .. })));
    }

    #[test]
    fn prior_covering_everything_completes_immediately() {
        let spec = AssessmentSpec::full(StrategyKind::default(), 0.1, 0.5, 0);
        let prior = AssessmentState::from_values(&[1, -1, 1]).unwrap();
        let run = AssessmentRun::start(ConstantPredictor::uninformed(3), spec, Some(prior), None).unwrap();
        assert!(run.is_complete());
        assert_eq!(run.transcript().questions(), 0);
    }

    #[test]
    fn session_for_beginner_plans_first_skills() {
        let session = SessionConfig {
            length: 3,
            exploration: 0.0,
            epsilon: 0.1,
            rng_seed: 1,
        };
        let mut oracle = RecordedOracle::new(bools(6, |_| false));
        let (plan, t) = run_session_assessment(ConstantPredictor::uninformed(6), &mut oracle, &session, StrategyKind::default(), 0.5, None).unwrap();
        assert_eq!(plan, vec![0, 1, 2]);
        assert_eq!(t.questions(), 3);
        assert_eq!(t.summary.unwrap().end.stop_reason(), Some(StopReason::SessionPlanFound));
    }

    #[test]
    fn session_for_expert_has_empty_plan() {
        let session = SessionConfig {
            length: 2,
            exploration: 0.2,
            epsilon: 0.1,
            rng_seed: 5,
        };
        let mut oracle = RecordedOracle::new(bools(4, |_| true));
        let (plan, t) = run_session_assessment(SnapAfterFirst(4), &mut oracle, &session, StrategyKind::default(), 0.5, None).unwrap();
        assert!(plan.is_empty());
        assert_eq!(t.questions(), 1);
    }

    #[test]
    fn corrections() {
        let mut oracle = RecordedOracle::new(bools(4, |_| true));
        let t = run_full_assessment(SnapAfterFirst(4), &mut oracle, StrategyKind::MaxUncertainty, &StopRule::all_skills(0.1), 0.5, 0).unwrap();
        let predicted = KnowledgeState::from_bools(&t.summary.as_ref().unwrap().predicted);
        let (same, record) = apply_correction(&t, &[]).unwrap();
        assert_eq!(same, predicted);
        assert!(record.user_verified);

        let (flipped, _) = apply_correction(&t, &[Correction { skill: 2, mastered: false }]).unwrap();
        let changed: Vec<usize> = (0..4).filter(|&i| flipped.get(i) != predicted.get(i)).collect();
        assert_eq!(changed, vec![2]);

        let asked = t.steps[0].skill;
        assert!(matches!(apply_correction(&t, &[Correction { skill: asked, mastered: false }]), Err(Error::Correction(_))));
    }

    #[test]
    fn same_seed_same_transcript() {
        let run = |seed| {
            let mut oracle = RecordedOracle::new(bools(8, |i| i % 3 == 0));
            run_full_assessment(ConstantPredictor::uninformed(8), &mut oracle, StrategyKind::Random, &StopRule::all_skills(0.1), 0.5, seed).unwrap()
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4).asked(), run(5).asked());
    }
}
