//! Prediction error and uncertainty measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{check_epsilon, check_len, AssessmentState, KnowledgeState, Mastery, ProbabilityVector};

/// Which skills a metric is averaged over.
#[derive(Debug, Clone, Copy)]
pub enum MetricScope<'a> {
    AllSkills,
    /// Only skills still unassessed in the given state.
    UnassessedOnly(&'a AssessmentState),
}

impl MetricScope<'_> {
    /// Scoped skill indices for vectors of length `n`.
    pub fn skills(&self, n: usize) -> Result<Vec<usize>> {
        match self {
            MetricScope::AllSkills => Ok((0..n).collect()),
            MetricScope::UnassessedOnly(a) => {
                check_len(n, a.len())?;
                Ok(a.unassessed())
            }
        }
    }
}

fn truth_bits(knowledge: &KnowledgeState, skills: &[usize]) -> Result<Vec<f64>> {
    skills
        .iter()
        .map(|&s| match knowledge.get(s) {
            Mastery::Mastered => Ok(1.0),
            Mastery::Unmastered => Ok(0.0),
            Mastery::UnknownTarget => Err(Error::Data(format!("truth unknown for scoped skill {s}"))),
        })
        .collect()
}

fn nonempty(skills: &[usize]) -> Result<()> {
    if skills.is_empty() {
        return Err(Error::EmptyScope);
    }
    Ok(())
}

/// Mean squared probability error.
pub fn mspe(probs: &ProbabilityVector, knowledge: &KnowledgeState, scope: MetricScope) -> Result<f64> {
    check_len(probs.len(), knowledge.len())?;
    let skills = scope.skills(probs.len())?;
    nonempty(&skills)?;
    let truth = truth_bits(knowledge, &skills)?;
    let sum: f64 = skills
        .iter()
        .zip(&truth)
        .map(|(&s, t)| (probs.get(s) - t).powi(2))
        .sum();
    Ok(sum / skills.len() as f64)
}

/// Relative knowledge state error: fraction of scoped skills whose
/// thresholded prediction disagrees with the truth.
pub fn rkse(probs: &ProbabilityVector, knowledge: &KnowledgeState, tau: f64, scope: MetricScope) -> Result<f64> {
    check_len(probs.len(), knowledge.len())?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::param("tau", format!("{tau} not in (0, 1)")));
    }
    let skills = scope.skills(probs.len())?;
    nonempty(&skills)?;
    let truth = truth_bits(knowledge, &skills)?;
    let wrong = skills
        .iter()
        .zip(&truth)
        .filter(|(&s, &t)| (probs.get(s) > tau) != (t == 1.0))
        .count();
    Ok(wrong as f64 / skills.len() as f64)
}

/// Knowledge state uncertainty: number of scoped skills with
/// `epsilon <= p <= 1 - epsilon`.
pub fn ksue(probs: &ProbabilityVector, epsilon: f64, scope: MetricScope) -> Result<usize> {
    check_epsilon(epsilon)?;
    let skills = scope.skills(probs.len())?;
    Ok(skills
        .iter()
        .filter(|&&s| is_uncertain(probs.get(s), epsilon))
        .count())
}

pub(crate) fn is_uncertain(p: f64, epsilon: f64) -> bool {
    epsilon <= p && p <= 1.0 - epsilon
}

/// Mean over scoped skills of `min(p, 1 - p)`.
pub fn residual_uncertainty(probs: &ProbabilityVector, scope: MetricScope) -> Result<f64> {
    let skills = scope.skills(probs.len())?;
    nonempty(&skills)?;
    let sum: f64 = skills
        .iter()
        .map(|&s| {
            let p = probs.get(s);
            p.min(1.0 - p)
        })
        .sum();
    Ok(sum / skills.len() as f64)
}

/// Confusion counts for the mastered (positive) class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[bool], truth: &[bool]) -> Result<Self> {
        check_len(truth.len(), predicted.len())?;
        let mut c = Confusion::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.true_pos += 1,
                (true, false) => c.false_pos += 1,
                (false, false) => c.true_neg += 1,
                (false, true) => c.false_neg += 1,
            }
        }
        Ok(c)
    }

    pub fn add(&mut self, other: &Confusion) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.true_neg += other.true_neg;
        self.false_neg += other.false_neg;
    }

    pub fn precision_recall(&self) -> PrecisionRecall {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        PrecisionRecall {
            precision: ratio(self.true_pos, self.true_pos + self.false_pos),
            recall: ratio(self.true_pos, self.true_pos + self.false_neg),
            negative_precision: ratio(self.true_neg, self.true_neg + self.false_neg),
            negative_recall: ratio(self.true_neg, self.true_neg + self.false_pos),
        }
    }
}

/// Ratios with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub negative_precision: Option<f64>,
    pub negative_recall: Option<f64>,
}

pub fn precision_recall(predicted: &[bool], truth: &[bool]) -> Result<PrecisionRecall> {
    Ok(Confusion::from_predictions(predicted, truth)?.precision_recall())
}
