//! Skills, knowledge and assessment states, and the elementary maps between
//! them.
//!
//! The order of skills in a [`SkillOntology`] is the learn order. Every
//! per-skill vector in this crate is indexed by that order.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skill {
    pub id: String,
    pub title: String,
    #[serde(skip)]
    pub index: usize,
}

/// On-disk shape of an ontology document.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct OntologyDocument {
    skills: Vec<SkillEntry>,
    #[serde(default)]
    prerequisites: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SkillEntry {
    id: String,
    #[serde(default)]
    title: String,
}

/// Ordered skill list plus an optional prerequisite DAG.
///
/// An edge `(from, to)` means `from` is a prerequisite of `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillOntology {
    skills: Vec<Skill>,
    prerequisites: Vec<(usize, usize)>,
    by_id: HashMap<String, usize>,
}

/// Problems found by [`SkillOntology::validate`]. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub duplicate_ids: Vec<String>,
    pub dangling_endpoints: Vec<String>,
    /// Each cycle as the list of skill ids along it.
    pub cycles: Vec<Vec<String>>,
    pub empty: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.duplicate_ids.is_empty()
            && self.dangling_endpoints.is_empty()
            && self.cycles.is_empty()
            && !self.empty
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.empty {
            parts.push("ontology has no skills".to_string());
        }
        if !self.duplicate_ids.is_empty() {
            parts.push(format!("duplicate ids: {}", self.duplicate_ids.join(", ")));
        }
        if !self.dangling_endpoints.is_empty() {
            parts.push(format!(
                "unknown prerequisite endpoints: {}",
                self.dangling_endpoints.join(", ")
            ));
        }
        for cycle in &self.cycles {
            parts.push(format!("cycle: {}", cycle.join(" -> ")));
        }
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks raw skill ids and edges without building an ontology.
pub fn validate_ontology(ids: &[String], edges: &[(String, String)]) -> ValidationReport {
    let mut report = ValidationReport {
        empty: ids.is_empty(),
        ..Default::default()
    };
    let mut by_id = HashMap::new();
    for (i, id) in ids.iter().enumerate() {
        if by_id.insert(id.as_str(), i).is_some() && !report.duplicate_ids.contains(id) {
            report.duplicate_ids.push(id.clone());
        }
    }
    let mut resolved = Vec::new();
    for (from, to) in edges {
        let mut ok = true;
        for end in [from, to] {
            if !by_id.contains_key(end.as_str()) {
                ok = false;
                if !report.dangling_endpoints.contains(end) {
                    report.dangling_endpoints.push(end.clone());
                }
            }
        }
        if ok {
            resolved.push((by_id[from.as_str()], by_id[to.as_str()]));
        }
    }
    report.cycles = find_cycles(ids.len(), &resolved)
        .into_iter()
        .map(|c| c.into_iter().map(|i| ids[i].clone()).collect())
        .collect();
    report
}

/// One representative cycle per strongly connected component with a cycle.
fn find_cycles(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut cycles = Vec::new();
    fn visit(
        v: usize,
        adj: &[Vec<usize>],
        color: &mut [u8],
        stack: &mut Vec<usize>,
        cycles: &mut Vec<Vec<usize>>,
    ) {
        color[v] = 1;
        stack.push(v);
        for &w in &adj[v] {
            match color[w] {
                0 => visit(w, adj, color, stack, cycles),
                1 => {
                    let start = stack.iter().position(|&x| x == w).unwrap();
                    let mut cycle = stack[start..].to_vec();
                    cycle.push(w);
                    cycles.push(cycle);
                }
                _ => {}
            }
        }
        stack.pop();
        color[v] = 2;
    }
    for v in 0..n {
        if color[v] == 0 {
            visit(v, &adj, &mut color, &mut stack, &mut cycles);
        }
    }
    cycles
}

impl SkillOntology {
    /// Builds an ontology from `(id, title)` pairs and `(from, to)` edges,
    /// rejecting anything [`validate_ontology`] reports.
    pub fn new<I, S>(skills: I, prerequisites: &[(String, String)]) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let skills: Vec<Skill> = skills
            .into_iter()
            .enumerate()
            .map(|(index, (id, title))| Skill {
                id: id.into(),
                title: title.into(),
                index,
            })
            .collect();
        let ids: Vec<String> = skills.iter().map(|s| s.id.clone()).collect();
        let report = validate_ontology(&ids, prerequisites);
        if !report.is_valid() {
            return Err(Error::Data(format!("invalid ontology: {report}")));
        }
        let by_id: HashMap<String, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut edges: Vec<(usize, usize)> = prerequisites
            .iter()
            .map(|(a, b)| (by_id[a], by_id[b]))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        Ok(Self {
            skills,
            prerequisites: edges,
            by_id,
        })
    }

    /// `n` skills named `s1..sn` with no prerequisites.
    pub fn linear(n: usize) -> Result<Self> {
        Self::new(
            (1..=n).map(|i| (format!("s{i}"), format!("Skill {i}"))),
            &[],
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: OntologyDocument = serde_json::from_str(text)?;
        Self::new(
            doc.skills.into_iter().map(|s| (s.id, s.title)),
            &doc.prerequisites,
        )
    }

    pub fn to_json(&self) -> String {
        let doc = OntologyDocument {
            skills: self
                .skills
                .iter()
                .map(|s| SkillEntry {
                    id: s.id.clone(),
                    title: s.title.clone(),
                })
                .collect(),
            prerequisites: self
                .prerequisites
                .iter()
                .map(|&(a, b)| (self.skills[a].id.clone(), self.skills[b].id.clone()))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("ontology serializes")
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn skills(&self) -> &[Skill] {
        &self.skills
    }

    pub fn skill(&self, index: usize) -> &Skill {
        &self.skills[index]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.by_id
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownSkill(id.to_string()))
    }

    /// Edges as `(prerequisite, dependent)` index pairs.
    pub fn prerequisites(&self) -> &[(usize, usize)] {
        &self.prerequisites
    }
}

/// Ground-truth mastery of one skill.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mastery {
    Mastered,
    Unmastered,
    /// Truth not recorded. Becomes a 0.5 training target.
    UnknownTarget,
}

impl Mastery {
    pub fn from_bool(mastered: bool) -> Self {
        if mastered {
            Mastery::Mastered
        } else {
            Mastery::Unmastered
        }
    }

    pub fn is_known(self) -> bool {
        self != Mastery::UnknownTarget
    }

    /// 1.0, 0.0, or 0.5 for an unknown target.
    pub fn target_value(self) -> f64 {
        match self {
            Mastery::Mastered => 1.0,
            Mastery::Unmastered => 0.0,
            Mastery::UnknownTarget => 0.5,
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Mastery::Mastered => Some(true),
            Mastery::Unmastered => Some(false),
            Mastery::UnknownTarget => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnowledgeState(Vec<Mastery>);

impl KnowledgeState {
    pub fn new(values: Vec<Mastery>) -> Self {
        Self(values)
    }

    pub fn from_bools(values: &[bool]) -> Self {
        Self(values.iter().map(|&b| Mastery::from_bool(b)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Mastery] {
        &self.0
    }

    pub fn get(&self, skill: usize) -> Mastery {
        self.0[skill]
    }

    pub fn set(&mut self, skill: usize, value: Mastery) {
        self.0[skill] = value;
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(|m| m.is_known())
    }

    /// Fraction of skills with a recorded truth.
    pub fn known_fraction(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().filter(|m| m.is_known()).count() as f64 / self.0.len() as f64
    }

    pub fn targets(&self) -> Vec<f64> {
        self.0.iter().map(|m| m.target_value()).collect()
    }
}

/// Assessed status of one skill: the network's input alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum SkillAssessment {
    Unmastered,
    Unassessed,
    Mastered,
}

impl SkillAssessment {
    pub fn value(self) -> i8 {
        match self {
            SkillAssessment::Unmastered => -1,
            SkillAssessment::Unassessed => 0,
            SkillAssessment::Mastered => 1,
        }
    }

    pub fn from_answer(mastered: bool) -> Self {
        if mastered {
            SkillAssessment::Mastered
        } else {
            SkillAssessment::Unmastered
        }
    }

    pub fn is_assessed(self) -> bool {
        self != SkillAssessment::Unassessed
    }
}

impl From<SkillAssessment> for i8 {
    fn from(a: SkillAssessment) -> i8 {
        a.value()
    }
}

impl TryFrom<i8> for SkillAssessment {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(SkillAssessment::Unmastered),
            0 => Ok(SkillAssessment::Unassessed),
            1 => Ok(SkillAssessment::Mastered),
            other => Err(Error::Format(format!("assessment value {other} not in {{-1,0,1}}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssessmentState(Vec<SkillAssessment>);

impl AssessmentState {
    pub fn empty(n: usize) -> Self {
        Self(vec![SkillAssessment::Unassessed; n])
    }

    pub fn new(values: Vec<SkillAssessment>) -> Self {
        Self(values)
    }

    pub fn from_values(values: &[i8]) -> Result<Self> {
        values
            .iter()
            .map(|&v| SkillAssessment::try_from(v))
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[SkillAssessment] {
        &self.0
    }

    pub fn get(&self, skill: usize) -> SkillAssessment {
        self.0[skill]
    }

    pub fn set(&mut self, skill: usize, value: SkillAssessment) {
        self.0[skill] = value;
    }

    pub fn with(&self, skill: usize, value: SkillAssessment) -> Self {
        let mut next = self.clone();
        next.0[skill] = value;
        next
    }

    /// Indices of unassessed skills, ascending.
    pub fn unassessed(&self) -> Vec<usize> {
        (0..self.0.len())
            .filter(|&i| !self.0[i].is_assessed())
            .collect()
    }

    pub fn assessed_count(&self) -> usize {
        self.0.iter().filter(|a| a.is_assessed()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(|a| a.is_assessed())
    }
}

/// Per-skill mastery probabilities, each finite and within `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::Numeric(format!(
                "probability {v} at skill {i} outside [0, 1]"
            )));
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, skill: usize) -> f64 {
        self.0[skill]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Vec<f64> {
        p.0
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::param("epsilon", format!("{epsilon} not in (0, 0.5)")));
    }
    Ok(())
}

/// Binary prediction: 1 iff the probability is strictly above `tau`.
pub fn threshold(probs: &ProbabilityVector, tau: f64) -> Result<Vec<bool>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::param("tau", format!("{tau} not in (0, 1)")));
    }
    Ok(probs.values().iter().map(|&p| p > tau).collect())
}

/// Whether an assessment could have been observed from `knowledge`.
pub fn is_consistent(assessment: &AssessmentState, knowledge: &KnowledgeState) -> Result<bool> {
    check_len(knowledge.len(), assessment.len())?;
    Ok(assessment
        .values()
        .iter()
        .zip(knowledge.values())
        .all(|(a, k)| match a {
            SkillAssessment::Mastered => *k == Mastery::Mastered,
            SkillAssessment::Unmastered => *k == Mastery::Unmastered,
            SkillAssessment::Unassessed => true,
        }))
}

/// Overrides model probabilities with the exact answers on assessed skills.
pub fn clamp_assessed(
    probs: &ProbabilityVector,
    assessment: &AssessmentState,
) -> Result<ProbabilityVector> {
    check_len(probs.len(), assessment.len())?;
    Ok(ProbabilityVector(
        probs
            .values()
            .iter()
            .zip(assessment.values())
            .map(|(&p, a)| match a {
                SkillAssessment::Mastered => 1.0,
                SkillAssessment::Unmastered => 0.0,
                SkillAssessment::Unassessed => p,
            })
            .collect(),
    ))
}

/// Network input encoding: -1.0 / 0.0 / +1.0 per skill.
pub fn encode_input(assessment: &AssessmentState) -> Vec<f64> {
    assessment
        .values()
        .iter()
        .map(|a| f64::from(a.value()))
        .collect()
}

/// Inverse of [`encode_input`].
pub fn decode_input(values: &[f64]) -> Result<AssessmentState> {
    values
        .iter()
        .map(|&v| {
            if v == -1.0 {
                Ok(SkillAssessment::Unmastered)
            } else if v == 0.0 {
                Ok(SkillAssessment::Unassessed)
            } else if v == 1.0 {
                Ok(SkillAssessment::Mastered)
            } else {
                Err(Error::Format(format!("input value {v} not in {{-1,0,1}}")))
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(AssessmentState)
}

/// Skill indices reachable from `start` along `edges` (excluding `start`).
pub(crate) fn reachable(n: usize, edges: &[(usize, usize)], start: usize) -> HashSet<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    let mut seen = HashSet::new();
    let mut todo = vec![start];
    while let Some(v) = todo.pop() {
        for &w in &adj[v] {
            if seen.insert(w) {
                todo.push(w);
            }
        }
    }
    seen
}
