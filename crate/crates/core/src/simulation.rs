//! Training data generation.
//!
//! Partial assessment states are sampled from recorded knowledge states by
//! revealing a random subset of skills. Only states that could actually have
//! been observed for the learner are produced. Also hosts cohort types,
//! prerequisite closure and synthetic cold-start personas.

use std::collections::HashSet;

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{
    check_len, reachable, AssessmentState, KnowledgeState, Mastery, SkillAssessment, SkillOntology,
};
use crate::seed::{derive_rng, digest_hex, Rng};

/// Law for the number `m` of revealed skills per simulated state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubsetSizeLaw {
    /// `m` uniform over `{0, ..., n}`.
    #[default]
    Uniform,
    /// Always reveal exactly `m` skills (capped at `n`).
    Fixed { m: usize },
    /// Unnormalized weights over `m = 0, 1, ...`; missing tail entries are 0.
    Weighted { weights: Vec<f64> },
}

impl SubsetSizeLaw {
    fn draw(&self, n: usize, rng: &mut Rng) -> usize {
        match self {
            SubsetSizeLaw::Uniform => rng.gen_range(0..=n),
            SubsetSizeLaw::Fixed { m } => (*m).min(n),
            SubsetSizeLaw::Weighted { weights } => {
                let w = &weights[..weights.len().min(n + 1)];
                let total: f64 = w.iter().sum();
                if !(total > 0.0) {
                    return 0;
                }
                let mut x = rng.gen::<f64>() * total;
                for (m, &wm) in w.iter().enumerate() {
                    if x < wm {
                        return m;
                    }
                    x -= wm;
                }
                w.len() - 1
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub samples_per_learner: usize,
    #[serde(default)]
    pub subset_size_law: SubsetSizeLaw,
    pub rng_seed: u64,
}

impl SimulationConfig {
    pub fn new(samples_per_learner: usize, rng_seed: u64) -> Self {
        Self {
            samples_per_learner,
            subset_size_law: SubsetSizeLaw::Uniform,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_learner == 0 {
            return Err(Error::param("samples_per_learner", "must be at least 1"));
        }
        if let SubsetSizeLaw::Weighted { weights } = &self.subset_size_law {
            if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::param("subset_size_law", "weights must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub input: AssessmentState,
    /// 0.0, 1.0, or 0.5 where the truth is unknown.
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerRecord {
    pub learner_id: String,
    pub knowledge: KnowledgeState,
}

/// Recorded learners over one ontology.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cohort {
    n_skills: usize,
    learners: Vec<LearnerRecord>,
}

impl Cohort {
    pub fn new(n_skills: usize, learners: Vec<LearnerRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for l in &learners {
            check_len(n_skills, l.knowledge.len())?;
            if !seen.insert(l.learner_id.as_str()) {
                return Err(Error::Data(format!("duplicate learner id `{}`", l.learner_id)));
            }
        }
        Ok(Self { n_skills, learners })
    }

    pub fn n_skills(&self) -> usize {
        self.n_skills
    }

    pub fn learners(&self) -> &[LearnerRecord] {
        &self.learners
    }

    pub fn len(&self) -> usize {
        self.learners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.learners.is_empty()
    }

    pub fn get(&self, learner_id: &str) -> Option<&LearnerRecord> {
        self.learners.iter().find(|l| l.learner_id == learner_id)
    }

    /// Appends another cohort's learners; ids must stay unique.
    pub fn merge(mut self, other: Cohort) -> Result<Self> {
        check_len(self.n_skills, other.n_skills)?;
        self.learners.extend(other.learners);
        Cohort::new(self.n_skills, self.learners)
    }

    /// Sub-cohort of the learners selected by `keep`, in the original order.
    pub fn filter(&self, mut keep: impl FnMut(usize, &LearnerRecord) -> bool) -> Cohort {
        Cohort {
            n_skills: self.n_skills,
            learners: self
                .learners
                .iter()
                .enumerate()
                .filter(|(i, l)| keep(*i, l))
                .map(|(_, l)| l.clone())
                .collect(),
        }
    }

    pub fn without(&self, learner_id: &str) -> Cohort {
        self.filter(|_, l| l.learner_id != learner_id)
    }
}

/// Simulated examples plus the learners that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub n_skills: usize,
    /// Retained learners, in cohort order.
    pub learner_ids: Vec<String>,
    pub examples: Vec<TrainingExample>,
}

impl Dataset {
    /// SHA-256 over the canonical encoding of inputs and targets.
    pub fn fingerprint(&self) -> String {
        let mut bytes = Vec::with_capacity(self.examples.len() * self.n_skills * 9);
        for ex in &self.examples {
            for a in ex.input.values() {
                bytes.push(a.value() as u8);
            }
            for t in &ex.target {
                bytes.extend_from_slice(&t.to_le_bytes());
            }
        }
        digest_hex(&bytes)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Samples `k` assessment states from one knowledge state with the given rng.
pub fn simulate_states_with(
    knowledge: &KnowledgeState,
    k: usize,
    law: &SubsetSizeLaw,
    rng: &mut Rng,
) -> Vec<AssessmentState> {
    let n = knowledge.len();
    (0..k)
        .map(|_| {
            let m = law.draw(n, rng);
            let mut state = AssessmentState::empty(n);
            for s in sample_indices(rng, n, m).into_iter() {
                let value = match knowledge.get(s) {
                    Mastery::Mastered => SkillAssessment::Mastered,
                    Mastery::Unmastered => SkillAssessment::Unmastered,
                    Mastery::UnknownTarget => SkillAssessment::Unassessed,
                };
                state.set(s, value);
            }
            state
        })
        .collect()
}

/// Samples `samples_per_learner` states using the config's seed directly.
pub fn simulate_states(knowledge: &KnowledgeState, config: &SimulationConfig) -> Vec<AssessmentState> {
    let mut rng = crate::seed::rng_from_seed(config.rng_seed);
    simulate_states_with(
        knowledge,
        config.samples_per_learner,
        &config.subset_size_law,
        &mut rng,
    )
}

/// Builds training examples from every learner whose known fraction reaches
/// `completeness_floor`. Each learner draws from its own substream keyed by
/// learner id, so adding or removing learners leaves the others untouched.
pub fn build_dataset(
    cohort: &Cohort,
    config: &SimulationConfig,
    completeness_floor: f64,
) -> Result<Dataset> {
    config.validate()?;
    if !(completeness_floor > 0.0 && completeness_floor <= 1.0) {
        return Err(Error::param(
            "completeness_floor",
            format!("{completeness_floor} not in (0, 1]"),
        ));
    }
    let mut examples = Vec::new();
    let mut learner_ids = Vec::new();
    for learner in cohort.learners() {
        if learner.knowledge.known_fraction() < completeness_floor {
            continue;
        }
        let mut rng = derive_rng(config.rng_seed, "simulation", &learner.learner_id);
        let target = learner.knowledge.targets();
        for input in simulate_states_with(
            &learner.knowledge,
            config.samples_per_learner,
            &config.subset_size_law,
            &mut rng,
        ) {
            examples.push(TrainingExample {
                input,
                target: target.clone(),
            });
        }
        learner_ids.push(learner.learner_id.clone());
    }
    if learner_ids.is_empty() {
        return Err(Error::NoTrainableLearners);
    }
    Ok(Dataset {
        n_skills: cohort.n_skills(),
        learner_ids,
        examples,
    })
}

/// Propagates answers along prerequisites: a mastered skill implies its
/// (transitive) prerequisites are mastered, an unmastered skill implies its
/// (transitive) dependents are unmastered. Never flips a nonzero entry.
pub fn prerequisite_closure(
    ontology: &SkillOntology,
    assessment: &AssessmentState,
) -> Result<AssessmentState> {
    let n = ontology.len();
    check_len(n, assessment.len())?;
    let forward = ontology.prerequisites();
    let backward: Vec<(usize, usize)> = forward.iter().map(|&(a, b)| (b, a)).collect();
    let mut out = assessment.clone();
    let mut implied = vec![SkillAssessment::Unassessed; n];
    let imply = |skill: usize, value: SkillAssessment, implied: &mut [SkillAssessment]| {
        let current = assessment.get(skill);
        let other = implied[skill];
        if (current.is_assessed() && current != value) || (other.is_assessed() && other != value) {
            return Err(Error::Inconsistent {
                skill: ontology.skill(skill).id.clone(),
            });
        }
        implied[skill] = value;
        Ok(())
    };
    for s in 0..n {
        match assessment.get(s) {
            SkillAssessment::Mastered => {
                for p in reachable(n, &backward, s) {
                    imply(p, SkillAssessment::Mastered, &mut implied)?;
                }
            }
            SkillAssessment::Unmastered => {
                for d in reachable(n, forward, s) {
                    imply(d, SkillAssessment::Unmastered, &mut implied)?;
                }
            }
            SkillAssessment::Unassessed => {}
        }
    }
    for (s, v) in implied.into_iter().enumerate() {
        if v.is_assessed() {
            out.set(s, v);
        }
    }
    Ok(out)
}

/// Makes a full knowledge state prerequisite-consistent by marking every
/// prerequisite of a mastered skill as mastered.
pub fn close_knowledge(ontology: &SkillOntology, knowledge: &KnowledgeState) -> Result<KnowledgeState> {
    let n = ontology.len();
    check_len(n, knowledge.len())?;
    let backward: Vec<(usize, usize)> = ontology.prerequisites().iter().map(|&(a, b)| (b, a)).collect();
    let mut out = knowledge.clone();
    for s in 0..n {
        if knowledge.get(s) == Mastery::Mastered {
            for p in reachable(n, &backward, s) {
                out.set(p, Mastery::Mastered);
            }
        }
    }
    Ok(out)
}

/// Generator for synthetic full knowledge states.
///
/// Every law draws one latent level per persona, stratified over the cohort
/// so that the generated personas span little to extensive mastery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PersonaLaw {
    /// The first `round(q * n)` skills mastered, the rest not.
    Threshold { q: f64 },
    /// Mastery probability decays linearly with learn order from `start`
    /// to `end`. Personas are nested: a persona with level `u` masters
    /// exactly the skills whose probability exceeds `u`, before noise.
    FrontLoaded { start: f64, end: f64, noise: f64 },
    /// Mastery spread over the whole path. Skills fall into `groups`
    /// contiguous topics; each topic mixes the persona's global level with a
    /// topic-specific draw. Per-skill probabilities vary within
    /// `level ± width / 2`.
    Spread {
        level: f64,
        width: f64,
        groups: usize,
        noise: f64,
    },
}

impl PersonaLaw {
    pub fn name(&self) -> &'static str {
        match self {
            PersonaLaw::Threshold { .. } => "threshold",
            PersonaLaw::FrontLoaded { .. } => "front",
            PersonaLaw::Spread { .. } => "spread",
        }
    }

    fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} not in [0, 1]")))
            }
        };
        match *self {
            PersonaLaw::Threshold { q } => unit("q", q),
            PersonaLaw::FrontLoaded { start, end, noise } => {
                unit("start", start)?;
                unit("end", end)?;
                unit("noise", noise)
            }
            PersonaLaw::Spread {
                level,
                width,
                groups,
                noise,
            } => {
                unit("level", level)?;
                unit("width", width)?;
                unit("noise", noise)?;
                if groups == 0 {
                    return Err(Error::param("groups", "must be at least 1"));
                }
                Ok(())
            }
        }
    }

    /// Per-skill mastery probability before coupling and noise.
    pub fn skill_levels(&self, n: usize) -> Vec<f64> {
        match *self {
            PersonaLaw::Threshold { q } => {
                let cut = (q * n as f64).round() as usize;
                (0..n).map(|s| if s < cut { 1.0 } else { 0.0 }).collect()
            }
            PersonaLaw::FrontLoaded { start, end, .. } => (0..n)
                .map(|s| {
                    if n == 1 {
                        start
                    } else {
                        start + (end - start) * s as f64 / (n - 1) as f64
                    }
                })
                .collect(),
            PersonaLaw::Spread {
                level,
                width,
                groups,
                ..
            } => {
                let bounds = group_bounds(n, groups);
                let mut out = vec![0.0; n];
                for (lo, hi) in bounds {
                    let size = hi - lo;
                    for (j, slot) in out[lo..hi].iter_mut().enumerate() {
                        let r = (j as f64 + 0.5) / size as f64;
                        *slot = (level + width * (0.5 - r)).clamp(0.0, 1.0);
                    }
                }
                out
            }
        }
    }

    fn persona(&self, n: usize, latent: f64, rng: &mut Rng) -> Vec<bool> {
        let levels = self.skill_levels(n);
        match *self {
            PersonaLaw::Threshold { .. } => levels.iter().map(|&p| p > 0.5).collect(),
            PersonaLaw::FrontLoaded { noise, .. } => levels
                .iter()
                .map(|&p| flip(latent < p, noise, rng))
                .collect(),
            PersonaLaw::Spread { groups, noise, .. } => {
                let mut out = vec![false; n];
                for (lo, hi) in group_bounds(n, groups) {
                    let topic = 0.5 * latent + 0.5 * rng.gen::<f64>();
                    for s in lo..hi {
                        out[s] = flip(topic < levels[s], noise, rng);
                    }
                }
                out
            }
        }
    }
}

fn flip(value: bool, noise: f64, rng: &mut Rng) -> bool {
    if noise > 0.0 && rng.gen::<f64>() < noise {
        !value
    } else {
        value
    }
}

/// Contiguous, near-equal `[lo, hi)` ranges covering `0..n`.
fn group_bounds(n: usize, groups: usize) -> Vec<(usize, usize)> {
    let g = groups.clamp(1, n.max(1));
    (0..g)
        .map(|i| (i * n / g, (i + 1) * n / g))
        .filter(|(lo, hi)| hi > lo)
        .collect()
}

/// Generates `count` prerequisite-consistent personas named
/// `<law>-<0000>`.
pub fn synth_personas(
    ontology: &SkillOntology,
    count: usize,
    law: &PersonaLaw,
    seed: u64,
) -> Result<Cohort> {
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    law.validate()?;
    let n = ontology.len();
    let mut rng = derive_rng(seed, "personas", law.name());
    let mut strata: Vec<usize> = (0..count).collect();
    strata.shuffle(&mut rng);
    let mut learners = Vec::with_capacity(count);
    for (i, stratum) in strata.into_iter().enumerate() {
        let latent = (stratum as f64 + rng.gen::<f64>()) / count as f64;
        let raw = KnowledgeState::from_bools(&law.persona(n, latent, &mut rng));
        learners.push(LearnerRecord {
            learner_id: format!("{}-{i:04}", law.name()),
            knowledge: close_knowledge(ontology, &raw)?,
        });
    }
    Cohort::new(n, learners)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::is_consistent;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;

    fn sigma(v: &[u8]) -> KnowledgeState {
        KnowledgeState::from_bools(&v.iter().map(|&x| x == 1).collect::<Vec<_>>())
    }

    /// Two chains: s1 -> s2 -> s5 -> s6 and s3 -> s4.
    fn figure_ontology() -> SkillOntology {
        let e = |a: &str, b: &str| (a.to_string(), b.to_string());
        SkillOntology::new(
            (1..=6).map(|i| (format!("s{i}"), format!("Skill {i}"))),
            &[e("s1", "s2"), e("s2", "s5"), e("s5", "s6"), e("s3", "s4")],
        )
        .unwrap()
    }

    #[test]
    fn simulated_states_are_consistent_and_reach_table_rows() {
        let k = sigma(&[1, 1, 1, 0, 1, 0]);
        let cfg = SimulationConfig::new(5000, 3);
        let states = simulate_states(&k, &cfg);
        assert_eq!(states.len(), 5000);
        assert!(states.iter().all(|a| is_consistent(a, &k).unwrap()));
        let row4 = AssessmentState::from_values(&[1, 1, 1, 0, 0, -1]).unwrap();
        assert!(states.contains(&row4));
    }

    #[test]
    fn empty_and_full_reveal() {
        let k = sigma(&[1, 0, 1]);
        let mut rng = rng_from_seed(1);
        let none = simulate_states_with(&k, 3, &SubsetSizeLaw::Fixed { m: 0 }, &mut rng);
        assert!(none.iter().all(|a| *a == AssessmentState::empty(3)));
        let all = simulate_states_with(&k, 3, &SubsetSizeLaw::Fixed { m: 3 }, &mut rng);
        let expected = AssessmentState::from_values(&[1, -1, 1]).unwrap();
        assert!(all.iter().all(|a| *a == expected));
    }

    #[test]
    fn unknown_truth_stays_unassessed() {
        let k = KnowledgeState::new(vec![Mastery::UnknownTarget, Mastery::Mastered]);
        let mut rng = rng_from_seed(1);
        let all = simulate_states_with(&k, 4, &SubsetSizeLaw::Fixed { m: 2 }, &mut rng);
        let expected = AssessmentState::from_values(&[0, 1]).unwrap();
        assert!(all.iter().all(|a| *a == expected));
    }

    fn learner(id: &str, values: Vec<Mastery>) -> LearnerRecord {
        LearnerRecord {
            learner_id: id.into(),
            knowledge: KnowledgeState::new(values),
        }
    }

    #[test]
    fn completeness_floor_filters_learners() {
        use Mastery::*;
        let seven_of_ten = [vec![Mastered; 7], vec![UnknownTarget; 3]].concat();
        let nine_of_ten = [vec![Unmastered; 9], vec![UnknownTarget; 1]].concat();
        let full = vec![Mastered; 10];
        let cohort = Cohort::new(
            10,
            vec![
                learner("a", seven_of_ten),
                learner("b", nine_of_ten),
                learner("c", full),
            ],
        )
        .unwrap();
        let ds = build_dataset(&cohort, &SimulationConfig::new(3, 9), 0.8).unwrap();
        assert_eq!(ds.learner_ids, vec!["b".to_string(), "c".to_string()]);
        assert_eq!(ds.len(), 6);
        for ex in &ds.examples[..3] {
            assert_eq!(ex.target.iter().filter(|&&t| t == 0.5).count(), 1);
        }
        for ex in &ds.examples[3..] {
            assert!(ex.target.iter().all(|&t| t == 1.0));
        }
        let only_a = cohort.filter(|_, l| l.learner_id == "a");
        assert!(matches!(
            build_dataset(&only_a, &SimulationConfig::new(3, 9), 0.8),
            Err(Error::NoTrainableLearners)
        ));
        assert!(matches!(
            build_dataset(&Cohort::default(), &SimulationConfig::new(3, 9), 0.8),
            Err(Error::NoTrainableLearners)
        ));
    }

    #[test]
    fn dataset_is_deterministic_per_seed() {
        let o = SkillOntology::linear(12).unwrap();
        let cohort = synth_personas(&o, 10, &PersonaLaw::FrontLoaded { start: 0.9, end: 0.1, noise: 0.05 }, 4).unwrap();
        let a = build_dataset(&cohort, &SimulationConfig::new(20, 77), 0.8).unwrap();
        let b = build_dataset(&cohort, &SimulationConfig::new(20, 77), 0.8).unwrap();
        let c = build_dataset(&cohort, &SimulationConfig::new(20, 78), 0.8).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
        assert_eq!(a.len(), 10 * 20);
    }

    #[test]
    fn closure_examples_from_figure_ontology() {
        let o = figure_ontology();
        let mut a = AssessmentState::empty(6);
        a.set(4, SkillAssessment::Mastered);
        let c = prerequisite_closure(&o, &a).unwrap();
        assert_eq!(c.get(0), SkillAssessment::Mastered);
        assert_eq!(c.get(1), SkillAssessment::Mastered);
        assert_eq!(c.get(2), SkillAssessment::Unassessed);
        assert_eq!(c.get(5), SkillAssessment::Unassessed);

        let mut a = AssessmentState::empty(6);
        a.set(4, SkillAssessment::Unmastered);
        let c = prerequisite_closure(&o, &a).unwrap();
        assert_eq!(c.get(5), SkillAssessment::Unmastered);
        assert_eq!(c.get(1), SkillAssessment::Unassessed);

        let lin = SkillOntology::linear(4).unwrap();
        let a = AssessmentState::from_values(&[1, 0, -1, 0]).unwrap();
        assert_eq!(prerequisite_closure(&lin, &a).unwrap(), a);
    }

    #[test]
    fn closure_contradiction_names_skill() {
        let o = figure_ontology();
        let a = AssessmentState::from_values(&[-1, 0, 0, 0, 1, 0]).unwrap();
        match prerequisite_closure(&o, &a) {
            Err(Error::Inconsistent { skill }) => assert!(skill == "s1" || skill == "s2" || skill == "s5"),
            other => panic!("expected contradiction, got {other:?}"),
        }
    }

    #[test]
    fn threshold_personas() {
        let o = SkillOntology::linear(6).unwrap();
        let none = synth_personas(&o, 2, &PersonaLaw::Threshold { q: 0.0 }, 1).unwrap();
        assert!(none.learners().iter().all(|l| l.knowledge == sigma(&[0; 6])));
        let all = synth_personas(&o, 2, &PersonaLaw::Threshold { q: 1.0 }, 1).unwrap();
        assert!(all.learners().iter().all(|l| l.knowledge == sigma(&[1; 6])));
        assert!(synth_personas(&o, 0, &PersonaLaw::Threshold { q: 1.0 }, 1).is_err());
    }

    #[test]
    fn personas_respect_prerequisites() {
        let o = figure_ontology();
        let law = PersonaLaw::Spread { level: 0.5, width: 0.6, groups: 2, noise: 0.2 };
        let cohort = synth_personas(&o, 200, &law, 5).unwrap();
        for l in cohort.learners() {
            let a = AssessmentState::new(
                l.knowledge.values().iter().map(|m| SkillAssessment::from_answer(*m == Mastery::Mastered)).collect(),
            );
            assert_eq!(prerequisite_closure(&o, &a).unwrap(), a);
        }
    }

    fn spearman_naive(x: &[f64], y: &[f64]) -> f64 {
        let rank = |v: &[f64]| -> Vec<f64> {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
            let mut r = vec![0.0; v.len()];
            let mut i = 0;
            while i < idx.len() {
                let mut j = i;
                while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                    j += 1;
                }
                for k in i..=j {
                    r[idx[k]] = (i + j) as f64 / 2.0;
                }
                i = j + 1;
            }
            r
        };
        let (rx, ry) = (rank(x), rank(y));
        let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mx, my) = (m(&rx), m(&ry));
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn front_loaded_mastery_decreases_with_index() {
        let o = SkillOntology::linear(50).unwrap();
        let law = PersonaLaw::FrontLoaded { start: 0.8, end: 0.05, noise: 0.0 };
        let cohort = synth_personas(&o, 1000, &law, 11).unwrap();
        let freq: Vec<f64> = (0..50)
            .map(|s| {
                cohort.learners().iter().filter(|l| l.knowledge.get(s) == Mastery::Mastered).count() as f64 / 1000.0
            })
            .collect();
        let idx: Vec<f64> = (0..50).map(|s| s as f64).collect();
        assert!(spearman_naive(&idx, &freq) < 0.0);
        assert!((freq[0] - 0.8).abs() < 0.05);
        assert!((freq[49] - 0.05).abs() < 0.03);
    }

    proptest! {
        #[test]
        fn simulation_never_contradicts_truth(
            bits in proptest::collection::vec(0u8..3, 1..20),
            seed in any::<u64>(),
        ) {
            let k = KnowledgeState::new(bits.iter().map(|b| match b {
                0 => Mastery::Unmastered, 1 => Mastery::Mastered, _ => Mastery::UnknownTarget,
            }).collect());
            let mut rng = rng_from_seed(seed);
            for a in simulate_states_with(&k, 20, &SubsetSizeLaw::Uniform, &mut rng) {
                for (s, v) in a.values().iter().enumerate() {
                    match v {
                        SkillAssessment::Mastered => prop_assert_eq!(k.get(s), Mastery::Mastered),
                        SkillAssessment::Unmastered => prop_assert_eq!(k.get(s), Mastery::Unmastered),
                        SkillAssessment::Unassessed => {}
                    }
                }
            }
        }

        #[test]
        fn closure_is_idempotent_and_monotone(values in proptest::collection::vec(-1i8..=1, 6)) {
            let o = figure_ontology();
            let a = AssessmentState::from_values(&values).unwrap();
            if let Ok(c) = prerequisite_closure(&o, &a) {
                for s in 0..6 {
                    if a.get(s).is_assessed() {
                        prop_assert_eq!(c.get(s), a.get(s));
                    }
                }
                prop_assert_eq!(prerequisite_closure(&o, &c).unwrap(), c);
            }
        }

        #[test]
        fn dataset_size_is_learners_times_k(count in 1usize..8, k in 1usize..6) {
            let o = SkillOntology::linear(5).unwrap();
            let cohort = synth_personas(&o, count, &PersonaLaw::Threshold { q: 0.4 }, 2).unwrap();
            let ds = build_dataset(&cohort, &SimulationConfig::new(k, 1), 0.8).unwrap();
            prop_assert_eq!(ds.len(), count * k);
        }
    }
}
