//! Adaptive skill assessment with a knowledge state network.
//!
//! A feed-forward network maps a partial assessment of a learner (each skill
//! known mastered, known unmastered, or not yet asked) to a mastery
//! probability for every skill. Question-selection strategies use the
//! network to pick the next skill to ask so that the learner's full
//! knowledge state is pinned down with few questions.

pub mod engine;
pub mod error;
pub mod evaluation;
pub mod formats;
pub mod metrics;
pub mod model;
pub mod ontology;
pub mod seed;
pub mod simulation;
pub mod strategies;

pub use error::{Error, ErrorClass, Result};
pub use ontology::{
    AssessmentState, KnowledgeState, Mastery, ProbabilityVector, Skill, SkillAssessment, SkillOntology,
};
