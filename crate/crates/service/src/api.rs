//! Request and response bodies for the `/v1` API.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use ksn_core::strategies::{StrategyKind, UncertaintyMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    Full,
    Session,
}

/// A strategy given either by name (`"hybrid"`) or as a full object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategyField {
    Name(String),
    Spec(StrategyKind),
}

impl StrategyField {
    pub fn resolve(&self) -> Result<StrategyKind, ApiError> {
        match self {
            StrategyField::Spec(s) => Ok(s.clone()),
            StrategyField::Name(name) => match name.as_str() {
                "random" => Ok(StrategyKind::Random),
                "max_uncertainty" => Ok(StrategyKind::MaxUncertainty),
                "expected_descent" => Ok(StrategyKind::ExpectedDescent {
                    measure: UncertaintyMeasure::default(),
                    candidate_cap: None,
                }),
                "hybrid" => Ok(StrategyKind::default()),
                other => Err(ApiError::invalid(
                    "strategy",
                    format!("unknown strategy `{other}`; expected random, max_uncertainty, expected_descent or hybrid"),
                )),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillAnswer {
    pub skill_id: String,
    pub mastered: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default)]
    pub strategy: Option<StrategyField>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub session_length: Option<usize>,
    #[serde(default)]
    pub exploration: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Skills whose state is already known; never asked.
    #[serde(default)]
    pub prior: Vec<SkillAnswer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRequest {
    pub skill_id: String,
    pub mastered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectionsRequest {
    #[serde(default)]
    pub corrections: Vec<SkillAnswer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    AwaitingAnswer,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub skill_id: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedSkill {
    pub skill_id: String,
    pub title: String,
    pub mastered: bool,
    /// Answered directly rather than predicted.
    pub assessed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub stop_reason: String,
    pub predicted: Vec<PredictedSkill>,
    /// Next skills to learn, for session mode.
    pub plan: Vec<String>,
}

/// Returned by create and answer calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub status: Status,
    pub question: Option<Question>,
    pub answered: usize,
    pub total_skills: usize,
    pub completion: Option<Completion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillProbability {
    pub skill_id: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub mode: ModeName,
    pub status: Status,
    pub assessed: Vec<SkillAnswer>,
    pub probabilities: Vec<SkillProbability>,
    pub ksue: usize,
    pub question: Option<Question>,
    pub completion: Option<Completion>,
    pub created_at: String,
    pub updated_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionsResponse {
    pub session_id: String,
    pub knowledge: Vec<SkillAnswer>,
    pub user_verified: bool,
    pub pool_learner_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub skills: usize,
    pub sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                fields: Vec::new(),
            },
        }
    }

    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        let mut e = Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_parameter", message);
        e.body.fields.push(field.into());
        e
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no session `{id}`"))
    }

    pub fn conflict(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<ksn_core::Error> for ApiError {
    fn from(e: ksn_core::Error) -> Self {
        use ksn_core::Error as E;
        match &e {
            E::Parameter { name, .. } => ApiError::invalid(name, e.to_string()),
            E::UnknownSkill(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown_skill", e.to_string()),
            E::Correction(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "correction_rejected", e.to_string()),
            E::UnexpectedAnswer { .. } => ApiError::conflict("wrong_skill", e.to_string()),
            E::LengthMismatch { .. } | E::Inconsistent { .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", e.to_string()),
            _ => ApiError::internal(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
