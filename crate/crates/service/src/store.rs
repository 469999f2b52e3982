//! Session registry backed by one append-only journal per session.
//!
//! A journal is a JSON-lines file under `<data_dir>/sessions/`. The first
//! record fixes the spec and prior; later records are answers and
//! corrections. Runs are deterministic given the spec and the answers, so
//! replaying a journal reproduces the session exactly, pending question
//! included.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::Utc;
use serde::{Deserialize, Serialize};

use ksn_core::engine::{apply_correction, AssessmentMode, AssessmentRun, AssessmentSpec, Correction, RunEnd};
use ksn_core::formats::{append_cohort_learner, save_transcript};
use ksn_core::model::Predictor;
use ksn_core::ontology::{AssessmentState, SkillAssessment, SkillOntology};
use ksn_core::seed::derive_seed;
use ksn_core::strategies::StrategyKind;

use crate::api::*;

pub type SharedModel = Arc<dyn Predictor + Send + Sync>;
type Run = AssessmentRun<SharedModel>;

/// Values used when a create request leaves a field out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionDefaults {
    pub strategy: StrategyKind,
    pub epsilon: f64,
    pub tau: f64,
    pub session_length: usize,
    pub exploration: f64,
}

impl Default for SessionDefaults {
    fn default() -> Self {
        Self {
            strategy: StrategyKind::default(),
            epsilon: 0.1,
            tau: 0.5,
            session_length: 3,
            exploration: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Cohort CSV that verified corrections are appended to.
    pub pool_path: PathBuf,
    /// Seeds sessions that do not bring their own.
    pub master_seed: u64,
    pub defaults: SessionDefaults,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        let data_dir = data_dir.into();
        Self {
            pool_path: data_dir.join("corrections.csv"),
            data_dir,
            master_seed: 0,
            defaults: SessionDefaults::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum JournalRecord {
    Created {
        spec: AssessmentSpec,
        prior: AssessmentState,
        at: String,
    },
    Answer {
        skill: usize,
        mastered: bool,
        at: String,
    },
    Corrections {
        corrections: Vec<Correction>,
        pool_learner_id: String,
        at: String,
    },
}

struct Session {
    id: String,
    run: Run,
    created_at: String,
    updated_at: String,
    corrections: usize,
    journal: PathBuf,
}

pub struct AppState {
    model: SharedModel,
    ontology: Arc<SkillOntology>,
    config: ServiceConfig,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    /// Serializes appends to the correction pool.
    pool_lock: Mutex<()>,
}

fn now() -> String {
    Utc::now().to_rfc3339()
}

impl AppState {
    /// Opens the data directory and replays every session journal in it.
    pub fn open(model: SharedModel, ontology: SkillOntology, config: ServiceConfig) -> ksn_core::Result<Self> {
        if model.n_skills() != ontology.len() {
            return Err(ksn_core::Error::LengthMismatch {
                expected: ontology.len(),
                actual: model.n_skills(),
            });
        }
        fs::create_dir_all(config.data_dir.join("sessions"))?;
        fs::create_dir_all(config.data_dir.join("transcripts"))?;
        let state = Self {
            model,
            ontology: Arc::new(ontology),
            config,
            sessions: RwLock::new(HashMap::new()),
            pool_lock: Mutex::new(()),
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(state.config.data_dir.join("sessions"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        let mut sessions = state.sessions.write().unwrap();
        for path in paths {
            match state.replay(&path) {
                Ok(s) => {
                    sessions.insert(s.id.clone(), Arc::new(Mutex::new(s)));
                }
                Err(e) => log::warn!("skipping journal {}: {e}", path.display()),
            }
        }
        log::info!("restored {} sessions", sessions.len());
        drop(sessions);
        Ok(state)
    }

    pub fn ontology(&self) -> &SkillOntology {
        &self.ontology
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    fn replay(&self, path: &Path) -> ksn_core::Result<Session> {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| ksn_core::Error::Data("journal name".into()))?
            .to_string();
        let lines: Vec<String> = BufReader::new(File::open(path)?).lines().collect::<std::io::Result<_>>()?;
        let mut records = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<JournalRecord>(line) {
                Ok(r) => records.push(r),
                // A torn final write from a crash; everything before it is intact.
                Err(e) if i + 1 == lines.len() => log::warn!("{}: dropping torn last record: {e}", path.display()),
                Err(e) => return Err(ksn_core::Error::Format(format!("line {}: {e}", i + 1))),
            }
        }
        let mut records = records.into_iter();
        let Some(JournalRecord::Created { spec, prior, at }) = records.next() else {
            return Err(ksn_core::Error::Format("journal does not start with a created record".into()));
        };
        let run = AssessmentRun::start(self.model.clone(), spec, Some(prior), None)?;
        let mut session = Session {
            id,
            run,
            updated_at: at.clone(),
            created_at: at,
            corrections: 0,
            journal: path.to_path_buf(),
        };
        for r in records {
            match r {
                JournalRecord::Created { .. } => return Err(ksn_core::Error::Format("second created record".into())),
                JournalRecord::Answer { skill, mastered, at } => {
                    session.run.answer(skill, mastered)?;
                    session.updated_at = at;
                }
                JournalRecord::Corrections { at, .. } => {
                    session.corrections += 1;
                    session.updated_at = at;
                }
            }
        }
        Ok(session)
    }

    fn skill_index(&self, id: &str, field: &str) -> Result<usize, ApiError> {
        self.ontology
            .index_of(id)
            .map_err(|_| ApiError::invalid(field, format!("unknown skill `{id}`")))
    }

    /// Turns a create request into a validated spec and prior.
    pub fn resolve_request(&self, req: &CreateSessionRequest, session_id: &str) -> Result<(AssessmentSpec, AssessmentState), ApiError> {
        let d = &self.config.defaults;
        let strategy = match &req.strategy {
            Some(s) => s.resolve()?,
            None => d.strategy.clone(),
        };
        let seed = req
            .seed
            .unwrap_or_else(|| derive_seed(self.config.master_seed, "strategy", session_id));
        let mode = match req.mode {
            ModeName::Full => {
                if req.session_length.is_some() || req.exploration.is_some() {
                    return Err(ApiError::invalid("mode", "session_length and exploration need mode `session`"));
                }
                AssessmentMode::Full
            }
            ModeName::Session => AssessmentMode::Session {
                length: req.session_length.unwrap_or(d.session_length),
                exploration: req.exploration.unwrap_or(d.exploration),
            },
        };
        let spec = AssessmentSpec {
            mode,
            strategy,
            epsilon: req.epsilon.unwrap_or(d.epsilon),
            tau: req.tau.unwrap_or(d.tau),
            descent_scope: Default::default(),
            rng_seed: seed,
        };
        spec.validate().map_err(|e| match e {
            ksn_core::Error::Parameter { name, reason } => {
                let field = match name {
                    "length" => "session_length",
                    other => other,
                };
                ApiError::invalid(field, format!("invalid `{field}`: {reason}"))
            }
            other => ApiError::from(other),
        })?;
        let mut prior = AssessmentState::empty(self.ontology.len());
        for a in &req.prior {
            let s = self.skill_index(&a.skill_id, "prior")?;
            if prior.get(s).is_assessed() {
                return Err(ApiError::invalid("prior", format!("skill `{}` listed twice", a.skill_id)));
            }
            prior.set(s, SkillAssessment::from_answer(a.mastered));
        }
        Ok((spec, prior))
    }

    pub fn create(&self, req: &CreateSessionRequest) -> Result<SessionView, ApiError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let (spec, prior) = self.resolve_request(req, &id)?;
        let run = AssessmentRun::start(self.model.clone(), spec.clone(), Some(prior.clone()), None)?;
        let at = now();
        let journal = self.config.data_dir.join("sessions").join(format!("{id}.jsonl"));
        let session = Session {
            id: id.clone(),
            run,
            created_at: at.clone(),
            updated_at: at.clone(),
            corrections: 0,
            journal,
        };
        append_record(&session.journal, &JournalRecord::Created { spec, prior, at }).map_err(io_error)?;
        let view = self.view(&session);
        if session.run.is_complete() {
            self.write_transcript(&session);
        }
        self.sessions.write().unwrap().insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    pub fn state(&self, id: &str) -> Result<SessionState, ApiError> {
        let entry = self.get(id)?;
        let s = entry.lock().unwrap();
        let assessment = s.run.assessment();
        let assessed = (0..assessment.len())
            .filter_map(|i| {
                assessment.get(i).is_assessed().then(|| SkillAnswer {
                    skill_id: self.ontology.skill(i).id.clone(),
                    mastered: assessment.get(i) == SkillAssessment::Mastered,
                })
            })
            .collect();
        let probabilities = s
            .run
            .probabilities()
            .values()
            .iter()
            .enumerate()
            .map(|(i, &p)| SkillProbability {
                skill_id: self.ontology.skill(i).id.clone(),
                probability: p,
            })
            .collect();
        let view = self.view(&s);
        Ok(SessionState {
            session_id: s.id.clone(),
            mode: match s.run.spec().mode {
                AssessmentMode::Full => ModeName::Full,
                AssessmentMode::Session { .. } => ModeName::Session,
            },
            status: view.status,
            assessed,
            probabilities,
            ksue: s.run.ksue(),
            question: view.question,
            completion: view.completion,
            created_at: s.created_at.clone(),
            updated_at: s.updated_at.clone(),
        })
    }

    pub fn answer(&self, id: &str, req: &AnswerRequest) -> Result<SessionView, ApiError> {
        let entry = self.get(id)?;
        let mut s = entry.lock().unwrap();
        let skill = self.skill_index(&req.skill_id, "skill_id")?;
        // A retried submit of the answer just recorded gets the same reply.
        if let Some(last) = s.run.transcript().steps.last() {
            if last.skill == skill {
                if last.answer == req.mastered {
                    return Ok(self.view(&s));
                }
                return Err(ApiError::conflict("conflicting_answer", format!("skill `{}` was already answered differently", req.skill_id)));
            }
        }
        let Some(pending) = s.run.pending() else {
            return Err(ApiError::conflict("session_complete", "the session has finished; no more answers are accepted"));
        };
        if pending.skill != skill {
            let expected = self.ontology.skill(pending.skill).id.clone();
            return Err(ApiError::conflict(
                "wrong_skill",
                format!("answer for `{}` but the pending question is `{expected}`", req.skill_id),
            ));
        }
        let at = now();
        append_record(&s.journal, &JournalRecord::Answer { skill, mastered: req.mastered, at: at.clone() }).map_err(io_error)?;
        s.run.answer(skill, req.mastered)?;
        s.updated_at = at;
        if s.run.is_complete() {
            self.write_transcript(&s);
        }
        Ok(self.view(&s))
    }

    pub fn correct(&self, id: &str, req: &CorrectionsRequest) -> Result<CorrectionsResponse, ApiError> {
        let entry = self.get(id)?;
        let mut s = entry.lock().unwrap();
        if !s.run.is_complete() {
            return Err(ApiError::conflict("session_incomplete", "corrections need a finished session"));
        }
        let mut corrections = Vec::with_capacity(req.corrections.len());
        for c in &req.corrections {
            corrections.push(Correction {
                skill: self.skill_index(&c.skill_id, "corrections")?,
                mastered: c.mastered,
            });
        }
        let (knowledge, record) = apply_correction(s.run.transcript(), &corrections)?;
        let learner_id = format!("{}-c{}", s.id, s.corrections + 1);
        {
            let _guard = self.pool_lock.lock().unwrap();
            append_cohort_learner(&self.config.pool_path, &record.to_learner(learner_id.clone()), &self.ontology)?;
        }
        let at = now();
        append_record(
            &s.journal,
            &JournalRecord::Corrections {
                corrections,
                pool_learner_id: learner_id.clone(),
                at: at.clone(),
            },
        )
        .map_err(io_error)?;
        s.corrections += 1;
        s.updated_at = at;
        Ok(CorrectionsResponse {
            session_id: s.id.clone(),
            knowledge: knowledge
                .values()
                .iter()
                .enumerate()
                .map(|(i, m)| SkillAnswer {
                    skill_id: self.ontology.skill(i).id.clone(),
                    mastered: m.as_bool().unwrap_or(false),
                })
                .collect(),
            user_verified: record.user_verified,
            pool_learner_id: learner_id,
        })
    }

    /// Writes transcripts of every session, finished or not. Called on shutdown.
    pub fn flush_transcripts(&self) {
        for entry in self.sessions.read().unwrap().values() {
            self.write_transcript(&entry.lock().unwrap());
        }
    }

    pub fn transcript_path(&self, id: &str) -> PathBuf {
        self.config.data_dir.join("transcripts").join(format!("{id}.jsonl"))
    }

    fn write_transcript(&self, s: &Session) {
        if let Err(e) = save_transcript(&self.transcript_path(&s.id), s.run.transcript()) {
            log::error!("writing transcript for {}: {e}", s.id);
        }
    }

    fn view(&self, s: &Session) -> SessionView {
        let question = s.run.pending().map(|p| {
            let skill = self.ontology.skill(p.skill);
            Question {
                skill_id: skill.id.clone(),
                title: skill.title.clone(),
            }
        });
        let completion = s.run.transcript().summary.as_ref().map(|sum| Completion {
            stop_reason: match &sum.end {
                RunEnd::Stopped { reason } => serde_json::to_value(reason)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                RunEnd::Failed { .. } => "failed".into(),
            },
            predicted: sum
                .predicted
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    let skill = self.ontology.skill(i);
                    PredictedSkill {
                        skill_id: skill.id.clone(),
                        title: skill.title.clone(),
                        mastered: m,
                        assessed: sum.assessment.get(i).is_assessed(),
                    }
                })
                .collect(),
            plan: sum.plan.iter().map(|&i| self.ontology.skill(i).id.clone()).collect(),
        });
        SessionView {
            session_id: s.id.clone(),
            status: if s.run.is_complete() { Status::Complete } else { Status::AwaitingAnswer },
            question,
            answered: s.run.transcript().steps.len(),
            total_skills: self.ontology.len(),
            completion,
        }
    }
}

fn append_record(path: &Path, record: &JournalRecord) -> std::io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_string(record).map_err(std::io::Error::other)?;
    line.push('\n');
    f.write_all(line.as_bytes())?;
    f.sync_data()
}

fn io_error(e: std::io::Error) -> ApiError {
    ApiError::internal(format!("journal write failed: {e}"))
}
