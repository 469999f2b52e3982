//! Plain-text file formats: cohort CSV, dataset and report JSON,
//! line-delimited transcripts and plot-data CSV series.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::engine::{AssessmentSpec, InitialSnapshot, Transcript, TranscriptStep, TranscriptSummary, TRANSCRIPT_VERSION};
use crate::error::{Error, Result};
use crate::evaluation::{AprioriPair, EvalReport, Heatmap, SweepTable};
use crate::ontology::{KnowledgeState, Mastery, SkillOntology};
use crate::simulation::{Cohort, Dataset, LearnerRecord};

pub const COHORT_HEADER: [&str; 3] = ["learner_id", "skill_id", "mastered"];
pub const DATASET_FORMAT: &str = "ksn-dataset";
pub const REPORT_FORMAT: &str = "ksn-report";
pub const FORMAT_VERSION: u32 = 1;
/// Heatmap cell for unknown mastery.
pub const UNKNOWN_MARKER: &str = "NA";

/// Reads a cohort. Skills without a row, or with an empty `mastered` cell,
/// are unknown. Learners keep their first-appearance order.
pub fn read_cohort<R: Read>(reader: R, ontology: &SkillOntology) -> Result<Cohort> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != COHORT_HEADER {
        return Err(Error::Format(format!(
            "cohort header must be `{}`, found `{}`",
            COHORT_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let n = ontology.len();
    let mut order: Vec<String> = Vec::new();
    let mut states: HashMap<String, Vec<Option<Mastery>>> = HashMap::new();
    for (i, record) in rdr.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|e| Error::Format(format!("row {row}: {e}")))?;
        let field = |j: usize| record.get(j).unwrap_or("");
        let (learner, skill_id, mastered) = (field(0), field(1), field(2));
        if learner.is_empty() {
            return Err(Error::Data(format!("row {row}: empty learner id")));
        }
        let skill = ontology
            .index_of(skill_id)
            .map_err(|_| Error::Data(format!("row {row}: unknown skill `{skill_id}`")))?;
        let value = match mastered {
            "1" | "true" => Mastery::Mastered,
            "0" | "false" => Mastery::Unmastered,
            "" => Mastery::UnknownTarget,
            other => return Err(Error::Data(format!("row {row}: mastered must be 1, 0 or empty, found `{other}`"))),
        };
        let entry = states.entry(learner.to_string()).or_insert_with(|| {
            order.push(learner.to_string());
            vec![None; n]
        });
        if entry[skill].is_some() {
            return Err(Error::Data(format!("row {row}: duplicate entry for learner `{learner}` and skill `{skill_id}`")));
        }
        entry[skill] = Some(value);
    }
    let learners = order
        .into_iter()
        .map(|id| {
            let values = states.remove(&id).unwrap_or_default();
            LearnerRecord {
                learner_id: id,
                knowledge: KnowledgeState::new(values.into_iter().map(|v| v.unwrap_or(Mastery::UnknownTarget)).collect()),
            }
        })
        .collect();
    Cohort::new(n, learners)
}

pub fn write_cohort<W: Write>(writer: W, cohort: &Cohort, ontology: &SkillOntology) -> Result<()> {
    if cohort.n_skills() != ontology.len() {
        return Err(Error::LengthMismatch {
            expected: ontology.len(),
            actual: cohort.n_skills(),
        });
    }
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(COHORT_HEADER)?;
    for learner in cohort.learners() {
        append_learner(&mut wtr, learner, ontology)?;
    }
    wtr.flush()?;
    Ok(())
}

fn append_learner<W: Write>(wtr: &mut csv::Writer<W>, learner: &LearnerRecord, ontology: &SkillOntology) -> Result<()> {
    for (s, skill) in ontology.skills().iter().enumerate() {
        let cell = match learner.knowledge.get(s) {
            Mastery::Mastered => "1",
            Mastery::Unmastered => "0",
            Mastery::UnknownTarget => "",
        };
        wtr.write_record([learner.learner_id.as_str(), skill.id.as_str(), cell])?;
    }
    Ok(())
}

pub fn load_cohort(path: &Path, ontology: &SkillOntology) -> Result<Cohort> {
    read_cohort(File::open(path)?, ontology)
}

pub fn save_cohort(path: &Path, cohort: &Cohort, ontology: &SkillOntology) -> Result<()> {
    write_cohort(BufWriter::new(File::create(path)?), cohort, ontology)
}

/// Appends one learner to a cohort file, writing the header if the file is
/// new or empty.
pub fn append_cohort_learner(path: &Path, learner: &LearnerRecord, ontology: &SkillOntology) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        wtr.write_record(COHORT_HEADER)?;
    }
    append_learner(&mut wtr, learner, ontology)?;
    wtr.flush()?;
    Ok(())
}

pub fn load_ontology(path: &Path) -> Result<SkillOntology> {
    SkillOntology::from_json(&std::fs::read_to_string(path)?)
}

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: T,
}

fn to_versioned<T: Serialize>(format: &str, body: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Borrowed<'a, T> {
        format: &'a str,
        version: u32,
        #[serde(flatten)]
        body: &'a T,
    }
    Ok(serde_json::to_string_pretty(&Borrowed {
        format,
        version: FORMAT_VERSION,
        body,
    })?)
}

fn from_versioned<T: DeserializeOwned>(format: &str, text: &str) -> Result<T> {
    let doc: Versioned<T> = serde_json::from_str(text)?;
    if doc.format != format {
        return Err(Error::Format(format!("expected format `{format}`, found `{}`", doc.format)));
    }
    if doc.version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported {format} version {}", doc.version)));
    }
    Ok(doc.body)
}

pub fn dataset_to_json(dataset: &Dataset) -> Result<String> {
    to_versioned(DATASET_FORMAT, dataset)
}

pub fn dataset_from_json(text: &str) -> Result<Dataset> {
    let d: Dataset = from_versioned(DATASET_FORMAT, text)?;
    for ex in &d.examples {
        if ex.input.len() != d.n_skills || ex.target.len() != d.n_skills {
            return Err(Error::Format("example width does not match n_skills".into()));
        }
    }
    Ok(d)
}

pub fn save_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    std::fs::write(path, dataset_to_json(dataset)?)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    dataset_from_json(&std::fs::read_to_string(path)?)
}

pub fn report_to_json(report: &EvalReport) -> Result<String> {
    to_versioned(REPORT_FORMAT, report)
}

pub fn report_from_json(text: &str) -> Result<EvalReport> {
    from_versioned(REPORT_FORMAT, text)
}

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TranscriptLine {
    Header {
        version: u32,
        n_skills: usize,
        spec: AssessmentSpec,
        initial: InitialSnapshot,
    },
    Step(TranscriptStep),
    Summary(TranscriptSummary),
}

pub fn write_transcript<W: Write>(mut writer: W, transcript: &Transcript) -> Result<()> {
    let mut line = |record: &TranscriptLine| -> Result<()> {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
        Ok(())
    };
    line(&TranscriptLine::Header {
        version: transcript.version,
        n_skills: transcript.n_skills,
        spec: transcript.spec.clone(),
        initial: transcript.initial.clone(),
    })?;
    for step in &transcript.steps {
        line(&TranscriptLine::Step(step.clone()))?;
    }
    if let Some(summary) = &transcript.summary {
        line(&TranscriptLine::Summary(summary.clone()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Parses and validates a transcript: header first, strictly increasing
/// iterations, distinct skills, summary last and consistent with the steps.
pub fn read_transcript<R: Read>(reader: R) -> Result<Transcript> {
    let mut transcript: Option<Transcript> = None;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TranscriptLine =
            serde_json::from_str(&line).map_err(|e| Error::Format(format!("transcript line {}: {e}", i + 1)))?;
        match (record, transcript.as_mut()) {
            (TranscriptLine::Header { version, n_skills, spec, initial }, None) => {
                if version != TRANSCRIPT_VERSION {
                    return Err(Error::Format(format!("unsupported transcript version {version}")));
                }
                transcript = Some(Transcript {
                    version,
                    n_skills,
                    spec,
                    initial,
                    steps: Vec::new(),
                    summary: None,
                });
            }
            (TranscriptLine::Step(step), Some(t)) if t.summary.is_none() => t.steps.push(step),
            (TranscriptLine::Summary(summary), Some(t)) if t.summary.is_none() => t.summary = Some(summary),
            _ => return Err(Error::Format(format!("transcript line {}: record out of order", i + 1))),
        }
    }
    let t = transcript.ok_or_else(|| Error::Format("transcript has no header".into()))?;
    validate_transcript(&t)?;
    Ok(t)
}

pub fn validate_transcript(t: &Transcript) -> Result<()> {
    let n = t.n_skills;
    let bad = |msg: String| Err(Error::Format(msg));
    if t.initial.assessment.len() != n || t.initial.probabilities.len() != n {
        return bad("initial snapshot width".into());
    }
    let mut seen = vec![false; n];
    let mut last = 0;
    for step in &t.steps {
        if step.iteration <= last {
            return bad(format!("iteration {} not increasing", step.iteration));
        }
        last = step.iteration;
        if step.skill >= n || std::mem::replace(&mut seen[step.skill], true) {
            return bad(format!("skill {} repeated or out of range", step.skill));
        }
        if step.probabilities.len() != n {
            return bad(format!("iteration {}: probability width", step.iteration));
        }
    }
    if let Some(s) = &t.summary {
        if s.questions != t.steps.len() || s.predicted.len() != n || s.assessment.len() != n {
            return bad("summary inconsistent with steps".into());
        }
        let expected: Vec<bool> = s.probabilities.iter().map(|&p| p > s.tau).collect();
        if expected != s.predicted {
            return bad("summary prediction is not the thresholded probabilities".into());
        }
    }
    Ok(())
}

pub fn save_transcript(path: &Path, transcript: &Transcript) -> Result<()> {
    write_transcript(BufWriter::new(File::create(path)?), transcript)
}

pub fn load_transcript(path: &Path) -> Result<Transcript> {
    read_transcript(File::open(path)?)
}

fn write_rows<W: Write>(writer: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `iteration,<column>` with iterations counted from 1.
pub fn write_curve<W: Write>(writer: W, column: &str, curve: &[f64]) -> Result<()> {
    write_rows(
        writer,
        &["iteration", column],
        curve.iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), v.to_string()]),
    )
}

/// `skill_id,empirical,apriori`; empty `empirical` when no learner's
/// state on the skill is known.
pub fn write_apriori<W: Write>(writer: W, pairs: &[AprioriPair], ontology: &SkillOntology) -> Result<()> {
    write_rows(
        writer,
        &["skill_id", "empirical", "apriori"],
        pairs
            .iter()
            .map(|p| vec![ontology.skill(p.skill).id.clone(), opt(p.empirical), p.apriori.to_string()]),
    )
}

/// `skill_id,<learner ids...>`, cells `1`, `0` or `NA`.
pub fn write_heatmap<W: Write>(writer: W, heatmap: &Heatmap, ontology: &SkillOntology) -> Result<()> {
    let mut header = vec!["skill_id"];
    header.extend(heatmap.learners.iter().map(String::as_str));
    write_rows(
        writer,
        &header,
        heatmap.rows.iter().enumerate().map(|(s, row)| {
            let mut cells = vec![ontology.skill(s).id.clone()];
            cells.extend(row.iter().map(|c| match c {
                Some(true) => "1".to_string(),
                Some(false) => "0".to_string(),
                None => UNKNOWN_MARKER.to_string(),
            }));
            cells
        }),
    )
}

pub fn read_heatmap<R: Read>(reader: R) -> Result<Heatmap> {
    let mut rdr = csv::Reader::from_reader(reader);
    let learners: Vec<String> = rdr.headers()?.iter().skip(1).map(String::from).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record
            .iter()
            .skip(1)
            .map(|c| match c {
                "1" => Ok(Some(true)),
                "0" => Ok(Some(false)),
                UNKNOWN_MARKER => Ok(None),
                other => Err(Error::Format(format!("heatmap cell `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Heatmap { learners, rows })
}

/// Per-fold rows: `learner_id,iterations,rkse_at_stop,tp,fp,tn,fn`.
pub fn write_folds<W: Write>(writer: W, report: &EvalReport) -> Result<()> {
    write_rows(
        writer,
        &["learner_id", "iterations", "rkse_at_stop", "true_pos", "false_pos", "true_neg", "false_neg"],
        report.folds.iter().map(|f| {
            vec![
                f.learner_id.clone(),
                f.iterations.to_string(),
                f.rkse_at_stop.to_string(),
                f.confusion.true_pos.to_string(),
                f.confusion.false_pos.to_string(),
                f.confusion.true_neg.to_string(),
                f.confusion.false_neg.to_string(),
            ]
        }),
    )
}

/// One-row summary with the path statistics and pooled precision/recall.
pub fn write_summary<W: Write>(writer: W, report: &EvalReport) -> Result<()> {
    let s = &report.stats;
    let pr = &report.precision_recall;
    write_rows(
        writer,
        &[
            "learners",
            "skills",
            "avg_iterations",
            "max_iterations",
            "avg_error",
            "std_error",
            "max_error",
            "precision",
            "recall",
            "negative_precision",
            "negative_recall",
        ],
        [vec![
            s.learners.to_string(),
            s.skills.to_string(),
            s.avg_iterations.to_string(),
            s.max_iterations.to_string(),
            s.avg_error.to_string(),
            s.std_error.to_string(),
            s.max_error.to_string(),
            opt(pr.precision),
            opt(pr.recall),
            opt(pr.negative_precision),
            opt(pr.negative_recall),
        ]],
    )
}

/// `k,seed,mean_error,mean_iterations,failures`.
pub fn write_sweep<W: Write>(writer: W, table: &SweepTable) -> Result<()> {
    write_rows(
        writer,
        &["k", "seed", "mean_error", "mean_iterations", "failures"],
        table.cells.iter().map(|c| {
            vec![
                c.k.to_string(),
                c.seed.to_string(),
                c.mean_error.to_string(),
                c.mean_iterations.to_string(),
                c.failures.to_string(),
            ]
        }),
    )
}
