use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};

use ksn_core::engine::{apply_correction, run_assessment, AssessmentSpec, RecordedOracle, Transcript};
use ksn_core::evaluation::{apriori_comparison, loo_evaluate, mastery_heatmap, mean_apriori_gap, training_size_sweep};
use ksn_core::formats::{
    append_cohort_learner, load_cohort, load_ontology, report_to_json, save_cohort, save_dataset, save_transcript, write_apriori,
    write_curve, write_folds, write_heatmap, write_summary, write_sweep,
};
use ksn_core::model::{load_model, save_model, train, TrainedModel};
use ksn_core::ontology::SkillOntology;
use ksn_core::seed::{derive_seed, digest_hex};
use ksn_core::simulation::{build_dataset, synth_personas, Cohort, Dataset};

use crate::config::{ConfigError, RunConfig};
use crate::interactive::Prompt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Full,
    Session,
}

fn ontology(cfg: &RunConfig) -> Result<SkillOntology> {
    load_ontology(&cfg.ontology).with_context(|| format!("loading ontology {}", cfg.ontology.display()))
}

fn cohort(cfg: &RunConfig, ontology: &SkillOntology) -> Result<Cohort> {
    load_cohort(&cfg.cohort, ontology).with_context(|| format!("loading cohort {}", cfg.cohort.display()))
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    Ok(&cfg.out)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn file_digest(path: &Path) -> Result<String> {
    Ok(digest_hex(&fs::read(path)?))
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let ontology = if cfg.ontology.exists() {
        ontology(cfg)?
    } else {
        let n = cfg
            .synth
            .skills
            .ok_or_else(|| ConfigError(format!("{} does not exist and synth.skills is not set", cfg.ontology.display())))?;
        let o = SkillOntology::linear(n)?;
        if let Some(dir) = cfg.ontology.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&cfg.ontology, o.to_json())?;
        println!("wrote {}", cfg.ontology.display());
        o
    };
    if cfg.synth.personas.is_empty() {
        return Err(ConfigError("synth.personas is empty".into()).into());
    }
    let mut merged: Option<Cohort> = None;
    for (i, group) in cfg.synth.personas.iter().enumerate() {
        let c = synth_personas(&ontology, group.count, &group.law, derive_seed(cfg.seed, "personas", &i.to_string()))?;
        merged = Some(match merged {
            None => c,
            Some(m) => m.merge(c)?,
        });
    }
    let cohort = merged.expect("at least one group");
    save_cohort(&cfg.cohort, &cohort, &ontology)?;
    println!("wrote {} learners to {}", cohort.len(), cfg.cohort.display());
    Ok(())
}

/// The dataset the full-cohort model is trained on.
fn full_dataset(cfg: &RunConfig, cohort: &Cohort) -> Result<Dataset> {
    let mut sim = cfg.simulation_config();
    sim.rng_seed = derive_seed(cfg.seed, "simulation", "");
    Ok(build_dataset(cohort, &sim, cfg.simulation.completeness_floor)?)
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let ontology = ontology(cfg)?;
    let cohort = cohort(cfg, &ontology)?;
    let dataset = full_dataset(cfg, &cohort)?;
    let path = out_dir(cfg)?.join("dataset.json");
    save_dataset(&path, &dataset)?;
    println!("examples: {}", dataset.len());
    println!("dataset: {} sha256 {}", path.display(), file_digest(&path)?);
    Ok(())
}

pub fn train_model(cfg: &RunConfig) -> Result<()> {
    let eval = cfg.eval_config()?;
    let ontology = ontology(cfg)?;
    let cohort = cohort(cfg, &ontology)?;
    let dataset = full_dataset(cfg, &cohort)?;
    let out = out_dir(cfg)?;
    let data_path = out.join("dataset.json");
    save_dataset(&data_path, &dataset)?;
    let mut training = eval.training.clone();
    training.rng_seed = derive_seed(cfg.seed, "training", "");
    let model = train(&dataset, &eval.architecture(ontology.len())?, &training)?;
    let model_path = cfg.model_path();
    if let Some(dir) = model_path.parent() {
        fs::create_dir_all(dir)?;
    }
    save_model(&model, &model_path)?;
    let p = &model.provenance;
    println!("learners: {}", p.learner_ids.len());
    println!("examples: {}", p.examples);
    println!("initial loss: {}", p.initial_loss);
    println!("final loss: {}", p.final_loss);
    println!("dataset: {} sha256 {}", data_path.display(), file_digest(&data_path)?);
    println!("model: {} sha256 {}", model_path.display(), file_digest(&model_path)?);
    Ok(())
}

fn model(cfg: &RunConfig, ontology: &SkillOntology) -> Result<TrainedModel> {
    let path = cfg.model_path();
    if !path.exists() {
        return Err(ConfigError(format!("no model at {}; run `ksn train` first", path.display())).into());
    }
    let m = load_model(&path).with_context(|| format!("loading model {}", path.display()))?;
    if m.architecture.n_skills() != ontology.len() {
        return Err(ksn_core::Error::LengthMismatch {
            expected: ontology.len(),
            actual: m.architecture.n_skills(),
        }
        .into());
    }
    Ok(m)
}

fn spec(cfg: &RunConfig, mode: Mode, key: &str) -> Result<AssessmentSpec> {
    let eval = cfg.eval_config()?;
    let mut spec = match mode {
        Mode::Full => eval.assessment_spec(cfg.seed, key),
        Mode::Session => AssessmentSpec::session(
            &cfg.session_config(derive_seed(cfg.seed, "strategy", key)),
            eval.strategy.clone(),
            eval.tau,
        ),
    };
    spec.descent_scope = eval.descent_scope;
    spec.validate()?;
    Ok(spec)
}

fn print_outcome(t: &Transcript, ontology: &SkillOntology) {
    println!("questions: {}", t.questions());
    let Some(s) = &t.summary else { return };
    match s.end.stop_reason() {
        Some(r) => println!("stopped: {}", serde_json::to_value(r).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()),
        None => println!("failed: {:?}", s.end),
    }
    let ids = |pick: &dyn Fn(usize) -> bool| -> Vec<String> {
        (0..ontology.len()).filter(|&i| pick(i)).map(|i| ontology.skill(i).id.clone()).collect()
    };
    println!("mastered: {}", ids(&|i| s.predicted[i]).join(" "));
    println!("not mastered: {}", ids(&|i| !s.predicted[i]).join(" "));
    if !s.plan.is_empty() {
        let plan: Vec<&str> = s.plan.iter().map(|&i| ontology.skill(i).id.as_str()).collect();
        println!("next to learn: {}", plan.join(" "));
    }
    if let Some(e) = t.final_rkse() {
        println!("error on unasked skills: {e}");
    }
}

pub fn assess(cfg: &RunConfig, mode: Mode, learner: Option<&str>) -> Result<()> {
    let ontology = ontology(cfg)?;
    let model = model(cfg, &ontology)?;
    let transcripts = out_dir(cfg)?.join("transcripts");
    fs::create_dir_all(&transcripts)?;
    match learner {
        Some(id) => {
            let cohort = cohort(cfg, &ontology)?;
            let record = cohort
                .get(id)
                .ok_or_else(|| ksn_core::Error::Data(format!("no learner `{id}` in {}", cfg.cohort.display())))?;
            let spec = spec(cfg, mode, id)?;
            let t = run_assessment(&model, &mut RecordedOracle::new(record.knowledge.clone()), spec, None)?;
            let path = transcripts.join(format!("{id}.jsonl"));
            save_transcript(&path, &t)?;
            print_outcome(&t, &ontology);
            println!("transcript: {}", path.display());
        }
        None => {
            let key = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
            let spec = spec(cfg, mode, &key)?;
            let stdin = std::io::stdin();
            let mut prompt = Prompt {
                ontology: &ontology,
                input: stdin.lock(),
                output: std::io::stdout(),
            };
            let t = run_assessment(&model, &mut prompt, spec, None)?;
            let path = transcripts.join(format!("interactive-{key}.jsonl"));
            save_transcript(&path, &t)?;
            print_outcome(&t, &ontology);
            println!("transcript: {}", path.display());
            if t.summary.as_ref().is_some_and(|s| s.end.stop_reason().is_some()) {
                loop {
                    let Some(corrections) = prompt.corrections()? else { break };
                    match apply_correction(&t, &corrections) {
                        Ok((_, record)) => {
                            let pool = cfg.out.join("corrections.csv");
                            append_cohort_learner(&pool, &record.to_learner(format!("interactive-{key}")), &ontology)?;
                            println!("added verified state to {}", pool.display());
                            break;
                        }
                        Err(e) => println!("{e}"),
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn eval(cfg: &RunConfig) -> Result<()> {
    let config = cfg.eval_config()?;
    let ontology = ontology(cfg)?;
    let cohort = cohort(cfg, &ontology)?;
    let report = loo_evaluate(&cohort, &config)?;
    let out = out_dir(cfg)?;
    fs::write(out.join("report.json"), report_to_json(&report)?)?;
    write_summary(create(&out.join("summary.csv"))?, &report)?;
    write_folds(create(&out.join("folds.csv"))?, &report)?;
    write_curve(create(&out.join("error_curve.csv"))?, "error", &report.error_curve)?;
    write_curve(create(&out.join("uncertainty_curve.csv"))?, "uncertain", &report.uncertainty_curve)?;
    write_heatmap(create(&out.join("heatmap.csv"))?, &mastery_heatmap(&cohort), &ontology)?;
    let full = config.train_on(&cohort, cfg.seed, "")?;
    let pairs = apriori_comparison(&full, &cohort)?;
    write_apriori(create(&out.join("apriori.csv"))?, &pairs, &ontology)?;

    let s = &report.stats;
    println!("learners: {} evaluated, {} failed, {} skipped", s.learners, report.failures.len(), report.skipped.len());
    println!("questions: mean {:.2}, max {}", s.avg_iterations, s.max_iterations);
    println!("error: mean {:.4}, std {:.4}, max {:.4}", s.avg_error, s.std_error, s.max_error);
    println!("precision {:?} recall {:?}", report.precision_recall.precision, report.precision_recall.recall);
    if let Some(gap) = mean_apriori_gap(&pairs) {
        println!("a-priori gap: {gap:.4}");
    }
    for f in &report.failures {
        println!("fold {} failed: {}", f.learner_id, f.error);
    }
    println!("wrote {}", out.display());
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    let config = cfg.eval_config()?;
    let ontology = ontology(cfg)?;
    let cohort = cohort(cfg, &ontology)?;
    let table = training_size_sweep(&cohort, &cfg.sweep.ks, &cfg.sweep.seeds, &config)?;
    let path = out_dir(cfg)?.join("sweep.csv");
    write_sweep(create(&path)?, &table)?;
    for (k, e) in &table.by_k {
        println!("k {k}: error {e:.4}");
    }
    match table.spearman {
        Some(r) => println!("spearman: {r:.3}"),
        None => println!("spearman: undefined"),
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn serve(cfg: &RunConfig) -> Result<()> {
    let ontology = ontology(cfg)?;
    let model = model(cfg, &ontology)?;
    let data_dir = cfg.serve.data_dir.clone().unwrap_or_else(|| cfg.out.join("service"));
    let mut service = ksn_service::ServiceConfig::new(&data_dir);
    if let Some(p) = &cfg.serve.pool {
        service.pool_path = p.clone();
    }
    service.master_seed = cfg.seed;
    let a = &cfg.assessment;
    service.defaults = ksn_service::SessionDefaults {
        strategy: a.strategy.clone(),
        epsilon: a.epsilon,
        tau: a.tau,
        session_length: a.session_length,
        exploration: a.exploration,
    };
    let state = Arc::new(ksn_service::AppState::open(Arc::new(model), ontology, service)?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&cfg.serve.bind)
            .await
            .with_context(|| format!("binding {}", cfg.serve.bind))?;
        println!("serving on http://{}", listener.local_addr()?);
        ksn_service::serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok(())
    })
}
