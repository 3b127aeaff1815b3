//! End-to-end runs: build prompts, obtain completions, classify, and append
//! one record per prompt to `records.jsonl` in the output directory.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ActionRef, Corpus};
use crate::describe::DescriptionClass;
use crate::eval::{AreMode, Evaluator, ResultClass};
use crate::planner::PlannerConfig;
use crate::prompt::{
    build_prompt, complete, derive_seed, sample_context, CompletionBackend, CompletionConfig, CompletionError,
    HttpBackend, PromptQuery, PromptRecord, ReplayStore, DEFAULT_INSTRUCTION,
};

pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ExperimentError {
    /// Process exit code: 1 config, 2 backend, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Backend(_) => 2,
            ExperimentError::Io { .. } => 3,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    Replay {
        path: PathBuf,
    },
    /// Endpoint and token fall back to the environment when unset.
    Http {
        #[serde(default)]
        url: Option<String>,
        #[serde(default)]
        token_env: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub tag: String,
    pub backend: BackendConfig,
}

fn default_classes() -> Vec<DescriptionClass> {
    DescriptionClass::ALL.to_vec()
}

fn default_prompts() -> usize {
    20
}

fn default_context() -> usize {
    3
}

fn default_k() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus_dir: PathBuf,
    /// Domains to load; every corpus domain when unset.
    #[serde(default)]
    pub domains: Option<Vec<String>>,
    /// Target actions as `domain/action`; every loaded action when unset.
    #[serde(default)]
    pub actions: Option<Vec<String>>,
    #[serde(default = "default_classes")]
    pub classes: Vec<DescriptionClass>,
    #[serde(default = "default_prompts")]
    pub prompts_per_action: usize,
    #[serde(default = "default_context")]
    pub context_count: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub instruction: Option<String>,
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub completion: CompletionConfig,
    #[serde(default)]
    pub are_mode: AreMode,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Reads a JSON config; relative paths are taken from the config's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.corpus_dir = base.join(&cfg.corpus_dir);
        cfg.output_dir = base.join(&cfg.output_dir);
        for m in &mut cfg.models {
            if let BackendConfig::Replay { path } = &mut m.backend {
                *path = base.join(&*path);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.prompts_per_action == 0 {
            return bad("prompts_per_action must be at least 1");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.classes.is_empty() {
            return bad("no description classes");
        }
        if self.models.is_empty() {
            return bad("no models");
        }
        if self.completion.max_new_tokens == 0 {
            return bad("max_new_tokens must be at least 1");
        }
        let mut tags = HashSet::new();
        for m in &self.models {
            if !tags.insert(&m.tag) {
                return bad(&format!("duplicate model tag `{}`", m.tag));
            }
        }
        Ok(())
    }

    pub fn instruction(&self) -> &str {
        self.instruction.as_deref().unwrap_or(DEFAULT_INSTRUCTION)
    }

    fn targets(&self, corpus: &Corpus) -> Result<Vec<ActionRef>, ExperimentError> {
        let Some(names) = &self.actions else { return Ok(corpus.actions()) };
        names
            .iter()
            .map(|n| {
                let (d, a) = n
                    .split_once('/')
                    .ok_or_else(|| ExperimentError::Config(format!("action `{n}` is not `domain/action`")))?;
                let r = ActionRef::new(d.to_lowercase(), a.to_lowercase());
                corpus.action(&r).ok_or_else(|| ExperimentError::Config(format!("unknown action `{n}`")))?;
                Ok(r)
            })
            .collect()
    }
}

/// One line of `records.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub prompt_id: String,
    pub model_tag: String,
    pub domain: String,
    pub action: String,
    pub description_class: DescriptionClass,
    pub seed: u64,
    pub context: Vec<ActionRef>,
    pub prompt_key: String,
    /// `None` for a transport failure.
    pub result: Option<ResultClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport_error: Option<String>,
    pub are: Option<usize>,
    pub wall_time_ms: u64,
    pub response: String,
    pub diagnostics: String,
}

/// Prompt ids sort in run order: domain, action, class, index.
pub fn prompt_id(target: &ActionRef, class: DescriptionClass, index: usize) -> String {
    format!("{}/{}/{}/{index:03}", target.domain, target.action, class)
}

/// Every prompt of the run in id order, identical for all models.
pub fn plan_prompts(cfg: &ExperimentConfig, corpus: &Corpus) -> Result<Vec<PromptRecord>, ExperimentError> {
    let mut out = Vec::new();
    for target in cfg.targets(corpus)? {
        for &class in &cfg.classes {
            for i in 0..cfg.prompts_per_action {
                let seed = derive_seed(cfg.seed, &[&target.domain, &target.action, class.name(), &i.to_string()]);
                let context = sample_context(corpus, &target, cfg.context_count, derive_seed(seed, &["context"]))
                    .map_err(|e| ExperimentError::Config(e.to_string()))?;
                let query =
                    PromptQuery { prompt_id: prompt_id(&target, class, i), target: target.clone(), class, seed };
                out.push(
                    build_prompt(corpus, cfg.instruction(), &context, &query)
                        .map_err(|e| ExperimentError::Config(e.to_string()))?,
                );
            }
        }
    }
    Ok(out)
}

pub fn make_backend(model: &ModelConfig) -> Result<Arc<dyn CompletionBackend>, ExperimentError> {
    match &model.backend {
        BackendConfig::Replay { path } => {
            let store = ReplayStore::load(path)
                .map_err(|e| ExperimentError::Config(format!("replay file {}: {e}", path.display())))?;
            Ok(Arc::new(store))
        }
        BackendConfig::Http { url, token_env } => {
            let mut backend = match url {
                Some(u) => HttpBackend::new(u.clone(), std::env::var(crate::prompt::TOKEN_ENV).ok()),
                None => HttpBackend::from_env().map_err(|e| ExperimentError::Config(e.to_string()))?,
            };
            if let Some(var) = token_env {
                backend.token = std::env::var(var).ok();
            }
            Ok(Arc::new(backend))
        }
    }
}

/// Reads the records already on disk.
pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    let file = File::open(path).map_err(|e| ExperimentError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ExperimentError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            Err(e) => {
                // A torn final line from an interrupted run is dropped and redone.
                log::warn!("{}:{}: skipping unreadable record: {e}", path.display(), i + 1);
            }
        }
    }
    Ok(out)
}

fn build_evaluators(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
    prompts: &[PromptRecord],
) -> Result<BTreeMap<String, Evaluator>, ExperimentError> {
    let domains: Vec<&str> = {
        let mut d: Vec<&str> = prompts.iter().map(|p| p.target.domain.as_str()).collect();
        d.sort();
        d.dedup();
        d
    };
    let planner = PlannerConfig::with_k(cfg.k);
    domains
        .par_iter()
        .map(|name| {
            let cd = corpus.domain(name).ok_or_else(|| ExperimentError::Config(format!("unknown domain `{name}`")))?;
            let ev = Evaluator::new(cd.domain.clone(), cd.problems.clone(), planner.clone())
                .map_err(|e| ExperimentError::Config(format!("{name}: {e}")))?;
            Ok((name.to_string(), ev.with_are_mode(cfg.are_mode)))
        })
        .collect()
}

fn run_one(
    prompt: &PromptRecord,
    model: &ModelConfig,
    backend: &dyn CompletionBackend,
    evaluator: &Evaluator,
    completion: &CompletionConfig,
) -> Result<ExperimentRecord, ExperimentError> {
    let mut record = ExperimentRecord {
        prompt_id: prompt.prompt_id.clone(),
        model_tag: model.tag.clone(),
        domain: prompt.target.domain.clone(),
        action: prompt.target.action.clone(),
        description_class: prompt.class,
        seed: prompt.seed,
        context: prompt.context.clone(),
        prompt_key: prompt.key(),
        result: None,
        transport_error: None,
        are: None,
        wall_time_ms: 0,
        response: String::new(),
        diagnostics: String::new(),
    };
    match complete(backend, prompt, completion) {
        Ok(c) => {
            let cls = evaluator
                .classify(&c.text, &prompt.target.action)
                .map_err(|e| ExperimentError::Config(format!("{}: {e}", prompt.prompt_id)))?;
            record.result = Some(cls.result);
            record.are = cls.are;
            record.wall_time_ms = c.latency_ms;
            record.response = c.text;
            record.diagnostics = cls.diagnostics;
        }
        Err(e @ CompletionError::ReplayMiss { .. }) => {
            return Err(ExperimentError::Backend(format!("{} for model `{}`: {e}", prompt.prompt_id, model.tag)))
        }
        Err(e) => {
            record.transport_error = Some(e.to_string());
            record.diagnostics = e.to_string();
        }
    }
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub written: usize,
    pub skipped: usize,
    pub records_path: PathBuf,
}

/// Runs every (model, prompt) pair not already recorded. Results are
/// appended in prompt order, a batch at a time, so an interrupted run can
/// be resumed and ends with the same file.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, ExperimentError> {
    cfg.validate()?;
    let corpus =
        Corpus::load(&cfg.corpus_dir, cfg.domains.as_deref()).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let prompts = plan_prompts(cfg, &corpus)?;
    let evaluators = build_evaluators(cfg, &corpus, &prompts)?;
    let backends: Vec<Arc<dyn CompletionBackend>> = cfg.models.iter().map(make_backend).collect::<Result<_, _>>()?;

    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| ExperimentError::io(&cfg.output_dir, e))?;
    let records_path = cfg.output_dir.join(RECORDS_FILE);
    let done: HashSet<(String, String)> = if records_path.exists() {
        read_records(&records_path)?.into_iter().map(|r| (r.model_tag, r.prompt_id)).collect()
    } else {
        HashSet::new()
    };
    rewrite_without_torn_tail(&records_path)?;

    let tasks: Vec<(usize, &PromptRecord)> = cfg
        .models
        .iter()
        .enumerate()
        .flat_map(|(m, model)| {
            let done = &done;
            prompts
                .iter()
                .filter(move |p| !done.contains(&(model.tag.clone(), p.prompt_id.clone())))
                .map(move |p| (m, p))
        })
        .collect();
    let skipped = cfg.models.len() * prompts.len() - tasks.len();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.completion.concurrency.max(1))
        .build()
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut sink = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&records_path)
        .map_err(|e| ExperimentError::io(&records_path, e))?;
    let batch = cfg.completion.concurrency.max(1) * 4;
    let mut written = 0;
    for chunk in tasks.chunks(batch) {
        let results: Vec<Result<ExperimentRecord, ExperimentError>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&(m, p)| {
                    run_one(p, &cfg.models[m], backends[m].as_ref(), &evaluators[&p.target.domain], &cfg.completion)
                })
                .collect()
        });
        for r in results {
            let line = serde_json::to_string(&r?).map_err(|e| ExperimentError::Config(e.to_string()))?;
            writeln!(sink, "{line}").map_err(|e| ExperimentError::io(&records_path, e))?;
            written += 1;
        }
        sink.flush().map_err(|e| ExperimentError::io(&records_path, e))?;
        log::info!("{written}/{} records written", tasks.len());
    }
    Ok(RunSummary { written, skipped, records_path })
}

/// Drops a partially written last line so appends start on a fresh line.
fn rewrite_without_torn_tail(path: &Path) -> Result<(), ExperimentError> {
    if !path.exists() {
        return Ok(());
    }
    let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    if text.is_empty() || text.ends_with('\n') {
        return Ok(());
    }
    let keep = text.rfind('\n').map_or(0, |i| i + 1);
    std::fs::write(path, &text[..keep]).map_err(|e| ExperimentError::io(path, e))
}
