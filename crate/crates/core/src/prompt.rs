//! Prompt assembly and completion backends.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{ActionRef, Corpus};
use crate::describe::{describe, describe_predicates, DescribeError, DescriptionClass};
use crate::pddl::print_action;

pub const DEFAULT_INSTRUCTION: &str = "Given a description of an action in some domain, convert it to Planning Domain \
Definition Language (PDDL) action. You may only use the allowed predicates provided for each action.\n\n";

pub const ENDPOINT_ENV: &str = "DOMAIN_RECON_ENDPOINT";
pub const TOKEN_ENV: &str = "DOMAIN_RECON_TOKEN";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("need {needed} context actions outside `{domain}`, corpus has {available}")]
    InsufficientCorpus { domain: String, needed: usize, available: usize },
    #[error("action {0} is not in the corpus")]
    UnknownAction(ActionRef),
    #[error("context action {context} shares the domain of target {target}")]
    SameDomainContext { target: ActionRef, context: ActionRef },
    #[error(transparent)]
    Describe(#[from] DescribeError),
}

/// Hex of the first 8 bytes of the SHA-256 of `text`.
pub fn prompt_key(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

/// Mixes a base seed with string labels into a new 64-bit seed.
pub fn derive_seed(base: u64, labels: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for l in labels {
        h.update((l.len() as u64).to_le_bytes());
        h.update(l.as_bytes());
    }
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Draws `n` distinct actions from domains other than the target's, in
/// sampled order.
pub fn sample_context(corpus: &Corpus, target: &ActionRef, n: usize, seed: u64) -> Result<Vec<ActionRef>, PromptError> {
    let pool: Vec<ActionRef> = corpus.actions().into_iter().filter(|a| a.domain != target.domain).collect();
    if pool.len() < n {
        return Err(PromptError::InsufficientCorpus {
            domain: target.domain.clone(),
            needed: n,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, pool.len(), n).into_iter().map(|i| pool[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub prompt_id: String,
    pub target: ActionRef,
    pub class: DescriptionClass,
    pub context: Vec<ActionRef>,
    pub seed: u64,
    pub text: String,
}

impl PromptRecord {
    pub fn key(&self) -> String {
        prompt_key(&self.text)
    }
}

/// What to ask for: the target action, its description class and seed.
#[derive(Debug, Clone)]
pub struct PromptQuery {
    pub prompt_id: String,
    pub target: ActionRef,
    pub class: DescriptionClass,
    pub seed: u64,
}

fn action_block(corpus: &Corpus, r: &ActionRef, class: DescriptionClass, seed: u64) -> Result<String, PromptError> {
    let (cd, action) = corpus.action(r).ok_or_else(|| PromptError::UnknownAction(r.clone()))?;
    let predicates = describe_predicates(&cd.domain, &cd.annotation)?;
    let description = describe(action, &cd.annotation, class, seed)?;
    Ok(format!("{predicates}\nInput:\n{}\n\nPDDL Action:\n", description.text))
}

/// Instruction, then one worked example per context action, then the query
/// ending with an empty "PDDL Action:" section. Context descriptions use
/// the query's class, each with its own derived seed.
pub fn build_prompt(
    corpus: &Corpus,
    instruction: &str,
    contexts: &[ActionRef],
    query: &PromptQuery,
) -> Result<PromptRecord, PromptError> {
    let mut text = instruction.to_string();
    for (i, c) in contexts.iter().enumerate() {
        if c.domain == query.target.domain {
            return Err(PromptError::SameDomainContext { target: query.target.clone(), context: c.clone() });
        }
        let seed = derive_seed(query.seed, &["context", &i.to_string()]);
        text.push_str(&action_block(corpus, c, query.class, seed)?);
        let (_, action) = corpus.action(c).ok_or_else(|| PromptError::UnknownAction(c.clone()))?;
        text.push_str(&print_action(action));
        text.push_str("\n\n");
    }
    text.push_str(&action_block(corpus, &query.target, query.class, query.seed)?);
    Ok(PromptRecord {
        prompt_id: query.prompt_id.clone(),
        target: query.target.clone(),
        class: query.class,
        context: contexts.to_vec(),
        seed: query.seed,
        text,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletionConfig {
    pub max_new_tokens: usize,
    pub stop: Vec<String>,
    pub greedy: bool,
    pub timeout_secs: u64,
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
    /// Requests in flight at once.
    pub concurrency: usize,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig {
            max_new_tokens: 300,
            stop: vec!["Input:".to_string(), "Allowed Predicates:".to_string()],
            greedy: true,
            timeout_secs: 120,
            retries: 3,
            backoff_ms: 500,
            max_backoff_ms: 8_000,
            concurrency: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum CompletionError {
    #[error("endpoint error after {attempts} attempts: {message}")]
    Endpoint { attempts: u32, message: String },
    #[error("no stored response for prompt {key}")]
    ReplayMiss { key: String },
    #[error("endpoint not configured: set {ENDPOINT_ENV}")]
    NoEndpoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// Backend latency; zero for replayed responses.
    pub latency_ms: u64,
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, prompt: &str, config: &CompletionConfig) -> Result<Completion, CompletionError>;
}

/// Cuts `text` before the earliest stop sequence.
pub fn truncate_at_stop<'a>(text: &'a str, stop: &[String]) -> &'a str {
    let cut = stop.iter().filter(|s| !s.is_empty()).filter_map(|s| text.find(s.as_str())).min();
    &text[..cut.unwrap_or(text.len())]
}

/// Runs the backend and applies the stop sequences.
pub fn complete(
    backend: &dyn CompletionBackend,
    prompt: &PromptRecord,
    config: &CompletionConfig,
) -> Result<Completion, CompletionError> {
    let raw = backend.complete(&prompt.text, config)?;
    Ok(Completion { text: truncate_at_stop(&raw.text, &config.stop).to_string(), latency_ms: raw.latency_ms })
}

/// Stored responses keyed by [`prompt_key`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReplayStore {
    pub responses: BTreeMap<String, String>,
}

impl ReplayStore {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text + "\n")
    }

    pub fn insert(&mut self, prompt: &str, response: impl Into<String>) {
        self.responses.insert(prompt_key(prompt), response.into());
    }

    pub fn get(&self, prompt: &str) -> Option<&str> {
        self.responses.get(&prompt_key(prompt)).map(String::as_str)
    }
}

impl CompletionBackend for ReplayStore {
    fn complete(&self, prompt: &str, _config: &CompletionConfig) -> Result<Completion, CompletionError> {
        match self.get(prompt) {
            Some(text) => Ok(Completion { text: text.to_string(), latency_ms: 0 }),
            None => Err(CompletionError::ReplayMiss { key: prompt_key(prompt) }),
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    max_new_tokens: usize,
    stop: &'a [String],
    greedy: bool,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

/// Generic JSON completion endpoint: POST `{prompt, max_new_tokens, stop,
/// greedy}`, answer `{text}`.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    pub url: String,
    pub token: Option<String>,
}

impl HttpBackend {
    pub fn new(url: impl Into<String>, token: Option<String>) -> Self {
        HttpBackend { url: url.into(), token }
    }

    /// Reads the endpoint and optional bearer token from the environment.
    pub fn from_env() -> Result<Self, CompletionError> {
        let url = std::env::var(ENDPOINT_ENV).map_err(|_| CompletionError::NoEndpoint)?;
        Ok(HttpBackend { url, token: std::env::var(TOKEN_ENV).ok() })
    }

    fn attempt(&self, agent: &ureq::Agent, body: &WireRequest<'_>) -> Result<String, ureq::Error> {
        let mut req = agent.post(&self.url);
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req.send_json(body)?;
        Ok(resp.body_mut().read_json::<WireResponse>()?.text)
    }
}

/// Delay before retry `attempt` (1-based): doubling from `backoff_ms`,
/// capped at `max_backoff_ms`.
pub fn backoff_delay(config: &CompletionConfig, attempt: u32) -> Duration {
    let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
    Duration::from_millis(config.backoff_ms.saturating_mul(factor).min(config.max_backoff_ms))
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, prompt: &str, config: &CompletionConfig) -> Result<Completion, CompletionError> {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(config.timeout_secs))).build().into();
        let body =
            WireRequest { prompt, max_new_tokens: config.max_new_tokens, stop: &config.stop, greedy: config.greedy };
        let mut last = String::new();
        for attempt in 0..=config.retries {
            if attempt > 0 {
                std::thread::sleep(backoff_delay(config, attempt));
            }
            let start = Instant::now();
            match self.attempt(&agent, &body) {
                Ok(text) => return Ok(Completion { text, latency_ms: start.elapsed().as_millis() as u64 }),
                Err(e) => {
                    log::warn!("completion attempt {} failed: {e}", attempt + 1);
                    last = e.to_string();
                }
            }
        }
        Err(CompletionError::Endpoint { attempts: config.retries + 1, message: last })
    }
}
