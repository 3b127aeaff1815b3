//! Loading of the on-disk corpus: one directory per domain holding
//! `domain.pddl`, problem files `p*.pddl` and `<domain>.ann.json`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::describe::{DescribeError, DomainAnnotation};
use crate::pddl::{parse_domain, parse_problem, ActionSchema, Domain, ModelError, ParseError, Problem};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelError },
    #[error(transparent)]
    Annotation(#[from] DescribeError),
    #[error("domain `{0}` not found in corpus")]
    MissingDomain(String),
    #[error("domain `{0}` has no problem files")]
    NoProblems(String),
}

/// A (domain, action) pair naming one corpus action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionRef {
    pub domain: String,
    pub action: String,
}

impl ActionRef {
    pub fn new(domain: impl Into<String>, action: impl Into<String>) -> Self {
        ActionRef { domain: domain.into(), action: action.into() }
    }
}

impl fmt::Display for ActionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.domain, self.action)
    }
}

#[derive(Debug, Clone)]
pub struct CorpusDomain {
    pub domain: Domain,
    pub annotation: DomainAnnotation,
    pub problems: Vec<Problem>,
}

impl CorpusDomain {
    pub fn name(&self) -> &str {
        &self.domain.name
    }

    /// Reads one domain directory and checks it for consistency.
    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let dir_name = dir.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
        let domain_path = dir.join("domain.pddl");
        let domain =
            parse_domain(&read(&domain_path)?).map_err(|source| CorpusError::Parse { path: domain_path, source })?;
        let annotation = DomainAnnotation::load(&dir.join(format!("{dir_name}.ann.json")))?;
        annotation.validate(&domain)?;

        let mut problem_paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|source| CorpusError::Io { path: dir.to_path_buf(), source })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
                name.starts_with('p') && name.ends_with(".pddl")
            })
            .collect();
        problem_paths.sort();
        let mut problems = Vec::new();
        for path in problem_paths {
            let problem =
                parse_problem(&read(&path)?).map_err(|source| CorpusError::Parse { path: path.clone(), source })?;
            problem.check(&domain).map_err(|source| CorpusError::Model { path: path.clone(), source })?;
            problems.push(problem);
        }
        if problems.is_empty() {
            return Err(CorpusError::NoProblems(domain.name));
        }
        Ok(CorpusDomain { domain, annotation, problems })
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub domains: Vec<CorpusDomain>,
}

impl Corpus {
    /// Loads the named domains in the given order, or every subdirectory
    /// holding a `domain.pddl` in name order when `names` is `None`.
    pub fn load(dir: &Path, names: Option<&[String]>) -> Result<Self, CorpusError> {
        let names: Vec<String> = match names {
            Some(n) => n.to_vec(),
            None => {
                let mut found: Vec<String> = std::fs::read_dir(dir)
                    .map_err(|source| CorpusError::Io { path: dir.to_path_buf(), source })?
                    .filter_map(|e| e.ok())
                    .filter(|e| e.path().join("domain.pddl").is_file())
                    .map(|e| e.file_name().to_string_lossy().to_string())
                    .collect();
                found.sort();
                found
            }
        };
        let mut domains = Vec::with_capacity(names.len());
        for name in names {
            let sub = dir.join(&name);
            if !sub.join("domain.pddl").is_file() {
                return Err(CorpusError::MissingDomain(name));
            }
            domains.push(CorpusDomain::load(&sub)?);
        }
        Ok(Corpus { domains })
    }

    pub fn domain(&self, name: &str) -> Option<&CorpusDomain> {
        self.domains.iter().find(|d| d.name() == name)
    }

    /// Every action in corpus order.
    pub fn actions(&self) -> Vec<ActionRef> {
        self.domains
            .iter()
            .flat_map(|d| d.domain.actions.iter().map(move |a| ActionRef::new(d.name(), &a.name)))
            .collect()
    }

    pub fn action(&self, r: &ActionRef) -> Option<(&CorpusDomain, &ActionSchema)> {
        let d = self.domain(&r.domain)?;
        Some((d, d.domain.action(&r.action)?))
    }
}
