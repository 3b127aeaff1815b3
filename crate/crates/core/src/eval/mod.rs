//! Classification of model responses: prune, parse, check, rebuild the
//! domain and compare plan sets.

mod are;
mod classes;
mod equivalence;
mod prune;
mod semantic;

pub use are::{are, are_with, AreMode};
pub use classes::{DiffKind, ResultClass, SemanticKind};
pub use equivalence::{heuristic_equivalence, reconstruct_domain, EquivalenceError, EquivalenceReport};
pub use prune::prune;
pub use semantic::check_semantics;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{parse_action, ActionSchema, Domain, Problem};
use crate::planner::{top_k_plans, PlannerConfig, PlannerError, TopKResult};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("problem `{0}` has no plan in the ground-truth domain")]
    Unsolvable(String),
    #[error("planning `{problem}` in the ground-truth domain: {source}")]
    Planner { problem: String, source: PlannerError },
    #[error(transparent)]
    Equivalence(#[from] EquivalenceError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub result: ResultClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parsed_action: Option<ActionSchema>,
    /// Present exactly when the response parsed.
    pub are: Option<usize>,
    pub diagnostics: String,
}

/// Ground-truth context for one domain: its problems and their top-k plans,
/// computed once and shared by every classification.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub domain: Domain,
    pub problems: Vec<Problem>,
    pub original_plans: Vec<TopKResult>,
    pub planner: PlannerConfig,
    pub are_mode: AreMode,
}

impl Evaluator {
    pub fn new(domain: Domain, problems: Vec<Problem>, planner: PlannerConfig) -> Result<Self, EvalError> {
        let mut original_plans = Vec::with_capacity(problems.len());
        for p in &problems {
            let r = top_k_plans(p, &domain, &planner)
                .map_err(|source| EvalError::Planner { problem: p.name.clone(), source })?;
            if r.plans.is_empty() {
                return Err(EvalError::Unsolvable(p.name.clone()));
            }
            original_plans.push(r);
        }
        Ok(Evaluator { domain, problems, original_plans, planner, are_mode: AreMode::Literal })
    }

    pub fn with_are_mode(mut self, mode: AreMode) -> Self {
        self.are_mode = mode;
        self
    }

    /// Classifies a raw response generated for the action named `original`.
    pub fn classify(&self, raw: &str, original: &str) -> Result<Classification, EvalError> {
        let gt = self
            .domain
            .action(&original.to_lowercase())
            .ok_or_else(|| EquivalenceError::OriginalNotFound(original.to_string()))?;
        let syntax = |kind, diagnostics: String| Classification {
            result: ResultClass::Syntax(kind),
            parsed_action: None,
            are: None,
            diagnostics,
        };
        let pruned = match prune(raw) {
            Ok(p) => p,
            Err(kind) => return Ok(syntax(kind, "pruning failed".to_string())),
        };
        let action = match parse_action(pruned) {
            Ok(a) => a,
            Err(e) => {
                let kind = e.syntax_kind().unwrap_or(crate::pddl::SyntaxErrorKind::UToken);
                return Ok(syntax(kind, e.to_string()));
            }
        };
        let are = Some(are_with(gt, &action, self.are_mode));
        let done = |result, diagnostics: String, action: ActionSchema| Classification {
            result,
            parsed_action: Some(action),
            are,
            diagnostics,
        };
        if let Err((kind, why)) = check_semantics(&action, &self.domain, &gt.name) {
            return Ok(done(ResultClass::Semantic(kind), why, action));
        }
        let d_prime = reconstruct_domain(&self.domain, &gt.name, &action)?;
        let report =
            heuristic_equivalence(&self.domain, &d_prime, &self.problems, &self.original_plans, &self.planner)?;
        let result = match report.verdict {
            Ok(()) => ResultClass::Equiv,
            Err(kind) => ResultClass::Diff(kind),
        };
        Ok(done(result, report.detail, action))
    }
}
