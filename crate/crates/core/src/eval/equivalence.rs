use thiserror::Error;

use super::classes::DiffKind;
use crate::grounding::validate_plan;
use crate::pddl::{ActionSchema, Domain, Problem};
use crate::planner::{top_k_plans, PlannerConfig, TopKResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivalenceError {
    #[error("action `{0}` is not in the domain")]
    OriginalNotFound(String),
    #[error("{problems} problems but {plan_sets} precomputed plan sets")]
    PrecomputationMissing { problems: usize, plan_sets: usize },
}

/// `d` with the action named `original` replaced by `generated`, in place.
pub fn reconstruct_domain(d: &Domain, original: &str, generated: &ActionSchema) -> Result<Domain, EquivalenceError> {
    let i = d
        .actions
        .iter()
        .position(|a| a.name.eq_ignore_ascii_case(original))
        .ok_or_else(|| EquivalenceError::OriginalNotFound(original.to_string()))?;
    let mut out = d.clone();
    out.actions[i] = generated.clone();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub verdict: Result<(), DiffKind>,
    /// Plan validations that came back valid.
    pub valid_checks: usize,
    pub detail: String,
}

/// Compares `d` and `d_prime` through their top-k plan sets on shared
/// problems. `original_plans[i]` holds the top-k plans of `problems[i]`
/// under `d`. The first failing stage decides the verdict: some problem has
/// no plan under `d_prime`, a new plan is invalid under `d`, or an original
/// plan is invalid under `d_prime`.
pub fn heuristic_equivalence(
    d: &Domain,
    d_prime: &Domain,
    problems: &[Problem],
    original_plans: &[TopKResult],
    config: &PlannerConfig,
) -> Result<EquivalenceReport, EquivalenceError> {
    if problems.len() != original_plans.len() {
        return Err(EquivalenceError::PrecomputationMissing {
            problems: problems.len(),
            plan_sets: original_plans.len(),
        });
    }
    let fail = |kind, valid_checks, detail: String| Ok(EquivalenceReport { verdict: Err(kind), valid_checks, detail });

    let mut new_plans = Vec::with_capacity(problems.len());
    for p in problems {
        match top_k_plans(p, d_prime, config) {
            Ok(r) if !r.plans.is_empty() => new_plans.push(r),
            Ok(r) => return fail(DiffKind::NoPlan, 0, format!("no plan for {} within cost {}", p.name, r.max_cost)),
            Err(e) => return fail(DiffKind::NoPlan, 0, format!("planning {} failed: {e}", p.name)),
        }
    }

    let mut valid = 0;
    for (p, r) in problems.iter().zip(&new_plans) {
        for plan in &r.plans {
            let outcome = validate_plan(p, d, plan);
            if !outcome.is_valid() {
                let detail = format!("new plan on {} fails under the original domain: {outcome}", p.name);
                return fail(DiffKind::NPApp, valid, detail);
            }
            valid += 1;
        }
    }
    for (p, r) in problems.iter().zip(original_plans) {
        for plan in &r.plans {
            let outcome = validate_plan(p, d_prime, plan);
            if !outcome.is_valid() {
                let detail = format!("original plan on {} fails under the new domain: {outcome}", p.name);
                return fail(DiffKind::OPApp, valid, detail);
            }
            valid += 1;
        }
    }
    Ok(EquivalenceReport { verdict: Ok(()), valid_checks: valid, detail: format!("{valid} plan checks passed") })
}
