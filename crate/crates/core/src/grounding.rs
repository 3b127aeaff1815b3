//! Grounding of action schemas, the STRIPS transition function and plan
//! validation.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{is_variable, ActionSchema, Atom, Domain, ModelError, Problem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundingError {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("variable `{variable}` in `{action}` is not a parameter")]
    UnboundVariable { action: String, variable: String },
}

impl From<ModelError> for GroundingError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownType(t) => GroundingError::UnknownType(t),
            ModelError::UnknownPredicate(p) => GroundingError::UnknownPredicate(p),
            other => GroundingError::UnknownType(other.to_string()),
        }
    }
}

/// One instantiated action: schema name, constants bound to its parameters
/// and the resulting ground atom sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundedAction {
    pub schema: String,
    pub binding: Vec<String>,
    pub pre: BTreeSet<Atom>,
    pub add: BTreeSet<Atom>,
    pub del: BTreeSet<Atom>,
}

impl GroundedAction {
    pub fn step(&self) -> PlanStep {
        PlanStep { action: self.schema.clone(), args: self.binding.clone() }
    }

    fn instantiate(schema: &ActionSchema, binding: &[String]) -> Self {
        let map: HashMap<&str, &str> =
            schema.params.iter().map(|p| p.name.as_str()).zip(binding.iter().map(String::as_str)).collect();
        let ground = |atoms: &BTreeSet<Atom>| atoms.iter().map(|a| a.substitute(&map)).collect();
        GroundedAction {
            schema: schema.name.clone(),
            binding: binding.to_vec(),
            pre: ground(&schema.pre),
            add: ground(&schema.add),
            del: ground(&schema.del),
        }
    }
}

/// A set of true ground atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct State {
    facts: BTreeSet<Atom>,
}

impl State {
    pub fn new(facts: BTreeSet<Atom>) -> Self {
        State { facts }
    }

    pub fn facts(&self) -> &BTreeSet<Atom> {
        &self.facts
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.facts.contains(atom)
    }

    pub fn into_facts(self) -> BTreeSet<Atom> {
        self.facts
    }

    /// Atoms of `atoms` that do not hold in this state.
    pub fn missing(&self, atoms: &BTreeSet<Atom>) -> BTreeSet<Atom> {
        atoms.difference(&self.facts).cloned().collect()
    }
}

impl From<BTreeSet<Atom>> for State {
    fn from(facts: BTreeSet<Atom>) -> Self {
        State { facts }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("action is not applicable, missing {}", fmt_atoms(.missing))]
pub struct NotApplicable {
    pub missing: BTreeSet<Atom>,
}

pub(crate) fn fmt_atoms(atoms: &BTreeSet<Atom>) -> String {
    atoms.iter().map(Atom::to_string).collect::<Vec<_>>().join(" ")
}

pub fn applicable(state: &State, action: &GroundedAction) -> bool {
    action.pre.is_subset(&state.facts)
}

/// `(s \ del) ∪ add`; an atom both deleted and added ends up true.
pub fn apply(state: &State, action: &GroundedAction) -> Result<State, NotApplicable> {
    let missing = state.missing(&action.pre);
    if !missing.is_empty() {
        return Err(NotApplicable { missing });
    }
    let mut facts: BTreeSet<Atom> = state.facts.difference(&action.del).cloned().collect();
    facts.extend(action.add.iter().cloned());
    Ok(State { facts })
}

fn check_schema(action: &ActionSchema, domain: &Domain) -> Result<(), GroundingError> {
    for p in &action.params {
        if !domain.types.contains(&p.ty) {
            return Err(GroundingError::UnknownType(p.ty.clone()));
        }
    }
    for atom in action.atoms() {
        if domain.predicate(&atom.predicate).is_none() {
            return Err(GroundingError::UnknownPredicate(atom.predicate.clone()));
        }
    }
    if let Some(v) = action.unbound_variables().into_iter().next() {
        return Err(GroundingError::UnboundVariable { action: action.name.clone(), variable: v.to_string() });
    }
    Ok(())
}

/// Every well-typed binding of objects (and domain constants) to the
/// schema's parameters, sorted by binding. Objects may repeat across
/// parameters.
pub fn enumerate_groundings(
    action: &ActionSchema,
    problem: &Problem,
    domain: &Domain,
) -> Result<Vec<GroundedAction>, GroundingError> {
    check_schema(action, domain)?;
    let mut candidates: Vec<Vec<String>> = Vec::with_capacity(action.params.len());
    for p in &action.params {
        let mut names = Vec::new();
        for o in problem.universe(domain) {
            if domain.types.is_subtype(&o.ty, &p.ty)? {
                names.push(o.name.clone());
            }
        }
        names.sort();
        names.dedup();
        if names.is_empty() {
            return Ok(Vec::new());
        }
        candidates.push(names);
    }

    let mut out = Vec::new();
    let mut index = vec![0usize; candidates.len()];
    loop {
        let binding: Vec<String> = index.iter().zip(&candidates).map(|(&i, c)| c[i].clone()).collect();
        out.push(GroundedAction::instantiate(action, &binding));
        // Odometer increment, last position fastest, giving lexicographic order.
        let mut pos = candidates.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < candidates[pos].len() {
                break;
            }
            index[pos] = 0;
        }
    }
}

/// One plan step: an action name and its arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub action: String,
    pub args: Vec<String>,
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.action)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn new(steps: Vec<PlanStep>) -> Self {
        Plan { steps }
    }

    /// Unit action costs: cost is the plan length.
    pub fn cost(&self) -> usize {
        self.steps.len()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// One step per line, the format read by [`parse_plan`].
    pub fn to_text(&self) -> String {
        self.steps.iter().map(|s| format!("{s}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct PlanSyntaxError {
    pub line: usize,
    pub message: String,
}

fn parse_step(line: &str, lineno: usize) -> Result<PlanStep, PlanSyntaxError> {
    let err = |message: &str| PlanSyntaxError { line: lineno, message: message.to_string() };
    let inner =
        line.strip_prefix('(').and_then(|l| l.strip_suffix(')')).ok_or_else(|| err("expected `(action arg ...)`"))?;
    if inner.contains(['(', ')']) {
        return Err(err("nested parentheses in plan step"));
    }
    let mut words = inner.split_whitespace().map(str::to_lowercase);
    let action = words.next().ok_or_else(|| err("empty plan step"))?;
    Ok(PlanStep { action, args: words.collect() })
}

/// Reads a single plan. Blank lines and `;` comments are ignored.
pub fn parse_plan(text: &str) -> Result<Plan, PlanSyntaxError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        steps.push(parse_step(line, i + 1)?);
    }
    Ok(Plan { steps })
}

const PLAN_HEADER: &str = "; plan ";

/// Writes several plans into one file, each introduced by a `; plan N`
/// comment so that [`parse_plans`] can split them again.
pub fn plans_to_text(plans: &[Plan]) -> String {
    let mut out = String::new();
    for (i, p) in plans.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("{PLAN_HEADER}{} (cost {})\n", i + 1, p.cost()));
        out.push_str(&p.to_text());
    }
    out
}

/// Reads a file written by [`plans_to_text`]. Text without plan headers is
/// read as a single plan.
pub fn parse_plans(text: &str) -> Result<Vec<Plan>, PlanSyntaxError> {
    let mut plans = Vec::new();
    let mut current: Option<Plan> = None;
    for (i, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.starts_with(PLAN_HEADER) {
            plans.extend(current.take());
            current = Some(Plan::default());
            continue;
        }
        let line = trimmed.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        current.get_or_insert_with(Plan::default).steps.push(parse_step(line, i + 1)?);
    }
    plans.extend(current);
    Ok(plans)
}

/// Why a plan step could not be executed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepFailure {
    MissingPreconditions(BTreeSet<Atom>),
    UnknownAction(String),
    /// Wrong arity, unknown object or ill-typed argument.
    BadBinding(String),
}

impl fmt::Display for StepFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepFailure::MissingPreconditions(m) => write!(f, "missing {}", fmt_atoms(m)),
            StepFailure::UnknownAction(a) => write!(f, "unknown action `{a}`"),
            StepFailure::BadBinding(msg) => write!(f, "bad binding: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationOutcome {
    Valid,
    /// First failing step, 0-based.
    InapplicableAt {
        step: usize,
        failure: StepFailure,
    },
    GoalUnreached {
        missing: BTreeSet<Atom>,
    },
}

impl ValidationOutcome {
    pub fn is_valid(&self) -> bool {
        matches!(self, ValidationOutcome::Valid)
    }
}

impl fmt::Display for ValidationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationOutcome::Valid => write!(f, "valid"),
            ValidationOutcome::InapplicableAt { step, failure } => write!(f, "step {step}: {failure}"),
            ValidationOutcome::GoalUnreached { missing } => {
                write!(f, "goal not reached, missing {}", fmt_atoms(missing))
            }
        }
    }
}

/// Grounds a plan step against `domain`, checking arity and argument types.
pub fn ground_step(step: &PlanStep, problem: &Problem, domain: &Domain) -> Result<GroundedAction, StepFailure> {
    let schema = domain.action(&step.action).ok_or_else(|| StepFailure::UnknownAction(step.action.clone()))?;
    if schema.params.len() != step.args.len() {
        return Err(StepFailure::BadBinding(format!(
            "`{}` takes {} arguments, got {}",
            schema.name,
            schema.params.len(),
            step.args.len()
        )));
    }
    for (arg, param) in step.args.iter().zip(&schema.params) {
        let ty = problem
            .object_type(domain, arg)
            .ok_or_else(|| StepFailure::BadBinding(format!("unknown object `{arg}`")))?;
        let ok = domain.types.is_subtype(ty, &param.ty).map_err(|e| StepFailure::BadBinding(e.to_string()))?;
        if !ok {
            return Err(StepFailure::BadBinding(format!("`{arg}` is a `{ty}`, not a `{}`", param.ty)));
        }
    }
    if let Some(v) = schema.atoms().flat_map(Atom::variables).find(|v| schema.param_type(v).is_none()) {
        return Err(StepFailure::BadBinding(format!("schema variable `{v}` is unbound")));
    }
    debug_assert!(step.args.iter().all(|a| !is_variable(a)));
    Ok(GroundedAction::instantiate(schema, &step.args))
}

/// Executes `plan` from the initial state and checks the goal.
pub fn validate_plan(problem: &Problem, domain: &Domain, plan: &Plan) -> ValidationOutcome {
    let mut state = State::new(problem.init.clone());
    for (i, step) in plan.steps.iter().enumerate() {
        let action = match ground_step(step, problem, domain) {
            Ok(a) => a,
            Err(failure) => return ValidationOutcome::InapplicableAt { step: i, failure },
        };
        match apply(&state, &action) {
            Ok(next) => state = next,
            Err(NotApplicable { missing }) => {
                return ValidationOutcome::InapplicableAt {
                    step: i,
                    failure: StepFailure::MissingPreconditions(missing),
                }
            }
        }
    }
    let missing = state.missing(&problem.goal);
    if missing.is_empty() {
        ValidationOutcome::Valid
    } else {
        ValidationOutcome::GoalUnreached { missing }
    }
}
