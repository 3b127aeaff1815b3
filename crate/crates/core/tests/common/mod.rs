//! Independent oracles for integration tests. Nothing here calls into the
//! grounding, planner or evaluation modules; the only shared code is the
//! parsed data model.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::path::PathBuf;

use domain_recon::pddl::{ActionSchema, Domain, Problem};
use domain_recon::{Corpus, Plan, PlanStep};

pub type Fact = (String, Vec<String>);
pub type Facts = BTreeSet<Fact>;
pub type Step = (String, Vec<String>);

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus() -> Corpus {
    Corpus::load(&corpus_dir(), None).expect("corpus loads")
}

pub fn recorded_response(tag: &str) -> String {
    std::fs::read_to_string(corpus_dir().join("recorded/responses").join(format!("{tag}.txt"))).unwrap()
}

pub const RECORDED_TAGS: [&str; 7] =
    ["starcoder", "llama-7b", "llama-7b-chat", "llama-13b-chat", "llama-13b", "llama-70b", "llama-70b-chat"];

pub fn to_facts<'a>(atoms: impl IntoIterator<Item = &'a domain_recon::Atom>) -> Facts {
    atoms.into_iter().map(|a| (a.predicate.clone(), a.args.clone())).collect()
}

pub fn step_text(s: &Step) -> String {
    let mut t = format!("({}", s.0);
    for a in &s.1 {
        t.push(' ');
        t.push_str(a);
    }
    t.push(')');
    t
}

pub fn to_plan(steps: &[Step]) -> Plan {
    Plan::new(steps.iter().map(|(a, args)| PlanStep { action: a.clone(), args: args.clone() }).collect())
}

pub fn from_plan(plan: &Plan) -> Vec<Step> {
    plan.steps.iter().map(|s| (s.action.clone(), s.args.clone())).collect()
}

fn ancestor<'a>(domain: &'a Domain, mut child: &'a str, anc: &str) -> bool {
    if anc == "object" {
        return true;
    }
    for _ in 0..64 {
        if child == anc {
            return true;
        }
        match domain.types.parent(child) {
            Some(p) => child = p,
            None => return false,
        }
    }
    false
}

fn type_of<'a>(problem: &'a Problem, domain: &'a Domain, obj: &str) -> Option<&'a str> {
    problem.objects.iter().chain(&domain.constants).find(|o| o.name == obj).map(|o| o.ty.as_str())
}

fn objects(problem: &Problem, domain: &Domain) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> =
        problem.objects.iter().chain(&domain.constants).map(|o| (o.name.clone(), o.ty.clone())).collect();
    v.sort();
    v.dedup();
    v
}

fn instantiate(schema: &ActionSchema, args: &[String], atoms: &BTreeSet<domain_recon::Atom>) -> Facts {
    let mut out = Facts::new();
    for a in atoms {
        let ground = a
            .args
            .iter()
            .map(|t| match schema.params.iter().position(|p| &p.name == t) {
                Some(i) => args[i].clone(),
                None => t.clone(),
            })
            .collect();
        out.insert((a.predicate.clone(), ground));
    }
    out
}

/// Outcome of the naive simulator. `Bad` covers unknown actions and bad bindings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Missing(usize, Facts),
    Bad(usize),
    Goal(Facts),
}

/// One step: `Err(None)` for an ill-formed step, `Err(Some(m))` for unmet preconditions.
pub fn naive_step(problem: &Problem, domain: &Domain, state: &Facts, step: &Step) -> Result<Facts, Option<Facts>> {
    let schema = domain.actions.iter().find(|a| a.name == step.0).ok_or(None)?;
    if schema.params.len() != step.1.len() {
        return Err(None);
    }
    for (arg, p) in step.1.iter().zip(&schema.params) {
        match type_of(problem, domain, arg) {
            Some(t) if ancestor(domain, t, &p.ty) => {}
            _ => return Err(None),
        }
    }
    let declared: HashSet<&str> = schema.params.iter().map(|p| p.name.as_str()).collect();
    let all = schema.pre.iter().chain(&schema.add).chain(&schema.del);
    if all.flat_map(|a| &a.args).any(|t| t.starts_with('?') && !declared.contains(t.as_str())) {
        return Err(None);
    }
    let pre = instantiate(schema, &step.1, &schema.pre);
    let missing: Facts = pre.difference(state).cloned().collect();
    if !missing.is_empty() {
        return Err(Some(missing));
    }
    let mut next: Facts = state.difference(&instantiate(schema, &step.1, &schema.del)).cloned().collect();
    next.extend(instantiate(schema, &step.1, &schema.add));
    Ok(next)
}

pub fn simulate(problem: &Problem, domain: &Domain, plan: &[Step]) -> Verdict {
    let mut state = to_facts(&problem.init);
    for (i, s) in plan.iter().enumerate() {
        match naive_step(problem, domain, &state, s) {
            Ok(n) => state = n,
            Err(Some(m)) => return Verdict::Missing(i, m),
            Err(None) => return Verdict::Bad(i),
        }
    }
    let missing: Facts = to_facts(&problem.goal).difference(&state).cloned().collect();
    if missing.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Goal(missing)
    }
}

/// Every well-typed ground step, by nested loops over the object list.
pub fn all_steps(problem: &Problem, domain: &Domain) -> Vec<Step> {
    let objs = objects(problem, domain);
    let mut out = Vec::new();
    for a in &domain.actions {
        let mut partial: Vec<Vec<String>> = vec![vec![]];
        for p in &a.params {
            let mut next = Vec::new();
            for prefix in &partial {
                for (o, t) in &objs {
                    if ancestor(domain, t, &p.ty) {
                        let mut v = prefix.clone();
                        v.push(o.clone());
                        next.push(v);
                    }
                }
            }
            partial = next;
        }
        out.extend(partial.into_iter().map(|args| (a.name.clone(), args)));
    }
    out.sort_by_key(step_text);
    out
}

fn goal_holds(goal: &Facts, s: &Facts) -> bool {
    goal.is_subset(s)
}

/// Breadth-first optimal plan length, if any within `limit`.
pub fn optimal_len(problem: &Problem, domain: &Domain, limit: usize) -> Option<usize> {
    let steps = all_steps(problem, domain);
    let goal = to_facts(&problem.goal);
    let init = to_facts(&problem.init);
    let mut seen = HashSet::from([init.clone()]);
    let mut queue = VecDeque::from([(init, 0)]);
    while let Some((s, d)) = queue.pop_front() {
        if goal_holds(&goal, &s) {
            return Some(d);
        }
        if d == limit {
            continue;
        }
        for st in &steps {
            if let Ok(n) = naive_step(problem, domain, &s, st) {
                if seen.insert(n.clone()) {
                    queue.push_back((n, d + 1));
                }
            }
        }
    }
    None
}

/// Number of reachable states, stopping once `cap` is exceeded.
pub fn reachable_states(problem: &Problem, domain: &Domain, cap: usize) -> usize {
    let steps = all_steps(problem, domain);
    let init = to_facts(&problem.init);
    let mut seen = HashSet::from([init.clone()]);
    let mut stack = vec![init];
    while let Some(s) = stack.pop() {
        for st in &steps {
            if let Ok(n) = naive_step(problem, domain, &s, st) {
                if seen.insert(n.clone()) {
                    if seen.len() > cap {
                        return seen.len();
                    }
                    stack.push(n);
                }
            }
        }
    }
    seen.len()
}

pub struct BruteForce {
    pub plans: Vec<Vec<Step>>,
    pub exhausted: bool,
}

/// All goal-reaching step sequences of length at most `bound`, ordered by
/// (length, text), truncated to `k`. With `memo`, branches that cannot reach
/// the goal in the remaining steps are cut; otherwise the search is plain
/// exhaustive.
pub fn brute_force_top_k(problem: &Problem, domain: &Domain, k: usize, bound: usize, memo: bool) -> BruteForce {
    let steps = all_steps(problem, domain);
    let goal = to_facts(&problem.goal);
    let init = to_facts(&problem.init);
    let mut cache: HashMap<(Facts, usize), bool> = HashMap::new();
    let mut plans = Vec::new();
    for len in 0..=bound {
        let mut found = Vec::new();
        let mut prefix = Vec::new();
        dfs(problem, domain, &steps, &goal, &init, len, memo, &mut cache, &mut prefix, &mut found);
        found.sort_by_key(|p: &Vec<Step>| p.iter().map(step_text).collect::<Vec<_>>().join("\n"));
        plans.extend(found);
        if plans.len() >= k {
            plans.truncate(k);
            return BruteForce { plans, exhausted: false };
        }
    }
    BruteForce { plans, exhausted: true }
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    problem: &Problem,
    domain: &Domain,
    steps: &[Step],
    goal: &Facts,
    state: &Facts,
    remaining: usize,
    memo: bool,
    cache: &mut HashMap<(Facts, usize), bool>,
    prefix: &mut Vec<Step>,
    out: &mut Vec<Vec<Step>>,
) -> bool {
    if remaining == 0 {
        if goal_holds(goal, state) {
            out.push(prefix.clone());
            return true;
        }
        return false;
    }
    if memo {
        if let Some(false) = cache.get(&(state.clone(), remaining)) {
            return false;
        }
    }
    let mut any = false;
    for st in steps {
        if let Ok(n) = naive_step(problem, domain, state, st) {
            prefix.push(st.clone());
            any |= dfs(problem, domain, steps, goal, &n, remaining - 1, memo, cache, prefix, out);
            prefix.pop();
        }
    }
    if memo {
        cache.insert((state.clone(), remaining), any);
    }
    any
}

/// Top-k by brute force with the default bound of optimal cost plus four.
pub fn oracle_top_k(problem: &Problem, domain: &Domain, k: usize, memo: bool) -> BruteForce {
    match optimal_len(problem, domain, 64) {
        Some(opt) => brute_force_top_k(problem, domain, k, opt + 4, memo),
        None => BruteForce { plans: vec![], exhausted: true },
    }
}

/// Cross-validation verdict computed from the oracles alone.
pub fn oracle_equivalence(d: &Domain, d_prime: &Domain, problems: &[Problem], k: usize) -> &'static str {
    let originals: Vec<_> = problems.iter().map(|p| oracle_top_k(p, d, k, true)).collect();
    let news: Vec<_> = problems.iter().map(|p| oracle_top_k(p, d_prime, k, true)).collect();
    if news.iter().any(|r| r.plans.is_empty()) {
        return "NoPlan";
    }
    for (p, r) in problems.iter().zip(&news) {
        if r.plans.iter().any(|plan| simulate(p, d, plan) != Verdict::Valid) {
            return "NPApp";
        }
    }
    for (p, r) in problems.iter().zip(&originals) {
        if r.plans.iter().any(|plan| simulate(p, d_prime, plan) != Verdict::Valid) {
            return "OPApp";
        }
    }
    "Equiv"
}

/// Semantic subclass by direct rule application, in the order name, negated
/// precondition, predicate arity, types.
pub fn semantic_oracle(a: &ActionSchema, d: &Domain, expected: &str) -> Option<&'static str> {
    if !a.name.eq_ignore_ascii_case(expected) {
        return Some("NError");
    }
    if !a.neg_pre.is_empty() {
        return Some("BPError");
    }
    let all: Vec<_> = a.pre.iter().chain(&a.neg_pre).chain(&a.add).chain(&a.del).collect();
    for atom in &all {
        match d.predicates.iter().find(|p| p.name == atom.predicate) {
            Some(p) if p.params.len() == atom.args.len() => {}
            _ => return Some("PAError"),
        }
    }
    let declared = |t: &str| t == "object" || d.types.entries().any(|(n, _)| n == t);
    if a.params.iter().any(|p| !declared(&p.ty)) {
        return Some("TError");
    }
    for atom in &all {
        let schema = d.predicates.iter().find(|p| p.name == atom.predicate).unwrap();
        for (arg, want) in atom.args.iter().zip(&schema.params) {
            let have = if arg.starts_with('?') {
                a.params.iter().find(|p| &p.name == arg).map(|p| p.ty.as_str())
            } else {
                d.constants.iter().find(|c| &c.name == arg).map(|c| c.ty.as_str())
            };
            match have {
                Some(t) if ancestor(d, t, &want.ty) => {}
                _ => return Some("TError"),
            }
        }
    }
    None
}

pub fn subset_goal(problem: &Problem, goal: &Facts) -> Problem {
    let mut p = problem.clone();
    p.goal =
        goal.iter().map(|(n, args)| domain_recon::Atom::new(n.as_str(), args.iter().map(String::as_str))).collect();
    p
}
