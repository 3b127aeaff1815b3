//! Top-k plan enumeration over the explicit state space.
//!
//! The reachable graph is built breadth-first up to the cost bound. A table
//! `reach[r][s]` records whether a goal state is reachable from `s` in
//! exactly `r` steps, so a depth-first walk over successors in canonical
//! action order visits only prefixes that extend to a plan. Plans come out
//! sorted by cost and then by step text.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{enumerate_groundings, GroundedAction, GroundingError, Plan};
use crate::pddl::{Atom, Domain, Problem};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub k: usize,
    /// Absolute bound on plan cost. When unset the bound is the optimal
    /// cost plus `slack`.
    pub max_cost: Option<usize>,
    pub slack: usize,
    /// Maximum number of distinct states the search may store.
    pub state_limit: usize,
    /// Deepest layer searched for a first plan when `max_cost` is unset.
    pub depth_limit: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { k: 100, max_cost: None, slack: 4, state_limit: 500_000, depth_limit: 64 }
    }
}

impl PlannerConfig {
    pub fn with_k(k: usize) -> Self {
        PlannerConfig { k, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlannerError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error("state limit of {0} exceeded")]
    StateLimit(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopKResult {
    pub plans: Vec<Plan>,
    /// Fewer than k plans exist within `max_cost`.
    pub exhausted: bool,
    /// The cost bound actually searched.
    pub max_cost: usize,
    pub optimal_cost: Option<usize>,
}

/// All ground actions of `domain` on `problem`, sorted by step text, with
/// actions whose static preconditions fail in the initial state removed.
pub fn ground_problem(problem: &Problem, domain: &Domain) -> Result<Vec<GroundedAction>, GroundingError> {
    let fluent: HashSet<&str> =
        domain.actions.iter().flat_map(|a| a.add.iter().chain(&a.del)).map(|atom| atom.predicate.as_str()).collect();
    let mut out = Vec::new();
    for schema in &domain.actions {
        for g in enumerate_groundings(schema, problem, domain)? {
            let statics_hold =
                g.pre.iter().all(|atom| fluent.contains(atom.predicate.as_str()) || problem.init.contains(atom));
            if statics_hold {
                out.push(g);
            }
        }
    }
    out.sort_by_cached_key(|g| g.step().to_string());
    Ok(out)
}

type Bits = Box<[u64]>;

struct Compiled {
    pre: Vec<usize>,
    add: Vec<usize>,
    del: Vec<usize>,
}

struct Space {
    actions: Vec<GroundedAction>,
    compiled: Vec<Compiled>,
    goal: Vec<usize>,
    states: Vec<Bits>,
    index: HashMap<Bits, usize>,
    depth: Vec<usize>,
    /// Outgoing edges as (action, target), filled when a state is expanded.
    edges: Vec<Vec<(u32, u32)>>,
    frontier: Vec<usize>,
    expanded_to: usize,
    state_limit: usize,
}

fn has(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

impl Space {
    fn new(problem: &Problem, domain: &Domain, state_limit: usize) -> Result<Self, PlannerError> {
        let actions = ground_problem(problem, domain)?;
        let all: BTreeSet<&Atom> = problem
            .init
            .iter()
            .chain(&problem.goal)
            .chain(actions.iter().flat_map(|g| g.pre.iter().chain(&g.add).chain(&g.del)))
            .collect();
        let facts: HashMap<&Atom, usize> = all.into_iter().enumerate().map(|(i, a)| (a, i)).collect();
        let ids = |set: &BTreeSet<Atom>| set.iter().map(|a| facts[a]).collect::<Vec<_>>();
        let compiled =
            actions.iter().map(|g| Compiled { pre: ids(&g.pre), add: ids(&g.add), del: ids(&g.del) }).collect();
        let goal = ids(&problem.goal);
        let words = facts.len().div_ceil(64).max(1);
        let mut init = vec![0u64; words].into_boxed_slice();
        for i in ids(&problem.init) {
            init[i / 64] |= 1 << (i % 64);
        }
        let mut space = Space {
            actions,
            compiled,
            goal,
            states: Vec::new(),
            index: HashMap::new(),
            depth: Vec::new(),
            edges: Vec::new(),
            frontier: Vec::new(),
            expanded_to: 0,
            state_limit,
        };
        space.intern_state(init, 0)?;
        space.frontier.push(0);
        Ok(space)
    }

    fn intern_state(&mut self, bits: Bits, depth: usize) -> Result<usize, PlannerError> {
        if let Some(&i) = self.index.get(&bits) {
            return Ok(i);
        }
        if self.states.len() >= self.state_limit {
            return Err(PlannerError::StateLimit(self.state_limit));
        }
        let i = self.states.len();
        self.index.insert(bits.clone(), i);
        self.states.push(bits);
        self.depth.push(depth);
        self.edges.push(Vec::new());
        Ok(i)
    }

    fn is_goal(&self, s: usize) -> bool {
        self.goal.iter().all(|&f| has(&self.states[s], f))
    }

    /// Expands the current frontier, which sits at depth `expanded_to`.
    /// Returns whether any new state was discovered.
    fn expand_layer(&mut self) -> Result<bool, PlannerError> {
        let layer = std::mem::take(&mut self.frontier);
        let depth = self.expanded_to + 1;
        for s in layer {
            let mut out = Vec::new();
            for (ai, c) in self.compiled.iter().enumerate() {
                let cur = &self.states[s];
                if !c.pre.iter().all(|&f| has(cur, f)) {
                    continue;
                }
                let mut next = cur.clone();
                for &f in &c.del {
                    next[f / 64] &= !(1 << (f % 64));
                }
                for &f in &c.add {
                    next[f / 64] |= 1 << (f % 64);
                }
                out.push((ai as u32, next));
            }
            let mut edges = Vec::with_capacity(out.len());
            for (ai, next) in out {
                let before = self.states.len();
                let t = self.intern_state(next, depth)?;
                if t == before {
                    self.frontier.push(t);
                }
                edges.push((ai, t as u32));
            }
            self.edges[s] = edges;
        }
        self.expanded_to = depth;
        Ok(!self.frontier.is_empty())
    }

    /// Breadth-first search for the cheapest goal depth.
    fn optimal_depth(&mut self, depth_limit: usize) -> Result<Option<usize>, PlannerError> {
        let mut seen = 0;
        loop {
            if let Some(d) = (seen..self.states.len()).filter(|&s| self.is_goal(s)).map(|s| self.depth[s]).min() {
                return Ok(Some(d));
            }
            seen = self.states.len();
            if self.expanded_to >= depth_limit || !self.expand_layer()? {
                return Ok(None);
            }
        }
    }

    fn expand_to(&mut self, bound: usize) -> Result<(), PlannerError> {
        while self.expanded_to < bound {
            if !self.expand_layer()? {
                // Closed graph: remember that deeper layers add nothing.
                self.expanded_to = bound;
            }
        }
        Ok(())
    }

    /// `reach[r][s]`: some goal state is reachable from `s` in exactly `r`
    /// steps. Only meaningful where `depth[s] + r <= bound`.
    fn reach_table(&self, bound: usize) -> Vec<Vec<bool>> {
        let n = self.states.len();
        let mut reach = Vec::with_capacity(bound + 1);
        reach.push((0..n).map(|s| self.is_goal(s)).collect::<Vec<bool>>());
        for r in 1..=bound {
            let prev: &Vec<bool> = &reach[r - 1];
            let row = (0..n)
                .map(|s| self.depth[s] + r <= bound && self.edges[s].iter().any(|&(_, t)| prev[t as usize]))
                .collect();
            reach.push(row);
        }
        reach
    }

    fn collect(&self, reach: &[Vec<bool>], len: usize, k: usize, out: &mut Vec<Plan>) {
        let mut path: Vec<u32> = Vec::with_capacity(len);
        self.walk(0, len, reach, k, &mut path, out);
    }

    fn walk(
        &self,
        s: usize,
        remaining: usize,
        reach: &[Vec<bool>],
        k: usize,
        path: &mut Vec<u32>,
        out: &mut Vec<Plan>,
    ) {
        if out.len() >= k {
            return;
        }
        if remaining == 0 {
            out.push(Plan::new(path.iter().map(|&a| self.actions[a as usize].step()).collect()));
            return;
        }
        for &(a, t) in &self.edges[s] {
            if reach[remaining - 1][t as usize] {
                path.push(a);
                self.walk(t as usize, remaining - 1, reach, k, path, out);
                path.pop();
                if out.len() >= k {
                    return;
                }
            }
        }
    }
}

/// The `k` cheapest distinct plans of cost at most the configured bound.
/// Ties are broken by the step texts of the plan, compared in order.
pub fn top_k_plans(problem: &Problem, domain: &Domain, config: &PlannerConfig) -> Result<TopKResult, PlannerError> {
    if config.k == 0 {
        return Err(PlannerError::ZeroK);
    }
    let mut space = Space::new(problem, domain, config.state_limit)?;
    let (bound, optimal) = match config.max_cost {
        Some(m) => {
            space.expand_to(m)?;
            let optimal = (0..space.states.len()).filter(|&s| space.is_goal(s)).map(|s| space.depth[s]).min();
            (m, optimal)
        }
        None => match space.optimal_depth(config.depth_limit)? {
            Some(c) => {
                let bound = c + config.slack;
                space.expand_to(bound)?;
                (bound, Some(c))
            }
            None => {
                return Ok(TopKResult {
                    plans: Vec::new(),
                    exhausted: true,
                    max_cost: space.expanded_to,
                    optimal_cost: None,
                })
            }
        },
    };
    let mut plans = Vec::new();
    if let Some(c) = optimal {
        let reach = space.reach_table(bound);
        for len in c..=bound {
            if plans.len() >= config.k {
                break;
            }
            if reach[len][0] {
                space.collect(&reach, len, config.k, &mut plans);
            }
        }
    }
    log::debug!("top-k for {}: {} states, {} plans, bound {bound}", problem.name, space.states.len(), plans.len());
    Ok(TopKResult { exhausted: plans.len() < config.k, plans, max_cost: bound, optimal_cost: optimal })
}
