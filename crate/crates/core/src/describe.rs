//! Natural-language action descriptions in three classes: the base
//! sentence alone, the base plus the atoms an action both requires and
//! deletes, and the base plus an equal number of randomly drawn atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{ActionSchema, Atom, Domain};

#[derive(Debug, Error)]
pub enum DescribeError {
    #[error("no {kind} annotation for `{name}`")]
    MissingAnnotation { kind: &'static str, name: String },
    #[error("base sentence of `{action}` names predicate `{predicate}`")]
    BaseNamesPredicate { action: String, predicate: String },
    #[error("annotation is for domain `{found}`, expected `{expected}`")]
    DomainMismatch { expected: String, found: String },
    #[error("reading annotation {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("annotation {path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectTemplate {
    pub add: String,
    pub del: String,
}

/// Hand-written text for one domain. Templates use `{0}`, `{1}`, ... for
/// the atom's arguments, rendered without the leading `?`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainAnnotation {
    pub domain_name: String,
    pub predicate_gloss: BTreeMap<String, String>,
    pub action_base: BTreeMap<String, String>,
    pub pre_template: BTreeMap<String, String>,
    pub eff_template: BTreeMap<String, EffectTemplate>,
}

impl DomainAnnotation {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut ann: DomainAnnotation = serde_json::from_str(text)?;
        ann.domain_name = ann.domain_name.to_lowercase();
        ann.action_base =
            std::mem::take(&mut ann.action_base).into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect();
        Ok(ann)
    }

    pub fn load(path: &Path) -> Result<Self, DescribeError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| DescribeError::Io { path: shown.clone(), source })?;
        Self::from_json(&text).map_err(|source| DescribeError::Json { path: shown, source })
    }

    /// Checks that every predicate and action of `domain` is annotated and
    /// that no base sentence spells out a predicate in PDDL syntax.
    pub fn validate(&self, domain: &Domain) -> Result<(), DescribeError> {
        if self.domain_name != domain.name {
            return Err(DescribeError::DomainMismatch {
                expected: domain.name.clone(),
                found: self.domain_name.clone(),
            });
        }
        for p in &domain.predicates {
            self.gloss(&p.name)?;
            self.pre(&p.name)?;
            self.eff(&p.name)?;
        }
        for a in &domain.actions {
            let base = self.base(&a.name)?;
            let lowered = base.to_lowercase();
            if let Some(p) = domain.predicates.iter().find(|p| lowered.contains(&format!("({}", p.name))) {
                return Err(DescribeError::BaseNamesPredicate { action: a.name.clone(), predicate: p.name.clone() });
            }
        }
        Ok(())
    }

    fn missing(kind: &'static str, name: &str) -> DescribeError {
        DescribeError::MissingAnnotation { kind, name: name.to_string() }
    }

    pub fn gloss(&self, predicate: &str) -> Result<&str, DescribeError> {
        self.predicate_gloss.get(predicate).map(String::as_str).ok_or_else(|| Self::missing("predicate", predicate))
    }

    pub fn base(&self, action: &str) -> Result<&str, DescribeError> {
        self.action_base.get(action).map(String::as_str).ok_or_else(|| Self::missing("action", action))
    }

    fn pre(&self, predicate: &str) -> Result<&str, DescribeError> {
        self.pre_template.get(predicate).map(String::as_str).ok_or_else(|| Self::missing("precondition", predicate))
    }

    fn eff(&self, predicate: &str) -> Result<&EffectTemplate, DescribeError> {
        self.eff_template.get(predicate).ok_or_else(|| Self::missing("effect", predicate))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptionClass {
    Base,
    Flipped,
    Random,
}

impl DescriptionClass {
    pub const ALL: [DescriptionClass; 3] =
        [DescriptionClass::Base, DescriptionClass::Flipped, DescriptionClass::Random];

    pub fn name(self) -> &'static str {
        match self {
            DescriptionClass::Base => "base",
            DescriptionClass::Flipped => "flipped",
            DescriptionClass::Random => "random",
        }
    }
}

impl fmt::Display for DescriptionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DescriptionClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(DescriptionClass::Base),
            "flipped" => Ok(DescriptionClass::Flipped),
            "random" => Ok(DescriptionClass::Random),
            other => Err(format!("unknown description class `{other}`")),
        }
    }
}

/// Which template renders a clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClauseRole {
    Pre,
    Add,
    Del,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub atom: Atom,
    pub role: ClauseRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Description {
    pub class: DescriptionClass,
    pub clauses: Vec<Clause>,
    pub text: String,
}

fn fill(template: &str, atom: &Atom) -> String {
    let mut out = template.to_string();
    for (i, arg) in atom.args.iter().enumerate() {
        out = out.replace(&format!("{{{i}}}"), arg.trim_start_matches('?'));
    }
    out
}

fn render(clause: &Clause, ann: &DomainAnnotation) -> Result<String, DescribeError> {
    let p = &clause.atom.predicate;
    let template = match clause.role {
        ClauseRole::Pre => ann.pre(p)?,
        ClauseRole::Add => ann.eff(p)?.add.as_str(),
        ClauseRole::Del => ann.eff(p)?.del.as_str(),
    };
    Ok(fill(template, &clause.atom))
}

/// `a`, `a and b`, `a, b, and c`.
fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

/// Attaches clauses to the base sentence: preconditions as an `if` clause
/// replacing the final period, effects as a trailing `After the action`
/// sentence. With no clauses the base comes back unchanged.
fn compose(base: &str, clauses: &[Clause], ann: &DomainAnnotation) -> Result<String, DescribeError> {
    if clauses.is_empty() {
        return Ok(base.to_string());
    }
    let mut pre = Vec::new();
    let mut eff = Vec::new();
    for c in clauses {
        let text = render(c, ann)?;
        if c.role == ClauseRole::Pre {
            pre.push(text);
        } else {
            eff.push(text);
        }
    }
    let mut out = base_stem(base).to_string();
    if !pre.is_empty() {
        out.push_str(", if ");
        out.push_str(&join_list(&pre));
    }
    out.push('.');
    if !eff.is_empty() {
        out.push_str(" After the action, ");
        out.push_str(&join_list(&eff));
        out.push('.');
    }
    Ok(out)
}

/// The base sentence without trailing whitespace and its final period;
/// every description class starts with it.
pub fn base_stem(base: &str) -> &str {
    let t = base.trim_end();
    t.strip_suffix('.').unwrap_or(t).trim_end()
}

/// Atoms both required and deleted by `a`, in canonical order.
pub fn flipped_atoms(a: &ActionSchema) -> Vec<Atom> {
    a.pre.intersection(&a.del).cloned().collect()
}

/// The labeled sampling pool: preconditions, then add and delete effects.
/// An atom that is both added and deleted is one effect entry.
pub fn random_pool(a: &ActionSchema) -> Vec<Clause> {
    let mut pool: Vec<Clause> = a.pre.iter().map(|atom| Clause { atom: atom.clone(), role: ClauseRole::Pre }).collect();
    let effects: BTreeSet<&Atom> = a.add.iter().chain(&a.del).collect();
    for atom in effects {
        let role = if a.add.contains(atom) { ClauseRole::Add } else { ClauseRole::Del };
        pool.push(Clause { atom: atom.clone(), role });
    }
    pool
}

pub fn describe_base(a: &ActionSchema, ann: &DomainAnnotation) -> Result<String, DescribeError> {
    Ok(ann.base(&a.name)?.to_string())
}

pub fn describe_flipped(a: &ActionSchema, ann: &DomainAnnotation) -> Result<String, DescribeError> {
    Ok(describe(a, ann, DescriptionClass::Flipped, 0)?.text)
}

pub fn describe_random(a: &ActionSchema, ann: &DomainAnnotation, seed: u64) -> Result<String, DescribeError> {
    Ok(describe(a, ann, DescriptionClass::Random, seed)?.text)
}

/// Describes `a` in the given class, keeping the chosen clauses alongside
/// the text. `seed` only matters for the random class.
pub fn describe(
    a: &ActionSchema,
    ann: &DomainAnnotation,
    class: DescriptionClass,
    seed: u64,
) -> Result<Description, DescribeError> {
    let base = ann.base(&a.name)?;
    let clauses = match class {
        DescriptionClass::Base => Vec::new(),
        DescriptionClass::Flipped => {
            flipped_atoms(a).into_iter().map(|atom| Clause { atom, role: ClauseRole::Pre }).collect()
        }
        DescriptionClass::Random => {
            let pool = random_pool(a);
            let n = flipped_atoms(a).len().min(pool.len());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = rand::seq::index::sample(&mut rng, pool.len(), n).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| pool[i].clone()).collect()
        }
    };
    let text = compose(base, &clauses, ann)?;
    Ok(Description { class, clauses, text })
}

/// The "Allowed Predicates" block: one line per predicate in declaration
/// order, each the typed schema, a colon and the gloss.
pub fn describe_predicates(d: &Domain, ann: &DomainAnnotation) -> Result<String, DescribeError> {
    let mut out = String::from("Allowed Predicates:\n");
    for p in &d.predicates {
        let params: String = p.params.iter().map(|t| format!(" {} - {}", t.name, t.ty)).collect();
        out.push_str(&format!("({}{params}) : {}\n", p.name, ann.gloss(&p.name)?));
    }
    Ok(out)
}
