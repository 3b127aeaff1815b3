use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::error::ModelError;
use super::types::TypeHierarchy;

pub fn is_variable(term: &str) -> bool {
    term.starts_with('?')
}

/// A predicate applied to terms. Terms starting with `?` are variables,
/// everything else is a constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<P, I, S>(predicate: P, args: I) -> Self
    where
        P: Into<String>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Atom { predicate: predicate.into(), args: args.into_iter().map(Into::into).collect() }
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(|a| is_variable(a))
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().map(String::as_str).filter(|a| is_variable(a))
    }

    /// Replaces variables bound in `binding`; unbound terms are kept.
    pub fn substitute(&self, binding: &HashMap<&str, &str>) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self
                .args
                .iter()
                .map(|a| binding.get(a.as_str()).map_or_else(|| a.clone(), |c| (*c).to_string()))
                .collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// `name - type` pair used for parameters, predicate arguments and objects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypedName {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedName { name: name.into(), ty: ty.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateSchema {
    pub name: String,
    pub params: Vec<TypedName>,
}

impl PredicateSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// A lifted STRIPS action. `neg_pre` holds negated precondition literals,
/// which STRIPS forbids; they are kept so the evaluator can report them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub pre: BTreeSet<Atom>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub neg_pre: BTreeSet<Atom>,
    pub add: BTreeSet<Atom>,
    pub del: BTreeSet<Atom>,
}

impl ActionSchema {
    pub fn new(name: impl Into<String>, params: Vec<TypedName>) -> Self {
        ActionSchema {
            name: name.into(),
            params,
            pre: BTreeSet::new(),
            neg_pre: BTreeSet::new(),
            add: BTreeSet::new(),
            del: BTreeSet::new(),
        }
    }

    pub fn param_type(&self, var: &str) -> Option<&str> {
        self.params.iter().find(|p| p.name == var).map(|p| p.ty.as_str())
    }

    /// Every atom mentioned anywhere in the action body.
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.pre.iter().chain(&self.neg_pre).chain(&self.add).chain(&self.del)
    }

    /// Variables used in the body that are not declared as parameters.
    pub fn unbound_variables(&self) -> BTreeSet<&str> {
        let declared: HashSet<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        self.atoms().flat_map(Atom::variables).filter(|v| !declared.contains(v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: TypeHierarchy,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateSchema>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn constant_type(&self, name: &str) -> Option<&str> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.ty.as_str())
    }

    /// Checks name uniqueness, declared types and the well-formedness of every
    /// action body against the predicate schemas.
    pub fn check(&self) -> Result<(), ModelError> {
        self.types.check()?;
        let mut seen = HashSet::new();
        for p in &self.predicates {
            if !seen.insert(p.name.as_str()) {
                return Err(ModelError::Duplicate { kind: "predicate", name: p.name.clone() });
            }
            for arg in &p.params {
                self.require_type(&arg.ty)?;
            }
        }
        let mut seen = HashSet::new();
        for c in &self.constants {
            if !seen.insert(c.name.as_str()) {
                return Err(ModelError::Duplicate { kind: "constant", name: c.name.clone() });
            }
            self.require_type(&c.ty)?;
        }
        let mut seen = HashSet::new();
        for a in &self.actions {
            if !seen.insert(a.name.as_str()) {
                return Err(ModelError::Duplicate { kind: "action", name: a.name.clone() });
            }
            self.check_action(a)?;
        }
        Ok(())
    }

    fn require_type(&self, ty: &str) -> Result<(), ModelError> {
        if self.types.contains(ty) {
            Ok(())
        } else {
            Err(ModelError::UnknownType(ty.to_string()))
        }
    }

    fn check_action(&self, action: &ActionSchema) -> Result<(), ModelError> {
        let mut seen = HashSet::new();
        for p in &action.params {
            if !seen.insert(p.name.as_str()) {
                return Err(ModelError::Duplicate { kind: "parameter", name: p.name.clone() });
            }
            self.require_type(&p.ty)?;
        }
        if let Some(var) = action.unbound_variables().into_iter().next() {
            return Err(ModelError::UnboundVariable { action: action.name.clone(), variable: var.to_string() });
        }
        for atom in action.atoms() {
            let schema =
                self.predicate(&atom.predicate).ok_or_else(|| ModelError::UnknownPredicate(atom.predicate.clone()))?;
            if schema.arity() != atom.args.len() {
                return Err(ModelError::Arity {
                    predicate: atom.predicate.clone(),
                    expected: schema.arity(),
                    found: atom.args.len(),
                });
            }
            for (term, slot) in atom.args.iter().zip(&schema.params) {
                let ty = if is_variable(term) { action.param_type(term) } else { self.constant_type(term) }
                    .ok_or_else(|| ModelError::UnknownObject(term.clone()))?;
                if !self.types.is_subtype(ty, &slot.ty)? {
                    return Err(ModelError::IllTyped {
                        name: term.clone(),
                        expected: slot.ty.clone(),
                        found: ty.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: BTreeSet<Atom>,
    pub goal: BTreeSet<Atom>,
}

impl Problem {
    /// All objects usable in groundings: the domain's constants followed by
    /// the problem's objects.
    pub fn universe<'a>(&'a self, domain: &'a Domain) -> impl Iterator<Item = &'a TypedName> {
        domain.constants.iter().chain(&self.objects)
    }

    pub fn object_type<'a>(&'a self, domain: &'a Domain, name: &str) -> Option<&'a str> {
        self.universe(domain).find(|o| o.name == name).map(|o| o.ty.as_str())
    }

    /// Checks that init and goal are ground and well-typed against `domain`.
    pub fn check(&self, domain: &Domain) -> Result<(), ModelError> {
        if self.domain_name != domain.name {
            return Err(ModelError::DomainMismatch { expected: domain.name.clone(), found: self.domain_name.clone() });
        }
        let mut seen = HashSet::new();
        for o in self.universe(domain) {
            if !seen.insert(o.name.as_str()) {
                return Err(ModelError::Duplicate { kind: "object", name: o.name.clone() });
            }
            if !domain.types.contains(&o.ty) {
                return Err(ModelError::UnknownType(o.ty.clone()));
            }
        }
        for atom in self.init.iter().chain(&self.goal) {
            let schema = domain
                .predicate(&atom.predicate)
                .ok_or_else(|| ModelError::UnknownPredicate(atom.predicate.clone()))?;
            if schema.arity() != atom.args.len() {
                return Err(ModelError::Arity {
                    predicate: atom.predicate.clone(),
                    expected: schema.arity(),
                    found: atom.args.len(),
                });
            }
            for (term, slot) in atom.args.iter().zip(&schema.params) {
                let ty = self.object_type(domain, term).ok_or_else(|| ModelError::UnknownObject(term.clone()))?;
                if !domain.types.is_subtype(ty, &slot.ty)? {
                    return Err(ModelError::IllTyped {
                        name: term.clone(),
                        expected: slot.ty.clone(),
                        found: ty.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}
