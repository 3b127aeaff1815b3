use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::error::ModelError;

pub const ROOT_TYPE: &str = "object";

/// A forest of declared types rooted at `object`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeHierarchy {
    parents: BTreeMap<String, String>,
    order: Vec<String>,
}

impl Default for TypeHierarchy {
    fn default() -> Self {
        Self::new()
    }
}

impl TypeHierarchy {
    pub fn new() -> Self {
        TypeHierarchy { parents: BTreeMap::new(), order: Vec::new() }
    }

    pub fn contains(&self, name: &str) -> bool {
        name == ROOT_TYPE || self.parents.contains_key(name)
    }

    pub fn parent(&self, name: &str) -> Option<&str> {
        self.parents.get(name).map(String::as_str)
    }

    /// Declared types (excluding the root) in declaration order, with parents.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.order.iter().map(|t| (t.as_str(), self.parents[t].as_str()))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Declares `name` under `parent`. Redeclaring with the same parent is a
    /// no-op; a conflicting parent is reported as a duplicate.
    pub fn declare(&mut self, name: &str, parent: &str) -> Result<(), ModelError> {
        if name == ROOT_TYPE {
            return if parent == ROOT_TYPE { Ok(()) } else { Err(ModelError::TypeCycle(name.to_string())) };
        }
        if let Some(existing) = self.parents.get(name) {
            if existing == parent {
                return Ok(());
            }
            return Err(ModelError::Duplicate { kind: "type", name: name.to_string() });
        }
        self.parents.insert(name.to_string(), parent.to_string());
        self.order.push(name.to_string());
        Ok(())
    }

    /// Checks that every parent is declared and that there are no cycles.
    pub fn check(&self) -> Result<(), ModelError> {
        for name in &self.order {
            let mut current = name.as_str();
            let mut steps = 0;
            while current != ROOT_TYPE {
                current = self.parents.get(current).ok_or_else(|| ModelError::UnknownType(current.to_string()))?;
                steps += 1;
                if steps > self.order.len() {
                    return Err(ModelError::TypeCycle(name.clone()));
                }
            }
        }
        Ok(())
    }

    /// True iff `ancestor` lies on the parent chain from `child` to the root.
    /// Reflexive.
    pub fn is_subtype(&self, child: &str, ancestor: &str) -> Result<bool, ModelError> {
        if !self.contains(child) {
            return Err(ModelError::UnknownType(child.to_string()));
        }
        if !self.contains(ancestor) {
            return Err(ModelError::UnknownType(ancestor.to_string()));
        }
        let mut current = child;
        for _ in 0..=self.order.len() {
            if current == ancestor {
                return Ok(true);
            }
            match self.parents.get(current) {
                Some(p) => current = p,
                None => return Ok(false),
            }
        }
        Err(ModelError::TypeCycle(child.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistics() -> TypeHierarchy {
        let mut h = TypeHierarchy::new();
        for (t, p) in [
            ("truck", "vehicle"),
            ("airplane", "vehicle"),
            ("package", "physobj"),
            ("vehicle", "physobj"),
            ("airport", "place"),
            ("location", "place"),
            ("city", "object"),
            ("place", "object"),
            ("physobj", "object"),
        ] {
            h.declare(t, p).unwrap();
        }
        h
    }

    #[test]
    fn airport_is_a_place() {
        let h = logistics();
        assert!(h.is_subtype("airport", "place").unwrap());
        assert!(h.is_subtype("truck", "object").unwrap());
    }

    #[test]
    fn subtype_is_reflexive() {
        let h = logistics();
        assert!(h.is_subtype("truck", "truck").unwrap());
        assert!(h.is_subtype("object", "object").unwrap());
    }

    #[test]
    fn no_upward_coercion() {
        let h = logistics();
        assert!(!h.is_subtype("place", "airport").unwrap());
        assert!(!h.is_subtype("truck", "airplane").unwrap());
    }

    #[test]
    fn unknown_type_is_an_error() {
        let h = logistics();
        assert_eq!(h.is_subtype("boat", "vehicle"), Err(ModelError::UnknownType("boat".into())));
    }

    #[test]
    fn cycles_are_detected() {
        let mut h = TypeHierarchy::new();
        h.declare("a", "b").unwrap();
        h.declare("b", "a").unwrap();
        assert!(matches!(h.check(), Err(ModelError::TypeCycle(_))));
    }
}
