use std::collections::HashSet;

use super::classes::SemanticKind;
use crate::pddl::{is_variable, ActionSchema, Domain};

/// The first semantic fault of a generated action against the domain, with
/// a human-readable reason. Checks run name, negated preconditions, predicate
/// use, then typing.
pub fn check_semantics(a: &ActionSchema, d: &Domain, expected_name: &str) -> Result<(), (SemanticKind, String)> {
    if !a.name.eq_ignore_ascii_case(expected_name) {
        return Err((SemanticKind::NError, format!("action is named `{}`, expected `{expected_name}`", a.name)));
    }
    if let Some(atom) = a.neg_pre.iter().next() {
        return Err((SemanticKind::BPError, format!("negated precondition (not {atom})")));
    }
    for atom in a.atoms() {
        match d.predicate(&atom.predicate) {
            None => return Err((SemanticKind::PAError, format!("undeclared predicate `{}`", atom.predicate))),
            Some(p) if p.arity() != atom.args.len() => {
                return Err((
                    SemanticKind::PAError,
                    format!("{atom} passes {} arguments, `{}` takes {}", atom.args.len(), p.name, p.arity()),
                ))
            }
            Some(_) => {}
        }
    }
    check_types(a, d).map_err(|msg| (SemanticKind::TError, msg))
}

fn check_types(a: &ActionSchema, d: &Domain) -> Result<(), String> {
    let mut seen = HashSet::new();
    for p in &a.params {
        if !seen.insert(p.name.as_str()) {
            return Err(format!("parameter `{}` declared twice", p.name));
        }
        if !d.types.contains(&p.ty) {
            return Err(format!("parameter `{}` has undeclared type `{}`", p.name, p.ty));
        }
    }
    if let Some(v) = a.unbound_variables().into_iter().next() {
        return Err(format!("variable `{v}` is not a parameter"));
    }
    for atom in a.atoms() {
        let Some(schema) = d.predicate(&atom.predicate) else { continue };
        for (term, slot) in atom.args.iter().zip(&schema.params) {
            let ty = if is_variable(term) { a.param_type(term) } else { d.constant_type(term) };
            let Some(ty) = ty else {
                return Err(format!("`{term}` in {atom} is not a parameter or constant"));
            };
            match d.types.is_subtype(ty, &slot.ty) {
                Ok(true) => {}
                Ok(false) => return Err(format!("`{term}` of type `{ty}` is not a `{}` in {atom}", slot.ty)),
                Err(e) => return Err(e.to_string()),
            }
        }
    }
    Ok(())
}
