//! Canonical PDDL rendering. Atoms are emitted in lexicographic order, so
//! printing is deterministic and a print-parse cycle is a fixed point.

use std::collections::BTreeSet;
use std::fmt::Write;

use super::model::{ActionSchema, Atom, Domain, Problem, TypedName};

fn typed_params(params: &[TypedName]) -> String {
    params.iter().map(|p| format!("{} - {}", p.name, p.ty)).collect::<Vec<_>>().join(" ")
}

fn conjunction(literals: Vec<String>) -> String {
    match literals.len() {
        0 => "(and)".to_string(),
        1 => literals.into_iter().next().unwrap(),
        _ => format!("(and {})", literals.join(" ")),
    }
}

fn negated(atoms: &BTreeSet<Atom>) -> impl Iterator<Item = String> + '_ {
    atoms.iter().map(|a| format!("(not {a})"))
}

/// Renders an action in the layout used for prompt examples.
pub fn print_action(action: &ActionSchema) -> String {
    let pre = action.pre.iter().map(Atom::to_string).chain(negated(&action.neg_pre)).collect();
    let eff = negated(&action.del).chain(action.add.iter().map(Atom::to_string)).collect();
    format!(
        "(:action {}\n    :parameters ({})\n    :precondition {}\n    :effect {}\n)",
        action.name,
        typed_params(&action.params),
        conjunction(pre),
        conjunction(eff)
    )
}

fn indent(text: &str, by: &str) -> String {
    text.lines().map(|l| format!("{by}{l}")).collect::<Vec<_>>().join("\n")
}

/// Groups consecutive names that share a type: `a b - t c - u`.
fn grouped(names: &[TypedName]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < names.len() {
        let ty = &names[i].ty;
        let mut j = i;
        while j < names.len() && &names[j].ty == ty {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&names[j].name);
            j += 1;
        }
        write!(out, " - {ty}").unwrap();
        i = j;
    }
    out
}

pub fn print_domain(domain: &Domain) -> String {
    let mut out = format!("(define (domain {})\n", domain.name);
    if !domain.requirements.is_empty() {
        writeln!(out, "  (:requirements {})", domain.requirements.join(" ")).unwrap();
    }
    if !domain.types.is_empty() {
        let types: Vec<TypedName> = domain.types.entries().map(|(t, p)| TypedName::new(t, p)).collect();
        writeln!(out, "  (:types {})", grouped(&types)).unwrap();
    }
    if !domain.constants.is_empty() {
        writeln!(out, "  (:constants {})", grouped(&domain.constants)).unwrap();
    }
    out.push_str("  (:predicates");
    for p in &domain.predicates {
        if p.params.is_empty() {
            write!(out, "\n    ({})", p.name).unwrap();
        } else {
            write!(out, "\n    ({} {})", p.name, typed_params(&p.params)).unwrap();
        }
    }
    out.push_str(")\n");
    for a in &domain.actions {
        out.push('\n');
        out.push_str(&indent(&print_action(a), "  "));
        out.push('\n');
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(problem: &Problem) -> String {
    let mut out = format!("(define (problem {})\n  (:domain {})\n", problem.name, problem.domain_name);
    if !problem.objects.is_empty() {
        writeln!(out, "  (:objects {})", grouped(&problem.objects)).unwrap();
    }
    let init: Vec<String> = problem.init.iter().map(Atom::to_string).collect();
    writeln!(out, "  (:init {})", init.join(" ")).unwrap();
    let goal: Vec<String> = problem.goal.iter().map(Atom::to_string).collect();
    writeln!(out, "  (:goal (and {})))", goal.join(" ")).unwrap();
    out
}
