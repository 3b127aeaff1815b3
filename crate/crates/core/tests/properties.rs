mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::sample::select;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use domain_recon::describe::{describe, flipped_atoms, random_pool, DescriptionClass};
use domain_recon::eval::{are_with, prune, AreMode};
use domain_recon::experiment::ExperimentRecord;
use domain_recon::grounding::{applicable, apply, GroundedAction};
use domain_recon::pddl::{parse_action, print_action, SyntaxErrorKind, TypedName};
use domain_recon::planner::ground_problem;
use domain_recon::prompt::{build_prompt, sample_context, PromptQuery, DEFAULT_INSTRUCTION};
use domain_recon::{
    aggregate, are, ActionRef, ActionSchema, Atom, Corpus, Evaluator, PlannerConfig, ResultClass, State,
};

fn shared_corpus() -> &'static Corpus {
    static C: OnceLock<Corpus> = OnceLock::new();
    C.get_or_init(corpus)
}

fn blocksworld_evaluator() -> &'static Evaluator {
    static E: OnceLock<Evaluator> = OnceLock::new();
    E.get_or_init(|| {
        let d = shared_corpus().domain("blocksworld").unwrap();
        Evaluator::new(d.domain.clone(), d.problems.clone(), PlannerConfig::with_k(5)).unwrap()
    })
}

const KEYWORDS: [&str; 4] = ["and", "not", "either", "object"];

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_-]{0,5}".prop_filter("keyword", |s| !KEYWORDS.contains(&s.as_str()))
}

fn variable() -> impl Strategy<Value = String> {
    "\\?[a-z][a-z0-9]{0,3}"
}

fn atom(terms: Vec<String>) -> impl Strategy<Value = Atom> {
    let term = if terms.is_empty() { ident().boxed() } else { prop_oneof![3 => select(terms), 1 => ident()].boxed() };
    (ident(), prop::collection::vec(term, 0..3)).prop_map(|(p, args)| Atom::new(p, args))
}

fn atoms(terms: Vec<String>, max: usize) -> impl Strategy<Value = BTreeSet<Atom>> {
    prop::collection::btree_set(atom(terms), 0..max)
}

prop_compose! {
    fn schema()(
        name in ident(),
        params in prop::collection::btree_map(variable(), ident(), 0..4),
    )(
        pre in atoms(params.keys().cloned().collect(), 4),
        neg_pre in atoms(params.keys().cloned().collect(), 2),
        add in atoms(params.keys().cloned().collect(), 4),
        del in atoms(params.keys().cloned().collect(), 4),
        name in Just(name),
        params in Just(params),
    ) -> ActionSchema {
        let mut a = ActionSchema::new(name, params.into_iter().map(|(v, t)| TypedName::new(v, t)).collect());
        a.pre = pre;
        a.neg_pre = neg_pre;
        a.add = add;
        a.del = del;
        a
    }
}

// Same-shaped schemas over a tiny vocabulary, so that overlaps are common.
prop_compose! {
    fn small_schema()(
        pre in prop::collection::btree_set(small_atom(), 0..4),
        add in prop::collection::btree_set(small_atom(), 0..4),
        del in prop::collection::btree_set(small_atom(), 0..4),
    ) -> ActionSchema {
        let mut a = ActionSchema::new("a", vec![TypedName::new("?x", "object"), TypedName::new("?y", "object")]);
        a.pre = pre;
        a.add = add;
        a.del = del;
        a
    }
}

fn small_atom() -> impl Strategy<Value = Atom> {
    (select(vec!["p", "q"]), prop::collection::vec(select(vec!["?x", "?y"]), 0..3)).prop_map(|(p, a)| Atom::new(p, a))
}

proptest! {
    #[test]
    fn print_parse_round_trip(a in schema()) {
        let text = print_action(&a);
        let back = parse_action(&text).unwrap();
        prop_assert_eq!(&back, &a);
        prop_assert_eq!(print_action(&back), text);
    }

    #[test]
    fn parser_is_total(s in "[()a-z?: \n-]{0,80}") {
        if let Err(e) = parse_action(&s) {
            let _ = e.syntax_kind();
        }
        let _ = prune(&s);
    }

    #[test]
    fn prune_takes_the_first_balanced_group(prefix in "[a-z .!]{0,20}", body in "[a-z ?]{0,20}", suffix in "[a-z ()]{0,20}") {
        let raw = format!("{prefix}({body}){suffix}");
        let pruned = prune(&raw).unwrap();
        prop_assert_eq!(pruned, format!("({body})"));
        prop_assert_eq!(prune(&prefix), Err(SyntaxErrorKind::NoPDDL));
    }

    #[test]
    fn classification_is_total(s in "[()a-z?: \n-]{0,120}") {
        let c = blocksworld_evaluator().classify(&s, "put-down").unwrap();
        prop_assert_eq!(c.are.is_some(), c.parsed_action.is_some());
        prop_assert!(ResultClass::ALL.contains(&c.result));
    }

    #[test]
    fn are_is_a_metric(a in small_schema(), b in small_schema(), c in small_schema()) {
        let same = (&a.pre, &a.add, &a.del) == (&b.pre, &b.add, &b.del);
        prop_assert_eq!(are(&a, &b), are(&b, &a));
        prop_assert_eq!(are(&a, &b) == 0, same);
        prop_assert!(are(&a, &b) <= are(&a, &c) + are(&c, &b));
    }

    #[test]
    fn positional_are_ignores_consistent_renaming(a in small_schema()) {
        let renamed = rename(&a, &[("?x", "?first"), ("?y", "?second")]);
        prop_assert_eq!(are_with(&a, &renamed, AreMode::Positional), 0);
        prop_assert_eq!(are_with(&a, &a, AreMode::Literal), 0);
    }

    #[test]
    fn aggregation_ignores_record_order(classes in prop::collection::vec(select(ResultClass::ALL.to_vec()), 1..60), seed: u64) {
        let records: Vec<ExperimentRecord> = classes.iter().enumerate().map(|(i, c)| record(i, *c)).collect();
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = aggregate(&records).unwrap();
        prop_assert_eq!(&a, &aggregate(&shuffled).unwrap());
        let col = &a.models[0];
        prop_assert_eq!(col.total, classes.len());
        prop_assert_eq!(ResultClass::CLASS_NAMES.iter().map(|c| col.class_count(c)).sum::<usize>(), classes.len());
    }

    #[test]
    fn apply_respects_effects(case in 0usize..10_000, seed: u64) {
        let (problem_facts, g) = pick_grounding(case);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut facts: BTreeSet<Atom> =
            problem_facts.iter().filter(|_| rand::Rng::gen_bool(&mut rng, 0.3)).cloned().collect();
        facts.extend(g.pre.iter().cloned());
        let s = State::new(facts);
        prop_assert!(applicable(&s, g));
        let next = apply(&s, g).unwrap();
        prop_assert!(next.facts().difference(s.facts()).all(|a| g.add.contains(a)));
        prop_assert!(s.facts().difference(next.facts()).all(|a| g.del.contains(a)));
    }

    /// Swapping add and delete undoes an action when the adds were absent
    /// and the deletes present beforehand; without that the inverse cannot
    /// know what the state held.
    #[test]
    fn inverse_action_restores_state(case in 0usize..10_000, seed: u64) {
        let (problem_facts, g) = pick_grounding(case);
        prop_assume!(g.add.is_disjoint(&g.del) && g.add.is_disjoint(&g.pre));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut facts: BTreeSet<Atom> =
            problem_facts.iter().filter(|_| rand::Rng::gen_bool(&mut rng, 0.3)).cloned().collect();
        facts.extend(g.pre.iter().cloned());
        facts.extend(g.del.iter().cloned());
        facts.retain(|a| !g.add.contains(a));
        let s = State::new(facts);
        let next = apply(&s, g).unwrap();
        let inverse = GroundedAction { pre: BTreeSet::new(), add: g.del.clone(), del: g.add.clone(), ..g.clone() };
        prop_assert_eq!(apply(&next, &inverse).unwrap(), s);
    }
}

fn rename(a: &ActionSchema, map: &[(&str, &str)]) -> ActionSchema {
    let sub = |t: &String| map.iter().find(|(f, _)| f == t).map_or(t.clone(), |(_, to)| to.to_string());
    let atoms =
        |s: &BTreeSet<Atom>| s.iter().map(|x| Atom::new(x.predicate.as_str(), x.args.iter().map(sub))).collect();
    let mut b = ActionSchema::new(
        a.name.clone(),
        a.params.iter().map(|p| TypedName::new(sub(&p.name), p.ty.clone())).collect(),
    );
    b.pre = atoms(&a.pre);
    b.neg_pre = atoms(&a.neg_pre);
    b.add = atoms(&a.add);
    b.del = atoms(&a.del);
    b
}

fn record(i: usize, result: ResultClass) -> ExperimentRecord {
    ExperimentRecord {
        prompt_id: format!("p/{i:03}"),
        model_tag: "m".into(),
        domain: "d".into(),
        action: "a".into(),
        description_class: DescriptionClass::Base,
        seed: 0,
        context: vec![],
        prompt_key: String::new(),
        result: Some(result),
        transport_error: None,
        are: None,
        wall_time_ms: 0,
        response: String::new(),
        diagnostics: String::new(),
    }
}

/// Every grounding of every corpus problem, with the ground facts that can
/// appear in its problem.
fn groundings() -> &'static Vec<(BTreeSet<Atom>, GroundedAction)> {
    static G: OnceLock<Vec<(BTreeSet<Atom>, GroundedAction)>> = OnceLock::new();
    G.get_or_init(|| {
        let mut out = Vec::new();
        for d in &shared_corpus().domains {
            for p in &d.problems {
                let gs = ground_problem(p, &d.domain).unwrap();
                let facts: BTreeSet<Atom> =
                    gs.iter().flat_map(|g| g.pre.iter().chain(&g.add).chain(&g.del)).chain(&p.init).cloned().collect();
                out.extend(gs.into_iter().map(|g| (facts.clone(), g)));
            }
        }
        out
    })
}

fn pick_grounding(case: usize) -> (&'static BTreeSet<Atom>, &'static GroundedAction) {
    let all = groundings();
    let (f, g) = &all[case % all.len()];
    (f, g)
}

#[test]
fn repeated_effect_atoms_collapse() {
    let a = parse_action("(:action a :parameters (?x) :effect (and (p ?x) (p ?x) (not (q)) (not (q))))").unwrap();
    assert_eq!(a.add.len(), 1);
    assert_eq!(a.del.len(), 1);
}

#[test]
fn description_invariants_hold_on_the_corpus() {
    for d in &shared_corpus().domains {
        for a in &d.domain.actions {
            let base = d.annotation.base(&a.name).unwrap();
            let stem = base.trim_end_matches('.').trim_end();
            let flipped = describe(a, &d.annotation, DescriptionClass::Flipped, 0).unwrap();
            let want: BTreeSet<Atom> = a.pre.intersection(&a.del).cloned().collect();
            let got: BTreeSet<Atom> = flipped.clauses.iter().map(|c| c.atom.clone()).collect();
            assert_eq!(got, want, "{}/{}", d.name(), a.name);
            assert_eq!(flipped_atoms(a).len(), want.len());
            for seed in [0, 1, 99, u64::MAX] {
                for class in DescriptionClass::ALL {
                    let x = describe(a, &d.annotation, class, seed).unwrap();
                    assert_eq!(x, describe(a, &d.annotation, class, seed).unwrap());
                    assert!(x.text.starts_with(stem), "{}/{} {class:?}: {}", d.name(), a.name, x.text);
                    if x.clauses.is_empty() {
                        assert_eq!(x.text, base);
                    }
                }
                let r = describe(a, &d.annotation, DescriptionClass::Random, seed).unwrap();
                assert_eq!(r.clauses.len(), want.len().min(random_pool(a).len()));
            }
        }
    }
}

fn within_three_sigma(counts: &BTreeMap<String, usize>, trials: usize, p: f64) -> Result<(), String> {
    let mean = trials as f64 * p;
    let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
    for (k, &c) in counts {
        if (c as f64 - mean).abs() > 3.0 * sigma {
            return Err(format!("{k}: {c} vs mean {mean:.1} sigma {sigma:.1}"));
        }
    }
    Ok(())
}

#[test]
fn random_clauses_are_uniform_over_the_pool() {
    let heavy = shared_corpus().domain("heavy").unwrap();
    let a = heavy.domain.action("pack-first").unwrap();
    let pool = random_pool(a);
    let mut counts: BTreeMap<String, usize> = pool.iter().map(|c| (format!("{:?}", c), 0)).collect();
    for seed in 0..10_000 {
        let r = describe(a, &heavy.annotation, DescriptionClass::Random, seed).unwrap();
        assert_eq!(r.clauses.len(), 1);
        *counts.get_mut(&format!("{:?}", r.clauses[0])).expect("clause from the pool") += 1;
    }
    within_three_sigma(&counts, 10_000, 1.0 / pool.len() as f64).unwrap();
}

#[test]
fn context_sampling_is_uniform_and_out_of_domain() {
    let corpus = shared_corpus();
    let target = ActionRef::new("blocksworld", "put-down");
    let outside: Vec<ActionRef> = corpus.actions().into_iter().filter(|r| r.domain != "blocksworld").collect();
    let mut counts: BTreeMap<String, usize> = outside.iter().map(|r| (r.to_string(), 0)).collect();
    for seed in 0..10_000 {
        let ctx = sample_context(corpus, &target, 3, seed).unwrap();
        assert_eq!(ctx.iter().collect::<BTreeSet<_>>().len(), 3);
        for c in ctx {
            *counts.get_mut(&c.to_string()).expect("out-of-domain action") += 1;
        }
    }
    within_three_sigma(&counts, 10_000, 3.0 / outside.len() as f64).unwrap();

    let all = sample_context(corpus, &target, outside.len(), 5).unwrap();
    assert_eq!(all.iter().collect::<BTreeSet<_>>(), outside.iter().collect::<BTreeSet<_>>());
}

#[test]
fn prompts_are_deterministic_and_well_formed() {
    let corpus = shared_corpus();
    let target = ActionRef::new("gripper", "pick");
    for class in DescriptionClass::ALL {
        let ctx = sample_context(corpus, &target, 3, 11).unwrap();
        let q = PromptQuery { prompt_id: "x".into(), target: target.clone(), class, seed: 11 };
        let p = build_prompt(corpus, DEFAULT_INSTRUCTION, &ctx, &q).unwrap();
        assert_eq!(p, build_prompt(corpus, DEFAULT_INSTRUCTION, &ctx, &q).unwrap());
        assert!(p.text.starts_with(DEFAULT_INSTRUCTION));
        assert_eq!(p.text.matches("Allowed Predicates:").count(), 4);
        assert_eq!(p.text.matches("PDDL Action:").count(), 4);
        assert!(p.text.ends_with("PDDL Action:\n"));
        assert!(p.context.iter().all(|c| c.domain != "gripper"));
    }
    let q = PromptQuery { prompt_id: "x".into(), target: target.clone(), class: DescriptionClass::Base, seed: 0 };
    let zero_shot = build_prompt(corpus, DEFAULT_INSTRUCTION, &[], &q).unwrap();
    assert_eq!(zero_shot.text.matches("Allowed Predicates:").count(), 1);
    let bad = [ActionRef::new("gripper", "move")];
    assert!(build_prompt(corpus, DEFAULT_INSTRUCTION, &bad, &q).is_err());
}

#[test]
fn semantic_precedence_matches_the_rule_oracle() {
    let d = &shared_corpus().domain("logistics").unwrap().domain;
    let cases = [
        ("(:action load-truck :parameters (?p - package ?t - truck ?l - place) :precondition (and (at ?p)) :effect (in ?p ?t))", Some("PAError")),
        ("(:action load-truck :parameters (?p - package ?t - truck ?l - place) :precondition (and (at ?t ?l) (at ?p ?l)) :effect (and (not (at ?p ?l)) (in ?p ?t)))", None),
        ("(:action load-truck :parameters (?p - package ?t - truck ?l - place) :precondition (and (at ?t ?l) (in-city ?p ?l)) :effect (in ?p ?t))", Some("TError")),
        ("(:action unload :parameters (?p - package) :precondition (not (in ?p ?p)) :effect (in ?p))", Some("NError")),
    ];
    let problems = shared_corpus().domain("logistics").unwrap().problems.clone();
    let ev = Evaluator::new(d.clone(), problems, PlannerConfig::with_k(1)).unwrap();
    for (text, want) in cases {
        let a = parse_action(text).unwrap();
        assert_eq!(semantic_oracle(&a, d, "load-truck"), want, "{text}");
        let got = ev.classify(text, "load-truck").unwrap().result;
        match want {
            Some(k) => assert_eq!(got.subclass_name(), Some(k), "{text}"),
            None => assert!(!matches!(got, ResultClass::Semantic(_)), "{text}: {got}"),
        }
    }
}
