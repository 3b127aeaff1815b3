//! Parser for the STRIPS + typing fragment of PDDL.
//!
//! Identifiers are lower-cased. The parser accepts anything that is
//! syntactically well-formed for this fragment, including negated
//! preconditions and unbound variables in action bodies; those are left for
//! [`Domain::check`] or the evaluator to report.

use std::collections::BTreeSet;

use super::error::{ModelError, ParseError};
use super::model::{ActionSchema, Atom, Domain, PredicateSchema, Problem, TypedName};
use super::sexpr::{read_all, Position, SExpr};
use super::types::{TypeHierarchy, ROOT_TYPE};

const SUPPORTED_REQUIREMENTS: [&str; 2] = [":strips", ":typing"];

/// Heads that are legal PDDL but outside the STRIPS fragment.
const UNSUPPORTED_HEADS: [&str; 10] =
    ["or", "imply", "exists", "forall", "when", "=", "increase", "decrease", "assign", "either"];

fn lower(s: &str) -> String {
    s.to_lowercase()
}

fn is_keyword(s: &str) -> bool {
    s.starts_with(':')
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty() && !is_keyword(s) && !s.starts_with('?') && s != "-"
}

fn is_var_name(s: &str) -> bool {
    s.len() > 1 && s.starts_with('?') && is_identifier(&s[1..])
}

fn end_of_list(close: Position, expected: &str) -> ParseError {
    ParseError::unexpected(close, ")", expected)
}

fn list<'a>(expr: &'a SExpr, expected: &str) -> Result<(&'a [SExpr], Position), ParseError> {
    match expr {
        SExpr::List { items, close, .. } => Ok((items, *close)),
        SExpr::Symbol { text, pos } => Err(ParseError::unexpected(*pos, text.clone(), expected)),
    }
}

fn symbol<'a>(expr: Option<&'a SExpr>, close: Position, expected: &str) -> Result<(&'a str, Position), ParseError> {
    match expr {
        Some(SExpr::Symbol { text, pos }) => Ok((text, *pos)),
        Some(other) => Err(ParseError::unexpected(other.pos(), other.token(), expected)),
        None => Err(end_of_list(close, expected)),
    }
}

fn identifier(expr: Option<&SExpr>, close: Position, expected: &str) -> Result<String, ParseError> {
    let (text, pos) = symbol(expr, close, expected)?;
    if is_identifier(text) {
        Ok(lower(text))
    } else {
        Err(ParseError::unexpected(pos, text, expected))
    }
}

fn expect_keyword(expr: Option<&SExpr>, close: Position, keyword: &str) -> Result<(), ParseError> {
    let (text, pos) = symbol(expr, close, keyword)?;
    if lower(text) == keyword {
        Ok(())
    } else {
        Err(ParseError::unexpected(pos, text, format!("`{keyword}`")))
    }
}

fn single_form(text: &str) -> Result<SExpr, ParseError> {
    let mut forms = read_all(text)?.into_iter();
    let first = forms.next().ok_or(ParseError::NoPddl)?;
    if let Some(extra) = forms.next() {
        return Err(ParseError::unexpected(extra.pos(), extra.token(), "end of input"));
    }
    Ok(first)
}

/// Parses `a b - t c` style lists. `variables` selects whether names must be
/// `?`-prefixed. Untyped names get the root type.
fn typed_list(items: &[SExpr], variables: bool) -> Result<Vec<TypedName>, ParseError> {
    let what = if variables { "a variable" } else { "a name" };
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let (text, pos) = match &items[i] {
            SExpr::Symbol { text, pos } => (text.as_str(), *pos),
            other => return Err(ParseError::unexpected(other.pos(), other.token(), what)),
        };
        if text == "-" {
            if pending.is_empty() {
                return Err(ParseError::unexpected(pos, text, what));
            }
            let ty = match items.get(i + 1) {
                Some(SExpr::Symbol { text, .. }) if is_identifier(text) => lower(text),
                Some(other) => return Err(ParseError::unexpected(other.pos(), other.token(), "a type name")),
                None => return Err(ParseError::unexpected(pos, text, "a type name after `-`")),
            };
            out.extend(pending.drain(..).map(|n| TypedName::new(n, ty.clone())));
            i += 2;
            continue;
        }
        let ok = if variables { is_var_name(text) } else { is_identifier(text) };
        if !ok {
            return Err(ParseError::unexpected(pos, text, what));
        }
        pending.push(lower(text));
        i += 1;
    }
    out.extend(pending.into_iter().map(|n| TypedName::new(n, ROOT_TYPE)));
    Ok(out)
}

#[derive(Default)]
struct Literals {
    pos: Vec<Atom>,
    neg: Vec<(Atom, Position)>,
}

fn parse_atom(items: &[SExpr], close: Position, allow_vars: bool) -> Result<Atom, ParseError> {
    let (head, head_pos) = symbol(items.first(), close, "a predicate name")?;
    let head_l = lower(head);
    if !is_identifier(head) || head_l == "and" || head_l == "not" || UNSUPPORTED_HEADS.contains(&head_l.as_str()) {
        return Err(ParseError::unexpected(head_pos, head, "a predicate name"));
    }
    let mut args = Vec::with_capacity(items.len() - 1);
    for arg in &items[1..] {
        let (text, pos) = match arg {
            SExpr::Symbol { text, pos } => (text.as_str(), *pos),
            other => return Err(ParseError::unexpected(other.pos(), other.token(), "a term")),
        };
        let ok = if text.starts_with('?') { allow_vars && is_var_name(text) } else { is_identifier(text) };
        if !ok {
            return Err(ParseError::unexpected(pos, text, "a term"));
        }
        args.push(lower(text));
    }
    Ok(Atom { predicate: head_l, args })
}

/// Flattens a conjunction of literals. `()` and `(and)` are empty conjunctions.
fn parse_literals(expr: &SExpr, out: &mut Literals, allow_vars: bool) -> Result<(), ParseError> {
    let (items, close) = list(expr, "a literal or conjunction")?;
    let Some(head) = items.first() else {
        return Ok(());
    };
    match head.as_symbol().map(lower).as_deref() {
        Some("and") => {
            for child in &items[1..] {
                parse_literals(child, out, allow_vars)?;
            }
            Ok(())
        }
        Some("not") => {
            let inner = match items.get(1) {
                Some(e) => e,
                None => return Err(end_of_list(close, "a negated atom")),
            };
            if let Some(extra) = items.get(2) {
                return Err(ParseError::unexpected(extra.pos(), extra.token(), ")"));
            }
            let (inner_items, inner_close) = list(inner, "a negated atom")?;
            out.neg.push((parse_atom(inner_items, inner_close, allow_vars)?, head.pos()));
            Ok(())
        }
        _ => {
            out.pos.push(parse_atom(items, close, allow_vars)?);
            Ok(())
        }
    }
}

fn parse_action_items(items: &[SExpr], close: Position) -> Result<ActionSchema, ParseError> {
    let name = identifier(items.get(1), close, "an action name")?;
    let mut params: Option<&SExpr> = None;
    let mut pre: Option<&SExpr> = None;
    let mut eff: Option<&SExpr> = None;

    let mut i = 2;
    while i < items.len() {
        let (key, key_pos) = symbol(items.get(i), close, "an action keyword")?;
        let slot = match lower(key).as_str() {
            ":parameters" => &mut params,
            ":precondition" => &mut pre,
            ":effect" => &mut eff,
            _ => return Err(ParseError::unexpected(key_pos, key, "`:parameters`, `:precondition` or `:effect`")),
        };
        if slot.is_some() {
            return Err(ParseError::unexpected(key_pos, key, "a keyword not already given"));
        }
        let value = items.get(i + 1).ok_or_else(|| end_of_list(close, &format!("a value for {key}")))?;
        *slot = Some(value);
        i += 2;
    }

    let params = match params {
        Some(expr) => {
            let (p_items, _) = list(expr, "a parameter list")?;
            typed_list(p_items, true)?
        }
        None => Vec::new(),
    };
    let mut action = ActionSchema::new(name, params);
    if let Some(expr) = pre {
        let mut lits = Literals::default();
        parse_literals(expr, &mut lits, true)?;
        action.pre = lits.pos.into_iter().collect();
        action.neg_pre = lits.neg.into_iter().map(|(a, _)| a).collect();
    }
    if let Some(expr) = eff {
        let mut lits = Literals::default();
        parse_literals(expr, &mut lits, true)?;
        action.add = lits.pos.into_iter().collect();
        action.del = lits.neg.into_iter().map(|(a, _)| a).collect();
    }
    Ok(action)
}

/// Parses a single `(:action ...)` form exactly as written.
pub fn parse_action(text: &str) -> Result<ActionSchema, ParseError> {
    let form = single_form(text)?;
    let (items, close) = list(&form, "`(:action ...)`")?;
    expect_keyword(items.first(), close, ":action")?;
    parse_action_items(items, close)
}

fn section_head(expr: &SExpr) -> Result<(&[SExpr], Position, String, Position), ParseError> {
    let (items, close) = list(expr, "a section")?;
    let (head, pos) = symbol(items.first(), close, "a section keyword")?;
    Ok((items, close, lower(head), pos))
}

fn parse_requirements(items: &[SExpr]) -> Result<Vec<String>, ParseError> {
    let mut out = Vec::new();
    for item in items {
        match item {
            SExpr::Symbol { text, .. } if is_keyword(text) => {
                let flag = lower(text);
                if !SUPPORTED_REQUIREMENTS.contains(&flag.as_str()) {
                    log::warn!("ignoring unsupported requirement {flag}");
                }
                out.push(flag);
            }
            other => return Err(ParseError::unexpected(other.pos(), other.token(), "a requirement flag")),
        }
    }
    Ok(out)
}

fn build_types(entries: Vec<TypedName>) -> Result<TypeHierarchy, ModelError> {
    let mut types = TypeHierarchy::new();
    for t in &entries {
        types.declare(&t.name, &t.ty)?;
    }
    // Parents that never appear on the left of `-` are implicitly objects.
    for t in &entries {
        if !types.contains(&t.ty) {
            types.declare(&t.ty, ROOT_TYPE)?;
        }
    }
    types.check()?;
    Ok(types)
}

/// Parses and checks a domain file.
pub fn parse_domain(text: &str) -> Result<Domain, ParseError> {
    let form = single_form(text)?;
    let (items, close) = list(&form, "`(define ...)`")?;
    expect_keyword(items.first(), close, "define")?;
    let header = items.get(1).ok_or_else(|| end_of_list(close, "`(domain <name>)`"))?;
    let (h_items, h_close) = list(header, "`(domain <name>)`")?;
    expect_keyword(h_items.first(), h_close, "domain")?;
    let name = identifier(h_items.get(1), h_close, "a domain name")?;
    if let Some(extra) = h_items.get(2) {
        return Err(ParseError::unexpected(extra.pos(), extra.token(), ")"));
    }

    let mut requirements = None;
    let mut types = None;
    let mut constants = None;
    let mut predicates: Option<Vec<PredicateSchema>> = None;
    let mut actions = Vec::new();

    for section in &items[2..] {
        let (s_items, s_close, head, head_pos) = section_head(section)?;
        let body = &s_items[1..];
        let duplicate = || ParseError::unexpected(head_pos, head.clone(), "a section not already given");
        match head.as_str() {
            ":requirements" => {
                if requirements.is_some() {
                    return Err(duplicate());
                }
                requirements = Some(parse_requirements(body)?);
            }
            ":types" => {
                if types.is_some() {
                    return Err(duplicate());
                }
                types = Some(typed_list(body, false)?);
            }
            ":constants" => {
                if constants.is_some() {
                    return Err(duplicate());
                }
                constants = Some(typed_list(body, false)?);
            }
            ":predicates" => {
                if predicates.is_some() {
                    return Err(duplicate());
                }
                let mut preds = Vec::new();
                for p in body {
                    let (p_items, p_close) = list(p, "a predicate declaration")?;
                    let pname = identifier(p_items.first(), p_close, "a predicate name")?;
                    let params = typed_list(&p_items[1..], true)?;
                    preds.push(PredicateSchema { name: pname, params });
                }
                predicates = Some(preds);
            }
            ":action" => actions.push(parse_action_items(s_items, s_close)?),
            _ => return Err(ParseError::unexpected(head_pos, head, "a domain section")),
        }
    }

    let domain = Domain {
        name,
        requirements: requirements.unwrap_or_default(),
        types: build_types(types.unwrap_or_default())?,
        constants: constants.unwrap_or_default(),
        predicates: predicates.unwrap_or_default(),
        actions,
    };
    domain.check()?;
    Ok(domain)
}

/// Parses a problem file. Call [`Problem::check`] to type-check it against
/// its domain.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let form = single_form(text)?;
    let (items, close) = list(&form, "`(define ...)`")?;
    expect_keyword(items.first(), close, "define")?;
    let header = items.get(1).ok_or_else(|| end_of_list(close, "`(problem <name>)`"))?;
    let (h_items, h_close) = list(header, "`(problem <name>)`")?;
    expect_keyword(h_items.first(), h_close, "problem")?;
    let name = identifier(h_items.get(1), h_close, "a problem name")?;

    let mut domain_name = None;
    let mut objects = None;
    let mut init: Option<BTreeSet<Atom>> = None;
    let mut goal: Option<BTreeSet<Atom>> = None;

    for section in &items[2..] {
        let (s_items, s_close, head, head_pos) = section_head(section)?;
        let body = &s_items[1..];
        let duplicate = || ParseError::unexpected(head_pos, head.clone(), "a section not already given");
        match head.as_str() {
            ":domain" => {
                if domain_name.is_some() {
                    return Err(duplicate());
                }
                domain_name = Some(identifier(body.first(), s_close, "a domain name")?);
            }
            ":requirements" => {
                parse_requirements(body)?;
            }
            ":objects" => {
                if objects.is_some() {
                    return Err(duplicate());
                }
                objects = Some(typed_list(body, false)?);
            }
            ":init" => {
                if init.is_some() {
                    return Err(duplicate());
                }
                let mut facts = BTreeSet::new();
                for fact in body {
                    let (f_items, f_close) = list(fact, "a ground atom")?;
                    facts.insert(parse_atom(f_items, f_close, false)?);
                }
                init = Some(facts);
            }
            ":goal" => {
                if goal.is_some() {
                    return Err(duplicate());
                }
                let expr = body.first().ok_or_else(|| end_of_list(s_close, "a goal condition"))?;
                let mut lits = Literals::default();
                parse_literals(expr, &mut lits, false)?;
                if let Some((_, pos)) = lits.neg.first() {
                    return Err(ParseError::unexpected(*pos, "not", "a positive goal atom"));
                }
                goal = Some(lits.pos.into_iter().collect());
            }
            _ => return Err(ParseError::unexpected(head_pos, head, "a problem section")),
        }
    }

    Ok(Problem {
        name,
        domain_name: domain_name.ok_or_else(|| end_of_list(close, "a `(:domain ...)` section"))?,
        objects: objects.unwrap_or_default(),
        init: init.unwrap_or_default(),
        goal: goal.unwrap_or_default(),
    })
}
