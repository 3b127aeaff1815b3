use crate::pddl::SyntaxErrorKind;

/// Extracts the first outermost parenthesised group from a model response.
/// `;` starts a comment up to the end of the line, as in PDDL.
pub fn prune(raw: &str) -> Result<&str, SyntaxErrorKind> {
    let mut start = None;
    let mut depth = 0usize;
    let mut in_comment = false;
    for (i, ch) in raw.char_indices() {
        if in_comment {
            in_comment = ch != '\n';
            continue;
        }
        match ch {
            ';' => in_comment = true,
            '(' => {
                if start.is_none() {
                    start = Some(i);
                }
                depth += 1;
            }
            ')' if start.is_some() => {
                depth -= 1;
                if depth == 0 {
                    return Ok(&raw[start.unwrap_or(0)..=i]);
                }
            }
            _ => {}
        }
    }
    match start {
        None => Err(SyntaxErrorKind::NoPDDL),
        Some(_) => Err(SyntaxErrorKind::PError),
    }
}
