//! Minimal s-expression reader used by the PDDL parser.
//!
//! Symbols keep their original spelling; callers lower-case them when they
//! build model values. `;` starts a comment that runs to the end of the line.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::error::ParseError;

/// 1-based line/column plus byte offset into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Position {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Symbol { text: String, pos: Position },
    List { items: Vec<SExpr>, open: Position, close: Position },
}

impl SExpr {
    pub fn pos(&self) -> Position {
        match self {
            SExpr::Symbol { pos, .. } => *pos,
            SExpr::List { open, .. } => *open,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            SExpr::Symbol { text, .. } => Some(text),
            SExpr::List { .. } => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List { items, .. } => Some(items),
            SExpr::Symbol { .. } => None,
        }
    }

    /// Short rendering used in error messages.
    pub fn token(&self) -> String {
        match self {
            SExpr::Symbol { text, .. } => text.clone(),
            SExpr::List { items, .. } => match items.first().and_then(SExpr::as_symbol) {
                Some(head) => format!("({head} ...)"),
                None if items.is_empty() => "()".to_string(),
                None => "(...)".to_string(),
            },
        }
    }
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { chars: text.char_indices().peekable(), line: 1, column: 1 }
    }

    fn peek(&mut self) -> Option<(Position, char)> {
        let (line, column) = (self.line, self.column);
        self.chars.peek().map(|&(offset, c)| (Position { line, column, offset }, c))
    }

    fn bump(&mut self) {
        if let Some((_, c)) = self.chars.next() {
            if c == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
    }
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || c == '(' || c == ')' || c == ';'
}

/// Reads every top-level form in `text`.
///
/// Fails with [`ParseError::Paren`] on an unmatched `(` or `)`. An input with
/// no forms at all yields an empty vector; callers decide whether that is an
/// error.
pub fn read_all(text: &str) -> Result<Vec<SExpr>, ParseError> {
    let mut cursor = Cursor::new(text);
    // Stack of open lists: (open position, items so far).
    let mut stack: Vec<(Position, Vec<SExpr>)> = Vec::new();
    let mut top = Vec::new();

    while let Some((pos, c)) = cursor.peek() {
        match c {
            _ if c.is_whitespace() => cursor.bump(),
            ';' => {
                while let Some((_, c)) = cursor.peek() {
                    if c == '\n' {
                        break;
                    }
                    cursor.bump();
                }
            }
            '(' => {
                cursor.bump();
                stack.push((pos, Vec::new()));
            }
            ')' => {
                cursor.bump();
                let Some((open, items)) = stack.pop() else {
                    return Err(ParseError::Paren {
                        pos,
                        detail: "closing parenthesis without a matching opening one".into(),
                    });
                };
                let list = SExpr::List { items, open, close: pos };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(list),
                    None => top.push(list),
                }
            }
            _ => {
                let start = pos.offset;
                let mut end = start;
                while let Some((p, c)) = cursor.peek() {
                    if is_delimiter(c) {
                        break;
                    }
                    end = p.offset + c.len_utf8();
                    cursor.bump();
                }
                let sym = SExpr::Symbol { text: text[start..end].to_string(), pos };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(sym),
                    None => top.push(sym),
                }
            }
        }
    }

    if let Some((open, _)) = stack.pop() {
        return Err(ParseError::Paren { pos: open, detail: "opening parenthesis is never closed".into() });
    }
    Ok(top)
}
