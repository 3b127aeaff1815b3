use std::collections::{BTreeSet, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::pddl::{ActionSchema, Atom};

/// How variables are matched between the two actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreMode {
    /// Variables compare by name.
    #[default]
    Literal,
    /// Variables are renamed by parameter position before comparing.
    Positional,
}

impl FromStr for AreMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "literal" => Ok(AreMode::Literal),
            "positional" => Ok(AreMode::Positional),
            other => Err(format!("unknown ARE renaming `{other}`")),
        }
    }
}

/// Action reconstruction error: the summed sizes of the symmetric
/// differences of the precondition, add and delete sets.
pub fn are(a: &ActionSchema, b: &ActionSchema) -> usize {
    are_with(a, b, AreMode::Literal)
}

pub fn are_with(a: &ActionSchema, b: &ActionSchema, mode: AreMode) -> usize {
    let (a, b) = match mode {
        AreMode::Literal => (triple(a, None), triple(b, None)),
        AreMode::Positional => (triple(a, Some(positional(a))), triple(b, Some(positional(b)))),
    };
    a.iter().zip(&b).map(|(x, y)| x.symmetric_difference(y).count()).sum()
}

fn positional(a: &ActionSchema) -> HashMap<String, String> {
    a.params.iter().enumerate().map(|(i, p)| (p.name.to_lowercase(), format!("?{i}"))).collect()
}

fn triple(a: &ActionSchema, rename: Option<HashMap<String, String>>) -> [BTreeSet<Atom>; 3] {
    let norm = |set: &BTreeSet<Atom>| -> BTreeSet<Atom> {
        set.iter()
            .map(|atom| {
                let args = atom.args.iter().map(|t| {
                    let t = t.to_lowercase();
                    rename.as_ref().and_then(|r| r.get(&t).cloned()).unwrap_or(t)
                });
                Atom::new(atom.predicate.to_lowercase(), args)
            })
            .collect()
    };
    [norm(&a.pre), norm(&a.add), norm(&a.del)]
}
