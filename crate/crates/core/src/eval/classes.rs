use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::pddl::SyntaxErrorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SemanticKind {
    PAError,
    NError,
    TError,
    BPError,
}

impl SemanticKind {
    pub fn name(self) -> &'static str {
        match self {
            SemanticKind::PAError => "PAError",
            SemanticKind::NError => "NError",
            SemanticKind::TError => "TError",
            SemanticKind::BPError => "BPError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiffKind {
    NoPlan,
    NPApp,
    OPApp,
}

impl DiffKind {
    pub fn name(self) -> &'static str {
        match self {
            DiffKind::NoPlan => "NoPlan",
            DiffKind::NPApp => "NPApp",
            DiffKind::OPApp => "OPApp",
        }
    }
}

/// The verdict for one response. Variants are listed in the order in which
/// they are decided: syntax errors hide semantic errors, which hide the
/// plan-based comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResultClass {
    Syntax(SyntaxErrorKind),
    Semantic(SemanticKind),
    Diff(DiffKind),
    Equiv,
}

impl ResultClass {
    /// Every (class, subclass) in table row order.
    pub const ALL: [ResultClass; 11] = [
        ResultClass::Syntax(SyntaxErrorKind::NoPDDL),
        ResultClass::Syntax(SyntaxErrorKind::PError),
        ResultClass::Syntax(SyntaxErrorKind::UToken),
        ResultClass::Semantic(SemanticKind::PAError),
        ResultClass::Semantic(SemanticKind::NError),
        ResultClass::Semantic(SemanticKind::TError),
        ResultClass::Semantic(SemanticKind::BPError),
        ResultClass::Diff(DiffKind::NoPlan),
        ResultClass::Diff(DiffKind::NPApp),
        ResultClass::Diff(DiffKind::OPApp),
        ResultClass::Equiv,
    ];

    pub const CLASS_NAMES: [&'static str; 4] = ["Syntax", "Semantic", "Diff", "Equiv"];

    pub fn class_name(self) -> &'static str {
        match self {
            ResultClass::Syntax(_) => "Syntax",
            ResultClass::Semantic(_) => "Semantic",
            ResultClass::Diff(_) => "Diff",
            ResultClass::Equiv => "Equiv",
        }
    }

    pub fn subclass_name(self) -> Option<&'static str> {
        match self {
            ResultClass::Syntax(k) => Some(k.name()),
            ResultClass::Semantic(k) => Some(k.name()),
            ResultClass::Diff(k) => Some(k.name()),
            ResultClass::Equiv => None,
        }
    }

    /// Inverse of `class_name` and `subclass_name`.
    pub fn from_names(class: &str, subclass: Option<&str>) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.class_name() == class && c.subclass_name() == subclass)
    }
}

impl fmt::Display for ResultClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.subclass_name() {
            Some(s) => write!(f, "{}/{s}", self.class_name()),
            None => f.write_str(self.class_name()),
        }
    }
}

impl FromStr for ResultClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (class, sub) = match s.split_once('/') {
            Some((c, s)) => (c, Some(s)),
            None => (s, None),
        };
        Self::from_names(class, sub).ok_or_else(|| format!("unknown result class `{s}`"))
    }
}

impl Serialize for ResultClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ResultClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
