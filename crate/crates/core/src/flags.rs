//! Review flags raised by the pipeline stages.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::detect::ComponentType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    TypeCountMismatch,
    TerminalCountMismatch,
    UnboundText,
    PrefixConflict,
    DanglingTerminal,
    MissingValue,
}

impl FlagKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TypeCountMismatch => "type_count_mismatch",
            Self::TerminalCountMismatch => "terminal_count_mismatch",
            Self::UnboundText => "unbound_text",
            Self::PrefixConflict => "prefix_conflict",
            Self::DanglingTerminal => "dangling_terminal",
            Self::MissingValue => "missing_value",
        }
    }
}

impl fmt::Display for FlagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a flag is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Component(usize),
    Net(usize),
    Text(usize),
    Type(ComponentType),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Component(id) => write!(f, "c{id}"),
            Self::Net(id) => write!(f, "n{id}"),
            Self::Text(id) => write!(f, "t{id}"),
            Self::Type(t) => write!(f, "{}", t.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    /// Stable identifier, `kind/subject[/qualifier]`, unique within a run.
    pub id: String,
    pub kind: FlagKind,
    pub subject: Subject,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<String>,
}

impl Flag {
    pub fn new(kind: FlagKind, subject: Subject, detail: impl Into<String>) -> Self {
        Self { id: format!("{kind}/{subject}"), kind, subject, detail: detail.into(), resolution: None }
    }

    /// Adds a qualifier to the id, e.g. the terminal role of a dangling terminal.
    pub fn qualified(mut self, q: &str) -> Self {
        self.id = format!("{}/{q}", self.id);
        self
    }

    pub fn is_resolved(&self) -> bool {
        self.resolution.is_some()
    }
}

/// Make ids unique by suffixing repeats with `#2`, `#3`, ...
pub fn dedupe_ids(flags: &mut [Flag]) {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for f in flags.iter_mut() {
        let n = seen.entry(f.id.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            f.id = format!("{}#{}", f.id, n);
        }
    }
}

pub fn unresolved(flags: &[Flag]) -> impl Iterator<Item = &Flag> {
    flags.iter().filter(|f| !f.is_resolved())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_stable_and_unique() {
        let mut flags = vec![
            Flag::new(FlagKind::DanglingTerminal, Subject::Component(3), "x").qualified("t1"),
            Flag::new(FlagKind::UnboundText, Subject::Text(2), "y"),
            Flag::new(FlagKind::UnboundText, Subject::Text(2), "z"),
        ];
        dedupe_ids(&mut flags);
        assert_eq!(flags[0].id, "dangling_terminal/c3/t1");
        assert_eq!(flags[1].id, "unbound_text/t2");
        assert_eq!(flags[2].id, "unbound_text/t2#2");
    }

    #[test]
    fn serializes_snake_case() {
        let f = Flag::new(FlagKind::TypeCountMismatch, Subject::Type(ComponentType::Capacitor), "d");
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"type_count_mismatch\""), "{json}");
        assert!(json.contains("\"type\":\"capacitor\""), "{json}");
    }
}
