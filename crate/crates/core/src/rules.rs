//! Pattern-based translator driven by a shipped rules file.
//!
//! Each rule names a function, a set of case-insensitive trigger phrases,
//! slot extractors (regexes with one capture group) and a mapping from slots
//! to positional arguments. Rules are tried by descending priority; the
//! first rule whose triggers fire and whose required slots are all filled
//! produces the call.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::Deserialize;
use thiserror::Error;

use crate::command::{Arg, GisCall, GisFunction, NumberLiteral};

/// The default rules file, byte-identical to `rules/geocmd_rules.json`.
pub const BUILTIN_RULES: &str = include_str!("../rules/geocmd_rules.json");

pub const RULES_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RulesError {
    #[error("invalid rules file: {0}")]
    Format(String),
    #[error("unsupported rules format version {0}")]
    VersionMismatch(u32),
    #[error("rule {rule}: {message}")]
    InvalidRule { rule: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// No rule produced a call for the query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoMatch;

impl fmt::Display for NoMatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("query not understood")
    }
}

impl std::error::Error for NoMatch {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RulesFile {
    format_version: u32,
    rules: Vec<RuleSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleSpec {
    function: String,
    priority: i64,
    triggers: Vec<String>,
    slots: Vec<SlotSpec>,
    arguments: Vec<ArgSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlotSpec {
    name: String,
    patterns: Vec<String>,
    #[serde(default)]
    repeat: bool,
    #[serde(default)]
    optional: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum ArgSpec {
    String { string: String },
    Number { number: String, index: usize },
    Pair { pair: String, indices: [usize; 2] },
}

#[derive(Debug, Clone)]
struct Slot {
    name: String,
    patterns: Vec<Regex>,
    repeat: bool,
    optional: bool,
}

#[derive(Debug, Clone)]
enum ArgBinding {
    String { slot: usize },
    Number { slot: usize, index: usize },
    Pair { slot: usize, indices: [usize; 2] },
}

impl ArgBinding {
    fn slot(&self) -> usize {
        match *self {
            ArgBinding::String { slot }
            | ArgBinding::Number { slot, .. }
            | ArgBinding::Pair { slot, .. } => slot,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rule {
    function: GisFunction,
    priority: i64,
    trigger: Regex,
    slots: Vec<Slot>,
    arguments: Vec<ArgBinding>,
}

impl Rule {
    pub fn function(&self) -> GisFunction {
        self.function
    }

    pub fn priority(&self) -> i64 {
        self.priority
    }

    pub fn fires(&self, query: &str) -> bool {
        self.trigger.is_match(query)
    }

    /// Extracts slots and builds the call, or `None` if a required slot is
    /// missing or the values do not type-check.
    pub fn apply(&self, query: &str) -> Option<GisCall> {
        if !self.fires(query) {
            return None;
        }
        let mut values: Vec<Vec<String>> = Vec::with_capacity(self.slots.len());
        for slot in &self.slots {
            let found = extract(slot, query);
            if found.is_empty() && !slot.optional {
                return None;
            }
            values.push(found);
        }
        let number = |slot: usize, index: usize| -> Option<NumberLiteral> {
            NumberLiteral::new(values[slot].get(index)?.as_str()).ok()
        };
        let mut args = Vec::with_capacity(self.arguments.len());
        for binding in &self.arguments {
            let arg = match *binding {
                ArgBinding::String { slot } => match values[slot].first() {
                    Some(v) => Arg::Str(v.clone()),
                    None => Arg::Null,
                },
                ArgBinding::Number { slot, index } => Arg::Num(number(slot, index)?),
                ArgBinding::Pair { slot, indices } => {
                    Arg::Pair(number(slot, indices[0])?, number(slot, indices[1])?)
                }
            };
            args.push(arg);
        }
        GisCall::from_args(self.function, args).ok()
    }
}

fn extract(slot: &Slot, query: &str) -> Vec<String> {
    for pattern in &slot.patterns {
        let found: Vec<String> = if slot.repeat {
            pattern
                .captures_iter(query)
                .filter_map(|c| c.get(1).map(|m| m.as_str().to_string()))
                .collect()
        } else {
            pattern
                .captures(query)
                .and_then(|c| c.get(1))
                .map(|m| m.as_str().to_string())
                .into_iter()
                .collect()
        };
        if !found.is_empty() {
            return found;
        }
    }
    Vec::new()
}

fn case_insensitive(pattern: &str) -> Result<Regex, regex::Error> {
    RegexBuilder::new(pattern).case_insensitive(true).build()
}

/// An ordered, compiled rule list.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn builtin() -> RuleSet {
        RuleSet::from_json(BUILTIN_RULES).expect("built-in rules compile")
    }

    pub fn load(path: &Path) -> Result<RuleSet, RulesError> {
        RuleSet::from_json(&fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<RuleSet, RulesError> {
        let file: RulesFile =
            serde_json::from_str(text).map_err(|e| RulesError::Format(e.to_string()))?;
        if file.format_version != RULES_FORMAT_VERSION {
            return Err(RulesError::VersionMismatch(file.format_version));
        }
        let mut rules = file
            .rules
            .into_iter()
            .enumerate()
            .map(|(i, spec)| {
                compile(spec).map_err(|message| RulesError::InvalidRule { rule: i, message })
            })
            .collect::<Result<Vec<_>, _>>()?;
        // Stable: equal priorities keep file order.
        rules.sort_by_key(|r| std::cmp::Reverse(r.priority));
        Ok(RuleSet { rules })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// A copy with the rules at positions `i` and `j` exchanged.
    pub fn swapped(&self, i: usize, j: usize) -> RuleSet {
        let mut rules = self.rules.clone();
        rules.swap(i, j);
        RuleSet { rules }
    }

    /// Translates with the first applicable rule.
    pub fn translate(&self, query: &str) -> Result<GisCall, NoMatch> {
        self.rules
            .iter()
            .find_map(|r| r.apply(query))
            .ok_or(NoMatch)
    }

    /// Positions of every rule that would produce a call for `query`.
    pub fn applicable(&self, query: &str) -> Vec<usize> {
        self.rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.apply(query).is_some())
            .map(|(i, _)| i)
            .collect()
    }
}

fn compile(spec: RuleSpec) -> Result<Rule, String> {
    let function: GisFunction = spec.function.parse().map_err(|e| format!("{e}"))?;
    if spec.triggers.is_empty() {
        return Err("no trigger terms".into());
    }
    let alternatives: Vec<String> = spec.triggers.iter().map(|t| regex::escape(t)).collect();
    let trigger = case_insensitive(&format!(r"\b(?:{})\b", alternatives.join("|")))
        .map_err(|e| e.to_string())?;

    let mut slots = Vec::with_capacity(spec.slots.len());
    let mut by_name = HashMap::new();
    for s in spec.slots {
        if s.patterns.is_empty() {
            return Err(format!("slot `{}` has no patterns", s.name));
        }
        let patterns = s
            .patterns
            .iter()
            .map(|p| {
                let re = case_insensitive(p).map_err(|e| format!("slot `{}`: {e}", s.name))?;
                if re.captures_len() < 2 {
                    return Err(format!(
                        "slot `{}`: pattern `{p}` has no capture group",
                        s.name
                    ));
                }
                Ok(re)
            })
            .collect::<Result<Vec<_>, String>>()?;
        if by_name.insert(s.name.clone(), slots.len()).is_some() {
            return Err(format!("duplicate slot `{}`", s.name));
        }
        slots.push(Slot {
            name: s.name,
            patterns,
            repeat: s.repeat,
            optional: s.optional,
        });
    }
    let slot_index = |name: &str| {
        by_name
            .get(name)
            .copied()
            .ok_or_else(|| format!("argument refers to unknown slot `{name}`"))
    };
    let arguments = spec
        .arguments
        .iter()
        .map(|a| {
            Ok(match a {
                ArgSpec::String { string } => ArgBinding::String {
                    slot: slot_index(string)?,
                },
                ArgSpec::Number { number, index } => ArgBinding::Number {
                    slot: slot_index(number)?,
                    index: *index,
                },
                ArgSpec::Pair { pair, indices } => ArgBinding::Pair {
                    slot: slot_index(pair)?,
                    indices: *indices,
                },
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    if arguments.len() != function.arity() {
        return Err(format!(
            "{function} takes {} arguments, rule maps {}",
            function.arity(),
            arguments.len()
        ));
    }
    for (idx, slot) in slots.iter().enumerate() {
        if !arguments.iter().any(|a| a.slot() == idx) {
            return Err(format!("slot `{}` is never used", slot.name));
        }
    }
    Ok(Rule {
        function,
        priority: spec.priority,
        trigger,
        slots,
        arguments,
    })
}

/// Translates with the built-in rules.
pub fn translate_rules(query: &str) -> Result<GisCall, NoMatch> {
    static RULES: std::sync::OnceLock<RuleSet> = std::sync::OnceLock::new();
    RULES.get_or_init(RuleSet::builtin).translate(query)
}
