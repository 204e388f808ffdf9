//! JSON game files.
//!
//! ```json
//! { "n": 2,
//!   "states": [
//!     { "id": 1, "min_actions": [ { "id": 1, "max_actions": [
//!       { "id": 1, "reward": 3, "discount": 1, "transitions": [[2, 1]] } ] } ] },
//!     { "id": 2, "min_actions": [ { "id": 1, "max_actions": [
//!       { "id": 1, "reward": 1, "discount": 1, "transitions": [[1, "1/1"]] } ] } ] } ] }
//! ```
//!
//! States and transition targets are 1-based. Any number may also be given
//! as a string, either decimal or an exact fraction `"p/q"`.

use std::fmt;
use std::fs;
use std::path::Path;

use ergovi_core::model::ValidationReport;
use ergovi_core::{Entry, GameSpec, MinAction, SparseRow, State};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("schema error at {field}: {message}")]
    Schema { field: String, message: String },
    #[error("invalid game:\n{0}")]
    Invalid(ValidationReport),
}

/// A number that may be written as a JSON number or a string.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string such as \"1/2\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                parse_number(v).map(Num).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Parses `"p/q"` (integers, correctly rounded quotient) or a decimal.
pub fn parse_number(text: &str) -> Result<f64, String> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| format!("bad numerator in {text:?}"))?;
        let q: i64 = q.trim().parse().map_err(|_| format!("bad denominator in {text:?}"))?;
        if q == 0 {
            return Err(format!("zero denominator in {text:?}"));
        }
        const EXACT: i64 = 1 << 53;
        if p.abs() > EXACT || q.abs() > EXACT {
            return Err(format!("fraction {text:?} has terms beyond 2^53"));
        }
        return Ok(p as f64 / q as f64);
    }
    text.parse().map_err(|_| format!("not a number: {text:?}"))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    n: usize,
    states: Vec<StateFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    id: usize,
    min_actions: Vec<MinFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MinFile {
    id: i64,
    max_actions: Vec<MaxFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaxFile {
    id: i64,
    reward: Num,
    discount: Num,
    transitions: Vec<(usize, Num)>,
}

fn schema(field: String, message: impl Into<String>) -> FormatError {
    FormatError::Schema { field, message: message.into() }
}

/// Structural parse; the result is not validated.
pub fn parse(text: &str) -> Result<GameSpec, FormatError> {
    let file: GameFile = serde_json::from_str(text)?;
    if file.states.len() != file.n {
        return Err(schema("states".into(), format!("{} states listed, n = {}", file.states.len(), file.n)));
    }
    let mut slots: Vec<Option<State>> = vec![None; file.n];
    for (k, s) in file.states.into_iter().enumerate() {
        let at = format!("states[{k}]");
        if s.id == 0 || s.id > file.n {
            return Err(schema(format!("{at}.id"), format!("state id {} outside 1..={}", s.id, file.n)));
        }
        if slots[s.id - 1].is_some() {
            return Err(schema(format!("{at}.id"), format!("state id {} listed twice", s.id)));
        }
        let mut min_actions = Vec::with_capacity(s.min_actions.len());
        for (a, m) in s.min_actions.into_iter().enumerate() {
            let mut max_actions = Vec::with_capacity(m.max_actions.len());
            for (b, e) in m.max_actions.into_iter().enumerate() {
                let here = format!("{at}.min_actions[{a}].max_actions[{b}].transitions");
                let mut row = Vec::with_capacity(e.transitions.len());
                for (t, (j, p)) in e.transitions.into_iter().enumerate() {
                    if j == 0 || j > file.n {
                        return Err(schema(format!("{here}[{t}]"), format!("target {j} outside 1..={}", file.n)));
                    }
                    row.push((j - 1, p.0));
                }
                max_actions.push(Entry::new(e.id, e.reward.0, e.discount.0, SparseRow::new(row)));
            }
            min_actions.push(MinAction { label: m.id, max_actions });
        }
        slots[s.id - 1] = Some(State { min_actions });
    }
    let states = slots.into_iter().map(|s| s.expect("every id seen once")).collect();
    Ok(GameSpec::new(file.n, states))
}

/// [`parse`] followed by validation.
pub fn parse_validated(text: &str) -> Result<GameSpec, FormatError> {
    let spec = parse(text)?;
    let report = spec.validate();
    if report.is_ok() {
        Ok(spec)
    } else {
        Err(FormatError::Invalid(report))
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<GameSpec, FormatError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })?;
    parse_validated(&text)
}

pub fn to_string(spec: &GameSpec) -> String {
    let file = GameFile {
        n: spec.n,
        states: spec
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| StateFile {
                id: i + 1,
                min_actions: s
                    .min_actions
                    .iter()
                    .map(|m| MinFile {
                        id: m.label,
                        max_actions: m
                            .max_actions
                            .iter()
                            .map(|e| MaxFile {
                                id: e.label,
                                reward: Num(e.reward),
                                discount: Num(e.discount),
                                transitions: e.row.entries().iter().map(|&(j, p)| (j + 1, Num(p))).collect(),
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("game files only hold finite numbers")
}

pub fn save(spec: &GameSpec, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let path = path.as_ref();
    let mut text = to_string(spec);
    text.push('\n');
    fs::write(path, text).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}
