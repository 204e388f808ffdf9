//! Game data model.
//!
//! A game has states `0..n` (shown 1-based to users), MIN actions per state,
//! MAX actions per (state, MIN action) and one [`Entry`] per admissible
//! triple `(i, a, b)`. Every entry carries a reward, a nonnegative discount
//! and a sparse sub-Markovian transition row.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Slack allowed on row sums to absorb float parsing.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Sparse probability row, sorted by target state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRow {
    entries: Vec<(usize, f64)>,
}

impl SparseRow {
    /// Builds a row and sorts it by target. Duplicates are kept so that
    /// [`GameSpec::validate`] can report them.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|&(j, _)| j);
        Self { entries }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Row putting all its mass on `target`.
    pub fn point(target: usize) -> Self {
        Self { entries: vec![(target, 1.0)] }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }

    /// Probability of `target` (0 when absent).
    pub fn prob(&self, target: usize) -> f64 {
        self.entries
            .binary_search_by_key(&target, |&(j, _)| j)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    /// `Σ_j p_j x_j`, accumulated in index order.
    pub fn dot(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(j, p) in &self.entries {
            acc += p * x[j];
        }
        acc
    }

    /// Same row with every probability multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|&(j, p)| (j, p * factor)).collect(),
        }
    }

    pub(crate) fn from_sorted(entries: Vec<(usize, f64)>) -> Self {
        Self { entries }
    }
}

/// One admissible triple `(i, a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// External action id of the MAX choice.
    pub label: i64,
    pub reward: f64,
    pub discount: f64,
    pub row: SparseRow,
}

impl Entry {
    pub fn new(label: i64, reward: f64, discount: f64, row: SparseRow) -> Self {
        Self { label, reward, discount, row }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinAction {
    /// External action id.
    pub label: i64,
    pub max_actions: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub min_actions: Vec<MinAction>,
}

/// Finite perfect-information zero-sum stochastic game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub n: usize,
    pub states: Vec<State>,
}

/// `R = max |r|`, `Γ = max γ` and `|E|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConstants {
    pub max_abs_reward: f64,
    pub max_discount: f64,
    pub entry_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    NoStates,
    StateCountMismatch { expected: usize, found: usize },
    EmptyMinActions,
    EmptyMaxActions,
    NonFinite { field: &'static str },
    NegativeDiscount { value: f64 },
    TargetOutOfRange { target: usize },
    DuplicateTarget { target: usize },
    NegativeProbability { target: usize, prob: f64 },
    RowSumExceeded { sum: f64 },
}

/// One failed rule, located at a state and optionally an action pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub state: Option<usize>,
    pub min_action: Option<usize>,
    pub max_action: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.state {
            write!(f, "state {}", i + 1)?;
            if let Some(a) = self.min_action {
                write!(f, ", min action #{a}")?;
            }
            if let Some(b) = self.max_action {
                write!(f, ", max action #{b}")?;
            }
            f.write_str(": ")?;
        }
        match &self.kind {
            ViolationKind::NoStates => f.write_str("n must be positive"),
            ViolationKind::StateCountMismatch { expected, found } => {
                write!(f, "expected {expected} states, found {found}")
            }
            ViolationKind::EmptyMinActions => f.write_str("A_i empty"),
            ViolationKind::EmptyMaxActions => f.write_str("B_ia empty"),
            ViolationKind::NonFinite { field } => write!(f, "{field} is not finite"),
            ViolationKind::NegativeDiscount { value } => write!(f, "discount {value} < 0"),
            ViolationKind::TargetOutOfRange { target } => {
                write!(f, "transition target {} out of range", target + 1)
            }
            ViolationKind::DuplicateTarget { target } => {
                write!(f, "duplicate transition target {}", target + 1)
            }
            ViolationKind::NegativeProbability { target, prob } => {
                write!(f, "negative probability {prob} on target {}", target + 1)
            }
            ViolationKind::RowSumExceeded { sum } => write!(f, "row sum {sum} > 1"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Converts a failing report into [`Error::InvalidGame`].
    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            return Ok(());
        }
        let msg: Vec<String> = self.violations.iter().map(|v| format!("{v}")).collect();
        Err(Error::InvalidGame(msg.join("; ")))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks one transition row against the sub-Markovian rules.
pub(crate) fn check_row(row: &SparseRow, n: usize) -> Vec<ViolationKind> {
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    for &(j, p) in row.entries() {
        if j >= n {
            out.push(ViolationKind::TargetOutOfRange { target: j });
        }
        if prev == Some(j) {
            out.push(ViolationKind::DuplicateTarget { target: j });
        }
        prev = Some(j);
        if !p.is_finite() {
            out.push(ViolationKind::NonFinite { field: "probability" });
        } else if p < 0.0 {
            out.push(ViolationKind::NegativeProbability { target: j, prob: p });
        }
    }
    let sum = row.mass();
    if sum > 1.0 + ROW_SUM_TOLERANCE {
        out.push(ViolationKind::RowSumExceeded { sum });
    }
    out
}

impl GameSpec {
    pub fn new(n: usize, states: Vec<State>) -> Self {
        Self { n, states }
    }

    /// 0-player game `T(x) = r + γ P x`.
    pub fn markov_chain(rows: Vec<SparseRow>, rewards: &[f64], discount: f64) -> Self {
        assert_eq!(rows.len(), rewards.len());
        let states = rows
            .into_iter()
            .zip(rewards)
            .map(|(row, &r)| State {
                min_actions: vec![MinAction {
                    label: 1,
                    max_actions: vec![Entry::new(1, r, discount, row)],
                }],
            })
            .collect::<Vec<_>>();
        Self { n: states.len(), states }
    }

    /// 1-player (maximizer) game: `choices[i]` lists `(reward, row)` for
    /// every MAX action at state `i`; MIN has a single action everywhere.
    pub fn max_player(choices: Vec<Vec<(f64, SparseRow)>>, discount: f64) -> Self {
        let states = choices
            .into_iter()
            .map(|list| State {
                min_actions: vec![MinAction {
                    label: 1,
                    max_actions: list
                        .into_iter()
                        .enumerate()
                        .map(|(b, (r, row))| Entry::new(b as i64 + 1, r, discount, row))
                        .collect(),
                }],
            })
            .collect::<Vec<_>>();
        Self { n: states.len(), states }
    }

    /// Game whose MAX action set `B_i` does not depend on MIN's action:
    /// `min_counts[i] = |A_i|`, `max_counts[i] = |B_i|`, and `entry(i, a, b)`
    /// yields `(reward, discount, row)`.
    pub fn with_shared_max_actions<F>(min_counts: &[usize], max_counts: &[usize], mut entry: F) -> Self
    where
        F: FnMut(usize, usize, usize) -> (f64, f64, SparseRow),
    {
        assert_eq!(min_counts.len(), max_counts.len());
        let states = (0..min_counts.len())
            .map(|i| State {
                min_actions: (0..min_counts[i])
                    .map(|a| MinAction {
                        label: a as i64 + 1,
                        max_actions: (0..max_counts[i])
                            .map(|b| {
                                let (r, g, row) = entry(i, a, b);
                                Entry::new(b as i64 + 1, r, g, row)
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect::<Vec<_>>();
        Self { n: states.len(), states }
    }

    pub fn entry(&self, i: usize, a: usize, b: usize) -> &Entry {
        &self.states[i].min_actions[a].max_actions[b]
    }

    /// Admissible triples in `(i, a, b)` lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, &Entry)> + '_ {
        self.states.iter().enumerate().flat_map(|(i, s)| {
            s.min_actions.iter().enumerate().flat_map(move |(a, ma)| {
                ma.max_actions.iter().enumerate().map(move |(b, e)| (i, a, b, e))
            })
        })
    }

    pub fn entry_count(&self) -> usize {
        self.states
            .iter()
            .flat_map(|s| s.min_actions.iter())
            .map(|a| a.max_actions.len())
            .sum()
    }

    /// True when no player has a choice anywhere.
    pub fn is_zero_player(&self) -> bool {
        self.states
            .iter()
            .all(|s| s.min_actions.len() == 1 && s.min_actions[0].max_actions.len() == 1)
    }

    /// True when every row sums to one within [`ROW_SUM_TOLERANCE`].
    pub fn is_markovian(&self) -> bool {
        self.entries()
            .all(|(_, _, _, e)| (e.row.mass() - 1.0).abs() <= ROW_SUM_TOLERANCE)
    }

    /// True when every discount equals one (the mean-payoff setting).
    pub fn is_undiscounted(&self) -> bool {
        self.entries().all(|(_, _, _, e)| e.discount == 1.0)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let at = |state, min_action, max_action, kind| Violation {
            state,
            min_action,
            max_action,
            kind,
        };
        if self.n == 0 {
            violations.push(at(None, None, None, ViolationKind::NoStates));
        }
        if self.states.len() != self.n {
            violations.push(at(
                None,
                None,
                None,
                ViolationKind::StateCountMismatch { expected: self.n, found: self.states.len() },
            ));
        }
        for (i, state) in self.states.iter().enumerate() {
            if state.min_actions.is_empty() {
                violations.push(at(Some(i), None, None, ViolationKind::EmptyMinActions));
            }
            for (a, ma) in state.min_actions.iter().enumerate() {
                if ma.max_actions.is_empty() {
                    violations.push(at(Some(i), Some(a), None, ViolationKind::EmptyMaxActions));
                }
                for (b, e) in ma.max_actions.iter().enumerate() {
                    let loc = |kind| at(Some(i), Some(a), Some(b), kind);
                    if !e.reward.is_finite() {
                        violations.push(loc(ViolationKind::NonFinite { field: "reward" }));
                    }
                    if !e.discount.is_finite() {
                        violations.push(loc(ViolationKind::NonFinite { field: "discount" }));
                    } else if e.discount < 0.0 {
                        violations.push(loc(ViolationKind::NegativeDiscount { value: e.discount }));
                    }
                    violations.extend(check_row(&e.row, self.n).into_iter().map(loc));
                }
            }
        }
        ValidationReport { violations }
    }

    /// Exact maxima over `E`.
    pub fn constants(&self) -> GameConstants {
        let mut max_abs_reward = 0.0f64;
        let mut max_discount = 0.0f64;
        let mut entry_count = 0;
        for (_, _, _, e) in self.entries() {
            max_abs_reward = max_abs_reward.max(e.reward.abs());
            max_discount = max_discount.max(e.discount);
            entry_count += 1;
        }
        GameConstants { max_abs_reward, max_discount, entry_count }
    }

    /// `(P^{στ}, M^{στ}, r^{στ})` for a pair of pure stationary policies.
    pub fn apply_policy_matrices(&self, pp: &PolicyPair) -> Result<PolicyMatrices> {
        pp.check(self)?;
        let mut transition = Vec::with_capacity(self.n);
        let mut discounted = Vec::with_capacity(self.n);
        let mut reward = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let e = pp.selected(self, i);
            transition.push(e.row.clone());
            discounted.push(e.row.scaled(e.discount));
            reward.push(e.reward);
        }
        Ok(PolicyMatrices { transition, discounted, reward })
    }
}

/// Pure stationary policies: `sigma[i] ∈ A_i`, `tau[i][a] ∈ B_{i,a}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolicyPair {
    pub sigma: Vec<usize>,
    pub tau: Vec<Vec<usize>>,
}

impl PolicyPair {
    /// First action for both players everywhere.
    pub fn first(spec: &GameSpec) -> Self {
        Self {
            sigma: vec![0; spec.n],
            tau: spec.states.iter().map(|s| vec![0; s.min_actions.len()]).collect(),
        }
    }

    pub fn check(&self, spec: &GameSpec) -> Result<()> {
        let bad = |state, reason: String| Err(Error::InadmissiblePolicy { state, reason });
        if self.sigma.len() != spec.n || self.tau.len() != spec.n {
            return bad(0, format!("policy covers {} states, game has {}", self.sigma.len(), spec.n));
        }
        for (i, state) in spec.states.iter().enumerate() {
            if self.sigma[i] >= state.min_actions.len() {
                return bad(i, format!("min action {} out of range", self.sigma[i]));
            }
            if self.tau[i].len() != state.min_actions.len() {
                return bad(i, String::from("max policy does not cover every min action"));
            }
            for (a, ma) in state.min_actions.iter().enumerate() {
                if self.tau[i][a] >= ma.max_actions.len() {
                    return bad(i, format!("max action {} out of range for min action {a}", self.tau[i][a]));
                }
            }
        }
        Ok(())
    }

    /// Entry played at state `i`.
    pub fn selected<'a>(&self, spec: &'a GameSpec, i: usize) -> &'a Entry {
        let a = self.sigma[i];
        spec.entry(i, a, self.tau[i][a])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMatrices {
    pub transition: Vec<SparseRow>,
    pub discounted: Vec<SparseRow>,
    pub reward: Vec<f64>,
}
