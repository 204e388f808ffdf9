//! Exact operator algebra.
//!
//! [`StructuredOperator`] evaluates
//! `T_i(w) = min_a max_b { γ_i^{ab} · P_i^{ab}·(L w) + G_i^{ab}(w) }`
//! where `L` is a shared sparse linear map and each `G_i^{ab}` is affine with
//! at most two nonzero coefficients. The plain Shapley operator, the
//! hitting-time operator `T^m` and the h-transformed operator `T^φ` are all
//! instances of this form.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{check_row, GameSpec, PolicyPair, SparseRow};
use crate::sampling::AliasTable;
use crate::{Error, Result};

/// Shared linear part `L`.
#[derive(Debug, Clone, PartialEq)]
pub enum Lift {
    Identity,
    /// `(L w)_i = scale_i · (w_i - w_pivot)`.
    Centered { scale: Vec<f64>, pivot: usize },
    /// General sparse rows.
    Sparse(Vec<Vec<(usize, f64)>>),
}

impl Lift {
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        match self {
            Lift::Identity => w.to_vec(),
            Lift::Centered { scale, pivot } => {
                let base = w[*pivot];
                scale.iter().zip(w).map(|(s, x)| s * (x - base)).collect()
            }
            Lift::Sparse(rows) => rows
                .iter()
                .map(|row| row.iter().map(|&(j, a)| a * w[j]).sum())
                .collect(),
        }
    }

    /// Exact `‖L‖_∞` (max absolute row sum).
    pub fn operator_norm(&self) -> f64 {
        match self {
            Lift::Identity => 1.0,
            Lift::Centered { scale, pivot } => scale
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != *pivot)
                .fold(0.0f64, |acc, (_, s)| acc.max(2.0 * s.abs())),
            Lift::Sparse(rows) => rows
                .iter()
                .map(|row| row.iter().map(|(_, a)| a.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Lift::Identity => None,
            Lift::Centered { scale, .. } => Some(scale.len()),
            Lift::Sparse(rows) => Some(rows.len()),
        }
    }
}

/// `G(w) = constant + Σ coef · w_j` with at most two terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    constant: f64,
    terms: Vec<(usize, f64)>,
}

impl Affine {
    pub const MAX_TERMS: usize = 2;

    pub fn constant(value: f64) -> Self {
        Self { constant: value, terms: Vec::new() }
    }

    pub fn new(constant: f64, terms: Vec<(usize, f64)>) -> Result<Self> {
        if terms.len() > Self::MAX_TERMS {
            return Err(Error::InvalidParameter(format!(
                "affine part has {} terms, at most {} allowed",
                terms.len(),
                Self::MAX_TERMS
            )));
        }
        Ok(Self { constant, terms })
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        let mut acc = self.constant;
        for &(j, a) in &self.terms {
            acc += a * w[j];
        }
        acc
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }
}

/// One `(i, a, b)` term of a structured operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OpEntry {
    pub discount: f64,
    pub row: SparseRow,
    pub affine: Affine,
}

impl OpEntry {
    pub fn new(discount: f64, row: SparseRow, affine: Affine) -> Self {
        Self { discount, row, affine }
    }
}

/// Contraction data: factor `λ` in a weighted sup-norm `‖·‖_ψ`, with
/// `d1 >= ‖ψ^{-1}‖_∞` and `d2 >= ‖ψ‖_∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contraction {
    pub factor: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Contraction {
    /// Contraction in the plain sup-norm.
    pub fn sup_norm(factor: f64) -> Self {
        Self { factor, d1: 1.0, d2: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredOperator {
    n: usize,
    state_start: Vec<usize>,
    group_start: Vec<usize>,
    entries: Vec<OpEntry>,
    tables: Vec<AliasTable>,
    lift: Lift,
    lift_norm: f64,
    max_discount: f64,
    contraction: Contraction,
}

impl StructuredOperator {
    /// `actions[i][a][b]` is the entry for `(i, a, b)`. `lift_norm` must bound
    /// `‖L‖_∞` from above.
    pub fn new(n: usize, actions: Vec<Vec<Vec<OpEntry>>>, lift: Lift, lift_norm: f64) -> Result<Self> {
        if actions.len() != n {
            return Err(Error::InvalidParameter(format!("{} action lists for {n} states", actions.len())));
        }
        if let Some(d) = lift.dim() {
            if d != n {
                return Err(Error::InvalidParameter(format!("L has dimension {d}, operator has {n}")));
            }
        }
        let exact_norm = lift.operator_norm();
        if !(lift_norm >= exact_norm) {
            return Err(Error::InvalidParameter(format!(
                "L_norm = {lift_norm} is below ‖L‖_∞ = {exact_norm}"
            )));
        }
        let mut state_start = Vec::with_capacity(n + 1);
        let mut group_start = Vec::new();
        let mut entries = Vec::new();
        for (i, groups) in actions.into_iter().enumerate() {
            if groups.is_empty() {
                return Err(Error::InvalidParameter(format!("state {}: A_i empty", i + 1)));
            }
            state_start.push(group_start.len());
            for group in groups {
                if group.is_empty() {
                    return Err(Error::InvalidParameter(format!("state {}: B_ia empty", i + 1)));
                }
                group_start.push(entries.len());
                entries.extend(group);
            }
        }
        state_start.push(group_start.len());
        group_start.push(entries.len());

        let mut tables = Vec::with_capacity(entries.len());
        let mut max_discount = 0.0f64;
        for e in &entries {
            if let Some(kind) = check_row(&e.row, n).into_iter().next() {
                return Err(Error::InvalidParameter(format!("transition row: {kind:?}")));
            }
            if e.affine.terms().iter().any(|&(j, _)| j >= n) {
                return Err(Error::InvalidParameter(String::from("affine term index out of range")));
            }
            if !(e.discount >= 0.0 && e.discount.is_finite()) {
                return Err(Error::InvalidParameter(format!("discount {} is not >= 0", e.discount)));
            }
            max_discount = max_discount.max(e.discount);
            tables.push(AliasTable::build(&e.row)?);
        }
        Ok(Self {
            n,
            state_start,
            group_start,
            entries,
            tables,
            lift,
            lift_norm,
            max_discount,
            contraction: Contraction::sup_norm(max_discount),
        })
    }

    /// Shapley operator of a game: `L = Id`, `G = r`. The contraction factor
    /// defaults to `Γ` in the sup-norm.
    pub fn shapley(spec: &GameSpec) -> Result<Self> {
        let actions = spec
            .states
            .iter()
            .map(|s| {
                s.min_actions
                    .iter()
                    .map(|ma| {
                        ma.max_actions
                            .iter()
                            .map(|e| OpEntry::new(e.discount, e.row.clone(), Affine::constant(e.reward)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self::new(spec.n, actions, Lift::Identity, 1.0)
    }

    pub fn with_contraction(mut self, contraction: Contraction) -> Self {
        self.contraction = contraction;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[OpEntry] {
        &self.entries
    }

    pub fn table(&self, entry: usize) -> &AliasTable {
        &self.tables[entry]
    }

    pub fn lift(&self) -> &Lift {
        &self.lift
    }

    pub fn lift_norm(&self) -> f64 {
        self.lift_norm
    }

    /// `Γ = max γ`.
    pub fn max_discount(&self) -> f64 {
        self.max_discount
    }

    pub fn contraction(&self) -> Contraction {
        self.contraction
    }

    /// Value of every entry given `L w` and `w`.
    pub fn entry_values(&self, lw: &[f64], w: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.discount * e.row.dot(lw) + e.affine.eval(w))
            .collect()
    }

    /// Min-max reduction of per-entry values; ties go to the smallest index.
    pub fn minimax(&self, values: &[f64]) -> (Vec<f64>, PolicyPair) {
        debug_assert_eq!(values.len(), self.entries.len());
        let mut out = Vec::with_capacity(self.n);
        let mut sigma = Vec::with_capacity(self.n);
        let mut tau = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let groups = self.state_start[i]..self.state_start[i + 1];
            let mut best = f64::INFINITY;
            let mut best_a = 0;
            let mut taus = Vec::with_capacity(groups.len());
            for (a, g) in groups.enumerate() {
                let span = self.group_start[g]..self.group_start[g + 1];
                let mut top = f64::NEG_INFINITY;
                let mut top_b = 0;
                for (b, k) in span.enumerate() {
                    if values[k] > top {
                        top = values[k];
                        top_b = b;
                    }
                }
                taus.push(top_b);
                if top < best {
                    best = top;
                    best_a = a;
                }
            }
            out.push(best);
            sigma.push(best_a);
            tau.push(taus);
        }
        (out, PolicyPair { sigma, tau })
    }

    /// `T(w)` with the optimal policies.
    pub fn apply_exact(&self, w: &[f64]) -> (Vec<f64>, PolicyPair) {
        assert_eq!(w.len(), self.n);
        let lw = self.lift.apply(w);
        let values = self.entry_values(&lw, w);
        self.minimax(&values)
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        self.apply_exact(w).0
    }
}

/// `T^max_i(y) = max_{a,b} γ_i^{ab} P_i^{ab} y`, an upper bound on the
/// recession function of the Shapley operator.
pub fn apply_tmax(spec: &GameSpec, y: &[f64]) -> Vec<f64> {
    spec.states
        .iter()
        .map(|s| {
            s.min_actions
                .iter()
                .flat_map(|ma| ma.max_actions.iter())
                .map(|e| e.discount * e.row.dot(y))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// `max_{a,b} P_(c)i^{ab} x` for every state, discounts ignored.
pub fn deflated_max_image(spec: &GameSpec, c: usize, x: &[f64]) -> Vec<f64> {
    spec.states
        .iter()
        .map(|s| {
            s.min_actions
                .iter()
                .flat_map(|ma| ma.max_actions.iter())
                .map(|e| deflated_dot(&e.row, c, x))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn deflated_dot(row: &SparseRow, c: usize, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &(j, p) in row.entries() {
        if j != c {
            acc += p * x[j];
        }
    }
    acc
}

/// Row with column `c` removed.
pub fn deflate_column(row: &SparseRow, c: usize) -> SparseRow {
    SparseRow::from_sorted(row.entries().iter().copied().filter(|&(j, _)| j != c).collect())
}

/// How strictly `φ_i >= 1 + max P_(c)i φ` is enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiCheck {
    /// No slack: for randomized `φ`.
    Exact,
    /// Allow a deficit up to the given amount, for `φ` from an oracle.
    Slack(f64),
    /// Trust the caller.
    Skip,
}

impl PhiCheck {
    fn allowed_deficit(self) -> Option<f64> {
        match self {
            PhiCheck::Exact => Some(0.0),
            PhiCheck::Slack(t) => Some(t),
            PhiCheck::Skip => None,
        }
    }
}

/// Row `i` of `P_(c,φ)`: column `c` becomes `(φ_i - 1 - P_(c)i φ) / φ_c`.
pub fn htransform_row(row: &SparseRow, i: usize, c: usize, phi: &[f64], check: PhiCheck) -> Result<SparseRow> {
    let required = 1.0 + deflated_dot(row, c, phi);
    let mut gap = phi[i] - required;
    if let Some(deficit) = check.allowed_deficit() {
        if gap < -deficit {
            return Err(Error::PhiNotDominating { state: i, phi: phi[i], required });
        }
    }
    gap = gap.max(0.0);
    let mut entries: Vec<(usize, f64)> = row.entries().iter().copied().filter(|&(j, _)| j != c).collect();
    let at_c = gap / phi[c];
    if at_c > 0.0 {
        let pos = entries.partition_point(|&(j, _)| j < c);
        entries.insert(pos, (c, at_c));
    }
    Ok(SparseRow::from_sorted(entries))
}

/// Checks `φ_i >= 1 + max_{a,b} P_(c)i^{ab} φ` for every state.
pub fn check_phi(spec: &GameSpec, c: usize, phi: &[f64], check: PhiCheck) -> Result<()> {
    let Some(deficit) = check.allowed_deficit() else {
        return Ok(());
    };
    if phi.len() != spec.n {
        return Err(Error::InvalidParameter(format!("phi has length {}, game has {} states", phi.len(), spec.n)));
    }
    for (i, m) in deflated_max_image(spec, c, phi).into_iter().enumerate() {
        let required = 1.0 + m;
        if phi[i] < required - deficit {
            return Err(Error::PhiNotDominating { state: i, phi: phi[i], required });
        }
    }
    Ok(())
}

/// Renewal state, scaling vector, its contraction factor `λ_φ = 1 - 1/‖φ‖_∞`
/// and the hitting-time bound it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct HTransform {
    pub pivot: usize,
    pub phi: Vec<f64>,
    pub lambda: f64,
    pub hitting_bound: f64,
}

impl HTransform {
    pub fn new(pivot: usize, phi: Vec<f64>, hitting_bound: f64) -> Result<Self> {
        if pivot >= phi.len() {
            return Err(Error::InvalidParameter(format!("renewal state {} out of range", pivot + 1)));
        }
        if phi.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter(String::from("phi must be positive")));
        }
        let top = sup_norm(&phi);
        Ok(Self { pivot, phi, lambda: 1.0 - 1.0 / top, hitting_bound })
    }
}

/// `T^φ`: per-entry discount `1/φ_i`, `L w = φ ⊙ (w - w_c e)` with
/// `L_norm = 2‖φ‖_∞`, and `G(w) = r/φ_i + (1 - 1/φ_i) w_c`. Requires γ ≡ 1.
pub fn build_tphi(spec: &GameSpec, c: usize, phi: &[f64], check: PhiCheck) -> Result<StructuredOperator> {
    if c >= spec.n {
        return Err(Error::InvalidParameter(format!("renewal state {} out of range", c + 1)));
    }
    if !spec.is_undiscounted() {
        return Err(Error::InvalidGame(String::from("h-transform needs every discount equal to 1")));
    }
    let h = HTransform::new(c, phi.to_vec(), f64::NAN)?;
    check_phi(spec, c, phi, check)?;
    let mut actions = Vec::with_capacity(spec.n);
    for (i, s) in spec.states.iter().enumerate() {
        let gamma = 1.0 / phi[i];
        let carry = 1.0 - gamma;
        let mut groups = Vec::with_capacity(s.min_actions.len());
        for ma in &s.min_actions {
            let mut group = Vec::with_capacity(ma.max_actions.len());
            for e in &ma.max_actions {
                let affine = Affine::new(e.reward / phi[i], vec![(c, carry)])?;
                group.push(OpEntry::new(gamma, e.row.clone(), affine));
            }
            groups.push(group);
        }
        actions.push(groups);
    }
    let lift = Lift::Centered { scale: phi.to_vec(), pivot: c };
    let op = StructuredOperator::new(spec.n, actions, lift, 2.0 * sup_norm(phi))?;
    Ok(op.with_contraction(Contraction::sup_norm(h.lambda)))
}

/// `T^m_i(w) = 1 + max_{a,b} P̃_i^{ab} w` on `S \ {c}`, where `P̃` drops row
/// and column `c`. MIN gets one action per state; all `(a, b)` pairs become
/// MAX choices in lexicographic order.
pub fn build_tm(spec: &GameSpec, c: usize) -> Result<StructuredOperator> {
    if spec.n < 2 {
        return Err(Error::InvalidParameter(String::from("T^m needs at least two states")));
    }
    if c >= spec.n {
        return Err(Error::InvalidParameter(format!("renewal state {} out of range", c + 1)));
    }
    let remap = |j: usize| if j < c { j } else { j - 1 };
    let mut actions = Vec::with_capacity(spec.n - 1);
    for (i, s) in spec.states.iter().enumerate() {
        if i == c {
            continue;
        }
        let choices = s
            .min_actions
            .iter()
            .flat_map(|ma| ma.max_actions.iter())
            .map(|e| {
                let row = SparseRow::from_sorted(
                    e.row.entries().iter().filter(|&&(j, _)| j != c).map(|&(j, p)| (remap(j), p)).collect(),
                );
                OpEntry::new(1.0, row, Affine::constant(1.0))
            })
            .collect();
        actions.push(vec![choices]);
    }
    StructuredOperator::new(spec.n - 1, actions, Lift::Identity, 1.0)
}

/// Reinserts the pivot coordinate of a `T^m` vector:
/// `x_c = 1 + max_{a,b} P_(c)c^{ab} x`.
pub fn extend_residual(spec: &GameSpec, c: usize, residual: &[f64]) -> Vec<f64> {
    let mut full = Vec::with_capacity(spec.n);
    full.extend_from_slice(&residual[..c]);
    full.push(0.0);
    full.extend_from_slice(&residual[c..]);
    let at_c = spec.states[c]
        .min_actions
        .iter()
        .flat_map(|ma| ma.max_actions.iter())
        .map(|e| deflated_dot(&e.row, c, &full))
        .fold(f64::NEG_INFINITY, f64::max);
    full[c] = 1.0 + at_c;
    full
}

/// `w = η + φ^{-1} ⊙ v` for `v` with `v_c = 0`.
pub fn lphi_forward(eta: f64, v: &[f64], phi: &[f64], c: usize) -> Result<Vec<f64>> {
    if v[c] != 0.0 {
        return Err(Error::InvalidParameter(format!("v_c = {} must be 0", v[c])));
    }
    Ok(v.iter().zip(phi).map(|(x, p)| eta + x / p).collect())
}

/// Inverse of [`lphi_forward`]: `η = w_c`, `v = φ ⊙ (w - w_c e)`.
pub fn lphi_inverse(w: &[f64], phi: &[f64], c: usize) -> (f64, Vec<f64>) {
    let eta = w[c];
    let v = w.iter().zip(phi).map(|(x, p)| p * (x - eta)).collect();
    (eta, v)
}

pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
}

/// `‖x‖_u = max_i |x_i| / u_i` for a positive weight vector `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNorm {
    weights: Vec<f64>,
}

impl WeightedNorm {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|&u| !(u > 0.0)) {
            return Err(Error::InvalidParameter(format!("weight u_{} = {} is not positive", i + 1, weights[i])));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.weights).fold(0.0f64, |acc, (v, u)| acc.max(v.abs() / u))
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.weights)
            .fold(0.0f64, |acc, ((a, b), u)| acc.max((a - b).abs() / u))
    }
}

pub fn weighted_norm(u: &[f64], x: &[f64]) -> Result<f64> {
    Ok(WeightedNorm::new(u.to_vec())?.norm(x))
}

pub fn weighted_distance(u: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(WeightedNorm::new(u.to_vec())?.distance(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Entry;

    fn cycle(r1: f64, r2: f64) -> GameSpec {
        GameSpec::markov_chain(vec![SparseRow::point(1), SparseRow::point(0)], &[r1, r2], 1.0)
    }

    fn chain(n: usize) -> GameSpec {
        let rows = (0..n)
            .map(|i| {
                if i + 1 < n {
                    SparseRow::new(vec![(0, 0.5), (i + 1, 0.5)])
                } else {
                    SparseRow::point(0)
                }
            })
            .collect();
        GameSpec::markov_chain(rows, &vec![0.0; n], 1.0)
    }

    #[test]
    fn cycle_apply_from_zero_is_reward() {
        let op = StructuredOperator::shapley(&cycle(3.0, 1.0)).unwrap();
        assert_eq!(op.apply(&[0.0, 0.0]), vec![3.0, 1.0]);
    }

    #[test]
    fn ties_go_to_smallest_index() {
        let spec = GameSpec::with_shared_max_actions(&[3], &[2], |_, a, _| {
            (if a == 0 { 5.0 } else { 2.0 }, 1.0, SparseRow::point(0))
        });
        let (tw, pp) = StructuredOperator::shapley(&spec).unwrap().apply_exact(&[0.0]);
        assert_eq!(tw, vec![2.0]);
        assert_eq!(pp.sigma, vec![1]);
        assert_eq!(pp.tau, vec![vec![0, 0, 0]]);
    }

    #[test]
    fn zero_discount_is_minimax_of_rewards() {
        let rewards = [[1.0, 4.0], [3.0, 2.0]];
        let spec = GameSpec::with_shared_max_actions(&[2], &[2], |_, a, b| (rewards[a][b], 0.0, SparseRow::point(0)));
        let (tw, pp) = StructuredOperator::shapley(&spec).unwrap().apply_exact(&[100.0]);
        assert_eq!(tw, vec![3.0]);
        assert_eq!(pp.sigma, vec![1]);
        assert_eq!(pp.tau, vec![vec![1, 0]]);
    }

    #[test]
    fn lift_norm_is_checked() {
        let lift = Lift::Sparse(vec![vec![(0, 1.0), (1, -2.0)], vec![(1, 1.0)]]);
        let actions = vec![
            vec![vec![OpEntry::new(1.0, SparseRow::point(0), Affine::constant(0.0))]],
            vec![vec![OpEntry::new(1.0, SparseRow::point(1), Affine::constant(0.0))]],
        ];
        assert!(StructuredOperator::new(2, actions.clone(), lift.clone(), 2.5).is_err());
        let op = StructuredOperator::new(2, actions, lift, 3.0).unwrap();
        assert_eq!(op.apply(&[1.0, 1.0]), vec![-1.0, 1.0]);
    }

    #[test]
    fn affine_rejects_three_terms() {
        assert!(Affine::new(0.0, vec![(0, 1.0), (1, 1.0), (2, 1.0)]).is_err());
    }

    #[test]
    fn tmax_examples() {
        let spec = cycle(0.0, 0.0);
        assert_eq!(apply_tmax(&spec, &[1.0, 2.0]), vec![2.0, 1.0]);
        assert_eq!(apply_tmax(&spec, &[0.0, 0.0]), vec![0.0, 0.0]);
        let c = chain(3);
        assert_eq!(apply_tmax(&c, &[2.0, 4.0, 6.0]), vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn deflate_examples() {
        let row = SparseRow::new(vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(deflate_column(&row, 0), SparseRow::new(vec![(1, 0.5)]));
        assert!(deflate_column(&SparseRow::point(0), 0).is_empty());
        assert_eq!(deflate_column(&row, 4), row);
    }

    #[test]
    fn htransform_cycle_rows() {
        let phi = [2.0, 1.0];
        let r0 = htransform_row(&SparseRow::point(1), 0, 0, &phi, PhiCheck::Exact).unwrap();
        let r1 = htransform_row(&SparseRow::point(0), 1, 0, &phi, PhiCheck::Exact).unwrap();
        assert_eq!(r1.prob(0), 0.0);
        assert_eq!(r0.dot(&phi), phi[0] - 1.0);
        assert_eq!(r1.dot(&phi), phi[1] - 1.0);
    }

    #[test]
    fn htransform_rejects_non_dominating() {
        let err = htransform_row(&SparseRow::point(1), 0, 0, &[1.5, 1.0], PhiCheck::Exact);
        assert!(matches!(err, Err(Error::PhiNotDominating { state: 0, .. })));
        assert!(htransform_row(&SparseRow::point(1), 0, 0, &[2.0 - 1e-12, 1.0], PhiCheck::Slack(1e-10)).is_ok());
    }

    #[test]
    fn tight_phi_gives_zero_column() {
        // chain n = 3, c = 0: φ★ = (1.75, 1.5, 1)
        let spec = chain(3);
        let phi = [1.75, 1.5, 1.0];
        for (i, s) in spec.states.iter().enumerate() {
            let row = htransform_row(&s.min_actions[0].max_actions[0].row, i, 0, &phi, PhiCheck::Exact).unwrap();
            assert_eq!(row.prob(0), 0.0);
        }
    }

    #[test]
    fn tphi_on_cycle() {
        let (r1, r2) = (3.0, 1.0);
        let op = build_tphi(&cycle(r1, r2), 0, &[2.0, 1.0], PhiCheck::Exact).unwrap();
        for w in [[0.0, 0.0], [1.0, -2.0], [5.5, 0.25]] {
            assert_eq!(op.apply(&w), vec![r1 / 2.0 + w[1] / 2.0, r2]);
        }
        let fixed = [(r1 + r2) / 2.0, r2];
        assert_eq!(op.apply(&fixed), fixed.to_vec());
        assert_eq!(op.contraction().factor, 0.5);
        assert_eq!(op.lift_norm(), 4.0);
        assert_eq!(op.max_discount(), 1.0);
    }

    #[test]
    fn tphi_on_constant_vector() {
        let spec = chain(4);
        let mut spec = spec;
        for (i, s) in spec.states.iter_mut().enumerate() {
            s.min_actions[0].max_actions[0].reward = i as f64 - 1.5;
        }
        let phi = [1.875, 1.75, 1.5, 1.0];
        let op = build_tphi(&spec, 0, &phi, PhiCheck::Exact).unwrap();
        let alpha = 0.7;
        let got = op.apply(&[alpha; 4]);
        for i in 0..4 {
            let r = spec.states[i].min_actions[0].max_actions[0].reward;
            let want = r / phi[i] + alpha * (1.0 - 1.0 / phi[i]);
            assert!((got[i] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn tphi_rejects_bad_phi() {
        assert!(build_tphi(&cycle(0.0, 0.0), 0, &[1.5, 1.0], PhiCheck::Exact).is_err());
        let mut discounted = cycle(0.0, 0.0);
        discounted.states[0].min_actions[0].max_actions[0].discount = 0.5;
        assert!(build_tphi(&discounted, 0, &[2.0, 1.0], PhiCheck::Exact).is_err());
    }

    #[test]
    fn tm_on_chain() {
        let op = build_tm(&chain(3), 0).unwrap();
        assert_eq!(op.dim(), 2);
        assert_eq!(op.apply(&[0.0, 0.0]), vec![1.0, 1.0]);
        assert_eq!(op.apply(&[4.0, 2.0]), vec![2.0, 1.0]);
        assert_eq!(op.apply(&[1.5, 1.0]), vec![1.5, 1.0]);
        assert_eq!(extend_residual(&chain(3), 0, &[1.5, 1.0]), vec![1.75, 1.5, 1.0]);
    }

    #[test]
    fn tm_on_cycle() {
        let op = build_tm(&cycle(0.0, 0.0), 0).unwrap();
        assert_eq!(op.apply(&[7.0]), vec![1.0]);
        assert_eq!(extend_residual(&cycle(0.0, 0.0), 0, &[1.0]), vec![2.0, 1.0]);
        assert!(build_tm(&GameSpec::markov_chain(vec![SparseRow::point(0)], &[0.0], 1.0), 0).is_err());
    }

    #[test]
    fn tm_flattens_pairs_and_keeps_absorbing_rows() {
        let spec = GameSpec::with_shared_max_actions(&[1, 2, 1], &[1, 2, 1], |i, a, b| {
            let row = match (i, a, b) {
                (0, _, _) => SparseRow::point(0),
                (1, 0, 0) => SparseRow::new(vec![(0, 0.5), (2, 0.5)]),
                (1, _, _) => SparseRow::point(2),
                _ => SparseRow::new(vec![(1, 0.25), (2, 0.75)]),
            };
            (0.0, 1.0, row)
        });
        let op = build_tm(&spec, 0).unwrap();
        assert_eq!(op.entry_count(), 5);
        assert_eq!(op.entries()[0].row, SparseRow::new(vec![(1, 0.5)]));
        assert_eq!(op.entries()[4].row, SparseRow::new(vec![(0, 0.25), (1, 0.75)]));
    }

    #[test]
    fn lphi_examples() {
        let (r1, r2) = (3.0, 1.0);
        let w = [(r1 + r2) / 2.0, r2];
        let (eta, v) = lphi_inverse(&w, &[2.0, 1.0], 0);
        assert_eq!(eta, 2.0);
        assert_eq!(v, vec![0.0, (r2 - r1) / 2.0]);
        assert_eq!(lphi_forward(0.0, &[0.0, 0.0], &[2.0, 1.0], 0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(lphi_forward(eta, &v, &[2.0, 1.0], 0).unwrap(), w.to_vec());
        assert!(lphi_forward(0.0, &[1.0, 0.0], &[2.0, 1.0], 0).is_err());
    }

    #[test]
    fn weighted_norm_examples() {
        let x = [3.0, -2.0];
        assert_eq!(weighted_norm(&[1.0, 1.0], &x).unwrap(), 3.0);
        assert_eq!(weighted_norm(&[3.0, 2.0], &[3.0, 2.0]).unwrap(), 1.0);
        assert_eq!(weighted_norm(&[2.0, 1.0], &x).unwrap(), 2.0);
        assert_eq!(weighted_distance(&[2.0, 1.0], &x, &[1.0, 0.0]).unwrap(), 2.0);
        assert!(weighted_norm(&[0.0, 1.0], &x).is_err());
    }

    #[test]
    fn htransform_lambda() {
        let h = HTransform::new(0, vec![4.0, 2.0], 2.0).unwrap();
        assert_eq!(h.lambda, 0.75);
        assert!(HTransform::new(0, vec![0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn shapley_keeps_labels_irrelevant() {
        let mut spec = cycle(1.0, 2.0);
        spec.states[0].min_actions[0].max_actions.push(Entry::new(9, 5.0, 1.0, SparseRow::point(0)));
        let (tw, pp) = StructuredOperator::shapley(&spec).unwrap().apply_exact(&[0.0, 0.0]);
        assert_eq!(tw, vec![5.0, 2.0]);
        assert_eq!(pp.tau[0], vec![1]);
    }
}
