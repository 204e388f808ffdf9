//! Deterministic reference computations.
//!
//! None of these go through the randomized solvers; they exist so the
//! randomized components can be checked against an independent answer.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, DenseMatrix};
use crate::model::{GameSpec, PolicyPair, SparseRow};
use crate::operators::{build_tphi, deflated_max_image, lphi_inverse, sup_distance, sup_norm, PhiCheck, StructuredOperator};
use crate::{Error, Result};

/// Default cap on enumerated policy pairs.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000;

/// Iteration cap for power iteration.
pub const POWER_ITERATION_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub value: T,
    pub method: &'static str,
    pub tolerance: f64,
    pub iterations: usize,
}

/// Value iteration from 0 until the a-posteriori bound
/// `d1 d2 λ/(1-λ) ‖w_k - w_{k-1}‖_∞` drops below `tol`, using the
/// operator's contraction data.
pub fn exact_value_iteration(op: &StructuredOperator, tol: f64, max_iter: usize) -> Result<OracleResult<Vec<f64>>> {
    let c = op.contraction();
    if !(0.0..1.0).contains(&c.factor) {
        return Err(Error::InvalidParameter(format!("contraction factor {} is not in [0, 1)", c.factor)));
    }
    let factor = c.d1 * c.d2 * c.factor / (1.0 - c.factor);
    let mut w = vec![0.0; op.dim()];
    let mut residual = f64::INFINITY;
    for k in 1..=max_iter {
        let next = op.apply(&w);
        let step = sup_distance(&next, &w);
        w = next;
        residual = factor * step;
        if residual < tol || step == 0.0 {
            return Ok(OracleResult { value: w, method: "value-iteration", tolerance: residual, iterations: k });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

/// Flattened `(a, b)` rows per state.
fn choice_rows(spec: &GameSpec) -> Vec<Vec<&SparseRow>> {
    spec.states
        .iter()
        .map(|s| s.min_actions.iter().flat_map(|ma| ma.max_actions.iter()).map(|e| &e.row).collect())
        .collect()
}

fn evaluate_hitting(rows: &[&SparseRow], c: usize) -> Result<Vec<f64>> {
    let n = rows.len();
    let mut a = DenseMatrix::identity(n);
    for (i, row) in rows.iter().enumerate() {
        for &(j, p) in row.entries() {
            if j != c {
                a.add(i, j, -p);
            }
        }
    }
    linalg::solve(&a, &vec![1.0; n])
}

/// Maximal expected hitting times `φ★ = e + max[P_(c) φ★]` of state `c`.
///
/// Zero-player games solve `(I - P_(c)) φ = e` directly; games run policy
/// iteration on the max-max operator, which ends with an exact linear solve.
pub fn hitting_times_exact(spec: &GameSpec, c: usize) -> Result<OracleResult<Vec<f64>>> {
    if c >= spec.n {
        return Err(Error::InvalidParameter(format!("renewal state {} out of range", c + 1)));
    }
    let reject = |reason: &str| Error::RenewalRejected { state: c, reason: String::from(reason) };
    let rows = choice_rows(spec);
    let mut choice = vec![0usize; spec.n];
    let mut iterations = 0;
    let phi = loop {
        iterations += 1;
        let selected: Vec<&SparseRow> = rows.iter().zip(&choice).map(|(r, &k)| r[k]).collect();
        let phi = evaluate_hitting(&selected, c).map_err(|_| reject("singular hitting-time system"))?;
        if phi.iter().any(|&x| !(x >= 1.0 - 1e-9) || !x.is_finite()) {
            return Err(reject("hitting-time system has no positive solution"));
        }
        let scale = sup_norm(&phi).max(1.0);
        let mut changed = false;
        for (i, options) in rows.iter().enumerate() {
            let current = deflated(options[choice[i]], c, &phi);
            let (best, value) = options
                .iter()
                .enumerate()
                .map(|(k, r)| (k, deflated(r, c, &phi)))
                .fold((choice[i], current), |acc, x| if x.1 > acc.1 { x } else { acc });
            if value > current + 1e-12 * scale {
                choice[i] = best;
                changed = true;
            }
        }
        if !changed {
            break phi;
        }
        if iterations > 100 * spec.n + 100 {
            return Err(Error::NoConvergence { iterations, residual: f64::NAN });
        }
    };
    let image = deflated_max_image(spec, c, &phi);
    let residual = phi.iter().zip(&image).fold(0.0f64, |acc, (p, m)| acc.max((p - 1.0 - m).abs()));
    let method = if spec.is_zero_player() { "linear-solve" } else { "policy-iteration" };
    Ok(OracleResult { value: phi, method, tolerance: residual, iterations })
}

fn deflated(row: &SparseRow, c: usize, x: &[f64]) -> f64 {
    row.entries().iter().filter(|&&(j, _)| j != c).map(|&(j, p)| p * x[j]).sum()
}

/// Strongly connected components of the support graph of `m` (Tarjan).
fn strong_components(m: &[Vec<f64>]) -> Vec<Vec<usize>> {
    struct Tarjan<'a> {
        m: &'a [Vec<f64>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    impl Tarjan<'_> {
        fn visit(&mut self, v: usize) {
            self.index[v] = Some(self.next);
            self.low[v] = self.next;
            self.next += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            for w in 0..self.m.len() {
                if self.m[v][w] == 0.0 {
                    continue;
                }
                match self.index[w] {
                    None => {
                        self.visit(w);
                        self.low[v] = self.low[v].min(self.low[w]);
                    }
                    Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                    _ => {}
                }
            }
            if Some(self.low[v]) == self.index[v] {
                let mut comp = Vec::new();
                while let Some(w) = self.stack.pop() {
                    self.on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                self.out.push(comp);
            }
        }
    }
    let n = m.len();
    let mut t = Tarjan {
        m,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    t.out
}

/// Perron root of an irreducible block via Collatz-Wielandt bounds on the
/// primitive shift `B + I`.
fn perron_root(block: &[Vec<f64>], tol: f64) -> Result<(f64, f64, usize)> {
    let k = block.len();
    let mut x = vec![1.0; k];
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    for it in 1..=POWER_ITERATION_CAP {
        let y: Vec<f64> = (0..k)
            .map(|i| x[i] + block[i].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        lo = f64::INFINITY;
        hi = 0.0f64;
        for i in 0..k {
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi - lo <= tol {
            return Ok(((lo + hi) / 2.0 - 1.0, hi - lo, it));
        }
        let top = y.iter().fold(0.0f64, |a, &b| a.max(b));
        x = y.into_iter().map(|v| v / top).collect();
    }
    Err(Error::NoConvergence { iterations: POWER_ITERATION_CAP, residual: hi - lo })
}

/// Spectral radius of a nonnegative square matrix, as the largest Perron
/// root over its irreducible diagonal blocks.
pub fn spectral_radius(m: &[Vec<f64>], tol: f64) -> Result<OracleResult<f64>> {
    let n = m.len();
    for row in m {
        if row.len() != n {
            return Err(Error::InvalidParameter(String::from("matrix is not square")));
        }
        if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(String::from("matrix has a negative or non-finite entry")));
        }
    }
    let mut rho = 0.0f64;
    let mut achieved = 0.0f64;
    let mut iterations = 0;
    for comp in strong_components(m) {
        if comp.len() == 1 {
            let v = comp[0];
            rho = rho.max(m[v][v]);
            continue;
        }
        let block: Vec<Vec<f64>> = comp.iter().map(|&i| comp.iter().map(|&j| m[i][j]).collect()).collect();
        let (r, err, it) = perron_root(&block, tol)?;
        iterations += it;
        if r > rho {
            rho = r;
            achieved = err;
        }
    }
    Ok(OracleResult { value: rho, method: "scc-power-iteration", tolerance: achieved, iterations })
}

/// Mixed-radix enumeration of one choice per state.
fn for_each_choice<F: FnMut(&[usize])>(radices: &[usize], mut f: F) {
    let mut digits = vec![0usize; radices.len()];
    loop {
        f(&digits);
        let mut pos = 0;
        loop {
            if pos == radices.len() {
                return;
            }
            digits[pos] += 1;
            if digits[pos] < radices[pos] {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

fn count_product(radices: impl IntoIterator<Item = usize>) -> u128 {
    radices.into_iter().fold(1u128, |acc, r| acc.saturating_mul(r as u128))
}

/// Locates the flattened choice `k` of state `i` as `(a, b)`.
fn split_choice(spec: &GameSpec, i: usize, mut k: usize) -> (usize, usize) {
    for (a, ma) in spec.states[i].min_actions.iter().enumerate() {
        if k < ma.max_actions.len() {
            return (a, k);
        }
        k -= ma.max_actions.len();
    }
    unreachable!("choice index out of range")
}

/// `max_{σ,τ} ρ(M^{στ})` by enumeration, with a maximizing pair.
pub fn cw_bruteforce(spec: &GameSpec, cap: u128) -> Result<(f64, PolicyPair)> {
    let radices: Vec<usize> = spec
        .states
        .iter()
        .map(|s| s.min_actions.iter().map(|ma| ma.max_actions.len()).sum())
        .collect();
    let count = count_product(radices.iter().copied());
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut failure = None;
    for_each_choice(&radices, |digits| {
        if failure.is_some() {
            return;
        }
        let mut m = vec![vec![0.0; spec.n]; spec.n];
        for (i, &k) in digits.iter().enumerate() {
            let (a, b) = split_choice(spec, i, k);
            let e = spec.entry(i, a, b);
            for &(j, p) in e.row.entries() {
                m[i][j] = e.discount * p;
            }
        }
        match spectral_radius(&m, 1e-12) {
            Ok(r) => {
                if best.as_ref().map_or(true, |(v, _)| r.value > *v) {
                    best = Some((r.value, digits.to_vec()));
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (rho, digits) = best.expect("at least one policy pair");
    let mut pp = PolicyPair::first(spec);
    for (i, &k) in digits.iter().enumerate() {
        let (a, b) = split_choice(spec, i, k);
        pp.sigma[i] = a;
        pp.tau[i][a] = b;
    }
    Ok((rho, pp))
}

/// `(η★, v★)` through the exact h-transform: `φ★` from
/// [`hitting_times_exact`], value iteration on `T^{φ★}` to `1e-11`, then the
/// inverse change of variables.
pub fn mean_payoff_bruteforce(spec: &GameSpec, c: usize) -> Result<(f64, Vec<f64>)> {
    let phi = hitting_times_exact(spec, c)?.value;
    let op = build_tphi(spec, c, &phi, PhiCheck::Slack(1e-10))?;
    let w = exact_value_iteration(&op, 1e-11, 10_000_000)?.value;
    Ok(lphi_inverse(&w, &phi, c))
}

/// Long-run average reward of a unichain policy pair, from its stationary
/// distribution.
pub fn stationary_gain(rows: &[&SparseRow], rewards: &[f64]) -> Result<f64> {
    let n = rows.len();
    let mut a = DenseMatrix::zeros(n);
    // (I - P)^T ν = 0 with the last equation replaced by Σ ν = 1.
    for (i, row) in rows.iter().enumerate() {
        a.add(i, i, 1.0);
        for &(j, p) in row.entries() {
            a.add(i, j, -p);
        }
    }
    let mut at = a.transpose();
    for j in 0..n {
        at.set(n - 1, j, 1.0);
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let nu = linalg::solve(&at, &rhs)?;
    Ok(nu.iter().zip(rewards).map(|(p, r)| p * r).sum())
}

/// `η★ = min_σ max_τ g(σ, τ)` over pure stationary policies, with `g` the
/// stationary gain. Independent of the h-transform path.
pub fn mean_payoff_by_enumeration(spec: &GameSpec, cap: u128) -> Result<f64> {
    let min_radices: Vec<usize> = spec.states.iter().map(|s| s.min_actions.len()).collect();
    let mut total = 0u128;
    for_each_choice(&min_radices, |sigma| {
        total = total.saturating_add(count_product(
            sigma.iter().enumerate().map(|(i, &a)| spec.states[i].min_actions[a].max_actions.len()),
        ));
    });
    if total > cap {
        return Err(Error::EnumerationCap { count: total, cap });
    }
    let mut best_min = f64::INFINITY;
    let mut failure = None;
    for_each_choice(&min_radices, |sigma| {
        let max_radices: Vec<usize> = sigma
            .iter()
            .enumerate()
            .map(|(i, &a)| spec.states[i].min_actions[a].max_actions.len())
            .collect();
        let mut best_max = f64::NEG_INFINITY;
        for_each_choice(&max_radices, |tau| {
            if failure.is_some() {
                return;
            }
            let entries: Vec<_> = (0..spec.n).map(|i| spec.entry(i, sigma[i], tau[i])).collect();
            let rows: Vec<&SparseRow> = entries.iter().map(|e| &e.row).collect();
            let rewards: Vec<f64> = entries.iter().map(|e| e.reward).collect();
            match stationary_gain(&rows, &rewards) {
                Ok(g) => best_max = best_max.max(g),
                Err(e) => failure = Some(e),
            }
        });
        best_min = best_min.min(best_max);
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(best_min),
    }
}

/// `‖η e + v - T(v)‖_∞` for the undiscounted Shapley operator of `spec`.
pub fn ergodic_residual(spec: &GameSpec, eta: f64, v: &[f64]) -> Result<f64> {
    let tv = StructuredOperator::shapley(spec)?.apply(v);
    Ok(tv.iter().zip(v).fold(0.0f64, |acc, (t, x)| acc.max((eta + x - t).abs())))
}

/// `α = 1 - min Σ_k min(p_k, q_k)` over all pairs of transition rows in `E`.
pub fn dobrushin_coefficient(spec: &GameSpec) -> f64 {
    let rows: Vec<&SparseRow> = spec.entries().map(|(_, _, _, e)| &e.row).collect();
    let mut min_overlap = f64::INFINITY;
    for (x, p) in rows.iter().enumerate() {
        for q in &rows[x..] {
            min_overlap = min_overlap.min(overlap(p, q));
        }
    }
    1.0 - min_overlap
}

fn overlap(p: &SparseRow, q: &SparseRow) -> f64 {
    let (a, b) = (p.entries(), q.entries());
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                acc += a[i].1.min(b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    acc
}
