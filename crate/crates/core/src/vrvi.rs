//! Variance-reduced randomized value iteration over a [`StructuredOperator`].
//!
//! The estimate of `P_i^{ab} L w` is split as an offset `x ≈ P_i^{ab} L w_0`
//! plus a Monte-Carlo estimate of `P_i^{ab} L (w - w_0)`. The second term has
//! a range proportional to `‖w - w_0‖_∞`, which shrinks along the iteration,
//! so fewer draws are needed as the iterate approaches the fixed point.
//!
//! Random streams are laid out as `epoch / call / iteration / entry`: an
//! epoch `k` of the high-level solvers forks label `k` of the caller's
//! stream, a call forks label 0 for its offsets and label `j` for iteration
//! `j`, and each entry forks its flat index. Every draw is therefore fixed by
//! the seed and its position in the schedule.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::PolicyPair;
use crate::operators::{sup_norm, StructuredOperator};
use crate::sampling::{check_accuracy, estimate_with_count, sample_count, RngStream};
use crate::{Error, Result};

/// How transition terms are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Monte-Carlo draws from the alias tables.
    #[default]
    Sampled,
    /// Test hook: exact dot products instead of draws. The recentred term
    /// `x + P L (w - w_0)` is evaluated in its closed form `P L w`, so the
    /// iterates coincide bitwise with exact value iteration.
    Exact,
}

/// Execution knobs shared by every solver call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub estimator: Estimator,
    /// Hard cap on total draws; exceeding it aborts the run.
    pub max_samples: Option<u64>,
    /// Keep every inner iterate in [`SolveReport::trace`].
    pub trace: bool,
}

/// Parameters of the high-level solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Target sup-norm accuracy ε.
    pub eps: f64,
    /// Failure probability δ.
    pub delta: f64,
    /// Contraction factor λ of the operator in `‖·‖_ψ`.
    pub lambda: f64,
    /// `W` with `‖w★‖_ψ <= W`.
    pub bound: f64,
    /// `d1 >= ‖ψ^{-1}‖_∞`.
    pub d1: f64,
    /// `d2 >= ‖ψ‖_∞`.
    pub d2: f64,
    /// Discount bound Γ.
    pub gamma: f64,
    pub run: RunOptions,
}

impl SolverConfig {
    /// Sup-norm setting (`ψ = e`, `d1 = d2 = 1`).
    pub fn new(eps: f64, delta: f64, lambda: f64, bound: f64, gamma: f64) -> Self {
        Self { eps, delta, lambda, bound, d1: 1.0, d2: 1.0, gamma, run: RunOptions::default() }
    }

    pub fn with_norm_bounds(mut self, d1: f64, d2: f64) -> Self {
        self.d1 = d1;
        self.d2 = d2;
        self
    }

    pub fn with_run(mut self, run: RunOptions) -> Self {
        self.run = run;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_accuracy(self.eps, self.delta)?;
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v}")));
        if !(0.0..1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1), got", self.lambda);
        }
        if !(self.bound >= 0.0 && self.bound.is_finite()) {
            return bad("W must be finite and >= 0, got", self.bound);
        }
        if !(self.d1 > 0.0 && self.d1.is_finite()) {
            return bad("d1 must be positive, got", self.d1);
        }
        if !(self.d2 > 0.0 && self.d2.is_finite()) {
            return bad("d2 must be positive, got", self.d2);
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("Gamma must be finite and >= 0, got", self.gamma);
        }
        Ok(())
    }

    /// `K = ⌈log2(d2 W / ε)⌉`, clamped at 0.
    pub fn epochs(&self) -> usize {
        let ratio = self.d2 * self.bound / self.eps;
        if ratio <= 1.0 {
            return 0;
        }
        libm::ceil(libm::log2(ratio)) as usize
    }

    /// `J = ⌈ln 4 / (1 - λ)⌉`.
    pub fn iterations(&self) -> usize {
        libm::ceil(libm::log(4.0) / (1.0 - self.lambda)) as usize
    }

    /// `ε_k = W / 2^k`.
    pub fn epoch_tolerance(&self, k: usize) -> f64 {
        self.bound / libm::exp2(k as f64)
    }

    /// Accuracy handed to the inner call of epoch `k`:
    /// `(1 - λ) ε_k / (4 d1 Γ)`. With `Γ = 0` transitions do not matter and
    /// `ε_k` is used.
    pub fn inner_accuracy(&self, k: usize) -> f64 {
        let eps_k = self.epoch_tolerance(k);
        if self.gamma == 0.0 {
            return eps_k;
        }
        (1.0 - self.lambda) * eps_k / (4.0 * self.d1 * self.gamma)
    }
}

/// Offsets `x_i^{ab} ≈ P_i^{ab} L w_0`, one per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetTable {
    pub values: Vec<f64>,
    pub exact: bool,
    /// Per-entry error bound (0 when exact).
    pub error_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchKind {
    Offsets,
    Iteration,
}

/// One group of `apx_trans_c` calls sharing `(M, ε, δ)`: every entry of the
/// operator is estimated with `per_entry` draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBatch {
    pub kind: BatchKind,
    /// 1-based epoch (0 outside the epoch loop).
    pub epoch: usize,
    /// 1-based iteration (0 for offsets).
    pub iteration: usize,
    pub bound: f64,
    pub eps: f64,
    pub delta: f64,
    pub per_entry: u64,
    pub entries: usize,
}

impl SampleBatch {
    pub fn total(&self) -> u64 {
        self.per_entry * self.entries as u64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub w: Vec<f64>,
    /// Policies of the final inner iteration; `None` if no iteration ran.
    pub policy: Option<PolicyPair>,
    pub iterations: usize,
    pub epochs: usize,
    /// Total draws.
    pub samples: u64,
    /// `ε_k` for each completed epoch.
    pub epoch_tolerances: Vec<f64>,
    pub batches: Vec<SampleBatch>,
    /// Number of exact `O(|E|)` offset evaluations.
    pub exact_offset_passes: usize,
    /// Number of `L` applications (`O(n)` each).
    pub lift_evaluations: usize,
    /// Inner iterates in order, when [`RunOptions::trace`] is set.
    pub trace: Vec<Vec<f64>>,
}

struct Run<'a> {
    op: &'a StructuredOperator,
    options: RunOptions,
    report: SolveReport,
    epoch: usize,
}

impl<'a> Run<'a> {
    fn new(op: &'a StructuredOperator, options: RunOptions, w: Vec<f64>) -> Self {
        Self { op, options, report: SolveReport { w, ..SolveReport::default() }, epoch: 0 }
    }

    fn reserve(&mut self, per_entry: u64) -> Result<()> {
        let requested = per_entry
            .checked_mul(self.op.entry_count() as u64)
            .and_then(|t| t.checked_add(self.report.samples))
            .ok_or(Error::SampleBudgetExceeded { requested: u64::MAX, cap: self.options.max_samples.unwrap_or(u64::MAX) })?;
        if let Some(cap) = self.options.max_samples {
            if requested > cap {
                return Err(Error::SampleBudgetExceeded { requested, cap });
            }
        }
        Ok(())
    }

    fn record(&mut self, kind: BatchKind, iteration: usize, bound: f64, eps: f64, delta: f64, per_entry: u64) {
        let batch = SampleBatch {
            kind,
            epoch: self.epoch,
            iteration,
            bound,
            eps,
            delta,
            per_entry,
            entries: self.op.entry_count(),
        };
        self.report.samples += batch.total();
        self.report.batches.push(batch);
    }

    fn lift(&mut self, w: &[f64]) -> Vec<f64> {
        self.report.lift_evaluations += 1;
        self.op.lift().apply(w)
    }

    fn exact_offsets(&mut self, w0: &[f64]) -> OffsetTable {
        let lw0 = self.lift(w0);
        self.report.exact_offset_passes += 1;
        OffsetTable {
            values: self.op.entries().iter().map(|e| e.row.dot(&lw0)).collect(),
            exact: true,
            error_bound: 0.0,
        }
    }

    fn sampled_offsets(&mut self, w0: &[f64], eps: f64, delta: f64, rng: &RngStream) -> Result<OffsetTable> {
        let u0 = self.lift(w0);
        if self.options.estimator == Estimator::Exact {
            let values = self.op.entries().iter().map(|e| e.row.dot(&u0)).collect();
            return Ok(OffsetTable { values, exact: true, error_bound: 0.0 });
        }
        let bound = self.op.lift_norm() * sup_norm(w0);
        let per_entry_delta = delta / self.op.entry_count() as f64;
        let m = sample_count(bound, eps, per_entry_delta)?;
        self.reserve(m)?;
        let op = self.op;
        let values = per_entry(op.entry_count(), |e| {
            estimate_with_count(op.table(e), &u0, bound, m, &mut rng.fork(e as u64))
        })?;
        self.record(BatchKind::Offsets, 0, bound, eps, per_entry_delta, m);
        Ok(OffsetTable { values, exact: false, error_bound: eps })
    }

    fn apx_val(
        &mut self,
        w: &[f64],
        w0: &[f64],
        offsets: &OffsetTable,
        eps: f64,
        delta: f64,
        iteration: usize,
        rng: &RngStream,
    ) -> Result<(Vec<f64>, PolicyPair)> {
        check_accuracy(eps, delta)?;
        let op = self.op;
        if self.options.estimator == Estimator::Exact {
            let lw = self.lift(w);
            return Ok(op.minimax(&op.entry_values(&lw, w)));
        }
        let diff: Vec<f64> = w.iter().zip(w0).map(|(a, b)| a - b).collect();
        let bound = op.lift_norm() * sup_norm(&diff);
        let u = self.lift(&diff);
        let per_entry_delta = delta / op.entry_count() as f64;
        let m = sample_count(bound, eps, per_entry_delta)?;
        self.reserve(m)?;
        let values = per_entry(op.entry_count(), |e| {
            let entry = &op.entries()[e];
            let y = estimate_with_count(op.table(e), &u, bound, m, &mut rng.fork(e as u64))?;
            Ok(entry.discount * (offsets.values[e] + y) + entry.affine.eval(w))
        })?;
        self.record(BatchKind::Iteration, iteration, bound, eps, per_entry_delta, m);
        Ok(op.minimax(&values))
    }

    fn iterate(
        &mut self,
        w0: &[f64],
        offsets: &OffsetTable,
        rounds: usize,
        eps: f64,
        delta: f64,
        rng: &RngStream,
    ) -> Result<()> {
        let mut w = w0.to_vec();
        for j in 1..=rounds {
            let (next, policy) = self.apx_val(&w, w0, offsets, eps, delta, j, &rng.fork(j as u64))?;
            w = next;
            if self.options.trace {
                self.report.trace.push(w.clone());
            }
            self.report.policy = Some(policy);
            self.report.iterations += 1;
        }
        self.report.w = w;
        Ok(())
    }

    fn rand_vi(&mut self, w0: &[f64], rounds: usize, eps: f64, delta: f64, rng: &RngStream) -> Result<()> {
        check_accuracy(eps, delta)?;
        if rounds == 0 {
            self.report.w = w0.to_vec();
            return Ok(());
        }
        let offsets = self.exact_offsets(w0);
        self.iterate(w0, &offsets, rounds, eps, delta / rounds as f64, rng)
    }

    fn sampled_rand_vi(&mut self, w0: &[f64], rounds: usize, eps: f64, delta: f64, rng: &RngStream) -> Result<()> {
        check_accuracy(eps, delta)?;
        if rounds == 0 {
            self.report.w = w0.to_vec();
            return Ok(());
        }
        let offsets = self.sampled_offsets(w0, eps, delta / 2.0, &rng.fork(0))?;
        self.iterate(w0, &offsets, rounds, eps, delta / (2.0 * rounds as f64), rng)
    }

    fn epochs(&mut self, cfg: &SolverConfig, rng: &RngStream, sampled_offsets: bool) -> Result<()> {
        cfg.validate()?;
        let k_total = cfg.epochs();
        let rounds = cfg.iterations();
        let mut w = vec![0.0; self.op.dim()];
        self.report.w = w.clone();
        for k in 1..=k_total {
            self.epoch = k;
            let eps = cfg.inner_accuracy(k);
            let delta = cfg.delta / k_total as f64;
            let stream = rng.fork(k as u64);
            if sampled_offsets {
                self.sampled_rand_vi(&w, rounds, eps, delta, &stream)?;
            } else {
                self.rand_vi(&w, rounds, eps, delta, &stream)?;
            }
            w = self.report.w.clone();
            self.report.epochs = k;
            self.report.epoch_tolerances.push(cfg.epoch_tolerance(k));
        }
        Ok(())
    }
}

fn check_dim(op: &StructuredOperator, w: &[f64], what: &str) -> Result<()> {
    if w.len() != op.dim() {
        return Err(Error::InvalidParameter(format!("{what} has length {}, operator has {}", w.len(), op.dim())));
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn per_entry<F>(count: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn per_entry<F>(count: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64>,
{
    (0..count).map(f).collect()
}

/// Exact offsets `x_i^{ab} = P_i^{ab} L w_0`.
pub fn compute_offsets_exact(op: &StructuredOperator, w0: &[f64]) -> OffsetTable {
    Run::new(op, RunOptions::default(), Vec::new()).exact_offsets(w0)
}

/// Output of a single approximate operator evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxValue {
    pub w: Vec<f64>,
    pub policy: PolicyPair,
    pub samples: u64,
}

/// One approximate evaluation of `T(w)` given offsets around `w0`. With
/// probability `1 - delta`, `‖w̃ - T(w)‖_∞ <= 2 Γ eps` when the offsets are
/// within `eps`.
pub fn s_apx_val(
    op: &StructuredOperator,
    w: &[f64],
    w0: &[f64],
    offsets: &OffsetTable,
    eps: f64,
    delta: f64,
    rng: &RngStream,
    options: RunOptions,
) -> Result<ApproxValue> {
    check_dim(op, w, "w")?;
    check_dim(op, w0, "w0")?;
    if offsets.values.len() != op.entry_count() {
        return Err(Error::InvalidParameter(format!(
            "{} offsets for {} entries",
            offsets.values.len(),
            op.entry_count()
        )));
    }
    let mut run = Run::new(op, options, Vec::new());
    let (w, policy) = run.apx_val(w, w0, offsets, eps, delta, 1, rng)?;
    Ok(ApproxValue { w, policy, samples: run.report.samples })
}

/// `J` rounds of [`s_apx_val`] around exact offsets at `w0`, each with
/// failure budget `delta / J`.
pub fn s_rand_vi(
    op: &StructuredOperator,
    w0: &[f64],
    rounds: usize,
    eps: f64,
    delta: f64,
    rng: &RngStream,
    options: RunOptions,
) -> Result<SolveReport> {
    check_dim(op, w0, "w0")?;
    let mut run = Run::new(op, options, w0.to_vec());
    run.rand_vi(w0, rounds, eps, delta, rng)?;
    Ok(run.report)
}

/// Like [`s_rand_vi`] but the offsets are themselves sampled (budget
/// `delta / (2|E|)` each) and the rounds get `delta / (2J)`.
pub fn s_sampled_rand_vi(
    op: &StructuredOperator,
    w0: &[f64],
    rounds: usize,
    eps: f64,
    delta: f64,
    rng: &RngStream,
    options: RunOptions,
) -> Result<SolveReport> {
    check_dim(op, w0, "w0")?;
    let mut run = Run::new(op, options, w0.to_vec());
    run.sampled_rand_vi(w0, rounds, eps, delta, rng)?;
    Ok(run.report)
}

/// Epochs of [`s_rand_vi`] halving the error bound each time, from `w = 0`.
/// With probability `1 - δ`, `‖w - w★‖_∞ <= ε`.
pub fn s_high_precision_rand_vi(op: &StructuredOperator, cfg: &SolverConfig, rng: &RngStream) -> Result<SolveReport> {
    let mut run = Run::new(op, cfg.run, Vec::new());
    run.epochs(cfg, rng, false)?;
    Ok(run.report)
}

/// Epochs of [`s_sampled_rand_vi`]; same guarantee as
/// [`s_high_precision_rand_vi`] without any exact offset pass.
pub fn s_sublinear_rand_vi(op: &StructuredOperator, cfg: &SolverConfig, rng: &RngStream) -> Result<SolveReport> {
    let mut run = Run::new(op, cfg.run, Vec::new());
    run.epochs(cfg, rng, true)?;
    Ok(run.report)
}

/// Which epoch solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    HighPrecision,
    Sublinear,
}

pub fn solve(op: &StructuredOperator, cfg: &SolverConfig, mode: Mode, rng: &RngStream) -> Result<SolveReport> {
    match mode {
        Mode::HighPrecision => s_high_precision_rand_vi(op, cfg, rng),
        Mode::Sublinear => s_sublinear_rand_vi(op, cfg, rng),
    }
}

/// `n` exact value iteration steps from 0, the schedule the epoch solvers
/// reduce to under [`Estimator::Exact`].
pub fn exact_iterates(op: &StructuredOperator, steps: usize) -> Vec<Vec<f64>> {
    let mut w = vec![0.0; op.dim()];
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        w = op.apply(&w);
        out.push(w.clone());
    }
    out
}
