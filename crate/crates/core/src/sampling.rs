//! Reproducible random streams, Walker alias tables over sub-Markovian rows,
//! and the approximate transition estimator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;
use rand_distr::{Binomial, Distribution};

use crate::model::{SparseRow, ROW_SUM_TOLERANCE};
use crate::{Error, Result};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Above this many draws an estimate is produced from multinomial slot
/// counts instead of `m` individual alias draws. Both routes yield the same
/// distribution of the estimate.
pub const DIRECT_DRAW_LIMIT: u64 = 4096;

fn fmix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Counter-based random stream.
///
/// A stream is a key plus a draw counter; output `t` is a keyed hash of `t`.
/// [`RngStream::fork`] derives child keys from labels, so the stream used at
/// a given (phase, epoch, iteration, entry) path is a pure function of the
/// master seed and the path, independent of evaluation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { key: fmix64(seed ^ 0x6a09_e667_f3bc_c908), counter: 0 }
    }

    /// Child stream for `label`. Does not advance `self`.
    pub fn fork(&self, label: u64) -> Self {
        let key = fmix64(self.key ^ fmix64(label.wrapping_add(GOLDEN)).rotate_left(17));
        Self { key: fmix64(key.wrapping_add(GOLDEN)), counter: 0 }
    }

    /// Child stream for a multi-level path.
    pub fn at(&self, path: &[u64]) -> Self {
        path.iter().fold(self.clone(), |s, &label| s.fork(label))
    }

    /// Number of raw 64-bit draws taken so far.
    pub fn position(&self) -> u64 {
        self.counter
    }

    pub fn next_raw(&mut self) -> u64 {
        let x = fmix64(self.counter.wrapping_mul(GOLDEN).wrapping_add(self.key));
        self.counter = self.counter.wrapping_add(1);
        fmix64(x ^ self.key.rotate_left(32))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_raw() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..bound` (bound > 0), by multiply-high.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        ((self.next_raw() as u128 * bound as u128) >> 64) as u64
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_raw() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_raw()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dst)
    }
}

/// Result of one draw from an augmented row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    State(usize),
    Cemetery,
}

/// Walker alias table for the augmented vector `p̄` over `S ∪ {cemetery}`.
///
/// Slot 0 is the cemetery with mass `1 - Σ p_j`; slot `k >= 1` is the k-th
/// entry of the source row.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    targets: Vec<usize>,
    probs: Vec<f64>,
    accept: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    pub fn build(row: &SparseRow) -> Result<Self> {
        let mut total = 0.0;
        for &(j, p) in row.entries() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "probability {p} on target {j} is not a nonnegative number"
                )));
            }
            total += p;
        }
        if total > 1.0 + ROW_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("row sum {total} > 1")));
        }
        let targets: Vec<usize> = row.entries().iter().map(|&(j, _)| j).collect();
        let mut probs = Vec::with_capacity(targets.len() + 1);
        probs.push((1.0 - total).max(0.0));
        probs.extend(row.entries().iter().map(|&(_, p)| p));

        // Vose's construction on the slot masses, normalized so rows that
        // overshoot 1 by the parsing tolerance still give a distribution.
        let k = probs.len();
        let norm: f64 = probs.iter().sum();
        let mut scaled: Vec<f64> = probs.iter().map(|p| p * k as f64 / norm).collect();
        let mut accept = vec![1.0; k];
        let mut alias: Vec<usize> = (0..k).collect();
        let mut small = Vec::new();
        let mut large = Vec::new();
        for (s, &q) in scaled.iter().enumerate() {
            if q < 1.0 {
                small.push(s);
            } else {
                large.push(s);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            large.pop();
            accept[s] = scaled[s];
            alias[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for s in small.into_iter().chain(large) {
            accept[s] = 1.0;
        }
        Ok(Self { targets, probs, accept, alias })
    }

    /// Number of slots including the cemetery.
    pub fn slots(&self) -> usize {
        self.probs.len()
    }

    /// Augmented probabilities, cemetery first.
    pub fn augmented(&self) -> &[f64] {
        &self.probs
    }

    pub fn cemetery_mass(&self) -> f64 {
        self.probs[0]
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Probability with which [`AliasTable::sample`] returns each slot, read
    /// back from the table itself.
    pub fn implied_distribution(&self) -> Vec<f64> {
        let k = self.slots();
        let mut mass = self.accept.clone();
        for s in 0..k {
            if self.alias[s] != s {
                mass[self.alias[s]] += 1.0 - self.accept[s];
            }
        }
        mass.iter().map(|m| m / k as f64).collect()
    }

    fn outcome(&self, slot: usize) -> Outcome {
        if slot == 0 {
            Outcome::Cemetery
        } else {
            Outcome::State(self.targets[slot - 1])
        }
    }

    fn sample_slot(&self, rng: &mut RngStream) -> usize {
        let col = rng.next_below(self.slots() as u64) as usize;
        let coin = rng.next_unit();
        if coin < self.accept[col] {
            col
        } else {
            self.alias[col]
        }
    }

    /// One draw; consumes exactly two raw values from `rng`.
    pub fn sample(&self, rng: &mut RngStream) -> Outcome {
        let slot = self.sample_slot(rng);
        self.outcome(slot)
    }

    /// Slot counts of `m` draws, state slots only (cemetery omitted).
    fn counts(&self, m: u64, rng: &mut RngStream) -> Vec<u64> {
        let mut counts = vec![0u64; self.slots()];
        if m <= DIRECT_DRAW_LIMIT {
            for _ in 0..m {
                counts[self.sample_slot(rng)] += 1;
            }
        } else {
            // Sequential conditional binomials, states first, cemetery last.
            let mut remaining = m;
            let mut mass_left = 1.0f64;
            for s in 1..self.slots() {
                if remaining == 0 {
                    break;
                }
                let p = if mass_left > 0.0 { (self.probs[s] / mass_left).clamp(0.0, 1.0) } else { 1.0 };
                let c = Binomial::new(remaining, p)
                    .expect("probability clamped to [0, 1]")
                    .sample(rng);
                counts[s] = c;
                remaining -= c;
                mass_left -= self.probs[s];
            }
            counts[0] = remaining;
        }
        counts
    }
}

/// Draw count `⌈2M²/ε² ln(2/δ)⌉`, at least one.
pub fn sample_count(bound: f64, eps: f64, delta: f64) -> Result<u64> {
    check_accuracy(eps, delta)?;
    if !(bound.is_finite() && bound >= 0.0) {
        return Err(Error::InvalidParameter(format!("bound M = {bound} must be finite and >= 0")));
    }
    if bound == 0.0 {
        return Ok(1);
    }
    let m = libm::ceil(2.0 * bound * bound / (eps * eps) * libm::log(2.0 / delta));
    if !(m < u64::MAX as f64) {
        return Err(Error::SampleBudgetExceeded { requested: u64::MAX, cap: u64::MAX });
    }
    Ok((m as u64).max(1))
}

pub(crate) fn check_accuracy(eps: f64, delta: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {eps} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(())
}

/// Output of [`apx_trans_c`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionEstimate {
    pub value: f64,
    pub samples: u64,
}

/// Monte-Carlo estimate of `p · u` for the row behind `table`, with the
/// cemetery contributing 0. With `m` from [`sample_count`], the estimate is
/// within `eps` of `p · u` with probability at least `1 - delta`.
///
/// `u` is only read on the row's support, so `|u_j| <= bound` is checked there.
pub fn apx_trans_c(
    table: &AliasTable,
    u: &[f64],
    bound: f64,
    eps: f64,
    delta: f64,
    rng: &mut RngStream,
) -> Result<TransitionEstimate> {
    let m = sample_count(bound, eps, delta)?;
    estimate_with_count(table, u, bound, m, rng).map(|value| TransitionEstimate { value, samples: m })
}

pub(crate) fn estimate_with_count(
    table: &AliasTable,
    u: &[f64],
    bound: f64,
    m: u64,
    rng: &mut RngStream,
) -> Result<f64> {
    let limit = bound * (1.0 + 1e-12);
    for &j in table.targets() {
        let x = u[j];
        if !(x.abs() <= limit) {
            return Err(Error::Precondition(format!("|u_{}| = {} exceeds M = {bound}", j + 1, x.abs())));
        }
    }
    let counts = table.counts(m, rng);
    let mf = m as f64;
    let mut value = 0.0;
    for (slot, &c) in counts.iter().enumerate().skip(1) {
        if c > 0 {
            value += u[table.targets[slot - 1]] * (c as f64 / mf);
        }
    }
    Ok(value)
}
