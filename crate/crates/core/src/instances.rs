//! Generators for the example families and seeded random test instances.
//! All outputs are undiscounted.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{Entry, GameSpec, MinAction, SparseRow, State};
use crate::sampling::RngStream;
use crate::{Error, Result};

/// Two states swapping deterministically, rewards `(r1, r2)`.
pub fn gen_cycle2(r1: f64, r2: f64) -> GameSpec {
    GameSpec::markov_chain(vec![SparseRow::point(1), SparseRow::point(0)], &[r1, r2], 1.0)
}

/// Row `i` (0-based) of the chain `Q`: half to state 0, half to `i + 1`,
/// and the last state returns to 0.
fn chain_row(n: usize, i: usize) -> SparseRow {
    if i + 1 == n {
        SparseRow::point(0)
    } else {
        SparseRow::new(vec![(0, 0.5), (i + 1, 0.5)])
    }
}

/// Row `i` (0-based) of `Q′`: state 0 moves to 1; otherwise half to state 1
/// and half to `i + 1`, wrapping past the last state to 0.
fn chain_prime_row(n: usize, i: usize) -> SparseRow {
    if i == 0 {
        return SparseRow::point(1);
    }
    SparseRow::new(vec![(1, 0.5), ((i + 1) % n, 0.5)])
}

/// Zero-player chain `Q`. Panics if `n < 2` or `r.len() != n`.
pub fn gen_chain(n: usize, r: &[f64]) -> GameSpec {
    assert!(n >= 2, "chain needs n >= 2");
    GameSpec::markov_chain((0..n).map(|i| chain_row(n, i)).collect(), r, 1.0)
}

/// One-player game choosing between `(r, Q)` and `(r′, Q′)` at every state.
/// Panics if `n < 3` or the reward lengths differ from `n`.
pub fn gen_chain2action(n: usize, r: &[f64], r_prime: &[f64]) -> GameSpec {
    assert!(n >= 3, "two-action chain needs n >= 3");
    assert!(r.len() == n && r_prime.len() == n);
    let choices = (0..n)
        .map(|i| vec![(r[i], chain_row(n, i)), (r_prime[i], chain_prime_row(n, i))])
        .collect();
    GameSpec::max_player(choices, 1.0)
}

/// Random game where every row puts mass at least `p_min` on state 0, so
/// state 0 is a renewal state with hitting times at most `1 / p_min`.
/// `|A_i|` and `|B_ia|` are drawn from `1..=a_max` and `1..=b_max`, rewards
/// uniformly from `reward_range`, and the remaining mass is spread over up to
/// three random targets.
pub fn gen_random_unichain(
    n: usize,
    a_max: usize,
    b_max: usize,
    p_min: f64,
    reward_range: (f64, f64),
    seed: u64,
) -> Result<GameSpec> {
    if n == 0 || a_max == 0 || b_max == 0 {
        return Err(Error::InvalidParameter(format!("n, a_max, b_max must be positive, got {n}, {a_max}, {b_max}")));
    }
    if !(p_min > 0.0 && p_min <= 1.0) {
        return Err(Error::InvalidParameter(format!("p_min must lie in (0, 1], got {p_min}")));
    }
    let (lo, hi) = reward_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidParameter(format!("bad reward range [{lo}, {hi}]")));
    }
    let mut rng = RngStream::new(seed);
    let mut states = Vec::with_capacity(n);
    for _ in 0..n {
        let actions = 1 + rng.next_below(a_max as u64) as usize;
        let mut min_actions = Vec::with_capacity(actions);
        for a in 0..actions {
            let count = 1 + rng.next_below(b_max as u64) as usize;
            let max_actions = (0..count)
                .map(|b| {
                    let reward = lo + (hi - lo) * rng.next_unit();
                    Entry::new(b as i64 + 1, reward, 1.0, random_row(n, p_min, &mut rng))
                })
                .collect();
            min_actions.push(MinAction { label: a as i64 + 1, max_actions });
        }
        states.push(State { min_actions });
    }
    Ok(GameSpec::new(n, states))
}

fn random_row(n: usize, p_min: f64, rng: &mut RngStream) -> SparseRow {
    let rest = 1.0 - p_min;
    let k = 1 + rng.next_below(n.min(3) as u64) as usize;
    let mut targets: Vec<usize> = Vec::with_capacity(k);
    while targets.len() < k {
        let j = rng.next_below(n as u64) as usize;
        if !targets.contains(&j) {
            targets.push(j);
        }
    }
    let weights: Vec<f64> = (0..k).map(|_| 1.0 - rng.next_unit()).collect();
    let total: f64 = weights.iter().sum();
    let mut probs = vec![0.0; n];
    probs[0] = p_min;
    for (&j, w) in targets.iter().zip(&weights) {
        probs[j] += rest * w / total;
    }
    SparseRow::new(probs.into_iter().enumerate().filter(|&(_, p)| p > 0.0).collect())
}
