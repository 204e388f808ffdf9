//! Seeded statistical checks behind `ergovi selftest`. Each check compares
//! the randomized solvers against a deterministic oracle over many seeds
//! and passes when the empirical failure rate stays within δ.

use ergovi_core::ergodic::{solve_discounted, solve_mean_payoff, MeanPayoffParams};
use ergovi_core::instances::{gen_chain2action, gen_cycle2, gen_random_unichain};
use ergovi_core::operators::sup_distance;
use ergovi_core::oracles::{exact_value_iteration, mean_payoff_bruteforce};
use ergovi_core::vrvi::{Mode, RunOptions};
use ergovi_core::{GameSpec, RngStream, StructuredOperator};

use crate::report::{SelftestCheck, SelftestReport};

const EPS: f64 = 1e-2;
const DELTA: f64 = 0.05;

fn rate_check(name: &'static str, runs: usize, failures: usize) -> SelftestCheck {
    let rate = failures as f64 / runs as f64;
    SelftestCheck {
        name,
        pass: rate <= DELTA,
        detail: format!("{failures}/{runs} runs outside eps = {EPS}, allowed rate {DELTA}"),
    }
}

fn error_check(name: &'static str, result: ergovi_core::Result<usize>, runs: usize) -> SelftestCheck {
    match result {
        Ok(failures) => rate_check(name, runs, failures),
        Err(e) => SelftestCheck { name, pass: false, detail: e.to_string() },
    }
}

fn mean_payoff_failures(spec: &GameSpec, eta_star: f64, runs: usize, seed: u64, mode: Mode) -> ergovi_core::Result<usize> {
    let params = MeanPayoffParams::new(EPS, DELTA, mode);
    let mut failures = 0;
    for r in 0..runs {
        let rng = RngStream::new(seed).fork(r as u64);
        let sol = solve_mean_payoff(spec, 0, &params, &rng)?;
        if (sol.eta - eta_star).abs() > EPS {
            failures += 1;
        }
    }
    Ok(failures)
}

fn discounted_game(seed: u64) -> ergovi_core::Result<GameSpec> {
    let base = gen_random_unichain(6, 2, 2, 0.3, (-1.0, 1.0), seed)?;
    let states = base
        .states
        .into_iter()
        .map(|mut s| {
            for e in s.min_actions.iter_mut().flat_map(|m| m.max_actions.iter_mut()) {
                e.discount = 0.9;
            }
            s
        })
        .collect();
    Ok(GameSpec::new(base.n, states))
}

fn discounted_failures(runs: usize, seed: u64) -> ergovi_core::Result<usize> {
    let spec = discounted_game(seed)?;
    let exact = exact_value_iteration(&StructuredOperator::shapley(&spec)?, 1e-12, 1_000_000)?.value;
    let mut failures = 0;
    for r in 0..runs {
        let rng = RngStream::new(seed).fork(r as u64);
        let report = solve_discounted(&spec, EPS, DELTA, Mode::HighPrecision, &rng, RunOptions::default())?;
        if sup_distance(&report.w, &exact) > EPS {
            failures += 1;
        }
    }
    Ok(failures)
}

pub fn run(runs: usize, seed: u64) -> SelftestReport {
    let mut checks = Vec::new();

    let cycle = gen_cycle2(3.0, 1.0);
    for (name, mode) in [("cycle2-highprecision", Mode::HighPrecision), ("cycle2-sublinear", Mode::Sublinear)] {
        checks.push(error_check(name, mean_payoff_failures(&cycle, 2.0, runs, seed, mode), runs));
    }

    let rewards: Vec<f64> = (0..6).map(|i| i as f64 / 6.0).collect();
    let rewards_prime: Vec<f64> = (0..6).map(|i| 1.0 - i as f64 / 6.0).collect();
    let chain = gen_chain2action(6, &rewards, &rewards_prime);
    let one_player = mean_payoff_bruteforce(&chain, 0)
        .and_then(|(eta, _)| mean_payoff_failures(&chain, eta, runs, seed ^ 0x5eed, Mode::HighPrecision));
    checks.push(error_check("one-player-chain", one_player, runs));

    checks.push(error_check("discounted-random", discounted_failures(runs, seed), runs));

    let pass = checks.iter().all(|c| c.pass);
    SelftestReport { seed, runs, pass, checks }
}
