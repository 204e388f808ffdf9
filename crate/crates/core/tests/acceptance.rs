//! Acceptance criteria 1-11. Runs as a plain binary (no libtest harness) so
//! every criterion prints exactly one PASS/FAIL line.

use std::process::ExitCode;
use std::time::Instant;

use ergovi_core::ergodic::{solve_mean_payoff, ErgodicSolution, MeanPayoffParams};
use ergovi_core::instances::{gen_chain, gen_chain2action, gen_cycle2, gen_random_unichain};
use ergovi_core::operators::{
    build_tm, build_tphi, htransform_row, lphi_inverse, sup_distance, sup_norm, Contraction, PhiCheck,
};
use ergovi_core::oracles::{
    dobrushin_coefficient, ergodic_residual, exact_value_iteration, hitting_times_exact, mean_payoff_bruteforce,
    mean_payoff_by_enumeration, DEFAULT_ENUMERATION_CAP,
};
use ergovi_core::sampling::{apx_trans_c, AliasTable};
use ergovi_core::vrvi::{exact_iterates, solve, BatchKind, Estimator, Mode, RunOptions, SolveReport};
use ergovi_core::{GameSpec, RngStream, SolverConfig, SparseRow, StructuredOperator};

type Check = Result<String, String>;

/// Everything needed to recompute the sampling schedule of one solver call
/// from first principles.
#[derive(Clone, Copy)]
struct Schedule {
    eps: f64,
    delta: f64,
    lambda: f64,
    bound: f64,
    d1: f64,
    d2: f64,
    gamma: f64,
    entries: usize,
    mode: Mode,
}

struct Logged {
    label: String,
    report: SolveReport,
    schedule: Schedule,
    /// `Some(limit)` when `‖w‖_∞ <= limit` must hold.
    w_limit: Option<f64>,
}

#[derive(Default)]
struct Log {
    runs: Vec<Logged>,
}

impl Log {
    fn mean_payoff(&mut self, label: &str, spec: &GameSpec, c: usize, params: &MeanPayoffParams, sol: &ErgodicSolution) {
        let h = sol.htransform.hitting_bound;
        let tm_entries: usize = spec
            .states
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != c)
            .map(|(_, s)| s.min_actions.iter().map(|a| a.max_actions.len()).sum::<usize>())
            .sum();
        if spec.n > 1 {
            self.runs.push(Logged {
                label: format!("{label}/phi"),
                report: sol.phi_report.clone(),
                schedule: Schedule {
                    eps: 0.25,
                    delta: params.delta / 2.0,
                    lambda: 1.0 - 1.0 / h,
                    bound: 1.0,
                    d1: 1.0,
                    d2: h,
                    gamma: 1.0,
                    entries: tm_entries,
                    mode: params.mode,
                },
                w_limit: None,
            });
        }
        let r = max_abs_reward(spec);
        self.runs.push(Logged {
            label: format!("{label}/fixed-point"),
            report: sol.solve_report.clone(),
            schedule: Schedule {
                eps: params.eps,
                delta: params.delta / 2.0,
                lambda: 1.0 - 1.0 / sup_norm(&sol.htransform.phi),
                bound: r,
                d1: 1.0,
                d2: 1.0,
                gamma: 1.0,
                entries: entry_count(spec),
                mode: params.mode,
            },
            w_limit: Some(r + params.eps),
        });
    }
}

fn entry_count(spec: &GameSpec) -> usize {
    spec.states.iter().flat_map(|s| &s.min_actions).map(|a| a.max_actions.len()).sum()
}

fn max_abs_reward(spec: &GameSpec) -> f64 {
    spec.states
        .iter()
        .flat_map(|s| &s.min_actions)
        .flat_map(|a| &a.max_actions)
        .fold(0.0, |acc, e| f64::max(acc, e.reward.abs()))
}

/// `⌈2 M² / ε² · ln(2/δ)⌉`, at least one draw.
fn draws(bound: f64, eps: f64, delta: f64) -> u64 {
    if bound == 0.0 {
        return 1;
    }
    (2.0 * bound * bound / (eps * eps) * (2.0 / delta).ln()).ceil() as u64
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn audit(run: &Logged) -> Result<(), String> {
    let s = run.schedule;
    let r = &run.report;
    let k_total = if s.d2 * s.bound / s.eps <= 1.0 { 0 } else { (s.d2 * s.bound / s.eps).log2().ceil() as usize };
    let j_total = (4f64.ln() / (1.0 - s.lambda)).ceil() as usize;
    let sampled = s.mode == Mode::Sublinear;
    let per_epoch = if sampled { j_total + 1 } else { j_total };
    let fail = |what: String| Err(format!("{}: {what}", run.label));
    if r.batches.len() != k_total * per_epoch {
        return fail(format!("{} batches, schedule has {}", r.batches.len(), k_total * per_epoch));
    }
    let mut total = 0u64;
    for (idx, b) in r.batches.iter().enumerate() {
        let k = idx / per_epoch + 1;
        let slot = idx % per_epoch;
        let eps_k = s.bound / 2f64.powi(k as i32);
        let inner = (1.0 - s.lambda) * eps_k / (4.0 * s.d1 * s.gamma);
        let delta_k = s.delta / k_total as f64;
        let (kind, iteration, delta) = match (sampled, slot) {
            (true, 0) => (BatchKind::Offsets, 0, delta_k / 2.0 / s.entries as f64),
            (true, j) => (BatchKind::Iteration, j, delta_k / (2.0 * j_total as f64) / s.entries as f64),
            (false, j) => (BatchKind::Iteration, j + 1, delta_k / j_total as f64 / s.entries as f64),
        };
        if b.kind != kind || b.epoch != k || b.iteration != iteration || b.entries != s.entries {
            return fail(format!("batch {idx} out of schedule: {b:?}"));
        }
        if !close(b.eps, inner) || !close(b.delta, delta) {
            return fail(format!("batch {idx}: eps {} / delta {} vs {inner} / {delta}", b.eps, b.delta));
        }
        let m = draws(b.bound, b.eps, b.delta);
        if b.per_entry != m {
            return fail(format!("batch {idx}: m = {} but closed form gives {m}", b.per_entry));
        }
        total += m * s.entries as u64;
    }
    if total != r.samples {
        return fail(format!("reported {} samples, closed form {total}", r.samples));
    }
    let expected_passes = if sampled { 0 } else { k_total };
    if r.exact_offset_passes != expected_passes {
        return fail(format!("{} exact offset passes, expected {expected_passes}", r.exact_offset_passes));
    }
    Ok(())
}

fn criterion_1(log: &mut Log) -> Check {
    let spec = gen_cycle2(3.0, 1.0);
    let eps = 1e-3;
    let mut lines = Vec::new();
    let mut ok = true;
    for mode in [Mode::HighPrecision, Mode::Sublinear] {
        let params = MeanPayoffParams::new(eps, 0.05, mode);
        let mut hits = 0;
        for seed in 0..200u64 {
            let sol = match solve_mean_payoff(&spec, 0, &params, &RngStream::new(seed)) {
                Ok(sol) => sol,
                Err(_) => continue,
            };
            let v_tol = 5.0 * eps / (1.0 - sol.htransform.lambda);
            if (sol.eta - 2.0).abs() <= eps && sup_distance(&sol.v, &[0.0, -1.0]) <= v_tol {
                hits += 1;
            }
            log.mean_payoff(&format!("cycle2/{mode:?}/{seed}"), &spec, 0, &params, &sol);
        }
        ok &= hits >= 186;
        lines.push(format!("{mode:?} {hits}/200"));
    }
    let detail = format!("{} (need >= 186 = 93%)", lines.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Check {
    let mut worst_q = 0.0f64;
    for n in [3usize, 10, 20] {
        let phi = hitting_times_exact(&gen_chain(n, &vec![0.0; n]), 0).map_err(|e| e.to_string())?.value;
        for (i, p) in phi.iter().enumerate() {
            let k = (i + 1) as i32;
            worst_q = worst_q.max((p - (2.0 - 2f64.powi(-(n as i32 - k)))).abs());
        }
    }
    let mut worst_q2 = 0.0f64;
    for n in [3usize, 5, 10, 20] {
        let spec = gen_chain2action(n, &vec![0.0; n], &vec![0.0; n]);
        let phi = hitting_times_exact(&spec, 1).map_err(|e| e.to_string())?.value;
        for (i, p) in phi.iter().enumerate() {
            let k = (i + 1) as i32;
            let want = if k == 1 { 2.0 } else { 4.0 - 2f64.powi(-(n as i32 - k)) };
            worst_q2 = worst_q2.max((p - want).abs());
        }
    }
    let detail = format!("chain max err {worst_q:.1e} (tol 1e-12), two-action max err {worst_q2:.1e} (tol 1e-10)");
    if worst_q <= 1e-12 && worst_q2 <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_stochastic(n: usize, rng: &mut RngStream) -> Vec<SparseRow> {
    (0..n)
        .map(|_| {
            let w: Vec<f64> = (0..n).map(|_| if rng.next_unit() < 0.4 { 0.0 } else { rng.next_unit() }).collect();
            let total: f64 = w.iter().sum();
            if total == 0.0 {
                return SparseRow::point(rng.next_below(n as u64) as usize);
            }
            SparseRow::new(w.iter().enumerate().filter(|p| *p.1 > 0.0).map(|(j, x)| (j, x / total)).collect())
        })
        .collect()
}

fn criterion_3() -> Check {
    let mut rng = RngStream::new(3);
    let mut triples = 0;
    let mut attempts = 0;
    let (mut worst_phi, mut worst_full) = (0.0f64, 0.0f64);
    while triples < 100 {
        attempts += 1;
        if attempts > 10_000 {
            return Err(format!("only {triples} valid triples generated"));
        }
        let n = 2 + rng.next_below(5) as usize;
        let c = rng.next_below(n as u64) as usize;
        let rows = random_stochastic(n, &mut rng);
        let spec = GameSpec::markov_chain(rows.clone(), &vec![0.0; n], 1.0);
        let Ok(star) = hitting_times_exact(&spec, c) else { continue };
        // (1 + s) φ★ dominates: φ★ >= 1 + P_(c) φ★ and φ★ >= P_(c) φ★.
        let s = 2.0 * rng.next_unit();
        let phi: Vec<f64> = star.value.iter().map(|p| (1.0 + s) * p).collect();
        let mut hrows = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            hrows.push(htransform_row(row, i, c, &phi, PhiCheck::Slack(1e-9)).map_err(|e| e.to_string())?);
        }
        let eta = 4.0 * rng.next_unit() - 2.0;
        let mut v: Vec<f64> = (0..n).map(|_| 4.0 * rng.next_unit() - 2.0).collect();
        v[c] = 0.0;
        let shifted: Vec<f64> = phi.iter().zip(&v).map(|(p, x)| eta * p + x).collect();
        for i in 0..n {
            let scale = phi[i].max(1.0);
            worst_phi = worst_phi.max((hrows[i].dot(&phi) - (phi[i] - 1.0)).abs() / scale);
            let lhs = eta * (phi[i] - 1.0) + rows[i].dot(&v);
            let rhs = hrows[i].dot(&shifted);
            worst_full = worst_full.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
        }
        triples += 1;
    }
    let detail = format!("100 triples, P_(c,φ)φ = φ-1 err {worst_phi:.1e}, full identity err {worst_full:.1e} (tol 1e-12)");
    if worst_phi <= 1e-12 && worst_full <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The 50 random games shared by criteria 4 and 5.
fn unichain_family() -> Vec<GameSpec> {
    (0..50u64)
        .map(|k| {
            let n = 2 + (k % 7) as usize;
            let p_min = 0.2 + 0.05 * (k % 5) as f64;
            gen_random_unichain(n, 2, 2, p_min, (-1.0, 1.0), 1000 + k).expect("valid parameters")
        })
        .collect()
}

fn criterion_4(family: &[GameSpec]) -> Check {
    let mut rng = RngStream::new(4);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for spec in family {
        let phi = hitting_times_exact(spec, 0).map_err(|e| e.to_string())?.value;
        let op = build_tphi(spec, 0, &phi, PhiCheck::Slack(1e-10)).map_err(|e| e.to_string())?;
        let lambda = 1.0 - 1.0 / sup_norm(&phi);
        for _ in 0..100 {
            let x: Vec<f64> = (0..spec.n).map(|_| 10.0 * rng.next_unit() - 5.0).collect();
            let y: Vec<f64> = (0..spec.n).map(|_| 10.0 * rng.next_unit() - 5.0).collect();
            let excess = sup_distance(&op.apply(&x), &op.apply(&y)) - lambda * sup_distance(&x, &y);
            worst = worst.max(excess);
            if excess > 1e-12 {
                violations += 1;
            }
        }
    }
    let detail = format!("{violations} violations in 5000 pairs, max excess {worst:.1e}");
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_5(family: &[GameSpec]) -> Check {
    let (mut worst_res, mut worst_eta) = (0.0f64, 0.0f64);
    for spec in family {
        let (eta, v) = mean_payoff_bruteforce(spec, 0).map_err(|e| e.to_string())?;
        worst_res = worst_res.max(ergodic_residual(spec, eta, &v).map_err(|e| e.to_string())?);
        let other = mean_payoff_by_enumeration(spec, DEFAULT_ENUMERATION_CAP).map_err(|e| e.to_string())?;
        worst_eta = worst_eta.max((eta - other).abs());
    }
    let detail = format!("max residual {worst_res:.1e} (tol 1e-9), max |η - η_enum| {worst_eta:.1e} (tol 1e-8)");
    if worst_res <= 1e-9 && worst_eta <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Check {
    let row = SparseRow::new(vec![(0, 0.3), (1, 0.5), (2, 0.2)]);
    let table = AliasTable::build(&row).map_err(|e| e.to_string())?;
    let u = [1.0, 0.0, 1.0];
    let truth = row.dot(&u);
    let base = RngStream::new(6);
    let mut failures = 0;
    let mut m_values = Vec::new();
    for t in 0..1000u64 {
        let est = apx_trans_c(&table, &u, 1.0, 0.1, 0.1, &mut base.fork(t)).map_err(|e| e.to_string())?;
        m_values.push(est.samples);
        if (est.value - truth).abs() > 0.1 {
            failures += 1;
        }
    }
    let m_ok = m_values.iter().all(|&m| m == 600);
    let rate = failures as f64 / 1000.0;
    let detail = format!("failure rate {rate:.3} (need <= 0.13), m = {} on every call: {m_ok}", m_values[0]);
    if rate <= 0.13 && m_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Check {
    let exact = RunOptions { estimator: Estimator::Exact, trace: true, ..RunOptions::default() };
    // (name, operator, config, weights ψ of the norm the guarantee is stated in)
    let mut fixtures: Vec<(String, StructuredOperator, SolverConfig, Vec<f64>)> = Vec::new();
    let cycle = gen_cycle2(3.0, 1.0);
    let chain = gen_chain(10, &(0..10).map(|i| (i as f64 / 5.0).sin()).collect::<Vec<_>>());
    let two = gen_chain2action(6, &[0.5, -0.2, 0.3, 0.9, -1.0, 0.1], &[0.0, 0.4, -0.6, 0.2, 0.8, -0.3]);
    for (name, spec, c) in [("cycle2", &cycle, 0usize), ("chain10", &chain, 0), ("chain2action6", &two, 1)] {
        let phi = hitting_times_exact(spec, c).map_err(|e| e.to_string())?.value;
        let op = build_tphi(spec, c, &phi, PhiCheck::Slack(1e-10)).map_err(|e| e.to_string())?;
        let cfg = SolverConfig::new(1e-6, 0.05, 1.0 - 1.0 / sup_norm(&phi), max_abs_reward(spec), 1.0).with_run(exact);
        fixtures.push((format!("{name}/T^phi"), op, cfg, vec![1.0; spec.n]));
        let h = sup_norm(&phi);
        let tm = build_tm(spec, c)
            .map_err(|e| e.to_string())?
            .with_contraction(Contraction { factor: 1.0 - 1.0 / h, d1: 1.0, d2: h });
        let cfg = SolverConfig::new(1e-6, 0.05, 1.0 - 1.0 / h, 1.0, 1.0).with_norm_bounds(1.0, h).with_run(exact);
        let psi = phi.iter().enumerate().filter(|&(i, _)| i != c).map(|(_, p)| *p).collect();
        fixtures.push((format!("{name}/T^m"), tm, cfg, psi));
    }
    let disc = GameSpec::markov_chain(vec![SparseRow::point(1), SparseRow::point(0)], &[1.0, 0.0], 0.5);
    let op = StructuredOperator::shapley(&disc).map_err(|e| e.to_string())?;
    fixtures.push(("discounted-cycle".into(), op, SolverConfig::new(1e-6, 0.05, 0.5, 2.0, 0.5).with_run(exact), vec![1.0; 2]));

    let mut checked = 0;
    for (name, op, cfg, psi) in &fixtures {
        let fixed = exact_value_iteration(op, 1e-12, 10_000_000).map_err(|e| format!("{name}: {e}"))?.value;
        for mode in [Mode::HighPrecision, Mode::Sublinear] {
            let r = solve(op, cfg, mode, &RngStream::new(7)).map_err(|e| format!("{name}: {e}"))?;
            let reference = exact_iterates(op, r.iterations);
            if r.trace != reference || r.trace.len() != cfg.epochs() * cfg.iterations() {
                return Err(format!("{name} {mode:?}: iterates differ from exact value iteration"));
            }
            if r.samples != 0 {
                return Err(format!("{name} {mode:?}: exact hook drew {} samples", r.samples));
            }
            let err = r.w.iter().zip(&fixed).zip(psi).fold(0.0f64, |acc, ((a, b), p)| acc.max((a - b).abs() / p));
            if err > cfg.eps {
                return Err(format!("{name} {mode:?}: error {err:.2e} > eps {}", cfg.eps));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} runs bitwise equal to exact VI and within eps of the fixed point"))
}

fn criterion_8(log: &mut Log) -> Check {
    let (eps, delta) = (0.05, 0.1);
    let params = MeanPayoffParams::new(eps, delta, Mode::Sublinear);
    let mut hits = 0;
    let mut total = 0;
    let mut worst_instance = 1.0f64;
    for k in 0..20u64 {
        let n = 2 + (k % 5) as usize;
        let p_min = 0.25 + 0.05 * (k % 4) as f64;
        let spec = gen_random_unichain(n, 1, 3, p_min, (-1.0, 1.0), 8000 + k).map_err(|e| e.to_string())?;
        let truth = mean_payoff_by_enumeration(&spec, DEFAULT_ENUMERATION_CAP).map_err(|e| e.to_string())?;
        let mut local = 0;
        for seed in 0..50u64 {
            total += 1;
            let Ok(sol) = solve_mean_payoff(&spec, 0, &params, &RngStream::new(seed).fork(k)) else { continue };
            if (sol.eta - truth).abs() <= eps {
                hits += 1;
                local += 1;
            }
            log.mean_payoff(&format!("unichain{k}/{seed}"), &spec, 0, &params, &sol);
        }
        worst_instance = worst_instance.min(local as f64 / 50.0);
    }
    let rate = hits as f64 / total as f64;
    let detail = format!("{hits}/{total} = {rate:.3} within eps (need >= 0.85), worst instance {worst_instance:.2}");
    if rate >= 0.85 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_9(log: &mut Log) -> Check {
    // Extra high-precision and discounted runs on top of the logged ones.
    for (k, mode) in [(0u64, Mode::HighPrecision), (1, Mode::Sublinear)] {
        let spec = gen_random_unichain(5, 2, 2, 0.3, (-1.0, 1.0), 9000 + k).map_err(|e| e.to_string())?;
        let params = MeanPayoffParams::new(0.05, 0.1, mode);
        for seed in 0..10u64 {
            let sol = solve_mean_payoff(&spec, 0, &params, &RngStream::new(seed)).map_err(|e| e.to_string())?;
            log.mean_payoff(&format!("game{k}/{mode:?}/{seed}"), &spec, 0, &params, &sol);
        }
    }
    let disc = GameSpec::markov_chain(vec![SparseRow::point(1), SparseRow::point(0)], &[1.0, 0.0], 0.5);
    for mode in [Mode::HighPrecision, Mode::Sublinear] {
        for seed in 0..10u64 {
            let report = ergovi_core::ergodic::solve_discounted(&disc, 1e-3, 0.05, mode, &RngStream::new(seed), RunOptions::default())
                .map_err(|e| e.to_string())?;
            log.runs.push(Logged {
                label: format!("discounted/{mode:?}/{seed}"),
                report,
                schedule: Schedule {
                    eps: 1e-3,
                    delta: 0.05,
                    lambda: 0.5,
                    bound: 2.0,
                    d1: 1.0,
                    d2: 1.0,
                    gamma: 0.5,
                    entries: 2,
                    mode,
                },
                w_limit: None,
            });
        }
    }
    let mut sublinear = 0;
    for run in &log.runs {
        audit(run)?;
        if run.schedule.mode == Mode::Sublinear {
            sublinear += 1;
        }
    }
    Ok(format!("{} solver calls audited ({sublinear} sublinear with zero exact offset passes)", log.runs.len()))
}

fn criterion_10() -> Check {
    let a = dobrushin_coefficient(&gen_cycle2(3.0, 1.0));
    let b = dobrushin_coefficient(&gen_chain(10, &[0.0; 10]));
    let c = dobrushin_coefficient(&gen_chain2action(10, &[0.0; 10], &[0.0; 10]));
    let detail = format!("cycle2 {a}, chain {b}, chain2action {c}");
    if a == 1.0 && b == 0.5 && c == 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_11(log: &Log) -> Check {
    let mut checked = 0;
    let mut worst = f64::NEG_INFINITY;
    for run in &log.runs {
        if let Some(limit) = run.w_limit {
            let excess = sup_norm(&run.report.w) - limit;
            worst = worst.max(excess);
            if excess > 0.0 {
                return Err(format!("{}: ‖w‖ exceeds R + eps by {excess:.2e}", run.label));
            }
            checked += 1;
        }
    }
    // The exact fixed point itself, through the inverse change of variables.
    for spec in [gen_cycle2(3.0, 1.0), gen_chain(6, &[1.0, -1.0, 0.5, 0.0, 2.0, -2.0])] {
        let phi = hitting_times_exact(&spec, 0).map_err(|e| e.to_string())?.value;
        let op = build_tphi(&spec, 0, &phi, PhiCheck::Slack(1e-10)).map_err(|e| e.to_string())?;
        let w = exact_value_iteration(&op, 1e-12, 10_000_000).map_err(|e| e.to_string())?.value;
        let (eta, _) = lphi_inverse(&w, &phi, 0);
        if sup_norm(&w) > max_abs_reward(&spec) + 1e-12 || eta.abs() > max_abs_reward(&spec) + 1e-12 {
            return Err(format!("exact fixed point {w:?} exceeds R"));
        }
    }
    Ok(format!("{checked} mean-payoff outputs, max ‖w‖ - (R + eps) = {worst:.2e}"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut log = Log::default();
    let family = unichain_family();
    let mut results: Vec<(u32, &str, Check)> = Vec::new();
    results.push((1, "cyclic fixture", criterion_1(&mut log)));
    results.push((2, "hitting-time closed forms", criterion_2()));
    results.push((3, "h-transform identities", criterion_3()));
    results.push((4, "T^phi contraction", criterion_4(&family)));
    results.push((5, "reduction correctness", criterion_5(&family)));
    results.push((6, "sampling guarantee", criterion_6()));
    results.push((7, "exact-sampling equivalence", criterion_7()));
    results.push((8, "end-to-end statistical", criterion_8(&mut log)));
    results.push((9, "sample accounting", criterion_9(&mut log)));
    results.push((10, "Dobrushin diagnostics", criterion_10()));
    results.push((11, "output bound", criterion_11(&log)));

    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} ({name}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} ({name}): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", results.len() - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
