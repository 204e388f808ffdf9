//! Mean-payoff pipeline: renewal check, hitting-time scaling `φ`, and the
//! solve of `ηe + v = T(v), v_c = 0` through the fixed point of `T^φ`.
//!
//! Random streams: the `φ` phase uses label 1 of the caller's stream and the
//! fixed-point phase label 2.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{GameSpec, PolicyPair};
use crate::operators::{
    build_tm, build_tphi, check_phi, extend_residual, lphi_inverse, sup_distance, sup_norm, Contraction, HTransform,
    PhiCheck, StructuredOperator,
};
use crate::sampling::RngStream;
use crate::vrvi::{solve, Mode, RunOptions, SolveReport, SolverConfig};
use crate::{Error, Result};

/// Default divergence cap for [`check_renewal_state`].
pub const DEFAULT_HITTING_CAP: f64 = 1e6;

/// Margin applied to the renewal-check estimate when no hitting bound is
/// given.
pub const HITTING_MARGIN: f64 = 1.05;

/// Successive-iterate distance at which the renewal check stops.
pub const RENEWAL_STEP_TOLERANCE: f64 = 1e-10;

/// Accuracy of the `φ′` solve.
pub const PHI_ACCURACY: f64 = 0.25;

fn require_renewal_input(spec: &GameSpec, c: usize) -> Result<()> {
    spec.validate().into_result()?;
    if c >= spec.n {
        return Err(Error::InvalidParameter(format!("renewal state {} out of range 1..={}", c + 1, spec.n)));
    }
    if !spec.is_undiscounted() {
        return Err(Error::InvalidGame(String::from("mean-payoff instances need every discount equal to 1")));
    }
    if !spec.is_markovian() {
        return Err(Error::InvalidGame(String::from("mean-payoff instances need stochastic transition rows")));
    }
    Ok(())
}

/// Exact value iteration on `T^m` from 0. Accepts with the limit (extended
/// to the full state space) once successive iterates are within `1e-10`;
/// rejects as soon as an iterate exceeds `h_cap`, which certifies
/// `‖φ★‖_∞ > h_cap` or that `c` is not reached from every state.
pub fn check_renewal_state(spec: &GameSpec, c: usize, h_cap: f64) -> Result<Vec<f64>> {
    require_renewal_input(spec, c)?;
    if !(h_cap >= 1.0 && h_cap.is_finite()) {
        return Err(Error::InvalidParameter(format!("hitting cap must be finite and >= 1, got {h_cap}")));
    }
    if spec.n == 1 {
        return Ok(extend_residual(spec, c, &[]));
    }
    let op = build_tm(spec, c)?;
    // Iterates are monotone and converge at rate 1 - 1/‖φ★‖ <= 1 - 1/h_cap,
    // so this many steps suffice whenever ‖φ★‖ <= h_cap.
    let max_iter = libm::ceil(h_cap * libm::log(h_cap / RENEWAL_STEP_TOLERANCE) + 2.0) as usize;
    let mut x = vec![0.0; op.dim()];
    for _ in 0..max_iter {
        let next = op.apply(&x);
        let top = sup_norm(&next);
        if top > h_cap {
            return Err(Error::RenewalRejected {
                state: c,
                reason: format!("hitting-time iterate reached {top} > cap {h_cap}"),
            });
        }
        let step = sup_distance(&next, &x);
        x = next;
        if step < RENEWAL_STEP_TOLERANCE {
            let full = extend_residual(spec, c, &x);
            if sup_norm(&full) > h_cap {
                return Err(Error::RenewalRejected {
                    state: c,
                    reason: format!("hitting time of the renewal state exceeds cap {h_cap}"),
                });
            }
            return Ok(full);
        }
    }
    Err(Error::RenewalRejected { state: c, reason: format!("no convergence within {max_iter} iterations") })
}

/// Output of [`compute_phi`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhiEstimate {
    pub htransform: HTransform,
    /// Solver run on `T^m`; empty for one-state games.
    pub report: SolveReport,
    /// Whether `φ_i >= 1 + max P_(c)i φ` was checked exactly (and held).
    pub verified: bool,
}

/// `φ = 2φ′` where `φ′` approximates `φ★` to `1/4` through the randomized
/// solver on `T^m` with `λ = 1 - 1/H`, `W = 1`, `d1 = 1`, `d2 = H`.
/// With `verify`, a `φ` violating the dominance inequality is an error.
pub fn compute_phi(
    spec: &GameSpec,
    c: usize,
    hitting_bound: f64,
    delta: f64,
    mode: Mode,
    rng: &RngStream,
    run: RunOptions,
    verify: bool,
) -> Result<PhiEstimate> {
    require_renewal_input(spec, c)?;
    if !(hitting_bound >= 1.0 && hitting_bound.is_finite()) {
        return Err(Error::InvalidParameter(format!("hitting bound H must be finite and >= 1, got {hitting_bound}")));
    }
    let (phi_prime, report) = if spec.n == 1 {
        (extend_residual(spec, c, &[]), SolveReport::default())
    } else {
        let lambda = 1.0 - 1.0 / hitting_bound;
        let op = build_tm(spec, c)?.with_contraction(Contraction { factor: lambda, d1: 1.0, d2: hitting_bound });
        let cfg = SolverConfig::new(PHI_ACCURACY, delta, lambda, 1.0, 1.0)
            .with_norm_bounds(1.0, hitting_bound)
            .with_run(run);
        let report = solve(&op, &cfg, mode, rng)?;
        (extend_residual(spec, c, &report.w), report)
    };
    let phi: Vec<f64> = phi_prime.iter().map(|p| 2.0 * p).collect();
    if verify {
        check_phi(spec, c, &phi, PhiCheck::Exact)?;
    }
    let htransform = HTransform::new(c, phi, hitting_bound)?;
    Ok(PhiEstimate { htransform, report, verified: verify })
}

/// Parameters of [`solve_mean_payoff`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanPayoffParams {
    pub eps: f64,
    pub delta: f64,
    pub mode: Mode,
    /// `H >= ‖φ★‖_∞`; taken from the renewal check when `None`.
    pub hitting_bound: Option<f64>,
    /// Divergence cap of the renewal check.
    pub hitting_cap: f64,
    pub skip_check: bool,
    /// Exact dominance check of `φ`; defaults to on for
    /// [`Mode::HighPrecision`] and off for [`Mode::Sublinear`].
    pub verify_phi: Option<bool>,
    pub run: RunOptions,
}

impl MeanPayoffParams {
    pub fn new(eps: f64, delta: f64, mode: Mode) -> Self {
        Self {
            eps,
            delta,
            mode,
            hitting_bound: None,
            hitting_cap: DEFAULT_HITTING_CAP,
            skip_check: false,
            verify_phi: None,
            run: RunOptions::default(),
        }
    }

    pub fn verifies_phi(&self) -> bool {
        self.verify_phi.unwrap_or(self.mode == Mode::HighPrecision)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicSolution {
    pub eta: f64,
    /// Bias with `v_c = 0`.
    pub v: Vec<f64>,
    /// Approximate fixed point of `T^φ`.
    pub w: Vec<f64>,
    pub policy: Option<PolicyPair>,
    pub htransform: HTransform,
    /// Estimate returned by the renewal check, when it ran.
    pub renewal_estimate: Option<Vec<f64>>,
    pub phi_report: SolveReport,
    pub solve_report: SolveReport,
    pub verified_phi: bool,
    /// `R = max |r|`, the bound `W` of the fixed-point phase.
    pub reward_bound: f64,
}

impl ErgodicSolution {
    pub fn total_samples(&self) -> u64 {
        self.phi_report.samples + self.solve_report.samples
    }
}

/// `(η, v)` with `|η - η★| <= ε` and `‖v - v★‖_∞ <= 5ε/(1 - λ_φ)` with
/// probability `1 - δ`, split evenly between the `φ` phase and the
/// fixed-point phase.
pub fn solve_mean_payoff(spec: &GameSpec, c: usize, params: &MeanPayoffParams, rng: &RngStream) -> Result<ErgodicSolution> {
    require_renewal_input(spec, c)?;
    let renewal_estimate = if params.skip_check {
        None
    } else {
        Some(check_renewal_state(spec, c, params.hitting_cap)?)
    };
    let hitting_bound = match (params.hitting_bound, &renewal_estimate) {
        (Some(h), _) => h,
        (None, Some(phi)) => HITTING_MARGIN * sup_norm(phi),
        (None, None) => {
            return Err(Error::InvalidParameter(String::from("a hitting bound is required when the renewal check is skipped")))
        }
    };
    let half = params.delta / 2.0;
    let estimate = compute_phi(spec, c, hitting_bound, half, params.mode, &rng.fork(1), params.run, params.verifies_phi())?;
    let phi = &estimate.htransform.phi;
    // φ was either checked above or is trusted as is.
    let op: StructuredOperator = build_tphi(spec, c, phi, PhiCheck::Skip)?;
    let reward_bound = spec.constants().max_abs_reward;
    let cfg = SolverConfig::new(params.eps, half, estimate.htransform.lambda, reward_bound, 1.0).with_run(params.run);
    let report = solve(&op, &cfg, params.mode, &rng.fork(2))?;
    let (eta, v) = lphi_inverse(&report.w, phi, c);
    Ok(ErgodicSolution {
        eta,
        v,
        w: report.w.clone(),
        policy: report.policy.clone(),
        htransform: estimate.htransform,
        renewal_estimate,
        phi_report: estimate.report,
        solve_report: report,
        verified_phi: estimate.verified,
        reward_bound,
    })
}

/// Discounted game with `Γ < 1`: the solver runs on the Shapley operator
/// directly with `W = R / (1 - Γ)` and `λ = Γ`.
pub fn solve_discounted(spec: &GameSpec, eps: f64, delta: f64, mode: Mode, rng: &RngStream, run: RunOptions) -> Result<SolveReport> {
    spec.validate().into_result()?;
    let k = spec.constants();
    if !(k.max_discount < 1.0) {
        return Err(Error::InvalidParameter(format!("discounted solve needs Gamma < 1, got {}", k.max_discount)));
    }
    let op = StructuredOperator::shapley(spec)?;
    let cfg = SolverConfig::new(eps, delta, k.max_discount, k.max_abs_reward / (1.0 - k.max_discount), k.max_discount)
        .with_run(run);
    solve(&op, &cfg, mode, rng)
}
