//! JSON run reports. Field names are part of the versioned schema; bump
//! [`SCHEMA_VERSION`] on any incompatible change.

use ergovi_core::vrvi::{BatchKind, Mode, SolveReport};
use ergovi_core::{GameSpec, PolicyPair, SolverConfig};
use serde::Serialize;

pub const SCHEMA: &str = "ergovi-report";
pub const SCHEMA_VERSION: u32 = 1;

/// Common header and trailer around a command-specific body. Only
/// `wall_time_seconds` varies between identical invocations.
#[derive(Debug, Serialize)]
pub struct Envelope<T> {
    pub schema: &'static str,
    pub schema_version: u32,
    pub command: &'static str,
    pub argv: Vec<String>,
    #[serde(flatten)]
    pub body: T,
    pub wall_time_seconds: f64,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &'static str, argv: Vec<String>, body: T, wall_time_seconds: f64) -> Self {
        Self { schema: SCHEMA, schema_version: SCHEMA_VERSION, command, argv, body, wall_time_seconds }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::HighPrecision => "highprecision",
        Mode::Sublinear => "sublinear",
    }
}

/// Parameters of one epoch-solver call, with the derived `K` and `J`.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub lambda: f64,
    #[serde(rename = "W")]
    pub bound: f64,
    pub d1: f64,
    pub d2: f64,
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    #[serde(rename = "K")]
    pub epochs: usize,
    #[serde(rename = "J")]
    pub iterations: usize,
}

impl From<&SolverConfig> for PhaseConfig {
    fn from(c: &SolverConfig) -> Self {
        Self {
            epsilon: c.eps,
            delta: c.delta,
            lambda: c.lambda,
            bound: c.bound,
            d1: c.d1,
            d2: c.d2,
            gamma: c.gamma,
            epochs: c.epochs(),
            iterations: c.iterations(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PhaseAccounting {
    pub samples: u64,
    pub offset_samples: u64,
    pub iteration_samples: u64,
    pub epochs: usize,
    pub iterations: usize,
    pub sample_batches: usize,
    pub exact_offset_passes: usize,
    pub lift_evaluations: usize,
}

impl From<&SolveReport> for PhaseAccounting {
    fn from(r: &SolveReport) -> Self {
        let by_kind = |k: BatchKind| r.batches.iter().filter(|b| b.kind == k).map(|b| b.total()).sum();
        Self {
            samples: r.samples,
            offset_samples: by_kind(BatchKind::Offsets),
            iteration_samples: by_kind(BatchKind::Iteration),
            epochs: r.epochs,
            iterations: r.iterations,
            sample_batches: r.batches.len(),
            exact_offset_passes: r.exact_offset_passes,
            lift_evaluations: r.lift_evaluations,
        }
    }
}

/// Policies as external action ids: `sigma[i]` is MIN's action at state
/// `i + 1`, `tau[i][a]` MAX's reply to MIN's `a`-th action there.
#[derive(Debug, Clone, Serialize)]
pub struct Policies {
    pub sigma: Vec<i64>,
    pub tau: Vec<Vec<i64>>,
}

impl Policies {
    pub fn from_pair(spec: &GameSpec, pp: &PolicyPair) -> Self {
        let sigma = pp.sigma.iter().enumerate().map(|(i, &a)| spec.states[i].min_actions[a].label).collect();
        let tau = pp
            .tau
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(a, &b)| spec.entry(i, a, b).label).collect())
            .collect();
        Self { sigma, tau }
    }
}

#[derive(Debug, Serialize)]
pub struct MeanPayoffConfig {
    pub game: String,
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub mode: &'static str,
    pub renewal_state: usize,
    pub hitting_bound: f64,
    /// `"given"` or `"renewal-check"`.
    pub hitting_bound_source: &'static str,
    pub hitting_cap: f64,
    pub skip_check: bool,
    pub verify_phi: bool,
    pub max_samples: Option<u64>,
    #[serde(rename = "R")]
    pub reward_bound: f64,
    pub lambda_phi: f64,
    pub phi_phase: Option<PhaseConfig>,
    pub fixed_point_phase: PhaseConfig,
}

#[derive(Debug, Serialize)]
pub struct MeanPayoffAccounting {
    pub phi_phase: PhaseAccounting,
    pub fixed_point_phase: PhaseAccounting,
}

#[derive(Debug, Serialize)]
pub struct MeanPayoffReport {
    pub config: MeanPayoffConfig,
    pub eta: f64,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub phi: Vec<f64>,
    pub lambda_phi: f64,
    pub sigma: Option<Vec<i64>>,
    pub tau: Option<Vec<Vec<i64>>>,
    pub samples: u64,
    pub verified_phi: bool,
    /// Hitting-time estimate of the renewal check, when it ran.
    pub renewal_estimate: Option<Vec<f64>>,
    pub accounting: MeanPayoffAccounting,
}

#[derive(Debug, Serialize)]
pub struct DiscountedConfig {
    pub game: String,
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub mode: &'static str,
    pub max_samples: Option<u64>,
    #[serde(rename = "R")]
    pub reward_bound: f64,
    pub solver: PhaseConfig,
}

#[derive(Debug, Serialize)]
pub struct DiscountedReport {
    pub config: DiscountedConfig,
    pub w: Vec<f64>,
    pub sigma: Option<Vec<i64>>,
    pub tau: Option<Vec<Vec<i64>>>,
    pub samples: u64,
    pub accounting: PhaseAccounting,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub game: String,
    pub oracle: &'static str,
    pub renewal_state: Option<usize>,
    pub method: String,
    pub result: serde_json::Value,
}

#[derive(Debug, Serialize)]
pub struct RenewalCheck {
    pub accepted: bool,
    /// `‖φ‖_∞` of the accepted hitting-time estimate.
    pub hitting_bound: Option<f64>,
    /// Default `H` the solver would use.
    pub suggested_hitting_bound: Option<f64>,
    pub phi_estimate: Option<Vec<f64>>,
    pub reason: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct DiagnoseReport {
    pub game: String,
    pub n: usize,
    pub entries: usize,
    #[serde(rename = "R")]
    pub reward_bound: f64,
    #[serde(rename = "Gamma")]
    pub max_discount: f64,
    pub zero_player: bool,
    pub markovian: bool,
    pub undiscounted: bool,
    pub dobrushin: f64,
    pub renewal_state: usize,
    pub renewal_check: Option<RenewalCheck>,
    pub hitting_bound: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct GenReport {
    pub family: &'static str,
    pub output: Option<String>,
    pub n: usize,
    pub entries: usize,
}

#[derive(Debug, Serialize)]
pub struct SelftestCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub runs: usize,
    pub pass: bool,
    pub checks: Vec<SelftestCheck>,
}
