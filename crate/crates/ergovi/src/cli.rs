//! Command-line front end. Machine output is JSON on stdout (or `-o`);
//! short human summaries go to stderr.
//!
//! Exit codes: 0 success, 1 solver failure, 2 invalid input, 3 resource
//! cap, 4 renewal check rejected.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ergovi_core::ergodic::{
    check_renewal_state, solve_discounted, solve_mean_payoff, MeanPayoffParams, DEFAULT_HITTING_CAP, HITTING_MARGIN,
    PHI_ACCURACY,
};
use ergovi_core::instances::{gen_chain, gen_chain2action, gen_cycle2, gen_random_unichain};
use ergovi_core::operators::sup_norm;
use ergovi_core::oracles::{
    cw_bruteforce, dobrushin_coefficient, ergodic_residual, hitting_times_exact, mean_payoff_bruteforce,
    mean_payoff_by_enumeration,
};
use ergovi_core::vrvi::{Mode, RunOptions};
use ergovi_core::{Error, GameSpec, RngStream, SolverConfig};
use serde::Serialize;
use serde_json::json;

use crate::format::{self, FormatError};
use crate::report::*;
use crate::selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_RENEWAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ergovi", version, about = "Mean-payoff and discounted solvers for stochastic games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an example or random game file.
    Gen(GenArgs),
    /// Solve ηe + v = T(v) through the deflated h-transform.
    SolveMeanPayoff(MeanPayoffArgs),
    /// Solve w = T(w) for a game with all discounts below 1.
    SolveDiscounted(DiscountedArgs),
    /// Run a deterministic reference computation.
    Oracle(OracleArgs),
    /// Summarize constants, Dobrushin coefficient and the renewal check.
    Diagnose(DiagnoseArgs),
    /// Run the statistical self-checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    Cycle2,
    Chain,
    Chain2action,
    Random,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    pub family: Family,
    /// Number of states (chain, chain2action, random).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub r1: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub r2: f64,
    /// Comma-separated rewards; zeros by default.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub rewards: Option<Vec<f64>>,
    /// Rewards of the second action (chain2action).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub rewards_prime: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2)]
    pub a_max: usize,
    #[arg(long, default_value_t = 2)]
    pub b_max: usize,
    #[arg(long, default_value_t = 0.3)]
    pub p_min: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub reward_min: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub reward_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Highprecision,
    Sublinear,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Highprecision => Mode::HighPrecision,
            ModeArg::Sublinear => Mode::Sublinear,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, alias = "algorithm", value_enum, default_value = "highprecision")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Abort a solver phase once it would exceed this many draws.
    #[arg(long)]
    pub max_samples: Option<u64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeanPayoffArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Renewal state c (1-based).
    #[arg(long, default_value_t = 1)]
    pub renewal_state: usize,
    /// Upper bound H on the maximal hitting times of c.
    #[arg(long)]
    pub hitting_bound: Option<f64>,
    /// Divergence cap of the renewal check.
    #[arg(long, default_value_t = DEFAULT_HITTING_CAP)]
    pub hitting_cap: f64,
    /// Check the dominance inequality of φ exactly (default for highprecision).
    #[arg(long, conflicts_with = "no_verify_phi")]
    pub verify_phi: bool,
    /// Skip the exact φ check (default for sublinear).
    #[arg(long)]
    pub no_verify_phi: bool,
    /// Trust the renewal state; requires --hitting-bound.
    #[arg(long)]
    pub skip_check: bool,
}

#[derive(Debug, Args)]
pub struct DiscountedArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OracleKind {
    HittingTimes,
    Cw,
    MeanPayoff,
    Dobrushin,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub kind: OracleKind,
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub renewal_state: usize,
    /// Cap on enumerated policy pairs.
    #[arg(long, default_value_t = 100_000)]
    pub cap: u128,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub renewal_state: usize,
    #[arg(long, default_value_t = DEFAULT_HITTING_CAP)]
    pub hitting_cap: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Seeded runs per statistical check.
    #[arg(long, default_value_t = 200)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Format(_) | CliError::Usage(_) | CliError::Io(_) => EXIT_INVALID,
            CliError::Failed(_) => EXIT_FAILURE,
            CliError::Solver(e) => match e {
                Error::InvalidGame(_)
                | Error::InvalidParameter(_)
                | Error::InadmissiblePolicy { .. }
                | Error::Precondition(_) => EXIT_INVALID,
                Error::SampleBudgetExceeded { .. } | Error::EnumerationCap { .. } => EXIT_RESOURCE,
                Error::RenewalRejected { .. } => EXIT_RENEWAL,
                Error::PhiNotDominating { .. } | Error::NoConvergence { .. } | Error::Singular => EXIT_FAILURE,
            },
        }
    }
}

/// What a command produced: the JSON document and a one-line summary.
pub struct Output {
    pub json: String,
    pub summary: String,
    pub path: Option<PathBuf>,
    pub code: i32,
}

fn renewal_index(spec: &GameSpec, c: usize) -> Result<usize, CliError> {
    if c == 0 || c > spec.n {
        return Err(CliError::Usage(format!("--renewal-state {c} outside 1..={}", spec.n)));
    }
    Ok(c - 1)
}

fn envelope<T: Serialize>(command: &'static str, argv: &[String], body: T, start: Instant) -> String {
    Envelope::new(command, argv.to_vec(), body, start.elapsed().as_secs_f64()).to_json()
}

fn game_name(path: &std::path::Path) -> String {
    path.display().to_string()
}

fn rewards(given: &Option<Vec<f64>>, n: usize, flag: &str) -> Result<Vec<f64>, CliError> {
    match given {
        None => Ok(vec![0.0; n]),
        Some(r) if r.len() == n => Ok(r.clone()),
        Some(r) => Err(CliError::Usage(format!("{flag} has {} values, n = {n}", r.len()))),
    }
}

fn cmd_gen(args: &GenArgs, argv: &[String], start: Instant) -> Result<Output, CliError> {
    let need_n = |min: usize| match args.n {
        Some(n) if n >= min => Ok(n),
        Some(n) => Err(CliError::Usage(format!("--n {n} is below the minimum {min} for this family"))),
        None => Err(CliError::Usage("--n is required for this family".into())),
    };
    let (family, spec) = match args.family {
        Family::Cycle2 => ("cycle2", gen_cycle2(args.r1, args.r2)),
        Family::Chain => {
            let n = need_n(2)?;
            ("chain", gen_chain(n, &rewards(&args.rewards, n, "--rewards")?))
        }
        Family::Chain2action => {
            let n = need_n(3)?;
            let r = rewards(&args.rewards, n, "--rewards")?;
            let rp = rewards(&args.rewards_prime, n, "--rewards-prime")?;
            ("chain2action", gen_chain2action(n, &r, &rp))
        }
        Family::Random => {
            let n = need_n(1)?;
            let range = (args.reward_min, args.reward_max);
            ("random", gen_random_unichain(n, args.a_max, args.b_max, args.p_min, range, args.seed)?)
        }
    };
    let text = format::to_string(&spec);
    let body = GenReport {
        family,
        output: args.output.as_deref().map(game_name),
        n: spec.n,
        entries: spec.entry_count(),
    };
    let summary = format!("generated {family} game with {} states and {} entries", spec.n, spec.entry_count());
    match &args.output {
        // The game goes to the file, the report to stdout.
        Some(path) => {
            format::save(&spec, path)?;
            Ok(Output { json: envelope("gen", argv, body, start), summary, path: None, code: EXIT_OK })
        }
        None => Ok(Output { json: text, summary, path: None, code: EXIT_OK }),
    }
}

fn run_options(args: &SolverArgs) -> RunOptions {
    RunOptions { max_samples: args.max_samples, ..RunOptions::default() }
}

fn cmd_solve_mean_payoff(args: &MeanPayoffArgs, argv: &[String], start: Instant) -> Result<Output, CliError> {
    let s = &args.solver;
    let spec = format::load(&s.game)?;
    let c = renewal_index(&spec, args.renewal_state)?;
    let mode: Mode = s.mode.into();
    let mut params = MeanPayoffParams::new(s.epsilon, s.delta, mode);
    params.hitting_bound = args.hitting_bound;
    params.hitting_cap = args.hitting_cap;
    params.skip_check = args.skip_check;
    params.verify_phi = match (args.verify_phi, args.no_verify_phi) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    };
    params.run = run_options(s);
    let sol = solve_mean_payoff(&spec, c, &params, &RngStream::new(s.seed))?;

    let h = sol.htransform.hitting_bound;
    let phi_phase = (spec.n > 1).then(|| {
        PhaseConfig::from(
            &SolverConfig::new(PHI_ACCURACY, s.delta / 2.0, 1.0 - 1.0 / h, 1.0, 1.0).with_norm_bounds(1.0, h),
        )
    });
    let fixed = SolverConfig::new(s.epsilon, s.delta / 2.0, sol.htransform.lambda, sol.reward_bound, 1.0);
    let policies = sol.policy.as_ref().map(|pp| Policies::from_pair(&spec, pp));
    let body = MeanPayoffReport {
        config: MeanPayoffConfig {
            game: game_name(&s.game),
            seed: s.seed,
            epsilon: s.epsilon,
            delta: s.delta,
            mode: mode_name(mode),
            renewal_state: args.renewal_state,
            hitting_bound: h,
            hitting_bound_source: if args.hitting_bound.is_some() { "given" } else { "renewal-check" },
            hitting_cap: args.hitting_cap,
            skip_check: args.skip_check,
            verify_phi: params.verifies_phi(),
            max_samples: s.max_samples,
            reward_bound: sol.reward_bound,
            lambda_phi: sol.htransform.lambda,
            phi_phase,
            fixed_point_phase: PhaseConfig::from(&fixed),
        },
        eta: sol.eta,
        v: sol.v.clone(),
        w: sol.w.clone(),
        phi: sol.htransform.phi.clone(),
        lambda_phi: sol.htransform.lambda,
        sigma: policies.as_ref().map(|p| p.sigma.clone()),
        tau: policies.map(|p| p.tau),
        samples: sol.total_samples(),
        verified_phi: sol.verified_phi,
        renewal_estimate: sol.renewal_estimate.clone(),
        accounting: MeanPayoffAccounting {
            phi_phase: PhaseAccounting::from(&sol.phi_report),
            fixed_point_phase: PhaseAccounting::from(&sol.solve_report),
        },
    };
    let summary = format!(
        "eta = {:.6} (eps {}, {} samples, phi {})",
        sol.eta,
        s.epsilon,
        sol.total_samples(),
        if sol.verified_phi { "verified" } else { "unverified" }
    );
    Ok(Output {
        json: envelope("solve-mean-payoff", argv, body, start),
        summary,
        path: s.output.clone(),
        code: EXIT_OK,
    })
}

fn cmd_solve_discounted(args: &DiscountedArgs, argv: &[String], start: Instant) -> Result<Output, CliError> {
    let s = &args.solver;
    let spec = format::load(&s.game)?;
    let mode: Mode = s.mode.into();
    let report = solve_discounted(&spec, s.epsilon, s.delta, mode, &RngStream::new(s.seed), run_options(s))?;
    let k = spec.constants();
    let cfg = SolverConfig::new(s.epsilon, s.delta, k.max_discount, k.max_abs_reward / (1.0 - k.max_discount), k.max_discount);
    let policies = report.policy.as_ref().map(|pp| Policies::from_pair(&spec, pp));
    let body = DiscountedReport {
        config: DiscountedConfig {
            game: game_name(&s.game),
            seed: s.seed,
            epsilon: s.epsilon,
            delta: s.delta,
            mode: mode_name(mode),
            max_samples: s.max_samples,
            reward_bound: k.max_abs_reward,
            solver: PhaseConfig::from(&cfg),
        },
        w: report.w.clone(),
        sigma: policies.as_ref().map(|p| p.sigma.clone()),
        tau: policies.map(|p| p.tau),
        samples: report.samples,
        accounting: PhaseAccounting::from(&report),
    };
    let summary = format!("w computed to eps {} with {} samples", s.epsilon, report.samples);
    Ok(Output { json: envelope("solve-discounted", argv, body, start), summary, path: s.output.clone(), code: EXIT_OK })
}

fn cmd_oracle(args: &OracleArgs, argv: &[String], start: Instant) -> Result<Output, CliError> {
    let spec = format::load(&args.game)?;
    let (oracle, renewal, method, result, summary) = match args.kind {
        OracleKind::HittingTimes => {
            let c = renewal_index(&spec, args.renewal_state)?;
            let r = hitting_times_exact(&spec, c)?;
            let summary = format!("max hitting time {}", sup_norm(&r.value));
            let result = json!({ "phi": r.value, "residual": r.tolerance, "iterations": r.iterations });
            ("hitting-times", Some(args.renewal_state), r.method.to_string(), result, summary)
        }
        OracleKind::Cw => {
            let (rho, pp) = cw_bruteforce(&spec, args.cap)?;
            let p = Policies::from_pair(&spec, &pp);
            let result = json!({ "rho": rho, "sigma": p.sigma, "tau": p.tau });
            ("cw", None, "policy-enumeration".to_string(), result, format!("cw = {rho}"))
        }
        OracleKind::MeanPayoff => {
            let c = renewal_index(&spec, args.renewal_state)?;
            let (eta, v) = mean_payoff_bruteforce(&spec, c)?;
            let residual = ergodic_residual(&spec, eta, &v)?;
            let enumerated = match mean_payoff_by_enumeration(&spec, args.cap) {
                Ok(e) => Some(e),
                Err(Error::EnumerationCap { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let result = json!({ "eta": eta, "v": v, "residual": residual, "eta_enumeration": enumerated });
            ("mean-payoff", Some(args.renewal_state), "h-transform-value-iteration".to_string(), result, format!("eta = {eta}"))
        }
        OracleKind::Dobrushin => {
            let alpha = dobrushin_coefficient(&spec);
            ("dobrushin", None, "row-overlap".to_string(), json!({ "alpha": alpha }), format!("alpha = {alpha}"))
        }
    };
    let body = OracleReport { game: game_name(&args.game), oracle, renewal_state: renewal, method, result };
    Ok(Output { json: envelope("oracle", argv, body, start), summary, path: args.output.clone(), code: EXIT_OK })
}

fn cmd_diagnose(args: &DiagnoseArgs, argv: &[String], start: Instant) -> Result<Output, CliError> {
    let spec = format::load(&args.game)?;
    let c = renewal_index(&spec, args.renewal_state)?;
    let k = spec.constants();
    let (markovian, undiscounted) = (spec.is_markovian(), spec.is_undiscounted());
    let renewal_check = (markovian && undiscounted).then(|| match check_renewal_state(&spec, c, args.hitting_cap) {
        Ok(phi) => {
            let top = sup_norm(&phi);
            RenewalCheck {
                accepted: true,
                hitting_bound: Some(top),
                suggested_hitting_bound: Some(HITTING_MARGIN * top),
                phi_estimate: Some(phi),
                reason: None,
            }
        }
        Err(e) => RenewalCheck {
            accepted: false,
            hitting_bound: None,
            suggested_hitting_bound: None,
            phi_estimate: None,
            reason: Some(e.to_string()),
        },
    });
    let hitting_bound = renewal_check.as_ref().and_then(|r| r.hitting_bound);
    let dobrushin = dobrushin_coefficient(&spec);
    let summary = match hitting_bound {
        Some(h) => format!("dobrushin = {dobrushin}, hitting bound = {h:.6}"),
        None => format!("dobrushin = {dobrushin}, no hitting bound for state {}", args.renewal_state),
    };
    let body = DiagnoseReport {
        game: game_name(&args.game),
        n: spec.n,
        entries: k.entry_count,
        reward_bound: k.max_abs_reward,
        max_discount: k.max_discount,
        zero_player: spec.is_zero_player(),
        markovian,
        undiscounted,
        dobrushin,
        renewal_state: args.renewal_state,
        renewal_check,
        hitting_bound,
    };
    Ok(Output { json: envelope("diagnose", argv, body, start), summary, path: args.output.clone(), code: EXIT_OK })
}

fn cmd_selftest(args: &SelftestArgs, argv: &[String], start: Instant) -> Result<Output, CliError> {
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be positive".into()));
    }
    let report = selftest::run(args.runs, args.seed);
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    let summary = format!("selftest: {} checks, {failed} failed", report.checks.len());
    let code = if report.pass { EXIT_OK } else { EXIT_FAILURE };
    Ok(Output { json: envelope("selftest", argv, report, start), summary, path: args.output.clone(), code })
}

pub fn execute(cli: &Cli, argv: &[String]) -> Result<Output, CliError> {
    let start = Instant::now();
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, argv, start),
        Command::SolveMeanPayoff(a) => cmd_solve_mean_payoff(a, argv, start),
        Command::SolveDiscounted(a) => cmd_solve_discounted(a, argv, start),
        Command::Oracle(a) => cmd_oracle(a, argv, start),
        Command::Diagnose(a) => cmd_diagnose(a, argv, start),
        Command::Selftest(a) => cmd_selftest(a, argv, start),
    }
}

/// Caps the rayon pool from `ERGOVI_THREADS`.
fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("ERGOVI_THREADS") else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("ERGOVI_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Failed(format!("thread pool: {e}")))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let result = configure_threads().and_then(|_| execute(&cli, &argv));
    match result {
        Ok(out) => {
            let mut json = out.json;
            json.push('\n');
            match &out.path {
                Some(path) => {
                    if let Err(e) = fs::write(path, &json) {
                        eprintln!("error: {}: {e}", path.display());
                        return EXIT_INVALID;
                    }
                }
                None => print!("{json}"),
            }
            eprintln!("{}", out.summary);
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
