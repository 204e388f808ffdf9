//! Mean-payoff solvers for Markov decision processes and perfect-information
//! zero-sum stochastic games.
//!
//! The mean-payoff equation `ηe + v = T(v), v_c = 0` is turned into the fixed
//! point of a sup-norm contraction by deflating a renewal state `c` and
//! rescaling with a vector of (approximate) maximal hitting times. The fixed
//! point is then computed with variance-reduced randomized value iteration,
//! which only ever touches transition rows through O(1) categorical draws.
//!
//! The crate is `no_std` and only needs `alloc`. Enabling the `parallel`
//! feature evaluates the per-entry sampling loop on the rayon pool; results
//! are bitwise identical to the sequential path because every entry draws
//! from its own counter-based stream.
//!
//! Module map:
//!
//! - [`model`]: game data, validation, derived constants, policy matrices.
//! - [`sampling`]: counter-based streams, alias tables, approximate transitions.
//! - [`operators`]: structured Shapley operators, deflation, h-transform, norms.
//! - [`vrvi`]: the randomized value iteration family.
//! - [`ergodic`]: renewal check, hitting-time scaling, mean-payoff pipeline.
//! - [`oracles`]: deterministic reference computations used by the tests.
//! - [`instances`]: generators for the example families and random instances.
#![no_std]

extern crate alloc;

mod error;
mod linalg;

pub mod ergodic;
pub mod instances;
pub mod model;
pub mod operators;
pub mod oracles;
pub mod sampling;
pub mod vrvi;

pub use error::{Error, Result};
pub use model::{Entry, GameConstants, GameSpec, MinAction, PolicyPair, SparseRow, State};
pub use operators::{HTransform, StructuredOperator, WeightedNorm};
pub use sampling::{AliasTable, RngStream};
pub use vrvi::{Estimator, SolveReport, SolverConfig};
