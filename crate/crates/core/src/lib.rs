//! Online saddle-point learning: feasible sets, convex-concave payoffs, saddle
//! solvers, SP-FTL style online algorithms, online matrix games (full and bandit
//! feedback), online convex optimization with knapsacks, regret metrics and a
//! seeded experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a <= b)` also rejects NaN

pub mod error;
pub mod geometry;
pub mod harness;
pub mod knapsack;
pub mod linalg;
pub mod matrix_games;
pub mod metrics;
pub mod oracles;
pub mod osp;
pub mod payoffs;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::FeasibleSet;
pub use linalg::Matrix;
pub use payoffs::{Norm, Payoff, PayoffFunction, PayoffSum};
pub use solver::{SaddleSolution, SolverConfig};
