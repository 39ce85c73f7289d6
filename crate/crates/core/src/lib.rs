//! Learned SLAM-safe action filtering for a simulated planar robot.
//!
//! A tabular Q-function over (direction, heading change, co-visible
//! landmarks) is trained against a stochastic tracking-failure model and used
//! to veto planned steps that are likely to break visual SLAM.

pub mod baselines;
pub mod candidates;
pub mod error;
pub mod features;
pub mod filter;
pub mod harness;
pub mod oracle;
pub mod planner;
pub mod qlearn;
pub mod rng;
pub mod stats;
pub mod world;

pub use error::{Error, Result};
