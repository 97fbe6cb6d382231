//! Simulation library for combinatorial sleeping bandits with per-arm
//! fairness constraints.
//!
//! A player repeatedly selects a super arm (a subset of the currently
//! available arms, at most `m` of them) and collects a weighted sum of the
//! played arms' random rewards, while every arm `i` must be played in at
//! least a fraction `r_i` of rounds in the long run. The crate provides:
//!
//! - [`env`]: problem instances and their per-round stochastic draws
//!   (available-arm sets and realized rewards);
//! - [`policy`]: the LFG learning policy (truncated UCB estimates combined
//!   with fairness virtual queues), the fairness-oblivious LLRS baseline,
//!   and playback of fixed availability-only policies;
//! - [`oracle`]: an exact LP solver for the best stationary
//!   availability-only policy, its reward `R*`, and the feasibility margin
//!   of the fairness requirement;
//! - [`metrics`]: regret series, selection fractions, queue statistics and
//!   the closed-form stability/regret bounds, plus their CSV encodings.

pub mod env;
pub mod metrics;
pub mod oracle;
pub mod policy;

pub use env::{ArmSet, AvailabilityModel, EnvironmentConfig, RewardModel, RoundDraw};
pub use policy::{ActionVector, AOnlyPolicy, LfgState};
