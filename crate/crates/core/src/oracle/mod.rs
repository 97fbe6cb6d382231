//! Offline LP oracle for the optimal availability-only policy.
//!
//! With known mean rewards, the best stationary policy that observes only
//! the availability set solves
//!
//! ```text
//! max   sum_Z P(Z) sum_{S in S(Z)} q_S(Z) sum_{i in S} w_i mu_i
//! s.t.  sum_Z P(Z) sum_{S in S(Z), S ∋ i} q_S(Z) >= r_i   for every arm i
//!       sum_{S in S(Z)} q_S(Z) = 1                        for every Z
//!       q_S(Z) in [0, 1]
//! ```
//!
//! over one variable per (availability set, feasible super arm) pair. The
//! optimum `R*` anchors every regret computation. The same machinery, with a
//! free slack variable added to the fairness rows, yields the feasibility
//! margin: the largest `eps` such that `r + eps` is still supportable.

mod simplex;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::env::{availability_pmf, ArmSet, EnvError, EnvironmentConfig};
use crate::policy::{AOnlyPolicy, SuperArmDistribution};
use simplex::{Constraint, LinearProgram, Outcome, Relation, SimplexError};

/// Hard cap on the number of LP variables `sum_Z |S(Z)|`.
pub const DEFAULT_VARIABLE_CAP: usize = 200_000;

/// Feasibility tolerance used for the LP and all derived quantities.
pub const LP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("problem too large to enumerate: {0}")]
    CapExceeded(String),
    #[error("LP solver failed: {0}")]
    NumericalFailure(String),
    #[error("availability set {0} is not covered by the policy")]
    UnknownAvailabilitySet(ArmSet),
    #[error(transparent)]
    InvalidConfig(EnvError),
}

impl From<EnvError> for OracleError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::CapExceeded { n_arms, cap } => OracleError::CapExceeded(format!(
                "2^{} availability sets exceed the enumeration cap of 2^{}",
                n_arms, cap
            )),
            other => OracleError::InvalidConfig(other),
        }
    }
}

impl From<SimplexError> for OracleError {
    fn from(e: SimplexError) -> Self {
        OracleError::NumericalFailure(e.to_string())
    }
}

/// Result of the offline LP.
#[derive(Debug, Clone)]
pub enum LpSolution {
    Optimal {
        /// The optimal distributions `q*`.
        policy: AOnlyPolicy,
        /// Expected weighted reward per round under `q*`.
        optimal_reward: f64,
    },
    /// The fairness requirement cannot be met by any policy.
    Infeasible,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpSolution::Optimal { .. })
    }

    pub fn optimal_reward(&self) -> Option<f64> {
        match self {
            LpSolution::Optimal { optimal_reward, .. } => Some(*optimal_reward),
            LpSolution::Infeasible => None,
        }
    }

    pub fn policy(&self) -> Option<&AOnlyPolicy> {
        match self {
            LpSolution::Optimal { policy, .. } => Some(policy),
            LpSolution::Infeasible => None,
        }
    }
}

/// Largest uniform slack `eps` with `r + eps` still supportable; negative
/// when `r` itself is not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityMargin {
    pub epsilon: f64,
}

/// Expected per-round reward and per-arm play fractions of a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvaluation {
    pub expected_reward: f64,
    pub expected_fractions: Vec<f64>,
}

/// Enumerated LP skeleton: positive-probability availability sets and one
/// variable per feasible super arm of each.
struct LpStructure {
    /// (availability set, probability), ascending bitmask order, P > 0 only.
    support: Vec<(ArmSet, f64)>,
    /// Variable j belongs to support entry `owner[j]` and plays `arm_set[j]`.
    owner: Vec<usize>,
    arm_set: Vec<ArmSet>,
    /// Variables of support entry z are `offsets[z]..offsets[z + 1]`.
    offsets: Vec<usize>,
}

/// All subsets of `z` with at most `m` members, ascending bitmask order.
fn super_arms(z: ArmSet, m: usize) -> Vec<ArmSet> {
    let mask = z.mask();
    let mut out = Vec::new();
    let mut sub = 0u64;
    loop {
        if (sub.count_ones() as usize) <= m {
            out.push(ArmSet::from_mask(sub));
        }
        if sub == mask {
            break;
        }
        sub = sub.wrapping_sub(mask) & mask;
    }
    out
}

fn enumerate_structure(config: &EnvironmentConfig) -> Result<LpStructure, OracleError> {
    config.validate()?;
    let pmf = availability_pmf(&config.availability, config.n_arms)?;
    let support: Vec<(ArmSet, f64)> = pmf.into_iter().filter(|&(_, p)| p > 0.0).collect();

    let mut owner = Vec::new();
    let mut arm_set = Vec::new();
    let mut offsets = Vec::with_capacity(support.len() + 1);
    offsets.push(0);
    for (z_idx, &(z, _)) in support.iter().enumerate() {
        for s in super_arms(z, config.max_plays) {
            owner.push(z_idx);
            arm_set.push(s);
            if owner.len() > DEFAULT_VARIABLE_CAP {
                return Err(OracleError::CapExceeded(format!(
                    "more than {} q variables required",
                    DEFAULT_VARIABLE_CAP
                )));
            }
        }
        offsets.push(owner.len());
    }
    Ok(LpStructure {
        support,
        owner,
        arm_set,
        offsets,
    })
}

/// Builds the LP rows shared by the solve and margin programs: `n_arms`
/// fairness rows followed by one normalization row per support entry.
/// `margin_vars` appends the (eps+, eps-) split of a free slack variable
/// subtracted from every fairness row.
fn build_lp(
    config: &EnvironmentConfig,
    structure: &LpStructure,
    margin_vars: bool,
) -> LinearProgram {
    let n = config.n_arms;
    let n_q = structure.owner.len();
    let n_vars = n_q + if margin_vars { 2 } else { 0 };

    let mut objective = vec![0.0; n_vars];
    let mut fairness: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut normalization: Vec<Vec<(usize, f64)>> = vec![Vec::new(); structure.support.len()];

    for j in 0..n_q {
        let z_idx = structure.owner[j];
        let prob = structure.support[z_idx].1;
        let s = structure.arm_set[j];
        let mut value = 0.0;
        for i in s.iter() {
            value += config.weights[i] * config.means[i];
            fairness[i].push((j, prob));
        }
        normalization[z_idx].push((j, 1.0));
        if !margin_vars {
            objective[j] = prob * value;
        }
    }

    if margin_vars {
        objective[n_q] = 1.0;
        objective[n_q + 1] = -1.0;
    }

    let mut constraints = Vec::with_capacity(n + structure.support.len());
    for (i, mut coeffs) in fairness.into_iter().enumerate() {
        if margin_vars {
            coeffs.push((n_q, -1.0));
            coeffs.push((n_q + 1, 1.0));
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::GreaterEq,
            rhs: config.min_fractions[i],
        });
    }
    for coeffs in normalization {
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Eq,
            rhs: 1.0,
        });
    }

    LinearProgram {
        n_vars,
        objective,
        constraints,
    }
}

/// Solves the offline LP, returning the optimal policy `q*` and reward `R*`
/// or `Infeasible` when the fraction requirement cannot be supported.
pub fn solve_offline_lp(config: &EnvironmentConfig) -> Result<LpSolution, OracleError> {
    let structure = enumerate_structure(config)?;
    let lp = build_lp(config, &structure, false);
    let x = match simplex::solve(&lp)? {
        Outcome::Infeasible => return Ok(LpSolution::Infeasible),
        Outcome::Optimal { x, .. } => x,
    };

    let mut policy = AOnlyPolicy::new();
    for (z_idx, &(z, _)) in structure.support.iter().enumerate() {
        let range = structure.offsets[z_idx]..structure.offsets[z_idx + 1];
        let arms: Vec<ArmSet> = range.clone().map(|j| structure.arm_set[j]).collect();
        let mut probs: Vec<f64> = range.map(|j| x[j].clamp(0.0, 1.0)).collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(OracleError::NumericalFailure(format!(
                "distribution for {} sums to {}",
                z, total
            )));
        }
        for p in &mut probs {
            *p /= total;
        }
        let dist = SuperArmDistribution::new(arms, probs)
            .map_err(|e| OracleError::NumericalFailure(e.to_string()))?;
        policy
            .insert(z, dist)
            .map_err(|e| OracleError::NumericalFailure(e.to_string()))?;
    }

    let evaluation = evaluate_policy(config, &policy)?;
    Ok(LpSolution::Optimal {
        policy,
        optimal_reward: evaluation.expected_reward,
    })
}

/// Maximizes the uniform slack `eps` over the same feasible set, with `eps`
/// as an explicit (free) LP variable rather than by bisection.
pub fn feasibility_margin(config: &EnvironmentConfig) -> Result<FeasibilityMargin, OracleError> {
    let structure = enumerate_structure(config)?;
    let lp = build_lp(config, &structure, true);
    match simplex::solve(&lp)? {
        // The objective is eps+ - eps-, i.e. the margin itself.
        Outcome::Optimal { objective, .. } => Ok(FeasibilityMargin { epsilon: objective }),
        // The margin program is feasible for any valid config (eps can go
        // arbitrarily negative), so this indicates a solver breakdown.
        Outcome::Infeasible => Err(OracleError::NumericalFailure(
            "margin program reported infeasible".to_string(),
        )),
    }
}

/// Expected reward and per-arm play fractions of a fixed policy under the
/// config's availability distribution. Sets with probability zero are
/// ignored; a positive-probability set missing from the policy is an error.
pub fn evaluate_policy(
    config: &EnvironmentConfig,
    policy: &AOnlyPolicy,
) -> Result<PolicyEvaluation, OracleError> {
    config.validate()?;
    let pmf: BTreeMap<ArmSet, f64> = availability_pmf(&config.availability, config.n_arms)?;
    let mut expected_reward = 0.0;
    let mut expected_fractions = vec![0.0; config.n_arms];
    for (&z, &prob) in &pmf {
        if prob == 0.0 {
            continue;
        }
        let dist = policy
            .distribution(z)
            .ok_or(OracleError::UnknownAvailabilitySet(z))?;
        for (s, q) in dist.entries() {
            let mut value = 0.0;
            for i in s.iter() {
                value += config.weights[i] * config.means[i];
                expected_fractions[i] += prob * q;
            }
            expected_reward += prob * q * value;
        }
    }
    Ok(PolicyEvaluation {
        expected_reward,
        expected_fractions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{AvailabilityModel, RewardModel};

    fn always_available(n: usize, m: usize, means: &[f64], r: &[f64]) -> EnvironmentConfig {
        EnvironmentConfig {
            n_arms: n,
            max_plays: m,
            means: means.to_vec(),
            weights: vec![1.0; n],
            min_fractions: r.to_vec(),
            availability: AvailabilityModel::IndependentBernoulli { p: vec![1.0; n] },
            reward_model: RewardModel::Bernoulli,
        }
    }

    #[test]
    fn super_arm_enumeration() {
        let z = ArmSet::from_indices([0, 2]);
        let arms = super_arms(z, 1);
        assert_eq!(
            arms,
            vec![ArmSet::EMPTY, ArmSet::singleton(0), ArmSet::singleton(2)]
        );
        let all = super_arms(ArmSet::full(3), 3);
        assert_eq!(all.len(), 8);
        let capped = super_arms(ArmSet::full(3), 2);
        assert_eq!(capped.len(), 7);
    }

    #[test]
    fn two_arm_example() {
        let cfg = always_available(2, 1, &[0.9, 0.1], &[0.2, 0.2]);
        match solve_offline_lp(&cfg).unwrap() {
            LpSolution::Optimal {
                policy,
                optimal_reward,
            } => {
                assert!((optimal_reward - 0.74).abs() < 1e-9, "{}", optimal_reward);
                let eval = evaluate_policy(&cfg, &policy).unwrap();
                assert!((eval.expected_fractions[0] - 0.8).abs() < 1e-9);
                assert!((eval.expected_fractions[1] - 0.2).abs() < 1e-9);
            }
            LpSolution::Infeasible => panic!("feasible instance"),
        }
    }

    #[test]
    fn single_arm_plays_always() {
        let cfg = always_available(1, 1, &[0.6], &[0.5]);
        match solve_offline_lp(&cfg).unwrap() {
            LpSolution::Optimal {
                policy,
                optimal_reward,
            } => {
                assert!((optimal_reward - 0.6).abs() < 1e-9);
                let eval = evaluate_policy(&cfg, &policy).unwrap();
                assert!((eval.expected_fractions[0] - 1.0).abs() < 1e-9);
            }
            LpSolution::Infeasible => panic!("feasible instance"),
        }
    }

    #[test]
    fn overcommitted_fractions_infeasible() {
        let cfg = always_available(2, 1, &[0.9, 0.1], &[0.6, 0.6]);
        assert!(matches!(
            solve_offline_lp(&cfg).unwrap(),
            LpSolution::Infeasible
        ));
    }

    #[test]
    fn margin_examples() {
        let one = always_available(1, 1, &[0.6], &[0.5]);
        let m = feasibility_margin(&one).unwrap();
        assert!((m.epsilon - 0.5).abs() < 1e-9, "{}", m.epsilon);

        let boundary = always_available(2, 1, &[0.9, 0.1], &[0.5, 0.5]);
        let m = feasibility_margin(&boundary).unwrap();
        assert!(m.epsilon.abs() < 1e-9, "{}", m.epsilon);

        let roomy = always_available(2, 2, &[0.9, 0.1], &[0.5, 0.5]);
        let m = feasibility_margin(&roomy).unwrap();
        assert!((m.epsilon - 0.5).abs() < 1e-9, "{}", m.epsilon);
    }

    #[test]
    fn margin_negative_when_infeasible() {
        let cfg = always_available(2, 1, &[0.9, 0.1], &[0.6, 0.6]);
        let m = feasibility_margin(&cfg).unwrap();
        assert!((m.epsilon + 0.1).abs() < 1e-9, "{}", m.epsilon);
    }

    #[test]
    fn evaluate_policy_examples() {
        let cfg = always_available(1, 1, &[0.6], &[0.5]);
        // Always play the arm with weight 2.
        let mut cfg2 = cfg.clone();
        cfg2.weights = vec![2.0];
        let mut policy = AOnlyPolicy::new();
        policy
            .insert(
                ArmSet::full(1),
                SuperArmDistribution::new(vec![ArmSet::singleton(0)], vec![1.0]).unwrap(),
            )
            .unwrap();
        let eval = evaluate_policy(&cfg2, &policy).unwrap();
        assert!((eval.expected_reward - 1.2).abs() < 1e-12);
        assert!((eval.expected_fractions[0] - 1.0).abs() < 1e-12);

        // A policy that always plays the empty set earns nothing.
        let mut empty = AOnlyPolicy::new();
        empty
            .insert(
                ArmSet::full(1),
                SuperArmDistribution::new(vec![ArmSet::EMPTY], vec![1.0]).unwrap(),
            )
            .unwrap();
        let eval = evaluate_policy(&cfg, &empty).unwrap();
        assert_eq!(eval.expected_reward, 0.0);
        assert_eq!(eval.expected_fractions, vec![0.0]);
    }

    #[test]
    fn evaluate_policy_unknown_set() {
        let cfg = always_available(2, 1, &[0.5, 0.5], &[0.2, 0.2]);
        let policy = AOnlyPolicy::new();
        assert!(matches!(
            evaluate_policy(&cfg, &policy),
            Err(OracleError::UnknownAvailabilitySet(_))
        ));
    }

    #[test]
    fn play_everything_when_unconstrained() {
        // m = N with all arms always available: playing everything is
        // optimal, so R* is the full weighted mean sum.
        let cfg = EnvironmentConfig {
            weights: vec![1.5, 0.5, 2.0],
            ..always_available(3, 3, &[0.3, 0.8, 0.6], &[0.1, 0.2, 0.3])
        };
        let solution = solve_offline_lp(&cfg).unwrap();
        let expected = 1.5 * 0.3 + 0.5 * 0.8 + 2.0 * 0.6;
        assert!((solution.optimal_reward().unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn variable_cap_enforced() {
        // 2^14 availability sets with m = 2 blow past the variable cap.
        let cfg = EnvironmentConfig {
            n_arms: 14,
            max_plays: 2,
            means: vec![0.5; 14],
            weights: vec![1.0; 14],
            min_fractions: vec![0.01; 14],
            availability: AvailabilityModel::IndependentBernoulli { p: vec![0.5; 14] },
            reward_model: RewardModel::Bernoulli,
        };
        assert!(matches!(
            solve_offline_lp(&cfg),
            Err(OracleError::CapExceeded(_))
        ));
    }

    #[test]
    fn enumeration_cap_maps_to_oracle_cap() {
        let cfg = EnvironmentConfig {
            n_arms: 17,
            max_plays: 1,
            means: vec![0.5; 17],
            weights: vec![1.0; 17],
            min_fractions: vec![0.01; 17],
            availability: AvailabilityModel::IndependentBernoulli { p: vec![0.5; 17] },
            reward_model: RewardModel::Bernoulli,
        };
        assert!(matches!(
            solve_offline_lp(&cfg),
            Err(OracleError::CapExceeded(_))
        ));
    }

    #[test]
    fn degenerate_sets_dropped_from_lp() {
        // Arm 2 never available: sets containing it have probability zero
        // and must not appear in the policy's support.
        let cfg = EnvironmentConfig {
            availability: AvailabilityModel::IndependentBernoulli { p: vec![1.0, 0.0] },
            ..always_available(2, 1, &[0.9, 0.1], &[0.2, 0.001])
        };
        // r_2 > 0 cannot be met if arm 2 never shows up.
        assert!(matches!(
            solve_offline_lp(&cfg).unwrap(),
            LpSolution::Infeasible
        ));

        let mut cfg_ok = cfg;
        cfg_ok.min_fractions = vec![0.2, 0.001];
        // Still infeasible; relax by making arm 2 sometimes available.
        if let AvailabilityModel::IndependentBernoulli { p } = &mut cfg_ok.availability {
            p[1] = 0.5;
        }
        let solution = solve_offline_lp(&cfg_ok).unwrap();
        let policy = solution.policy().unwrap();
        // Probability-zero sets (none here beyond the empty complement
        // structure) are simply absent; all supported sets contain arm 1.
        for (z, _) in policy.support() {
            assert!(z.contains(0));
        }
    }
}
