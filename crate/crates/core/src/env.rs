//! Problem instances and per-round stochastic draws.
//!
//! An environment is a set of `N` arms with unknown mean rewards, of which a
//! random subset is available each round. Both the availability set and the
//! rewards are drawn i.i.d. over time. Arms are indexed `0..n_arms`
//! internally; user-facing encodings (config files, CSV, [`ArmSet`]'s
//! `Display`) are 1-based.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

/// Largest arm count for which the availability support is enumerated
/// exhaustively (the power set has `2^n` entries).
pub const DEFAULT_ENUMERATION_CAP: usize = 16;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("enumerating 2^{n_arms} availability sets exceeds the cap of 2^{cap}")]
    CapExceeded { n_arms: usize, cap: usize },
    #[error("invalid availability distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
}

/// A subset of the arms `{0..n}`, stored as a bitmask.
///
/// Used both for availability sets and for super arms. Supports up to 64
/// arms; exhaustive enumeration is separately capped at
/// [`DEFAULT_ENUMERATION_CAP`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ArmSet(u64);

impl ArmSet {
    pub const EMPTY: ArmSet = ArmSet(0);

    /// The full set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= 64, "at most 64 arms");
        if n == 64 {
            ArmSet(u64::MAX)
        } else {
            ArmSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(arm: usize) -> Self {
        assert!(arm < 64);
        ArmSet(1u64 << arm)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(arms: I) -> Self {
        let mut set = ArmSet::EMPTY;
        for arm in arms {
            set.insert(arm);
        }
        set
    }

    pub fn from_mask(mask: u64) -> Self {
        ArmSet(mask)
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn insert(&mut self, arm: usize) {
        assert!(arm < 64);
        self.0 |= 1u64 << arm;
    }

    pub fn remove(&mut self, arm: usize) {
        assert!(arm < 64);
        self.0 &= !(1u64 << arm);
    }

    pub fn contains(self, arm: usize) -> bool {
        arm < 64 && self.0 & (1u64 << arm) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: ArmSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: ArmSet) -> ArmSet {
        ArmSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ArmSet) -> ArmSet {
        ArmSet(self.0 & other.0)
    }

    /// Member arms in ascending index order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut mask = self.0;
        std::iter::from_fn(move || {
            if mask == 0 {
                None
            } else {
                let arm = mask.trailing_zeros() as usize;
                mask &= mask - 1;
                Some(arm)
            }
        })
    }
}

impl fmt::Display for ArmSet {
    /// Renders members 1-based, e.g. `{1,3}`, matching the user-facing
    /// arm numbering.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, arm) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", arm + 1)?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for ArmSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ArmSet{}", self)
    }
}

/// Distribution of the available-arm set.
#[derive(Debug, Clone, PartialEq)]
pub enum AvailabilityModel {
    /// Each arm is available independently with probability `p[i]`.
    IndependentBernoulli { p: Vec<f64> },
    /// Explicit support: pairs of (availability set, probability).
    Categorical { entries: Vec<(ArmSet, f64)> },
}

const PROB_SUM_TOL: f64 = 1e-9;

impl AvailabilityModel {
    /// Checks the model invariants against an arm count.
    pub fn validate(&self, n_arms: usize) -> Result<(), EnvError> {
        match self {
            AvailabilityModel::IndependentBernoulli { p } => {
                if p.len() != n_arms {
                    return Err(EnvError::InvalidDistribution(format!(
                        "expected {} availability probabilities, got {}",
                        n_arms,
                        p.len()
                    )));
                }
                for (i, &pi) in p.iter().enumerate() {
                    if !(0.0..=1.0).contains(&pi) {
                        return Err(EnvError::InvalidDistribution(format!(
                            "p[{}] = {} is outside [0, 1]",
                            i + 1,
                            pi
                        )));
                    }
                }
            }
            AvailabilityModel::Categorical { entries } => {
                let full = ArmSet::full(n_arms);
                let mut seen = std::collections::BTreeSet::new();
                let mut total = 0.0;
                for &(set, prob) in entries {
                    if !set.is_subset_of(full) {
                        return Err(EnvError::InvalidDistribution(format!(
                            "availability set {} has arms outside 1..={}",
                            set, n_arms
                        )));
                    }
                    if !seen.insert(set) {
                        return Err(EnvError::InvalidDistribution(format!(
                            "duplicate availability set {}",
                            set
                        )));
                    }
                    if !prob.is_finite() || prob < 0.0 {
                        return Err(EnvError::InvalidDistribution(format!(
                            "probability {} of set {} is not a nonnegative number",
                            prob, set
                        )));
                    }
                    total += prob;
                }
                if (total - 1.0).abs() > PROB_SUM_TOL {
                    return Err(EnvError::InvalidDistribution(format!(
                        "probabilities sum to {}, expected 1",
                        total
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-arm reward distribution, bounded on `[0, 1]` with the configured mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardModel {
    /// `X_i ~ Bernoulli(mu_i)`.
    Bernoulli,
    /// `X_i = mu_i` deterministically. Degenerate but bounded; useful for
    /// noise-free playback and tests.
    Deterministic,
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentConfig {
    pub n_arms: usize,
    /// Maximum number of arms playable per round (super-arm size cap).
    pub max_plays: usize,
    /// Mean rewards, each in `[0, 1]`.
    pub means: Vec<f64>,
    /// Positive reward weights.
    pub weights: Vec<f64>,
    /// Required minimum selection fraction per arm, each in `(0, 1)`.
    pub min_fractions: Vec<f64>,
    pub availability: AvailabilityModel,
    pub reward_model: RewardModel,
}

impl EnvironmentConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.n_arms == 0 || self.n_arms > 64 {
            return Err(EnvError::InvalidConfig(format!(
                "n_arms = {} is outside 1..=64",
                self.n_arms
            )));
        }
        if self.max_plays < 1 || self.max_plays > self.n_arms {
            return Err(EnvError::InvalidConfig(format!(
                "max_plays = {} is outside 1..={}",
                self.max_plays, self.n_arms
            )));
        }
        let check_len = |name: &str, len: usize| -> Result<(), EnvError> {
            if len != self.n_arms {
                Err(EnvError::InvalidConfig(format!(
                    "{} has {} entries, expected {}",
                    name, len, self.n_arms
                )))
            } else {
                Ok(())
            }
        };
        check_len("means", self.means.len())?;
        check_len("weights", self.weights.len())?;
        check_len("min_fractions", self.min_fractions.len())?;
        for (i, &mu) in self.means.iter().enumerate() {
            if !(0.0..=1.0).contains(&mu) {
                return Err(EnvError::InvalidConfig(format!(
                    "means[{}] = {} is outside [0, 1]",
                    i + 1,
                    mu
                )));
            }
        }
        for (i, &w) in self.weights.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(EnvError::InvalidConfig(format!(
                    "weights[{}] = {} must be positive and finite",
                    i + 1,
                    w
                )));
            }
        }
        for (i, &r) in self.min_fractions.iter().enumerate() {
            if !r.is_finite() || r <= 0.0 || r >= 1.0 {
                return Err(EnvError::InvalidConfig(format!(
                    "min_fractions[{}] = {} is outside (0, 1)",
                    i + 1,
                    r
                )));
            }
        }
        self.availability.validate(self.n_arms)
    }

    /// Largest reward weight; enters the stability and regret bounds.
    pub fn w_max(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::MIN, f64::max)
    }
}

/// One round's draw: the available set and every arm's realized reward.
///
/// Rewards are drawn for all arms but policies only ever observe the entries
/// of arms they played (semi-bandit feedback); the simulation loop enforces
/// that by recording played rewards only.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundDraw {
    pub available: ArmSet,
    pub rewards: Vec<f64>,
}

/// Exact probability mass function of the availability set.
///
/// For the independent model this enumerates all `2^n` subsets with
/// `P(Z) = prod_{i in Z} p_i * prod_{i not in Z} (1 - p_i)`; a categorical
/// model passes its declared support through. Ordered by bitmask for
/// deterministic downstream iteration.
pub fn availability_pmf(
    model: &AvailabilityModel,
    n_arms: usize,
) -> Result<BTreeMap<ArmSet, f64>, EnvError> {
    model.validate(n_arms)?;
    match model {
        AvailabilityModel::IndependentBernoulli { p } => {
            if n_arms > DEFAULT_ENUMERATION_CAP {
                return Err(EnvError::CapExceeded {
                    n_arms,
                    cap: DEFAULT_ENUMERATION_CAP,
                });
            }
            let mut pmf = BTreeMap::new();
            for mask in 0u64..(1u64 << n_arms) {
                let set = ArmSet::from_mask(mask);
                let mut prob = 1.0;
                for (i, &pi) in p.iter().enumerate() {
                    prob *= if set.contains(i) { pi } else { 1.0 - pi };
                }
                pmf.insert(set, prob);
            }
            Ok(pmf)
        }
        AvailabilityModel::Categorical { entries } => {
            Ok(entries.iter().cloned().collect())
        }
    }
}

/// Draws one round: the available set, then every arm's reward, in arm
/// order. Fully determined by the `rng` stream, so identical seeded streams
/// reproduce identical draws.
pub fn sample_round<R: Rng + ?Sized>(config: &EnvironmentConfig, rng: &mut R) -> RoundDraw {
    let available = match &config.availability {
        AvailabilityModel::IndependentBernoulli { p } => {
            let mut set = ArmSet::EMPTY;
            for (i, &pi) in p.iter().enumerate() {
                if rng.gen::<f64>() < pi {
                    set.insert(i);
                }
            }
            set
        }
        AvailabilityModel::Categorical { entries } => {
            let u = rng.gen::<f64>();
            let mut cum = 0.0;
            let mut drawn = entries.last().map(|&(s, _)| s).unwrap_or(ArmSet::EMPTY);
            for &(set, prob) in entries {
                cum += prob;
                if u < cum {
                    drawn = set;
                    break;
                }
            }
            drawn
        }
    };
    let rewards = config
        .means
        .iter()
        .map(|&mu| match config.reward_model {
            RewardModel::Bernoulli => {
                if rng.gen::<f64>() < mu {
                    1.0
                } else {
                    0.0
                }
            }
            RewardModel::Deterministic => mu,
        })
        .collect();
    RoundDraw { available, rewards }
}
