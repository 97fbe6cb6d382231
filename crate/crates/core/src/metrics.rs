//! Run traces and the quantities computed from them: regret series,
//! selection fractions, queue statistics, and the closed-form bounds.
//!
//! Expectations are estimated by averaging across independent runs; every
//! aggregate is reported with its sample standard error and sums runs in a
//! fixed order so repeated evaluations are bit-identical.

use std::fmt::Write as _;

use thiserror::Error;

use crate::env::ArmSet;
use crate::policy::ActionVector;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("traces disagree: {0}")]
    MismatchedTraces(String),
    #[error("invalid checkpoints: {0}")]
    InvalidCheckpoints(String),
}

/// Per-round record of one simulated run.
///
/// Rewards are stored only for played arms (semi-bandit feedback), flattened
/// in arm order within each round; queue snapshots are the values the policy
/// used in that round (all zeros for queue-less policies).
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub policy_label: String,
    pub seed: u64,
    pub n_arms: usize,
    available: Vec<ArmSet>,
    actions: Vec<ActionVector>,
    rewards: Vec<f64>,
    queues: Vec<f64>,
}

/// Borrowed view of one round of a trace.
#[derive(Debug, Clone, Copy)]
pub struct RoundRecord<'a> {
    pub available: ArmSet,
    pub action: ActionVector,
    /// Played arms' rewards, ascending arm order.
    pub rewards: &'a [f64],
    /// Queue snapshot `Q(t)`, one entry per arm.
    pub queues: &'a [f64],
}

impl RunTrace {
    pub fn new(policy_label: impl Into<String>, seed: u64, n_arms: usize) -> Self {
        RunTrace {
            policy_label: policy_label.into(),
            seed,
            n_arms,
            available: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            queues: Vec::new(),
        }
    }

    pub fn with_capacity(
        policy_label: impl Into<String>,
        seed: u64,
        n_arms: usize,
        rounds: usize,
    ) -> Self {
        let mut t = RunTrace::new(policy_label, seed, n_arms);
        t.available.reserve(rounds);
        t.actions.reserve(rounds);
        t.queues.reserve(rounds * n_arms);
        t
    }

    /// Appends one round. `played_rewards` must list the action's arms'
    /// rewards in ascending arm order; `queues` must have one entry per arm.
    pub fn push_round(
        &mut self,
        available: ArmSet,
        action: ActionVector,
        played_rewards: &[f64],
        queues: &[f64],
    ) {
        debug_assert!(action.as_set().is_subset_of(available));
        debug_assert_eq!(played_rewards.len(), action.count());
        debug_assert_eq!(queues.len(), self.n_arms);
        self.available.push(available);
        self.actions.push(action);
        self.rewards.extend_from_slice(played_rewards);
        self.queues.extend_from_slice(queues);
    }

    /// Number of recorded rounds.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn rounds(&self) -> impl Iterator<Item = RoundRecord<'_>> {
        let mut reward_cursor = 0usize;
        (0..self.len()).map(move |t| {
            let take = self.actions[t].count();
            let rewards = &self.rewards[reward_cursor..reward_cursor + take];
            reward_cursor += take;
            RoundRecord {
                available: self.available[t],
                action: self.actions[t],
                rewards,
                queues: &self.queues[t * self.n_arms..(t + 1) * self.n_arms],
            }
        })
    }

    /// Total plays per arm over the whole trace.
    pub fn play_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_arms];
        for action in &self.actions {
            for arm in action.as_set().iter() {
                counts[arm] += 1;
            }
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegretVariant {
    /// Per-round gap uses mean rewards of the played arms; the low-variance
    /// default.
    Pseudo,
    /// Per-round gap uses realized rewards; equal in expectation.
    Realized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretPoint {
    pub t: usize,
    /// `R* - (average over runs of the reward time-average up to t)`.
    pub mean: f64,
    /// Sample standard error across runs (0 for a single run).
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries {
    pub variant: RegretVariant,
    /// Number of runs averaged; single-run series should not be compared
    /// against the analytic bounds.
    pub runs: usize,
    pub points: Vec<RegretPoint>,
}

fn validate_traces(traces: &[RunTrace]) -> Result<(usize, usize), MetricsError> {
    let first = traces
        .first()
        .ok_or_else(|| MetricsError::MismatchedTraces("no traces given".to_string()))?;
    let horizon = first.len();
    if horizon == 0 {
        return Err(MetricsError::MismatchedTraces("empty trace".to_string()));
    }
    for t in traces {
        if t.len() != horizon || t.n_arms != first.n_arms {
            return Err(MetricsError::MismatchedTraces(format!(
                "trace (seed {}) has {} rounds x {} arms, expected {} x {}",
                t.seed,
                t.len(),
                t.n_arms,
                horizon,
                first.n_arms
            )));
        }
    }
    Ok((horizon, first.n_arms))
}

fn validate_checkpoints(checkpoints: &[usize], horizon: usize) -> Result<(), MetricsError> {
    if checkpoints.is_empty() {
        return Err(MetricsError::InvalidCheckpoints("empty list".to_string()));
    }
    for pair in checkpoints.windows(2) {
        if pair[0] >= pair[1] {
            return Err(MetricsError::InvalidCheckpoints(
                "not strictly increasing".to_string(),
            ));
        }
    }
    let last = *checkpoints.last().unwrap();
    if checkpoints[0] == 0 || last > horizon {
        return Err(MetricsError::InvalidCheckpoints(format!(
            "checkpoints must lie in 1..={}",
            horizon
        )));
    }
    Ok(())
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Time-average regret at each checkpoint, averaged over runs.
pub fn regret_series(
    traces: &[RunTrace],
    optimal_reward: f64,
    weights: &[f64],
    means: &[f64],
    variant: RegretVariant,
    checkpoints: &[usize],
) -> Result<RegretSeries, MetricsError> {
    let (horizon, n_arms) = validate_traces(traces)?;
    if weights.len() != n_arms || means.len() != n_arms {
        return Err(MetricsError::MismatchedTraces(format!(
            "weights/means have {}/{} entries, traces have {} arms",
            weights.len(),
            means.len(),
            n_arms
        )));
    }
    validate_checkpoints(checkpoints, horizon)?;

    // per checkpoint, per run: reward time-average
    let mut per_run_averages = vec![Vec::with_capacity(traces.len()); checkpoints.len()];
    for trace in traces {
        let mut cumulative = 0.0;
        let mut next_checkpoint = 0;
        for (t, round) in trace.rounds().enumerate() {
            match variant {
                RegretVariant::Pseudo => {
                    for arm in round.action.as_set().iter() {
                        cumulative += weights[arm] * means[arm];
                    }
                }
                RegretVariant::Realized => {
                    for (arm, &x) in round.action.as_set().iter().zip(round.rewards) {
                        cumulative += weights[arm] * x;
                    }
                }
            }
            while next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] == t + 1 {
                per_run_averages[next_checkpoint].push(cumulative / (t + 1) as f64);
                next_checkpoint += 1;
            }
        }
    }

    let points = checkpoints
        .iter()
        .zip(&per_run_averages)
        .map(|(&t, samples)| {
            let (mean_reward, stderr) = mean_and_stderr(samples);
            RegretPoint {
                t,
                mean: optimal_reward - mean_reward,
                stderr,
            }
        })
        .collect();
    Ok(RegretSeries {
        variant,
        runs: traces.len(),
        points,
    })
}

/// Final per-arm selection fractions `h_i(T-1) / T`, averaged over runs.
pub fn selection_fractions(traces: &[RunTrace]) -> Result<Vec<f64>, MetricsError> {
    let (horizon, n_arms) = validate_traces(traces)?;
    let mut fractions = vec![0.0; n_arms];
    for trace in traces {
        for (i, &count) in trace.play_counts().iter().enumerate() {
            fractions[i] += count as f64 / horizon as f64;
        }
    }
    for f in &mut fractions {
        *f /= traces.len() as f64;
    }
    Ok(fractions)
}

/// Selection fractions evaluated at each checkpoint: entry `[k][i]` is arm
/// i's play fraction over the first `checkpoints[k]` rounds, averaged over
/// runs.
pub fn selection_fraction_series(
    traces: &[RunTrace],
    checkpoints: &[usize],
) -> Result<Vec<Vec<f64>>, MetricsError> {
    let (horizon, n_arms) = validate_traces(traces)?;
    validate_checkpoints(checkpoints, horizon)?;
    let mut series = vec![vec![0.0; n_arms]; checkpoints.len()];
    for trace in traces {
        let mut counts = vec![0u64; n_arms];
        let mut next_checkpoint = 0;
        for (t, action) in trace.actions.iter().enumerate() {
            for arm in action.as_set().iter() {
                counts[arm] += 1;
            }
            while next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] == t + 1 {
                for i in 0..n_arms {
                    series[next_checkpoint][i] += counts[i] as f64 / (t + 1) as f64;
                }
                next_checkpoint += 1;
            }
        }
    }
    for row in &mut series {
        for v in row.iter_mut() {
            *v /= traces.len() as f64;
        }
    }
    Ok(series)
}

/// Queue-length statistics of a trace collection.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueStats {
    /// Mean over runs of the full-horizon time-average total queue length
    /// `(1/T) sum_t sum_i Q_i(t)`; the quantity bounded by `B / eps`.
    pub time_average_total_queue: f64,
    /// Largest single queue value seen in any run/round/arm.
    pub max_queue: f64,
    /// Per-arm full-horizon time averages, mean over runs.
    pub per_arm_time_average: Vec<f64>,
    /// Time-average total queue up to each checkpoint, mean over runs.
    pub total_series: Vec<(usize, f64)>,
}

pub fn queue_stats(traces: &[RunTrace], checkpoints: &[usize]) -> Result<QueueStats, MetricsError> {
    let (horizon, n_arms) = validate_traces(traces)?;
    validate_checkpoints(checkpoints, horizon)?;
    let mut per_arm = vec![0.0; n_arms];
    let mut max_queue = 0.0f64;
    let mut totals = vec![0.0; checkpoints.len()];
    let mut grand_total = 0.0;
    for trace in traces {
        let mut cumulative_total = 0.0;
        let mut cumulative_per_arm = vec![0.0; n_arms];
        let mut next_checkpoint = 0;
        for (t, round) in trace.rounds().enumerate() {
            for (i, &q) in round.queues.iter().enumerate() {
                cumulative_per_arm[i] += q;
                cumulative_total += q;
                max_queue = max_queue.max(q);
            }
            while next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] == t + 1 {
                totals[next_checkpoint] += cumulative_total / (t + 1) as f64;
                next_checkpoint += 1;
            }
        }
        grand_total += cumulative_total / horizon as f64;
        for i in 0..n_arms {
            per_arm[i] += cumulative_per_arm[i] / horizon as f64;
        }
    }
    let runs = traces.len() as f64;
    Ok(QueueStats {
        time_average_total_queue: grand_total / runs,
        max_queue,
        per_arm_time_average: per_arm.into_iter().map(|v| v / runs).collect(),
        total_series: checkpoints
            .iter()
            .zip(totals)
            .map(|(&t, v)| (t, v / runs))
            .collect(),
    })
}

/// `beta_1 = 2 sqrt(6) w_max`.
pub fn beta1(w_max: f64) -> f64 {
    2.0 * 6.0f64.sqrt() * w_max
}

/// `beta_2 = (1 + 5 pi^2 / 12) w_max`.
pub fn beta2(w_max: f64) -> f64 {
    (1.0 + 5.0 * std::f64::consts::PI.powi(2) / 12.0) * w_max
}

/// `B = N/2 + eta m w_max`; the drift constant of the stability bound.
pub fn stability_constant(n_arms: usize, max_plays: usize, eta: f64, w_max: f64) -> f64 {
    n_arms as f64 / 2.0 + eta * max_plays as f64 * w_max
}

/// Closed-form time-average regret bound
/// `N/(2 eta) + (beta1 sqrt(m N T ln T) + beta2 N)/T`.
pub fn regret_upper_bound(
    n_arms: usize,
    max_plays: usize,
    horizon: usize,
    eta: f64,
    w_max: f64,
) -> f64 {
    assert!(horizon >= 2, "bound requires T >= 2");
    assert!(eta > 0.0, "bound requires eta > 0");
    let n = n_arms as f64;
    let t = horizon as f64;
    let learning = beta1(w_max) * (max_plays as f64 * n * t * t.ln()).sqrt() + beta2(w_max) * n;
    n / (2.0 * eta) + learning / t
}

/// The analytic bounds for one LFG configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// `B = N/2 + eta m w_max`.
    pub b_constant: f64,
    /// `B / eps`; present only when the feasibility margin is positive.
    pub stability_bound: Option<f64>,
    /// Regret bound evaluated at each requested horizon.
    pub regret_bounds: Vec<(usize, f64)>,
}

impl BoundReport {
    pub fn new(
        n_arms: usize,
        max_plays: usize,
        eta: f64,
        w_max: f64,
        epsilon: Option<f64>,
        horizons: &[usize],
    ) -> Self {
        let b_constant = stability_constant(n_arms, max_plays, eta, w_max);
        BoundReport {
            eta,
            beta1: beta1(w_max),
            beta2: beta2(w_max),
            b_constant,
            stability_bound: epsilon.filter(|&e| e > 0.0).map(|e| b_constant / e),
            // The closed form needs T >= 2 (it contains ln T).
            regret_bounds: horizons
                .iter()
                .filter(|&&t| t >= 2)
                .map(|&t| (t, regret_upper_bound(n_arms, max_plays, t, eta, w_max)))
                .collect(),
        }
    }
}

/// Default checkpoint grid: 1-2-5 decades from 10 up to the horizon, plus
/// the horizon itself.
pub fn default_checkpoints(horizon: usize) -> Vec<usize> {
    let mut points = Vec::new();
    let mut decade = 10usize;
    'outer: loop {
        for factor in [1usize, 2, 5] {
            match decade.checked_mul(factor) {
                Some(p) if p < horizon => points.push(p),
                _ => break 'outer,
            }
        }
        match decade.checked_mul(10) {
            Some(d) => decade = d,
            None => break,
        }
    }
    points.push(horizon);
    points
}

fn fmt_eta(eta: Option<f64>) -> String {
    match eta {
        Some(e) => format!("{}", e),
        None => String::new(),
    }
}

#[derive(Debug, Clone)]
pub struct RegretCsvRow {
    pub policy: String,
    pub eta: Option<f64>,
    pub t: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct FractionCsvRow {
    pub policy: String,
    pub eta: Option<f64>,
    /// 1-based arm index, matching all user-facing output.
    pub arm: usize,
    pub t: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone)]
pub struct QueueCsvRow {
    pub policy: String,
    pub eta: Option<f64>,
    pub t: usize,
    pub total_queue_mean: f64,
}

pub const REGRET_CSV_HEADER: &str = "policy,eta,t,regret_mean,regret_stderr";
pub const FRACTIONS_CSV_HEADER: &str = "policy,eta,arm,t,fraction";
pub const QUEUES_CSV_HEADER: &str = "policy,eta,t,total_queue_mean";

pub fn regret_csv(rows: &[RegretCsvRow]) -> String {
    let mut out = String::from(REGRET_CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.policy,
            fmt_eta(r.eta),
            r.t,
            r.mean,
            r.stderr
        )
        .unwrap();
    }
    out
}

pub fn fractions_csv(rows: &[FractionCsvRow]) -> String {
    let mut out = String::from(FRACTIONS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.policy,
            fmt_eta(r.eta),
            r.arm,
            r.t,
            r.fraction
        )
        .unwrap();
    }
    out
}

pub fn queues_csv(rows: &[QueueCsvRow]) -> String {
    let mut out = String::from(QUEUES_CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.policy,
            fmt_eta(r.eta),
            r.t,
            r.total_queue_mean
        )
        .unwrap();
    }
    out
}
