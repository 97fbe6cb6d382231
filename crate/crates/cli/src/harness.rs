//! Seeded, parallel experiment execution and artifact assembly.
//!
//! One experiment simulates every configured policy for `runs` independent
//! replications of `horizon` rounds. Run `k` draws its environment stream
//! from seed `base_seed + k`, shared by all policies (common random numbers
//! make cross-policy comparisons tighter); policy-side randomness gets a
//! separate stream per (run, policy). Replications run in parallel but are
//! collected in run order before any aggregation, so outputs are
//! bit-identical regardless of the worker count.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use fairmab_core::env::{sample_round, ArmSet, EnvironmentConfig, RewardModel};
use fairmab_core::metrics::{
    self, default_checkpoints, queue_stats, regret_series, selection_fraction_series,
    selection_fractions, BoundReport, FractionCsvRow, MetricsError, QueueCsvRow, QueueStats,
    RegretCsvRow, RegretSeries, RegretVariant, RunTrace,
};
use fairmab_core::oracle::{
    feasibility_margin, solve_offline_lp, LpSolution, OracleError,
};
use fairmab_core::policy::{
    AOnlyPlayback, AOnlyPolicy, BanditPolicy, EmptyActionPolicy, LfgPolicy, LlrsPolicy,
    PolicyError,
};

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV_VAR: &str = "FAIRMAB_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("unknown preset '{0}' (expected scenario-i, scenario-ii, or fig7)")]
    UnknownPreset(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("policy '{0}' requires a solvable oracle: {1}")]
    OracleRequired(String, String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 invalid config, 3 oracle trouble, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::InvalidSpec(_)
            | HarnessError::UnknownPreset(_)
            | HarnessError::Metrics(_)
            | HarnessError::Policy(_) => 2,
            HarnessError::Oracle(_) | HarnessError::OracleRequired(_, _) => 3,
            HarnessError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    Lfg { eta: f64 },
    Llrs,
    /// Playback of the oracle's optimal availability-only policy.
    AOnlyPlayback,
    EmptyAction,
}

impl PolicyKind {
    pub fn eta(&self) -> Option<f64> {
        match self {
            PolicyKind::Lfg { eta } => Some(*eta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub label: String,
    pub kind: PolicyKind,
}

/// A full experiment: environment, policies, horizon, replication plan.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub environment: EnvironmentConfig,
    pub policies: Vec<PolicySpec>,
    pub horizon: usize,
    pub runs: usize,
    pub base_seed: u64,
    /// Strictly increasing evaluation times, ending no later than `horizon`.
    pub checkpoints: Vec<usize>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.environment
            .validate()
            .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        if self.horizon == 0 {
            return Err(HarnessError::InvalidSpec("horizon must be >= 1".into()));
        }
        if self.runs == 0 {
            return Err(HarnessError::InvalidSpec("runs must be >= 1".into()));
        }
        if self.policies.is_empty() {
            return Err(HarnessError::InvalidSpec("no policies configured".into()));
        }
        if self.checkpoints.is_empty() {
            return Err(HarnessError::InvalidSpec("no checkpoints".into()));
        }
        for pair in self.checkpoints.windows(2) {
            if pair[0] >= pair[1] {
                return Err(HarnessError::InvalidSpec(
                    "checkpoints must be strictly increasing".into(),
                ));
            }
        }
        if self.checkpoints[0] == 0 || *self.checkpoints.last().unwrap() > self.horizon {
            return Err(HarnessError::InvalidSpec(format!(
                "checkpoints must lie in 1..={}",
                self.horizon
            )));
        }
        let mut labels = std::collections::BTreeSet::new();
        for p in &self.policies {
            if p.label.is_empty()
                || !p
                    .label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            {
                return Err(HarnessError::InvalidSpec(format!(
                    "label '{}' must be nonempty and use only [A-Za-z0-9._-]",
                    p.label
                )));
            }
            if !labels.insert(&p.label) {
                return Err(HarnessError::InvalidSpec(format!(
                    "duplicate policy label '{}'",
                    p.label
                )));
            }
            if let PolicyKind::Lfg { eta } = p.kind {
                if !eta.is_finite() || eta <= 0.0 {
                    return Err(HarnessError::InvalidSpec(format!(
                        "eta must be positive, got {}",
                        eta
                    )));
                }
            }
        }
        Ok(())
    }

    /// Environment-stream seed of run `k`: `base_seed + k`.
    pub fn run_seed(&self, run_idx: usize) -> u64 {
        self.base_seed.wrapping_add(run_idx as u64)
    }
}

/// Execution knobs that do not affect results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` defers to `FAIRMAB_WORKERS`, then rayon's
    /// default.
    pub workers: Option<usize>,
    /// Persist full per-run traces under `output_dir/traces/`.
    pub emit_traces: bool,
}

/// Oracle quantities attached to an experiment.
#[derive(Debug, Clone, Copy)]
pub struct OracleSummary {
    /// LP optimum `R*`; `None` when the fairness requirement is infeasible.
    pub r_star: Option<f64>,
    /// Feasibility margin `eps`.
    pub epsilon: Option<f64>,
}

/// Aggregates for one policy across all runs.
#[derive(Debug, Clone)]
pub struct PolicyAggregate {
    pub spec: PolicySpec,
    /// Present whenever the oracle produced `R*`.
    pub pseudo_regret: Option<RegretSeries>,
    pub realized_regret: Option<RegretSeries>,
    /// `[checkpoint][arm]` play fractions, averaged over runs.
    pub fraction_series: Vec<Vec<f64>>,
    /// Full-horizon play fractions, averaged over runs.
    pub final_fractions: Vec<f64>,
    pub queue_stats: QueueStats,
    /// Analytic bounds; LFG policies only (needs an eta).
    pub bounds: Option<BoundReport>,
}

/// Everything an experiment produces, with the aggregate CSVs pre-rendered.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub oracle: Option<OracleSummary>,
    pub policies: Vec<PolicyAggregate>,
    pub checkpoints: Vec<usize>,
    pub warnings: Vec<String>,
    /// `regret.csv`; absent when `R*` is unavailable.
    pub regret_csv: Option<String>,
    /// `fractions.csv`.
    pub fractions_csv: String,
    /// `queues.csv`.
    pub queues_csv: String,
    /// `bounds.csv`; absent when no LFG policy is configured.
    pub bounds_csv: Option<String>,
    /// `oracle.csv`; absent when the oracle could not run.
    pub oracle_csv: Option<String>,
}

impl ExperimentOutput {
    /// Writes the aggregate CSVs into `dir`, returning the paths written.
    pub fn write_artifacts(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut emit = |name: &str, body: &str| -> std::io::Result<()> {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            written.push(path);
            Ok(())
        };
        if let Some(csv) = &self.regret_csv {
            emit("regret.csv", csv)?;
        }
        emit("fractions.csv", &self.fractions_csv)?;
        emit("queues.csv", &self.queues_csv)?;
        if let Some(csv) = &self.bounds_csv {
            emit("bounds.csv", csv)?;
        }
        if let Some(csv) = &self.oracle_csv {
            emit("oracle.csv", csv)?;
        }
        Ok(written)
    }

    pub fn aggregate(&self, label: &str) -> Option<&PolicyAggregate> {
        self.policies.iter().find(|p| p.spec.label == label)
    }
}

fn build_policy(
    spec: &PolicySpec,
    env: &EnvironmentConfig,
    qstar: Option<&Arc<AOnlyPolicy>>,
) -> Result<Box<dyn BanditPolicy>, HarnessError> {
    Ok(match spec.kind {
        PolicyKind::Lfg { eta } => Box::new(LfgPolicy::new(env, eta)),
        PolicyKind::Llrs => Box::new(LlrsPolicy::new(env)),
        PolicyKind::EmptyAction => Box::new(EmptyActionPolicy),
        PolicyKind::AOnlyPlayback => {
            let policy = qstar.ok_or_else(|| {
                HarnessError::OracleRequired(
                    spec.label.clone(),
                    "no optimal policy available".to_string(),
                )
            })?;
            Box::new(AOnlyPlayback::new(env, Arc::clone(policy)))
        }
    })
}

/// Policy-stream seed for (run, policy); distinct from the environment
/// stream so playback randomness cannot alias environment draws.
fn policy_seed(env_seed: u64, policy_idx: usize) -> u64 {
    env_seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(policy_idx as u64 + 1)
}

/// Simulates one policy for `horizon` rounds against a fresh environment
/// stream, recording the full trace.
pub fn simulate_run(
    env: &EnvironmentConfig,
    spec: &PolicySpec,
    qstar: Option<&Arc<AOnlyPolicy>>,
    horizon: usize,
    env_seed: u64,
    policy_stream_seed: u64,
) -> Result<RunTrace, HarnessError> {
    let mut policy = build_policy(spec, env, qstar)?;
    let mut env_rng = ChaCha8Rng::seed_from_u64(env_seed);
    let mut policy_rng = ChaCha8Rng::seed_from_u64(policy_stream_seed);
    let zeros = vec![0.0; env.n_arms];
    let mut trace = RunTrace::with_capacity(spec.label.clone(), env_seed, env.n_arms, horizon);
    let mut played_rewards = Vec::with_capacity(env.max_plays);
    for _ in 0..horizon {
        let draw = sample_round(env, &mut env_rng);
        let action = policy.play_round(&draw, &mut policy_rng)?;
        played_rewards.clear();
        for arm in action.as_set().iter() {
            played_rewards.push(draw.rewards[arm]);
        }
        let queues = policy.queue_snapshot().unwrap_or(&zeros);
        trace.push_round(draw.available, action, &played_rewards, queues);
    }
    Ok(trace)
}

fn thread_pool(opts: &RunOptions) -> Result<rayon::ThreadPool, HarnessError> {
    let workers = opts.workers.or_else(|| {
        std::env::var(WORKERS_ENV_VAR)
            .ok()
            .and_then(|v| v.parse().ok())
    });
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::InvalidSpec(format!("thread pool: {}", e)))
}

/// Runs the full experiment: oracle solve, seeded parallel replications,
/// aggregation, CSV assembly, and (when an output directory is set)
/// artifact emission.
pub fn run_experiment(
    spec: &ExperimentSpec,
    opts: &RunOptions,
) -> Result<ExperimentOutput, HarnessError> {
    spec.validate()?;
    let env = &spec.environment;
    let mut warnings = Vec::new();

    // Oracle pass. An infeasible fairness requirement suppresses regret
    // output but the simulation itself still runs; solver-level failures
    // (caps, numerics) propagate.
    let (r_star, qstar) = match solve_offline_lp(env)? {
        LpSolution::Optimal {
            policy,
            optimal_reward,
        } => (Some(optimal_reward), Some(Arc::new(policy))),
        LpSolution::Infeasible => {
            warnings.push(
                "fairness requirement is infeasible; regret output suppressed".to_string(),
            );
            (None, None)
        }
    };
    let epsilon = Some(feasibility_margin(env)?.epsilon);

    let needs_playback = spec
        .policies
        .iter()
        .any(|p| p.kind == PolicyKind::AOnlyPlayback);
    if needs_playback && qstar.is_none() {
        let label = spec
            .policies
            .iter()
            .find(|p| p.kind == PolicyKind::AOnlyPlayback)
            .unwrap()
            .label
            .clone();
        return Err(HarnessError::OracleRequired(
            label,
            "the fairness requirement is infeasible".to_string(),
        ));
    }

    let pool = thread_pool(opts)?;
    let w_max = env.w_max();

    if let (true, Some(dir)) = (opts.emit_traces, &spec.output_dir) {
        std::fs::create_dir_all(dir.join("traces"))?;
    }

    let mut aggregates = Vec::with_capacity(spec.policies.len());
    for (policy_idx, policy_spec) in spec.policies.iter().enumerate() {
        let traces: Vec<RunTrace> = pool.install(|| {
            (0..spec.runs)
                .into_par_iter()
                .map(|run_idx| {
                    let env_seed = spec.run_seed(run_idx);
                    simulate_run(
                        env,
                        policy_spec,
                        qstar.as_ref(),
                        spec.horizon,
                        env_seed,
                        policy_seed(env_seed, policy_idx),
                    )
                })
                .collect::<Result<Vec<_>, _>>()
        })?;

        if let (true, Some(dir)) = (opts.emit_traces, &spec.output_dir) {
            for (run_idx, trace) in traces.iter().enumerate() {
                let path = dir
                    .join("traces")
                    .join(format!("{}-run{}.csv", policy_spec.label, run_idx));
                std::fs::write(&path, trace_csv(trace))?;
            }
        }

        let pseudo_regret = r_star
            .map(|rs| {
                regret_series(
                    &traces,
                    rs,
                    &env.weights,
                    &env.means,
                    RegretVariant::Pseudo,
                    &spec.checkpoints,
                )
            })
            .transpose()?;
        let realized_regret = r_star
            .map(|rs| {
                regret_series(
                    &traces,
                    rs,
                    &env.weights,
                    &env.means,
                    RegretVariant::Realized,
                    &spec.checkpoints,
                )
            })
            .transpose()?;
        let fraction_series = selection_fraction_series(&traces, &spec.checkpoints)?;
        let final_fractions = selection_fractions(&traces)?;
        let queue_stats = queue_stats(&traces, &spec.checkpoints)?;
        let bounds = policy_spec.kind.eta().map(|eta| {
            BoundReport::new(
                env.n_arms,
                env.max_plays,
                eta,
                w_max,
                epsilon,
                &spec.checkpoints,
            )
        });

        aggregates.push(PolicyAggregate {
            spec: policy_spec.clone(),
            pseudo_regret,
            realized_regret,
            fraction_series,
            final_fractions,
            queue_stats,
            bounds,
        });
    }

    let output = assemble_output(
        spec,
        aggregates,
        OracleSummary { r_star, epsilon },
        warnings,
    );
    if let Some(dir) = &spec.output_dir {
        output.write_artifacts(dir)?;
    }
    Ok(output)
}

fn assemble_output(
    spec: &ExperimentSpec,
    aggregates: Vec<PolicyAggregate>,
    oracle: OracleSummary,
    warnings: Vec<String>,
) -> ExperimentOutput {
    let mut regret_rows = Vec::new();
    let mut fraction_rows = Vec::new();
    let mut queue_rows = Vec::new();
    let mut bounds_lines = vec![
        "policy,eta,t,regret_bound,stability_bound,beta1,beta2,b".to_string(),
    ];
    let mut have_bounds = false;

    for agg in &aggregates {
        let eta = agg.spec.kind.eta();
        if let Some(series) = &agg.pseudo_regret {
            for p in &series.points {
                regret_rows.push(RegretCsvRow {
                    policy: agg.spec.label.clone(),
                    eta,
                    t: p.t,
                    mean: p.mean,
                    stderr: p.stderr,
                });
            }
        }
        for (k, &t) in spec.checkpoints.iter().enumerate() {
            for arm in 0..spec.environment.n_arms {
                fraction_rows.push(FractionCsvRow {
                    policy: agg.spec.label.clone(),
                    eta,
                    arm: arm + 1,
                    t,
                    fraction: agg.fraction_series[k][arm],
                });
            }
        }
        for &(t, total) in &agg.queue_stats.total_series {
            queue_rows.push(QueueCsvRow {
                policy: agg.spec.label.clone(),
                eta,
                t,
                total_queue_mean: total,
            });
        }
        if let Some(bounds) = &agg.bounds {
            have_bounds = true;
            for &(t, bound) in &bounds.regret_bounds {
                bounds_lines.push(format!(
                    "{},{},{},{},{},{},{},{}",
                    agg.spec.label,
                    bounds.eta,
                    t,
                    bound,
                    bounds
                        .stability_bound
                        .map(|s| s.to_string())
                        .unwrap_or_default(),
                    bounds.beta1,
                    bounds.beta2,
                    bounds.b_constant,
                ));
            }
        }
    }

    let oracle_csv = oracle.r_star.is_some().then(|| {
        format!(
            "r_star,epsilon\n{},{}\n",
            oracle
                .r_star
                .map(|v| v.to_string())
                .unwrap_or_default(),
            oracle
                .epsilon
                .map(|v| v.to_string())
                .unwrap_or_default()
        )
    });

    ExperimentOutput {
        oracle: Some(oracle),
        policies: aggregates,
        checkpoints: spec.checkpoints.clone(),
        warnings,
        regret_csv: (!regret_rows.is_empty()).then(|| metrics::regret_csv(&regret_rows)),
        fractions_csv: metrics::fractions_csv(&fraction_rows),
        queues_csv: metrics::queues_csv(&queue_rows),
        bounds_csv: have_bounds.then(|| {
            let mut s = bounds_lines.join("\n");
            s.push('\n');
            s
        }),
        oracle_csv,
    }
}

/// Per-round trace CSV: sets are semicolon-joined 1-based arm indices,
/// rewards align with the action's arms, queues list every arm.
fn trace_csv(trace: &RunTrace) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("t,available,action,rewards,queues\n");
    for (t, round) in trace.rounds().enumerate() {
        let join_set = |set: ArmSet| {
            set.iter()
                .map(|a| (a + 1).to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        let rewards = round
            .rewards
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let queues = round
            .queues
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            out,
            "{},{},{},{},{}",
            t,
            join_set(round.available),
            join_set(round.action.as_set()),
            rewards,
            queues
        )
        .unwrap();
    }
    out
}

/// The built-in experiment presets.
#[derive(Debug, Clone)]
pub enum PresetSpec {
    Complete(ExperimentSpec),
    /// A scenario whose environment inputs must be supplied by the user;
    /// only the structure (arm counts, horizon, policies) is fixed.
    Template(ScenarioTemplate),
}

#[derive(Debug, Clone)]
pub struct ScenarioTemplate {
    pub name: String,
    pub n_arms: usize,
    pub max_plays: usize,
    pub horizon: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub policies: Vec<PolicySpec>,
}

impl ScenarioTemplate {
    /// Completes the template with a user-supplied environment.
    pub fn with_environment(
        self,
        environment: EnvironmentConfig,
    ) -> Result<ExperimentSpec, HarnessError> {
        if environment.n_arms != self.n_arms || environment.max_plays != self.max_plays {
            return Err(HarnessError::InvalidSpec(format!(
                "preset '{}' expects n_arms = {} and max_plays = {}, got {} and {}",
                self.name, self.n_arms, self.max_plays, environment.n_arms, environment.max_plays
            )));
        }
        let spec = ExperimentSpec {
            environment,
            policies: self.policies,
            horizon: self.horizon,
            runs: self.runs,
            base_seed: self.base_seed,
            checkpoints: default_checkpoints(self.horizon),
            output_dir: None,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn lfg_sweep() -> Vec<PolicySpec> {
    let mut policies: Vec<PolicySpec> = [1.0, 10.0, 100.0, 1000.0]
        .into_iter()
        .map(|eta| PolicySpec {
            label: format!("lfg-eta{}", eta),
            kind: PolicyKind::Lfg { eta },
        })
        .collect();
    policies.push(PolicySpec {
        label: "llrs".to_string(),
        kind: PolicyKind::Llrs,
    });
    policies
}

fn benchmark_environment() -> EnvironmentConfig {
    EnvironmentConfig {
        n_arms: 3,
        max_plays: 2,
        means: vec![0.4, 0.5, 0.7],
        weights: vec![1.0, 1.0, 1.0],
        min_fractions: vec![0.5, 0.6, 0.4],
        availability: fairmab_core::env::AvailabilityModel::IndependentBernoulli {
            p: vec![0.9, 0.8, 0.7],
        },
        reward_model: RewardModel::Bernoulli,
    }
}

/// Built-in presets:
///
/// - `scenario-i`: 3 arms, 2 plays, the standard benchmark environment,
///   LFG at eta in {1, 10, 100, 1000} plus LLRS, 20 runs of 20000 rounds.
/// - `scenario-ii`: 10 arms, 6 plays; a template requiring a user-supplied
///   environment (means/fractions/availability are not fixed).
/// - `fig7`: the scenario-i environment, LFG at eta = 100 only, 100 runs of
///   1000 rounds with checkpoints every 100 rounds, for bound-decay studies.
pub fn preset(name: &str) -> Result<PresetSpec, HarnessError> {
    match name {
        "scenario-i" => Ok(PresetSpec::Complete(ExperimentSpec {
            environment: benchmark_environment(),
            policies: lfg_sweep(),
            horizon: 20_000,
            runs: 20,
            base_seed: 1,
            checkpoints: default_checkpoints(20_000),
            output_dir: None,
        })),
        "scenario-ii" => Ok(PresetSpec::Template(ScenarioTemplate {
            name: name.to_string(),
            n_arms: 10,
            max_plays: 6,
            horizon: 20_000,
            runs: 20,
            base_seed: 1,
            policies: lfg_sweep(),
        })),
        "fig7" => Ok(PresetSpec::Complete(ExperimentSpec {
            environment: benchmark_environment(),
            policies: vec![PolicySpec {
                label: "lfg-eta100".to_string(),
                kind: PolicyKind::Lfg { eta: 100.0 },
            }],
            horizon: 1000,
            runs: 100,
            base_seed: 1,
            checkpoints: (1..=10).map(|k| k * 100).collect(),
            output_dir: None,
        })),
        other => Err(HarnessError::UnknownPreset(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_scenario_i_parameters() {
        let spec = match preset("scenario-i").unwrap() {
            PresetSpec::Complete(s) => s,
            _ => panic!("scenario-i is complete"),
        };
        assert_eq!(spec.environment.means, vec![0.4, 0.5, 0.7]);
        assert_eq!(spec.environment.min_fractions, vec![0.5, 0.6, 0.4]);
        assert_eq!(spec.environment.max_plays, 2);
        assert_eq!(spec.horizon, 20_000);
        let etas: Vec<f64> = spec.policies.iter().filter_map(|p| p.kind.eta()).collect();
        assert_eq!(etas, vec![1.0, 10.0, 100.0, 1000.0]);
        assert!(spec
            .policies
            .iter()
            .any(|p| matches!(p.kind, PolicyKind::Llrs)));
    }

    #[test]
    fn preset_fig7_parameters() {
        let spec = match preset("fig7").unwrap() {
            PresetSpec::Complete(s) => s,
            _ => panic!("fig7 is complete"),
        };
        assert_eq!(spec.runs, 100);
        assert_eq!(spec.horizon, 1000);
        assert_eq!(spec.checkpoints, (1..=10).map(|k| k * 100).collect::<Vec<_>>());
        assert_eq!(spec.policies.len(), 1);
        assert_eq!(spec.policies[0].kind.eta(), Some(100.0));
    }

    #[test]
    fn preset_scenario_ii_is_template() {
        let template = match preset("scenario-ii").unwrap() {
            PresetSpec::Template(t) => t,
            _ => panic!("scenario-ii requires user inputs"),
        };
        assert_eq!(template.n_arms, 10);
        assert_eq!(template.max_plays, 6);
        // Completing it with a mismatched environment is rejected.
        let wrong = benchmark_environment();
        assert!(template.with_environment(wrong).is_err());
    }

    #[test]
    fn unknown_preset_rejected() {
        assert!(matches!(
            preset("nope"),
            Err(HarnessError::UnknownPreset(_))
        ));
    }

    #[test]
    fn spec_validation_catches_bad_labels() {
        let mut spec = match preset("scenario-i").unwrap() {
            PresetSpec::Complete(s) => s,
            _ => unreachable!(),
        };
        spec.policies[0].label = "has space".to_string();
        assert!(spec.validate().is_err());
        spec.policies[0].label = spec.policies[1].label.clone();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn single_round_single_run() {
        let mut spec = match preset("scenario-i").unwrap() {
            PresetSpec::Complete(s) => s,
            _ => unreachable!(),
        };
        spec.horizon = 1;
        spec.runs = 1;
        spec.checkpoints = vec![1];
        spec.policies.truncate(1);
        let out = run_experiment(&spec, &RunOptions::default()).unwrap();
        let agg = &out.policies[0];
        for &f in &agg.final_fractions {
            assert!(f == 0.0 || f == 1.0, "one-round fraction must be 0 or 1");
        }
        assert_eq!(agg.pseudo_regret.as_ref().unwrap().points.len(), 1);
    }
}
