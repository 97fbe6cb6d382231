//! `fairmab` — fairness-constrained sleeping-bandit experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairmab_cli::config::{parse_environment, parse_experiment, ConfigError};
use fairmab_cli::{
    preset, run_experiment, ExperimentSpec, HarnessError, PresetSpec, RunOptions,
};
use fairmab_core::env::{ArmSet, EnvironmentConfig};
use fairmab_core::metrics::{
    beta1, beta2, default_checkpoints, regret_upper_bound, stability_constant,
};
use fairmab_core::oracle::{feasibility_margin, solve_offline_lp, LpSolution};

#[derive(Parser)]
#[command(
    name = "fairmab",
    version,
    about = "Simulate fairness-constrained combinatorial sleeping bandits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and emit aggregate CSV artifacts.
    Simulate(SimulateArgs),
    /// Solve the offline LP: prints R* and the feasibility margin.
    Oracle(OracleArgs),
    /// Print the closed-form regret bound (and optionally B/epsilon).
    Bound(BoundArgs),
    /// Run an experiment and print a joined per-policy summary table.
    Compare(SimulateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment TOML file (or, with --preset scenario-ii, an environment
    /// file completing the template).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Built-in preset: scenario-i, scenario-ii, or fig7.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override the replication count.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the horizon (checkpoints are regenerated on the default
    /// grid).
    #[arg(long)]
    horizon: Option<usize>,
    /// Override the base seed (run k uses seed base_seed + k).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the CSV artifacts.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also persist full per-run traces under OUT/traces/.
    #[arg(long)]
    emit_traces: bool,
    /// Worker thread count (default: FAIRMAB_WORKERS or all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    /// Environment (or experiment) TOML file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Use a built-in preset's environment instead of a file.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Write the optimal q* table as CSV ("-" for stdout).
    #[arg(long, value_name = "FILE")]
    qstar: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    /// Number of arms N.
    #[arg(long)]
    n: usize,
    /// Maximum simultaneous plays m.
    #[arg(long)]
    m: usize,
    /// Time horizon T (>= 2).
    #[arg(long)]
    horizon: usize,
    /// LFG tradeoff parameter eta.
    #[arg(long)]
    eta: f64,
    /// Largest reward weight.
    #[arg(long, default_value_t = 1.0)]
    wmax: f64,
    /// Feasibility margin; adds the stability bound B/epsilon when given.
    #[arg(long)]
    epsilon: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args, false),
        Command::Compare(args) => cmd_simulate(args, true),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Bound(args) => cmd_bound(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn config_err(e: ConfigError) -> HarnessError {
    HarnessError::InvalidSpec(e.to_string())
}

fn read_file(path: &PathBuf) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(HarnessError::Io)
}

fn resolve_spec(args: &SimulateArgs) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = match (&args.preset, &args.config) {
        (Some(name), maybe_config) => match preset(name)? {
            PresetSpec::Complete(spec) => {
                if maybe_config.is_some() {
                    return Err(HarnessError::InvalidSpec(format!(
                        "preset '{}' is self-contained; --config only completes scenario-ii",
                        name
                    )));
                }
                spec
            }
            PresetSpec::Template(template) => {
                let path = maybe_config.as_ref().ok_or_else(|| {
                    HarnessError::InvalidSpec(format!(
                        "preset '{}' needs --config supplying its environment \
                         (the benchmark does not fix means/fractions/availability \
                         for this scenario)",
                        template.name
                    ))
                })?;
                let env = parse_environment(&read_file(path)?).map_err(config_err)?;
                template.with_environment(env)?
            }
        },
        (None, Some(path)) => parse_experiment(&read_file(path)?).map_err(config_err)?,
        (None, None) => {
            return Err(HarnessError::InvalidSpec(
                "provide --config FILE or --preset NAME".to_string(),
            ))
        }
    };

    if let Some(runs) = args.runs {
        spec.runs = runs;
    }
    if let Some(seed) = args.seed {
        spec.base_seed = seed;
    }
    if let Some(horizon) = args.horizon {
        spec.horizon = horizon;
        spec.checkpoints = default_checkpoints(horizon);
    }
    if let Some(out) = &args.out {
        spec.output_dir = Some(out.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn cmd_simulate(args: SimulateArgs, compare: bool) -> Result<ExitCode, HarnessError> {
    let spec = resolve_spec(&args)?;
    let opts = RunOptions {
        workers: args.workers,
        emit_traces: args.emit_traces,
    };
    let output = run_experiment(&spec, &opts)?;
    for w in &output.warnings {
        eprintln!("warning: {}", w);
    }
    if let Some(oracle) = &output.oracle {
        match oracle.r_star {
            Some(r) => println!("R* = {}", r),
            None => println!("R* unavailable (fairness requirement infeasible)"),
        }
        if let Some(eps) = oracle.epsilon {
            println!("epsilon = {}", eps);
        }
    }

    if compare {
        print_comparison(&spec, &output);
        if let Some(dir) = &spec.output_dir {
            std::fs::write(dir.join("compare.csv"), comparison_csv(&spec, &output))?;
        }
    } else {
        let final_t = *spec.checkpoints.last().unwrap();
        for agg in &output.policies {
            let regret = agg
                .pseudo_regret
                .as_ref()
                .and_then(|s| s.points.last())
                .map(|p| format!("pseudo-regret {}", p.mean))
                .unwrap_or_else(|| "pseudo-regret n/a".to_string());
            println!(
                "{}: {} at T={}; fractions {:?}",
                agg.spec.label, regret, final_t, agg.final_fractions
            );
        }
    }
    if let Some(dir) = &spec.output_dir {
        println!("artifacts written to {}", dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn comparison_rows(spec: &ExperimentSpec, output: &fairmab_cli::ExperimentOutput) -> Vec<Vec<String>> {
    let n = spec.environment.n_arms;
    let mut rows = Vec::new();
    for agg in &output.policies {
        let mut row = vec![
            agg.spec.label.clone(),
            agg.spec
                .kind
                .eta()
                .map(|e| e.to_string())
                .unwrap_or_default(),
        ];
        match agg.pseudo_regret.as_ref().and_then(|s| s.points.last()) {
            Some(p) => {
                row.push(p.mean.to_string());
                row.push(p.stderr.to_string());
            }
            None => {
                row.push(String::new());
                row.push(String::new());
            }
        }
        for arm in 0..n {
            row.push(agg.final_fractions[arm].to_string());
        }
        rows.push(row);
    }
    rows
}

fn comparison_header(n_arms: usize) -> Vec<String> {
    let mut header = vec![
        "policy".to_string(),
        "eta".to_string(),
        "regret_mean".to_string(),
        "regret_stderr".to_string(),
    ];
    for arm in 0..n_arms {
        header.push(format!("fraction_arm{}", arm + 1));
    }
    header
}

fn comparison_csv(spec: &ExperimentSpec, output: &fairmab_cli::ExperimentOutput) -> String {
    let mut out = comparison_header(spec.environment.n_arms).join(",");
    out.push('\n');
    for row in comparison_rows(spec, output) {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn print_comparison(spec: &ExperimentSpec, output: &fairmab_cli::ExperimentOutput) {
    let header = comparison_header(spec.environment.n_arms);
    let rows = comparison_rows(spec, output);
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (k, cell) in row.iter().enumerate() {
            widths[k] = widths[k].max(cell.len().min(12));
        }
    }
    let print_row = |cells: &[String]| {
        let line: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let mut c = c.clone();
                if c.len() > 12 {
                    c.truncate(12);
                }
                format!("{:width$}", c, width = widths[k])
            })
            .collect();
        println!("{}", line.join("  "));
    };
    print_row(&header);
    for row in &rows {
        print_row(row);
    }
}

fn resolve_environment(args: &OracleArgs) -> Result<EnvironmentConfig, HarnessError> {
    match (&args.preset, &args.config) {
        (Some(name), None) => match preset(name)? {
            PresetSpec::Complete(spec) => Ok(spec.environment),
            PresetSpec::Template(t) => Err(HarnessError::InvalidSpec(format!(
                "preset '{}' has no fixed environment; pass --config",
                t.name
            ))),
        },
        (None, Some(path)) => parse_environment(&read_file(path)?).map_err(config_err),
        (Some(_), Some(_)) => Err(HarnessError::InvalidSpec(
            "pass either --config or --preset, not both".to_string(),
        )),
        (None, None) => Err(HarnessError::InvalidSpec(
            "provide --config FILE or --preset NAME".to_string(),
        )),
    }
}

fn set_csv_field(set: ArmSet) -> String {
    set.iter()
        .map(|a| (a + 1).to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn cmd_oracle(args: OracleArgs) -> Result<ExitCode, HarnessError> {
    let env = resolve_environment(&args)?;
    let solution = solve_offline_lp(&env)?;
    let margin = feasibility_margin(&env)?;
    match &solution {
        LpSolution::Optimal { optimal_reward, .. } => {
            println!("R* = {}", optimal_reward);
            println!("epsilon = {}", margin.epsilon);
        }
        LpSolution::Infeasible => {
            println!("status = infeasible");
            println!("epsilon = {}", margin.epsilon);
            return Ok(ExitCode::from(3));
        }
    }
    if let Some(path) = &args.qstar {
        let policy = solution.policy().expect("optimal solution has a policy");
        let mut csv = String::from("availability_set,super_arm,probability\n");
        for (z, dist) in policy.support() {
            for (s, p) in dist.entries() {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    set_csv_field(z),
                    set_csv_field(s),
                    p
                ));
            }
        }
        if path.as_os_str() == "-" {
            print!("{}", csv);
        } else {
            std::fs::write(path, csv)?;
            println!("q* table written to {}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bound(args: BoundArgs) -> Result<ExitCode, HarnessError> {
    if args.horizon < 2 || args.eta <= 0.0 || args.n == 0 || args.m == 0 || args.m > args.n {
        return Err(HarnessError::InvalidSpec(
            "bound requires n >= m >= 1, horizon >= 2, eta > 0".to_string(),
        ));
    }
    let bound = regret_upper_bound(args.n, args.m, args.horizon, args.eta, args.wmax);
    println!("regret_bound = {}", bound);
    println!("beta1 = {}", beta1(args.wmax));
    println!("beta2 = {}", beta2(args.wmax));
    let b = stability_constant(args.n, args.m, args.eta, args.wmax);
    println!("B = {}", b);
    if let Some(eps) = args.epsilon {
        if eps > 0.0 {
            println!("stability_bound = {}", b / eps);
        } else {
            println!("stability_bound = unavailable (epsilon <= 0)");
        }
    }
    Ok(ExitCode::SUCCESS)
}
