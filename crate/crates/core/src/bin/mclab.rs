use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use completion_lab::capacity::{achievability_check, upper_bound_arbitrary, upper_bound_row_orders};
use completion_lab::harness::{emit_report, exact_map_error, write_summary, Experiment, ExperimentConfig, OutputFormat};
use completion_lab::info_measures::{
    exact_finite_n, hidden_marginal_entropy_rate_bounds, joint_entropy_rate, smb_estimate, smb_estimate_row,
};
use completion_lab::{Error, Result};

/// Matrix completion laboratory: capacities, simulations and sweeps.
#[derive(Debug, Parser)]
#[command(name = "mclab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv, report or both.
    #[arg(long, global = true, default_value = "both")]
    format: OutputFormat,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the completion capacity of the configured model.
    Capacity {
        /// Also report the finite-n bound range over all row orders.
        #[arg(long)]
        row_orders: bool,
    },
    /// Run one trial and print every stage.
    Simulate {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run the full observation-rate sweep.
    Sweep,
    /// Entropy-rate bounds, Monte Carlo estimates and finite-n tables.
    Estimate {
        #[arg(long)]
        p: Option<f64>,
    },
    /// Exact MAP error and finite-n identity checks.
    Oracle {
        #[arg(long)]
        p: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Error::Usage(e.to_string()))?;
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Usage("--config <path> is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().or_else(|| cfg.output.clone());
    let exp = Experiment::new(&cfg)?;
    match cli.command {
        Command::Capacity { row_orders } => capacity(&exp, out.as_deref(), cli.format, row_orders),
        Command::Simulate { p, trial } => simulate(&exp, p, trial),
        Command::Sweep => sweep(&exp, out.as_deref(), cli.format),
        Command::Estimate { p } => estimate(&exp, p, out.as_deref()),
        Command::Oracle { p } => oracle(&exp, p),
    }
}

fn single_p(exp: &Experiment, p: Option<f64>) -> Result<f64> {
    p.or(exp.config.p)
        .ok_or_else(|| Error::Usage("no observation rate: pass --p or set `p` in the config".into()))
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(std::fs::File) -> Result<()>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    let f = std::fs::File::create(&path).map_err(|e| io(&path, e))?;
    body(f)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn io(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn capacity(exp: &Experiment, out: Option<&Path>, format: OutputFormat, row_orders: bool) -> Result<()> {
    let report = exp.predict()?;
    let stdout = std::io::stdout();
    report.write_report(stdout.lock()).map_err(|e| io(Path::new("<stdout>"), e))?;
    let p = report.threshold.min(1.0);
    for b in upper_bound_arbitrary(&exp.model, &exp.dmc, p, &exp.config.bound_n, &exp.config.caps)? {
        println!("bound.n{} = {}", b.n, b.bound);
    }
    if row_orders {
        let n = exp.config.bound_n.iter().copied().max().unwrap_or(1);
        let (lo, hi) = upper_bound_row_orders(&exp.model, &exp.dmc, p, n, &exp.config.caps)?;
        println!("bound_row_orders.n{n} = [{lo}, {hi}]");
    }
    if let Some(p) = exp.config.p {
        let dmc = (!exp.dmc.is_identity()).then_some(&exp.dmc);
        let check = achievability_check(&exp.model, dmc, p, &exp.config.estimator, &exp.config.caps)?;
        for (k, v) in check.key_values() {
            println!("region.{k} = {v}");
        }
    }
    if let Some(dir) = out {
        if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
            write_file(dir, "capacity.csv", |f| report.write_csv(f))?;
        }
        if matches!(format, OutputFormat::Report | OutputFormat::Both) {
            write_file(dir, "capacity.txt", |f| {
                report.write_report(f).map_err(|e| io(&dir.join("capacity.txt"), e))
            })?;
        }
    }
    Ok(())
}

fn simulate(exp: &Experiment, p: Option<f64>, trial: usize) -> Result<()> {
    let p = single_p(exp, p)?;
    let d = exp.run_trial_detailed(p, trial)?;
    println!("p = {p}, trial = {trial}, seed = {}", exp.config.seed);
    println!("truth:\n{}", d.truth);
    println!("observed ({} of {} cells):\n{}", d.result.observed, d.truth.cells().len(), d.observed);
    match &d.outcome {
        Some(o) => {
            println!("status = {}", o.status.label());
            if let Some(e) = &o.estimate {
                println!("estimate:\n{e}");
            }
            if let Some(s) = o.score {
                println!("log2 posterior = {s}");
            }
            println!("tie = {}", o.tie);
        }
        None => println!("skipped: {}", d.result.skipped.as_deref().unwrap_or("")),
    }
    println!("success = {}", d.result.success);
    Ok(())
}

fn sweep(exp: &Experiment, out: Option<&Path>, format: OutputFormat) -> Result<()> {
    let dir = out.unwrap_or(Path::new("out"));
    let runs: Vec<(PathBuf, Experiment)> = if exp.config.epsilon_axis.is_empty() {
        vec![(dir.to_path_buf(), exp.clone())]
    } else {
        exp.config
            .epsilon_axis
            .iter()
            .map(|&eps| Ok((dir.join(format!("eps_{eps}")), exp.with_epsilon(eps)?)))
            .collect::<Result<_>>()?
    };
    for (dir, run) in runs {
        let report = run.run_sweep()?;
        write_summary(&report, std::io::stdout().lock()).map_err(|e| io(Path::new("<stdout>"), e))?;
        for path in emit_report(&report, &dir, format)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn estimate(exp: &Experiment, p: Option<f64>, out: Option<&Path>) -> Result<()> {
    let (model, est, caps) = (&exp.model, &exp.config.estimator, &exp.config.caps);
    let trials = if est.trials == 0 { 100 } else { est.trials };
    println!("joint_entropy_rate = {}", joint_entropy_rate(model));
    let smb = smb_estimate(model, est.smb_length, trials, exp.config.seed);
    println!("smb_joint = {} ± {}", smb.mean, smb.stderr);
    for r in 0..model.k() {
        let b = hidden_marginal_entropy_rate_bounds(model, r, est.horizon, caps)?;
        let s = smb_estimate_row(model, r, est.smb_length, trials, exp.config.seed);
        println!(
            "row {}: rate in [{}, {}] (horizon {}), smb {} ± {}",
            r + 1,
            b.lower,
            b.upper,
            b.horizon,
            s.mean,
            s.stderr
        );
    }
    let p = match single_p(exp, p) {
        Ok(p) => p,
        Err(_) => exp.predict().map(|r| r.threshold.min(1.0)).unwrap_or(0.5),
    };
    let table = exact_finite_n(model, &exp.dmc, p, est.n, caps)?;
    println!("finite-n table at p = {p}, n = {}:", est.n);
    table.write_csv(std::io::stdout().lock())?;
    if let Some(dir) = out {
        write_file(dir, "finite_n.csv", |f| table.write_csv(f))?;
    }
    Ok(())
}

fn oracle(exp: &Experiment, p: Option<f64>) -> Result<()> {
    let p = single_p(exp, p)?;
    let (model, caps) = (&exp.model, &exp.config.caps);
    let err = exact_map_error(model, &exp.dmc, p, exp.config.n, caps)?;
    println!("exact_map_error(p={p}, n={}) = {err}", exp.config.n);
    let table = exact_finite_n(model, &exp.dmc, p, exp.config.estimator.n, caps)?;
    for r in 0..model.k() {
        println!(
            "row {}: erasure identity residual {:e}, noisy identity residual {:e}",
            r + 1,
            table.erasure_identity_residual(r),
            table.noisy_identity_residual(r)
        );
    }
    println!("chain rule residual {:e}", table.chain_rule_residual());
    Ok(())
}
