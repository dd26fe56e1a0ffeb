// Exact MAP error probability of a tiny instance against Monte Carlo.

use completion_lab::channels::Dmc;
use completion_lab::harness::{exact_map_error, run_sweep, wilson_interval, ExperimentConfig, Z95};
use completion_lab::source_models::{MarkovColumnSource, SourceModel};
use completion_lab::WorkCaps;

fn main() -> completion_lab::Result<()> {
    let model = SourceModel::Markov(MarkovColumnSource::sticky(1, 2, 0.8)?);
    let caps = WorkCaps::default();
    for p in [0.2, 0.6, 1.0] {
        let e = exact_map_error(&model, &Dmc::identity(2), p, 3, &caps)?;
        println!("p={p}: exact error {e:.6}");
    }

    let cfg = ExperimentConfig::from_json_str(
        r#"{ "model": { "type": "sticky", "k": 1, "q": 2, "stay": 0.8 },
             "n": 3, "trials": 10000, "p": 0.6, "seed": 42 }"#,
    )?;
    let row = &run_sweep(&cfg)?.rows[0];
    let (lo, hi) = wilson_interval(row.errors, row.trials, Z95);
    println!("Monte Carlo at p=0.6: {:.4} [{lo:.4}, {hi:.4}]", row.error_rate);
    Ok(())
}
