// Observation-rate sweep with the MAP decoder: empirical error rates with
// Wilson intervals, the predicted threshold and the isotonic transition.

use completion_lab::harness::{emit_report, run_sweep, ExperimentConfig, OutputFormat};

const CONFIG: &str = r#"{
  "model": { "type": "identical_rows", "k": 3, "q": 2 },
  "n": 60,
  "trials": 200,
  "grid": { "p_min": 0.1, "p_max": 0.9, "steps": 9 },
  "seed": 2024
}"#;

fn main() -> completion_lab::Result<()> {
    let cfg = ExperimentConfig::from_json_str(CONFIG)?;
    let report = run_sweep(&cfg)?;
    println!("predicted p* = {:?}", report.predicted_threshold);
    for r in &report.rows {
        println!(
            "p={:.2} errors {:>3}/{} rate {:.3} [{:.3}, {:.3}] feasible={}",
            r.p, r.errors, r.trials, r.error_rate, r.ci_low, r.ci_high, r.predicted_feasible
        );
    }
    match &report.transition {
        Ok(t) => println!("p_hat = {:.4} in [{:.4}, {:.4}]", t.p_hat, t.p_low, t.p_high),
        Err(why) => println!("no transition: {why}"),
    }
    let dir = std::env::temp_dir().join("completion_lab_phase_transition");
    for path in emit_report(&report, &dir, OutputFormat::Both)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
