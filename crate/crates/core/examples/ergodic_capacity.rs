// Capacity of a Markov column process. The per-row correction depends on
// the observation rate, so it is solved self-consistently.

use completion_lab::capacity::{capacity_ergodic, capacity_ergodic_noisy, EstimatorConfig};
use completion_lab::channels::Dmc;
use completion_lab::source_models::{MarkovColumnSource, SourceModel};
use completion_lab::WorkCaps;

fn main() -> completion_lab::Result<()> {
    let est = EstimatorConfig {
        trials: 40,
        smb_length: 2000,
        ..EstimatorConfig::default()
    };
    let caps = WorkCaps::default();
    for stay in [0.5, 0.8, 0.9] {
        let model = SourceModel::Markov(MarkovColumnSource::sticky(2, 2, stay)?);
        let r = capacity_ergodic(&model, &est, &caps)?;
        let smb = r.smb_joint.expect("trials > 0");
        println!(
            "stay {stay}: C = {:.6} in [{:.6}, {:.6}], p* = {:.6}, a = {:.5} ({} iterations)",
            r.capacity, r.capacity_interval.0, r.capacity_interval.1, r.threshold, r.corrections[0], r.iterations
        );
        println!(
            "          joint rate {:.5}, Monte Carlo {:.5} ± {:.5}",
            r.joint_entropy, smb.mean, smb.stderr
        );
    }

    let model = SourceModel::Markov(MarkovColumnSource::sticky(2, 2, 0.8)?);
    let noisy = capacity_ergodic_noisy(&model, &Dmc::bsc(0.02)?, &est, &caps)?;
    println!("stay 0.8 through BSC(0.02): C = {:.6}", noisy.capacity);
    Ok(())
}
