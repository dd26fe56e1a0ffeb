// Entropy rate of a single row of a Markov column process. The row is a
// hidden Markov process; its rate is bracketed by conditional entropies
// and checked against a Monte Carlo log-loss estimate.

use completion_lab::info_measures::{hidden_marginal_entropy_rate_bounds, joint_entropy_rate, smb_estimate_row};
use completion_lab::source_models::{column_index, column_symbols, MarkovColumnSource, SourceModel};
use completion_lab::WorkCaps;

fn main() -> completion_lab::Result<()> {
    // Row 1 copies the previous row 2 w.p. 0.9; row 2 becomes the XOR of
    // the previous column w.p. 0.8.
    let mut t = vec![0.0; 16];
    for s in 0..4 {
        let prev = column_symbols(s, 2, 2);
        for a in 0..2u32 {
            for b in 0..2u32 {
                let pa = if a == prev[1] { 0.9 } else { 0.1 };
                let pb = if b == prev[0] ^ prev[1] { 0.8 } else { 0.2 };
                t[s * 4 + column_index(&[a, b], 2)] = pa * pb;
            }
        }
    }
    let model = SourceModel::Markov(MarkovColumnSource::new(2, 2, t)?);
    let caps = WorkCaps::default();
    println!("joint rate = {:.6}", joint_entropy_rate(&model));
    for horizon in [2, 4, 8, 12] {
        let b = hidden_marginal_entropy_rate_bounds(&model, 0, horizon, &caps)?;
        println!("horizon {horizon:>2}: {:.6} <= H(row 1) <= {:.6}", b.lower, b.upper);
    }
    let mc = smb_estimate_row(&model, 0, 5000, 40, 7);
    println!("Monte Carlo: {:.6} ± {:.6}", mc.mean, mc.stderr);
    Ok(())
}
