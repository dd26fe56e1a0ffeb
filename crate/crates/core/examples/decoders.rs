// MAP decoding by dynamic programming, cross-checked against brute force,
// and the joint-typicality decoder on a tiny erased matrix.

use completion_lab::channels::{apply_dmc, apply_erasure, Dmc, ErasureSpec};
use completion_lab::decoders::{map_decode_exhaustive, map_decode_viterbi, typicality_decode, TypicalityParams};
use completion_lab::source_models::{sample_matrix, ColumnPmf, MarkovColumnSource, SourceModel};
use completion_lab::WorkCaps;

fn main() -> completion_lab::Result<()> {
    let caps = WorkCaps::default();
    let model = SourceModel::Markov(MarkovColumnSource::sticky(2, 2, 0.85)?);
    let dmc = Dmc::bsc(0.1)?;
    let p = 0.6;
    let truth = sample_matrix(&model, 6, 2);
    let obs = apply_erasure(&apply_dmc(&truth, &dmc, 3)?, ErasureSpec::new(p)?, 4);
    let fast = map_decode_viterbi(&obs, &model, &dmc, p)?;
    let slow = map_decode_exhaustive(&obs, &model, &dmc, p, &caps)?;
    println!("truth:\n{truth}observed:\n{obs}");
    println!("MAP estimate:\n{}", fast.estimate.as_ref().expect("decoded"));
    println!(
        "log2 posterior {:.6} (exhaustive {:.6}), same estimate: {}, correct: {}",
        fast.score.unwrap(),
        slow.score.unwrap(),
        fast.estimate == slow.estimate,
        fast.is_correct(&truth)
    );

    let iid = SourceModel::Iid(ColumnPmf::new(2, 2, vec![0.4, 0.1, 0.1, 0.4])?);
    let id = Dmc::identity(2);
    let truth = sample_matrix(&iid, 10, 8);
    let obs = apply_erasure(&truth, ErasureSpec::new(0.8)?, 9);
    for eps in [0.05, 0.2, 0.5] {
        let params = TypicalityParams::for_model(&iid, 0.8, eps, 4, &caps)?;
        let out = typicality_decode(&obs, &iid, &id, &params, &caps)?;
        println!(
            "typicality eps={eps}: {} ({} erased cells), correct: {}",
            out.status.label(),
            obs.erased_count(),
            out.is_correct(&truth)
        );
    }
    Ok(())
}
