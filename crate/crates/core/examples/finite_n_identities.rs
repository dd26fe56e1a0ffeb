// Exact finite-n information quantities for a small noisy Markov model,
// with the residuals of the identities that tie them together.

use completion_lab::capacity::upper_bound_arbitrary;
use completion_lab::channels::Dmc;
use completion_lab::info_measures::exact_finite_n;
use completion_lab::source_models::{MarkovColumnSource, SourceModel};
use completion_lab::WorkCaps;

fn main() -> completion_lab::Result<()> {
    let model = SourceModel::Markov(MarkovColumnSource::sticky(2, 2, 0.8)?);
    let dmc = Dmc::bsc(0.1)?;
    let caps = WorkCaps::default();
    let p = 0.7;
    for n in 1..=4 {
        let t = exact_finite_n(&model, &dmc, p, n, &caps)?;
        let r = &t.rows[0];
        println!(
            "n={n}: a={:.5} b={:.5} c2={:.5} | residuals {:.1e} {:.1e} {:.1e}",
            r.a,
            r.b,
            t.rows[1].c,
            t.erasure_identity_residual(0),
            t.noisy_identity_residual(0),
            t.chain_rule_residual()
        );
    }
    for b in upper_bound_arbitrary(&model, &dmc, p, &[1, 2, 3, 4], &caps)? {
        println!("bound n={}: {:.6}", b.n, b.bound);
    }
    let t = exact_finite_n(&model, &dmc, p, 2, &caps)?;
    t.write_csv(std::io::stdout())?;
    Ok(())
}
