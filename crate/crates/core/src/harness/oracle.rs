//! Exact error probability of the MAP decoder on small instances.

use crate::channels::{Cell, Dmc, ObservedMatrix};
use crate::decoders::{log_evidence_of, map_decode_viterbi};
use crate::error::{Error, Result};
use crate::numeric::{fpow, CompensatedSum};
use crate::source_models::SourceModel;
use crate::WorkCaps;

/// Operation count of [`exact_map_error`].
pub fn exact_map_error_work(model: &SourceModel, dmc: &Dmc, n: usize) -> f64 {
    let states = model.num_states();
    fpow(dmc.q_out() + 1, model.k() * n) * (n * states * states) as f64
}

/// `P(MAP estimate ≠ M)` summed exactly over every observation.
///
/// For each observation `z` the missed mass is `P(z) - P(x̂(z), z)`, i.e.
/// the probability of every source matrix other than the estimate.
pub fn exact_map_error(model: &SourceModel, dmc: &Dmc, p: f64, n: usize, caps: &WorkCaps) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Usage(format!("observation rate {p} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::Usage("n must be at least 1".into()));
    }
    let work = exact_map_error_work(model, dmc, n);
    if work > caps.enumeration {
        return Err(Error::WorkCap {
            what: "exact MAP error enumeration",
            required: work,
            cap: caps.enumeration,
        });
    }
    let (k, qo) = (model.k(), dmc.q_out());
    let cells = k * n;
    let outcomes = (qo + 1).pow(cells as u32);
    let mut missed = CompensatedSum::new();
    let mut buf = vec![Cell::Erased; cells];
    for idx in 0..outcomes {
        let mut rest = idx;
        for c in buf.iter_mut().rev() {
            let d = rest % (qo + 1);
            rest /= qo + 1;
            *c = if d == qo { Cell::Erased } else { Cell::Observed(d as u32) };
        }
        let obs = ObservedMatrix::new(k, n, qo, buf.clone())?;
        let evidence = log_evidence_of(&obs, model, dmc, p)?;
        if evidence == f64::NEG_INFINITY {
            continue;
        }
        let outcome = map_decode_viterbi(&obs, model, dmc, p)?;
        let posterior = outcome.score.map_or(0.0, f64::exp2);
        missed.add(evidence.exp2() * (1.0 - posterior).max(0.0));
    }
    Ok(missed.value().clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoders::map_decode_exhaustive;
    use crate::source_models::{column_symbols, sequence_log_prob, ColumnPmf, MarkovColumnSource, MatrixSample};

    /// Sums over (matrix, channel output, erasure mask) triples directly.
    fn brute_force(model: &SourceModel, dmc: &Dmc, p: f64, n: usize) -> f64 {
        let (k, q, qo) = (model.k(), model.q(), dmc.q_out());
        let cells = k * n;
        let mut total = 0.0;
        for xi in 0..q.pow(cells as u32) {
            let xs: Vec<u32> = column_symbols(xi, cells, q);
            let x = MatrixSample::new(k, n, q, xs.clone()).unwrap();
            let px = sequence_log_prob(model, &x).exp2();
            if px == 0.0 {
                continue;
            }
            for yi in 0..qo.pow(cells as u32) {
                let ys = column_symbols(yi, cells, qo);
                let py: f64 = xs.iter().zip(&ys).map(|(&a, &b)| dmc.w(a, b)).product();
                if py == 0.0 {
                    continue;
                }
                for mask in 0..(1usize << cells) {
                    let z: Vec<Cell> = (0..cells)
                        .map(|c| if mask >> c & 1 == 1 { Cell::Observed(ys[c]) } else { Cell::Erased })
                        .collect();
                    let seen = mask.count_ones() as i32;
                    let pm = p.powi(seen) * (1.0 - p).powi(cells as i32 - seen);
                    if pm == 0.0 {
                        continue;
                    }
                    let obs = ObservedMatrix::new(k, n, qo, z).unwrap();
                    let est = map_decode_exhaustive(&obs, model, dmc, p, &WorkCaps::default()).unwrap();
                    if !est.is_correct(&x) {
                        total += px * py * pm;
                    }
                }
            }
        }
        total
    }

    #[test]
    fn full_observation_has_no_error() {
        let m = SourceModel::Iid(ColumnPmf::new(2, 2, vec![0.4, 0.1, 0.1, 0.4]).unwrap());
        let e = exact_map_error(&m, &Dmc::identity(2), 1.0, 2, &WorkCaps::default()).unwrap();
        assert!(e.abs() < 1e-12, "{e}");
    }

    #[test]
    fn single_uniform_bit() {
        let m = SourceModel::Iid(ColumnPmf::uniform(1, 2));
        for p in [0.0, 0.3, 0.8] {
            let e = exact_map_error(&m, &Dmc::identity(2), p, 1, &WorkCaps::default()).unwrap();
            assert!((e - (1.0 - p) / 2.0).abs() < 1e-12, "p={p} e={e}");
        }
    }

    #[test]
    fn agrees_with_brute_force() {
        let sticky = SourceModel::Markov(MarkovColumnSource::sticky(1, 2, 0.8).unwrap());
        let generic = SourceModel::Iid(ColumnPmf::new(2, 2, vec![0.4, 0.1, 0.1, 0.4]).unwrap());
        let bsc = Dmc::bsc(0.2).unwrap();
        for (m, d, n) in [(&sticky, &bsc, 3), (&generic, &bsc, 2), (&generic, &Dmc::identity(2), 2)] {
            let fast = exact_map_error(m, d, 0.6, n, &WorkCaps::default()).unwrap();
            let slow = brute_force(m, d, 0.6, n);
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }

    #[test]
    fn cap_is_enforced() {
        let m = SourceModel::Iid(ColumnPmf::uniform(2, 2));
        let tiny = WorkCaps {
            enumeration: 10.0,
            ..WorkCaps::default()
        };
        assert!(matches!(
            exact_map_error(&m, &Dmc::identity(2), 0.5, 3, &tiny),
            Err(Error::WorkCap { .. })
        ));
    }
}
