mod common;

use common::{random_iid, random_markov};
use completion_lab::capacity::{capacity_ergodic, capacity_iid, EstimatorConfig};
use completion_lab::channels::{apply_erasure, Cell, Dmc, ErasureSpec, ObservedMatrix};
use completion_lab::decoders::{map_decode_viterbi, posterior_score};
use completion_lab::info_measures::{entropy_bits, exact_finite_n};
use completion_lab::source_models::{
    column_symbols, row_sequence_log_prob, sample_matrix, sequence_log_prob, ColumnPmf, MatrixSample, SourceModel,
};
use completion_lab::WorkCaps;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model_for(seed: u64, k: usize, q: usize, markov: bool) -> SourceModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if markov {
        random_markov(&mut rng, k, q)
    } else {
        random_iid(&mut rng, k, q)
    }
}

fn all_matrices(k: usize, n: usize, q: usize) -> impl Iterator<Item = MatrixSample> {
    (0..q.pow((k * n) as u32)).map(move |i| MatrixSample::new(k, n, q, column_symbols(i, k * n, q)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matrix_law_sums_to_one(seed: u64, k in 1usize..=2, n in 1usize..=5, markov: bool) {
        let m = model_for(seed, k, 2, markov);
        let total: f64 = all_matrices(k, n, 2).map(|x| sequence_log_prob(&m, &x).exp2()).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn row_law_is_the_matrix_marginal(seed: u64, n in 1usize..=4, row in 0usize..2, markov: bool) {
        let m = model_for(seed, 2, 2, markov);
        for xi in 0..(1usize << n) {
            let x = column_symbols(xi, n, 2);
            let marginal: f64 = all_matrices(2, n, 2)
                .filter(|s| s.row(row) == x.as_slice())
                .map(|s| sequence_log_prob(&m, &s).exp2())
                .sum();
            prop_assert!((row_sequence_log_prob(&m, row, &x).exp2() - marginal).abs() < 1e-12);
        }
    }

    #[test]
    fn iid_capacity_between_one_and_k(seed: u64, k in 1usize..=3, q in 2usize..=3) {
        let SourceModel::Iid(pmf) = model_for(seed, k, q, false) else { unreachable!() };
        let c = capacity_iid(&pmf).unwrap().capacity;
        prop_assert!(c >= 1.0 - 1e-12 && c <= k as f64 + 1e-12);
    }

    #[test]
    fn entropy_is_bounded(probs in prop::collection::vec(0.0f64..1.0, 1..16)) {
        let total: f64 = probs.iter().sum();
        prop_assume!(total > 0.0);
        let p: Vec<f64> = probs.iter().map(|v| v / total).collect();
        let h = entropy_bits(&p);
        prop_assert!(h >= 0.0 && h <= (p.len() as f64).log2() + 1e-12);
    }

    #[test]
    fn posterior_is_normalized_and_map_is_optimal(
        seed: u64, n in 1usize..=4, p in 0.1f64..0.95, markov: bool, noisy: bool,
    ) {
        let m = model_for(seed, 2, 2, markov);
        let dmc = if noisy { Dmc::bsc(0.15).unwrap() } else { Dmc::identity(2) };
        let truth = sample_matrix(&m, n, seed);
        let y = completion_lab::channels::apply_dmc(&truth, &dmc, seed ^ 5).unwrap();
        let obs = apply_erasure(&y, ErasureSpec::new(p).unwrap(), seed ^ 9);
        let map = map_decode_viterbi(&obs, &m, &dmc, p).unwrap();
        let best = map.score.unwrap();
        let mut total = 0.0;
        for x in all_matrices(2, n, 2) {
            let s = posterior_score(&obs, &m, &dmc, p, &x).unwrap();
            prop_assert!(s <= best + 1e-9);
            total += s.exp2();
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn revealing_truth_never_lowers_its_posterior(seed: u64, n in 1usize..=5, markov: bool) {
        let m = model_for(seed, 2, 2, markov);
        let id = Dmc::identity(2);
        let truth = sample_matrix(&m, n, seed);
        let mut obs = ObservedMatrix::new(2, n, 2, vec![Cell::Erased; 2 * n]).unwrap();
        let mut last = posterior_score(&obs, &m, &id, 0.5, &truth).unwrap();
        let mut order: Vec<usize> = (0..2 * n).collect();
        order.rotate_left((seed % (2 * n as u64)) as usize);
        for c in order {
            obs.set(c / n, c % n, Cell::Observed(truth.get(c / n, c % n)));
            let now = posterior_score(&obs, &m, &id, 0.5, &truth).unwrap();
            prop_assert!(now >= last - 1e-9);
            last = now;
        }
    }

    #[test]
    fn finite_n_identities_hold(seed: u64, n in 1usize..=3, p in 0.0f64..=1.0, markov: bool) {
        let m = model_for(seed, 2, 2, markov);
        let dmc = Dmc::bsc(0.2).unwrap();
        let t = exact_finite_n(&m, &dmc, p, n, &WorkCaps::default()).unwrap();
        for r in 0..2 {
            prop_assert!(t.erasure_identity_residual(r).abs() < 1e-9);
            prop_assert!(t.noisy_identity_residual(r).abs() < 1e-9);
            prop_assert!(t.rows[r].c >= -1e-12);
        }
        prop_assert!(t.chain_rule_residual().abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn single_row_chain_has_unit_capacity(seed: u64, q in 2usize..=3) {
        let m = model_for(seed, 1, q, true);
        let r = capacity_ergodic(&m, &EstimatorConfig::default(), &WorkCaps::default()).unwrap();
        prop_assert!((r.capacity - 1.0).abs() < 1e-9);
    }
}

#[test]
fn product_pmf_has_no_cross_row_information() {
    let m = SourceModel::Iid(ColumnPmf::product(3, &[vec![0.2, 0.3, 0.5], vec![0.6, 0.3, 0.1]]).unwrap());
    let t = exact_finite_n(&m, &Dmc::symmetric(3, 0.1).unwrap(), 0.4, 2, &WorkCaps::default()).unwrap();
    for r in &t.rows {
        assert!(r.a.abs() < 1e-12 && r.b.abs() < 1e-12 && r.c.abs() < 1e-12);
    }
}
