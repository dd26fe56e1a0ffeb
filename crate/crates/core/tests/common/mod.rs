#![allow(dead_code)]

use completion_lab::channels::Dmc;
use completion_lab::source_models::{ColumnPmf, MarkovColumnSource, SourceModel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Strictly positive random row-stochastic vector.
pub fn random_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

pub fn random_iid(rng: &mut ChaCha8Rng, k: usize, q: usize) -> SourceModel {
    let states = q.pow(k as u32);
    SourceModel::Iid(ColumnPmf::new(k, q, random_simplex(rng, states)).unwrap())
}

pub fn random_markov(rng: &mut ChaCha8Rng, k: usize, q: usize) -> SourceModel {
    let states = q.pow(k as u32);
    let t: Vec<f64> = (0..states).flat_map(|_| random_simplex(rng, states)).collect();
    SourceModel::Markov(MarkovColumnSource::new(k, q, t).unwrap())
}

pub fn random_dmc(rng: &mut ChaCha8Rng, q: usize) -> Dmc {
    let w: Vec<f64> = (0..q).flat_map(|_| random_simplex(rng, q)).collect();
    Dmc::new(q, q, w).unwrap()
}
