//! Entropies, mutual informations and entropy rates, exact and estimated.
//!
//! Everything is in bits. The finite-n quantities come from exhaustive
//! enumeration of source matrices, channel noise and erasure patterns, so
//! they are exact up to floating point; the erasure mark is treated as one
//! extra output symbol.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::Dmc;
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, fpow, ipow, plogp, CompensatedSum};
use crate::source_models::{
    row_sequence_log_prob, row_symbol, sample_matrix, sequence_log_prob, MarkovColumnSource,
    SourceModel,
};
use crate::WorkCaps;

const DIST_TOL: f64 = 1e-9;

/// A probability vector fed to the measures below.
#[derive(Debug, Clone, PartialEq)]
pub struct DistTable {
    probs: Vec<f64>,
}

impl DistTable {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidModel("empty distribution".into()));
        }
        if let Some(v) = probs.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidModel(format!("probability {v} is negative or not finite")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DIST_TOL {
            return Err(Error::InvalidModel(format!("distribution sums to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Shannon entropy of a raw probability vector.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    compensated_sum(probs.iter().map(|&p| plogp(p)))
}

pub fn entropy(d: &DistTable) -> f64 {
    entropy_bits(&d.probs)
}

/// I(A;B) for a joint table indexed `a * b_size + b`.
pub fn mutual_information(joint: &DistTable, a_size: usize, b_size: usize) -> Result<f64> {
    if a_size * b_size != joint.len() {
        return Err(Error::Usage(format!(
            "split {a_size}x{b_size} does not match support size {}",
            joint.len()
        )));
    }
    let mut pa = vec![0.0; a_size];
    let mut pb = vec![0.0; b_size];
    for (idx, &p) in joint.probs.iter().enumerate() {
        pa[idx / b_size] += p;
        pb[idx % b_size] += p;
    }
    let mi = entropy_bits(&pa) + entropy_bits(&pb) - entropy_bits(&joint.probs);
    Ok(mi.max(0.0))
}

/// Σ_s π(s) H(T(·|s)).
pub fn markov_entropy_rate(chain: &MarkovColumnSource) -> f64 {
    let states = chain.num_states();
    compensated_sum(
        chain
            .stationary()
            .iter()
            .enumerate()
            .map(|(s, &pi)| pi * entropy_bits(&chain.transition()[s * states..(s + 1) * states])),
    )
}

/// Entropy rate of the column process (joint over all rows).
pub fn joint_entropy_rate(model: &SourceModel) -> f64 {
    match model {
        SourceModel::Iid(pmf) => entropy_bits(pmf.probs()),
        SourceModel::Markov(chain) => markov_entropy_rate(chain),
    }
}

/// Observation of the hidden column chain: `emission[s * outputs + y]` is
/// `P(y | column state s)`.
#[derive(Debug, Clone)]
pub struct Emission {
    outputs: usize,
    probs: Vec<f64>,
}

impl Emission {
    /// Deterministic projection onto a subset of rows (0-based, in order).
    pub fn rows(model: &SourceModel, rows: &[usize]) -> Self {
        let (k, q) = (model.k(), model.q());
        let states = model.num_states();
        let outputs = ipow(q, rows.len());
        let mut probs = vec![0.0; states * outputs];
        for s in 0..states {
            let y = rows
                .iter()
                .fold(0, |acc, &r| acc * q + row_symbol(s, r, k, q) as usize);
            probs[s * outputs + y] = 1.0;
        }
        Self { outputs, probs }
    }

    /// One row seen through a DMC.
    pub fn noisy_row(model: &SourceModel, row: usize, dmc: &Dmc) -> Self {
        let (k, q) = (model.k(), model.q());
        let states = model.num_states();
        let outputs = dmc.q_out();
        let mut probs = vec![0.0; states * outputs];
        for s in 0..states {
            let x = row_symbol(s, row, k, q);
            for y in 0..outputs {
                probs[s * outputs + y] = dmc.w(x, y as u32);
            }
        }
        Self { outputs, probs }
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }
}

/// Lower and upper bounds on an entropy rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBounds {
    pub lower: f64,
    pub upper: f64,
    pub horizon: usize,
}

impl RateBounds {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn exact(value: f64, horizon: usize) -> Self {
        Self {
            lower: value,
            upper: value,
            horizon,
        }
    }
}

/// Conditional-entropy sandwich for a function of the column chain:
/// `H(Y_m | Y^{m-1}, S_1) ≤ H̄(Y) ≤ H(Y_m | Y^{m-1})`, both computed by
/// enumerating every length-`m` output string with forward probabilities.
pub fn hidden_rate_bounds(
    model: &SourceModel,
    emission: &Emission,
    horizon: usize,
    caps: &WorkCaps,
) -> Result<RateBounds> {
    if horizon == 0 {
        return Err(Error::Usage("horizon must be at least 1".into()));
    }
    let states = model.num_states();
    let work = fpow(emission.outputs, horizon) * fpow(states, 3);
    if work > caps.horizon_work {
        return Err(Error::WorkCap {
            what: "entropy-rate horizon",
            required: work,
            cap: caps.horizon_work,
        });
    }
    let init = model.column_law();
    let mut acc = SandwichAcc {
        h_y: vec![CompensatedSum::new(); horizon + 1],
        h_ys: vec![CompensatedSum::new(); horizon + 1],
    };
    // alpha[s1 * states + s] = P(y^t, S_1 = s1, S_t = s)
    let outputs = emission.outputs;
    let per_first: Vec<Vec<f64>> = (0..outputs)
        .map(|y| {
            let mut alpha = vec![0.0; states * states];
            for s in 0..states {
                alpha[s * states + s] = init[s] * emission.probs[s * outputs + y];
            }
            alpha
        })
        .collect();
    // Each first symbol's subtree runs independently; partial sums are
    // merged in symbol order so the result does not depend on scheduling.
    let parts: Vec<SandwichAcc> = per_first
        .into_par_iter()
        .map(|alpha| {
            let mut part = SandwichAcc {
                h_y: vec![CompensatedSum::new(); horizon + 1],
                h_ys: vec![CompensatedSum::new(); horizon + 1],
            };
            sandwich_dfs(model, emission, &alpha, 1, horizon, &mut part);
            part
        })
        .collect();
    for part in parts {
        for t in 0..=horizon {
            acc.h_y[t].add(part.h_y[t].value());
            acc.h_ys[t].add(part.h_ys[t].value());
        }
    }
    let h_s1 = entropy_bits(init);
    let h_y = |t: usize| if t == 0 { 0.0 } else { acc.h_y[t].value() };
    let h_ys = |t: usize| if t == 0 { h_s1 } else { acc.h_ys[t].value() };
    let upper = h_y(horizon) - h_y(horizon - 1);
    let lower = (h_ys(horizon) - h_ys(horizon - 1)).min(upper);
    Ok(RateBounds {
        lower: lower.max(0.0),
        upper,
        horizon,
    })
}

struct SandwichAcc {
    h_y: Vec<CompensatedSum>,
    h_ys: Vec<CompensatedSum>,
}

fn sandwich_dfs(
    model: &SourceModel,
    emission: &Emission,
    alpha: &[f64],
    depth: usize,
    horizon: usize,
    acc: &mut SandwichAcc,
) {
    let states = model.num_states();
    let total: f64 = alpha.iter().sum();
    if total == 0.0 {
        return;
    }
    acc.h_y[depth].add(plogp(total));
    for s1 in 0..states {
        let joint: f64 = alpha[s1 * states..(s1 + 1) * states].iter().sum();
        acc.h_ys[depth].add(plogp(joint));
    }
    if depth == horizon {
        return;
    }
    let outputs = emission.outputs;
    let mut moved = vec![0.0; states * states];
    for s1 in 0..states {
        for s in 0..states {
            let a = alpha[s1 * states + s];
            if a == 0.0 {
                continue;
            }
            for u in 0..states {
                moved[s1 * states + u] += a * model.transition_prob(s, u);
            }
        }
    }
    let mut next = vec![0.0; states * states];
    for y in 0..outputs {
        for s1 in 0..states {
            for u in 0..states {
                next[s1 * states + u] = moved[s1 * states + u] * emission.probs[u * outputs + y];
            }
        }
        sandwich_dfs(model, emission, &next, depth + 1, horizon, acc);
    }
}

/// Sandwich bounds on the entropy rate of row `row` (0-based).
pub fn hidden_marginal_entropy_rate_bounds(
    model: &SourceModel,
    row: usize,
    horizon: usize,
    caps: &WorkCaps,
) -> Result<RateBounds> {
    if row >= model.k() {
        return Err(Error::Usage(format!("row {row} out of range for k={}", model.k())));
    }
    if let SourceModel::Markov(chain) = model {
        // A single-row chain is its own row process.
        if model.k() == 1 && horizon >= 2 {
            return Ok(RateBounds::exact(markov_entropy_rate(chain), horizon));
        }
    }
    hidden_rate_bounds(model, &Emission::rows(model, &[row]), horizon, caps)
}

/// Monte Carlo mean and standard error of a per-symbol log-loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmbEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

fn mean_stderr(values: &[f64]) -> SmbEstimate {
    let t = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / t;
    let var = if values.len() > 1 {
        compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (t - 1.0)
    } else {
        0.0
    };
    SmbEstimate {
        mean,
        stderr: (var / t).sqrt(),
        trials: values.len(),
    }
}

/// `-(1/n) log2 p(sample)` averaged over independent samples.
pub fn smb_estimate(model: &SourceModel, n: usize, trials: usize, seed: u64) -> SmbEstimate {
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let m = sample_matrix(model, n, crate::numeric::derive_seed(seed, &[t as u64]));
            -sequence_log_prob(model, &m) / n as f64
        })
        .collect();
    mean_stderr(&values)
}

/// Row variant of [`smb_estimate`], targeting `H̄(X_row)`.
pub fn smb_estimate_row(model: &SourceModel, row: usize, n: usize, trials: usize, seed: u64) -> SmbEstimate {
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let m = sample_matrix(model, n, crate::numeric::derive_seed(seed, &[t as u64]));
            -row_sequence_log_prob(model, row, m.row(row)) / n as f64
        })
        .collect();
    mean_stderr(&values)
}

/// Sparse joint law over a handful of small discrete variables.
struct Joint {
    cards: Vec<usize>,
    nvars: usize,
    symbols: Vec<u16>,
    probs: Vec<f64>,
}

impl Joint {
    fn new(cards: Vec<usize>) -> Self {
        let nvars = cards.len();
        Self {
            cards,
            nvars,
            symbols: Vec::new(),
            probs: Vec::new(),
        }
    }

    fn push(&mut self, symbols: &[u16], p: f64) {
        if p > 0.0 {
            self.symbols.extend_from_slice(symbols);
            self.probs.push(p);
        }
    }

    fn entropy(&self, vars: &[usize]) -> f64 {
        if vars.is_empty() {
            return 0.0;
        }
        let mut keyed: Vec<(u64, f64)> = self
            .probs
            .iter()
            .enumerate()
            .map(|(o, &p)| {
                let row = &self.symbols[o * self.nvars..(o + 1) * self.nvars];
                let key = vars
                    .iter()
                    .fold(0u64, |acc, &v| acc * self.cards[v] as u64 + row[v] as u64);
                (key, p)
            })
            .collect();
        keyed.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut h = CompensatedSum::new();
        let mut i = 0;
        while i < keyed.len() {
            let key = keyed[i].0;
            let mut mass = CompensatedSum::new();
            while i < keyed.len() && keyed[i].0 == key {
                mass.add(keyed[i].1);
                i += 1;
            }
            h.add(plogp(mass.value()));
        }
        h.value()
    }

    /// I(A; B | C) = H(A,C) + H(B,C) - H(A,B,C) - H(C).
    fn cmi(&self, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        let cat = |xs: &[&[usize]]| xs.concat();
        self.entropy(&cat(&[a, c])) + self.entropy(&cat(&[b, c]))
            - self.entropy(&cat(&[a, b, c]))
            - self.entropy(c)
    }
}

/// Distribution of one row string over `q^n`, index with symbol 1 most
/// significant.
fn row_string_law(model: &SourceModel, row: usize, n: usize) -> Vec<f64> {
    let q = model.q();
    (0..ipow(q, n))
        .map(|idx| row_sequence_log_prob(model, row, &digits(idx, n, q)).exp2())
        .collect()
}

fn digits(mut idx: usize, len: usize, base: usize) -> Vec<u32> {
    let mut out = vec![0u32; len];
    for slot in out.iter_mut().rev() {
        *slot = (idx % base) as u32;
        idx /= base;
    }
    out
}

fn erasure_mask_prob(mask: usize, n: usize, p: f64) -> f64 {
    (0..n)
        .map(|i| if mask >> (n - 1 - i) & 1 == 1 { p } else { 1.0 - p })
        .product()
}

/// Per-row quantities of the noiseless pipeline (erasure applied to X).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiselessRowTerms {
    /// H(X^n)
    pub h: f64,
    /// I(X^n; E^n), E the erasure output of X.
    pub mi_erasure: f64,
    /// a(n) = (1/n) Σ_i I(X_i; E_{i+1}^n | X^{i-1}).
    pub a: f64,
}

/// Per-row quantities of the noisy pipeline (DMC output Y, erased into Z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoisyRowTerms {
    /// I(X^n; Y^n)
    pub mi_dmc: f64,
    /// I(X^n; Z^n)
    pub mi_observed: f64,
    /// b(n) = (1/n) Σ_i I(Y_i; Z_{i+1}^n | Y^{i-1}).
    pub b: f64,
    /// H(Z^n)
    pub h_observed: f64,
    /// H(Z^n | X^n)
    pub h_observed_given_source: f64,
}

fn check_row_work(model: &SourceModel, q_out: usize, n: usize, caps: &WorkCaps) -> Result<()> {
    let work = fpow(model.q(), n) * fpow(q_out, n) * fpow(2, n) * (3 * n) as f64;
    if work > caps.enumeration {
        return Err(Error::WorkCap {
            what: "finite-n row enumeration",
            required: work,
            cap: caps.enumeration,
        });
    }
    Ok(())
}

pub fn noiseless_row_terms(
    model: &SourceModel,
    row: usize,
    p: f64,
    n: usize,
    caps: &WorkCaps,
) -> Result<NoiselessRowTerms> {
    if n == 0 {
        return Err(Error::Usage("n must be at least 1".into()));
    }
    check_row_work(model, 1, n, caps)?;
    let q = model.q();
    let law = row_string_law(model, row, n);
    let mut cards = vec![q; n];
    cards.extend(std::iter::repeat(q + 1).take(n));
    let mut joint = Joint::new(cards);
    let mut buf = vec![0u16; 2 * n];
    for (xi, &px) in law.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let x = digits(xi, n, q);
        for mask in 0..(1usize << n) {
            for i in 0..n {
                buf[i] = x[i] as u16;
                let seen = mask >> (n - 1 - i) & 1 == 1;
                buf[n + i] = if seen { x[i] as u16 } else { q as u16 };
            }
            joint.push(&buf, px * erasure_mask_prob(mask, n, p));
        }
    }
    let xs: Vec<usize> = (0..n).collect();
    let es: Vec<usize> = (n..2 * n).collect();
    let all: Vec<usize> = (0..2 * n).collect();
    let h = joint.entropy(&xs);
    let mi_erasure = (h + joint.entropy(&es) - joint.entropy(&all)).max(0.0);
    let a_sum = compensated_sum((0..n).map(|i| joint.cmi(&[i], &es[i + 1..], &xs[..i])));
    Ok(NoiselessRowTerms {
        h,
        mi_erasure,
        a: a_sum / n as f64,
    })
}

pub fn noisy_row_terms(
    model: &SourceModel,
    row: usize,
    dmc: &Dmc,
    p: f64,
    n: usize,
    caps: &WorkCaps,
) -> Result<NoisyRowTerms> {
    if n == 0 {
        return Err(Error::Usage("n must be at least 1".into()));
    }
    if dmc.q_in() != model.q() {
        return Err(Error::Usage(format!(
            "dmc input alphabet {} does not match source alphabet {}",
            dmc.q_in(),
            model.q()
        )));
    }
    let (q, qo) = (model.q(), dmc.q_out());
    check_row_work(model, qo, n, caps)?;
    let law = row_string_law(model, row, n);
    let mut cards = vec![q; n];
    cards.extend(std::iter::repeat(qo).take(n));
    cards.extend(std::iter::repeat(qo + 1).take(n));
    let mut joint = Joint::new(cards);
    let mut buf = vec![0u16; 3 * n];
    for (xi, &px) in law.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let x = digits(xi, n, q);
        for yi in 0..ipow(qo, n) {
            let y = digits(yi, n, qo);
            let pyx: f64 = x.iter().zip(&y).map(|(&a, &b)| dmc.w(a, b)).product();
            if pyx == 0.0 {
                continue;
            }
            for mask in 0..(1usize << n) {
                for i in 0..n {
                    buf[i] = x[i] as u16;
                    buf[n + i] = y[i] as u16;
                    let seen = mask >> (n - 1 - i) & 1 == 1;
                    buf[2 * n + i] = if seen { y[i] as u16 } else { qo as u16 };
                }
                joint.push(&buf, px * pyx * erasure_mask_prob(mask, n, p));
            }
        }
    }
    let xs: Vec<usize> = (0..n).collect();
    let ys: Vec<usize> = (n..2 * n).collect();
    let zs: Vec<usize> = (2 * n..3 * n).collect();
    let h_x = joint.entropy(&xs);
    let h_y = joint.entropy(&ys);
    let h_z = joint.entropy(&zs);
    let h_xy = joint.entropy(&[xs.clone(), ys.clone()].concat());
    let h_xz = joint.entropy(&[xs.clone(), zs.clone()].concat());
    let b_sum = compensated_sum((0..n).map(|i| joint.cmi(&[ys[i]], &zs[i + 1..], &ys[..i])));
    Ok(NoisyRowTerms {
        mi_dmc: (h_x + h_y - h_xy).max(0.0),
        mi_observed: (h_x + h_z - h_xz).max(0.0),
        b: b_sum / n as f64,
        h_observed: h_z,
        h_observed_given_source: h_xz - h_x,
    })
}

/// Exact finite-n information quantities for one row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowTerms {
    /// H(X^n)
    pub h: f64,
    /// I(X^n; E^n), noiseless pipeline.
    pub mi_erasure: f64,
    /// I(X^n; Y^n), Y the DMC output.
    pub mi_dmc: f64,
    /// I(X^n; Z^n), Z the erased DMC output.
    pub mi_observed: f64,
    /// (1/n) Σ_i I(X_i; E_{i+1}^n | X^{i-1})
    pub a: f64,
    /// (1/n) Σ_i I(Y_i; Z_{i+1}^n | Y^{i-1})
    pub b: f64,
    /// I(Z_ℓ^n; Z_1^n, …, Z_{ℓ-1}^n), not normalized.
    pub c: f64,
}

/// Exact finite-n table over all rows plus the joint quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteNTable {
    pub n: usize,
    pub p: f64,
    pub rows: Vec<RowTerms>,
    /// H(X_1^n, …, X_k^n)
    pub h_joint: f64,
    /// I(X_1^n, …, X_k^n; Z_1^n, …, Z_k^n)
    pub mi_joint_observed: f64,
}

impl FiniteNTable {
    /// `I(X;E) - [p H(X) + (1-p) n a]` for one row.
    pub fn erasure_identity_residual(&self, row: usize) -> f64 {
        let r = &self.rows[row];
        r.mi_erasure - (self.p * r.h + (1.0 - self.p) * self.n as f64 * r.a)
    }

    /// `I(X;Z) - [p I(X;Y) + (1-p) n b]` for one row.
    pub fn noisy_identity_residual(&self, row: usize) -> f64 {
        let r = &self.rows[row];
        r.mi_observed - (self.p * r.mi_dmc + (1.0 - self.p) * self.n as f64 * r.b)
    }

    /// `Σ I(X_ℓ;Z_ℓ) - I(X_all;Z_all) - Σ c_ℓ`.
    pub fn chain_rule_residual(&self) -> f64 {
        let sum_mi: f64 = self.rows.iter().map(|r| r.mi_observed).sum();
        let sum_c: f64 = self.rows.iter().map(|r| r.c).sum();
        sum_mi - self.mi_joint_observed - sum_c
    }

    /// Flat CSV with columns `quantity,row_index,n,value`. Row indices are
    /// 1-based; joint quantities leave the index empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| Error::io("<finite-n csv>", std::io::Error::other(e));
        w.write_record(["quantity", "row_index", "n", "value"]).map_err(to_err)?;
        let n = self.n.to_string();
        for (i, r) in self.rows.iter().enumerate() {
            let idx = (i + 1).to_string();
            for (name, v) in [
                ("h_row", r.h),
                ("mi_erasure", r.mi_erasure),
                ("mi_dmc", r.mi_dmc),
                ("mi_observed", r.mi_observed),
                ("a", r.a),
                ("b", r.b),
                ("c", r.c),
            ] {
                w.write_record([name, idx.as_str(), n.as_str(), &v.to_string()])
                    .map_err(to_err)?;
            }
        }
        for (name, v) in [("h_joint", self.h_joint), ("mi_joint_observed", self.mi_joint_observed)] {
            w.write_record([name, "", n.as_str(), &v.to_string()]).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::io("<finite-n csv>", e))?;
        Ok(())
    }
}

/// Rough operation count of [`exact_finite_n`].
pub fn finite_n_work(model: &SourceModel, q_out: usize, n: usize) -> f64 {
    let k = model.k();
    let rows = k as f64 * fpow(model.q(), n) * fpow(q_out, n) * fpow(2, n) * (3 * n) as f64;
    let source = fpow(model.q(), k * n);
    let contraction = fpow(q_out + 1, k * n) * fpow(model.q(), n) * k as f64;
    rows + source + contraction
}

/// Computes every quantity of [`FiniteNTable`] by exhaustive enumeration.
pub fn exact_finite_n(
    model: &SourceModel,
    dmc: &Dmc,
    p: f64,
    n: usize,
    caps: &WorkCaps,
) -> Result<FiniteNTable> {
    if n == 0 {
        return Err(Error::Usage("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Usage(format!("observation rate {p} outside [0, 1]")));
    }
    let work = finite_n_work(model, dmc.q_out(), n);
    if work > caps.enumeration {
        return Err(Error::WorkCap {
            what: "finite-n enumeration",
            required: work,
            cap: caps.enumeration,
        });
    }
    let (k, q, qo) = (model.k(), model.q(), dmc.q_out());

    let per_row: Vec<(NoiselessRowTerms, NoisyRowTerms)> = (0..k)
        .into_par_iter()
        .map(|row| {
            Ok((
                noiseless_row_terms(model, row, p, n, caps)?,
                noisy_row_terms(model, row, dmc, p, n, caps)?,
            ))
        })
        .collect::<Result<_>>()?;

    // Full source law over row strings, row 1 most significant.
    let law = full_matrix_law(model, n);
    let h_joint = entropy_bits(&law);

    // P(z | x) for one row string.
    let side_in = ipow(q, n);
    let side_out = ipow(qo + 1, n);
    let mut kernel = vec![0.0; side_in * side_out];
    let mut kernel_entropy = vec![0.0; side_in];
    for xi in 0..side_in {
        let x = digits(xi, n, q);
        let row = &mut kernel[xi * side_out..(xi + 1) * side_out];
        for (zi, slot) in row.iter_mut().enumerate() {
            let z = digits(zi, n, qo + 1);
            *slot = x
                .iter()
                .zip(&z)
                .map(|(&a, &b)| {
                    if b as usize == qo {
                        1.0 - p
                    } else {
                        p * dmc.w(a, b)
                    }
                })
                .product();
        }
        kernel_entropy[xi] = entropy_bits(row);
    }

    let mut tensor = law.clone();
    let mut dims = vec![side_in; k];
    for axis in 0..k {
        tensor = contract_axis(&tensor, &dims, axis, &kernel, side_out);
        dims[axis] = side_out;
    }
    let h_z_all = entropy_bits(&tensor);

    // H(Z_all | X_all) = Σ_x P(x) Σ_ℓ H(Z | x_ℓ)
    let h_z_given_x = compensated_sum(law.iter().enumerate().map(|(idx, &px)| {
        if px == 0.0 {
            return 0.0;
        }
        let mut rest = idx;
        let mut h = 0.0;
        for _ in 0..k {
            h += kernel_entropy[rest % side_in];
            rest /= side_in;
        }
        px * h
    }));

    // Prefix entropies H(Z_1..Z_ℓ).
    let mut prefix_h = Vec::with_capacity(k + 1);
    prefix_h.push(0.0);
    for l in 1..=k {
        let block = ipow(side_out, k - l);
        let marg: Vec<f64> = tensor
            .chunks(block)
            .map(|c| compensated_sum(c.iter().copied()))
            .collect();
        prefix_h.push(entropy_bits(&marg));
    }

    let rows = per_row
        .iter()
        .enumerate()
        .map(|(l, (clean, noisy))| {
            let c = if l == 0 {
                0.0
            } else {
                (noisy.h_observed + prefix_h[l] - prefix_h[l + 1]).max(0.0)
            };
            RowTerms {
                h: clean.h,
                mi_erasure: clean.mi_erasure,
                mi_dmc: noisy.mi_dmc,
                mi_observed: noisy.mi_observed,
                a: clean.a,
                b: noisy.b,
                c,
            }
        })
        .collect();

    Ok(FiniteNTable {
        n,
        p,
        rows,
        h_joint,
        mi_joint_observed: (h_z_all - h_z_given_x).max(0.0),
    })
}

/// Probability of every k×n matrix, indexed by concatenated row strings
/// (row 1 most significant, symbol 1 most significant within a row).
pub(crate) fn full_matrix_law(model: &SourceModel, n: usize) -> Vec<f64> {
    let side = ipow(model.q(), n);
    let mut law = vec![0.0; ipow(side, model.k())];
    // Walk column-state sequences depth first.
    fn walk(
        model: &SourceModel,
        col: usize,
        prev: usize,
        prob: f64,
        row_idx: &mut Vec<usize>,
        n: usize,
        law: &mut [f64],
    ) {
        let (k, q, side) = (model.k(), model.q(), ipow(model.q(), n));
        if col == n {
            let idx = row_idx.iter().fold(0, |acc, &r| acc * side + r);
            law[idx] += prob;
            return;
        }
        for s in 0..model.num_states() {
            let step = if col == 0 {
                model.column_law()[s]
            } else {
                model.transition_prob(prev, s)
            };
            if step == 0.0 {
                continue;
            }
            let saved = row_idx.clone();
            for (r, slot) in row_idx.iter_mut().enumerate() {
                *slot = *slot * q + row_symbol(s, r, k, q) as usize;
            }
            walk(model, col + 1, s, prob * step, row_idx, n, law);
            *row_idx = saved;
        }
    }
    walk(model, 0, 0, 1.0, &mut vec![0; model.k()], n, &mut law);
    law
}

/// Replaces tensor axis `axis` (size `dims[axis]`) by `kernel`'s output.
fn contract_axis(tensor: &[f64], dims: &[usize], axis: usize, kernel: &[f64], out: usize) -> Vec<f64> {
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let mid = dims[axis];
    let mut result = vec![0.0; outer * out * inner];
    for o in 0..outer {
        for x in 0..mid {
            let src = &tensor[(o * mid + x) * inner..(o * mid + x + 1) * inner];
            if src.iter().all(|&v| v == 0.0) {
                continue;
            }
            for z in 0..out {
                let kz = kernel[x * out + z];
                if kz == 0.0 {
                    continue;
                }
                let dst = &mut result[(o * out + z) * inner..(o * out + z + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += kz * s;
                }
            }
        }
    }
    result
}

/// Value at the largest n plus the last increment as an error proxy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolated {
    pub value: f64,
    pub last_increment: f64,
}

pub fn extrapolate(values: &[f64]) -> Option<Extrapolated> {
    let value = *values.last()?;
    let last_increment = if values.len() >= 2 {
        value - values[values.len() - 2]
    } else {
        f64::NAN
    };
    Some(Extrapolated { value, last_increment })
}
