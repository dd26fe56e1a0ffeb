//! Matrix reconstruction from an observed (erased, possibly noisy) matrix.
//!
//! Candidate matrices are ordered lexicographically by their column-state
//! sequence, column 1 most significant. Both MAP decoders return the
//! smallest optimal candidate in that order.

use serde::Serialize;

use crate::channels::{cell_log_likelihood, observation_log_likelihood, Cell, Dmc, ObservedMatrix};
use crate::error::{Error, Result};
use crate::info_measures::{entropy_bits, hidden_marginal_entropy_rate_bounds, joint_entropy_rate};
use crate::numeric::{binary_entropy, log2_add, CompensatedSum};
use crate::source_models::{
    row_marginal_pmf, row_sequence_log_prob, row_symbol, sequence_log_prob, MatrixSample, SourceModel,
};
use crate::WorkCaps;

/// Scores closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecodeStatus {
    Decoded,
    Ambiguous(usize),
    NoCandidate,
}

impl DecodeStatus {
    pub fn label(self) -> String {
        match self {
            DecodeStatus::Decoded => "decoded".into(),
            DecodeStatus::Ambiguous(c) => format!("ambiguous({c})"),
            DecodeStatus::NoCandidate => "no-candidate".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    pub estimate: Option<MatrixSample>,
    /// log2 P(estimate | observation).
    pub score: Option<f64>,
    /// Another candidate matched the winning score.
    pub tie: bool,
}

impl DecodeOutcome {
    fn decoded(estimate: MatrixSample, score: f64, tie: bool) -> Self {
        Self {
            status: DecodeStatus::Decoded,
            estimate: Some(estimate),
            score: Some(score),
            tie,
        }
    }

    fn failed(status: DecodeStatus) -> Self {
        Self {
            status,
            estimate: None,
            score: None,
            tie: false,
        }
    }

    /// Whether the estimate reproduces `truth` exactly.
    pub fn is_correct(&self, truth: &MatrixSample) -> bool {
        matches!(&self.estimate, Some(e) if e.cells() == truth.cells())
    }
}

fn check_dims(obs: &ObservedMatrix, model: &SourceModel, dmc: &Dmc) -> Result<()> {
    if obs.k() != model.k() {
        return Err(Error::Usage(format!(
            "observation has {} rows, model has {}",
            obs.k(),
            model.k()
        )));
    }
    if dmc.q_in() != model.q() || dmc.q_out() != obs.q_out() {
        return Err(Error::Usage(format!(
            "channel {}→{} does not fit source alphabet {} and observation alphabet {}",
            dmc.q_in(),
            dmc.q_out(),
            model.q(),
            obs.q_out()
        )));
    }
    if obs.n() == 0 {
        return Err(Error::Usage("observation has no columns".into()));
    }
    Ok(())
}

/// `emit[i * states + s]` = log2 P(column i of obs | column state s).
fn column_emissions(obs: &ObservedMatrix, model: &SourceModel, dmc: &Dmc, p: f64) -> Vec<f64> {
    let (k, q, n, states) = (model.k(), model.q(), obs.n(), model.num_states());
    let symbols: Vec<u32> = (0..states)
        .flat_map(|s| (0..k).map(move |r| row_symbol(s, r, k, q)))
        .collect();
    let mut emit = vec![0.0; n * states];
    for i in 0..n {
        for s in 0..states {
            emit[i * states + s] = (0..k)
                .map(|r| cell_log_likelihood(symbols[s * k + r], obs.get(r, i), dmc, p))
                .sum();
        }
    }
    emit
}

fn log2_sum(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, log2_add)
}

/// log2 P(obs) by the forward recursion over column states.
fn log_evidence(model: &SourceModel, emit: &[f64], n: usize) -> f64 {
    let states = model.num_states();
    let prior = model.column_law();
    if let SourceModel::Iid(_) = model {
        let mut total = CompensatedSum::new();
        for i in 0..n {
            total.add(log2_sum(
                (0..states).map(|s| prior[s].log2() + emit[i * states + s]),
            ));
        }
        return total.value();
    }
    let mut alpha: Vec<f64> = (0..states).map(|s| prior[s].log2() + emit[s]).collect();
    let mut next = vec![0.0; states];
    for i in 1..n {
        for (t, slot) in next.iter_mut().enumerate() {
            *slot = log2_sum((0..states).map(|s| alpha[s] + model.log2_transition(s, t)))
                + emit[i * states + t];
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    log2_sum(alpha.into_iter())
}

/// log2 P(obs), marginalizing over every source matrix.
pub fn log_evidence_of(obs: &ObservedMatrix, model: &SourceModel, dmc: &Dmc, p: f64) -> Result<f64> {
    check_dims(obs, model, dmc)?;
    Ok(log_evidence(model, &column_emissions(obs, model, dmc, p), obs.n()))
}

/// log2 P(candidate | obs) for any candidate matrix.
pub fn posterior_score(
    obs: &ObservedMatrix,
    model: &SourceModel,
    dmc: &Dmc,
    p: f64,
    candidate: &MatrixSample,
) -> Result<f64> {
    check_dims(obs, model, dmc)?;
    let emit = column_emissions(obs, model, dmc, p);
    Ok(joint_log_prob(obs, model, dmc, p, candidate)? - log_evidence(model, &emit, obs.n()))
}

/// log2 P(candidate, obs).
fn joint_log_prob(
    obs: &ObservedMatrix,
    model: &SourceModel,
    dmc: &Dmc,
    p: f64,
    candidate: &MatrixSample,
) -> Result<f64> {
    let mut total = sequence_log_prob(model, candidate);
    for r in 0..model.k() {
        total += observation_log_likelihood(candidate.row(r), obs.row(r), dmc, p)?;
    }
    Ok(total)
}

/// Exact MAP decoding by dynamic programming over column states.
pub fn map_decode_viterbi(obs: &ObservedMatrix, model: &SourceModel, dmc: &Dmc, p: f64) -> Result<DecodeOutcome> {
    check_dims(obs, model, dmc)?;
    let (n, states) = (obs.n(), model.num_states());
    let emit = column_emissions(obs, model, dmc, p);
    let prior = model.column_law();
    let mut path = Vec::with_capacity(n);
    let mut tie = false;

    if let SourceModel::Iid(_) = model {
        for i in 0..n {
            let score = |s: usize| prior[s].log2() + emit[i * states + s];
            let top = (0..states).map(score).fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY {
                return Ok(DecodeOutcome::failed(DecodeStatus::NoCandidate));
            }
            let mut hits = (0..states).filter(|&s| score(s) >= top - TIE_TOL);
            let chosen = hits.next().expect("top is attained");
            tie |= hits.next().is_some();
            path.push(chosen);
        }
    } else {
        // value[i*states+s]: best log-prob of columns i.. given state s at i,
        // including the emission at i.
        let mut value = vec![0.0; n * states];
        value[(n - 1) * states..].copy_from_slice(&emit[(n - 1) * states..]);
        for i in (0..n - 1).rev() {
            for s in 0..states {
                let cont = (0..states)
                    .map(|t| model.log2_transition(s, t) + value[(i + 1) * states + t])
                    .fold(f64::NEG_INFINITY, f64::max);
                value[i * states + s] = emit[i * states + s] + cont;
            }
        }
        let start = |s: usize| prior[s].log2() + value[s];
        let top = (0..states).map(start).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Ok(DecodeOutcome::failed(DecodeStatus::NoCandidate));
        }
        let mut hits = (0..states).filter(|&s| start(s) >= top - TIE_TOL);
        let mut s = hits.next().expect("top is attained");
        tie |= hits.next().is_some();
        path.push(s);
        for i in 1..n {
            let target = value[(i - 1) * states + s] - emit[(i - 1) * states + s];
            let step = |t: usize| model.log2_transition(s, t) + value[i * states + t];
            let mut hits = (0..states).filter(|&t| step(t) >= target - TIE_TOL);
            let t = hits.next().expect("continuation is attained");
            tie |= hits.next().is_some();
            path.push(t);
            s = t;
        }
    }

    let estimate = MatrixSample::from_column_states(model.k(), model.q(), &path);
    let score = joint_log_prob(obs, model, dmc, p, &estimate)? - log_evidence(model, &emit, n);
    Ok(DecodeOutcome::decoded(estimate, score, tie))
}

/// Brute-force MAP decoding over every candidate matrix.
pub fn map_decode_exhaustive(
    obs: &ObservedMatrix,
    model: &SourceModel,
    dmc: &Dmc,
    p: f64,
    caps: &WorkCaps,
) -> Result<DecodeOutcome> {
    check_dims(obs, model, dmc)?;
    let (n, states) = (obs.n(), model.num_states());
    let count = (states as f64).powi(n as i32);
    if count > caps.candidates {
        return Err(Error::WorkCap {
            what: "exhaustive candidates",
            required: count,
            cap: caps.candidates,
        });
    }
    let count = count as usize;
    let mut scores = Vec::with_capacity(count);
    let mut seq = vec![0usize; n];
    for idx in 0..count {
        let mut rest = idx;
        for slot in seq.iter_mut().rev() {
            *slot = rest % states;
            rest /= states;
        }
        let cand = MatrixSample::from_column_states(model.k(), model.q(), &seq);
        scores.push(joint_log_prob(obs, model, dmc, p, &cand)?);
    }
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(DecodeOutcome::failed(DecodeStatus::NoCandidate));
    }
    let mut evidence = CompensatedSum::new();
    for &s in &scores {
        evidence.add((s - top).exp2());
    }
    let log_evidence = top + evidence.value().log2();
    let mut hits = scores.iter().enumerate().filter(|(_, &s)| s >= top - TIE_TOL);
    let (winner, &score) = hits.next().expect("top is attained");
    let tie = hits.next().is_some();
    let mut rest = winner;
    for slot in seq.iter_mut().rev() {
        *slot = rest % states;
        rest /= states;
    }
    let estimate = MatrixSample::from_column_states(model.k(), model.q(), &seq);
    Ok(DecodeOutcome::decoded(estimate, score - log_evidence, tie))
}

/// Slack and reference rates for the joint-typicality decoder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypicalityParams {
    /// Typicality slack in bits per symbol.
    pub epsilon: f64,
    /// Observation rate of the erasure channel.
    pub p: f64,
    /// Entropy rate of each row.
    pub row_rates: Vec<f64>,
    /// Entropy rate of the whole column process.
    pub joint_rate: f64,
}

impl TypicalityParams {
    /// Reference rates taken from the model: exact for i.i.d. columns,
    /// sandwich midpoints at `horizon` for Markov columns.
    pub fn for_model(model: &SourceModel, p: f64, epsilon: f64, horizon: usize, caps: &WorkCaps) -> Result<Self> {
        let row_rates = match model {
            SourceModel::Iid(pmf) => (0..model.k())
                .map(|r| Ok(entropy_bits(&row_marginal_pmf(pmf, &[r])?)))
                .collect::<Result<Vec<_>>>()?,
            SourceModel::Markov(_) => (0..model.k())
                .map(|r| hidden_marginal_entropy_rate_bounds(model, r, horizon, caps).map(|b| b.midpoint()))
                .collect::<Result<Vec<_>>>()?,
        };
        let params = Self {
            epsilon,
            p,
            row_rates,
            joint_rate: joint_entropy_rate(model),
        };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::Usage(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Usage(format!("observation rate {} outside [0, 1]", self.p)));
        }
        Ok(())
    }
}

/// Per-symbol log-loss of the erasure pattern of one row.
fn erasure_log_loss(row: &[Cell], p: f64) -> f64 {
    let seen = row.iter().filter(|c| !matches!(c, Cell::Erased)).count();
    let erased = row.len() - seen;
    let mut loss = 0.0;
    if seen > 0 {
        loss -= seen as f64 * p.log2();
    }
    if erased > 0 {
        loss -= erased as f64 * (1.0 - p).log2();
    }
    loss / row.len() as f64
}

/// Joint-typicality decoding of a noiseless erased matrix. Every completion
/// of the erased cells is tested; exactly one passing candidate decodes.
pub fn typicality_decode(
    obs: &ObservedMatrix,
    model: &SourceModel,
    dmc: &Dmc,
    params: &TypicalityParams,
    caps: &WorkCaps,
) -> Result<DecodeOutcome> {
    if !dmc.is_identity() {
        return Err(Error::Unsupported(
            "typicality decoding needs noiseless (identity channel) observations".into(),
        ));
    }
    check_dims(obs, model, dmc)?;
    params.validate()?;
    let (k, n, q) = (model.k(), obs.n(), model.q());
    if params.row_rates.len() != k {
        return Err(Error::Usage(format!(
            "{} row rates given for {k} rows",
            params.row_rates.len()
        )));
    }
    let erased: Vec<(usize, usize)> = (0..k)
        .flat_map(|r| (0..n).map(move |i| (r, i)))
        .filter(|&(r, i)| matches!(obs.get(r, i), Cell::Erased))
        .collect();
    let count = (q as f64).powi(erased.len() as i32);
    if count > caps.candidates {
        return Err(Error::WorkCap {
            what: "typicality candidates",
            required: count,
            cap: caps.candidates,
        });
    }
    let count = count as usize;
    let nf = n as f64;
    let eps = params.epsilon;
    let channel_loss: Vec<f64> = (0..k).map(|r| erasure_log_loss(obs.row(r), params.p)).collect();
    let pair_reference = binary_entropy(params.p);

    let base: Vec<u32> = (0..k * n)
        .map(|c| obs.get(c / n, c % n).symbol().unwrap_or(0))
        .collect();
    let mut passing = Vec::new();
    let mut cells = base.clone();
    for idx in 0..count {
        let mut rest = idx;
        for &(r, i) in erased.iter().rev() {
            cells[r * n + i] = (rest % q) as u32;
            rest /= q;
        }
        let cand = MatrixSample::new(k, n, q, cells.clone())?;
        let rows_ok = (0..k).all(|r| {
            let loss = -row_sequence_log_prob(model, r, cand.row(r)) / nf;
            (loss - params.row_rates[r]).abs() <= eps
                && (loss + channel_loss[r] - params.row_rates[r] - pair_reference).abs() <= eps
        });
        if !rows_ok {
            continue;
        }
        let joint_loss = -sequence_log_prob(model, &cand) / nf;
        if (joint_loss - params.joint_rate).abs() <= eps {
            passing.push(cand);
        }
    }
    match passing.len() {
        0 => Ok(DecodeOutcome::failed(DecodeStatus::NoCandidate)),
        1 => {
            let estimate = passing.pop().expect("one candidate");
            let score = posterior_score(obs, model, dmc, params.p, &estimate)?;
            Ok(DecodeOutcome::decoded(estimate, score, false))
        }
        c => Ok(DecodeOutcome::failed(DecodeStatus::Ambiguous(c))),
    }
}
