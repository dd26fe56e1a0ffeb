//! Completion capacity and achievability regions.
//!
//! For i.i.d. columns the capacity is the ratio of the summed per-row
//! information to the joint column entropy. For Markov columns the per-row
//! correction terms `a_ℓ` (noiseless) or `b_ℓ` (noisy) depend on the
//! observation rate, so they are evaluated at the self-consistent point
//! `p* = 1/C` found by damped fixed-point iteration.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channels::Dmc;
use crate::error::{Error, Result};
use crate::info_measures::{
    entropy_bits, exact_finite_n, hidden_marginal_entropy_rate_bounds, hidden_rate_bounds,
    joint_entropy_rate, noiseless_row_terms, noisy_row_terms, smb_estimate, Emission, RateBounds,
    SmbEstimate,
};
use crate::source_models::{row_marginal_pmf, ColumnPmf, SourceModel};
use crate::WorkCaps;

const FIXED_POINT_TOL: f64 = 1e-9;
const FIXED_POINT_MAX_ITERS: usize = 500;
const ZERO_INFO: f64 = 1e-12;
/// Subset margins this far below zero still count as feasible.
pub const MARGIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    FixedPoint,
    Bound,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::FixedPoint => "fixed-point",
            Method::Bound => "bound",
        }
    }
}

/// Capacity value with every quantity that went into it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub capacity: f64,
    /// `1/C`. Above 1 when the channel is too noisy for exact recovery
    /// even with every entry observed.
    pub threshold: f64,
    /// Range of `C` implied by the entropy-rate bound widths.
    pub capacity_interval: (f64, f64),
    /// Per-row numerator terms: H(X_ℓ), H̄(X_ℓ), I(X_ℓ;Y_ℓ) or Ī(X_ℓ;Y_ℓ).
    pub row_terms: Vec<f64>,
    /// Bounds behind each row term, when it is an estimate.
    pub row_bounds: Vec<RateBounds>,
    /// H(X_1..X_k) or H̄(X_1..X_k).
    pub joint_entropy: f64,
    /// a_ℓ(n) or b_ℓ(n) at `evaluated_at`; zeros for i.i.d. models.
    pub corrections: Vec<f64>,
    /// Change of each correction from n-1 to n, an error proxy.
    pub correction_increments: Vec<f64>,
    pub evaluated_at: Option<f64>,
    pub block_length: Option<usize>,
    pub method: Method,
    pub iterations: usize,
    pub residual: f64,
    /// Monte Carlo check of the joint entropy rate, when requested.
    pub smb_joint: Option<SmbEstimate>,
}

impl CapacityReport {
    fn exact(row_terms: Vec<f64>, joint_entropy: f64) -> Self {
        let k = row_terms.len();
        let capacity = row_terms.iter().sum::<f64>() / joint_entropy;
        Self {
            capacity,
            threshold: 1.0 / capacity,
            capacity_interval: (capacity, capacity),
            row_terms,
            row_bounds: Vec::new(),
            joint_entropy,
            corrections: vec![0.0; k],
            correction_increments: vec![0.0; k],
            evaluated_at: None,
            block_length: None,
            method: Method::Exact,
            iterations: 0,
            residual: 0.0,
            smb_joint: None,
        }
    }

    /// Whether some `p ≤ 1` reaches the capacity.
    pub fn attainable(&self) -> bool {
        self.threshold <= 1.0
    }

    /// Flat `key, value` pairs, in a fixed order.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("capacity".to_string(), self.capacity.to_string()),
            ("threshold_p".to_string(), self.threshold.to_string()),
            ("attainable".to_string(), self.attainable().to_string()),
            ("capacity_low".to_string(), self.capacity_interval.0.to_string()),
            ("capacity_high".to_string(), self.capacity_interval.1.to_string()),
            ("joint_entropy".to_string(), self.joint_entropy.to_string()),
            ("method".to_string(), self.method.as_str().to_string()),
            ("iterations".to_string(), self.iterations.to_string()),
            ("residual".to_string(), self.residual.to_string()),
        ];
        if let Some(p) = self.evaluated_at {
            kv.push(("evaluated_at_p".into(), p.to_string()));
        }
        if let Some(n) = self.block_length {
            kv.push(("block_length".into(), n.to_string()));
        }
        for (i, v) in self.row_terms.iter().enumerate() {
            kv.push((format!("row_term.{}", i + 1), v.to_string()));
        }
        for (i, b) in self.row_bounds.iter().enumerate() {
            kv.push((format!("row_term_low.{}", i + 1), b.lower.to_string()));
            kv.push((format!("row_term_high.{}", i + 1), b.upper.to_string()));
        }
        for (i, v) in self.corrections.iter().enumerate() {
            kv.push((format!("correction.{}", i + 1), v.to_string()));
        }
        for (i, v) in self.correction_increments.iter().enumerate() {
            kv.push((format!("correction_increment.{}", i + 1), v.to_string()));
        }
        if let Some(s) = self.smb_joint {
            kv.push(("smb_joint_mean".into(), s.mean.to_string()));
            kv.push(("smb_joint_stderr".into(), s.stderr.to_string()));
        }
        kv
    }

    pub fn write_report<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (k, v) in self.key_values() {
            writeln!(out, "{k} = {v}")?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_kv_csv(out, &self.key_values())
    }
}

pub(crate) fn write_kv_csv<W: Write>(out: W, kv: &[(String, String)]) -> Result<()> {
    let to_err = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"]).map_err(to_err)?;
    for (k, v) in kv {
        w.write_record([k, v]).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Knobs for the rate estimates used with Markov models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Block length for the finite-n a_ℓ(n) / b_ℓ(n) terms.
    pub n: usize,
    /// Horizon of the entropy-rate sandwich bounds.
    pub horizon: usize,
    /// Monte Carlo trials for the SMB cross-check; 0 disables it.
    pub trials: usize,
    pub smb_length: usize,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            n: 5,
            horizon: 8,
            trials: 0,
            smb_length: 1000,
            seed: 0,
        }
    }
}

fn row_entropies(pmf: &ColumnPmf) -> Vec<f64> {
    (0..pmf.k())
        .map(|r| entropy_bits(&row_marginal_pmf(pmf, &[r]).expect("row in range")))
        .collect()
}

/// Single-letter I(X_ℓ; Y_ℓ) through the DMC.
fn single_letter_mi(marginal: &[f64], dmc: &Dmc) -> f64 {
    let qo = dmc.q_out();
    let mut py = vec![0.0; qo];
    let mut h_y_given_x = 0.0;
    for (x, &px) in marginal.iter().enumerate() {
        let row = &dmc.matrix()[x * qo..(x + 1) * qo];
        h_y_given_x += px * entropy_bits(row);
        for (y, &w) in row.iter().enumerate() {
            py[y] += px * w;
        }
    }
    (entropy_bits(&py) - h_y_given_x).max(0.0)
}

/// H(Y|X) for one row through the DMC, per symbol.
fn channel_conditional_entropy(marginal: &[f64], dmc: &Dmc) -> f64 {
    let qo = dmc.q_out();
    marginal
        .iter()
        .enumerate()
        .map(|(x, &px)| px * entropy_bits(&dmc.matrix()[x * qo..(x + 1) * qo]))
        .sum()
}

/// Completion capacity of an i.i.d. column model with noiseless entries.
pub fn capacity_iid(pmf: &ColumnPmf) -> Result<CapacityReport> {
    let joint = entropy_bits(pmf.probs());
    if joint <= 0.0 {
        return Err(Error::DegenerateSource(
            "capacity unbounded: every entry is known a priori".into(),
        ));
    }
    Ok(CapacityReport::exact(row_entropies(pmf), joint))
}

/// Completion capacity of an i.i.d. column model seen through a DMC.
pub fn capacity_iid_noisy(pmf: &ColumnPmf, dmc: &Dmc) -> Result<CapacityReport> {
    check_dmc(pmf.q(), dmc)?;
    let joint = entropy_bits(pmf.probs());
    if joint <= 0.0 {
        return Err(Error::DegenerateSource(
            "capacity unbounded: every entry is known a priori".into(),
        ));
    }
    let terms: Vec<f64> = (0..pmf.k())
        .map(|r| single_letter_mi(&row_marginal_pmf(pmf, &[r]).expect("row in range"), dmc))
        .collect();
    if terms.iter().sum::<f64>() <= ZERO_INFO {
        return Err(Error::CapacityZero);
    }
    Ok(CapacityReport::exact(terms, joint))
}

fn check_dmc(q: usize, dmc: &Dmc) -> Result<()> {
    if dmc.q_in() != q {
        return Err(Error::Usage(format!(
            "dmc input alphabet {} does not match source alphabet {q}",
            dmc.q_in()
        )));
    }
    Ok(())
}

/// Per-row rate terms and the p-dependent correction for a column process.
struct RateModel<'a> {
    model: &'a SourceModel,
    dmc: Option<&'a Dmc>,
    row_bounds: Vec<RateBounds>,
    joint: f64,
    est: EstimatorConfig,
    caps: &'a WorkCaps,
}

impl<'a> RateModel<'a> {
    fn new(
        model: &'a SourceModel,
        dmc: Option<&'a Dmc>,
        est: EstimatorConfig,
        caps: &'a WorkCaps,
    ) -> Result<Self> {
        let k = model.k();
        let column = model.column_pmf();
        let row_bounds = (0..k)
            .map(|r| match dmc {
                None => hidden_marginal_entropy_rate_bounds(model, r, est.horizon, caps),
                Some(dmc) => {
                    let marg = row_marginal_pmf(&column, &[r]).expect("row in range");
                    let cond = channel_conditional_entropy(&marg, dmc);
                    let y = hidden_rate_bounds(model, &Emission::noisy_row(model, r, dmc), est.horizon, caps)?;
                    Ok(RateBounds {
                        lower: (y.lower - cond).max(0.0),
                        upper: (y.upper - cond).max(0.0),
                        horizon: y.horizon,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            dmc,
            row_bounds,
            joint: joint_entropy_rate(model),
            est,
            caps,
        })
    }

    fn row_terms(&self) -> Vec<f64> {
        self.row_bounds.iter().map(RateBounds::midpoint).collect()
    }

    /// a_ℓ(n, p) or b_ℓ(n, p) for every row.
    fn corrections(&self, p: f64, n: usize) -> Result<Vec<f64>> {
        (0..self.model.k())
            .map(|r| match self.dmc {
                None => noiseless_row_terms(self.model, r, p, n, self.caps).map(|t| t.a),
                Some(dmc) => noisy_row_terms(self.model, r, dmc, p, n, self.caps).map(|t| t.b),
            })
            .collect()
    }
}

fn solve_rate_model(rm: RateModel<'_>) -> Result<CapacityReport> {
    if rm.joint <= 0.0 {
        return Err(Error::DegenerateSource(
            "zero joint entropy rate: capacity unbounded".into(),
        ));
    }
    let terms = rm.row_terms();
    let sum_terms: f64 = terms.iter().sum();
    if rm.dmc.is_some() && sum_terms <= ZERO_INFO {
        return Err(Error::CapacityZero);
    }
    let n = rm.est.n;
    // Inverse capacity at a given p, with the correction evaluated there.
    let inverse = |p: f64| -> Result<(f64, Vec<f64>)> {
        let corr = rm.corrections(p, n)?;
        let sum_corr: f64 = corr.iter().sum();
        let num = rm.joint - sum_corr;
        let den = sum_terms - sum_corr;
        if num <= 0.0 || den <= 0.0 {
            return Err(Error::DegenerateSource(format!(
                "capacity ratio {den} / {num} at p={p} is not positive; the block-length-{n} \
                 corrections exceed the entropy rates, try a larger estimator n"
            )));
        }
        Ok((num / den, corr))
    };

    let mut p = (rm.joint / sum_terms).clamp(0.0, 1.0);
    let mut trace = Vec::new();
    let mut converged = None;
    for it in 1..=FIXED_POINT_MAX_ITERS {
        let (f, _) = inverse(p)?;
        let next = (0.5 * p + 0.5 * f).clamp(0.0, 1.0);
        trace.push(next);
        if trace.len() > 8 {
            trace.remove(0);
        }
        let step = (next - p).abs();
        p = next;
        if step < FIXED_POINT_TOL {
            converged = Some(it);
            break;
        }
    }
    let Some(iterations) = converged else {
        return Err(Error::FixedPoint {
            iterations: FIXED_POINT_MAX_ITERS,
            trace,
        });
    };

    let (inv, corrections) = inverse(p)?;
    let residual = (inv.min(1.0) - p).abs();
    let sum_corr: f64 = corrections.iter().sum();
    let capacity = 1.0 / inv;
    let ratio = |numer_terms: f64| (numer_terms - sum_corr) / (rm.joint - sum_corr);
    let low: f64 = rm.row_bounds.iter().map(|b| b.lower).sum();
    let high: f64 = rm.row_bounds.iter().map(|b| b.upper).sum();

    let correction_increments = if n >= 2 {
        let prev = rm.corrections(p, n - 1)?;
        corrections.iter().zip(prev).map(|(c, q)| c - q).collect()
    } else {
        vec![f64::NAN; corrections.len()]
    };

    let smb_joint = (rm.est.trials > 0)
        .then(|| smb_estimate(rm.model, rm.est.smb_length.max(1), rm.est.trials, rm.est.seed));

    Ok(CapacityReport {
        capacity,
        threshold: inv,
        capacity_interval: (ratio(low), ratio(high)),
        row_terms: terms,
        row_bounds: rm.row_bounds,
        joint_entropy: rm.joint,
        corrections,
        correction_increments,
        evaluated_at: Some(p),
        block_length: Some(n),
        method: Method::FixedPoint,
        iterations,
        residual,
        smb_joint,
    })
}

/// Completion capacity of a stationary ergodic (Markov) column model.
pub fn capacity_ergodic(model: &SourceModel, est: &EstimatorConfig, caps: &WorkCaps) -> Result<CapacityReport> {
    solve_rate_model(RateModel::new(model, None, *est, caps)?)
}

/// Noisy-entry capacity of a stationary ergodic (Markov) column model.
pub fn capacity_ergodic_noisy(
    model: &SourceModel,
    dmc: &Dmc,
    est: &EstimatorConfig,
    caps: &WorkCaps,
) -> Result<CapacityReport> {
    check_dmc(model.q(), dmc)?;
    solve_rate_model(RateModel::new(model, Some(dmc), *est, caps)?)
}

/// Dispatches to the right capacity formula for a model/channel pair.
pub fn capacity_for(
    model: &SourceModel,
    dmc: &Dmc,
    est: &EstimatorConfig,
    caps: &WorkCaps,
) -> Result<CapacityReport> {
    match (model, dmc.is_identity()) {
        (SourceModel::Iid(pmf), true) => capacity_iid(pmf),
        (SourceModel::Iid(pmf), false) => capacity_iid_noisy(pmf, dmc),
        (SourceModel::Markov(_), true) => capacity_ergodic(model, est, caps),
        (SourceModel::Markov(_), false) => capacity_ergodic_noisy(model, dmc, est, caps),
    }
}

/// One point of the finite-n upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundPoint {
    pub n: usize,
    pub bound: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// Finite-n upper bound on the capacity of an arbitrary model:
/// `[Σ I(X_ℓ^n;Y_ℓ^n) - Σ B_ℓ] / [H(X^n) - Σ (B_ℓ - c_ℓ)]` with
/// `B_ℓ = n·b_ℓ(n)`, evaluated exactly for each requested n.
pub fn upper_bound_arbitrary(
    model: &SourceModel,
    dmc: &Dmc,
    p: f64,
    n_list: &[usize],
    caps: &WorkCaps,
) -> Result<Vec<BoundPoint>> {
    check_dmc(model.q(), dmc)?;
    n_list
        .iter()
        .map(|&n| {
            let t = exact_finite_n(model, dmc, p, n, caps)?;
            let nf = n as f64;
            let sum_mi: f64 = t.rows.iter().map(|r| r.mi_dmc).sum();
            let sum_b: f64 = t.rows.iter().map(|r| nf * r.b).sum();
            let sum_c: f64 = t.rows.iter().map(|r| r.c).sum();
            let numerator = sum_mi - sum_b;
            let denominator = t.h_joint - sum_b + sum_c;
            if denominator <= 0.0 {
                return Err(Error::DegenerateSource(format!(
                    "bound denominator {denominator} at n={n}"
                )));
            }
            Ok(BoundPoint {
                n,
                bound: numerator / denominator,
                numerator,
                denominator,
            })
        })
        .collect()
}

/// Smallest and largest finite-n bound over every row ordering.
pub fn upper_bound_row_orders(
    model: &SourceModel,
    dmc: &Dmc,
    p: f64,
    n: usize,
    caps: &WorkCaps,
) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for perm in permutations(model.k()) {
        let permuted = model.permute_rows(&perm)?;
        let b = upper_bound_arbitrary(&permuted, dmc, p, &[n], caps)?[0].bound;
        lo = lo.min(b);
        hi = hi.max(b);
    }
    Ok((lo, hi))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Margin of one subset condition `Σ_{ℓ∈S} Ī(X_ℓ;Z_ℓ) - H̄(X_S | X_{S^c})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetMargin {
    /// 1-based row indices.
    pub rows: Vec<usize>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionCheck {
    pub p: f64,
    /// One entry per nonempty subset, ordered by bitmask (bit ℓ-1 ↔ row ℓ).
    pub margins: Vec<SubsetMargin>,
    pub feasible: bool,
}

impl RegionCheck {
    /// Subset with the smallest margin.
    pub fn binding(&self) -> &SubsetMargin {
        self.margins
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .expect("at least one subset")
    }

    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("p".to_string(), self.p.to_string()),
            ("feasible".to_string(), self.feasible.to_string()),
        ];
        for m in &self.margins {
            let name = m.rows.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("+");
            kv.push((format!("margin.{name}"), m.margin.to_string()));
        }
        kv
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_kv_csv(out, &self.key_values())
    }
}

/// Evaluates every subset condition of the achievable region at `p`.
pub fn achievability_check(
    model: &SourceModel,
    dmc: Option<&Dmc>,
    p: f64,
    est: &EstimatorConfig,
    caps: &WorkCaps,
) -> Result<RegionCheck> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Usage(format!("observation rate {p} outside [0, 1]")));
    }
    let k = model.k();
    if let Some(d) = dmc {
        check_dmc(model.q(), d)?;
    }
    let dmc = dmc.filter(|d| !d.is_identity());

    // Per-row information rate through the full observation process, and
    // the entropy (rate) of any row subset.
    let (row_info, subset_entropy): (Vec<f64>, Box<dyn Fn(&[usize]) -> Result<f64>>) = match model {
        SourceModel::Iid(pmf) => {
            let info = (0..k)
                .map(|r| {
                    let marg = row_marginal_pmf(pmf, &[r]).expect("row in range");
                    p * match dmc {
                        None => entropy_bits(&marg),
                        Some(d) => single_letter_mi(&marg, d),
                    }
                })
                .collect();
            let pmf = pmf.clone();
            (
                info,
                Box::new(move |rows: &[usize]| Ok(entropy_bits(&row_marginal_pmf(&pmf, rows)?))),
            )
        }
        SourceModel::Markov(_) => {
            let rm = RateModel::new(model, dmc, *est, caps)?;
            let corr = rm.corrections(p, est.n)?;
            let info = rm
                .row_terms()
                .iter()
                .zip(&corr)
                .map(|(t, c)| p * (t - c) + c)
                .collect();
            let horizon = est.horizon;
            let model = model.clone();
            let caps = *caps;
            (
                info,
                Box::new(move |rows: &[usize]| {
                    hidden_rate_bounds(&model, &Emission::rows(&model, rows), horizon, &caps)
                        .map(|b| b.midpoint())
                }),
            )
        }
    };
    let joint = joint_entropy_rate(model);

    let mut margins = Vec::with_capacity((1 << k) - 1);
    for mask in 1usize..(1 << k) {
        let inside: Vec<usize> = (0..k).filter(|r| mask >> r & 1 == 1).collect();
        let outside: Vec<usize> = (0..k).filter(|r| mask >> r & 1 == 0).collect();
        let h_out = if outside.is_empty() {
            0.0
        } else {
            subset_entropy(&outside)?
        };
        let info: f64 = inside.iter().map(|&r| row_info[r]).sum();
        margins.push(SubsetMargin {
            rows: inside.iter().map(|r| r + 1).collect(),
            margin: info - (joint - h_out),
        });
    }
    let feasible = margins.iter().all(|m| m.margin >= -MARGIN_TOL);
    Ok(RegionCheck { p, margins, feasible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source_models::MarkovColumnSource;

    fn generic() -> ColumnPmf {
        ColumnPmf::new(2, 2, vec![0.4, 0.1, 0.1, 0.4]).unwrap()
    }

    fn caps() -> WorkCaps {
        WorkCaps::default()
    }

    #[test]
    fn iid_capacity_examples() {
        let prod = ColumnPmf::product(2, &[vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        assert!((capacity_iid(&prod).unwrap().capacity - 1.0).abs() < 1e-12);
        let same = ColumnPmf::identical_rows_uniform(2, 2);
        assert!((capacity_iid(&same).unwrap().capacity - 2.0).abs() < 1e-12);
        let r = capacity_iid(&generic()).unwrap();
        assert!((r.capacity - 1.161488).abs() < 1e-6);
        assert!((r.threshold - 0.860964).abs() < 1e-6);
        assert_eq!(r.row_terms.len(), 2);
    }

    #[test]
    fn identical_rows_reach_k() {
        for k in 1..=4 {
            let same = ColumnPmf::identical_rows_uniform(k, 3);
            assert!((capacity_iid(&same).unwrap().capacity - k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_source_is_degenerate() {
        let det = ColumnPmf::new(2, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(capacity_iid(&det), Err(Error::DegenerateSource(_))));
    }

    #[test]
    fn noisy_iid_examples() {
        let base = capacity_iid(&generic()).unwrap().capacity;
        let id = capacity_iid_noisy(&generic(), &Dmc::identity(2)).unwrap().capacity;
        assert!((base - id).abs() < 1e-12);
        assert!(matches!(
            capacity_iid_noisy(&generic(), &Dmc::bsc(0.5).unwrap()),
            Err(Error::CapacityZero)
        ));
        let r = capacity_iid_noisy(&generic(), &Dmc::bsc(0.1).unwrap()).unwrap();
        assert!((r.row_terms[0] - 0.531004).abs() < 1e-6);
        assert!((r.capacity - 0.6167556).abs() < 1e-6);
        assert!(!r.attainable());
    }

    #[test]
    fn ergodic_reduces_to_iid() {
        let chain = SourceModel::Markov(MarkovColumnSource::iid_equivalent(&generic()).unwrap());
        let r = capacity_ergodic(&chain, &EstimatorConfig::default(), &caps()).unwrap();
        assert!(r.corrections.iter().all(|a| a.abs() < 1e-12));
        assert!((r.capacity - capacity_iid(&generic()).unwrap().capacity).abs() < 1e-9);
    }

    #[test]
    fn ergodic_single_row_is_one() {
        let chain = SourceModel::Markov(MarkovColumnSource::sticky(1, 3, 0.6).unwrap());
        let r = capacity_ergodic(&chain, &EstimatorConfig::default(), &caps()).unwrap();
        assert!((r.capacity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ergodic_noisy_reductions() {
        let est = EstimatorConfig::default();
        let chain = SourceModel::Markov(MarkovColumnSource::sticky(2, 2, 0.8).unwrap());
        let clean = capacity_ergodic(&chain, &est, &caps()).unwrap();
        let id = capacity_ergodic_noisy(&chain, &Dmc::identity(2), &est, &caps()).unwrap();
        assert!((clean.capacity - id.capacity).abs() < 1e-9);

        let iid = SourceModel::Markov(MarkovColumnSource::iid_equivalent(&generic()).unwrap());
        let bsc = Dmc::bsc(0.1).unwrap();
        let noisy = capacity_ergodic_noisy(&iid, &bsc, &est, &caps()).unwrap();
        let reference = capacity_iid_noisy(&generic(), &bsc).unwrap();
        assert!((noisy.capacity - reference.capacity).abs() < 1e-9);

        assert!(matches!(
            capacity_ergodic_noisy(&chain, &Dmc::bsc(0.5).unwrap(), &est, &caps()),
            Err(Error::CapacityZero)
        ));
    }

    #[test]
    fn product_bound_is_one() {
        let prod = SourceModel::Iid(ColumnPmf::product(2, &[vec![0.7, 0.3], vec![0.6, 0.4]]).unwrap());
        for b in upper_bound_arbitrary(&prod, &Dmc::identity(2), 0.4, &[1, 2, 3], &caps()).unwrap() {
            assert!((b.bound - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_rows_bound_at_n1() {
        // Σ I = 2 bits, b = 0, H = 1 bit, c_2(1) = 0.25 bits.
        let model = SourceModel::Iid(ColumnPmf::identical_rows_uniform(2, 2));
        let b = upper_bound_arbitrary(&model, &Dmc::identity(2), 0.5, &[1], &caps()).unwrap();
        assert!((b[0].bound - 2.0 / 1.25).abs() < 1e-12);
    }

    #[test]
    fn row_order_spread_for_symmetric_model_is_flat() {
        let model = SourceModel::Iid(generic());
        let (lo, hi) = upper_bound_row_orders(&model, &Dmc::identity(2), 0.7, 2, &caps()).unwrap();
        assert!((hi - lo).abs() < 1e-12);
    }

    #[test]
    fn region_examples() {
        let est = EstimatorConfig::default();
        let prod = SourceModel::Iid(ColumnPmf::product(2, &[vec![0.7, 0.3], vec![0.6, 0.4]]).unwrap());
        assert!(achievability_check(&prod, None, 1.0, &est, &caps()).unwrap().feasible);
        let r = achievability_check(&prod, None, 0.99, &est, &caps()).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.margins.len(), 3);

        let same = SourceModel::Iid(ColumnPmf::identical_rows_uniform(2, 2));
        assert!(achievability_check(&same, None, 0.6, &est, &caps()).unwrap().feasible);
        assert!(!achievability_check(&same, None, 0.4, &est, &caps()).unwrap().feasible);

        let gen = SourceModel::Iid(generic());
        assert!(achievability_check(&gen, None, 0.87, &est, &caps()).unwrap().feasible);
        let below = achievability_check(&gen, None, 0.85, &est, &caps()).unwrap();
        assert!(!below.feasible);
        assert_eq!(below.binding().rows, vec![1, 2]);
    }

    #[test]
    fn region_for_markov_model_runs() {
        let est = EstimatorConfig::default();
        let chain = SourceModel::Markov(MarkovColumnSource::sticky(2, 2, 0.8).unwrap());
        let cap = capacity_ergodic(&chain, &est, &caps()).unwrap();
        let p_star = cap.threshold;
        let above = achievability_check(&chain, None, (p_star + 0.02).min(1.0), &est, &caps()).unwrap();
        let below = achievability_check(&chain, None, p_star - 0.05, &est, &caps()).unwrap();
        assert!(above.feasible);
        assert!(!below.feasible);
    }

    #[test]
    fn report_serializes() {
        let r = capacity_iid(&generic()).unwrap();
        let mut text = Vec::new();
        r.write_report(&mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert!(text.starts_with("capacity = 1.16148"));
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("key,value\ncapacity,"));
    }
}
