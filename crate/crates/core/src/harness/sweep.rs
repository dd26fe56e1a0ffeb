//! Monte Carlo trials and observation-rate sweeps.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{DecoderSpec, ExperimentConfig};
use super::stats::{find_transition, wilson_interval, Transition, Z95};
use crate::capacity::{achievability_check, capacity_for, upper_bound_arbitrary, BoundPoint, CapacityReport};
use crate::channels::{apply_dmc, apply_erasure, Dmc, ErasureSpec, ObservedMatrix};
use crate::decoders::{map_decode_viterbi, typicality_decode, DecodeOutcome, DecodeStatus, TypicalityParams};
use crate::error::{Error, Result};
use crate::numeric::derive_seed;
use crate::source_models::{sample_matrix, MatrixSample, SourceModel};

const SOURCE_STREAM: u64 = 0x736f_7572_6365;
const NOISE_STREAM: u64 = 0x6e6f_6973_65;
const ERASURE_STREAM: u64 = 0x6572_6173_7572_65;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub p: f64,
    pub success: bool,
    pub status: DecodeStatus,
    pub tie: bool,
    pub observed: usize,
    /// Set when the decoder refused the trial; such trials are excluded
    /// from error rates.
    pub skipped: Option<String>,
}

/// Everything produced by one trial, for verbose inspection.
#[derive(Debug, Clone)]
pub struct TrialDetail {
    pub result: TrialResult,
    pub truth: MatrixSample,
    pub observed: ObservedMatrix,
    pub outcome: Option<DecodeOutcome>,
}

/// A config resolved into model, channel and decoder state.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: SourceModel,
    pub dmc: Dmc,
    typicality: Option<TypicalityParams>,
}

impl Experiment {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let model = config.build_model()?;
        let dmc = config.build_dmc()?;
        let typicality = match config.decoder {
            DecoderSpec::Map => None,
            DecoderSpec::Typicality { epsilon } => Some(TypicalityParams::for_model(
                &model,
                1.0,
                epsilon,
                config.estimator.horizon,
                &config.caps,
            )?),
        };
        Ok(Self {
            config: config.clone(),
            model,
            dmc,
            typicality,
        })
    }

    /// Same experiment decoded by typicality with slack `epsilon`.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut next = self.clone();
        next.config.decoder = DecoderSpec::Typicality { epsilon };
        next.config.validate()?;
        match next.typicality.as_mut() {
            Some(t) => t.epsilon = epsilon,
            None => {
                next.typicality = Some(TypicalityParams::for_model(
                    &self.model,
                    1.0,
                    epsilon,
                    self.config.estimator.horizon,
                    &self.config.caps,
                )?)
            }
        }
        Ok(next)
    }

    fn decode(&self, obs: &ObservedMatrix, p: f64) -> Result<DecodeOutcome> {
        match (&self.config.decoder, &self.typicality) {
            (DecoderSpec::Typicality { epsilon }, Some(base)) => {
                let params = TypicalityParams {
                    epsilon: *epsilon,
                    p,
                    ..base.clone()
                };
                typicality_decode(obs, &self.model, &self.dmc, &params, &self.config.caps)
            }
            _ => map_decode_viterbi(obs, &self.model, &self.dmc, p),
        }
    }

    /// Sample, observe and decode one matrix. Deterministic in
    /// `(seed, p, trial)`; source and noise draws do not depend on `p`.
    pub fn run_trial_detailed(&self, p: f64, trial: usize) -> Result<TrialDetail> {
        let seed = self.config.seed;
        let t = trial as u64;
        let truth = sample_matrix(&self.model, self.config.n, derive_seed(seed, &[SOURCE_STREAM, t]));
        let noisy = apply_dmc(&truth, &self.dmc, derive_seed(seed, &[NOISE_STREAM, t]))?;
        let observed = apply_erasure(
            &noisy,
            ErasureSpec::new(p)?,
            derive_seed(seed, &[ERASURE_STREAM, p.to_bits(), t]),
        );
        let (outcome, skipped) = match self.decode(&observed, p) {
            Ok(o) => (Some(o), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let result = TrialResult {
            trial,
            p,
            success: outcome.as_ref().is_some_and(|o| o.is_correct(&truth)),
            status: outcome.as_ref().map_or(DecodeStatus::NoCandidate, |o| o.status),
            tie: outcome.as_ref().is_some_and(|o| o.tie),
            observed: observed.observed_count(),
            skipped,
        };
        Ok(TrialDetail {
            result,
            truth,
            observed,
            outcome,
        })
    }

    pub fn run_trial(&self, p: f64, trial: usize) -> Result<TrialResult> {
        self.run_trial_detailed(p, trial).map(|d| d.result)
    }

    /// Capacity prediction for the configured model and channel.
    pub fn predict(&self) -> Result<CapacityReport> {
        capacity_for(&self.model, &self.dmc, &self.config.estimator, &self.config.caps)
    }

    /// Runs every grid point and assembles the report.
    pub fn run_sweep(&self) -> Result<SweepReport> {
        let ps = self.config.sweep_points()?;
        let trials = self.config.trials;
        let results: Vec<Result<TrialResult>> = (0..ps.len() * trials)
            .into_par_iter()
            .map(|j| self.run_trial(ps[j / trials], j % trials))
            .collect();

        let prediction = self.predict();
        let mut notes = Vec::new();
        let (capacity, threshold) = match &prediction {
            Ok(r) => (Some(r.capacity), Some(r.threshold)),
            Err(e) => {
                notes.push(format!("capacity: {e}"));
                (None, None)
            }
        };

        let mut rows = Vec::with_capacity(ps.len());
        for (i, &p) in ps.iter().enumerate() {
            let mut row = SweepRow {
                p,
                trials: 0,
                errors: 0,
                skipped: 0,
                ties: 0,
                error_rate: 0.0,
                ci_low: 0.0,
                ci_high: 1.0,
                predicted_feasible: false,
            };
            for r in &results[i * trials..(i + 1) * trials] {
                match r {
                    Ok(t) if t.skipped.is_some() => row.skipped += 1,
                    Ok(t) => {
                        row.trials += 1;
                        row.errors += usize::from(!t.success);
                        row.ties += usize::from(t.tie);
                    }
                    Err(e) => {
                        row.skipped += 1;
                        notes.push(format!("trial error at p={p}: {e}"));
                    }
                }
            }
            if row.trials > 0 {
                row.error_rate = row.errors as f64 / row.trials as f64;
            }
            (row.ci_low, row.ci_high) = wilson_interval(row.errors, row.trials, Z95);
            row.predicted_feasible = self.predicted_feasible(p, &prediction, &mut notes);
            rows.push(row);
        }

        let bound_p = threshold.map(|t| t.min(1.0));
        let mut bounds = Vec::new();
        if let Some(bp) = bound_p {
            for &n in &self.config.bound_n {
                match upper_bound_arbitrary(&self.model, &self.dmc, bp, &[n], &self.config.caps) {
                    Ok(mut b) => bounds.append(&mut b),
                    Err(e) => notes.push(format!("bound at n={n}: {e}")),
                }
            }
        }

        let rates: Vec<f64> = rows.iter().map(|r| r.error_rate).collect();
        let weights: Vec<f64> = rows.iter().map(|r| r.trials as f64).collect();
        let lows: Vec<f64> = rows.iter().map(|r| r.ci_low).collect();
        let highs: Vec<f64> = rows.iter().map(|r| r.ci_high).collect();
        let transition = match find_transition(&ps, &rates, &weights, &lows, &highs) {
            Ok(t) => Ok(t),
            Err(e) => Err(e.to_string()),
        };

        Ok(SweepReport {
            rows,
            capacity,
            predicted_threshold: threshold,
            bound_p,
            bounds,
            transition,
            seed: self.config.seed,
            config_hash: self.config.hash(),
            decoder: self.config.decoder.label(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            notes,
        })
    }

    fn predicted_feasible(&self, p: f64, prediction: &Result<CapacityReport>, notes: &mut Vec<String>) -> bool {
        match prediction {
            Err(Error::CapacityZero) => false,
            Err(Error::DegenerateSource(_)) => true,
            Err(_) => false,
            Ok(report) => {
                let dmc = (!self.dmc.is_identity()).then_some(&self.dmc);
                match achievability_check(&self.model, dmc, p, &self.config.estimator, &self.config.caps) {
                    Ok(check) => check.feasible,
                    Err(e) => {
                        notes.push(format!("region check at p={p}: {e}; using p >= p*"));
                        p >= report.threshold
                    }
                }
            }
        }
    }
}

/// Convenience wrapper around [`Experiment::run_trial`].
pub fn run_trial(cfg: &ExperimentConfig, p: f64, trial: usize) -> Result<TrialResult> {
    Experiment::new(cfg)?.run_trial(p, trial)
}

/// Convenience wrapper around [`Experiment::run_sweep`].
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    Experiment::new(cfg)?.run_sweep()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    /// Trials that were decoded (skipped ones excluded).
    pub trials: usize,
    pub errors: usize,
    pub skipped: usize,
    pub ties: usize,
    pub error_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub predicted_feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    /// Sorted by increasing `p`.
    pub rows: Vec<SweepRow>,
    pub capacity: Option<f64>,
    pub predicted_threshold: Option<f64>,
    /// Observation rate at which the finite-n bounds were evaluated.
    pub bound_p: Option<f64>,
    pub bounds: Vec<BoundPoint>,
    pub transition: std::result::Result<Transition, String>,
    pub seed: u64,
    pub config_hash: String,
    pub decoder: String,
    pub version: String,
    pub notes: Vec<String>,
}

impl SweepReport {
    pub fn skipped_total(&self) -> usize {
        self.rows.iter().map(|r| r.skipped).sum()
    }

    pub fn tie_total(&self) -> usize {
        self.rows.iter().map(|r| r.ties).sum()
    }

    /// Isotonic (nonincreasing) fit of the error-rate column.
    pub fn isotonic_curve(&self) -> Vec<f64> {
        let rates: Vec<f64> = self.rows.iter().map(|r| r.error_rate).collect();
        let weights: Vec<f64> = self.rows.iter().map(|r| r.trials as f64).collect();
        super::stats::isotonic_nonincreasing(&rates, &weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json_str(json).unwrap()
    }

    const PRODUCT: &str = r#"{
  "model": { "type": "product", "q": 2, "marginals": [[0.7, 0.3], [0.6, 0.4]] },
  "n": 200, "trials": 20, "seed": 3,
  "grid": { "p_min": 0.5, "p_max": 1.0, "steps": 6 }
}"#;

    #[test]
    fn full_observation_always_succeeds() {
        let c = cfg(PRODUCT);
        let r = run_trial(&c, 1.0, 4).unwrap();
        assert!(r.success);
        assert_eq!(r.observed, 400);
        let report = run_sweep(&c).unwrap();
        let last = report.rows.last().unwrap();
        assert_eq!(last.p, 1.0);
        assert_eq!(last.errors, 0);
        assert!(last.predicted_feasible);
        assert!((report.predicted_threshold.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trials_are_deterministic() {
        let e = Experiment::new(&cfg(PRODUCT)).unwrap();
        let a = e.run_trial_detailed(0.7, 9).unwrap();
        let b = e.run_trial_detailed(0.7, 9).unwrap();
        assert_eq!(a.result, b.result);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.observed, b.observed);
    }

    #[test]
    fn nothing_observed_guesses_modal_matrix() {
        // Uniform product: every matrix is modal, success rate q^{-kn}.
        let json = r#"{ "model": { "type": "iid", "k": 1, "q": 2, "pmf": [0.5, 0.5] }, "n": 2, "trials": 4000, "p": 0.0, "seed": 1 }"#;
        let r = run_sweep(&cfg(json)).unwrap();
        let row = &r.rows[0];
        let success = 1.0 - row.error_rate;
        let sd = (0.25f64 * 0.75 / 4000.0).sqrt();
        assert!((success - 0.25).abs() < 4.0 * sd, "success {success}");
    }

    #[test]
    fn typicality_sweep_counts_failures_as_errors() {
        let json = r#"{
  "model": { "type": "iid", "k": 2, "q": 2, "pmf": [0.4, 0.1, 0.1, 0.4] },
  "n": 6, "trials": 30, "seed": 5,
  "decoder": { "type": "typicality", "epsilon": 0.3 },
  "grid": { "p_min": 0.6, "p_max": 1.0, "steps": 3 }
}"#;
        let e = Experiment::new(&cfg(json)).unwrap();
        let r = e.run_sweep().unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.trials + row.skipped == 30));
        let loose = e.with_epsilon(10.0).unwrap().run_sweep().unwrap();
        assert_eq!(loose.rows[2].errors, 0);
    }

    #[test]
    fn typicality_cap_marks_trials_skipped() {
        let json = r#"{
  "model": { "type": "iid", "k": 2, "q": 2, "pmf": [0.4, 0.1, 0.1, 0.4] },
  "n": 40, "trials": 3, "seed": 5, "p": 0.2,
  "decoder": { "type": "typicality" },
  "caps": { "candidates": 16 }
}"#;
        let r = run_sweep(&cfg(json)).unwrap();
        assert_eq!(r.rows[0].skipped, 3);
        assert_eq!(r.rows[0].trials, 0);
    }
}
