//! JSON experiment configuration.
//!
//! Matrices are flat arrays in the column index convention of
//! [`crate::source_models`]. Parse failures and semantic violations are
//! reported with the line of the offending key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::capacity::EstimatorConfig;
use crate::channels::Dmc;
use crate::error::{Error, Result};
use crate::numeric::ipow;
use crate::source_models::{ColumnPmf, MarkovColumnSource, SourceModel};
use crate::WorkCaps;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// i.i.d. columns with an explicit column pmf.
    Iid { k: usize, q: usize, pmf: Vec<f64> },
    /// i.i.d. columns with independent rows.
    Product { q: usize, marginals: Vec<Vec<f64>> },
    /// i.i.d. columns uniform over the constant columns.
    IdenticalRows { k: usize, q: usize },
    /// Markov column chain with an explicit `q^k × q^k` transition matrix.
    Markov { k: usize, q: usize, transition: Vec<f64> },
    /// Markov chain that repeats the previous column with probability `stay`.
    Sticky { k: usize, q: usize, stay: f64 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<SourceModel> {
        match self {
            ModelSpec::Iid { k, q, pmf } => {
                expect_len("pmf", pmf.len(), ipow(*q, *k))?;
                Ok(SourceModel::Iid(ColumnPmf::new(*k, *q, pmf.clone())?))
            }
            ModelSpec::Product { q, marginals } => {
                for m in marginals {
                    expect_len("marginals", m.len(), *q)?;
                }
                Ok(SourceModel::Iid(ColumnPmf::product(*q, marginals)?))
            }
            ModelSpec::IdenticalRows { k, q } => Ok(SourceModel::Iid(ColumnPmf::identical_rows_uniform(*k, *q))),
            ModelSpec::Markov { k, q, transition } => {
                let states = ipow(*q, *k);
                expect_len("transition", transition.len(), states * states)?;
                Ok(SourceModel::Markov(MarkovColumnSource::new(*k, *q, transition.clone())?))
            }
            ModelSpec::Sticky { k, q, stay } => Ok(SourceModel::Markov(MarkovColumnSource::sticky(*k, *q, *stay)?)),
        }
    }
}

fn expect_len(key: &'static str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Config {
            line: 0,
            message: format!("`{key}` has {got} entries, expected {want}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DmcSpec {
    #[default]
    Identity,
    /// Keep with `1 - flip`, otherwise uniform over the other symbols.
    Symmetric { flip: f64 },
    /// Row-stochastic `q × q_out` matrix.
    Matrix { q_out: usize, w: Vec<f64> },
}

impl DmcSpec {
    pub fn build(&self, q: usize) -> Result<Dmc> {
        match self {
            DmcSpec::Identity => Ok(Dmc::identity(q)),
            DmcSpec::Symmetric { flip } => Dmc::symmetric(q, *flip),
            DmcSpec::Matrix { q_out, w } => {
                expect_len("w", w.len(), q * q_out)?;
                Dmc::new(q, *q_out, w.clone())
            }
        }
    }
}

pub const DEFAULT_EPSILON: f64 = 0.1;

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecoderSpec {
    #[default]
    Map,
    Typicality {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
}

impl DecoderSpec {
    pub fn label(&self) -> String {
        match self {
            DecoderSpec::Map => "map".into(),
            DecoderSpec::Typicality { epsilon } => format!("typicality(eps={epsilon})"),
        }
    }
}

/// `steps` evenly spaced observation rates from `p_min` to `p_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub p_min: f64,
    pub p_max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.p_min];
        }
        let span = self.p_max - self.p_min;
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == last {
                    self.p_max
                } else {
                    self.p_min + span * i as f64 / last as f64
                }
            })
            .collect()
    }
}

fn default_trials() -> usize {
    100
}

fn default_bound_n() -> Vec<usize> {
    vec![1, 2, 3, 4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub dmc: DmcSpec,
    /// Number of columns of each sampled matrix.
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub decoder: DecoderSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    /// Single observation rate for `simulate` and `oracle`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub caps: WorkCaps,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    /// Block lengths for the finite-n upper bound.
    #[serde(default = "default_bound_n")]
    pub bound_n: Vec<usize>,
    /// Extra typicality slacks to sweep, one report per value.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon_axis: Vec<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config {
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|e| anchor(e, text))?;
        Ok(cfg)
    }

    /// Semantic checks beyond the schema. Errors carry the key name so
    /// [`ExperimentConfig::from_json_str`] can attach a line.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Error::Config {
            line: 0,
            message: format!("`{key}`: {msg}"),
        };
        if self.n == 0 {
            return Err(bad("n", "must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(bad("trials", "must be at least 1".into()));
        }
        if let Some(g) = &self.grid {
            if !(0.0 <= g.p_min && g.p_min <= g.p_max && g.p_max <= 1.0) {
                return Err(bad("grid", format!("need 0 <= p_min <= p_max <= 1, got [{}, {}]", g.p_min, g.p_max)));
            }
            if g.steps == 0 {
                return Err(bad("steps", "must be at least 1".into()));
            }
        }
        if let Some(p) = self.p {
            if !(0.0..=1.0).contains(&p) {
                return Err(bad("p", format!("{p} outside [0, 1]")));
            }
        }
        let eps_ok = |e: f64| e.is_finite() && e >= 0.0;
        if let DecoderSpec::Typicality { epsilon } = self.decoder {
            if !eps_ok(epsilon) {
                return Err(bad("epsilon", format!("{epsilon} is not a valid slack")));
            }
        }
        if let Some(e) = self.epsilon_axis.iter().find(|e| !eps_ok(**e)) {
            return Err(bad("epsilon_axis", format!("{e} is not a valid slack")));
        }
        if self.bound_n.contains(&0) {
            return Err(bad("bound_n", "block lengths must be at least 1".into()));
        }
        let model = self.model.build()?;
        self.dmc.build(model.q())?;
        Ok(())
    }

    pub fn build_model(&self) -> Result<SourceModel> {
        self.model.build()
    }

    pub fn build_dmc(&self) -> Result<Dmc> {
        self.dmc.build(self.model.build()?.q())
    }

    /// Grid points, or the single `p` when no grid is set.
    pub fn sweep_points(&self) -> Result<Vec<f64>> {
        match (&self.grid, self.p) {
            (Some(g), _) => Ok(g.points()),
            (None, Some(p)) => Ok(vec![p]),
            (None, None) => Err(Error::Usage("config has neither `grid` nor `p`".into())),
        }
    }

    /// SHA-256 of the canonical JSON form, as hex.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Attaches a line number to a key-tagged config error.
fn anchor(err: Error, text: &str) -> Error {
    let message = match err {
        Error::Config { line: 0, message } => message,
        Error::InvalidModel(m) => format!("model: {m}"),
        other => return other,
    };
    let key = message
        .strip_prefix('`')
        .and_then(|m| m.split('`').next())
        .unwrap_or("model");
    let line = key_line(text, key).or_else(|| key_line(text, "model")).unwrap_or(1);
    Error::Config { line, message }
}

/// 1-based line of the first occurrence of `"key"`.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}
