//! Experiment configuration files.
//!
//! A config is a TOML document. Top-level keys describe the problem and the
//! optimizer; `mode`, `k`, `alpha` and `singulars` take either one value or an
//! array and expand into one run per combination. Optional `[accel]` and
//! `[fit]` tables configure the rebalancing step and the rate fits.
//!
//! ```toml
//! name = "fig2-asym"
//! mode = "asymmetric"          # symmetric | asymmetric | accel | toy
//! n = 50
//! r = 2
//! singulars = [1.0, 1.0]       # or [[1.0, 0.66], [1.0, 0.1]] to sweep
//! k = 4
//! m = 700                      # 0 selects the identity operator
//! eta = 0.2
//! alpha = [0.5, 0.2, 0.05]
//! ratio = 0.3333333333333333   # G scale relative to F (asymmetric modes)
//! t_max = 10000
//! log_stride = 100
//! stop_loss = 1e-24
//! seed = 1                     # run i uses init seed `seed + i`
//!
//! [accel]                      # required by mode = "accel"
//! t_fire = 2000                # or gamma = 1e-3
//! beta = 0.5                   # default 0.5 * sigma_r
//!
//! [fit]
//! fields = ["loss_fro2"]
//! kind = "linear"              # linear | power
//! window = [5000, 10000]       # default: last half of the usable records
//! floor = 1e-24                # values at or below are not fitted
//! ```

use std::fmt;
use std::path::Path;

use lrsense::accel::{AccelConfig, Trigger};
use lrsense::diagnostics::TraceField;
use lrsense::problem::DEFAULT_IMBALANCE_RATIO;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, io_err, Error, Result};

/// A single value or an array of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(vs) => vs.clone(),
        }
    }
}

impl<T> OneOrMany<T> {
    pub fn len(&self) -> usize {
        match self {
            OneOrMany::One(_) => 1,
            OneOrMany::Many(vs) => vs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<T> From<T> for OneOrMany<T> {
    fn from(v: T) -> Self {
        OneOrMany::One(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Symmetric,
    Asymmetric,
    /// Asymmetric gradient descent with one rebalancing step.
    Accel,
    /// Asymmetric, identity operator, deterministic `k = r + 1` start.
    Toy,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Symmetric => "symmetric",
            Mode::Asymmetric => "asymmetric",
            Mode::Accel => "accel",
            Mode::Toy => "toy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKind {
    Linear,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_fire: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

pub const DEFAULT_FIT_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "default_fit_fields")]
    pub fields: Vec<String>,
    #[serde(default = "default_fit_kind")]
    pub kind: FitKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[usize; 2]>,
    #[serde(default = "default_fit_floor")]
    pub floor: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            fields: default_fit_fields(),
            kind: default_fit_kind(),
            window: None,
            floor: default_fit_floor(),
        }
    }
}

fn default_fit_fields() -> Vec<String> {
    vec![TraceField::LossFro2.name().to_string()]
}

fn default_fit_kind() -> FitKind {
    FitKind::Linear
}

fn default_fit_floor() -> f64 {
    DEFAULT_FIT_FLOOR
}

fn default_ratio() -> f64 {
    DEFAULT_IMBALANCE_RATIO
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub mode: OneOrMany<Mode>,
    pub n: usize,
    pub r: usize,
    /// Nonzero singular values of the target; all ones when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singulars: Option<OneOrMany<Vec<f64>>>,
    pub k: OneOrMany<usize>,
    /// Number of Gaussian measurements; 0 selects the identity operator.
    #[serde(default)]
    pub m: usize,
    pub eta: f64,
    pub alpha: OneOrMany<f64>,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    pub t_max: usize,
    #[serde(default = "default_stride")]
    pub log_stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_loss: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accel: Option<AccelSection>,
    #[serde(default)]
    pub fit: FitSection,
}

/// One fully specified run of an expanded config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub index: usize,
    pub label: String,
    pub mode: Mode,
    pub n: usize,
    pub r: usize,
    pub singulars: Vec<f64>,
    pub k: usize,
    pub m: usize,
    pub eta: f64,
    pub alpha: f64,
    pub ratio: f64,
    pub t_max: usize,
    pub log_stride: usize,
    pub stop_loss: Option<f64>,
    /// Initialization seed.
    pub seed: u64,
    pub accel: Option<AccelConfig>,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        config_err(field, format!("must be positive and finite, got {v}"))
    }
}

fn nonempty<T>(field: &str, v: &OneOrMany<T>) -> Result<()> {
    if v.is_empty() {
        return config_err(field, "array must not be empty");
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn modes(&self) -> Vec<Mode> {
        self.mode.to_vec()
    }

    pub fn singular_sets(&self) -> Vec<Vec<f64>> {
        match &self.singulars {
            Some(s) => s.to_vec(),
            None => vec![vec![1.0; self.r]],
        }
    }

    pub fn fit_fields(&self) -> Vec<TraceField> {
        self.fit
            .fields
            .iter()
            .map(|f| f.parse().expect("validated"))
            .collect()
    }

    /// Checks every field; nothing is allocated or run before this passes.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return config_err("name", "must be nonempty and use only [A-Za-z0-9._-]");
        }
        nonempty("mode", &self.mode)?;
        nonempty("k", &self.k)?;
        nonempty("alpha", &self.alpha)?;
        if self.n == 0 {
            return config_err("n", "must be at least 1");
        }
        if self.r == 0 || self.r > self.n {
            return config_err("r", format!("must satisfy 1 <= r <= n = {}", self.n));
        }
        if let Some(s) = &self.singulars {
            nonempty("singulars", s)?;
        }
        for set in self.singular_sets() {
            if set.len() != self.r {
                return config_err("singulars", format!("expected {} values per set, got {set:?}", self.r));
            }
            if set.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
                return config_err("singulars", format!("values must be positive, got {set:?}"));
            }
            if set.windows(2).any(|w| w[1] > w[0]) {
                return config_err("singulars", format!("values must be nonincreasing, got {set:?}"));
            }
        }
        for k in self.k.to_vec() {
            if k == 0 || k > self.n {
                return config_err("k", format!("must satisfy 1 <= k <= n = {}, got {k}", self.n));
            }
        }
        positive("eta", self.eta)?;
        for a in self.alpha.to_vec() {
            positive("alpha", a)?;
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return config_err("ratio", format!("must lie in (0, 1], got {}", self.ratio));
        }
        if self.log_stride == 0 {
            return config_err("log_stride", "must be at least 1");
        }
        if let Some(s) = self.stop_loss {
            positive("stop_loss", s)?;
        }
        let modes = self.modes();
        let uses_accel = modes.contains(&Mode::Accel);
        match (&self.accel, uses_accel) {
            (None, true) => return config_err("accel", "mode `accel` needs an [accel] table"),
            (Some(acc), _) => {
                match (acc.t_fire, acc.gamma) {
                    (Some(_), Some(_)) | (None, None) => {
                        return config_err("accel", "set exactly one of `t_fire` and `gamma`")
                    }
                    (Some(t), None) if t > self.t_max => {
                        return config_err("accel.t_fire", format!("{t} exceeds t_max = {}", self.t_max))
                    }
                    (None, Some(g)) => positive("accel.gamma", g)?,
                    _ => {}
                }
                if let Some(b) = acc.beta {
                    positive("accel.beta", b)?;
                }
            }
            (None, false) => {}
        }
        if modes.contains(&Mode::Toy) {
            if self.m != 0 {
                return config_err("m", "toy mode uses the identity operator (m = 0)");
            }
            if self.k.to_vec().iter().any(|&k| k != self.r + 1) {
                return config_err("k", "toy mode needs k = r + 1");
            }
            if self.n <= self.r {
                return config_err("n", "toy mode needs n > r");
            }
            if self.singular_sets().iter().flatten().any(|&s| s != 1.0) {
                return config_err("singulars", "toy mode needs unit singular values");
            }
        }
        if self.fit.fields.is_empty() {
            return config_err("fit.fields", "must name at least one trace field");
        }
        for f in &self.fit.fields {
            if f.parse::<TraceField>().is_err() || f == "t" {
                return config_err("fit.fields", format!("`{f}` is not a fittable trace field"));
            }
        }
        if let Some([a, b]) = self.fit.window {
            if a >= b {
                return config_err("fit.window", format!("start {a} must be below end {b}"));
            }
        }
        if !(self.fit.floor >= 0.0) {
            return config_err("fit.floor", "must be nonnegative");
        }
        Ok(())
    }

    /// Expands sweeps into runs, ordered mode, singulars, k, alpha (innermost).
    pub fn expand(&self) -> Result<Vec<RunSpec>> {
        self.validate()?;
        let modes = self.modes();
        let sets = self.singular_sets();
        let ks = self.k.to_vec();
        let alphas = self.alpha.to_vec();
        let mut runs = Vec::new();
        for &mode in &modes {
            for set in &sets {
                for &k in &ks {
                    for &alpha in &alphas {
                        let index = runs.len();
                        let mut parts = Vec::new();
                        if modes.len() > 1 {
                            parts.push(mode.to_string());
                        }
                        if sets.len() > 1 {
                            parts.push(format!("sigma_r={}", set[set.len() - 1]));
                        }
                        if ks.len() > 1 {
                            parts.push(format!("k={k}"));
                        }
                        parts.push(format!("alpha={alpha}"));
                        let accel = match (mode, &self.accel) {
                            (Mode::Accel, Some(acc)) => Some(AccelConfig {
                                trigger: match (acc.t_fire, acc.gamma) {
                                    (Some(t_fire), _) => Trigger::FixedIteration { t_fire },
                                    (None, Some(gamma)) => Trigger::Threshold { gamma },
                                    (None, None) => unreachable!("validated"),
                                },
                                beta: acc.beta.unwrap_or(0.5 * set[set.len() - 1]),
                            }),
                            _ => None,
                        };
                        runs.push(RunSpec {
                            index,
                            label: parts.join(" "),
                            mode,
                            n: self.n,
                            r: self.r,
                            singulars: set.clone(),
                            k,
                            m: self.m,
                            eta: self.eta,
                            alpha,
                            ratio: self.ratio,
                            t_max: self.t_max,
                            log_stride: self.log_stride,
                            stop_loss: self.stop_loss,
                            seed: self.seed.wrapping_add(index as u64),
                            accel,
                        });
                    }
                }
            }
        }
        Ok(runs)
    }
}

impl std::str::FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_toml(s)
    }
}
