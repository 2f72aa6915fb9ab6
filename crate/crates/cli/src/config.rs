use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use fastglt_core::baselines::ImpConfig;
use fastglt_core::denoise::{DenoiseSchedule, FastGltConfig};
use fastglt_core::graph::SbmSpec;
use fastglt_core::nn::{AdamConfig, StepOptions};
use fastglt_core::{Method, SparsityPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

/// Fully resolved settings of one experiment. Keys are flat so a JSON file
/// and `--set key=value` overrides address the same names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Bundle directory, or `"sbm"` to generate the graph from `sbm`.
    pub dataset: String,
    pub sbm: SbmSpec,
    pub method: Method,
    pub s_g: f64,
    pub s_theta: f64,
    pub oneshot_epochs: usize,
    pub denoise_epochs: usize,
    pub interval: usize,
    pub tau: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub hidden: usize,
    pub train_epochs: usize,
    pub imp_p_g: f64,
    pub imp_p_theta: f64,
    pub seed: u64,
    pub precision: Precision,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: "data/cora/bundle".into(),
            sbm: SbmSpec::new(4, 100, 0.05, 0.005, 32, 0),
            method: Method::Fastglt,
            s_g: 0.2,
            s_theta: 0.3,
            oneshot_epochs: 30,
            denoise_epochs: 400,
            interval: 10,
            tau: 0.2,
            kappa: 1.0,
            alpha: 0.01,
            beta: 1.2,
            lr: 0.001,
            weight_decay: 5e-4,
            dropout: 0.5,
            hidden: 512,
            train_epochs: 200,
            imp_p_g: 0.05,
            imp_p_theta: 0.2,
            seed: 0,
            precision: Precision::F64,
            out: "out".into(),
        }
    }
}

fn in_unit(name: &str, v: f64) -> Result<()> {
    ensure!((0.0..1.0).contains(&v), "{name} = {v} must lie in [0, 1)");
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Applies `key=value` overrides. Values parse as JSON first and fall
    /// back to a plain string; dotted keys reach into nested objects.
    pub fn apply_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .with_context(|| format!("override {item:?} is not key=value"))?;
            let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut slot = &mut value;
            for part in key.split('.') {
                slot = slot
                    .as_object_mut()
                    .and_then(|o| o.get_mut(part))
                    .with_context(|| format!("unknown config key {key:?}"))?;
            }
            *slot = parsed;
        }
        serde_json::from_value(value).context("applying --set overrides")
    }

    pub fn validate(&self) -> Result<()> {
        in_unit("s_g", self.s_g)?;
        in_unit("s_theta", self.s_theta)?;
        in_unit("dropout", self.dropout)?;
        in_unit("imp_p_g", self.imp_p_g)?;
        in_unit("imp_p_theta", self.imp_p_theta)?;
        ensure!(self.hidden > 0, "hidden must be positive");
        ensure!(self.train_epochs > 0, "train_epochs must be positive");
        ensure!(self.oneshot_epochs > 0, "oneshot_epochs must be positive");
        ensure!(self.lr > 0.0 && self.lr.is_finite(), "lr must be positive");
        ensure!(self.weight_decay >= 0.0, "weight_decay must be nonnegative");
        if self.method == Method::Fastglt {
            self.fastglt()?;
        }
        if self.method == Method::Imp {
            self.imp()?;
            fastglt_core::baselines::imp_rounds(self.imp_p_g, self.s_g)?;
            fastglt_core::baselines::imp_rounds(self.imp_p_theta, self.s_theta)?;
        }
        if self.dataset == "sbm" {
            ensure!(
                self.sbm.blocks > 0 && self.sbm.nodes_per_block > 0,
                "sbm needs blocks and nodes_per_block"
            );
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of every field that can change results.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            adam: AdamConfig {
                lr: self.lr,
                weight_decay: self.weight_decay,
                ..Default::default()
            },
            dropout: self.dropout,
            seed: self.seed,
        }
    }

    pub fn fastglt(&self) -> Result<FastGltConfig> {
        Ok(FastGltConfig {
            oneshot_epochs: self.oneshot_epochs,
            schedule: DenoiseSchedule::new(self.interval, self.denoise_epochs, self.tau, self.kappa)?,
            plan: SparsityPlan::new(self.s_g, self.s_theta, self.alpha, self.beta)?,
        })
    }

    pub fn imp(&self) -> Result<ImpConfig> {
        Ok(ImpConfig::new(self.imp_p_g, self.imp_p_theta)?)
    }
}

/// Extreme-sparsity search: graph sparsity climbs in fixed steps until the
/// retrained ticket falls more than `tolerance` below the dense arm. Both
/// accuracies are means over `seeds` (the base seed when empty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    pub start: f64,
    pub step: f64,
    pub max: f64,
    /// Accuracy drop (fraction, not points) still counted as a winning ticket.
    pub tolerance: f64,
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            methods: vec![Method::Fastglt, Method::Oneshot, Method::Random],
            start: 0.05,
            step: 0.05,
            max: 0.95,
            tolerance: 0.01,
            seeds: Vec::new(),
        }
    }
}

/// A set of method arms over one dataset and one Θ₀, plus optional figure data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    #[serde(flatten)]
    pub base: ExperimentConfig,
    pub arms: Vec<Method>,
    /// Graph sparsity levels for the mask-distance figure.
    pub distance_levels: Vec<f64>,
    pub sweep: Option<SweepConfig>,
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let raw: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Self::from_value(raw).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn from_value(mut raw: Value) -> Result<Self> {
        // serde cannot combine `flatten` with `deny_unknown_fields`, so the
        // base keys are split off and parsed strictly on their own.
        let obj = raw.as_object_mut().context("suite file must hold a JSON object")?;
        let mut suite = serde_json::Map::new();
        for key in ["arms", "distance_levels", "sweep"] {
            if let Some(v) = obj.remove(key) {
                suite.insert(key.into(), v);
            }
        }
        let base: ExperimentConfig = serde_json::from_value(Value::Object(obj.clone()))?;
        Ok(SuiteConfig {
            base,
            arms: match suite.remove("arms") {
                Some(v) => serde_json::from_value(v)?,
                None => Vec::new(),
            },
            distance_levels: match suite.remove("distance_levels") {
                Some(v) => serde_json::from_value(v)?,
                None => Vec::new(),
            },
            sweep: match suite.remove("sweep") {
                Some(v) => Some(serde_json::from_value(v)?),
                None => None,
            },
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut base = self.base.clone();
        for &m in &self.arms {
            base.method = m;
            base.validate()?;
        }
        for &s in &self.distance_levels {
            in_unit("distance level", s)?;
        }
        if self.distance_levels.windows(2).any(|w| w[0] >= w[1]) {
            bail!("distance_levels must strictly ascend");
        }
        if let Some(sw) = &self.sweep {
            ensure!(sw.step > 0.0, "sweep step must be positive");
            in_unit("sweep start", sw.start)?;
            ensure!(sw.max < 1.0, "sweep max must stay below 1");
        }
        Ok(())
    }
}
