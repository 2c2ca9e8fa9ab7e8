//! Run configuration: defaults, a `key = value` file, and overrides.
//!
//! Resolution order is defaults, then a `preset` (if any), then file keys,
//! then override keys; later sources win. The resolved configuration
//! serializes back to the same text format.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::DistributionSpec;
use crate::error::{QuarkError, Result};
use crate::evaluation::ProtocolConfig;
use crate::model::ModelConfig;
use crate::training::TrainConfig;

/// Hyperparameter keys accepted by `sweep`.
pub const SWEEP_KEYS: [&str; 8] = ["window", "step", "basis", "c", "alpha", "beta", "depth", "xi"];

/// Keys that describe the network shape (stored in checkpoints).
pub const MODEL_KEYS: [&str; 16] = [
    "electrodes",
    "samples",
    "window",
    "step",
    "basis",
    "c",
    "alpha",
    "beta",
    "depth",
    "xi",
    "hidden",
    "embedding",
    "include_initial_block",
    "use_continuity",
    "use_interference",
    "temporal_mask",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Normal,
    LongTail,
}

impl FromStr for Preset {
    type Err = QuarkError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal" => Ok(Self::Normal),
            "long-tail" | "longtail" => Ok(Self::LongTail),
            other => Err(QuarkError::config(format!("unknown preset {other:?} (normal, long-tail)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub protocol: ProtocolConfig,
    pub seed: u64,
    /// Directory written by `generate` (recordings, embeddings, images).
    pub data: Option<PathBuf>,
    /// MindBigData-style TSV, used instead of `data`'s recordings.
    pub eeg: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub class_map: Option<PathBuf>,
    /// `(classes, per_class)` for a generated dataset.
    pub synthetic: Option<(usize, usize)>,
    pub noise: f64,
    pub distribution: DistributionSpec,
    pub split: f64,
    /// Record test P@k after every epoch.
    pub validate: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Normal,
            model: ModelConfig::normal(),
            train: TrainConfig::default(),
            protocol: ProtocolConfig::default(),
            seed: 0,
            data: None,
            eeg: None,
            embeddings: None,
            images: None,
            class_map: None,
            synthetic: None,
            noise: 0.1,
            distribution: DistributionSpec::AsIs,
            split: 0.85,
            validate: false,
            out: PathBuf::from("run"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| QuarkError::config(format!("bad value {value:?} for key {key}")))
}

fn path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty() && v != "none").then(|| PathBuf::from(v))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "none".into())
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| QuarkError::Parse {
            line: n + 1,
            message: format!("expected key = value, got {line:?}"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ModelConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "electrodes" => self.electrodes = parse(key, value)?,
            "samples" => self.samples = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "step" => self.step = parse(key, value)?,
            "basis" => self.basis_size = parse(key, value)?,
            "c" => self.select = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "depth" => self.depth = parse(key, value)?,
            "xi" => self.teleport = parse(key, value)?,
            "hidden" => self.hidden = parse(key, value)?,
            "embedding" => self.embedding = parse(key, value)?,
            "include_initial_block" => self.include_initial_block = parse(key, value)?,
            "use_continuity" => self.use_continuity = parse(key, value)?,
            "use_interference" => self.use_interference = parse(key, value)?,
            "temporal_mask" => self.temporal_mask = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("electrodes", self.electrodes.to_string()),
            ("samples", self.samples.to_string()),
            ("window", self.window.to_string()),
            ("step", self.step.to_string()),
            ("basis", self.basis_size.to_string()),
            ("c", self.select.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("depth", self.depth.to_string()),
            ("xi", self.teleport.to_string()),
            ("hidden", self.hidden.to_string()),
            ("embedding", self.embedding.to_string()),
            ("include_initial_block", self.include_initial_block.to_string()),
            ("use_continuity", self.use_continuity.to_string()),
            ("use_interference", self.use_interference.to_string()),
            ("temporal_mask", self.temporal_mask.to_string()),
        ]
    }
}

impl RunConfig {
    /// Set one key. Unknown keys are a configuration error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if self.model.set(key, value)? {
            return Ok(());
        }
        match key {
            "preset" => self.apply_preset(parse(key, value)?),
            "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "rho" => self.train.rho = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "positives" => self.train.positives = parse(key, value)?,
            "negatives" => self.train.negatives = parse(key, value)?,
            "continuity_loss" => self.train.continuity_loss = parse(key, value)?,
            "qm_loss" => self.train.qm_loss = parse(key, value)?,
            "k" => self.protocol.k = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "data" => self.data = path(value),
            "eeg" => self.eeg = path(value),
            "embeddings" => self.embeddings = path(value),
            "images" => self.images = path(value),
            "class_map" => self.class_map = path(value),
            "synthetic" => {
                self.synthetic = match value.trim() {
                    "" | "none" => None,
                    v => Some(crate::data::synthetic::parse_shape(v)?),
                }
            }
            "noise" => self.noise = parse(key, value)?,
            "distribution" => self.distribution = parse(key, value)?,
            "split" => self.split = parse(key, value)?,
            "validate" => self.validate = parse(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            _ => return Err(QuarkError::config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Replace the hyperparameter set, keeping data and shape settings.
    pub fn apply_preset(&mut self, preset: Preset) {
        let base = match preset {
            Preset::Normal => ModelConfig::normal(),
            Preset::LongTail => ModelConfig::long_tail(),
        };
        self.preset = preset;
        self.model = ModelConfig {
            electrodes: self.model.electrodes,
            samples: self.model.samples,
            hidden: self.model.hidden,
            embedding: self.model.embedding,
            ..base
        };
    }

    /// Defaults, then file pairs, then overrides. A `preset` in either
    /// source is applied before any other key.
    pub fn resolve(file: &[(String, String)], overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        let preset = overrides
            .iter()
            .rev()
            .chain(file.iter().rev())
            .find(|(k, _)| k == "preset")
            .map(|(_, v)| v.parse::<Preset>())
            .transpose()?;
        if let Some(p) = preset {
            cfg.apply_preset(p);
        }
        for (k, v) in file.iter().chain(overrides) {
            if k != "preset" {
                cfg.set(k, v)?;
            }
        }
        cfg.train.seed = cfg.seed;
        cfg.protocol.seed = cfg.seed;
        cfg.validate_all()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| QuarkError::io(path, e))?;
        Self::resolve(&parse_pairs(&text)?, overrides)
    }

    pub fn validate_all(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if !(0.0..=1.0).contains(&self.split) {
            return Err(QuarkError::config(format!("split {} outside [0, 1]", self.split)));
        }
        if self.protocol.k == 0 || self.protocol.k > self.protocol.positives + self.protocol.negatives {
            return Err(QuarkError::config(format!("k = {} outside 1..=100", self.protocol.k)));
        }
        Ok(())
    }

    /// Every key with its resolved value.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![(
            "preset",
            match self.preset {
                Preset::Normal => "normal".to_string(),
                Preset::LongTail => "long-tail".to_string(),
            },
        )];
        out.extend(self.model.pairs());
        let t = &self.train;
        out.extend([
            ("learning_rate", t.learning_rate.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("rho", t.rho.to_string()),
            ("epochs", t.epochs.to_string()),
            ("positives", t.positives.to_string()),
            ("negatives", t.negatives.to_string()),
            ("continuity_loss", t.continuity_loss.to_string()),
            ("qm_loss", t.qm_loss.to_string()),
            ("k", self.protocol.k.to_string()),
            ("seed", self.seed.to_string()),
            ("data", show_path(&self.data)),
            ("eeg", show_path(&self.eeg)),
            ("embeddings", show_path(&self.embeddings)),
            ("images", show_path(&self.images)),
            ("class_map", show_path(&self.class_map)),
            (
                "synthetic",
                self.synthetic.map(|(c, n)| format!("{c}x{n}")).unwrap_or_else(|| "none".into()),
            ),
            ("noise", self.noise.to_string()),
            (
                "distribution",
                match self.distribution {
                    DistributionSpec::AsIs => "as-is".to_string(),
                    DistributionSpec::LongTail => "long-tail".to_string(),
                    DistributionSpec::Normal { total } => format!("normal:{total}"),
                },
            ),
            ("split", self.split.to_string()),
            ("validate", self.validate.to_string()),
            ("out", self.out.display().to_string()),
        ]);
        out
    }

    pub fn to_text(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
