//! End-to-end runs: dataset → split → train → evaluate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::data::catalog::load_images;
use crate::data::class_map::{apply_class_map, load_class_map};
use crate::data::mindbigdata::parse_eeg_source;
use crate::data::{generate_synthetic, load_embeddings, shape_distribution, split, Dataset, DatasetSplit, SyntheticConfig, ViewedItems};
use crate::error::{QuarkError, Result, StageExt};
use crate::evaluation::style::{default_thresholds, style_report, StyleInput, StyleReport};
use crate::evaluation::{evaluate, MetricReport, ProtocolConfig, Query};
use crate::model::{prepare, represent, ModelConfig, ModelParams};
use crate::preprocess::EegRecording;
use crate::training::{train, Example, TrainOutcome, Validator};

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn synthetic_config(cfg: &RunConfig, classes: usize, per_class: usize) -> SyntheticConfig {
    SyntheticConfig {
        classes,
        per_class,
        electrodes: cfg.model.electrodes,
        samples: cfg.model.samples,
        embedding: cfg.model.embedding,
        noise: cfg.noise,
        seed: cfg.seed,
        ..SyntheticConfig::default()
    }
}

/// Load or generate the dataset described by `cfg`, then apply the class
/// map and distribution shaping.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let mut data = if let Some((c, n)) = cfg.synthetic {
        generate_synthetic(&synthetic_config(cfg, c, n))?
    } else if let Some(eeg) = &cfg.eeg {
        let parsed = parse_eeg_source(eeg)?;
        let emb = cfg
            .embeddings
            .as_ref()
            .ok_or_else(|| QuarkError::config("an EEG source needs an `embeddings` file"))?;
        let mut catalog = load_embeddings(emb)?;
        if let Some(dir) = &cfg.images {
            load_images(&mut catalog, dir)?;
        }
        Dataset {
            recordings: parsed.recordings,
            catalog,
            viewed: ViewedItems::new(),
        }
    } else if let Some(dir) = &cfg.data {
        Dataset::load(dir)?
    } else {
        return Err(QuarkError::config("no dataset: set `synthetic`, `data`, or `eeg` + `embeddings`"));
    };
    if let Some(map) = &cfg.class_map {
        let map = load_class_map(map)?;
        apply_class_map(&mut data.recordings, &map);
    }
    data.recordings = shape_distribution(data.recordings, cfg.distribution, &mut rng(cfg.seed, 12))?;
    Ok(data)
}

/// Preprocess every recording for `model`.
pub fn prepare_examples(recordings: &[EegRecording], model: &ModelConfig) -> Result<Vec<Example>> {
    recordings
        .par_iter()
        .map(|r| {
            Ok(Example {
                input: prepare(r, model)?,
                label: r.label,
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage("preprocess")
}

/// Representations of the selected examples as protocol queries.
pub fn queries(
    examples: &[Example],
    recordings: &[EegRecording],
    indices: &[usize],
    params: &ModelParams,
    model: &ModelConfig,
) -> Result<Vec<Query>> {
    indices
        .par_iter()
        .map(|&i| {
            Ok(Query {
                recording_id: recordings[i].recording_id.clone(),
                label: examples[i].label,
                representation: represent(&examples[i].input, params, model)?,
            })
        })
        .collect()
}

/// A dataset with its split and preprocessed examples.
pub struct Experiment {
    pub config: RunConfig,
    pub data: Dataset,
    pub split: DatasetSplit,
    pub examples: Vec<Example>,
}

impl Experiment {
    pub fn new(config: RunConfig, data: Dataset) -> Result<Self> {
        config.validate_all()?;
        if data.catalog.embedding_dim() != config.model.embedding {
            return Err(QuarkError::config(format!(
                "catalog embedding width {} differs from model embedding {}",
                data.catalog.embedding_dim(),
                config.model.embedding
            )));
        }
        let split = split(&data.recordings, config.split, &mut rng(config.seed, 11))?;
        let examples = prepare_examples(&data.recordings, &config.model)?;
        Ok(Self {
            config,
            data,
            split,
            examples,
        })
    }

    pub fn from_config(config: RunConfig) -> Result<Self> {
        let data = load_dataset(&config).stage("data")?;
        Self::new(config, data)
    }

    pub fn init_params(&self) -> Result<ModelParams> {
        ModelParams::init(&self.config.model, self.config.seed)
    }

    pub fn train_examples(&self) -> Vec<Example> {
        self.split.train.iter().map(|&i| self.examples[i].clone()).collect()
    }

    pub fn test_queries(&self, params: &ModelParams) -> Result<Vec<Query>> {
        queries(&self.examples, &self.data.recordings, &self.split.test, params, &self.config.model)
    }

    pub fn evaluate(&self, params: &ModelParams) -> Result<MetricReport> {
        let protocol = ProtocolConfig {
            seed: self.config.seed,
            ..self.config.protocol
        };
        evaluate(&self.test_queries(params)?, &self.data.catalog, &protocol).stage("evaluation")
    }

    pub fn train(&self, init: ModelParams) -> Result<TrainOutcome> {
        let examples = self.train_examples();
        let validator = |p: &ModelParams| self.evaluate(p).map(|r| r.mean.precision);
        let validator: Option<&Validator<'_>> = if self.config.validate { Some(&validator) } else { None };
        train(&examples, &self.data.catalog, &self.config.model, &self.config.train, init, validator).stage("training")
    }

    /// Style scores for the report's recommendations, for recordings with
    /// a known viewed item.
    pub fn style(&self, report: &MetricReport) -> Result<StyleReport> {
        let inputs: Vec<StyleInput> = report
            .instances
            .iter()
            .filter_map(|r| {
                self.data.viewed.get(&r.recording_id).map(|&viewed| StyleInput {
                    viewed,
                    recommended: r.recommended.clone(),
                    precision: r.metrics.precision,
                })
            })
            .collect();
        style_report(&inputs, &self.data.catalog, default_thresholds())
    }
}

/// Result of training then evaluating one configuration.
pub struct RunResult {
    pub outcome: TrainOutcome,
    pub report: MetricReport,
}

pub fn train_and_evaluate(exp: &Experiment) -> Result<RunResult> {
    let outcome = exp.train(exp.init_params()?)?;
    let report = exp.evaluate(&outcome.params)?;
    Ok(RunResult { outcome, report })
}

/// Single-switch model variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ablation {
    Full,
    NoInterference,
    NoContinuity,
    NoTemporalMask,
    NoContinuityLoss,
    NoQmLoss,
}

impl Ablation {
    pub const ALL: [Ablation; 6] = [
        Ablation::Full,
        Ablation::NoInterference,
        Ablation::NoContinuity,
        Ablation::NoTemporalMask,
        Ablation::NoContinuityLoss,
        Ablation::NoQmLoss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoInterference => "no-interference",
            Ablation::NoContinuity => "no-continuity",
            Ablation::NoTemporalMask => "no-temporal-mask",
            Ablation::NoContinuityLoss => "no-continuity-loss",
            Ablation::NoQmLoss => "no-qm-loss",
        }
    }

    pub fn apply(self, cfg: &mut RunConfig) {
        match self {
            Ablation::Full => {}
            Ablation::NoInterference => cfg.model.use_interference = false,
            Ablation::NoContinuity => cfg.model.use_continuity = false,
            Ablation::NoTemporalMask => cfg.model.temporal_mask = false,
            Ablation::NoContinuityLoss => cfg.train.continuity_loss = false,
            Ablation::NoQmLoss => cfg.train.qm_loss = false,
        }
    }
}

/// Train and evaluate each variant on the same data and split. Returns the
/// per-variant reports in input order.
pub fn run_ablations(base: &RunConfig, data: &Dataset, variants: &[Ablation]) -> Result<Vec<(Ablation, MetricReport)>> {
    variants
        .iter()
        .map(|&v| {
            let mut cfg = base.clone();
            v.apply(&mut cfg);
            let exp = Experiment::new(cfg, data.clone())?;
            let result = train_and_evaluate(&exp)?;
            Ok((v, result.report))
        })
        .collect()
}

/// Tab-separated `variant P R F1` table with a header.
pub fn ablation_table(rows: &[(Ablation, MetricReport)]) -> String {
    let k = rows.first().map_or(10, |(_, r)| r.k);
    let mut out = format!("variant\tP@{k}\tR@{k}\tF1@{k}\n");
    for (v, r) in rows {
        out.push_str(&format!("{}\t{:.4}\t{:.4}\t{:.4}\n", v.name(), r.mean.precision, r.mean.recall, r.mean.f1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.model = ModelConfig {
            electrodes: 2,
            samples: 40,
            window: 8,
            step: 8,
            basis_size: 6,
            hidden: 8,
            embedding: 6,
            depth: 2,
            ..ModelConfig::normal()
        };
        cfg.synthetic = Some((3, 8));
        cfg.train.epochs = 2;
        cfg
    }

    #[test]
    fn tiny_run_end_to_end() {
        let exp = Experiment::from_config(tiny()).unwrap();
        assert_eq!(exp.examples.len(), 24);
        let result = train_and_evaluate(&exp).unwrap();
        assert_eq!(result.outcome.log.len(), 2);
        assert_eq!(result.report.instances.len(), exp.split.test.len());
        let style = exp.style(&result.report).unwrap();
        assert_eq!(style.scores.len() + style.missing, 10 * exp.split.test.len());
    }

    #[test]
    fn each_ablation_flips_one_switch() {
        let base = tiny();
        for v in Ablation::ALL {
            let mut cfg = base.clone();
            v.apply(&mut cfg);
            let changed = (cfg.model != base.model) as usize + (cfg.train != base.train) as usize;
            assert_eq!(changed, usize::from(v != Ablation::Full), "{}", v.name());
        }
    }

    #[test]
    fn missing_dataset_is_config_error() {
        let mut cfg = tiny();
        cfg.synthetic = None;
        let err = Experiment::from_config(cfg).err().unwrap();
        assert!(err.is_user_error());
    }
}
