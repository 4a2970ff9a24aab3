//! Flat key=value experiment configuration.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines are ignored; later assignments win. The same keys are accepted by
//! `--set key=value` on the command line, which takes precedence over the
//! file. Unknown keys are config errors, so typos fail fast instead of
//! silently training the wrong model.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::data::{Format, SplitSpec};
use crate::error::Error;
use crate::metrics::StdMode;
use crate::models::{DecoderFeed, ModelFamily, RecurrentConfig, TransformerConfig};
use crate::nn::NormPlacement;
use crate::optim::{OptKind, OptimizerSpec, SchedulerSpec};
use crate::Result;

pub const KNOWN_KEYS: &[&str] = &[
    "data.path",
    "data.format",
    "data.test_days",
    "data.train_frac",
    "model.family",
    "model.d_model",
    "model.n_encoder_blocks",
    "model.n_decoder_blocks",
    "model.n_heads",
    "model.d_ff",
    "model.d_prelayer",
    "model.d_postlayer",
    "model.dropout",
    "model.attn_dropout",
    "model.norm_placement",
    "model.time_lag",
    "model.horizon",
    "model.n_features",
    "model.decoder_feed",
    "model.hidden_size",
    "optim.kind",
    "optim.lr",
    "optim.beta1",
    "optim.beta2",
    "optim.eps",
    "optim.weight_decay",
    "optim.momentum",
    "optim.rho",
    "sched.kind",
    "sched.warmup",
    "train.epochs",
    "train.batch_size",
    "train.n_trials",
    "train.base_seed",
    "train.best_of",
    "train.std_mode",
    "sweep.axis",
    "sweep.values",
    "sweep.placements",
    "out.dir",
    "out.plot",
    "predict.checkpoint",
];

fn ensure_known(key: &str) -> Result<()> {
    if KNOWN_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(Error::Config(format!("unknown config key {key:?}")))
    }
}

/// Raw, untyped key=value assignments in precedence order.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected key = value, got {line:?}",
                    path.display(),
                    i + 1
                ))
            })?;
            let key = key.trim();
            ensure_known(key)
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
            raw.entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(raw)
    }

    /// Apply one `key=value` override (the `--set` flag).
    pub fn set(&mut self, kv: &str) -> Result<()> {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got {kv:?}")))?;
        let key = key.trim();
        ensure_known(key)?;
        self.entries.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| {
                    Error::Config(format!("key {key}: {v:?} is not a non-negative integer"))
                })
            })
            .transpose()
    }

    fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| {
                    Error::Config(format!("key {key}: {v:?} is not a non-negative integer"))
                })
            })
            .transpose()
    }

    fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("key {key}: {v:?} is not a number")))
            })
            .transpose()
    }

    fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::Config(format!(
                    "key {key}: {v:?} is not a boolean (true/false)"
                ))),
            })
            .transpose()
    }

    /// Parse via the value type's `FromStr`, prefixing errors with the key.
    fn get_enum<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr<Err = Error>,
    {
        self.get(key)
            .map(|v| v.parse().map_err(|e| Error::Config(format!("key {key}: {e}"))))
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedKind {
    Noam,
    Constant,
}

impl std::str::FromStr for SchedKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "noam" | "warmup_inv_sqrt" | "warmup" => Ok(SchedKind::Noam),
            "constant" | "const" => Ok(SchedKind::Constant),
            other => Err(Error::Config(format!(
                "unknown scheduler {other:?}, expected noam or constant"
            ))),
        }
    }
}

/// One sweep dimension. Values are strings in the config; each axis owns its
/// grammar and is validated before any training starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    DModel,
    EncDecBlocks,
    Dims,
    TimeLag,
    Horizon,
    Optimizer,
    NFeatures,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::DModel => "d_model",
            SweepAxis::EncDecBlocks => "enc_dec_blocks",
            SweepAxis::Dims => "dims",
            SweepAxis::TimeLag => "time_lag",
            SweepAxis::Horizon => "horizon",
            SweepAxis::Optimizer => "optimizer",
            SweepAxis::NFeatures => "n_features",
        }
    }

    /// Rewrite `cfg` for one cell of this axis.
    pub fn apply(self, cfg: &mut ExperimentConfig, value: &str) -> Result<()> {
        let int = |what: &str| -> Result<usize> {
            value.parse().map_err(|_| {
                Error::Config(format!("axis {}: {value:?} is not a valid {what}", self.label()))
            })
        };
        match self {
            SweepAxis::DModel => {
                self.require_transformer(cfg)?;
                cfg.transformer.d_model = int("d_model")?;
            }
            SweepAxis::EncDecBlocks => {
                self.require_transformer(cfg)?;
                let (e, d) = value.split_once('-').ok_or_else(|| {
                    Error::Config(format!(
                        "axis enc_dec_blocks: {value:?} should look like 2-4 (encoder-decoder)"
                    ))
                })?;
                cfg.transformer.n_encoder_blocks = e.trim().parse().map_err(|_| {
                    Error::Config(format!("axis enc_dec_blocks: bad encoder count in {value:?}"))
                })?;
                cfg.transformer.n_decoder_blocks = d.trim().parse().map_err(|_| {
                    Error::Config(format!("axis enc_dec_blocks: bad decoder count in {value:?}"))
                })?;
            }
            SweepAxis::Dims => {
                self.require_transformer(cfg)?;
                let parts: Vec<&str> = value.split('-').collect();
                if parts.len() != 3 {
                    return Err(Error::Config(format!(
                        "axis dims: {value:?} should look like 100-50-50 \
                         (d_ff-d_prelayer-d_postlayer)"
                    )));
                }
                let mut nums = [0usize; 3];
                for (slot, part) in nums.iter_mut().zip(&parts) {
                    *slot = part.trim().parse().map_err(|_| {
                        Error::Config(format!("axis dims: bad dimension {part:?} in {value:?}"))
                    })?;
                }
                cfg.transformer.d_ff = nums[0];
                cfg.transformer.d_prelayer = nums[1];
                cfg.transformer.d_postlayer = nums[2];
            }
            SweepAxis::TimeLag => {
                let v = int("time lag")?;
                cfg.transformer.time_lag = v;
                cfg.recurrent.time_lag = v;
            }
            SweepAxis::Horizon => {
                let v = int("horizon")?;
                cfg.transformer.horizon = v;
                cfg.recurrent.horizon = v;
            }
            SweepAxis::Optimizer => {
                let kind: OptKind = value
                    .parse()
                    .map_err(|e| Error::Config(format!("axis optimizer: {e}")))?;
                // Each kind runs at its own defaults so the comparison is
                // between the published update rules, not one shared lr.
                cfg.optimizer = OptimizerSpec::new(kind);
                if cfg.sched_kind == SchedKind::Noam {
                    cfg.optimizer.base_lr = 1.0;
                }
            }
            SweepAxis::NFeatures => {
                let v = int("feature count")?;
                cfg.transformer.n_features = v;
                cfg.recurrent.n_features = v;
            }
        }
        Ok(())
    }

    fn require_transformer(self, cfg: &ExperimentConfig) -> Result<()> {
        if cfg.family != ModelFamily::Transformer {
            return Err(Error::Config(format!(
                "axis {} applies to the transformer family, model.family is {}",
                self.label(),
                cfg.family
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d_model" => Ok(SweepAxis::DModel),
            "enc_dec_blocks" => Ok(SweepAxis::EncDecBlocks),
            "dims" => Ok(SweepAxis::Dims),
            "time_lag" => Ok(SweepAxis::TimeLag),
            "horizon" => Ok(SweepAxis::Horizon),
            "optimizer" => Ok(SweepAxis::Optimizer),
            "n_features" => Ok(SweepAxis::NFeatures),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?}, expected one of d_model, enc_dec_blocks, dims, \
                 time_lag, horizon, optimizer, n_features"
            ))),
        }
    }
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data_path: Option<PathBuf>,
    pub data_format: Option<Format>,
    pub split: SplitSpec,
    pub family: ModelFamily,
    pub transformer: TransformerConfig,
    pub recurrent: RecurrentConfig,
    pub optimizer: OptimizerSpec,
    pub sched_kind: SchedKind,
    pub warmup_steps: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub n_trials: usize,
    pub base_seed: u64,
    pub best_of: usize,
    pub std_mode: StdMode,
    pub sweep_axis: Option<SweepAxis>,
    pub sweep_values: Vec<String>,
    pub placements: Vec<NormPlacement>,
    pub out_dir: PathBuf,
    pub plot: bool,
    pub checkpoint: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn resolve(raw: &RawConfig) -> Result<Self> {
        Self::resolve_for_family(raw, None)
    }

    /// Resolve with family-dependent defaults. `force_family` overrides the
    /// `model.family` key; the comparison protocol uses it to derive each
    /// contender from one shared config.
    pub fn resolve_for_family(
        raw: &RawConfig,
        force_family: Option<ModelFamily>,
    ) -> Result<Self> {
        let family = match force_family {
            Some(f) => f,
            None => raw
                .get_enum::<ModelFamily>("model.family")?
                .unwrap_or(ModelFamily::Transformer),
        };
        let is_transformer = family == ModelFamily::Transformer;

        let mut transformer = TransformerConfig::default();
        let mut recurrent = RecurrentConfig::default();
        if let Some(v) = raw.get_usize("model.d_model")? {
            transformer.d_model = v;
        }
        if let Some(v) = raw.get_usize("model.n_encoder_blocks")? {
            transformer.n_encoder_blocks = v;
        }
        if let Some(v) = raw.get_usize("model.n_decoder_blocks")? {
            transformer.n_decoder_blocks = v;
        }
        if let Some(v) = raw.get_usize("model.n_heads")? {
            transformer.n_heads = v;
        }
        if let Some(v) = raw.get_usize("model.d_ff")? {
            transformer.d_ff = v;
        }
        if let Some(v) = raw.get_usize("model.d_prelayer")? {
            transformer.d_prelayer = v;
        }
        if let Some(v) = raw.get_usize("model.d_postlayer")? {
            transformer.d_postlayer = v;
        }
        if let Some(v) = raw.get_f64("model.dropout")? {
            transformer.dropout = v;
        }
        if let Some(v) = raw.get_f64("model.attn_dropout")? {
            transformer.attn_dropout = v;
        }
        if let Some(v) = raw.get_enum::<NormPlacement>("model.norm_placement")? {
            transformer.norm_placement = v;
        }
        if let Some(v) = raw.get_enum::<DecoderFeed>("model.decoder_feed")? {
            transformer.decoder_feed = v;
        }
        if let Some(v) = raw.get_usize("model.time_lag")? {
            transformer.time_lag = v;
            recurrent.time_lag = v;
        }
        if let Some(v) = raw.get_usize("model.horizon")? {
            transformer.horizon = v;
            recurrent.horizon = v;
        }
        if let Some(v) = raw.get_usize("model.n_features")? {
            transformer.n_features = v;
            recurrent.n_features = v;
        }
        if let Some(v) = raw.get_usize("model.hidden_size")? {
            recurrent.hidden_size = v;
        }
        if is_transformer {
            transformer.validate()?;
        } else {
            recurrent.validate()?;
        }

        let sched_kind = match raw.get_enum::<SchedKind>("sched.kind")? {
            Some(k) => k,
            None if is_transformer => SchedKind::Noam,
            None => SchedKind::Constant,
        };
        let warmup_steps = raw.get_u64("sched.warmup")?.unwrap_or(3000);

        let kind = raw.get_enum::<OptKind>("optim.kind")?.unwrap_or(OptKind::Adam);
        let mut optimizer = OptimizerSpec::new(kind);
        match raw.get_f64("optim.lr")? {
            Some(v) => optimizer.base_lr = v,
            // The warmup schedule carries the magnitude, so its base factor
            // is 1; the recurrent baselines train at a flat 0.01.
            None if sched_kind == SchedKind::Noam => optimizer.base_lr = 1.0,
            None if !is_transformer => optimizer.base_lr = 0.01,
            None => {}
        }
        if let Some(v) = raw.get_f64("optim.beta1")? {
            optimizer.beta1 = v;
        }
        if let Some(v) = raw.get_f64("optim.beta2")? {
            optimizer.beta2 = v;
        }
        if let Some(v) = raw.get_f64("optim.eps")? {
            optimizer.eps = v;
        }
        if let Some(v) = raw.get_f64("optim.weight_decay")? {
            optimizer.weight_decay = v;
        }
        if let Some(v) = raw.get_f64("optim.momentum")? {
            optimizer.momentum = v;
        }
        if let Some(v) = raw.get_f64("optim.rho")? {
            optimizer.rho = v;
        }
        optimizer.validate()?;

        let epochs = match raw.get_usize("train.epochs")? {
            Some(v) => v,
            None if is_transformer => 300,
            None => 2000,
        };
        if epochs == 0 {
            return Err(Error::Config("train.epochs must be at least 1".into()));
        }
        let batch_size = raw.get_usize("train.batch_size")?.unwrap_or(32);
        if batch_size == 0 {
            return Err(Error::Config("train.batch_size must be at least 1".into()));
        }
        let n_trials = raw.get_usize("train.n_trials")?.unwrap_or(1);
        if n_trials == 0 {
            return Err(Error::Config("train.n_trials must be at least 1".into()));
        }
        let best_of = raw.get_usize("train.best_of")?.unwrap_or(10);
        if best_of == 0 {
            return Err(Error::Config("train.best_of must be at least 1".into()));
        }

        let split = SplitSpec {
            test_days: raw.get_usize("data.test_days")?.unwrap_or(60),
            train_frac: raw.get_f64("data.train_frac")?.unwrap_or(0.70),
        };

        let sweep_values = raw
            .get("sweep.values")
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default();
        let placements = match raw.get("sweep.placements") {
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<NormPlacement>()
                        .map_err(|e| Error::Config(format!("key sweep.placements: {e}")))
                })
                .collect::<Result<Vec<_>>>()?,
            None => vec![NormPlacement::PreLn, NormPlacement::PostLn],
        };
        if placements.is_empty() {
            return Err(Error::Config("sweep.placements must not be empty".into()));
        }

        let cfg = ExperimentConfig {
            data_path: raw.get("data.path").map(PathBuf::from),
            data_format: raw.get_enum::<Format>("data.format")?,
            split,
            family,
            transformer,
            recurrent,
            optimizer,
            sched_kind,
            warmup_steps,
            epochs,
            batch_size,
            n_trials,
            base_seed: raw.get_u64("train.base_seed")?.unwrap_or(0),
            best_of,
            std_mode: raw.get_enum::<StdMode>("train.std_mode")?.unwrap_or_default(),
            sweep_axis: raw.get_enum::<SweepAxis>("sweep.axis")?,
            sweep_values,
            placements,
            out_dir: raw.get("out.dir").map(PathBuf::from).unwrap_or_else(|| "out".into()),
            plot: raw.get_bool("out.plot")?.unwrap_or(true),
            checkpoint: raw.get("predict.checkpoint").map(PathBuf::from),
        };
        cfg.scheduler().validate()?;
        Ok(cfg)
    }

    /// Lag, horizon, and feature count of the active family.
    pub fn active_dims(&self) -> (usize, usize, usize) {
        match self.family {
            ModelFamily::Transformer => (
                self.transformer.time_lag,
                self.transformer.horizon,
                self.transformer.n_features,
            ),
            _ => (
                self.recurrent.time_lag,
                self.recurrent.horizon,
                self.recurrent.n_features,
            ),
        }
    }

    /// Scheduler spec with the width factor taken from the active model, so
    /// sweeping d_model keeps the schedule consistent.
    pub fn scheduler(&self) -> SchedulerSpec {
        match self.sched_kind {
            SchedKind::Noam => SchedulerSpec::WarmupInvSqrt {
                d_model: match self.family {
                    ModelFamily::Transformer => self.transformer.d_model,
                    _ => self.recurrent.hidden_size,
                },
                warmup_steps: self.warmup_steps,
            },
            SchedKind::Constant => SchedulerSpec::Constant,
        }
    }
}
