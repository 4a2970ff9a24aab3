//! The three forecaster families, Transformer encoder-decoder, LSTM, and
//! RNN, behind one contract.
//!
//! A model owns the [`TensorId`]s of its parameters on one [`Graph`]; build
//! the model, call [`Graph::mark_persistent`], then alternate
//! [`Forecaster::forward_window`] / backward / optimizer step /
//! [`Graph::reset`]. All models consume a normalized `lag x n_features`
//! window (flat, row-major) and produce a `horizon x 1` prediction node in
//! normalized units.

mod checkpoint;
mod lstm;
mod rnn;
mod transformer;

pub use checkpoint::{
    load_checkpoint, rebuild, restore_params, save_checkpoint, CheckpointMeta, ParamEntry,
    CHECKPOINT_VERSION,
};
pub use lstm::Lstm;
pub use rnn::Rnn;
pub use transformer::{DecoderFeed, Transformer, TransformerConfig};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::NormalizationParams;
use crate::error::Error;
use crate::tensor::{Graph, TensorId};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Transformer,
    Lstm,
    Rnn,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 3] = [ModelFamily::Transformer, ModelFamily::Lstm, ModelFamily::Rnn];

    pub fn label(self) -> &'static str {
        match self {
            ModelFamily::Transformer => "transformer",
            ModelFamily::Lstm => "lstm",
            ModelFamily::Rnn => "rnn",
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "transformer" => Ok(ModelFamily::Transformer),
            "lstm" => Ok(ModelFamily::Lstm),
            "rnn" => Ok(ModelFamily::Rnn),
            other => Err(Error::Config(format!(
                "unknown model family {other:?}, expected transformer, lstm or rnn"
            ))),
        }
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Size parameters shared by the two recurrent baselines: one recurrent
/// layer of `hidden_size` units plus a linear output head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrentConfig {
    pub hidden_size: usize,
    pub time_lag: usize,
    pub horizon: usize,
    pub n_features: usize,
}

impl Default for RecurrentConfig {
    fn default() -> Self {
        RecurrentConfig {
            hidden_size: 16,
            time_lag: 7,
            horizon: 1,
            n_features: 1,
        }
    }
}

impl RecurrentConfig {
    pub fn validate(&self) -> Result<()> {
        for (label, v) in [
            ("hidden_size", self.hidden_size),
            ("time_lag", self.time_lag),
            ("horizon", self.horizon),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{label} must be positive")));
            }
        }
        if !(1..=3).contains(&self.n_features) {
            return Err(Error::Config(format!(
                "n_features must be 1, 2 or 3, got {}",
                self.n_features
            )));
        }
        Ok(())
    }
}

/// Common forecaster contract. Direct multi-output: one trained model per
/// horizon; the output node always has shape `(horizon, 1)`.
pub trait Forecaster {
    fn family(&self) -> ModelFamily;
    fn lag(&self) -> usize;
    fn horizon(&self) -> usize;
    fn n_features(&self) -> usize;
    /// Parameter ids in a stable order (the checkpoint order).
    fn params(&self) -> Vec<TensorId>;

    /// Build the forward pass for one normalized window.
    ///
    /// `target` carries the normalized ground-truth horizon values and
    /// enables teacher forcing where the architecture uses a decoder; the
    /// recurrent baselines ignore it. `None` selects inference feeding.
    /// With `training` false the pass is deterministic: dropout is skipped
    /// and `rng` is never drawn from.
    fn forward_window(
        &self,
        g: &mut Graph,
        input: &[f64],
        target: Option<&[f64]>,
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<TensorId>;
}

/// Inference for one window: eval-mode forward, then denormalization of the
/// horizon outputs through the stored train-set min/max.
pub fn predict_multistep(
    model: &dyn Forecaster,
    g: &mut Graph,
    rng: &mut ChaCha8Rng,
    window: &[f64],
    horizon: usize,
    norm: &NormalizationParams,
) -> Result<Vec<f64>> {
    if horizon != model.horizon() {
        return Err(Error::Contract(format!(
            "model was trained for horizon {}, asked to predict {horizon}",
            model.horizon()
        )));
    }
    let out = model.forward_window(g, window, None, false, rng)?;
    let values = g.value(out)?.to_vec();
    Ok(values.iter().map(|&v| norm.denormalize(0, v)).collect())
}
