use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LayerNorm;
use crate::error::Error;
use crate::tensor::{Graph, TensorId};
use crate::Result;

/// Where layer normalization sits relative to the residual connection.
///
/// PostLn is the original arrangement: normalize after the residual add.
/// PreLn moves the normalization onto the sub-layer input inside the
/// residual branch, which tames output-adjacent gradients at initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormPlacement {
    PreLn,
    PostLn,
}

impl FromStr for NormPlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pre" | "preln" | "pre_ln" => Ok(NormPlacement::PreLn),
            "post" | "postln" | "post_ln" => Ok(NormPlacement::PostLn),
            other => Err(Error::Config(format!(
                "unknown norm placement {other:?}, expected pre or post"
            ))),
        }
    }
}

impl NormPlacement {
    pub fn label(self) -> &'static str {
        match self {
            NormPlacement::PreLn => "pre",
            NormPlacement::PostLn => "post",
        }
    }
}

/// One residual sub-layer with the configured normalization placement:
/// PostLn computes `LN(x + dropout(f(x)))`, PreLn computes
/// `x + dropout(f(LN(x)))`. Dropout applies only in training mode.
#[allow(clippy::too_many_arguments)]
pub fn residual_block(
    g: &mut Graph,
    x: TensorId,
    ln: &LayerNorm,
    placement: NormPlacement,
    dropout_p: f64,
    training: bool,
    rng: &mut impl Rng,
    sublayer: impl FnOnce(&mut Graph, TensorId) -> Result<TensorId>,
) -> Result<TensorId> {
    let apply_dropout = training && dropout_p > 0.0;
    match placement {
        NormPlacement::PostLn => {
            let mut y = sublayer(g, x)?;
            if apply_dropout {
                y = g.dropout(y, dropout_p, rng)?;
            }
            let sum = g.add(x, y)?;
            ln.forward(g, sum)
        }
        NormPlacement::PreLn => {
            let normed = ln.forward(g, x)?;
            let mut y = sublayer(g, normed)?;
            if apply_dropout {
                y = g.dropout(y, dropout_p, rng)?;
            }
            g.add(x, y)
        }
    }
}
