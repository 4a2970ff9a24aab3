use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Forecaster, ModelFamily, RecurrentConfig};
use crate::error::Error;
use crate::nn::{xavier_uniform, Linear};
use crate::tensor::{Graph, TensorId};
use crate::Result;

/// Vanilla recurrent baseline: `H_t = tanh(X_t W_xh + H_{t-1} W_hh + b_h)`
/// unrolled over the lag window with `H_0 = 0`, then a linear head mapping
/// the final hidden state to all horizon outputs at once.
pub struct Rnn {
    cfg: RecurrentConfig,
    w_xh: TensorId,
    w_hh: TensorId,
    b_h: TensorId,
    head: Linear,
}

impl Rnn {
    pub fn new(g: &mut Graph, rng: &mut impl Rng, cfg: RecurrentConfig) -> Result<Self> {
        cfg.validate()?;
        let h = cfg.hidden_size;
        Ok(Rnn {
            cfg,
            w_xh: xavier_uniform(g, rng, "rnn.w_xh", cfg.n_features, h)?,
            w_hh: xavier_uniform(g, rng, "rnn.w_hh", h, h)?,
            b_h: g.param("rnn.b_h", 1, h, vec![0.0; h])?,
            head: Linear::init(g, rng, "rnn.head", h, cfg.horizon)?,
        })
    }
}

impl Forecaster for Rnn {
    fn family(&self) -> ModelFamily {
        ModelFamily::Rnn
    }
    fn lag(&self) -> usize {
        self.cfg.time_lag
    }
    fn horizon(&self) -> usize {
        self.cfg.horizon
    }
    fn n_features(&self) -> usize {
        self.cfg.n_features
    }
    fn params(&self) -> Vec<TensorId> {
        let mut p = vec![self.w_xh, self.w_hh, self.b_h];
        p.extend(self.head.params());
        p
    }

    fn forward_window(
        &self,
        g: &mut Graph,
        input: &[f64],
        _target: Option<&[f64]>,
        _training: bool,
        _rng: &mut ChaCha8Rng,
    ) -> Result<TensorId> {
        let (lag, f) = (self.cfg.time_lag, self.cfg.n_features);
        if input.len() != lag * f {
            return Err(Error::Contract(format!(
                "window has {} values, model expects lag {lag} x {f} features",
                input.len()
            )));
        }
        let mut h = g.leaf(1, self.cfg.hidden_size, vec![0.0; self.cfg.hidden_size])?;
        for t in 0..lag {
            let x_t = g.leaf(1, f, input[t * f..(t + 1) * f].to_vec())?;
            let xw = g.matmul(x_t, self.w_xh)?;
            let hw = g.matmul(h, self.w_hh)?;
            let s = g.add(xw, hw)?;
            let s = g.add_bias(s, self.b_h)?;
            h = g.tanh(s)?;
        }
        let out = self.head.forward(g, h)?;
        g.transpose(out)
    }
}
