use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Forecaster, ModelFamily, RecurrentConfig};
use crate::error::Error;
use crate::nn::{xavier_uniform, Linear};
use crate::tensor::{Graph, TensorId};
use crate::Result;

/// LSTM baseline. Per step, with `H_0 = C_0 = 0`:
///
/// ```text
/// I_t = sigmoid(X_t W_xi + H_{t-1} W_hi + b_i)
/// O_t = sigmoid(X_t W_xo + H_{t-1} W_ho + b_o)
/// F_t = sigmoid(X_t W_xf + H_{t-1} W_hf + b_f)
/// C~_t = tanh(X_t W_xc + H_{t-1} W_hc + b_c)
/// C_t = F_t (*) C_{t-1} + I_t (*) C~_t
/// H_t = O_t (*) tanh(C_t)
/// ```
///
/// then a linear head from the final hidden state to all horizon outputs.
pub struct Lstm {
    cfg: RecurrentConfig,
    w_xi: TensorId,
    w_hi: TensorId,
    b_i: TensorId,
    w_xo: TensorId,
    w_ho: TensorId,
    b_o: TensorId,
    w_xf: TensorId,
    w_hf: TensorId,
    b_f: TensorId,
    w_xc: TensorId,
    w_hc: TensorId,
    b_c: TensorId,
    head: Linear,
}

fn gate_params(
    g: &mut Graph,
    rng: &mut impl Rng,
    n: &str,
    f: usize,
    h: usize,
) -> Result<(TensorId, TensorId, TensorId)> {
    Ok((
        xavier_uniform(g, rng, &format!("lstm.w_x{n}"), f, h)?,
        xavier_uniform(g, rng, &format!("lstm.w_h{n}"), h, h)?,
        g.param(format!("lstm.b_{n}"), 1, h, vec![0.0; h])?,
    ))
}

impl Lstm {
    pub fn new(g: &mut Graph, rng: &mut impl Rng, cfg: RecurrentConfig) -> Result<Self> {
        cfg.validate()?;
        let (f, h) = (cfg.n_features, cfg.hidden_size);
        let (w_xi, w_hi, b_i) = gate_params(g, rng, "i", f, h)?;
        let (w_xo, w_ho, b_o) = gate_params(g, rng, "o", f, h)?;
        let (w_xf, w_hf, b_f) = gate_params(g, rng, "f", f, h)?;
        let (w_xc, w_hc, b_c) = gate_params(g, rng, "c", f, h)?;
        Ok(Lstm {
            cfg,
            w_xi,
            w_hi,
            b_i,
            w_xo,
            w_ho,
            b_o,
            w_xf,
            w_hf,
            b_f,
            w_xc,
            w_hc,
            b_c,
            head: Linear::init(g, rng, "lstm.head", h, cfg.horizon)?,
        })
    }
}

fn preact(
    g: &mut Graph,
    x: TensorId,
    h: TensorId,
    w_x: TensorId,
    w_h: TensorId,
    b: TensorId,
) -> Result<TensorId> {
    let xw = g.matmul(x, w_x)?;
    let hw = g.matmul(h, w_h)?;
    let s = g.add(xw, hw)?;
    g.add_bias(s, b)
}

impl Forecaster for Lstm {
    fn family(&self) -> ModelFamily {
        ModelFamily::Lstm
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
        let mut p = vec![
            self.w_xi, self.w_hi, self.b_i, self.w_xo, self.w_ho, self.b_o, self.w_xf, self.w_hf,
            self.b_f, self.w_xc, self.w_hc, self.b_c,
        ];
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
        let width = self.cfg.hidden_size;
        let mut h = g.leaf(1, width, vec![0.0; width])?;
        let mut c = g.leaf(1, width, vec![0.0; width])?;
        for t in 0..lag {
            let x_t = g.leaf(1, f, input[t * f..(t + 1) * f].to_vec())?;
            let i_pre = preact(g, x_t, h, self.w_xi, self.w_hi, self.b_i)?;
            let i = g.sigmoid(i_pre)?;
            let o_pre = preact(g, x_t, h, self.w_xo, self.w_ho, self.b_o)?;
            let o = g.sigmoid(o_pre)?;
            let f_pre = preact(g, x_t, h, self.w_xf, self.w_hf, self.b_f)?;
            let forget = g.sigmoid(f_pre)?;
            let c_pre = preact(g, x_t, h, self.w_xc, self.w_hc, self.b_c)?;
            let c_tilde = g.tanh(c_pre)?;
            let keep = g.mul(forget, c)?;
            let write = g.mul(i, c_tilde)?;
            c = g.add(keep, write)?;
            let c_act = g.tanh(c)?;
            h = g.mul(o, c_act)?;
        }
        let out = self.head.forward(g, h)?;
        g.transpose(out)
    }
}
