use rand::Rng;

use super::xavier_uniform;
use crate::error::Error;
use crate::tensor::{Graph, TensorId};
use crate::Result;

/// Additive mask value for disallowed attention positions. Large enough that
/// after max-subtraction the exponential underflows to exactly 0.0.
const MASK_NEG: f64 = -1e9;

struct Head {
    w_q: TensorId,
    w_k: TensorId,
    w_v: TensorId,
}

/// Multi-head scaled dot-product attention.
///
/// Each head projects queries, keys and values to `d_head = d_model / heads`
/// with its own matrices, scores `Q K^T / sqrt(d_head)` (plus an optional
/// causal mask), softmaxes row-wise and mixes `V`. Head outputs are
/// concatenated and projected by `w_o`.
///
/// The three wiring variants are all this one operation:
/// self-attention (q = k = v = encoder state, no mask), causal
/// self-attention (decoder state with `causal = true`), and encoder-decoder
/// attention (q = decoder state, k = v = encoder output).
pub struct MultiHeadAttention {
    heads: Vec<Head>,
    w_o: TensorId,
    d_head: usize,
}

impl MultiHeadAttention {
    pub fn init(
        g: &mut Graph,
        rng: &mut impl Rng,
        name: &str,
        d_model: usize,
        n_heads: usize,
    ) -> Result<Self> {
        if n_heads == 0 || d_model % n_heads != 0 {
            return Err(Error::Config(format!(
                "d_model {d_model} is not divisible by {n_heads} heads"
            )));
        }
        let d_head = d_model / n_heads;
        let heads = (0..n_heads)
            .map(|h| {
                Ok(Head {
                    w_q: xavier_uniform(g, rng, &format!("{name}.h{h}.wq"), d_model, d_head)?,
                    w_k: xavier_uniform(g, rng, &format!("{name}.h{h}.wk"), d_model, d_head)?,
                    w_v: xavier_uniform(g, rng, &format!("{name}.h{h}.wv"), d_model, d_head)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let w_o = xavier_uniform(g, rng, &format!("{name}.wo"), d_model, d_model)?;
        Ok(MultiHeadAttention { heads, w_o, d_head })
    }

    pub fn forward(
        &self,
        g: &mut Graph,
        q_in: TensorId,
        k_in: TensorId,
        v_in: TensorId,
        causal: bool,
        attn_dropout: f64,
        training: bool,
        rng: &mut impl Rng,
    ) -> Result<TensorId> {
        let (out, _) = self.forward_with_weights(g, q_in, k_in, v_in, causal, attn_dropout, training, rng)?;
        Ok(out)
    }

    /// Like [`forward`](Self::forward) but also returns each head's
    /// post-softmax weight matrix, for inspection and invariant tests.
    #[allow(clippy::too_many_arguments)]
    pub fn forward_with_weights(
        &self,
        g: &mut Graph,
        q_in: TensorId,
        k_in: TensorId,
        v_in: TensorId,
        causal: bool,
        attn_dropout: f64,
        training: bool,
        rng: &mut impl Rng,
    ) -> Result<(TensorId, Vec<TensorId>)> {
        let (n_q, _) = g.shape(q_in)?;
        let (n_k, _) = g.shape(k_in)?;
        if causal && n_q != n_k {
            return Err(Error::Contract(format!(
                "causal attention needs a square weight matrix, got {n_q} queries over {n_k} keys"
            )));
        }
        let mask = if causal {
            let mut m = vec![0.0; n_q * n_k];
            for i in 0..n_q {
                for j in (i + 1)..n_k {
                    m[i * n_k + j] = MASK_NEG;
                }
            }
            Some(g.leaf(n_q, n_k, m)?)
        } else {
            None
        };

        let scale = 1.0 / (self.d_head as f64).sqrt();
        let mut outputs = Vec::with_capacity(self.heads.len());
        let mut weight_ids = Vec::with_capacity(self.heads.len());
        for head in &self.heads {
            let q = g.matmul(q_in, head.w_q)?;
            let k = g.matmul(k_in, head.w_k)?;
            let v = g.matmul(v_in, head.w_v)?;
            let kt = g.transpose(k)?;
            let scores = g.matmul(q, kt)?;
            let scores = g.scale(scores, scale)?;
            let scores = match mask {
                Some(m) => g.add(scores, m)?,
                None => scores,
            };
            let mut weights = g.softmax(scores, 1)?;
            if training && attn_dropout > 0.0 {
                weights = g.dropout(weights, attn_dropout, rng)?;
            }
            weight_ids.push(weights);
            outputs.push(g.matmul(weights, v)?);
        }
        let concat = g.concat_cols(&outputs)?;
        let out = g.matmul(concat, self.w_o)?;
        Ok((out, weight_ids))
    }

    pub fn params(&self) -> Vec<TensorId> {
        let mut p: Vec<TensorId> = self
            .heads
            .iter()
            .flat_map(|h| [h.w_q, h.w_k, h.w_v])
            .collect();
        p.push(self.w_o);
        p
    }
}
