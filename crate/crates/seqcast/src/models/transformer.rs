use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Forecaster, ModelFamily};
use crate::error::Error;
use crate::nn::{
    positional_encoding, residual_block, Ffn, LayerNorm, Linear, MultiHeadAttention, NormPlacement,
};
use crate::tensor::{Graph, TensorId};
use crate::Result;

/// How the decoder is fed at inference for horizon > 1, where the shifted
/// ground truth of teacher forcing is unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderFeed {
    /// Decode step by step, feeding each prediction back as the next
    /// decoder input.
    #[default]
    SelfFeed,
    /// One pass with zeros in the unknown future positions.
    ZeroPad,
}

impl DecoderFeed {
    pub fn label(self) -> &'static str {
        match self {
            DecoderFeed::SelfFeed => "self_feed",
            DecoderFeed::ZeroPad => "zero_pad",
        }
    }
}

impl std::str::FromStr for DecoderFeed {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "self_feed" | "selffeed" | "self" => Ok(DecoderFeed::SelfFeed),
            "zero_pad" | "zeropad" | "zero" => Ok(DecoderFeed::ZeroPad),
            other => Err(Error::Config(format!(
                "unknown decoder feed {other:?}, expected self_feed or zero_pad"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformerConfig {
    pub d_model: usize,
    pub n_encoder_blocks: usize,
    pub n_decoder_blocks: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub d_prelayer: usize,
    pub d_postlayer: usize,
    /// Dropout on each sub-layer output inside the residual adds.
    pub dropout: f64,
    /// Dropout on attention weight matrices; off by default.
    pub attn_dropout: f64,
    pub norm_placement: NormPlacement,
    pub time_lag: usize,
    pub horizon: usize,
    pub n_features: usize,
    pub decoder_feed: DecoderFeed,
}

impl Default for TransformerConfig {
    fn default() -> Self {
        TransformerConfig {
            d_model: 64,
            n_encoder_blocks: 2,
            n_decoder_blocks: 2,
            n_heads: 1,
            d_ff: 100,
            d_prelayer: 50,
            d_postlayer: 50,
            dropout: 0.2,
            attn_dropout: 0.0,
            norm_placement: NormPlacement::PreLn,
            time_lag: 7,
            horizon: 1,
            n_features: 1,
            decoder_feed: DecoderFeed::SelfFeed,
        }
    }
}

impl TransformerConfig {
    pub fn validate(&self) -> Result<()> {
        for (label, v) in [
            ("d_model", self.d_model),
            ("n_encoder_blocks", self.n_encoder_blocks),
            ("n_decoder_blocks", self.n_decoder_blocks),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("d_prelayer", self.d_prelayer),
            ("d_postlayer", self.d_postlayer),
            ("time_lag", self.time_lag),
            ("horizon", self.horizon),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{label} must be positive")));
            }
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if !(1..=3).contains(&self.n_features) {
            return Err(Error::Config(format!(
                "n_features must be 1, 2 or 3, got {}",
                self.n_features
            )));
        }
        for (label, p) in [("dropout", self.dropout), ("attn_dropout", self.attn_dropout)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!(
                    "{label} must lie in [0, 1), got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Two-layer MLP with a ReLU hidden layer; the input Pre-Layer and output
/// Post-Layer networks.
struct Mlp {
    lin1: Linear,
    lin2: Linear,
}

impl Mlp {
    fn init(
        g: &mut Graph,
        rng: &mut impl Rng,
        name: &str,
        d_in: usize,
        d_hidden: usize,
        d_out: usize,
    ) -> Result<Self> {
        Ok(Mlp {
            lin1: Linear::init(g, rng, &format!("{name}.lin1"), d_in, d_hidden)?,
            lin2: Linear::init(g, rng, &format!("{name}.lin2"), d_hidden, d_out)?,
        })
    }

    fn forward(&self, g: &mut Graph, x: TensorId) -> Result<TensorId> {
        let h = self.lin1.forward(g, x)?;
        let h = g.relu(h)?;
        self.lin2.forward(g, h)
    }

    fn params(&self) -> Vec<TensorId> {
        let mut p = self.lin1.params().to_vec();
        p.extend(self.lin2.params());
        p
    }
}

struct EncoderBlock {
    attn: MultiHeadAttention,
    ln1: LayerNorm,
    ffn: Ffn,
    ln2: LayerNorm,
}

struct DecoderBlock {
    self_attn: MultiHeadAttention,
    ln1: LayerNorm,
    cross_attn: MultiHeadAttention,
    ln2: LayerNorm,
    ffn: Ffn,
    ln3: LayerNorm,
}

/// An attention sub-layer wrapped in the residual/normalization scheme of
/// [`residual_block`]. Spelled out here because the attention forward needs
/// the rng that the sub-layer closure of `residual_block` cannot also
/// borrow. `kv = None` is self-attention on `x`; `Some(enc)` takes keys and
/// values from the encoder output.
#[allow(clippy::too_many_arguments)]
fn attn_residual(
    g: &mut Graph,
    x: TensorId,
    ln: &LayerNorm,
    attn: &MultiHeadAttention,
    kv: Option<TensorId>,
    causal: bool,
    placement: NormPlacement,
    dropout_p: f64,
    attn_dropout: f64,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<TensorId> {
    let q_in = match placement {
        NormPlacement::PreLn => ln.forward(g, x)?,
        NormPlacement::PostLn => x,
    };
    let (k_in, v_in) = match kv {
        Some(enc) => (enc, enc),
        None => (q_in, q_in),
    };
    let mut y = attn.forward(g, q_in, k_in, v_in, causal, attn_dropout, training, rng)?;
    if training && dropout_p > 0.0 {
        y = g.dropout(y, dropout_p, rng)?;
    }
    match placement {
        NormPlacement::PreLn => g.add(x, y),
        NormPlacement::PostLn => {
            let sum = g.add(x, y)?;
            ln.forward(g, sum)
        }
    }
}

/// Encoder-decoder forecaster.
///
/// Encoder: Pre-Layer MLP (features -> d_prelayer -> d_model) + sinusoidal
/// positional encoding, then `n_encoder_blocks` x [self-attention; FFN]
/// residual blocks. Decoder: the same input mapping on the target-space
/// sequence, then `n_decoder_blocks` x [causal self-attention;
/// encoder-decoder attention; FFN], and a Post-Layer MLP (d_model ->
/// d_postlayer -> 1) giving one value per decoder position.
///
/// The decoder sequence starts at the last window value (positive-case
/// feature) with a one-position offset from the target: during training the
/// remaining positions carry the shifted ground truth (teacher forcing); at
/// inference they are self-fed predictions or zeros per [`DecoderFeed`].
pub struct Transformer {
    cfg: TransformerConfig,
    enc_pre: Mlp,
    enc_blocks: Vec<EncoderBlock>,
    enc_final_ln: Option<LayerNorm>,
    dec_pre: Mlp,
    dec_blocks: Vec<DecoderBlock>,
    dec_final_ln: Option<LayerNorm>,
    post: Mlp,
    enc_pe: Vec<f64>,
    dec_pe: Vec<f64>,
}

impl Transformer {
    pub fn new(g: &mut Graph, rng: &mut impl Rng, cfg: TransformerConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.d_model;
        let enc_pre = Mlp::init(g, rng, "enc.pre", cfg.n_features, cfg.d_prelayer, d)?;
        let enc_blocks = (0..cfg.n_encoder_blocks)
            .map(|i| {
                Ok(EncoderBlock {
                    attn: MultiHeadAttention::init(g, rng, &format!("enc.b{i}.attn"), d, cfg.n_heads)?,
                    ln1: LayerNorm::init(g, &format!("enc.b{i}.ln1"), d)?,
                    ffn: Ffn::init(g, rng, &format!("enc.b{i}.ffn"), d, cfg.d_ff)?,
                    ln2: LayerNorm::init(g, &format!("enc.b{i}.ln2"), d)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let enc_final_ln = match cfg.norm_placement {
            NormPlacement::PreLn => Some(LayerNorm::init(g, "enc.ln", d)?),
            NormPlacement::PostLn => None,
        };
        let dec_pre = Mlp::init(g, rng, "dec.pre", 1, cfg.d_prelayer, d)?;
        let dec_blocks = (0..cfg.n_decoder_blocks)
            .map(|i| {
                Ok(DecoderBlock {
                    self_attn: MultiHeadAttention::init(g, rng, &format!("dec.b{i}.self"), d, cfg.n_heads)?,
                    ln1: LayerNorm::init(g, &format!("dec.b{i}.ln1"), d)?,
                    cross_attn: MultiHeadAttention::init(g, rng, &format!("dec.b{i}.cross"), d, cfg.n_heads)?,
                    ln2: LayerNorm::init(g, &format!("dec.b{i}.ln2"), d)?,
                    ffn: Ffn::init(g, rng, &format!("dec.b{i}.ffn"), d, cfg.d_ff)?,
                    ln3: LayerNorm::init(g, &format!("dec.b{i}.ln3"), d)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dec_final_ln = match cfg.norm_placement {
            NormPlacement::PreLn => Some(LayerNorm::init(g, "dec.ln", d)?),
            NormPlacement::PostLn => None,
        };
        let post = Mlp::init(g, rng, "post", d, cfg.d_postlayer, 1)?;
        Ok(Transformer {
            enc_pe: positional_encoding(cfg.time_lag, d)?,
            dec_pe: positional_encoding(cfg.horizon, d)?,
            cfg,
            enc_pre,
            enc_blocks,
            enc_final_ln,
            dec_pre,
            dec_blocks,
            dec_final_ln,
            post,
        })
    }

    pub fn config(&self) -> &TransformerConfig {
        &self.cfg
    }

    fn encode(
        &self,
        g: &mut Graph,
        input: &[f64],
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<TensorId> {
        let cfg = &self.cfg;
        let x = g.leaf(cfg.time_lag, cfg.n_features, input.to_vec())?;
        let mut h = self.enc_pre.forward(g, x)?;
        let pe = g.leaf(cfg.time_lag, cfg.d_model, self.enc_pe.clone())?;
        h = g.add(h, pe)?;
        for b in &self.enc_blocks {
            h = attn_residual(
                g,
                h,
                &b.ln1,
                &b.attn,
                None,
                false,
                cfg.norm_placement,
                cfg.dropout,
                cfg.attn_dropout,
                training,
                rng,
            )?;
            h = residual_block(
                g,
                h,
                &b.ln2,
                cfg.norm_placement,
                cfg.dropout,
                training,
                rng,
                |g, x| b.ffn.forward(g, x),
            )?;
        }
        if let Some(ln) = &self.enc_final_ln {
            h = ln.forward(g, h)?;
        }
        Ok(h)
    }

    /// Decode a prefix of `dec_in.len() <= horizon` positions, returning one
    /// output value per position.
    fn decode(
        &self,
        g: &mut Graph,
        enc_out: TensorId,
        dec_in: &[f64],
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<TensorId> {
        let cfg = &self.cfg;
        let len = dec_in.len();
        let x = g.leaf(len, 1, dec_in.to_vec())?;
        let mut h = self.dec_pre.forward(g, x)?;
        let pe = g.leaf(len, cfg.d_model, self.dec_pe[..len * cfg.d_model].to_vec())?;
        h = g.add(h, pe)?;
        for b in &self.dec_blocks {
            h = attn_residual(
                g,
                h,
                &b.ln1,
                &b.self_attn,
                None,
                true,
                cfg.norm_placement,
                cfg.dropout,
                cfg.attn_dropout,
                training,
                rng,
            )?;
            h = attn_residual(
                g,
                h,
                &b.ln2,
                &b.cross_attn,
                Some(enc_out),
                false,
                cfg.norm_placement,
                cfg.dropout,
                cfg.attn_dropout,
                training,
                rng,
            )?;
            h = residual_block(
                g,
                h,
                &b.ln3,
                cfg.norm_placement,
                cfg.dropout,
                training,
                rng,
                |g, x| b.ffn.forward(g, x),
            )?;
        }
        if let Some(ln) = &self.dec_final_ln {
            h = ln.forward(g, h)?;
        }
        self.post.forward(g, h)
    }
}

impl Forecaster for Transformer {
    fn family(&self) -> ModelFamily {
        ModelFamily::Transformer
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
        let mut p = self.enc_pre.params();
        for b in &self.enc_blocks {
            p.extend(b.attn.params());
            p.extend(b.ln1.params());
            p.extend(b.ffn.params());
            p.extend(b.ln2.params());
        }
        if let Some(ln) = &self.enc_final_ln {
            p.extend(ln.params());
        }
        p.extend(self.dec_pre.params());
        for b in &self.dec_blocks {
            p.extend(b.self_attn.params());
            p.extend(b.ln1.params());
            p.extend(b.cross_attn.params());
            p.extend(b.ln2.params());
            p.extend(b.ffn.params());
            p.extend(b.ln3.params());
        }
        if let Some(ln) = &self.dec_final_ln {
            p.extend(ln.params());
        }
        p.extend(self.post.params());
        p
    }

    fn forward_window(
        &self,
        g: &mut Graph,
        input: &[f64],
        target: Option<&[f64]>,
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<TensorId> {
        let cfg = &self.cfg;
        if input.len() != cfg.time_lag * cfg.n_features {
            return Err(Error::Contract(format!(
                "window has {} values, model expects lag {} x {} features",
                input.len(),
                cfg.time_lag,
                cfg.n_features
            )));
        }
        let enc_out = self.encode(g, input, training, rng)?;
        // Decoder sequence starts at the last encoder input point
        // (positive-case feature), offset one position from the target.
        let last = input[(cfg.time_lag - 1) * cfg.n_features];
        match target {
            Some(t) => {
                if t.len() != cfg.horizon {
                    return Err(Error::Contract(format!(
                        "target has {} values, model horizon is {}",
                        t.len(),
                        cfg.horizon
                    )));
                }
                let mut dec_in = Vec::with_capacity(cfg.horizon);
                dec_in.push(last);
                dec_in.extend_from_slice(&t[..cfg.horizon - 1]);
                self.decode(g, enc_out, &dec_in, training, rng)
            }
            None => match cfg.decoder_feed {
                DecoderFeed::ZeroPad => {
                    let mut dec_in = vec![0.0; cfg.horizon];
                    dec_in[0] = last;
                    self.decode(g, enc_out, &dec_in, training, rng)
                }
                DecoderFeed::SelfFeed => {
                    let mut dec_in = vec![last];
                    while dec_in.len() < cfg.horizon {
                        let out = self.decode(g, enc_out, &dec_in, training, rng)?;
                        let prev = g.value(out)?[dec_in.len() - 1];
                        dec_in.push(prev);
                    }
                    self.decode(g, enc_out, &dec_in, training, rng)
                }
            },
        }
    }
}
