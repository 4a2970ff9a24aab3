//! Transformer building blocks on top of the tensor graph.
//!
//! Every layer struct owns the [`TensorId`]s of its parameters; construction
//! registers them in the graph, so build all layers before
//! [`Graph::mark_persistent`] and they survive per-window tape resets.

mod attention;
mod encoding;
mod ffn;
mod linear;
mod norm;
mod residual;

pub use attention::MultiHeadAttention;
pub use encoding::positional_encoding;
pub use ffn::Ffn;
pub use linear::Linear;
pub use norm::{LayerNorm, DEFAULT_EPSILON};
pub use residual::{residual_block, NormPlacement};

use rand::Rng;

use crate::tensor::{Graph, TensorId};

/// Xavier/Glorot uniform initialization: U(-limit, limit) with
/// limit = sqrt(6 / (fan_in + fan_out)).
pub fn xavier_uniform(
    g: &mut Graph,
    rng: &mut impl Rng,
    name: &str,
    fan_in: usize,
    fan_out: usize,
) -> crate::Result<TensorId> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data: Vec<f64> = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..limit))
        .collect();
    g.param(name, fan_in, fan_out, data)
}
