use rand::Rng;

use super::xavier_uniform;
use crate::tensor::{Graph, TensorId};
use crate::Result;

/// Fully connected layer: `x (n x d_in) -> x W + b (n x d_out)`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: TensorId,
    pub b: TensorId,
}

impl Linear {
    pub fn init(
        g: &mut Graph,
        rng: &mut impl Rng,
        name: &str,
        d_in: usize,
        d_out: usize,
    ) -> Result<Self> {
        let w = xavier_uniform(g, rng, &format!("{name}.w"), d_in, d_out)?;
        let b = g.param(format!("{name}.b"), 1, d_out, vec![0.0; d_out])?;
        Ok(Linear { w, b })
    }

    pub fn forward(&self, g: &mut Graph, x: TensorId) -> Result<TensorId> {
        let xw = g.matmul(x, self.w)?;
        g.add_bias(xw, self.b)
    }

    pub fn params(&self) -> [TensorId; 2] {
        [self.w, self.b]
    }
}
