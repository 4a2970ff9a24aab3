use rand::Rng;

use super::Linear;
use crate::tensor::{Graph, TensorId};
use crate::Result;

/// Position-wise feed-forward network: `linear(relu(linear(x)))`, applied
/// independently to every sequence position.
#[derive(Debug, Clone, Copy)]
pub struct Ffn {
    pub lin1: Linear,
    pub lin2: Linear,
}

impl Ffn {
    pub fn init(
        g: &mut Graph,
        rng: &mut impl Rng,
        name: &str,
        d_model: usize,
        d_ff: usize,
    ) -> Result<Self> {
        Ok(Ffn {
            lin1: Linear::init(g, rng, &format!("{name}.lin1"), d_model, d_ff)?,
            lin2: Linear::init(g, rng, &format!("{name}.lin2"), d_ff, d_model)?,
        })
    }

    pub fn forward(&self, g: &mut Graph, x: TensorId) -> Result<TensorId> {
        let h = self.lin1.forward(g, x)?;
        let h = g.relu(h)?;
        self.lin2.forward(g, h)
    }

    pub fn params(&self) -> [TensorId; 4] {
        let [w1, b1] = self.lin1.params();
        let [w2, b2] = self.lin2.params();
        [w1, b1, w2, b2]
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::gradcheck::{check_params, DEFAULT_STEP};

    #[test]
    fn zero_weights_give_bias_rows() {
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ffn = Ffn::init(&mut g, &mut rng, "f", 2, 3).unwrap();
        g.set_value(ffn.lin1.w, &[0.0; 6]).unwrap();
        g.set_value(ffn.lin1.b, &[1.0, -1.0, 0.5]).unwrap();
        g.set_value(ffn.lin2.w, &[0.0; 6]).unwrap();
        g.set_value(ffn.lin2.b, &[7.0, 9.0]).unwrap();
        let x = g.leaf(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let y = ffn.forward(&mut g, x).unwrap();
        assert_eq!(g.value(y).unwrap(), &[7.0, 9.0, 7.0, 9.0, 7.0, 9.0]);
    }

    #[test]
    fn permuting_positions_permutes_outputs() {
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ffn = Ffn::init(&mut g, &mut rng, "f", 3, 5).unwrap();
        let x = g
            .leaf(2, 3, vec![0.1, -0.4, 2.0, 1.5, 0.0, -0.9])
            .unwrap();
        let y = ffn.forward(&mut g, x).unwrap();
        let y_vals = g.value(y).unwrap().to_vec();
        let x_swapped = g
            .leaf(2, 3, vec![1.5, 0.0, -0.9, 0.1, -0.4, 2.0])
            .unwrap();
        let y2 = ffn.forward(&mut g, x_swapped).unwrap();
        let y2_vals = g.value(y2).unwrap();
        assert_eq!(&y_vals[0..3], &y2_vals[3..6]);
        assert_eq!(&y_vals[3..6], &y2_vals[0..3]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ffn = Ffn::init(&mut g, &mut rng, "f", 4, 8).unwrap();
        g.mark_persistent();
        let x_data: Vec<f64> = (0..2 * 4).map(|i| (i as f64 - 4.0) * 0.37).collect();
        let report = check_params(
            &mut g,
            &ffn.params(),
            |g| {
                let x = g.leaf(2, 4, x_data.clone())?;
                let y = ffn.forward(g, x)?;
                let sq = g.mul(y, y)?;
                g.sum_all(sq)
            },
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(report.passed(), "{report:?}");
    }
}
