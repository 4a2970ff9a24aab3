use rand::Rng;

use super::{mm_nn_acc, Graph, Op, TensorId};
use crate::error::{Error, Result};

impl Graph {
    /// Standard matrix product `a(m x k) * b(k x n)`.
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (m, ka) = self.shape(a)?;
        let (kb, n) = self.shape(b)?;
        if ka != kb {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: (m, ka),
                rhs: (kb, n),
            });
        }
        let mut out = vec![0.0; m * n];
        mm_nn_acc(
            &mut out,
            &self.tensors[a.idx].data,
            &self.tensors[b.idx].data,
            m,
            ka,
            n,
        );
        let needs = self.needs(&[a, b]);
        Ok(self.push_op(m, n, out, needs, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, x: TensorId) -> Result<TensorId> {
        let (r, c) = self.shape(x)?;
        let src = &self.tensors[x.idx].data;
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = src[i * c + j];
            }
        }
        let needs = self.needs(&[x]);
        Ok(self.push_op(c, r, out, needs, Op::Transpose(x)))
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (r, c) = self.binary_shape_check("add", a, b)?;
        let out = self.zip(a, b, |x, y| x + y);
        let needs = self.needs(&[a, b]);
        Ok(self.push_op(r, c, out, needs, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (r, c) = self.binary_shape_check("sub", a, b)?;
        let out = self.zip(a, b, |x, y| x - y);
        let needs = self.needs(&[a, b]);
        Ok(self.push_op(r, c, out, needs, Op::Sub(a, b)))
    }

    /// Element-wise (Hadamard) product.
    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (r, c) = self.binary_shape_check("mul", a, b)?;
        let out = self.zip(a, b, |x, y| x * y);
        let needs = self.needs(&[a, b]);
        Ok(self.push_op(r, c, out, needs, Op::Mul(a, b)))
    }

    /// `x(m x n) + bias(1 x n)`, the bias row broadcast over all rows.
    pub fn add_bias(&mut self, x: TensorId, bias: TensorId) -> Result<TensorId> {
        let (m, n) = self.shape(x)?;
        let (br, bc) = self.shape(bias)?;
        if br != 1 || bc != n {
            return Err(Error::ShapeMismatch {
                op: "add_bias",
                lhs: (m, n),
                rhs: (br, bc),
            });
        }
        let xd = &self.tensors[x.idx].data;
        let bd = &self.tensors[bias.idx].data;
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                out.push(xd[i * n + j] + bd[j]);
            }
        }
        let needs = self.needs(&[x, bias]);
        Ok(self.push_op(m, n, out, needs, Op::AddBias(x, bias)))
    }

    pub fn relu(&mut self, x: TensorId) -> Result<TensorId> {
        self.map(x, |v| v.max(0.0), Op::Relu(x))
    }

    pub fn tanh(&mut self, x: TensorId) -> Result<TensorId> {
        self.map(x, f64::tanh, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: TensorId) -> Result<TensorId> {
        self.map(x, |v| 1.0 / (1.0 + (-v).exp()), Op::Sigmoid(x))
    }

    pub fn scale(&mut self, x: TensorId, c: f64) -> Result<TensorId> {
        self.map(x, |v| c * v, Op::Scale(x, c))
    }

    /// Numerically stabilized softmax along `axis`: 1 normalizes each row,
    /// 0 normalizes each column. Slices sum to 1 for any finite input.
    pub fn softmax(&mut self, x: TensorId, axis: usize) -> Result<TensorId> {
        let (r, c) = self.shape(x)?;
        if axis > 1 {
            return Err(Error::Config(format!(
                "softmax axis must be 0 or 1, got {axis}"
            )));
        }
        let xd = &self.tensors[x.idx].data;
        if let Some(bad) = xd.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("softmax on non-finite input {bad}")));
        }
        let mut out = vec![0.0; r * c];
        let (slices, len, stride, step) = if axis == 1 {
            (r, c, c, 1) // rows
        } else {
            (c, r, 1, c) // columns
        };
        for s in 0..slices {
            let base = s * stride;
            let mut max = f64::NEG_INFINITY;
            for k in 0..len {
                max = max.max(xd[base + k * step]);
            }
            let mut sum = 0.0;
            for k in 0..len {
                let e = (xd[base + k * step] - max).exp();
                out[base + k * step] = e;
                sum += e;
            }
            for k in 0..len {
                out[base + k * step] /= sum;
            }
        }
        let needs = self.needs(&[x]);
        Ok(self.push_op(r, c, out, needs, Op::Softmax { x, axis }))
    }

    /// Row-wise layer normalization followed by the element-wise affine map
    /// `gain * xhat + bias` (gain and bias are 1 x H rows broadcast over
    /// rows). Uses the population variance of each row.
    pub fn layer_norm(
        &mut self,
        x: TensorId,
        gain: TensorId,
        bias: TensorId,
        eps: f64,
    ) -> Result<TensorId> {
        let (r, h) = self.shape(x)?;
        for (id, what) in [(gain, "gain"), (bias, "bias")] {
            let s = self.shape(id)?;
            if s != (1, h) {
                return Err(Error::ShapeMismatch {
                    op: if what == "gain" {
                        "layer_norm gain"
                    } else {
                        "layer_norm bias"
                    },
                    lhs: (r, h),
                    rhs: s,
                });
            }
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Config(format!(
                "layer_norm epsilon must be a positive finite value, got {eps}"
            )));
        }
        let xd = &self.tensors[x.idx].data;
        let gd = &self.tensors[gain.idx].data;
        let bd = &self.tensors[bias.idx].data;
        let mut out = vec![0.0; r * h];
        let mut mean = vec![0.0; r];
        let mut inv_std = vec![0.0; r];
        for i in 0..r {
            let row = &xd[i * h..(i + 1) * h];
            let mu = row.iter().sum::<f64>() / h as f64;
            let var = row.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / h as f64;
            let s = 1.0 / (var + eps).sqrt();
            mean[i] = mu;
            inv_std[i] = s;
            for j in 0..h {
                out[i * h + j] = gd[j] * ((row[j] - mu) * s) + bd[j];
            }
        }
        let needs = self.needs(&[x, gain, bias]);
        Ok(self.push_op(
            r,
            h,
            out,
            needs,
            Op::LayerNorm {
                x,
                gain,
                bias,
                mean,
                inv_std,
            },
        ))
    }

    /// Inverted dropout: zero each element with probability `p`, scale
    /// survivors by 1/(1-p) so eval needs no correction. Callers skip this op
    /// entirely in eval mode.
    pub fn dropout(&mut self, x: TensorId, p: f64, rng: &mut impl Rng) -> Result<TensorId> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!(
                "dropout probability must satisfy 0 <= p < 1, got {p}"
            )));
        }
        let (r, c) = self.shape(x)?;
        let keep_scale = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..r * c)
            .map(|_| {
                if p > 0.0 && rng.gen::<f64>() < p {
                    0.0
                } else {
                    keep_scale
                }
            })
            .collect();
        let xd = &self.tensors[x.idx].data;
        let out: Vec<f64> = xd.iter().zip(&mask).map(|(v, m)| v * m).collect();
        let needs = self.needs(&[x]);
        Ok(self.push_op(r, c, out, needs, Op::Dropout { x, mask }))
    }

    /// Concatenate tensors with equal row counts along the column axis.
    pub fn concat_cols(&mut self, parts: &[TensorId]) -> Result<TensorId> {
        if parts.is_empty() {
            return Err(Error::Contract("concat_cols of zero tensors".into()));
        }
        let (r, c0) = self.shape(parts[0])?;
        let mut total_cols = c0;
        for &p in &parts[1..] {
            let (pr, pc) = self.shape(p)?;
            if pr != r {
                return Err(Error::ShapeMismatch {
                    op: "concat_cols",
                    lhs: (r, c0),
                    rhs: (pr, pc),
                });
            }
            total_cols += pc;
        }
        let mut out = Vec::with_capacity(r * total_cols);
        for i in 0..r {
            for &p in parts {
                let pc = self.tensors[p.idx].cols;
                let pd = &self.tensors[p.idx].data;
                out.extend_from_slice(&pd[i * pc..(i + 1) * pc]);
            }
        }
        let needs = self.needs(parts);
        Ok(self.push_op(r, total_cols, out, needs, Op::ConcatCols(parts.to_vec())))
    }

    /// Sum of all elements, as a 1x1 tensor.
    pub fn sum_all(&mut self, x: TensorId) -> Result<TensorId> {
        self.shape(x)?;
        let s = self.tensors[x.idx].data.iter().sum();
        let needs = self.needs(&[x]);
        Ok(self.push_op(1, 1, vec![s], needs, Op::SumAll(x)))
    }

    /// Mean squared error between two equal-shape tensors, as a 1x1 tensor.
    pub fn mse(&mut self, pred: TensorId, target: TensorId) -> Result<TensorId> {
        let (r, c) = self.binary_shape_check("mse", pred, target)?;
        let d = self.sub(pred, target)?;
        let sq = self.mul(d, d)?;
        let s = self.sum_all(sq)?;
        self.scale(s, 1.0 / (r * c) as f64)
    }

    fn map(&mut self, x: TensorId, f: impl Fn(f64) -> f64, op: Op) -> Result<TensorId> {
        let (r, c) = self.shape(x)?;
        let out = self.tensors[x.idx].data.iter().map(|&v| f(v)).collect();
        let needs = self.needs(&[x]);
        Ok(self.push_op(r, c, out, needs, op))
    }

    fn zip(&self, a: TensorId, b: TensorId, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.tensors[a.idx]
            .data
            .iter()
            .zip(&self.tensors[b.idx].data)
            .map(|(&x, &y)| f(x, y))
            .collect()
    }
}
