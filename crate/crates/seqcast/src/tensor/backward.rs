use super::{mm_nt_acc, mm_tn_acc, Graph, Op, Tensor, TensorId};
use crate::error::{Error, Result};

impl Graph {
    /// Reverse-mode sweep from a scalar loss. Visits each tape node once in
    /// reverse creation order and accumulates into the gradient of every
    /// `requires_grad` leaf the loss depends on. Repeated calls accumulate;
    /// call [`Graph::zero_grads`] between optimizer steps.
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        self.check(loss)?;
        let lt = &self.tensors[loss.idx];
        if lt.rows != 1 || lt.cols != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {}x{}",
                lt.rows, lt.cols
            )));
        }
        if !lt.needs_grad {
            // Loss does not depend on any trainable leaf; nothing to do.
            return Ok(());
        }
        let n = loss.idx + 1;
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; n];
        adj[loss.idx] = Some(vec![1.0]);
        for i in (0..n).rev() {
            let Some(d) = adj[i].take() else { continue };
            let (before, rest) = self.tensors.split_at_mut(i);
            let node = &mut rest[0];
            if node.requires_grad {
                let g = node.grad.as_mut().expect("requires_grad implies grad");
                for (gi, di) in g.iter_mut().zip(&d) {
                    *gi += di;
                }
            }
            propagate(node, &d, before, &mut adj);
        }
        Ok(())
    }
}

/// Add `d` routed through `node`'s op into the adjoints of its inputs.
/// Inputs always precede the node on the tape, so they live in `before`.
fn propagate(node: &Tensor, d: &[f64], before: &[Tensor], adj: &mut [Option<Vec<f64>>]) {
    let needs = |id: TensorId| before[id.idx].needs_grad;
    // Adjoint buffer for an input, allocated on first touch.
    macro_rules! adj_of {
        ($id:expr) => {
            adj[$id.idx].get_or_insert_with(|| vec![0.0; before[$id.idx].data.len()])
        };
    }
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let (m, k) = (before[a.idx].rows, before[a.idx].cols);
            let n = before[b.idx].cols;
            if needs(*a) {
                let bd = &before[b.idx].data;
                mm_nt_acc(adj_of!(a), d, bd, m, n, k);
            }
            if needs(*b) {
                let ad = &before[a.idx].data;
                mm_tn_acc(adj_of!(b), ad, d, k, m, n);
            }
        }
        Op::Transpose(x) => {
            if needs(*x) {
                let (r, c) = (before[x.idx].rows, before[x.idx].cols);
                let dx = adj_of!(x);
                for i in 0..r {
                    for j in 0..c {
                        dx[i * c + j] += d[j * r + i];
                    }
                }
            }
        }
        Op::Add(a, b) => {
            for id in [a, b] {
                if needs(*id) {
                    acc(adj_of!(id), d, 1.0);
                }
            }
        }
        Op::Sub(a, b) => {
            if needs(*a) {
                acc(adj_of!(a), d, 1.0);
            }
            if needs(*b) {
                acc(adj_of!(b), d, -1.0);
            }
        }
        Op::Mul(a, b) => {
            if needs(*a) {
                let bd = &before[b.idx].data;
                acc_mul(adj_of!(a), d, bd);
            }
            if needs(*b) {
                let ad = &before[a.idx].data;
                acc_mul(adj_of!(b), d, ad);
            }
        }
        Op::AddBias(x, bias) => {
            if needs(*x) {
                acc(adj_of!(x), d, 1.0);
            }
            if needs(*bias) {
                let (m, n) = (node.rows, node.cols);
                let db = adj_of!(bias);
                for i in 0..m {
                    for j in 0..n {
                        db[j] += d[i * n + j];
                    }
                }
            }
        }
        Op::Relu(x) => {
            if needs(*x) {
                let xd = &before[x.idx].data;
                let dx = adj_of!(x);
                for ((dxi, &di), &xi) in dx.iter_mut().zip(d).zip(xd) {
                    if xi > 0.0 {
                        *dxi += di;
                    }
                }
            }
        }
        Op::Tanh(x) => {
            if needs(*x) {
                let y = &node.data;
                let dx = adj_of!(x);
                for ((dxi, &di), &yi) in dx.iter_mut().zip(d).zip(y) {
                    *dxi += di * (1.0 - yi * yi);
                }
            }
        }
        Op::Sigmoid(x) => {
            if needs(*x) {
                let y = &node.data;
                let dx = adj_of!(x);
                for ((dxi, &di), &yi) in dx.iter_mut().zip(d).zip(y) {
                    *dxi += di * yi * (1.0 - yi);
                }
            }
        }
        Op::Scale(x, c) => {
            if needs(*x) {
                acc(adj_of!(x), d, *c);
            }
        }
        Op::Softmax { x, axis } => {
            if needs(*x) {
                let y = &node.data;
                let (r, c) = (node.rows, node.cols);
                let (slices, len, stride, step) = if *axis == 1 {
                    (r, c, c, 1)
                } else {
                    (c, r, 1, c)
                };
                let dx = adj_of!(x);
                for s in 0..slices {
                    let base = s * stride;
                    let mut dot = 0.0;
                    for k in 0..len {
                        let o = base + k * step;
                        dot += d[o] * y[o];
                    }
                    for k in 0..len {
                        let o = base + k * step;
                        dx[o] += y[o] * (d[o] - dot);
                    }
                }
            }
        }
        Op::LayerNorm {
            x,
            gain,
            bias,
            mean,
            inv_std,
        } => {
            let (r, h) = (node.rows, node.cols);
            let xd = &before[x.idx].data;
            let gd = &before[gain.idx].data;
            if needs(*bias) {
                let db = adj_of!(bias);
                for i in 0..r {
                    for j in 0..h {
                        db[j] += d[i * h + j];
                    }
                }
            }
            if needs(*gain) {
                let dg = adj_of!(gain);
                for i in 0..r {
                    let (mu, s) = (mean[i], inv_std[i]);
                    for j in 0..h {
                        let xhat = (xd[i * h + j] - mu) * s;
                        dg[j] += d[i * h + j] * xhat;
                    }
                }
            }
            if needs(*x) {
                let dx = adj_of!(x);
                for i in 0..r {
                    let (mu, s) = (mean[i], inv_std[i]);
                    let mut m1 = 0.0; // mean of d_xhat over the row
                    let mut m2 = 0.0; // mean of d_xhat * xhat over the row
                    for j in 0..h {
                        let xhat = (xd[i * h + j] - mu) * s;
                        let dh = d[i * h + j] * gd[j];
                        m1 += dh;
                        m2 += dh * xhat;
                    }
                    m1 /= h as f64;
                    m2 /= h as f64;
                    for j in 0..h {
                        let xhat = (xd[i * h + j] - mu) * s;
                        let dh = d[i * h + j] * gd[j];
                        dx[i * h + j] += s * (dh - m1 - xhat * m2);
                    }
                }
            }
        }
        Op::Dropout { x, mask } => {
            if needs(*x) {
                acc_mul(adj_of!(x), d, mask);
            }
        }
        Op::ConcatCols(parts) => {
            let total = node.cols;
            let rows = node.rows;
            let mut off = 0;
            for p in parts {
                let pc = before[p.idx].cols;
                if needs(*p) {
                    let dp = adj_of!(p);
                    for i in 0..rows {
                        for j in 0..pc {
                            dp[i * pc + j] += d[i * total + off + j];
                        }
                    }
                }
                off += pc;
            }
        }
        Op::SumAll(x) => {
            if needs(*x) {
                acc_broadcast(adj_of!(x), d[0]);
            }
        }
    }
}

fn acc(dst: &mut [f64], src: &[f64], scale: f64) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += scale * b;
    }
}

fn acc_mul(dst: &mut [f64], src: &[f64], factor: &[f64]) {
    for ((a, b), f) in dst.iter_mut().zip(src).zip(factor) {
        *a += b * f;
    }
}

fn acc_broadcast(dst: &mut [f64], v: f64) {
    for a in dst.iter_mut() {
        *a += v;
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut g = Graph::new();
        let w = g.param("w", 1, 2, vec![1.0, 2.0]).unwrap();
        match g.backward(w) {
            Err(Error::Contract(msg)) => assert!(msg.contains("scalar")),
            other => panic!("expected contract error, got {other:?}"),
        }
    }

    #[test]
    fn grad_of_sum_is_ones() {
        let mut g = Graph::new();
        let x = g.param("x", 2, 3, vec![0.5; 6]).unwrap();
        let s = g.sum_all(x).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap().unwrap(), &[1.0; 6]);
    }

    #[test]
    fn grad_of_sum_of_squares() {
        let mut g = Graph::new();
        let x = g.param("x", 1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let sq = g.mul(x, x).unwrap();
        let s = g.sum_all(sq).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap().unwrap(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn repeated_backward_accumulates() {
        let mut g = Graph::new();
        let x = g.param("x", 1, 2, vec![1.0, 1.0]).unwrap();
        let s = g.sum_all(x).unwrap();
        g.backward(s).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap().unwrap(), &[2.0, 2.0]);
        g.zero_grads();
        assert_eq!(g.grad(x).unwrap().unwrap(), &[0.0, 0.0]);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap().unwrap(), &[1.0, 1.0]);
    }

    #[test]
    fn matmul_gradient_matches_hand_rule() {
        // loss = sum(A * B); dA = 1 * B^T, dB = A^T * 1.
        let mut g = Graph::new();
        let a = g.param("a", 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = g.param("b", 2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let c = g.matmul(a, b).unwrap();
        let s = g.sum_all(c).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(a).unwrap().unwrap(), &[11.0, 15.0, 11.0, 15.0]);
        assert_eq!(g.grad(b).unwrap().unwrap(), &[4.0, 4.0, 6.0, 6.0]);
    }

    #[test]
    fn sigmoid_gradient_at_zero() {
        let mut g = Graph::new();
        let x = g.param("x", 1, 1, vec![0.0]).unwrap();
        let y = g.sigmoid(x).unwrap();
        let s = g.sum_all(y).unwrap();
        g.backward(s).unwrap();
        assert!((g.grad(x).unwrap().unwrap()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn loss_without_trainable_inputs_is_a_no_op() {
        let mut g = Graph::new();
        let x = g.leaf(1, 2, vec![1.0, 2.0]).unwrap();
        let s = g.sum_all(x).unwrap();
        g.backward(s).unwrap();
        assert!(g.grad(s).unwrap().is_none());
    }

    #[test]
    fn reused_tensor_gets_both_contributions() {
        // loss = sum(x + x) -> grad 2 per element.
        let mut g = Graph::new();
        let x = g.param("x", 1, 2, vec![3.0, 4.0]).unwrap();
        let y = g.add(x, x).unwrap();
        let s = g.sum_all(y).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap().unwrap(), &[2.0, 2.0]);
    }

    /// Every differentiable op against central finite differences, 20 seeds.
    #[test]
    fn all_ops_match_finite_differences() {
        use crate::gradcheck::{check_params, DEFAULT_STEP};

        type BuildFn = fn(&mut Graph, &[TensorId], u64) -> crate::error::Result<TensorId>;
        let cases: Vec<(&str, Vec<(usize, usize)>, BuildFn)> = vec![
            ("matmul", vec![(3, 3), (3, 3)], |g, p, _| {
                let c = g.matmul(p[0], p[1])?;
                g.sum_all(c)
            }),
            ("transpose", vec![(2, 3)], |g, p, _| {
                let t = g.transpose(p[0])?;
                let sq = g.mul(t, t)?;
                g.sum_all(sq)
            }),
            ("add_sub_mul", vec![(2, 3), (2, 3)], |g, p, _| {
                let a = g.add(p[0], p[1])?;
                let s = g.sub(a, p[1])?;
                let m = g.mul(s, p[1])?;
                g.sum_all(m)
            }),
            ("add_bias", vec![(3, 2), (1, 2)], |g, p, _| {
                let y = g.add_bias(p[0], p[1])?;
                let sq = g.mul(y, y)?;
                g.sum_all(sq)
            }),
            // Inputs are kept away from the relu kink at 0, where a central
            // difference straddles the non-differentiable point.
            ("relu", vec![(2, 3)], |g, p, _| {
                let y = g.relu(p[0])?;
                let sq = g.mul(y, y)?;
                g.sum_all(sq)
            }),
            ("tanh", vec![(2, 3)], |g, p, _| {
                let y = g.tanh(p[0])?;
                g.sum_all(y)
            }),
            ("sigmoid", vec![(2, 3)], |g, p, _| {
                let y = g.sigmoid(p[0])?;
                g.sum_all(y)
            }),
            ("scale", vec![(2, 3)], |g, p, _| {
                let y = g.scale(p[0], -1.7)?;
                let sq = g.mul(y, y)?;
                g.sum_all(sq)
            }),
            ("softmax_rows", vec![(3, 4)], |g, p, _| {
                let y = g.softmax(p[0], 1)?;
                let sq = g.mul(y, y)?;
                g.sum_all(sq)
            }),
            ("softmax_cols", vec![(3, 4)], |g, p, _| {
                let y = g.softmax(p[0], 0)?;
                let sq = g.mul(y, y)?;
                g.sum_all(sq)
            }),
            ("layer_norm", vec![(3, 4), (1, 4), (1, 4)], |g, p, _| {
                let y = g.layer_norm(p[0], p[1], p[2], 1e-5)?;
                let sq = g.mul(y, y)?;
                g.sum_all(sq)
            }),
            // The mask must be identical on every forward, so the generator
            // is reseeded inside the closure.
            ("dropout", vec![(3, 4)], |g, p, seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let y = g.dropout(p[0], 0.4, &mut rng)?;
                let sq = g.mul(y, y)?;
                g.sum_all(sq)
            }),
            ("concat_cols", vec![(2, 2), (2, 3)], |g, p, _| {
                let y = g.concat_cols(&[p[0], p[1]])?;
                let sq = g.mul(y, y)?;
                g.sum_all(sq)
            }),
        ];

        for (name, shapes, build) in cases {
            for seed in 0..20u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
                let mut g = Graph::new();
                let params: Vec<TensorId> = shapes
                    .iter()
                    .enumerate()
                    .map(|(i, &(r, c))| {
                        let data: Vec<f64> = (0..r * c)
                            .map(|_| {
                                // Magnitudes in [0.2, 1.2], signs random.
                                let mag = rng.gen_range(0.2..1.2);
                                if rng.gen::<bool>() {
                                    mag
                                } else {
                                    -mag
                                }
                            })
                            .collect();
                        g.param(format!("{name}_{i}"), r, c, data).unwrap()
                    })
                    .collect();
                g.mark_persistent();
                let report =
                    check_params(&mut g, &params, |g| build(g, &params, seed), DEFAULT_STEP)
                        .unwrap();
                assert!(
                    report.passed(),
                    "op {name} seed {seed} failed gradcheck: {report:?}"
                );
            }
        }
    }

    #[test]
    fn replay_is_bitwise_deterministic() {
        let run = || {
            let mut g = Graph::new();
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let data: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w = g.param("w", 3, 4, data).unwrap();
            g.mark_persistent();
            let x = g.leaf(2, 3, (1..=6).map(f64::from).collect()).unwrap();
            let h = g.matmul(x, w).unwrap();
            let h = g.tanh(h).unwrap();
            let h = g.dropout(h, 0.3, &mut rng).unwrap();
            let s = g.sum_all(h).unwrap();
            g.backward(s).unwrap();
            (
                g.value(s).unwrap().to_vec(),
                g.grad(w).unwrap().unwrap().to_vec(),
            )
        };
        let (v1, g1) = run();
        let (v2, g2) = run();
        assert_eq!(v1, v2);
        assert_eq!(g1, g2);
    }
}
