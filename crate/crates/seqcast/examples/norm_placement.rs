//! Pre-LN vs Post-LN at initialization: run one teacher-forced forward and
//! backward per seed and compare the gradient reaching the deepest decoder
//! feed-forward output weight. Post-LN feeds that sublayer a normalized,
//! larger-variance signal, so its gradients start out bigger; Pre-LN's
//! residual bypass keeps them tame, which is why it trains more stably at
//! depth.
//!
//! Usage: cargo run --example norm_placement

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqcast::models::{Forecaster, Transformer, TransformerConfig};
use seqcast::nn::NormPlacement;
use seqcast::tensor::Graph;

fn grad_norm_at_output_ffn(placement: NormPlacement, seed: u64) -> seqcast::Result<f64> {
    let cfg = TransformerConfig {
        norm_placement: placement,
        dropout: 0.0,
        ..TransformerConfig::default()
    };
    let mut g = Graph::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = Transformer::new(&mut g, &mut rng, cfg)?;
    g.mark_persistent();

    let input: Vec<f64> = (0..cfg.time_lag).map(|i| (i as f64 * 0.9).sin() * 0.7).collect();
    let target = vec![0.3];
    let pred = model.forward_window(&mut g, &input, Some(&target), true, &mut rng)?;
    let t = g.leaf(1, 1, target)?;
    let loss = g.mse(pred, t)?;
    g.backward(loss)?;

    let wanted = format!("dec.b{}.ffn.lin2.w", cfg.n_decoder_blocks - 1);
    for p in model.params() {
        if g.name(p)? == Some(wanted.as_str()) {
            let grad = g.grad(p)?.expect("parameter gradient");
            return Ok(grad.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }
    unreachable!("parameter {wanted} exists by construction");
}

fn main() -> seqcast::Result<()> {
    let seeds: Vec<u64> = (0..10).collect();
    let mut rows = Vec::new();
    for &s in &seeds {
        let pre = grad_norm_at_output_ffn(NormPlacement::PreLn, s)?;
        let post = grad_norm_at_output_ffn(NormPlacement::PostLn, s)?;
        println!("seed {s}: pre {pre:.3e}   post {post:.3e}   ratio {:.2}", post / pre);
        rows.push((pre, post));
    }
    let mut pres: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut posts: Vec<f64> = rows.iter().map(|r| r.1).collect();
    pres.sort_by(f64::total_cmp);
    posts.sort_by(f64::total_cmp);
    let med = |v: &[f64]| 0.5 * (v[v.len() / 2] + v[(v.len() - 1) / 2]);
    println!(
        "median gradient norm: pre {:.3e}, post {:.3e}",
        med(&pres),
        med(&posts)
    );
    Ok(())
}
