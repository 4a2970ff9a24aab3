//! Peek inside multi-head attention: with the causal mask on, position t
//! attends only to positions <= t, so the weight matrix is lower-triangular
//! and each row still sums to 1.
//!
//! Usage: cargo run --example attention_causality

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqcast::nn::MultiHeadAttention;
use seqcast::tensor::Graph;

fn main() -> seqcast::Result<()> {
    let (seq, d_model, heads) = (5, 8, 2);
    let mut g = Graph::new();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let attn = MultiHeadAttention::init(&mut g, &mut rng, "attn", d_model, heads)?;
    g.mark_persistent();

    let x: Vec<f64> = (0..seq * d_model).map(|i| ((i * 37 % 19) as f64 - 9.0) / 9.0).collect();
    let x = g.leaf(seq, d_model, x)?;

    for causal in [false, true] {
        let (_, weights) =
            attn.forward_with_weights(&mut g, x, x, x, causal, 0.0, false, &mut rng)?;
        println!("causal = {causal}, head 0 weights:");
        let w = g.value(weights[0])?;
        for t in 0..seq {
            let row = &w[t * seq..(t + 1) * seq];
            let line: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
            println!("  t={t}: [{}]  sum {:.6}", line.join(", "), row.iter().sum::<f64>());
        }
        if causal {
            let leaked = w
                .chunks(seq)
                .enumerate()
                .flat_map(|(t, row)| row[t + 1..].iter())
                .any(|&v| v != 0.0);
            println!("  future weight leaked: {leaked}");
        }
    }
    Ok(())
}
