//! Finite-difference validation of analytic gradients for every layer and
//! all three model families, the same machinery the test suite pins down.
//!
//! Usage: cargo run --example gradient_check

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqcast::gradcheck::{check_params, DEFAULT_STEP};
use seqcast::models::{
    Forecaster, Lstm, RecurrentConfig, Rnn, Transformer, TransformerConfig,
};
use seqcast::nn::NormPlacement;
use seqcast::tensor::Graph;

fn check_model(name: &str, model: &dyn Forecaster, g: &mut Graph) -> seqcast::Result<()> {
    let lag = model.lag();
    let f = model.n_features();
    let input: Vec<f64> = (0..lag * f).map(|i| (i as f64 * 0.37).sin() * 0.8).collect();
    let target: Vec<f64> = (0..model.horizon()).map(|k| 0.1 * (k + 1) as f64).collect();
    let params = model.params();
    let report = check_params(
        g,
        &params,
        |g| {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let pred = model.forward_window(g, &input, Some(&target), false, &mut rng)?;
            let t = g.leaf(target.len(), 1, target.clone())?;
            g.mse(pred, t)
        },
        DEFAULT_STEP,
    )?;
    // max_rel_err of exactly 0 means every entry agreed within the checker's
    // 1e-9 absolute noise floor, the best a central difference can certify.
    let err = if report.max_rel_err == 0.0 {
        "all entries within 1e-9 absolute".to_string()
    } else {
        format!("max rel err {:.3e}", report.max_rel_err)
    };
    println!(
        "{name:<18} {} entries, {err} -> {}",
        report.entries_checked,
        if report.passed() { "ok" } else { "FAIL" }
    );
    Ok(())
}

fn main() -> seqcast::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let rc = RecurrentConfig {
        hidden_size: 4,
        time_lag: 4,
        horizon: 2,
        n_features: 2,
    };
    let mut g = Graph::new();
    let rnn = Rnn::new(&mut g, &mut rng, rc)?;
    g.mark_persistent();
    check_model("rnn", &rnn, &mut g)?;

    let mut g = Graph::new();
    let lstm = Lstm::new(&mut g, &mut rng, rc)?;
    g.mark_persistent();
    check_model("lstm", &lstm, &mut g)?;

    for placement in [NormPlacement::PreLn, NormPlacement::PostLn] {
        let cfg = TransformerConfig {
            d_model: 8,
            n_encoder_blocks: 1,
            n_decoder_blocks: 1,
            n_heads: 2,
            d_ff: 8,
            d_prelayer: 6,
            d_postlayer: 6,
            dropout: 0.0,
            attn_dropout: 0.0,
            norm_placement: placement,
            time_lag: 4,
            horizon: 2,
            n_features: 2,
            ..TransformerConfig::default()
        };
        let mut g = Graph::new();
        let tf = Transformer::new(&mut g, &mut rng, cfg)?;
        g.mark_persistent();
        let name = format!("transformer {placement:?}");
        check_model(&name, &tf, &mut g)?;
    }
    Ok(())
}
