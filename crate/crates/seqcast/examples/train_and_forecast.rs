//! The whole library pipeline in one file: configure, train, evaluate on the
//! held-out test days, checkpoint, reload in a fresh graph, and forecast the
//! days after the series ends.
//!
//! Usage: cargo run --example train_and_forecast

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqcast::data::{feature_matrix, synthetic, WindowedDataset};
use seqcast::experiment::{run_trial_full, ExperimentConfig, RawConfig};
use seqcast::models::{load_checkpoint, predict_multistep, rebuild, restore_params, save_checkpoint};
use seqcast::tensor::Graph;

fn main() -> seqcast::Result<()> {
    let start = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    let records = synthetic::noisy_wave(240, 5, start);

    let mut raw = RawConfig::default();
    for kv in [
        "model.family=lstm",
        "model.hidden_size=16",
        "model.time_lag=7",
        "model.horizon=3",
        "data.test_days=20",
        "train.epochs=60",
    ] {
        raw.set(kv)?;
    }
    let cfg = ExperimentConfig::resolve(&raw)?;
    let (lag, horizon, n_features) = cfg.active_dims();
    let data = WindowedDataset::build(&records, lag, horizon, n_features, &cfg.split)?;
    println!(
        "{} days -> {} train / {} eval / {} test windows",
        records.len(),
        data.train.len(),
        data.eval.len(),
        data.test.len()
    );

    let (outcome, trained) = run_trial_full(&cfg, &data, 0)?;
    println!(
        "trained {} epochs, final train MSE {:.4e}, test MAPE {:.2}%",
        outcome.epochs, outcome.final_train_mse, outcome.report.mape
    );

    // Round-trip through the checkpoint format: a fresh graph, rebuilt from
    // metadata alone, must forecast identically.
    let dir = std::env::temp_dir().join(format!("seqcast-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| seqcast::Error::io(&dir, e))?;
    let path = dir.join("model.ckpt");
    save_checkpoint(&path, &trained.meta, &trained.graph, &trained.model.params())?;

    let (meta, entries) = load_checkpoint(&path)?;
    let mut g = Graph::new();
    let model = rebuild(&mut g, &meta)?;
    g.mark_persistent();
    restore_params(&mut g, &model.params(), &entries)?;

    let tail = &records[records.len() - lag..];
    let window: Vec<f64> = feature_matrix(tail, n_features)?
        .iter()
        .enumerate()
        .map(|(i, &v)| meta.norm.normalize(i % n_features, v))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let preds = predict_multistep(model.as_ref(), &mut g, &mut rng, &window, horizon, &meta.norm)?;

    let last = records.last().unwrap().date;
    println!("forecast beyond {last}:");
    for (k, p) in preds.iter().enumerate() {
        println!("  {}  {p:.1}", last + Days::new(k as u64 + 1));
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
