//! Capacity sanity check: a small transformer should drive training MSE to
//! ~0 on a clean 100-point sine wave it is allowed to memorize (train on
//! all windows, no held-out split).
//!
//! Usage: cargo run --example overfit_sine

use chrono::NaiveDate;
use seqcast::data::{synthetic, WindowedDataset};
use seqcast::experiment::{fit, ExperimentConfig, RawConfig};

fn main() -> seqcast::Result<()> {
    let start = NaiveDate::from_ymd_opt(2021, 6, 1).unwrap();
    let records = synthetic::sine_series(100, 25.0, 200.0, 80.0, start);
    let data = WindowedDataset::memorize(&records, 7, 1, 1)?;
    println!("{} windows over {} days, lag 7, horizon 1", data.train.len(), records.len());

    let mut raw = RawConfig::default();
    for kv in [
        "model.family=transformer",
        "model.dropout=0.0",
        "model.time_lag=7",
        "train.epochs=300",
        "train.batch_size=16",
        "sched.warmup=300",
    ] {
        raw.set(kv)?;
    }
    let cfg = ExperimentConfig::resolve(&raw)?;

    let result = fit(&cfg, &data, 0)?;
    for (e, mse) in result.train_mse.iter().enumerate() {
        if e % 30 == 0 || e + 1 == result.train_mse.len() {
            println!("epoch {e:>3}: train mse {mse:.3e}");
        }
    }
    let last = result.train_mse.last().unwrap();
    println!(
        "final train MSE {last:.3e} -> {}",
        if *last < 1e-3 { "memorized" } else { "did not memorize" }
    );
    Ok(())
}
