//! Walk the data pipeline: ingest a CSV series, split it chronologically,
//! fit min-max normalization on the training segment only, and build
//! sliding windows for each split.
//!
//! Usage: cargo run --example data_pipeline [-- PATH]

use std::path::Path;

use seqcast::data::{infer_format, ingest, SplitSpec, WindowedDataset};

fn main() -> seqcast::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/sample_cases.csv".into());
    let path = Path::new(&path);
    let records = ingest(path, infer_format(path)?)?;
    println!(
        "{}: {} days, {} .. {}",
        path.display(),
        records.len(),
        records[0].date,
        records[records.len() - 1].date
    );

    let spec = SplitSpec::default(); // last 60 days test, 70% of rest train
    let (lag, horizon) = (7, 1);
    let data = WindowedDataset::build(&records, lag, horizon, 1, &spec)?;

    println!(
        "split: train {} days, eval {} days, test {} days",
        data.split.train.len(),
        data.split.eval.len(),
        data.split.test.len()
    );
    println!(
        "windows (lag {lag}, horizon {horizon}): train {}, eval {}, test {}",
        data.train.len(),
        data.eval.len(),
        data.test.len()
    );
    println!(
        "normalization fit on train only: positive in [{}, {}] -> [-1, 1]",
        data.norm.mins[0], data.norm.maxs[0]
    );

    // Values outside the training range are extrapolated, never clipped.
    let w = &data.test[data.test.len() - 1];
    let raw = data.actuals(w)[0];
    println!("last test target: raw {raw:.0}, normalized {:.4}", w.target[0]);
    let round_trip = data.norm.denormalize(0, data.norm.normalize(0, raw));
    println!("round trip error: {:.2e}", (round_trip - raw).abs());
    Ok(())
}
