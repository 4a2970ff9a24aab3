//! Command-line front end for the seqcast experiment harness.
//!
//! Settings come from three layers, later winning: config file, the
//! convenience flags (--data, --out, --seed, --trials), then --set
//! overrides. Errors map to exit codes: config 2, data/io 3, diverged 4.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqcast::data::{feature_matrix, infer_format, ingest, DailyRecord};
use seqcast::experiment::{
    aggregate_outcomes, best_cell, build_dataset, emit_outputs, plan_compare, plan_single,
    plan_sweep, run_cells, run_trial_full, CellOutcome, ExperimentConfig, RawConfig,
};
use seqcast::models::{load_checkpoint, predict_multistep, rebuild, restore_params, save_checkpoint};
use seqcast::tensor::Graph;
use seqcast::{Error, Result};

#[derive(Parser)]
#[command(
    name = "seqcast",
    version,
    about = "Train and compare transformer, LSTM, and RNN forecasters on daily case counts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file (flat key=value lines, # comments).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Dataset file (CSV or JSON). Shorthand for --set data.path=...
    #[arg(long, global = true, value_name = "PATH")]
    data: Option<PathBuf>,

    /// Output directory. Shorthand for --set out.dir=...
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Base RNG seed; trial i runs with seed+i.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Trials per configuration.
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,

    /// Override one config key, e.g. --set model.d_model=128. Repeatable;
    /// wins over the config file and the shorthand flags.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", action = ArgAction::Append)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model; write a checkpoint, predictions, and a summary row.
    Train,
    /// Run the config's sweep axis over its values.
    Sweep,
    /// Compare the transformer against the LSTM and RNN baselines.
    Compare,
    /// Forecast the days after a dataset using a saved checkpoint.
    Predict,
}

fn build_raw(cli: &Cli) -> Result<RawConfig> {
    let mut raw = match &cli.config {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    if let Some(d) = &cli.data {
        raw.set(&format!("data.path={}", d.display()))?;
    }
    if let Some(o) = &cli.out {
        raw.set(&format!("out.dir={}", o.display()))?;
    }
    if let Some(s) = cli.seed {
        raw.set(&format!("train.base_seed={s}"))?;
    }
    if let Some(t) = cli.trials {
        raw.set(&format!("train.n_trials={t}"))?;
    }
    for kv in &cli.set {
        raw.set(kv)?;
    }
    Ok(raw)
}

fn load_records(cfg: &ExperimentConfig) -> Result<Vec<DailyRecord>> {
    let path = cfg.data_path.as_deref().ok_or_else(|| {
        Error::Config("no dataset given: pass --data or set data.path".into())
    })?;
    let format = match cfg.data_format {
        Some(f) => f,
        None => infer_format(path)?,
    };
    ingest(path, format)
}

fn print_cells(outcomes: &[CellOutcome]) {
    let best = best_cell(outcomes);
    for (i, o) in outcomes.iter().enumerate() {
        match (&o.aggregate, &o.error) {
            (Some(agg), _) => {
                let tag = if best == Some(i) { "  <- best" } else { "" };
                println!(
                    "{}={} ({}): mean MAPE {:.3}, std {:.3}, best {:.3} over {} trial(s){tag}",
                    o.axis,
                    o.value,
                    o.placement_label(),
                    agg.mean_mape,
                    agg.std_mape,
                    o.best_trial().map(|t| t.report.mape).unwrap_or(f64::NAN),
                    o.trials.len(),
                );
            }
            (None, Some(e)) => {
                println!("{}={} ({}): FAILED: {e}", o.axis, o.value, o.placement_label());
            }
            (None, None) => unreachable!("cell without aggregate or error"),
        }
    }
}

fn finish(cfg: &ExperimentConfig, mut outcomes: Vec<CellOutcome>) -> Result<()> {
    let written = emit_outputs(&cfg.out_dir, &outcomes, cfg.plot)?;
    print_cells(&outcomes);
    for p in &written {
        println!("wrote {}", p.display());
    }
    // Partial failures still produce results; a run where nothing succeeded
    // exits with the first failure's code.
    if outcomes.iter().all(|o| o.error.is_some()) {
        let first = outcomes
            .iter_mut()
            .find_map(|o| o.error.take())
            .expect("all cells errored");
        return Err(first);
    }
    Ok(())
}

fn cmd_train(raw: &RawConfig) -> Result<()> {
    let cfg = ExperimentConfig::resolve(raw)?;
    let records = load_records(&cfg)?;
    let data = build_dataset(&cfg, &records)?;
    let cell = plan_single(&cfg)?.remove(0);

    let start = std::time::Instant::now();
    let mut trials = Vec::with_capacity(cfg.n_trials);
    let mut best: Option<(f64, seqcast::experiment::TrainedModel)> = None;
    for t in 0..cfg.n_trials {
        let (outcome, trained) = run_trial_full(&cfg, &data, t)?;
        println!(
            "trial {t} (seed {}): test MAPE {:.3}, final train MSE {:.6}",
            outcome.seed, outcome.report.mape, outcome.final_train_mse
        );
        if best.as_ref().map_or(true, |(m, _)| outcome.report.mape < *m) {
            best = Some((outcome.report.mape, trained));
        }
        trials.push(outcome);
    }
    let wall_ms = start.elapsed().as_millis();

    let (_, trained) = best.expect("n_trials >= 1");
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let ckpt = cfg.out_dir.join("model.ckpt");
    save_checkpoint(&ckpt, &trained.meta, &trained.graph, &trained.model.params())?;

    let outcome = aggregate_outcomes(&cfg, cell, trials, wall_ms)?;
    finish(&cfg, vec![outcome])?;
    println!("wrote {}", ckpt.display());
    Ok(())
}

fn cmd_sweep(raw: &RawConfig) -> Result<()> {
    let cfg = ExperimentConfig::resolve(raw)?;
    let records = load_records(&cfg)?;
    let cells = plan_sweep(&cfg)?;
    let outcomes = run_cells(&cells, &records)?;
    finish(&cfg, outcomes)
}

fn cmd_compare(raw: &RawConfig) -> Result<()> {
    let cfg = ExperimentConfig::resolve(raw)?;
    let records = load_records(&cfg)?;
    let cells = plan_compare(raw)?;
    let outcomes = run_cells(&cells, &records)?;
    finish(&cfg, outcomes)
}

fn cmd_predict(raw: &RawConfig) -> Result<()> {
    let cfg = ExperimentConfig::resolve(raw)?;
    let ckpt = cfg.checkpoint.as_deref().ok_or_else(|| {
        Error::Config("predict needs a checkpoint: --set predict.checkpoint=out/model.ckpt".into())
    })?;
    let (meta, entries) = load_checkpoint(ckpt)?;
    let mut g = Graph::new();
    let model = rebuild(&mut g, &meta)?;
    g.mark_persistent();
    restore_params(&mut g, &model.params(), &entries)?;

    let records = load_records(&cfg)?;
    let (lag, f) = (model.lag(), model.n_features());
    if records.len() < lag {
        return Err(Error::Data(format!(
            "dataset has {} days, model needs the last {lag} as context",
            records.len()
        )));
    }
    if meta.norm.n_features() != f {
        return Err(Error::Data(format!(
            "checkpoint normalizer covers {} feature(s), model expects {f}",
            meta.norm.n_features()
        )));
    }
    let tail = &records[records.len() - lag..];
    let window: Vec<f64> = feature_matrix(tail, f)?
        .iter()
        .enumerate()
        .map(|(i, &v)| meta.norm.normalize(i % f, v))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.base_seed);
    let preds = predict_multistep(model.as_ref(), &mut g, &mut rng, &window, model.horizon(), &meta.norm)?;

    let last_date = records.last().expect("len >= lag >= 1").date;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let path = cfg.out_dir.join("forecast.csv");
    let mut w = csv::Writer::from_path(&path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    w.write_record(["date", "predicted"])
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    for (k, &p) in preds.iter().enumerate() {
        let date = last_date + chrono::Days::new(k as u64 + 1);
        println!("{date}: {p:.2}");
        w.write_record([date.to_string(), p.to_string()])
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let raw = build_raw(cli)?;
    match cli.command {
        Command::Train => cmd_train(&raw),
        Command::Sweep => cmd_sweep(&raw),
        Command::Compare => cmd_compare(&raw),
        Command::Predict => cmd_predict(&raw),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
