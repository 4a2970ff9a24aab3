//! Acceptance gate: one test per shipped guarantee. Every test prints a
//! single `ACCEPTANCE <name>: PASS|FAIL` line before asserting, so a plain
//! `cargo test --test acceptance -- --nocapture` reads as a checklist.
//!
//! Tolerances are pinned here, not imported, so a library change that
//! loosens a guarantee fails loudly.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqcast::data::{synthetic, NormalizationParams, SplitSpec, WindowedDataset};
use seqcast::experiment::{fit, plan_compare, plan_sweep, run_cells, write_sweep_csv, ExperimentConfig, RawConfig};
use seqcast::gradcheck::{check_params, DEFAULT_STEP};
use seqcast::metrics::mape;
use seqcast::models::{Forecaster, Lstm, ModelFamily, RecurrentConfig, Rnn, Transformer, TransformerConfig};
use seqcast::nn::{LayerNorm, MultiHeadAttention, NormPlacement};
use seqcast::optim::{OptKind, Optimizer, OptimizerSpec};
use seqcast::tensor::Graph;

fn verdict(name: &str, pass: bool, detail: &str) {
    if pass {
        println!("ACCEPTANCE {name}: PASS");
    } else {
        println!("ACCEPTANCE {name}: FAIL ({detail})");
    }
    assert!(pass, "{name}: {detail}");
}

fn date0() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 1, 1).unwrap()
}

fn cfg_from(pairs: &[&str]) -> ExperimentConfig {
    let mut raw = RawConfig::default();
    for p in pairs {
        raw.set(p).unwrap();
    }
    ExperimentConfig::resolve(&raw).unwrap()
}

// --- 1. gradient correctness -------------------------------------------

/// Finite differences validate analytic gradients for each free-standing
/// layer and for all three families assembled end to end, at toy sizes.
/// Tolerance lives in the checker: 1e-4 relative, 1e-3 where the analytic
/// magnitude is below 1e-6.
#[test]
fn gradient_correctness() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // Free-standing layers.
    {
        let mut g = Graph::new();
        let ln = LayerNorm::init(&mut g, "ln", 6).unwrap();
        g.mark_persistent();
        let x: Vec<f64> = (0..18).map(|i| (i as f64 * 0.61).sin() * 1.3).collect();
        let report = check_params(
            &mut g,
            &ln.params(),
            |g| {
                let inp = g.leaf(3, 6, x.clone())?;
                let y = ln.forward(g, inp)?;
                g.sum_all(y)
            },
            DEFAULT_STEP,
        )
        .unwrap();
        if !report.passed() {
            failures.push(format!("layer_norm rel err {:.2e}", report.max_rel_err));
        }
    }
    for causal in [false, true] {
        let mut g = Graph::new();
        let attn = MultiHeadAttention::init(&mut g, &mut rng, "attn", 8, 2).unwrap();
        g.mark_persistent();
        let x: Vec<f64> = (0..32).map(|i| (i as f64 * 0.37).cos() * 0.9).collect();
        let params: Vec<_> = attn.params();
        let report = check_params(
            &mut g,
            &params,
            |g| {
                let mut r = ChaCha8Rng::seed_from_u64(0);
                let inp = g.leaf(4, 8, x.clone())?;
                let y = attn.forward(g, inp, inp, inp, causal, 0.0, false, &mut r)?;
                g.sum_all(y)
            },
            DEFAULT_STEP,
        )
        .unwrap();
        if !report.passed() {
            failures.push(format!("attention causal={causal} rel err {:.2e}", report.max_rel_err));
        }
    }

    // Assembled families at toy sizes: d_model 8, hidden 4, lag 4.
    let rc = RecurrentConfig {
        hidden_size: 4,
        time_lag: 4,
        horizon: 2,
        n_features: 2,
    };
    let mut check_family = |name: &str, g: &mut Graph, model: &dyn Forecaster| {
        let lag = model.lag();
        let f = model.n_features();
        let input: Vec<f64> = (0..lag * f).map(|i| (i as f64 * 0.37).sin() * 0.8).collect();
        let target: Vec<f64> = (0..model.horizon()).map(|k| 0.1 * (k + 1) as f64).collect();
        let params = model.params();
        let report = check_params(
            g,
            &params,
            |g| {
                let mut r = ChaCha8Rng::seed_from_u64(0);
                let pred = model.forward_window(g, &input, Some(&target), false, &mut r)?;
                let t = g.leaf(target.len(), 1, target.clone())?;
                g.mse(pred, t)
            },
            DEFAULT_STEP,
        )
        .unwrap();
        if !report.passed() {
            failures.push(format!(
                "{name} rel err {:.2e} at {:?}",
                report.max_rel_err, report.worst
            ));
        }
    };

    let mut g = Graph::new();
    let rnn = Rnn::new(&mut g, &mut rng, rc).unwrap();
    g.mark_persistent();
    check_family("rnn", &mut g, &rnn);

    let mut g = Graph::new();
    let lstm = Lstm::new(&mut g, &mut rng, rc).unwrap();
    g.mark_persistent();
    check_family("lstm", &mut g, &lstm);

    for placement in [NormPlacement::PreLn, NormPlacement::PostLn] {
        let tc = TransformerConfig {
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
        let tf = Transformer::new(&mut g, &mut rng, tc).unwrap();
        g.mark_persistent();
        check_family(&format!("transformer {placement:?}"), &mut g, &tf);
    }

    verdict("gradient-correctness", failures.is_empty(), &failures.join("; "));
}

// --- 2. optimizer oracles ----------------------------------------------

/// Independent scalar re-implementation of each update rule. Five steps on
/// (w - 3)^2 must match the library to 1e-12 per step, and every kind must
/// then reach the minimum with a suitable learning rate.
struct ScalarOracle {
    kind: OptKind,
    lr: f64,
    m: f64,
    v: f64,
    u: f64,
    acc: f64,
    acc_delta: f64,
    t: usize,
}

impl ScalarOracle {
    fn new(kind: OptKind, lr: f64) -> Self {
        ScalarOracle { kind, lr, m: 0.0, v: 0.0, u: 0.0, acc: 0.0, acc_delta: 0.0, t: 0 }
    }

    fn step(&mut self, w: f64) -> f64 {
        let g = 2.0 * (w - 3.0);
        self.t += 1;
        let t = self.t as f64;
        let (b1, b2) = (0.9, 0.999);
        match self.kind {
            OptKind::Sgd => w - self.lr * g,
            OptKind::Adam => {
                self.m = b1 * self.m + (1.0 - b1) * g;
                self.v = b2 * self.v + (1.0 - b2) * g * g;
                let mh = self.m / (1.0 - b1.powf(t));
                let vh = self.v / (1.0 - b2.powf(t));
                w - self.lr * mh / (vh.sqrt() + 1e-8)
            }
            OptKind::AdamW => {
                self.m = b1 * self.m + (1.0 - b1) * g;
                self.v = b2 * self.v + (1.0 - b2) * g * g;
                let mh = self.m / (1.0 - b1.powf(t));
                let vh = self.v / (1.0 - b2.powf(t));
                w - self.lr * (mh / (vh.sqrt() + 1e-8) + 0.01 * w)
            }
            OptKind::Adamax => {
                self.m = b1 * self.m + (1.0 - b1) * g;
                self.u = (b2 * self.u).max(g.abs());
                let mh = self.m / (1.0 - b1.powf(t));
                w - self.lr * mh / (self.u + 1e-8)
            }
            OptKind::Adagrad => {
                self.acc += g * g;
                w - self.lr * g / (self.acc.sqrt() + 1e-10)
            }
            OptKind::Adadelta => {
                let rho = 0.9;
                let eps = 1e-6;
                self.acc = rho * self.acc + (1.0 - rho) * g * g;
                let delta = -((self.acc_delta + eps).sqrt() / (self.acc + eps).sqrt()) * g;
                self.acc_delta = rho * self.acc_delta + (1.0 - rho) * delta * delta;
                w + self.lr * delta
            }
            OptKind::Rmsprop => {
                let rho = 0.99;
                self.acc = rho * self.acc + (1.0 - rho) * g * g;
                w - self.lr * g / (self.acc.sqrt() + 1e-8)
            }
        }
    }
}

fn drive(kind: OptKind, lr: f64, steps: usize) -> Vec<f64> {
    let spec = OptimizerSpec::new(kind);
    let mut g = Graph::new();
    let w = g.param("w", 1, 1, vec![0.0]).unwrap();
    g.mark_persistent();
    let mut opt = Optimizer::new(spec, &g, &[w]).unwrap();
    let mut iterates = Vec::with_capacity(steps);
    for _ in 0..steps {
        g.reset();
        opt.zero_grads(&mut g);
        let c = g.scalar(3.0);
        let d = g.sub(w, c).unwrap();
        let loss = g.mul(d, d).unwrap();
        g.backward(loss).unwrap();
        opt.step(&mut g, lr).unwrap();
        iterates.push(g.value(w).unwrap()[0]);
    }
    iterates
}

#[test]
fn optimizer_oracles() {
    let mut failures = Vec::new();

    for kind in OptKind::ALL {
        let lr = OptimizerSpec::new(kind).base_lr;
        let lib = drive(kind, lr, 5);
        let mut oracle = ScalarOracle::new(kind, lr);
        let mut w = 0.0;
        for (i, &lw) in lib.iter().enumerate() {
            w = oracle.step(w);
            if (w - lw).abs() > 1e-12 {
                failures.push(format!(
                    "{} step {}: library {lw:.15} vs oracle {w:.15}",
                    kind.label(),
                    i + 1
                ));
                break;
            }
        }
    }

    // Convergence with a learning rate suited to each rule. AdamW runs at
    // its small default lr: weight decay displaces the fixed point from 3,
    // and the displacement plus oscillation shrink with the learning rate.
    let budgets = [
        (OptKind::Adam, 0.05, 3000),
        (OptKind::AdamW, 0.001, 15000),
        (OptKind::Adamax, 0.05, 3000),
        (OptKind::Adagrad, 1.0, 3000),
        (OptKind::Adadelta, 1.0, 3000),
        (OptKind::Sgd, 0.01, 3000),
        (OptKind::Rmsprop, 0.01, 3000),
    ];
    for (kind, lr, cap) in budgets {
        let iterates = drive(kind, lr, cap);
        let converged = iterates.iter().any(|w| (w - 3.0).abs() < 1e-3);
        if !converged {
            failures.push(format!(
                "{} lr {lr} never reached |w - 3| < 1e-3 in {cap} steps (final {:.4})",
                kind.label(),
                iterates.last().unwrap()
            ));
        }
    }

    verdict("optimizer-oracles", failures.is_empty(), &failures.join("; "));
}

// --- 3. layer invariants -----------------------------------------------

/// Layer norm emits rows with mean < 1e-10 and |variance - 1| < 1e-8 at unit
/// gain and zero bias; attention rows are simplexes summing to 1 within
/// 1e-12; causal masking zeroes everything above the diagonal exactly.
#[test]
fn layer_invariants() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let mut g = Graph::new();
    let ln = LayerNorm::init(&mut g, "ln", 16).unwrap();
    let attn = MultiHeadAttention::init(&mut g, &mut rng, "attn", 16, 4).unwrap();
    g.mark_persistent();

    let rows = 9;
    let x: Vec<f64> = (0..rows * 16).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let inp = g.leaf(rows, 16, x).unwrap();
    let y = ln.forward(&mut g, inp).unwrap();
    let vals = g.value(y).unwrap().to_vec();
    for r in 0..rows {
        let row = &vals[r * 16..(r + 1) * 16];
        let mean = row.iter().sum::<f64>() / 16.0;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 16.0;
        if mean.abs() >= 1e-10 {
            failures.push(format!("layer_norm row {r} mean {mean:.2e}"));
        }
        if (var - 1.0).abs() >= 1e-8 {
            failures.push(format!("layer_norm row {r} var {var:.10}"));
        }
    }

    for causal in [false, true] {
        let q: Vec<f64> = (0..6 * 16).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let qt = g.leaf(6, 16, q).unwrap();
        let (_, weights) = attn
            .forward_with_weights(&mut g, qt, qt, qt, causal, 0.0, false, &mut rng)
            .unwrap();
        for (h, &wid) in weights.iter().enumerate() {
            let w = g.value(wid).unwrap().to_vec();
            for i in 0..6 {
                let row = &w[i * 6..(i + 1) * 6];
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() >= 1e-12 {
                    failures.push(format!("attn head {h} causal={causal} row {i} sums {sum:.15}"));
                }
                if causal {
                    for (j, &v) in row.iter().enumerate().skip(i + 1) {
                        if v != 0.0 {
                            failures.push(format!("attn head {h} leaks weight {v:.2e} at ({i},{j})"));
                        }
                    }
                }
            }
        }
    }

    verdict("layer-invariants", failures.is_empty(), &failures.join("; "));
}

// --- 4. norm placement gradient direction ------------------------------

/// At initialization, the gradient reaching the deepest decoder feed-forward
/// output weight is larger under Post-LN than Pre-LN in the median over ten
/// seeds. Directional claim only.
#[test]
fn norm_placement_direction() {
    fn grad_norm(placement: NormPlacement, seed: u64) -> f64 {
        let cfg = TransformerConfig {
            norm_placement: placement,
            dropout: 0.0,
            ..TransformerConfig::default()
        };
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = Transformer::new(&mut g, &mut rng, cfg).unwrap();
        g.mark_persistent();
        let input: Vec<f64> = (0..cfg.time_lag).map(|i| (i as f64 * 0.9).sin() * 0.7).collect();
        let target = vec![0.3];
        let pred = model
            .forward_window(&mut g, &input, Some(&target), true, &mut rng)
            .unwrap();
        let t = g.leaf(1, 1, target).unwrap();
        let loss = g.mse(pred, t).unwrap();
        g.backward(loss).unwrap();
        let wanted = format!("dec.b{}.ffn.lin2.w", cfg.n_decoder_blocks - 1);
        for p in model.params() {
            if g.name(p).unwrap() == Some(wanted.as_str()) {
                let grad = g.grad(p).unwrap().expect("parameter gradient");
                return grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            }
        }
        unreachable!("parameter {wanted} exists by construction");
    }

    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[v.len() / 2] + v[(v.len() - 1) / 2])
    };
    let mut pre: Vec<f64> = (0..10).map(|s| grad_norm(NormPlacement::PreLn, s)).collect();
    let mut post: Vec<f64> = (0..10).map(|s| grad_norm(NormPlacement::PostLn, s)).collect();
    let (mp, mq) = (median(&mut pre), median(&mut post));
    verdict(
        "norm-placement-direction",
        mq > mp,
        &format!("median post {mq:.3e} not larger than pre {mp:.3e}"),
    );
}

// --- 5. overfit capability ---------------------------------------------

/// The default Pre-LN transformer memorizes a 100-point sine (lag 7,
/// horizon 1) to train MSE < 1e-3 within 300 epochs; each family does the
/// same on a 30-point series within its default epoch budget. Dropout is
/// disabled: a memorization target measures capacity, not regularization.
#[test]
fn overfit_capability() {
    let mut failures = Vec::new();

    let sine = synthetic::sine_series(100, 25.0, 200.0, 80.0, date0());
    let cfg = cfg_from(&[
        "model.family=transformer",
        "model.dropout=0.0",
        "train.epochs=300",
        "train.batch_size=16",
        "sched.warmup=300",
    ]);
    let data = WindowedDataset::memorize(&sine, 7, 1, 1).unwrap();
    let result = fit(&cfg, &data, 0).unwrap();
    let best = result.train_mse.iter().cloned().fold(f64::INFINITY, f64::min);
    if best >= 1e-3 {
        failures.push(format!("transformer sine-100 best train MSE {best:.3e}"));
    }

    // 30-point memorization for every family, within default epoch budgets
    // (300 transformer, 2000 baselines); smaller caps below stay inside them.
    let short = synthetic::sine_series(30, 12.0, 150.0, 60.0, date0());
    let family_caps = [
        (ModelFamily::Transformer, vec![
            "model.family=transformer",
            "model.dropout=0.0",
            "train.epochs=300",
            "train.batch_size=8",
            "sched.warmup=100",
        ]),
        (ModelFamily::Lstm, vec!["model.family=lstm", "train.epochs=800"]),
        (ModelFamily::Rnn, vec!["model.family=rnn", "train.epochs=800"]),
    ];
    for (family, pairs) in family_caps {
        let cfg = cfg_from(&pairs);
        let data = WindowedDataset::memorize(&short, 7, 1, 1).unwrap();
        let result = fit(&cfg, &data, 0).unwrap();
        let best = result.train_mse.iter().cloned().fold(f64::INFINITY, f64::min);
        if best >= 1e-3 {
            failures.push(format!("{} sine-30 best train MSE {best:.3e}", family.label()));
        }
    }

    verdict("overfit-capability", failures.is_empty(), &failures.join("; "));
}

// --- 6. horizon degradation trend --------------------------------------

/// Mean MAPE over 10 seeded trials does not improve as the forecast horizon
/// grows through {1, 2, 4, 7} on a 750-point noisy wave; one adjacent
/// inversion of at most 5% relative is tolerated as trial noise.
#[test]
fn horizon_trend() {
    let records = synthetic::noisy_wave(750, 7, date0());
    let cfg = cfg_from(&[
        "model.family=transformer",
        "model.d_model=16",
        "model.n_heads=2",
        "model.n_encoder_blocks=1",
        "model.n_decoder_blocks=1",
        "model.d_ff=32",
        "model.d_prelayer=16",
        "model.d_postlayer=16",
        "model.dropout=0.0",
        "sched.kind=constant",
        "optim.kind=adam",
        "optim.lr=0.01",
        "train.epochs=10",
        "train.batch_size=32",
        "train.n_trials=10",
        "sweep.axis=horizon",
        "sweep.values=1,2,4,7",
        "sweep.placements=pre",
    ]);
    let cells = plan_sweep(&cfg).unwrap();
    let outcomes = run_cells(&cells, &records).unwrap();
    let mapes: Vec<f64> = outcomes
        .iter()
        .map(|o| o.aggregate.as_ref().expect("cell trained").mean_mape)
        .collect();

    println!("horizon {{1,2,4,7}} mean MAPE over 10 trials: {mapes:?}");
    let mut inversions = Vec::new();
    for i in 0..mapes.len() - 1 {
        if mapes[i + 1] < mapes[i] {
            inversions.push((i, (mapes[i] - mapes[i + 1]) / mapes[i]));
        }
    }
    let pass = inversions.is_empty()
        || (inversions.len() == 1 && inversions[0].1 <= 0.05);
    verdict(
        "horizon-trend",
        pass,
        &format!("mean MAPE by horizon {{1,2,4,7}} = {mapes:?}, inversions {inversions:?}"),
    );
}

// --- 7. pipeline oracles -------------------------------------------------

/// Normalization round-trips to 1e-12, the 750-day series splits into
/// 483/207/60 days, and MAPE reproduces hand-computed cases exactly.
#[test]
fn pipeline_oracles() {
    let mut failures = Vec::new();

    let records = synthetic::noisy_wave(750, 3, date0());
    let data = WindowedDataset::build(
        &records,
        7,
        1,
        1,
        &SplitSpec { test_days: 60, train_frac: 0.70 },
    )
    .unwrap();
    let (tr, ev, te) = (
        data.split.train.len(),
        data.split.eval.len(),
        data.split.test.len(),
    );
    if (tr, ev, te) != (483, 207, 60) {
        failures.push(format!("split 750 -> {tr}/{ev}/{te}, wanted 483/207/60"));
    }

    let matrix: Vec<f64> = (0..40).map(|i| 37.0 + (i as f64 * 1.7).sin() * 12.0).collect();
    let norm = NormalizationParams::fit(&matrix, 2, 0..15).unwrap();
    for (i, &v) in matrix.iter().enumerate() {
        let f = i % 2;
        let rt = norm.denormalize(f, norm.normalize(f, v));
        if (rt - v).abs() >= 1e-12 {
            failures.push(format!("round trip {v} -> {rt} (err {:.2e})", (rt - v).abs()));
            break;
        }
    }

    let hand = mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap();
    if (hand - 10.0).abs() >= 1e-12 {
        failures.push(format!("mape([100,200],[110,180]) = {hand}, wanted 10"));
    }
    let exactly = mape(&[50.0], &[50.0]).unwrap();
    if exactly != 0.0 {
        failures.push(format!("mape of a perfect forecast = {exactly}"));
    }
    if mape(&[0.0], &[1.0]).is_ok() {
        failures.push("mape accepted a zero actual".into());
    }

    verdict("pipeline-oracles", failures.is_empty(), &failures.join("; "));
}

// --- 8. harness structure and determinism --------------------------------

/// Every shipped config plans the advertised grid, and a seeded sweep is
/// bitwise reproducible in everything but wall-clock columns.
#[test]
fn harness_structure() {
    let mut failures = Vec::new();
    let configs = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");

    let planned = |file: &str| -> Result<Vec<(String, String)>, seqcast::Error> {
        let raw = RawConfig::from_file(&configs.join(file))?;
        let cfg = ExperimentConfig::resolve(&raw)?;
        let cells = plan_sweep(&cfg)?;
        Ok(cells
            .iter()
            .map(|c| (c.value.clone(), format!("{:?}", c.placement)))
            .collect())
    };

    let grids = [
        ("sweep_d_model.conf", 8),
        ("sweep_blocks.conf", 10),
        ("sweep_dims.conf", 12),
        ("sweep_lag.conf", 8),
        ("sweep_horizon.conf", 4),
        ("sweep_optimizer.conf", 7),
        ("features.conf", 2),
    ];
    for (file, want) in grids {
        match planned(file) {
            Ok(cells) if cells.len() == want => {}
            Ok(cells) => failures.push(format!("{file} planned {} cells, wanted {want}", cells.len())),
            Err(e) => failures.push(format!("{file}: {e}")),
        }
    }

    match RawConfig::from_file(&configs.join("compare.conf")).and_then(|r| plan_compare(&r)) {
        Ok(cells) => {
            let families: Vec<&str> = cells.iter().map(|c| c.value.as_str()).collect();
            if families != ["transformer", "lstm", "rnn"] {
                failures.push(format!("compare cells {families:?}"));
            }
        }
        Err(e) => failures.push(format!("compare.conf: {e}")),
    }
    if let Err(e) = RawConfig::from_file(&configs.join("default.conf"))
        .and_then(|r| ExperimentConfig::resolve(&r))
    {
        failures.push(format!("default.conf: {e}"));
    }

    // Same seed, same bytes. Two runs of a small sweep must agree on every
    // output byte outside the wall_ms column.
    let records = synthetic::sine_series(90, 30.0, 100.0, 40.0, date0());
    let cfg = cfg_from(&[
        "model.family=rnn",
        "model.hidden_size=4",
        "data.test_days=10",
        "train.epochs=2",
        "train.n_trials=2",
        "sweep.axis=time_lag",
        "sweep.values=4,7",
    ]);
    let strip_wall = |csv: &str| -> String {
        csv.lines()
            .map(|line| {
                let mut cols: Vec<&str> = line.split(',').collect();
                if cols.len() > 9 {
                    cols.remove(9);
                }
                cols.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let run_once = |tag: &str| -> String {
        let cells = plan_sweep(&cfg).unwrap();
        let outcomes = run_cells(&cells, &records).unwrap();
        let dir = std::env::temp_dir().join(format!("seqcast-acc-{}-{tag}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sweep.csv");
        write_sweep_csv(&path, &outcomes).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::remove_dir_all(&dir).unwrap();
        strip_wall(&text)
    };
    let (a, b) = (run_once("a"), run_once("b"));
    if a != b {
        failures.push("two seeded sweep runs differ outside wall_ms".into());
    }

    verdict("harness-structure", failures.is_empty(), &failures.join("; "));
}
