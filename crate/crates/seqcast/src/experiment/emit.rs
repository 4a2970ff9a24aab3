//! Result files: sweep.csv, per-run prediction CSVs, and SVG plots.
//!
//! Every writer is deterministic: rerunning the same seeds produces byte-
//! identical files except for the wall_ms column, which is the only place
//! wall-clock time appears.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::Error;
use crate::metrics::{DayBand, EvalReport};
use crate::Result;

use super::sweep::{best_cell, CellOutcome};

pub const SWEEP_HEADER: [&str; 11] = [
    "axis",
    "value",
    "placement",
    "trial",
    "seed",
    "mape",
    "mean_mape",
    "std_mape",
    "epochs",
    "wall_ms",
    "status",
];

/// Commas and newlines would break the one-line-per-record contract.
fn sanitize(s: &str) -> String {
    s.replace(',', ";").replace('\n', "; ")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Data(format!("{}: {e}", path.display()))
}

/// The flat sweep results table. Each cell contributes one row per trial
/// and one summary row; the lowest-mean-MAPE cell's summary is flagged
/// `best`. Cells that cover both norm placements additionally get a
/// placement-mean row. Failed cells get a single `error:` row.
pub fn write_sweep_csv(path: &Path, outcomes: &[CellOutcome]) -> Result<()> {
    let best = best_cell(outcomes);
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(SWEEP_HEADER).map_err(|e| csv_err(path, e))?;

    for (i, o) in outcomes.iter().enumerate() {
        let pl = o.placement_label();
        for t in &o.trials {
            w.write_record([
                o.axis.as_str(),
                o.value.as_str(),
                pl,
                &t.trial_id.to_string(),
                &t.seed.to_string(),
                &t.report.mape.to_string(),
                "",
                "",
                &o.epochs.to_string(),
                &t.wall_ms.to_string(),
                "ok",
            ])
            .map_err(|e| csv_err(path, e))?;
        }
        match (&o.aggregate, &o.error) {
            (Some(agg), _) => {
                let bt = o.best_trial().expect("aggregate implies trials");
                w.write_record([
                    o.axis.as_str(),
                    o.value.as_str(),
                    pl,
                    &format!("best_of_{}", o.trials.len()),
                    &bt.seed.to_string(),
                    &bt.report.mape.to_string(),
                    &agg.mean_mape.to_string(),
                    &agg.std_mape.to_string(),
                    &o.epochs.to_string(),
                    &o.wall_ms.to_string(),
                    if best == Some(i) { "best" } else { "summary" },
                ])
                .map_err(|e| csv_err(path, e))?;
            }
            (None, Some(err)) => {
                w.write_record([
                    o.axis.as_str(),
                    o.value.as_str(),
                    pl,
                    "",
                    "",
                    "",
                    "",
                    "",
                    &o.epochs.to_string(),
                    &o.wall_ms.to_string(),
                    &format!("error: {}", sanitize(&err.to_string())),
                ])
                .map_err(|e| csv_err(path, e))?;
            }
            (None, None) => unreachable!("cell without aggregate or error"),
        }
    }

    // Placement means: one row per (axis, value) whose pre and post cells
    // both succeeded, in first-appearance order.
    let mut keys: Vec<(String, String)> = Vec::new();
    for o in outcomes {
        let key = (o.axis.clone(), o.value.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for (axis, value) in keys {
        let means: Vec<f64> = outcomes
            .iter()
            .filter(|o| o.axis == axis && o.value == value && o.placement.is_some())
            .filter_map(|o| o.aggregate.as_ref().map(|a| a.mean_mape))
            .collect();
        if means.len() == 2 {
            let epochs = outcomes
                .iter()
                .find(|o| o.axis == axis && o.value == value)
                .expect("key came from outcomes")
                .epochs;
            w.write_record([
                axis.as_str(),
                value.as_str(),
                "mean",
                "",
                "",
                "",
                &(0.5 * (means[0] + means[1])).to_string(),
                "",
                &epochs.to_string(),
                "",
                "summary",
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-date prediction bands across trials. Within one trial, predictions
/// for the same date (overlapping multi-step windows) are averaged first;
/// the band is then the mean/min/max of those per-trial values.
pub fn per_day_bands(trials: &[EvalReport]) -> Result<Vec<DayBand>> {
    if trials.is_empty() {
        return Err(Error::Contract("per_day_bands of zero trials".into()));
    }
    let mut by_date: BTreeMap<NaiveDate, (f64, Vec<f64>)> = BTreeMap::new();
    for tr in trials {
        let mut per_trial: BTreeMap<NaiveDate, (f64, f64, usize)> = BTreeMap::new();
        for d in &tr.days {
            let e = per_trial.entry(d.date).or_insert((d.actual, 0.0, 0));
            e.1 += d.predicted;
            e.2 += 1;
        }
        for (date, (actual, sum, n)) in per_trial {
            by_date
                .entry(date)
                .or_insert((actual, Vec::new()))
                .1
                .push(sum / n as f64);
        }
    }
    Ok(by_date
        .into_iter()
        .map(|(date, (actual, preds))| {
            let mean = preds.iter().sum::<f64>() / preds.len() as f64;
            let min = preds.iter().copied().fold(f64::INFINITY, f64::min);
            let max = preds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            DayBand {
                date,
                actual,
                mean,
                min,
                max,
            }
        })
        .collect())
}

pub fn write_predictions_csv(path: &Path, bands: &[DayBand]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["date", "actual", "mean_pred", "min_pred", "max_pred"])
        .map_err(|e| csv_err(path, e))?;
    for b in bands {
        w.write_record([
            b.date.to_string(),
            b.actual.to_string(),
            b.mean.to_string(),
            b.min.to_string(),
            b.max.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const PLOT_W: f64 = 800.0;
const PLOT_H: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 38.0;

/// Minimal self-contained line chart: shaded min-max band, actual and mean
/// prediction series. Coordinates are rounded to 0.01, so output is stable.
pub fn write_plot_svg(path: &Path, bands: &[DayBand], title: &str) -> Result<()> {
    if bands.is_empty() {
        return Err(Error::Contract("plot of zero days".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for b in bands {
        for v in [b.actual, b.min, b.max] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 1.0 };
    let (lo, hi) = (lo - pad, hi + pad);
    let iw = PLOT_W - MARGIN_L - MARGIN_R;
    let ih = PLOT_H - MARGIN_T - MARGIN_B;
    let x = |i: usize| {
        if bands.len() == 1 {
            MARGIN_L + iw / 2.0
        } else {
            MARGIN_L + iw * i as f64 / (bands.len() - 1) as f64
        }
    };
    let y = |v: f64| MARGIN_T + ih * (1.0 - (v - lo) / (hi - lo));
    let polyline = |vals: &mut dyn Iterator<Item = (usize, f64)>| {
        vals.map(|(i, v)| format!("{:.2},{:.2}", x(i), y(v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let band_points = {
        let mut pts: Vec<String> = bands
            .iter()
            .enumerate()
            .map(|(i, b)| format!("{:.2},{:.2}", x(i), y(b.min)))
            .collect();
        pts.extend(
            bands
                .iter()
                .enumerate()
                .rev()
                .map(|(i, b)| format!("{:.2},{:.2}", x(i), y(b.max))),
        );
        pts.join(" ")
    };
    let actual = polyline(&mut bands.iter().enumerate().map(|(i, b)| (i, b.actual)));
    let mean = polyline(&mut bands.iter().enumerate().map(|(i, b)| (i, b.mean)));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {PLOT_W} {PLOT_H}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{PLOT_W}\" height=\"{PLOT_H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{MARGIN_L}\" y=\"18\" font-size=\"14\">{title}</text>\n"
    ));
    svg.push_str(&format!(
        "<polygon points=\"{band_points}\" fill=\"#aac8e8\" fill-opacity=\"0.5\" stroke=\"none\"/>\n"
    ));
    svg.push_str(&format!(
        "<polyline points=\"{actual}\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1.5\"/>\n"
    ));
    svg.push_str(&format!(
        "<polyline points=\"{mean}\" fill=\"none\" stroke=\"#1f6fc4\" stroke-width=\"1.5\" \
         stroke-dasharray=\"5,3\"/>\n"
    ));
    // Axes and extent labels.
    let x0 = MARGIN_L;
    let x1 = PLOT_W - MARGIN_R;
    let y0 = MARGIN_T;
    let y1 = PLOT_H - MARGIN_B;
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y1}\" x2=\"{x1}\" y2=\"{y1}\" stroke=\"#555555\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"#555555\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.0}</text>\n",
        x0 - 6.0,
        y1,
        lo + pad
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.0}</text>\n",
        x0 - 6.0,
        y0 + 10.0,
        hi - pad
    ));
    svg.push_str(&format!(
        "<text x=\"{x0}\" y=\"{:.2}\">{}</text>\n",
        y1 + 16.0,
        bands[0].date
    ));
    svg.push_str(&format!(
        "<text x=\"{x1}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
        y1 + 16.0,
        bands[bands.len() - 1].date
    ));
    svg.push_str(
        "<g font-size=\"11\"><text x=\"690\" y=\"22\" fill=\"#222222\">actual</text>\
         <text x=\"740\" y=\"22\" fill=\"#1f6fc4\">mean</text></g>\n",
    );
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

fn run_name(o: &CellOutcome) -> String {
    let mut name = format!("{}_{}", o.axis, o.value);
    if o.placement.is_some() {
        name.push('_');
        name.push_str(o.placement_label());
    }
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Write the sweep table plus per-cell prediction files into `out_dir`.
/// Returns the paths written.
pub fn emit_outputs(
    out_dir: &Path,
    outcomes: &[CellOutcome],
    plot: bool,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let sweep_path = out_dir.join("sweep.csv");
    write_sweep_csv(&sweep_path, outcomes)?;
    written.push(sweep_path);
    for o in outcomes {
        let Some(agg) = &o.aggregate else { continue };
        let bands = per_day_bands(&agg.trials)?;
        let name = run_name(o);
        let pred_path = out_dir.join(format!("predictions_{name}.csv"));
        write_predictions_csv(&pred_path, &bands)?;
        written.push(pred_path);
        if plot {
            let title = format!(
                "{} = {} ({}), mean MAPE {:.2}",
                o.axis,
                o.value,
                o.placement_label(),
                agg.mean_mape
            );
            let plot_path = out_dir.join(format!("plot_{name}.svg"));
            write_plot_svg(&plot_path, &bands, &title)?;
            written.push(plot_path);
        }
    }
    Ok(written)
}
