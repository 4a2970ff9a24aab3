//! MAPE and multi-trial aggregation.
//!
//! All error figures are computed on denormalized (raw-unit) values. MAPE is
//! scale-invariant, so this matters only for readability of reports, but the
//! contract is stated here once instead of at every call site.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Mean absolute percentage error: `(1/n) * sum |a_t - p_t| / |a_t| * 100`.
///
/// A zero actual is an error. Case counts in scope are positive, and an
/// epsilon fudge would silently distort comparisons between runs.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::Contract(format!(
            "mape needs equal lengths, got {} actuals and {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Contract("mape of an empty series".into()));
    }
    let mut sum = 0.0;
    for (t, (&a, &p)) in actual.iter().zip(predicted).enumerate() {
        if a == 0.0 {
            return Err(Error::Numeric(format!(
                "mape division by zero: actual value at position {t} is 0"
            )));
        }
        sum += ((a - p) / a).abs();
    }
    Ok(sum * 100.0 / actual.len() as f64)
}

/// How the standard deviation over trials is computed. The reporting
/// protocol treats the trial set as the whole population, so `Population`
/// is the default; `Sample` applies the Bessel correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StdMode {
    #[default]
    Population,
    Sample,
}

impl std::str::FromStr for StdMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "population" => Ok(StdMode::Population),
            "sample" => Ok(StdMode::Sample),
            other => Err(Error::Config(format!(
                "unknown std mode {other:?}, expected population or sample"
            ))),
        }
    }
}

/// Mean and standard deviation of a non-empty slice. Identical values give a
/// std of exactly 0 regardless of how their mean rounds.
pub fn mean_std(values: &[f64], mode: StdMode) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.iter().all(|&v| v == values[0]) {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let denom = match mode {
        StdMode::Population => n,
        StdMode::Sample => n - 1.0,
    };
    (mean, (ss / denom).sqrt())
}

/// One day of one trial's test-split evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayPrediction {
    pub date: NaiveDate,
    pub actual: f64,
    pub predicted: f64,
}

/// One trial's evaluation: per-day denormalized predictions and the MAPE
/// over them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub days: Vec<DayPrediction>,
    pub mape: f64,
    pub trial_id: usize,
    pub seed: u64,
}

impl EvalReport {
    pub fn new(days: Vec<DayPrediction>, trial_id: usize, seed: u64) -> Result<Self> {
        let actual: Vec<f64> = days.iter().map(|d| d.actual).collect();
        let predicted: Vec<f64> = days.iter().map(|d| d.predicted).collect();
        let mape = mape(&actual, &predicted)?;
        Ok(EvalReport {
            days,
            mape,
            trial_id,
            seed,
        })
    }
}

/// Per-day aggregate across trials: mean prediction with its min/max band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayBand {
    pub date: NaiveDate,
    pub actual: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Multi-trial summary: mean and std of trial MAPEs plus the per-day band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub trials: Vec<EvalReport>,
    pub mean_mape: f64,
    pub std_mape: f64,
    pub n_trials: usize,
    pub band: Vec<DayBand>,
}

pub fn aggregate(reports: Vec<EvalReport>, mode: StdMode) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::Contract("aggregate of zero trial reports".into()));
    }
    let n_days = reports[0].days.len();
    for r in &reports[1..] {
        if r.days.len() != n_days {
            return Err(Error::Contract(format!(
                "trial {} evaluated {} days, trial {} evaluated {}",
                reports[0].trial_id,
                n_days,
                r.trial_id,
                r.days.len()
            )));
        }
    }
    let mapes: Vec<f64> = reports.iter().map(|r| r.mape).collect();
    let (mean_mape, std_mape) = mean_std(&mapes, mode);
    let band = (0..n_days)
        .map(|d| {
            let preds: Vec<f64> = reports.iter().map(|r| r.days[d].predicted).collect();
            let (mean, _) = mean_std(&preds, StdMode::Population);
            DayBand {
                date: reports[0].days[d].date,
                actual: reports[0].days[d].actual,
                mean,
                min: preds.iter().cloned().fold(f64::INFINITY, f64::min),
                max: preds.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Ok(AggregateReport {
        n_trials: reports.len(),
        trials: reports,
        mean_mape,
        std_mape,
        band,
    })
}
