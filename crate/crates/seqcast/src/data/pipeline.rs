use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::DailyRecord;
use crate::error::Error;
use crate::Result;

/// Normalization target range.
pub const NORM_LO: f64 = -1.0;
pub const NORM_HI: f64 = 1.0;

/// Per-feature min-max parameters, fitted on the training segment only so no
/// information from eval or test days leaks into the scaling. Eval/test
/// values outside the training range map outside [-1, 1]; they are not
/// clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl NormalizationParams {
    /// Fit from the rows of a row-major `len x n_features` matrix restricted
    /// to `segment`.
    pub fn fit(matrix: &[f64], n_features: usize, segment: Range<usize>) -> Result<Self> {
        if segment.is_empty() {
            return Err(Error::Contract(
                "cannot fit normalization on an empty segment".into(),
            ));
        }
        let mut mins = vec![f64::INFINITY; n_features];
        let mut maxs = vec![f64::NEG_INFINITY; n_features];
        for i in segment {
            for f in 0..n_features {
                let v = matrix[i * n_features + f];
                mins[f] = mins[f].min(v);
                maxs[f] = maxs[f].max(v);
            }
        }
        for f in 0..n_features {
            if maxs[f] <= mins[f] {
                return Err(Error::DegenerateRange {
                    min: mins[f],
                    max: maxs[f],
                });
            }
        }
        Ok(NormalizationParams { mins, maxs })
    }

    /// `(v - min) / (max - min) * (HI - LO) + LO`.
    pub fn normalize(&self, feature: usize, v: f64) -> f64 {
        (v - self.mins[feature]) / (self.maxs[feature] - self.mins[feature]) * (NORM_HI - NORM_LO)
            + NORM_LO
    }

    pub fn denormalize(&self, feature: usize, v: f64) -> f64 {
        (v - NORM_LO) / (NORM_HI - NORM_LO) * (self.maxs[feature] - self.mins[feature])
            + self.mins[feature]
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }
}

/// Row-major `len x n_features` matrix of counts as f64, feature order
/// positive, deaths, recovered.
pub fn feature_matrix(records: &[DailyRecord], n_features: usize) -> Result<Vec<f64>> {
    if !(1..=3).contains(&n_features) {
        return Err(Error::Config(format!(
            "n_features must be 1, 2 or 3, got {n_features}"
        )));
    }
    let mut out = Vec::with_capacity(records.len() * n_features);
    for r in records {
        let row = [r.positive as f64, r.deaths as f64, r.recovered as f64];
        out.extend_from_slice(&row[..n_features]);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_days: usize,
    pub train_frac: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_days: 60,
            train_frac: 0.70,
        }
    }
}

/// Contiguous, disjoint index ranges covering the whole series: train from
/// the front, test the final `test_days`, eval in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Range<usize>,
    pub eval: Range<usize>,
    pub test: Range<usize>,
}

pub fn split(len: usize, spec: &SplitSpec) -> Result<Split> {
    if !(0.0 < spec.train_frac && spec.train_frac < 1.0) {
        return Err(Error::Config(format!(
            "train_frac must lie strictly between 0 and 1, got {}",
            spec.train_frac
        )));
    }
    if len <= spec.test_days + 1 {
        return Err(Error::Contract(format!(
            "series of {len} days is too short for a {}-day test split",
            spec.test_days
        )));
    }
    let rem = len - spec.test_days;
    // The epsilon absorbs binary representation error in fractions like
    // 0.70, where 0.70 * 690.0 lands a few ulps below the exact 483.
    let train_len = (spec.train_frac * rem as f64 + 1e-9).floor() as usize;
    if train_len == 0 || train_len == rem {
        return Err(Error::Contract(format!(
            "split of {rem} non-test days at fraction {} leaves an empty segment",
            spec.train_frac
        )));
    }
    Ok(Split {
        train: 0..train_len,
        eval: train_len..rem,
        test: rem..len,
    })
}

/// One supervised pair: `lag x n_features` normalized inputs for days
/// `t0-lag .. t0-1` and `horizon` normalized positive-case targets for days
/// `t0 .. t0+horizon-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub t0: usize,
}

#[derive(Debug, Clone)]
pub struct WindowedDataset {
    pub lag: usize,
    pub horizon: usize,
    pub n_features: usize,
    pub train: Vec<Window>,
    pub eval: Vec<Window>,
    pub test: Vec<Window>,
    pub split: Split,
    pub norm: NormalizationParams,
    pub dates: Vec<NaiveDate>,
    /// Raw (denormalized) positive counts for the whole series.
    pub raw_positive: Vec<f64>,
}

impl WindowedDataset {
    /// Full pipeline: features, split, train-only normalization, windows.
    ///
    /// Train and eval windows are self-contained in their segments (window
    /// count = segment length - lag - horizon + 1). Test windows may draw
    /// their lag context from the tail of the eval segment so that every one
    /// of the final test days has a prediction (count = test_days - horizon
    /// + 1).
    pub fn build(
        records: &[DailyRecord],
        lag: usize,
        horizon: usize,
        n_features: usize,
        split_spec: &SplitSpec,
    ) -> Result<Self> {
        check_lag_horizon(lag, horizon)?;
        let matrix = feature_matrix(records, n_features)?;
        let split = split(records.len(), split_spec)?;
        if split.train.len() < lag + horizon {
            return Err(Error::Contract(format!(
                "train segment of {} days cannot fit lag {lag} plus horizon {horizon}; \
                 the series needs at least {} days",
                split.train.len(),
                min_series_len(lag, horizon, split_spec)
            )));
        }
        if horizon > split.test.len() {
            return Err(Error::Contract(format!(
                "horizon {horizon} exceeds the {}-day test split",
                split.test.len()
            )));
        }
        let norm = NormalizationParams::fit(&matrix, n_features, split.train.clone())?;
        let normed: Vec<f64> = matrix
            .iter()
            .enumerate()
            .map(|(i, &v)| norm.normalize(i % n_features, v))
            .collect();

        let windows_in = |seg: Range<usize>, borrow_context: bool| -> Vec<Window> {
            let first_t0 = if borrow_context {
                seg.start
            } else {
                seg.start + lag
            };
            let mut out = Vec::new();
            let mut t0 = first_t0;
            while t0 + horizon <= seg.end {
                out.push(make_window(&normed, n_features, lag, horizon, t0));
                t0 += 1;
            }
            out
        };

        let dataset = WindowedDataset {
            lag,
            horizon,
            n_features,
            train: windows_in(split.train.clone(), false),
            eval: windows_in(split.eval.clone(), false),
            test: windows_in(split.test.clone(), true),
            split,
            norm,
            dates: records.iter().map(|r| r.date).collect(),
            raw_positive: records.iter().map(|r| r.positive as f64).collect(),
        };
        Ok(dataset)
    }

    /// Memorization pipeline: normalize over the whole series and put every
    /// window in the train set. For capacity checks and overfit smoke tests.
    pub fn memorize(
        records: &[DailyRecord],
        lag: usize,
        horizon: usize,
        n_features: usize,
    ) -> Result<Self> {
        check_lag_horizon(lag, horizon)?;
        let len = records.len();
        if len < lag + horizon {
            return Err(Error::Contract(format!(
                "series of {len} days cannot fit lag {lag} plus horizon {horizon}; \
                 need at least {} days",
                lag + horizon
            )));
        }
        let matrix = feature_matrix(records, n_features)?;
        let norm = NormalizationParams::fit(&matrix, n_features, 0..len)?;
        let normed: Vec<f64> = matrix
            .iter()
            .enumerate()
            .map(|(i, &v)| norm.normalize(i % n_features, v))
            .collect();
        let train: Vec<Window> = (lag..=len - horizon)
            .map(|t0| make_window(&normed, n_features, lag, horizon, t0))
            .collect();
        Ok(WindowedDataset {
            lag,
            horizon,
            n_features,
            train,
            eval: Vec::new(),
            test: Vec::new(),
            split: Split {
                train: 0..len,
                eval: len..len,
                test: len..len,
            },
            norm,
            dates: records.iter().map(|r| r.date).collect(),
            raw_positive: records.iter().map(|r| r.positive as f64).collect(),
        })
    }

    /// Denormalized actual positive counts for a window's target days.
    pub fn actuals(&self, w: &Window) -> &[f64] {
        &self.raw_positive[w.t0..w.t0 + self.horizon]
    }
}

fn check_lag_horizon(lag: usize, horizon: usize) -> Result<()> {
    if lag == 0 || horizon == 0 {
        return Err(Error::Config(format!(
            "lag and horizon must be positive, got lag {lag}, horizon {horizon}"
        )));
    }
    Ok(())
}

fn min_series_len(lag: usize, horizon: usize, spec: &SplitSpec) -> usize {
    // Smallest len with floor(train_frac * (len - test_days)) >= lag + horizon.
    let need = (lag + horizon) as f64;
    spec.test_days + (need / spec.train_frac).ceil() as usize + 1
}

fn make_window(normed: &[f64], n_features: usize, lag: usize, horizon: usize, t0: usize) -> Window {
    let input = normed[(t0 - lag) * n_features..t0 * n_features].to_vec();
    // Feature 0 (positive cases) is the prediction target.
    let target = (t0..t0 + horizon)
        .map(|t| normed[t * n_features])
        .collect();
    Window { input, target, t0 }
}
