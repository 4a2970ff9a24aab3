//! Deterministic synthetic daily series for tests, examples, and the
//! committed sample dataset.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DailyRecord;

/// Clean sinusoid: `offset + amplitude * sin(2*pi*t/period)`, floored at 1.
/// Deaths and recovered are fixed fractions so multivariate runs work too.
pub fn sine_series(
    n: usize,
    period: f64,
    offset: f64,
    amplitude: f64,
    start: NaiveDate,
) -> Vec<DailyRecord> {
    (0..n)
        .map(|t| {
            let v = offset + amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).sin();
            let positive = v.max(1.0).round() as u64;
            DailyRecord {
                date: start + Days::new(t as u64),
                positive,
                deaths: (positive / 50).max(1),
                recovered: positive / 2,
            }
        })
        .collect()
}

/// Slow wave plus AR(1) noise, seeded, for epidemic-shaped test data. The
/// noise is persistent (phi = 0.78) so the series has realistic short-range
/// structure rather than white jitter.
pub fn noisy_wave(n: usize, seed: u64, start: NaiveDate) -> Vec<DailyRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ar = 0.0f64;
    (0..n)
        .map(|t| {
            let phase = 2.0 * std::f64::consts::PI * t as f64 / 180.0;
            let wave = 900.0 + 600.0 * phase.sin() + 250.0 * (2.3 * phase + 0.7).sin();
            ar = 0.78 * ar + rng.gen_range(-60.0..60.0);
            let positive = (wave + ar).max(1.0).round() as u64;
            let deaths = ((positive as f64) * 0.021 + rng.gen_range(0.0..3.0)).round() as u64;
            let recovered = ((positive as f64) * 0.55 + rng.gen_range(0.0..20.0)).round() as u64;
            DailyRecord {
                date: start + Days::new(t as u64),
                positive,
                deaths,
                recovered,
            }
        })
        .collect()
}
