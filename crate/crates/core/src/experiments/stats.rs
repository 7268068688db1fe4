use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};

/// Summary of a list of losses. `sd` is the sample (n - 1) deviation and
/// `spread` is `(mean - min) / sd`, absent when `sd` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub spread: Option<f64>,
}

pub fn loss_stats(losses: &[f64]) -> Result<LossStats> {
    let n = losses.len();
    if n < 2 {
        return Err(ExperimentError::TooFew { needed: 2, found: n });
    }
    if losses.iter().any(|v| !v.is_finite()) {
        return Err(ExperimentError::Config("losses must be finite".into()));
    }
    let mean = losses.iter().sum::<f64>() / n as f64;
    let var = losses.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let (min, max) = (sorted[0], sorted[n - 1]);
    Ok(LossStats {
        count: n,
        mean,
        median,
        sd,
        min,
        max,
        range: max - min,
        spread: (sd > 0.0).then(|| (mean - min) / sd),
    })
}

/// Pearson correlation at one lag; `None` when a window is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagCorrelation {
    pub lag: i64,
    pub correlation: Option<f64>,
}

/// For lag `l >= 0` correlates `x[0..n-l]` with `y[l..n]`; negative lags
/// swap the roles of `x` and `y`. Lags run from `-max_lag` to `max_lag`.
pub fn lagged_correlation(x: &[f64], y: &[f64], max_lag: usize) -> Result<Vec<LagCorrelation>> {
    if x.len() != y.len() {
        return Err(ExperimentError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < max_lag + 3 {
        return Err(ExperimentError::TooFew {
            needed: max_lag + 3,
            found: n,
        });
    }
    let lags = -(max_lag as i64)..=max_lag as i64;
    Ok(lags
        .map(|lag| {
            let l = lag.unsigned_abs() as usize;
            let (a, b) = if lag >= 0 { (&x[..n - l], &y[l..]) } else { (&y[..n - l], &x[l..]) };
            LagCorrelation {
                lag,
                correlation: pearson(a, b),
            }
        })
        .collect())
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}
