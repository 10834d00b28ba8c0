use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.is_empty() || actual.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "metric needs equal non-empty series, got {} and {}",
            actual.len(),
            predicted.len()
        )));
    }
    Ok(())
}

/// One sMAPE term in percent, `200 |p - a| / (|a| + |p|)`, 0 when both are 0.
pub fn smape_term(actual: f64, predicted: f64) -> f64 {
    let den = actual.abs() + predicted.abs();
    if den == 0.0 {
        0.0
    } else {
        // 200 x / x can round one ulp past the bound
        (200.0 * (predicted - actual).abs() / den).min(200.0)
    }
}

/// Symmetric MAPE in percent, range [0, 200].
pub fn smape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    let s: f64 = actual.iter().zip(predicted).map(|(&a, &p)| smape_term(a, p)).sum();
    Ok(s / actual.len() as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    let s: f64 = actual.iter().zip(predicted).map(|(a, p)| (p - a).powi(2)).sum();
    Ok((s / actual.len() as f64).sqrt())
}

/// Mean, sample standard deviation and count; `std` is 0 below two values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std, n }
    }
}
