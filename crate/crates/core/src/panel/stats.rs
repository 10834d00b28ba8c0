use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::WeeklyPanel;
use crate::error::{Error, Result};

/// Minimum observed cells for a keyword's coefficient of variation to count
/// as defined.
pub const MIN_CELLS_FOR_CV: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordStats {
    pub n_observed: usize,
    pub mean: f64,
    /// Sample (n-1) standard deviation.
    pub std: f64,
    /// `std / mean`, computed whenever both are finite and mean != 0.
    pub cv: f64,
    /// False when mean is 0 or fewer than [`MIN_CELLS_FOR_CV`] cells were
    /// observed; such keywords are excluded from frontier segmentation.
    pub cv_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledStats {
    pub count: usize,
    pub mean: f64,
    pub max: f64,
    pub p99: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelStats {
    pub range: Range<usize>,
    pub keywords: Vec<KeywordStats>,
    pub pooled: PooledStats,
}

/// Per-keyword and pooled CPC statistics over observed, non-imputed cells in
/// the week-index range.
pub fn compute_stats(panel: &WeeklyPanel, range: Range<usize>) -> Result<PanelStats> {
    if range.is_empty() || range.end > panel.n_weeks() {
        return Err(Error::Config(format!(
            "stats range {range:?} is empty or outside the {}-week panel",
            panel.n_weeks()
        )));
    }
    let mut pooled = Vec::new();
    let keywords = (0..panel.n_keywords())
        .map(|k| {
            let vals: Vec<f64> = range.clone().filter_map(|t| panel.target(k, t)).collect();
            pooled.extend_from_slice(&vals);
            keyword_stats(&vals)
        })
        .collect();

    pooled.sort_by(f64::total_cmp);
    let count = pooled.len();
    let pooled = PooledStats {
        count,
        mean: mean(&pooled),
        max: pooled.last().copied().unwrap_or(f64::NAN),
        p99: percentile(&pooled, 99.0),
        skewness: skewness(&pooled),
    };
    Ok(PanelStats {
        range,
        keywords,
        pooled,
    })
}

fn keyword_stats(vals: &[f64]) -> KeywordStats {
    let n = vals.len();
    let m = mean(vals);
    let std = if n >= 2 {
        (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    let cv = if m != 0.0 { std / m } else { f64::NAN };
    KeywordStats {
        n_observed: n,
        mean: m,
        std,
        cv,
        cv_defined: n >= MIN_CELLS_FOR_CV && m != 0.0 && cv.is_finite(),
    }
}

fn mean(vals: &[f64]) -> f64 {
    if vals.is_empty() {
        f64::NAN
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Percentile of sorted data with linear interpolation between order
/// statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q / 100.0 * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Moment skewness `m3 / m2^(3/2)`; zero for constant data.
pub fn skewness(vals: &[f64]) -> f64 {
    let n = vals.len();
    if n == 0 {
        return f64::NAN;
    }
    let m = mean(vals);
    let m2 = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    let m3 = vals.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n as f64;
    if m2 == 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::Grid;
    use proptest::prelude::*;

    fn panel_from(rows: &[Vec<f64>]) -> WeeklyPanel {
        let t = rows[0].len();
        let mut p = WeeklyPanel::with_shape(
            (0..rows.len()).map(|i| format!("kw {i}")).collect(),
            {
                let w0 = crate::panel::IsoWeek::new(2021, 1).unwrap();
                let mut w = vec![w0];
                for _ in 1..t {
                    let last = *w.last().unwrap();
                    w.push(last.succ());
                }
                w
            },
        );
        let flat: Vec<Option<f64>> = rows.iter().flatten().map(|&v| Some(v)).collect();
        p.cpc = Grid::from_vec(rows.len(), t, flat);
        p
    }

    #[test]
    fn constant_series() {
        let s = compute_stats(&panel_from(&[vec![2.0; 4]]), 0..4).unwrap();
        let k = &s.keywords[0];
        assert_eq!((k.mean, k.cv, k.cv_defined), (2.0, 0.0, true));
    }

    #[test]
    fn two_point_series() {
        let s = compute_stats(&panel_from(&[vec![1.0, 3.0]]), 0..2).unwrap();
        let k = &s.keywords[0];
        assert_eq!(k.mean, 2.0);
        assert!((k.std - 2f64.sqrt()).abs() < 1e-12);
        assert!((k.cv - 0.7071067811865476).abs() < 1e-12);
        // fewer than four cells: flagged
        assert!(!k.cv_defined);
    }

    #[test]
    fn imputed_cells_are_ignored() {
        let mut p = panel_from(&[vec![1.0, 100.0, 3.0, 5.0, 7.0]]);
        p.imputed.set(0, 1, true);
        let s = compute_stats(&p, 0..5).unwrap();
        assert_eq!(s.keywords[0].n_observed, 4);
        assert_eq!(s.keywords[0].mean, 4.0);
    }

    #[test]
    fn empty_range_is_fatal() {
        assert!(compute_stats(&panel_from(&[vec![1.0; 3]]), 1..1).is_err());
        assert!(compute_stats(&panel_from(&[vec![1.0; 3]]), 0..4).is_err());
    }

    #[test]
    fn symmetric_skewness_is_zero() {
        let s = compute_stats(&panel_from(&[vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![0.5, 3.0, 5.5, 2.0, 4.0]]), 0..5)
            .unwrap();
        assert!(s.pooled.skewness.abs() < 1e-9);
    }

    #[test]
    fn percentile_interpolates() {
        let v: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 99.0), 99.0);
        assert_eq!(percentile(&[1.0, 2.0], 50.0), 1.5);
    }

    proptest! {
        #[test]
        fn skewness_matches_third_moment(vals in proptest::collection::vec(0.01f64..50.0, 3..100)) {
            let n = vals.len() as f64;
            let mut sum = 0.0;
            for v in &vals { sum += v; }
            let m = sum / n;
            let (mut s2, mut s3) = (0.0, 0.0);
            for v in &vals {
                let d = v - m;
                s2 += d * d;
                s3 += d * d * d;
            }
            let expected = (s3 / n) / (s2 / n).powf(1.5);
            let got = skewness(&vals);
            prop_assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        }
    }
}
