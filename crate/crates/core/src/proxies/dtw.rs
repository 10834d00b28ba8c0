use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::WeeklyPanel;

pub const DEFAULT_BAND: usize = 8;
pub const DEFAULT_NEIGHBORS: usize = 10;
pub const MIN_DTW_WEEKS: usize = 8;

/// Banded DTW between equal-length series: squared pointwise cost,
/// symmetric match/insert/delete steps, cells with `|i - j| > band` are
/// unreachable. Returns the square root of the accumulated cost.
pub fn dtw_distance(a: &[f64], b: &[f64], band: usize) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape(format!(
            "DTW needs equal non-empty series, got lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    let mut prev = vec![f64::INFINITY; n + 1];
    let mut curr = vec![f64::INFINITY; n + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        curr.fill(f64::INFINITY);
        let lo = i.saturating_sub(band).max(1);
        let hi = (i + band).min(n);
        for j in lo..=hi {
            let d = a[i - 1] - b[j - 1];
            let best = prev[j].min(curr[j - 1]).min(prev[j - 1]);
            curr[j] = d * d + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let total = prev[n];
    if !total.is_finite() {
        return Err(Error::Numerical("DTW found no admissible warping path".into()));
    }
    Ok(total.sqrt())
}

/// Z-normalize with the population standard deviation; constant series map
/// to zeros.
pub fn z_normalize(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd <= 1e-12 * mean.abs().max(1.0) {
        vec![0.0; x.len()]
    } else {
        x.iter().map(|v| (v - mean) / sd).collect()
    }
}

/// Behavioral neighbors of every keyword by banded DTW over z-normalized
/// CPC trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwNeighborhood {
    pub band: usize,
    pub m: usize,
    /// Week-index range the trajectories were taken from.
    pub range: Range<usize>,
    /// Per keyword, `(neighbor, distance)` ascending by distance then id.
    pub neighbors: Vec<Vec<(usize, f64)>>,
}

/// Build DTW neighborhoods from CPC over `range` only (the training weeks),
/// so later panel values cannot influence them.
pub fn build_dtw_neighborhoods(
    panel: &WeeklyPanel,
    range: Range<usize>,
    m: usize,
    band: usize,
) -> Result<DtwNeighborhood> {
    if range.len() < MIN_DTW_WEEKS || range.end > panel.n_weeks() {
        return Err(Error::Config(format!(
            "DTW range {range:?} must lie in the panel and span at least {MIN_DTW_WEEKS} weeks"
        )));
    }
    let n = panel.n_keywords();
    if m == 0 || m >= n {
        return Err(Error::Config(format!("DTW neighbor count {m} must be in 1..{n}")));
    }
    let series: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            range
                .clone()
                .map(|t| {
                    panel.cpc_value(k, t).ok_or_else(|| {
                        Error::Data(format!("keyword {:?} has a CPC gap; impute first", panel.keywords[k]))
                    })
                })
                .collect::<Result<Vec<f64>>>()
                .map(|s| z_normalize(&s))
        })
        .collect::<Result<_>>()?;

    let dist = pairwise(&series, band)?;
    let neighbors = (0..n)
        .map(|i| {
            let mut row: Vec<(usize, f64)> = (0..n).filter(|&j| j != i).map(|j| (j, dist[i * n + j])).collect();
            row.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            row.truncate(m);
            row
        })
        .collect();
    Ok(DtwNeighborhood {
        band,
        m,
        range,
        neighbors,
    })
}

/// Full symmetric distance matrix, upper triangle computed in parallel.
fn pairwise(series: &[Vec<f64>], band: usize) -> Result<Vec<f64>> {
    let n = series.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| dtw_distance(&series[i], &series[j], band))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut d = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive enumeration of every monotone warping path.
    fn enumerate_paths(a: &[f64], b: &[f64]) -> f64 {
        fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
            let d = a[i] - b[j];
            let acc = acc + d * d;
            if i + 1 == a.len() && j + 1 == b.len() {
                *best = best.min(acc);
                return;
            }
            if i + 1 < a.len() {
                walk(a, b, i + 1, j, acc, best);
            }
            if j + 1 < b.len() {
                walk(a, b, i, j + 1, acc, best);
            }
            if i + 1 < a.len() && j + 1 < b.len() {
                walk(a, b, i + 1, j + 1, acc, best);
            }
        }
        let mut best = f64::INFINITY;
        walk(a, b, 0, 0, 0.0, &mut best);
        best.sqrt()
    }

    #[test]
    fn identity_is_zero() {
        let x = [1.0, 4.0, 2.0, 8.0];
        for r in 0..5 {
            assert_eq!(dtw_distance(&x, &x, r).unwrap(), 0.0);
        }
    }

    #[test]
    fn small_fixture_matches_enumeration() {
        let a = [0.0, 0.0, 1.0];
        let b = [0.0, 1.0, 1.0];
        assert_eq!(dtw_distance(&a, &b, 2).unwrap(), enumerate_paths(&a, &b));
        assert_eq!(dtw_distance(&a, &b, 2).unwrap(), 0.0);
        assert_eq!(dtw_distance(&a, &b, 0).unwrap(), 1.0);
    }

    #[test]
    fn zero_band_is_euclidean() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 2.0, 5.0, 1.0];
        let euclid = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        assert_eq!(dtw_distance(&a, &b, 0).unwrap(), euclid);
    }

    #[test]
    fn shape_errors() {
        assert!(dtw_distance(&[], &[], 1).is_err());
        assert!(dtw_distance(&[1.0], &[1.0, 2.0], 1).is_err());
    }

    proptest! {
        #[test]
        fn dtw_properties(
            pair in (1usize..8).prop_flat_map(|n| (
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::collection::vec(-5.0f64..5.0, n),
            ))
        ) {
            let (a, b) = pair;
            let n = a.len();
            let full = dtw_distance(&a, &b, n).unwrap();
            prop_assert_eq!(full, enumerate_paths(&a, &b));
            let mut last = f64::INFINITY;
            for r in 0..=n {
                let d = dtw_distance(&a, &b, r).unwrap();
                prop_assert_eq!(d, dtw_distance(&b, &a, r).unwrap());
                prop_assert!(d <= last);
                last = d;
            }
        }
    }

    #[test]
    fn z_normalization() {
        assert_eq!(z_normalize(&[3.0; 5]), vec![0.0; 5]);
        let a = z_normalize(&[1.0, 2.0, 3.0]);
        let b = z_normalize(&[10.0, 20.0, 30.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
