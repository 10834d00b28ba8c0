//! Chronological splitting, sMAPE/RMSE scoring aggregated across keywords,
//! competitive-frontier segmentation and the feature-family ablation runner.

mod ablation;
mod frontier;
mod metrics;
mod report;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ablation::{forecast_test, run_ablation, AblationInputs, AblationRow, AblationTable, ModelSpec};
pub use frontier::{frontier_segment, median, FrontierSegmentation, Quadrant, MIN_FRONTIER_KEYWORDS};
pub use metrics::{rmse, smape, smape_term, Aggregate};
pub use report::{evaluate, EvalReport, HorizonReport, KeywordScore};

pub const DEFAULT_TEST_FRACTION: f64 = 0.20;

/// Week-index split: `train = 0..test.start`, `test = test.start..n_weeks`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fraction: f64,
    pub train: Range<usize>,
    pub test: Range<usize>,
}

impl SplitSpec {
    pub fn train_end(&self) -> usize {
        self.train.end
    }

    /// Test weeks `w` with `w + h` also a test week.
    pub fn test_origins(&self, h: usize) -> Vec<usize> {
        self.test.clone().filter(|w| w + h < self.test.end).collect()
    }
}

/// The last `ceil(fraction * n_weeks)` weeks are test, the rest train.
pub fn chronological_split(n_weeks: usize, fraction: f64) -> Result<SplitSpec> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("test fraction must lie in (0, 1), got {fraction}")));
    }
    // the epsilon keeps exact products such as 0.5 * 10 from rounding up
    let n_test = (fraction * n_weeks as f64 - 1e-9).ceil().max(0.0) as usize;
    if n_test == 0 || n_test >= n_weeks {
        return Err(Error::Data(format!(
            "a {n_weeks}-week panel cannot hold a train range and {n_test} test weeks"
        )));
    }
    let start = n_weeks - n_test;
    Ok(SplitSpec {
        fraction,
        train: 0..start,
        test: start..n_weeks,
    })
}

/// Fail when a training pair `(origin, horizon)` reaches a test week or a
/// scored `(origin, horizon)` starts before the test range.
pub fn check_split_leakage(split: &SplitSpec, training: &[(usize, usize)], scored: &[(usize, usize)]) -> Result<()> {
    if let Some(&(t, h)) = training.iter().find(|&&(t, h)| t + h >= split.test.start) {
        return Err(Error::Leakage(format!(
            "training row at origin {t} uses target week {} inside the test range",
            t + h
        )));
    }
    if let Some(&(t, h)) = scored.iter().find(|&&(t, h)| t < split.test.start || t + h >= split.test.end) {
        return Err(Error::Leakage(format!("scored pair ({t}, {h}) is not fully inside the test range")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_fixtures() {
        let s = chronological_split(127, 0.2).unwrap();
        assert_eq!(s.test.len(), 26);
        assert_eq!(s.train.len(), 101);
        let s = chronological_split(10, 0.5).unwrap();
        // weeks 6..10 in 1-based numbering
        assert_eq!(s.test, 5..10);
        assert!(s.train.end <= s.test.start);
        assert!(chronological_split(1, 0.2).is_err());
        assert!(chronological_split(10, 0.0).is_err());
        assert!(chronological_split(10, 1.0).is_err());
    }

    #[test]
    fn origins_keep_targets_in_test() {
        let s = chronological_split(127, 0.2).unwrap();
        let o = s.test_origins(6);
        assert_eq!(o.first(), Some(&101));
        assert_eq!(o.last(), Some(&120));
        assert!(o.iter().all(|w| s.test.contains(&(w + 6))));
        assert!(s.test_origins(26).is_empty());
    }

    #[test]
    fn leak_check() {
        let s = chronological_split(20, 0.2).unwrap();
        assert!(check_split_leakage(&s, &[(10, 5)], &[(16, 2)]).is_ok());
        assert!(matches!(check_split_leakage(&s, &[(10, 6)], &[]), Err(Error::Leakage(_))));
        assert!(matches!(check_split_leakage(&s, &[], &[(15, 1)]), Err(Error::Leakage(_))));
    }
}
