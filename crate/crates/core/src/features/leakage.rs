use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FeatureTensor;
use crate::error::{Error, Result};
use crate::panel::WeeklyPanel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub origin: usize,
    pub passed: bool,
    /// Feature values compared bit for bit.
    pub checked: usize,
    /// First differing `(feature, keyword, week)` in week-major order.
    pub offending: Option<(String, String, usize)>,
}

/// Perturb every panel value dated after `origin` with seeded noise, rebuild
/// with `builder`, and require bit-identical features at all weeks
/// `<= origin`.
pub fn verify_leakage_free<F>(builder: F, panel: &WeeklyPanel, origin: usize, seed: u64) -> Result<LeakageReport>
where
    F: Fn(&WeeklyPanel) -> Result<FeatureTensor>,
{
    if origin >= panel.n_weeks() {
        return Err(Error::Config(format!(
            "origin {origin} outside a panel of {} weeks",
            panel.n_weeks()
        )));
    }
    let base = builder(panel)?;
    let shaken = builder(&perturb_after(panel, origin, seed))?;
    if base.catalog != shaken.catalog || base.n_keywords() != shaken.n_keywords() {
        return Ok(LeakageReport {
            origin,
            passed: false,
            checked: 0,
            offending: Some(("<catalog>".into(), String::new(), origin)),
        });
    }
    let mut checked = 0;
    for t in 0..=origin {
        for k in 0..base.n_keywords() {
            let (a, b) = (base.row(k, t), shaken.row(k, t));
            for j in 0..a.len() {
                checked += 1;
                if a[j].to_bits() != b[j].to_bits() {
                    return Ok(LeakageReport {
                        origin,
                        passed: false,
                        checked,
                        offending: Some((base.catalog[j].name.clone(), base.keywords[k].clone(), t)),
                    });
                }
            }
        }
    }
    Ok(LeakageReport {
        origin,
        passed: true,
        checked,
        offending: None,
    })
}

/// Copy of `panel` with every observation dated after `origin` randomized.
pub fn perturb_after(panel: &WeeklyPanel, origin: usize, seed: u64) -> WeeklyPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = panel.clone();
    for k in 0..p.n_keywords() {
        for t in origin + 1..p.n_weeks() {
            let clicks = rng.random_range(1..500u64);
            let cpc = rng.random_range(0.05..20.0f64);
            p.clicks.set(k, t, clicks);
            p.impressions.set(k, t, clicks * rng.random_range(1..40u64));
            p.cost.set(k, t, cpc * clicks as f64);
            p.cpc.set(k, t, Some(cpc));
            let flip: bool = rng.random();
            p.imputed.set(k, t, flip);
            p.observed.set(k, t, !flip);
            for c in p.device_counts.get_mut(k, t).values_mut() {
                *c = rng.random_range(0..1000);
            }
            for c in p.searchtype_counts.get_mut(k, t).values_mut() {
                *c = rng.random_range(0..1000);
            }
        }
    }
    p
}
