use serde::{Deserialize, Serialize};

use super::SynthTruth;
use crate::proxies::{DtwNeighborhood, GeoTag, SemanticGraph};

/// How well recovered proxies match the planted structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// Share of semantic edges joining keywords of the same cluster.
    pub semantic_intra: Option<f64>,
    /// Share of DTW neighbors in the same cluster.
    pub dtw_intra: Option<f64>,
    /// Share of keywords whose tagged continent equals the planted one.
    pub geo_accuracy: f64,
    /// Intra-cluster share expected from uniformly random neighbors.
    pub chance_intra: f64,
}

fn intra(truth: &SynthTruth, lists: &[Vec<(usize, f64)>]) -> Option<f64> {
    let (mut same, mut total) = (0usize, 0usize);
    for (i, list) in lists.iter().enumerate() {
        for &(j, _) in list {
            total += 1;
            same += usize::from(truth.keywords[i].cluster == truth.keywords[j].cluster);
        }
    }
    (total > 0).then(|| same as f64 / total as f64)
}

pub fn oracle_report(
    truth: &SynthTruth,
    graph: Option<&SemanticGraph>,
    dtw: Option<&DtwNeighborhood>,
    geo: &[GeoTag],
) -> RecoveryReport {
    let n = truth.keywords.len();
    let mut sizes = vec![0usize; truth.shocks.len()];
    truth.keywords.iter().for_each(|k| sizes[k.cluster] += 1);
    let chance = if n > 1 {
        sizes.iter().map(|&s| (s * s.saturating_sub(1)) as f64).sum::<f64>() / (n * (n - 1)) as f64
    } else {
        1.0
    };
    let hits = truth
        .keywords
        .iter()
        .zip(geo)
        .filter(|(k, g)| g.continent.as_deref() == Some(k.continent.as_str()))
        .count();
    RecoveryReport {
        semantic_intra: graph.and_then(|g| intra(truth, &g.edges)),
        dtw_intra: dtw.and_then(|d| intra(truth, &d.neighbors)),
        geo_accuracy: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
        chance_intra: chance,
    }
}
