use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    build_dtw_neighborhoods, build_semantic_graph, tag_geography, DtwNeighborhood, EmbeddingMatrix, EmbeddingSource,
    Gazetteer, GeoTag, SemanticGraph,
};
use crate::error::{Error, Result};
use crate::panel::WeeklyPanel;

pub const GRAPH_FILE: &str = "graph.csv";
pub const DTW_FILE: &str = "dtw.json";
pub const GEO_FILE: &str = "geo.csv";
pub const PROXY_MANIFEST: &str = "proxies.json";

/// All proxies for one panel, as persisted by `build-proxies`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyBundle {
    pub keywords: Vec<String>,
    pub graph: SemanticGraph,
    pub dtw: DtwNeighborhood,
    pub geo: Vec<GeoTag>,
    pub embedding_source: EmbeddingSource,
    pub embedding_dim: usize,
}

impl ProxyBundle {
    /// Borrowed view for feature construction.
    pub fn proxies(&self) -> crate::features::Proxies<'_> {
        crate::features::Proxies { graph: Some(&self.graph), dtw: Some(&self.dtw), geo: Some(&self.geo) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    keywords: Vec<String>,
    k: usize,
    similarity: String,
    tie_rule: String,
    embedding_source: EmbeddingSource,
    embedding_dim: usize,
    dtw_m: usize,
    dtw_band: usize,
    dtw_range: Range<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct ProxyParams {
    pub k: usize,
    pub dtw_m: usize,
    pub dtw_band: usize,
    /// DTW trajectories use weeks `0..train_end`.
    pub train_end: usize,
}

/// Semantic graph from `embeddings`, DTW neighborhoods over the training
/// weeks and gazetteer tags, all aligned to the panel's keyword order.
pub fn build_proxies(
    panel: &WeeklyPanel,
    embeddings: &EmbeddingMatrix,
    gazetteer: &Gazetteer,
    params: ProxyParams,
) -> Result<ProxyBundle> {
    if embeddings.len() != panel.n_keywords() {
        return Err(Error::Shape(format!(
            "{} embedding rows for {} keywords",
            embeddings.len(),
            panel.n_keywords()
        )));
    }
    let graph = build_semantic_graph(embeddings, params.k)?;
    let dtw = build_dtw_neighborhoods(panel, 0..params.train_end, params.dtw_m, params.dtw_band)?;
    let geo = panel.keywords.iter().map(|k| tag_geography(k, gazetteer)).collect();
    Ok(ProxyBundle {
        keywords: panel.keywords.clone(),
        graph,
        dtw,
        geo,
        embedding_source: embeddings.source,
        embedding_dim: embeddings.dim(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn write_proxies(dir: &Path, b: &ProxyBundle) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(GRAPH_FILE);
    let mut w = create(&path)?;
    b.graph.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;

    let path = dir.join(DTW_FILE);
    let json = serde_json::to_vec(&b.dtw).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;

    let path = dir.join(GEO_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Parse(e.to_string()))?;
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["keyword_id", "keyword", "continent", "country", "city"]).map_err(csv_err)?;
    for (i, (k, g)) in b.keywords.iter().zip(&b.geo).enumerate() {
        let f = |v: &Option<String>| v.clone().unwrap_or_default();
        w.write_record([i.to_string(), k.clone(), f(&g.continent), f(&g.country), f(&g.city)]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let manifest = Manifest {
        keywords: b.keywords.clone(),
        k: b.graph.k,
        similarity: b.graph.similarity.clone(),
        tie_rule: b.graph.tie_rule.clone(),
        embedding_source: b.embedding_source,
        embedding_dim: b.embedding_dim,
        dtw_m: b.dtw.m,
        dtw_band: b.dtw.band,
        dtw_range: b.dtw.range.clone(),
    };
    let path = dir.join(PROXY_MANIFEST);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

pub fn read_proxies(dir: &Path) -> Result<ProxyBundle> {
    let path = dir.join(PROXY_MANIFEST);
    let m: Manifest = serde_json::from_reader(open(&path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let n = m.keywords.len();
    let mut graph = SemanticGraph::read_csv(open(&dir.join(GRAPH_FILE))?, n)?;
    graph.similarity = m.similarity;
    graph.tie_rule = m.tie_rule;

    let path = dir.join(DTW_FILE);
    let dtw: DtwNeighborhood =
        serde_json::from_reader(open(&path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if dtw.neighbors.len() != n {
        return Err(Error::Shape(format!("DTW file covers {} keywords, manifest {n}", dtw.neighbors.len())));
    }

    let path = dir.join(GEO_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut geo = Vec::with_capacity(n);
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if rec.len() != 5 || rec[0].parse::<usize>().ok() != Some(i) || rec[1] != m.keywords[i.min(n - 1)] {
            return Err(Error::Parse(format!("{}: row {} does not match the manifest", path.display(), i + 1)));
        }
        let f = |s: &str| (!s.is_empty()).then(|| s.to_string());
        geo.push(GeoTag {
            continent: f(&rec[2]),
            country: f(&rec[3]),
            city: f(&rec[4]),
        });
    }
    if geo.len() != n {
        return Err(Error::Shape(format!("geo file has {} rows, manifest {n}", geo.len())));
    }
    Ok(ProxyBundle {
        keywords: m.keywords,
        graph,
        dtw,
        geo,
        embedding_source: m.embedding_source,
        embedding_dim: m.embedding_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn bundle_round_trips() {
        let cfg = SynthConfig {
            n_keywords: 30,
            n_weeks: 40,
            clusters: 3,
            ..SynthConfig::default()
        };
        let m = generate(&cfg).unwrap();
        let params = ProxyParams {
            k: 5,
            dtw_m: 4,
            dtw_band: 3,
            train_end: 32,
        };
        let b = build_proxies(&m.panel, &m.embeddings, &Gazetteer::bundled(), params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_proxies(dir.path(), &b).unwrap();
        assert_eq!(read_proxies(dir.path()).unwrap(), b);
    }

    #[test]
    fn misaligned_embeddings_are_rejected() {
        let cfg = SynthConfig {
            n_keywords: 30,
            n_weeks: 40,
            clusters: 3,
            ..SynthConfig::default()
        };
        let m = generate(&cfg).unwrap();
        let e = EmbeddingMatrix::from_rows(vec![vec![1.0, 0.0]; 3], EmbeddingSource::Synthetic).unwrap();
        let params = ProxyParams {
            k: 2,
            dtw_m: 2,
            dtw_band: 2,
            train_end: 32,
        };
        assert!(matches!(build_proxies(&m.panel, &e, &Gazetteer::bundled(), params), Err(Error::Shape(_))));
    }
}
