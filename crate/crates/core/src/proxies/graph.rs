use std::io::{BufRead, Write};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 10;

/// Row-stochastic tolerance for the semantic graph contract.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Sparse matrix stored as per-row `(column, weight)` lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjacency {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Adjacency {
    pub fn new(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if let Some(&(j, w)) = r.iter().find(|&&(j, w)| j >= n || !w.is_finite() || w < 0.0) {
                return Err(Error::Data(format!("bad adjacency entry ({i}, {j}) = {w}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: (0..n).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|&(_, w)| w).sum()
    }

    /// Largest deviation of any row sum from 1.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.n()).map(|i| (self.row_sum(i) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Divide each row by its sum; all-zero rows stay zero.
    pub fn row_normalized(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let s: f64 = r.iter().map(|&(_, w)| w).sum();
                if s > 0.0 {
                    r.iter().map(|&(j, w)| (j, w / s)).collect()
                } else {
                    r.clone()
                }
            })
            .collect();
        Self { rows }
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.n()];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, w) in r {
                rows[j].push((i, w));
            }
        }
        Self { rows }
    }

    /// `self · x` for a dense `n × d` matrix.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.raw_dim());
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &Array2<f64>, out: &mut Array2<f64>) {
        out.fill(0.0);
        for (i, r) in self.rows.iter().enumerate() {
            let mut o = out.row_mut(i);
            for &(j, w) in r {
                o.scaled_add(w, &x.row(j));
            }
        }
    }

    /// `selfᵀ · x`, used when back-propagating through [`Adjacency::apply`].
    pub fn apply_transposed(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.raw_dim());
        for (i, r) in self.rows.iter().enumerate() {
            let xi = x.row(i);
            for &(j, w) in r {
                out.row_mut(j).scaled_add(w, &xi);
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.n();
        let mut m = Array2::zeros((n, n));
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, w) in r {
                m[(i, j)] += w;
            }
        }
        m
    }

    /// Relabel nodes: new node `r` is old node `order[r]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut inverse = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let rows = order
            .iter()
            .map(|&old| self.rows[old].iter().map(|&(j, w)| (inverse[j], w)).collect())
            .collect();
        Self { rows }
    }
}

/// Fixed directed kNN graph over keyword embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticGraph {
    pub k: usize,
    /// Per node, neighbors in descending similarity with row-normalized
    /// weights.
    pub edges: Vec<Vec<(usize, f64)>>,
    pub similarity: String,
    pub tie_rule: String,
}

impl SemanticGraph {
    pub fn n(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency {
            rows: self.edges.clone(),
        }
    }

    /// Check the out-degree, self-loop and row-stochastic contract.
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.edges.iter().enumerate() {
            if row.len() != self.k {
                return Err(Error::Data(format!("node {i} has out-degree {}, expected {}", row.len(), self.k)));
            }
            if row.iter().any(|&(j, _)| j == i) {
                return Err(Error::Data(format!("node {i} has a self-loop")));
            }
            if row.iter().any(|&(j, w)| j >= self.n() || !(w >= 0.0)) {
                return Err(Error::Data(format!("node {i} has an invalid edge")));
            }
            let s: f64 = row.iter().map(|&(_, w)| w).sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Data(format!("node {i} weights sum to {s}")));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "src,dst,weight")?;
        for (i, row) in self.edges.iter().enumerate() {
            for &(j, w) in row {
                writeln!(sink, "{i},{j},{w}")?;
            }
        }
        Ok(())
    }

    /// Read an edge-list CSV; `n` is the expected node count.
    pub fn read_csv<R: BufRead>(source: R, n: usize) -> Result<Self> {
        let mut edges = vec![Vec::new(); n];
        for (i, line) in source.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<graph csv>", e))?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Parse(format!("graph csv line {}: {line:?}", i + 1));
            let mut f = line.split(',');
            let src: usize = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let dst: usize = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let w: f64 = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if src >= n || dst >= n {
                return Err(bad());
            }
            edges[src].push((dst, w));
        }
        let k = edges.first().map_or(0, Vec::len);
        let g = SemanticGraph {
            k,
            edges,
            similarity: "cosine".into(),
            tie_rule: "lower-id".into(),
        };
        g.validate()?;
        Ok(g)
    }
}

/// Directed kNN graph: each node links to its `k` most cosine-similar other
/// nodes (ties to the lower id). Edge weights are `max(cosine, 0)` then
/// row-normalized; a row with all-zero weights becomes uniform `1/k`.
pub fn build_semantic_graph(e: &EmbeddingMatrix, k: usize) -> Result<SemanticGraph> {
    let n = e.len();
    if k == 0 {
        return Err(Error::Config("graph out-degree k must be positive".into()));
    }
    if k >= n {
        return Err(Error::Config(format!("k = {k} needs more than {n} keywords")));
    }
    let edges = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(usize, f64)> = (0..n).filter(|&j| j != i).map(|j| (j, e.cosine(i, j))).collect();
            cand.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            cand.truncate(k);
            let weights: Vec<f64> = cand.iter().map(|&(_, s)| s.max(0.0)).collect();
            let total: f64 = weights.iter().sum();
            cand.iter()
                .zip(&weights)
                .map(|(&(j, _), &w)| (j, if total > 0.0 { w / total } else { 1.0 / k as f64 }))
                .collect()
        })
        .collect();
    Ok(SemanticGraph {
        k,
        edges,
        similarity: "cosine".into(),
        tie_rule: "lower-id".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proxies::embed::EmbeddingSource;
    use proptest::prelude::*;

    fn emb(rows: Vec<Vec<f64>>) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(rows, EmbeddingSource::Synthetic).unwrap()
    }

    #[test]
    fn three_node_ties() {
        let e = emb(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let g = build_semantic_graph(&e, 1).unwrap();
        assert_eq!(g.edges[0], vec![(1, 1.0)]);
        assert_eq!(g.edges[1], vec![(0, 1.0)]);
        // node 2 is orthogonal to both, tie goes to node 0 with uniform weight
        assert_eq!(g.edges[2], vec![(0, 1.0)]);
        g.validate().unwrap();
    }

    #[test]
    fn invalid_k() {
        let e = emb(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(build_semantic_graph(&e, 0).is_err());
        assert!(build_semantic_graph(&e, 2).is_err());
    }

    #[test]
    fn negative_cosines_are_clamped() {
        let e = emb(vec![vec![1.0, 0.0], vec![0.6, 0.8], vec![-1.0, 0.1]]);
        let g = build_semantic_graph(&e, 2).unwrap();
        assert_eq!(g.edges[0], vec![(1, 1.0), (2, 0.0)]);
    }

    #[test]
    fn csv_round_trip() {
        let e = emb((0..6).map(|i| vec![1.0, i as f64, (i * i) as f64 % 5.0]).collect());
        let g = build_semantic_graph(&e, 3).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = SemanticGraph::read_csv(buf.as_slice(), 6).unwrap();
        assert_eq!(back.edges, g.edges);
    }

    #[test]
    fn sparse_apply_matches_dense() {
        let e = emb((0..5).map(|i| vec![1.0, (i as f64).sin(), (i as f64).cos()]).collect());
        let a = build_semantic_graph(&e, 2).unwrap().adjacency();
        let x = Array2::from_shape_fn((5, 3), |(i, j)| (i * 3 + j) as f64 * 0.1 - 0.4);
        let dense = a.to_dense();
        let diff = &a.apply(&x) - &dense.dot(&x);
        assert!(diff.iter().all(|d| d.abs() < 1e-12));
        let diff = &a.apply_transposed(&x) - &dense.t().dot(&x);
        assert!(diff.iter().all(|d| d.abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn graph_contract(
            rows in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 3..25),
            k in 1usize..5,
        ) {
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|mut r| { r[0] += 2.5; r }).collect();
            let n = rows.len();
            prop_assume!(k < n);
            let e = emb(rows);
            let g = build_semantic_graph(&e, k).unwrap();
            prop_assert!(g.validate().is_ok());
            // brute-force top-k agreement on similarity values
            for i in 0..n {
                let mut sims: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| e.cosine(i, j)).collect();
                sims.sort_by(|a, b| b.total_cmp(a));
                let chosen: Vec<f64> = g.edges[i].iter().map(|&(j, _)| e.cosine(i, j)).collect();
                prop_assert_eq!(&chosen[..], &sims[..k]);
            }
        }
    }
}
