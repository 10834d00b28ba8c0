use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 384;
pub const MIN_HASH_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    /// Read from an embedding file written by an external encoder.
    Exported,
    /// Produced by [`hash_embed`].
    Fallback,
    /// Produced by the synthetic market generator.
    Synthetic,
}

/// Unit-norm keyword embeddings, one row per panel keyword.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
    pub source: EmbeddingSource,
    /// Rows that had to be filled by the hash fallback.
    pub fallback_rows: Vec<usize>,
}

impl EmbeddingMatrix {
    /// Build from raw rows, L2-normalizing each. Zero or non-finite rows are
    /// an error.
    pub fn from_rows(rows: Vec<Vec<f64>>, source: EmbeddingSource) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::Data("embedding matrix needs at least one non-empty row".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, mut r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Shape(format!("embedding row {i} has {} dims, expected {dim}", r.len())));
            }
            if !l2_normalize(&mut r) {
                return Err(Error::Data(format!("embedding row {i} has no direction")));
            }
            data.extend(r);
        }
        Ok(Self {
            dim,
            data,
            source,
            fallback_rows: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Cosine similarity of two rows (rows are unit norm).
    pub fn cosine(&self, i: usize, j: usize) -> f64 {
        dot(self.row(i), self.row(j))
    }

    /// Rows reordered by `order` (new row r = old row order[r]).
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &o in order {
            data.extend_from_slice(self.row(o));
        }
        Self {
            dim: self.dim,
            data,
            source: self.source,
            fallback_rows: Vec::new(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2_normalize(v: &mut [f64]) -> bool {
    let norm = dot(v, v).sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic fallback embedding: signed feature hashing of character
/// trigrams (with boundary padding) into `dim` buckets, L2-normalized.
pub fn hash_embed(keyword: &str, dim: usize) -> Result<Vec<f64>> {
    if dim < MIN_HASH_DIM {
        return Err(Error::Config(format!("hash embedding dimension must be >= {MIN_HASH_DIM}, got {dim}")));
    }
    if keyword.trim().is_empty() {
        return Err(Error::Data("cannot embed an empty keyword".into()));
    }
    let padded: Vec<u8> = format!(" {} ", keyword.trim()).into_bytes();
    let mut v = vec![0.0; dim];
    for tri in padded.windows(3) {
        let h = fnv1a(tri);
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[(h % dim as u64) as usize] += sign;
    }
    if !l2_normalize(&mut v) {
        // every trigram cancelled out; fall back to a single whole-string bucket
        v[(fnv1a(padded.as_slice()) % dim as u64) as usize] = 1.0;
    }
    Ok(v)
}

/// One line of the embedding file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub keyword: String,
    pub vector: Vec<f64>,
}

/// Load an embedding file aligned to `keywords`. Keywords absent from the
/// file, or whose vector is zero, get a [`hash_embed`] row of the file's
/// dimension and are listed in `fallback_rows`.
pub fn load_embeddings<R: BufRead>(source: R, keywords: &[String]) -> Result<EmbeddingMatrix> {
    let mut dim = None;
    let mut by_kw: HashMap<String, Vec<f64>> = HashMap::new();
    for (i, line) in source.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<embedding file>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EmbeddingRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("embedding line {}: {e}", i + 1)))?;
        match dim {
            None => dim = Some(rec.vector.len()),
            Some(d) if d != rec.vector.len() => {
                return Err(Error::Shape(format!(
                    "embedding line {} has {} dims, earlier records have {d}",
                    i + 1,
                    rec.vector.len()
                )))
            }
            _ => {}
        }
        by_kw.entry(rec.keyword).or_insert(rec.vector);
    }
    let dim = match dim {
        Some(d) if d > 0 => d,
        _ => return Err(Error::Data("embedding file is empty".into())),
    };

    let mut data = Vec::with_capacity(keywords.len() * dim);
    let mut fallback_rows = Vec::new();
    for (row, kw) in keywords.iter().enumerate() {
        let mut v = by_kw.get(kw).cloned();
        if let Some(ref mut vec) = v {
            if !l2_normalize(vec) {
                v = None;
            }
        }
        let v = match v {
            Some(v) => v,
            None => {
                fallback_rows.push(row);
                hash_embed(kw, dim)?
            }
        };
        data.extend(v);
    }
    if !fallback_rows.is_empty() {
        log::warn!("{} keywords fell back to hash embeddings", fallback_rows.len());
    }
    Ok(EmbeddingMatrix {
        dim,
        data,
        source: EmbeddingSource::Exported,
        fallback_rows,
    })
}

/// Hash-embed every keyword.
pub fn fallback_embeddings(keywords: &[String], dim: usize) -> Result<EmbeddingMatrix> {
    let rows = keywords.iter().map(|k| hash_embed(k, dim)).collect::<Result<Vec<_>>>()?;
    let mut m = EmbeddingMatrix::from_rows(rows, EmbeddingSource::Fallback)?;
    m.fallback_rows = (0..keywords.len()).collect();
    Ok(m)
}

pub fn write_embeddings<W: Write>(mut sink: W, keywords: &[String], m: &EmbeddingMatrix) -> Result<()> {
    for (i, kw) in keywords.iter().enumerate() {
        let rec = EmbeddingRecord {
            keyword: kw.clone(),
            vector: m.row(i).to_vec(),
        };
        serde_json::to_writer(&mut sink, &rec)?;
        sink.write_all(b"\n").map_err(|e| Error::io("<embedding file>", e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        dot(a, b)
    }

    #[test]
    fn hash_embed_is_deterministic_and_unit() {
        let a = hash_embed("car rental", 384).unwrap();
        let b = hash_embed("car rental", 384).unwrap();
        assert_eq!(a, b);
        assert!((dot(&a, &a).sqrt() - 1.0).abs() < 1e-9);
        assert!(hash_embed("", 384).is_err());
        assert!(hash_embed("car", 4).is_err());
    }

    #[test]
    fn shared_trigrams_raise_similarity() {
        let porto = hash_embed("car rental porto", 384).unwrap();
        let lisbon = hash_embed("car rental lisbon", 384).unwrap();
        let junk = hash_embed("zzz qqq", 384).unwrap();
        assert!(cos(&porto, &lisbon) > cos(&porto, &junk));
    }

    fn file(records: &[(&str, Vec<f64>)]) -> String {
        records
            .iter()
            .map(|(k, v)| serde_json::to_string(&EmbeddingRecord { keyword: k.to_string(), vector: v.clone() }).unwrap() + "\n")
            .collect()
    }

    #[test]
    fn aligned_load_with_fallbacks() {
        let kws: Vec<String> = ["a b", "c d", "e f", "g h", "i j"].iter().map(|s| s.to_string()).collect();
        let mut v = vec![0.0; 384];
        v[0] = 3.0;
        let mut w = vec![0.0; 384];
        w[1] = -2.0;
        // file order differs from keyword order; "e f" has a zero vector
        let text = file(&[("c d", w.clone()), ("a b", v.clone()), ("e f", vec![0.0; 384]), ("zz", v.clone())]);
        let m = load_embeddings(text.as_bytes(), &kws).unwrap();
        assert_eq!((m.len(), m.dim()), (5, 384));
        assert_eq!(m.source, EmbeddingSource::Exported);
        assert_eq!(m.row(0)[0], 1.0);
        assert_eq!(m.row(1)[1], -1.0);
        assert_eq!(m.fallback_rows, vec![2, 3, 4]);
        for i in 0..5 {
            assert!((dot(m.row(i), m.row(i)) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_and_empty_are_fatal() {
        let kws = vec!["a b".to_string()];
        let text = file(&[("a b", vec![1.0; 4]), ("c", vec![1.0; 5])]);
        assert!(matches!(load_embeddings(text.as_bytes(), &kws), Err(Error::Shape(_))));
        assert!(load_embeddings("".as_bytes(), &kws).is_err());
    }
}
