//! Tensor persistence: a little-endian `f32` blob in keyword, week, feature
//! order plus a JSON manifest with the catalog, shape and config hash.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureConfig, FeatureDesc, FeatureTensor};
use crate::error::{Error, Result};

pub const FEATURES_BLOB: &str = "features.bin";
pub const FEATURES_MANIFEST: &str = "features.json";

#[derive(Serialize, Deserialize)]
struct Manifest {
    dtype: String,
    n_keywords: usize,
    n_weeks: usize,
    n_features: usize,
    keywords: Vec<String>,
    catalog: Vec<FeatureDesc>,
    origin_weeks: Vec<usize>,
    config: FeatureConfig,
    config_hash: String,
}

pub fn write_features(dir: &Path, x: &FeatureTensor) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let blob: Vec<u8> = x.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    let path = dir.join(FEATURES_BLOB);
    fs::write(&path, blob).map_err(|e| Error::io(&path, e))?;
    let m = Manifest {
        dtype: "f32le".into(),
        n_keywords: x.n_keywords(),
        n_weeks: x.n_weeks,
        n_features: x.n_features(),
        keywords: x.keywords.clone(),
        catalog: x.catalog.clone(),
        origin_weeks: x.origin_weeks.clone(),
        config: x.config.clone(),
        config_hash: x.config.hash(),
    };
    let path = dir.join(FEATURES_MANIFEST);
    fs::write(&path, serde_json::to_vec_pretty(&m)?).map_err(|e| Error::io(&path, e))
}

pub fn read_features(dir: &Path) -> Result<FeatureTensor> {
    let path = dir.join(FEATURES_MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: Manifest = serde_json::from_str(&text)?;
    if m.dtype != "f32le" {
        return Err(Error::Parse(format!("unsupported tensor dtype {:?}", m.dtype)));
    }
    if m.catalog.len() != m.n_features || m.keywords.len() != m.n_keywords {
        return Err(Error::Shape("feature manifest is inconsistent".into()));
    }
    if m.config.hash() != m.config_hash {
        return Err(Error::Data("feature config hash does not match the manifest".into()));
    }
    let path = dir.join(FEATURES_BLOB);
    let blob = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let expected = m.n_keywords * m.n_weeks * m.n_features * 4;
    if blob.len() != expected {
        return Err(Error::Shape(format!(
            "feature blob has {} bytes, manifest implies {expected}",
            blob.len()
        )));
    }
    let values = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(FeatureTensor {
        keywords: m.keywords,
        n_weeks: m.n_weeks,
        catalog: m.catalog,
        values,
        origin_weeks: m.origin_weeks,
        config: m.config,
    })
}
