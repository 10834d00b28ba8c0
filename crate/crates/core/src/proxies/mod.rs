//! Competition proxies: semantic embeddings and the fixed kNN graph, DTW
//! behavioral neighborhoods and geographic-intent tags.

mod dtw;
mod embed;
mod geo;
mod graph;
mod io;

pub use dtw::{build_dtw_neighborhoods, dtw_distance, z_normalize, DtwNeighborhood, DEFAULT_BAND, DEFAULT_NEIGHBORS, MIN_DTW_WEEKS};
pub use embed::{
    fallback_embeddings, hash_embed, load_embeddings, write_embeddings, EmbeddingMatrix, EmbeddingRecord,
    EmbeddingSource, DEFAULT_DIM, MIN_HASH_DIM,
};
pub use geo::{tag_geography, Gazetteer, GeoLevel, GeoTag, CONTINENTS};
pub use graph::{build_semantic_graph, Adjacency, SemanticGraph, DEFAULT_K, ROW_SUM_TOL};
pub use io::{build_proxies, read_proxies, write_proxies, ProxyBundle, ProxyParams, DTW_FILE, GEO_FILE, GRAPH_FILE, PROXY_MANIFEST};
