use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::proxies::Adjacency;

/// Largest tolerated deviation of a graph row sum from 1.
pub const ROW_SUM_PRECONDITION: f64 = 1e-6;

/// Diffusion supports `[I, A, .., A^K, B, .., B^K]` where `A` is the
/// row-normalized graph and `B` its transpose re-row-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Supports {
    k: usize,
    forward: Adjacency,
    backward: Adjacency,
}

impl Supports {
    pub fn new(graph: &Adjacency, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("diffusion order K must be at least 1".into()));
        }
        let err = graph.max_row_sum_error();
        if err > ROW_SUM_PRECONDITION {
            return Err(Error::Data(format!(
                "graph rows must sum to 1 within {ROW_SUM_PRECONDITION}, worst deviation is {err:e}"
            )));
        }
        Ok(Self {
            k,
            forward: graph.row_normalized(),
            backward: graph.transpose().row_normalized(),
        })
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.forward.n()
    }

    /// Number of supports, `2K + 1`.
    pub fn count(&self) -> usize {
        2 * self.k + 1
    }

    /// Concatenate `[S_0 z | S_1 z | ..]` column-wise into `n × count·d`.
    pub fn expand(&self, z: &Array2<f64>) -> Array2<f64> {
        let (n, d) = z.dim();
        let mut out = Array2::zeros((n, self.count() * d));
        out.slice_mut(s![.., 0..d]).assign(z);
        for (dir, adj) in [&self.forward, &self.backward].into_iter().enumerate() {
            let mut cur = z.clone();
            for p in 1..=self.k {
                cur = adj.apply(&cur);
                let block = 1 + dir * self.k + (p - 1);
                out.slice_mut(s![.., block * d..(block + 1) * d]).assign(&cur);
            }
        }
        out
    }

    /// Adjoint of [`Supports::expand`]: `sum_p S_pᵀ g_p` for the column
    /// blocks `g_p` of `g`.
    pub fn expand_adjoint(&self, g: &Array2<f64>, d: usize) -> Array2<f64> {
        let mut out = g.slice(s![.., 0..d]).to_owned();
        for (dir, adj) in [&self.forward, &self.backward].into_iter().enumerate() {
            // Horner form: S_1ᵀ(g_1 + S_1ᵀ(g_2 + ..))
            let mut acc: Option<Array2<f64>> = None;
            for p in (1..=self.k).rev() {
                let block = 1 + dir * self.k + (p - 1);
                let mut gp = g.slice(s![.., block * d..(block + 1) * d]).to_owned();
                if let Some(a) = acc {
                    gp += &a;
                }
                acc = Some(adj.apply_transposed(&gp));
            }
            if let Some(a) = acc {
                out += &a;
            }
        }
        out
    }
}

/// Diffusion convolution `sum_p (S_p hin) W_p` with the per-support weight
/// blocks stacked row-wise in `weights` (`count·d_in × d_out`).
pub fn diffusion_conv(supports: &Supports, hin: &Array2<f64>, weights: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, d) = hin.dim();
    if n != supports.n() || weights.nrows() != supports.count() * d {
        return Err(Error::Shape(format!(
            "diffusion_conv: input {n}x{d}, weights {}x{}, graph of {} nodes, {} supports",
            weights.nrows(),
            weights.ncols(),
            supports.n(),
            supports.count()
        )));
    }
    Ok(supports.expand(hin).dot(weights))
}
