//! Single-layer vector quantization: codeword storage, squared-distance
//! kernel, nearest and top-k search, commitment loss.
//!
//! Distances are sums of squared differences accumulated in f64. Dividing
//! by the dimension happens only in [`commitment_loss`]; argmin results are
//! unchanged and the hot loops stay division-free. Ties in either search
//! always break toward the lowest codeword index, which is what makes
//! encoding deterministic and the bitstream reproducible.

use crate::corpus::Frames;
use crate::error::{Error, Result};

/// One VQ layer: `len()` codeword vectors of a fixed dimension.
///
/// Immutable after construction; all searches are pure and can run
/// concurrently on a shared codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    flat: Vec<f64>,
}

/// A codeword pick: its index, the residual `x - codeword`, and the
/// squared distance between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub index: usize,
    pub err: f64,
    pub residual: Vec<f64>,
}

impl Codebook {
    /// Build from a flat row-major table of `entries x dim` values.
    pub fn from_flat(dim: usize, flat: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("codebook dim must be at least 1".into()));
        }
        if flat.is_empty() || !flat.len().is_multiple_of(dim) {
            return Err(Error::Config(format!(
                "codebook table of {} values is not a multiple of dim {}",
                flat.len(),
                dim
            )));
        }
        if !flat.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("codebook entry"));
        }
        Ok(Self { dim, flat })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::FrameDimension {
                    frame: i,
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        Self::from_flat(dim, rows.into_iter().flatten().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of codewords.
    pub fn len(&self) -> usize {
        self.flat.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // N >= 1 by construction
    }

    pub fn entry(&self, index: usize) -> &[f64] {
        &self.flat[index * self.dim..(index + 1) * self.dim]
    }

    pub fn entries(&self) -> impl Iterator<Item = &[f64]> {
        self.flat.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.flat
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("query vector"));
        }
        Ok(())
    }

    /// Index and squared error of the closest codeword, lowest index on ties.
    ///
    /// Allocation-free variant of [`Codebook::nearest`] for hot loops.
    pub fn nearest_index(&self, x: &[f64]) -> (usize, f64) {
        let mut best = 0usize;
        let mut best_err = f64::INFINITY;
        for (i, entry) in self.entries().enumerate() {
            let err = sq_dist_kernel(x, entry);
            if err < best_err {
                best = i;
                best_err = err;
            }
        }
        (best, best_err)
    }

    pub fn nearest(&self, x: &[f64]) -> Result<Candidate> {
        self.check_query(x)?;
        let (index, err) = self.nearest_index(x);
        Ok(Candidate {
            index,
            err,
            residual: residual_of(x, self.entry(index)),
        })
    }

    /// The `min(k, N)` closest codewords, ascending by error, ties by index.
    ///
    /// Entry 0 always equals [`Codebook::nearest`].
    pub fn top_k(&self, x: &[f64], k: usize) -> Result<Vec<Candidate>> {
        self.check_query(x)?;
        if k == 0 {
            return Err(Error::Config("top-k requires k >= 1".into()));
        }
        let mut picks = Vec::new();
        self.top_k_indices(x, k, &mut picks);
        Ok(picks
            .into_iter()
            .map(|(err, index)| Candidate {
                index,
                err,
                residual: residual_of(x, self.entry(index)),
            })
            .collect())
    }

    /// Fill `out` with the `min(k, N)` smallest `(err, index)` pairs,
    /// sorted ascending by error then index. No allocation besides `out`.
    pub(crate) fn top_k_indices(&self, x: &[f64], k: usize, out: &mut Vec<(f64, usize)>) {
        out.clear();
        out.extend(
            self.entries()
                .enumerate()
                .map(|(i, entry)| (sq_dist_kernel(x, entry), i)),
        );
        let keep = k.min(out.len());
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if keep < out.len() {
            out.select_nth_unstable_by(keep - 1, order);
            out.truncate(keep);
        }
        out.sort_unstable_by(order);
    }
}

/// Sum of squared differences, accumulated in f64.
pub fn squared_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(sq_dist_kernel(a, b))
}

/// Mean squared error per component between paired frame sequences.
pub fn commitment_loss(inputs: &Frames, quantized: &Frames) -> Result<f64> {
    if inputs.len() != quantized.len() {
        return Err(Error::Dimension {
            expected: inputs.len(),
            got: quantized.len(),
        });
    }
    if inputs.dim() != quantized.dim() {
        return Err(Error::Dimension {
            expected: inputs.dim(),
            got: quantized.dim(),
        });
    }
    if inputs.is_empty() {
        return Err(Error::Empty("commitment loss needs at least one frame"));
    }
    let total: f64 = inputs
        .iter()
        .zip(quantized.iter())
        .map(|(x, q)| sq_dist_kernel(x, q))
        .sum();
    Ok(total / (inputs.len() as f64 * inputs.dim() as f64))
}

/// Blocked kernel: four independent accumulators so the f64 lanes
/// vectorize, with a fixed summation order for run-to-run determinism.
#[inline]
pub(crate) fn sq_dist_kernel(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let head = a.len() & !3;
    let mut acc = [0.0f64; 4];
    for (ca, cb) in a[..head].chunks_exact(4).zip(b[..head].chunks_exact(4)) {
        let d0 = ca[0] - cb[0];
        let d1 = ca[1] - cb[1];
        let d2 = ca[2] - cb[2];
        let d3 = ca[3] - cb[3];
        acc[0] += d0 * d0;
        acc[1] += d1 * d1;
        acc[2] += d2 * d2;
        acc[3] += d3 * d3;
    }
    let mut tail = 0.0;
    for (x, y) in a[head..].iter().zip(&b[head..]) {
        let d = x - y;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn residual_of(x: &[f64], codeword: &[f64]) -> Vec<f64> {
    x.iter().zip(codeword).map(|(a, b)| a - b).collect()
}
