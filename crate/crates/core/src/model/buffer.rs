use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::{canonical_signs, orthonormalize, sorted_symmetric_eigen};
use crate::error::{DassError, Result};
use crate::field::{FieldBlock, SignalModel};

/// Eigenvalues below this fraction of the largest are treated as zero.
const RELATIVE_EIGEN_FLOOR: f64 = 1e-12;

/// FIFO of the most recent interpolated blocks.
#[derive(Debug, Clone)]
pub struct ModelBuffer {
    capacity: usize,
    block_length: usize,
    blocks: VecDeque<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferFit {
    pub model: SignalModel,
    /// Fewer blocks than the requested dimension were available.
    pub warmup: bool,
    /// Some retained direction carries no variance.
    pub degenerate: bool,
}

impl ModelBuffer {
    pub fn new(capacity: usize, block_length: usize) -> Result<Self> {
        if capacity == 0 || block_length == 0 {
            return Err(DassError::InvalidArgument(
                "buffer capacity and block length must be >= 1".into(),
            ));
        }
        Ok(Self {
            capacity,
            block_length,
            blocks: VecDeque::with_capacity(capacity),
        })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&mut self) {
        self.blocks.clear();
    }

    /// Insert, evicting the oldest block when full.
    pub fn push(&mut self, block: &FieldBlock) -> Result<()> {
        if block.len() != self.block_length {
            return Err(DassError::LengthMismatch {
                expected: self.block_length,
                actual: block.len(),
            });
        }
        if self.blocks.len() == self.capacity {
            self.blocks.pop_front();
        }
        self.blocks.push_back(block.values().to_vec());
        Ok(())
    }

    pub fn fit(&self, dimension: usize) -> Result<BufferFit> {
        let rows: Vec<&[f64]> = self.blocks.iter().map(Vec::as_slice).collect();
        batch_pca(&rows, dimension)
    }
}

/// Push `new` into the buffer and refit the model.
pub fn update_model_buffer(
    buffer: &mut ModelBuffer,
    new: &FieldBlock,
    dimension: usize,
) -> Result<BufferFit> {
    buffer.push(new)?;
    buffer.fit(dimension)
}

/// PCA of a set of blocks: mean, covariance normalised by the block count,
/// and the top `dimension` eigenpairs. When the requested dimension exceeds
/// the number of blocks the model is returned at `min(dimension, count)`
/// with the warmup flag set.
pub fn batch_pca(blocks: &[&[f64]], dimension: usize) -> Result<BufferFit> {
    let count = blocks.len();
    let n = blocks
        .first()
        .map(|b| b.len())
        .ok_or_else(|| DassError::InvalidArgument("no blocks to fit".into()))?;
    if dimension == 0 || dimension > n {
        return Err(DassError::InvalidArgument(format!(
            "dimension {dimension} outside [1, {n}]"
        )));
    }
    if let Some(bad) = blocks.iter().find(|b| b.len() != n) {
        return Err(DassError::LengthMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let k = dimension.min(count);

    let mut mean = DVector::zeros(n);
    for b in blocks {
        mean += DVector::from_column_slice(b);
    }
    mean /= count as f64;
    let centered = DMatrix::from_fn(count, n, |r, c| blocks[r][c] - mean[c]);
    let total_variance = centered.norm_squared() / count as f64;

    let (values, mut basis) = if count < n {
        gram_route(&centered, k)
    } else {
        let cov = centered.transpose() * &centered / count as f64;
        let (vals, vecs) = sorted_symmetric_eigen(cov);
        (vals[..k].to_vec(), vecs.columns(0, k).into_owned())
    };
    orthonormalize(&mut basis);
    canonical_signs(&mut basis);

    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let floor = RELATIVE_EIGEN_FLOOR * top;
    let eigenvalues: Vec<f64> = values
        .iter()
        .map(|&l| if l > floor { l } else { 0.0 })
        .collect();
    let degenerate = eigenvalues.contains(&0.0);
    let model = SignalModel::new(
        basis,
        mean,
        DVector::from_vec(eigenvalues),
        total_variance,
        count,
    )?;
    Ok(BufferFit {
        model,
        warmup: count < dimension,
        degenerate,
    })
}

/// Eigenpairs of `XᵀX/c` through the smaller `XXᵀ/c`; directions beyond the
/// data rank are completed orthonormally with zero eigenvalue.
fn gram_route(centered: &DMatrix<f64>, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let count = centered.nrows() as f64;
    let n = centered.ncols();
    let gram = centered * centered.transpose() / count;
    let (vals, vecs) = sorted_symmetric_eigen(gram);
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let mut values = Vec::with_capacity(k);
    let mut basis = DMatrix::zeros(n, k);
    for j in 0..k {
        let mu = vals.get(j).copied().unwrap_or(0.0);
        if mu > RELATIVE_EIGEN_FLOOR * top && mu > 0.0 {
            let v = centered.transpose() * vecs.column(j) / (count * mu).sqrt();
            basis.set_column(j, &v);
            values.push(mu);
        } else {
            values.push(0.0);
        }
    }
    (values, basis)
}
