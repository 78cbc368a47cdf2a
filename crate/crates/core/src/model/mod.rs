//! Learning the signal model from incomplete block measurements.
//!
//! Measurements are first interpolated to full blocks, then absorbed either
//! through a FIFO buffer with batch PCA or through incremental PCA updates.
//! [`Learner`] wraps both behind the warm-start policy used by the simulator.

mod buffer;
mod dimension;
mod incremental;
mod interpolate;
mod snapshot;

pub use buffer::{batch_pca, update_model_buffer, BufferFit, ModelBuffer};
pub use dimension::{
    select_dimension, select_dimension_by, select_dimension_for_model, select_dimension_for_pattern,
    select_dimension_with_tail, expected_error_by_dimension,
    DimensionRule,
};
pub use incremental::update_model_incremental;
pub use interpolate::{interpolate_block, interpolate_segments};
pub use snapshot::{read_model, write_model, MODEL_FORMAT_HEADER};

use nalgebra::DMatrix;

use crate::error::{DassError, Result};
use crate::field::{FieldBlock, SignalModel};

pub const DEFAULT_BUFFER_LENGTH: usize = 30;
pub const DEFAULT_RESIDUAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Fixed(usize),
    /// Chosen per block by minimising the estimated error bound.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Linear,
}

/// Weight of the previous spectrum in the incremental update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IncrementalVariant {
    /// `1/(L+1)·diag(λ)` as the update is commonly printed.
    AsPrinted,
    /// `L/(L+1)·diag(λ)`, the running-scatter update that converges to the
    /// batch covariance on stationary data.
    #[default]
    Rescaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdaterKind {
    Buffer,
    #[default]
    Incremental,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub dimension: Dimension,
    pub dimension_rule: DimensionRule,
    pub buffer_length: usize,
    pub interpolation: Interpolation,
    pub variant: IncrementalVariant,
    pub residual_tolerance: f64,
    pub updater: UpdaterKind,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            dimension: Dimension::Auto,
            dimension_rule: DimensionRule::Mse,
            buffer_length: DEFAULT_BUFFER_LENGTH,
            interpolation: Interpolation::Linear,
            variant: IncrementalVariant::Rescaled,
            residual_tolerance: DEFAULT_RESIDUAL_TOLERANCE,
            updater: UpdaterKind::Incremental,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self, block_length: usize) -> Result<()> {
        if self.buffer_length == 0 {
            return Err(DassError::Config("buffer length must be >= 1".into()));
        }
        if let Dimension::Fixed(k) = self.dimension {
            if k == 0 || k > block_length {
                return Err(DassError::Config(format!(
                    "dimension {k} outside [1, {block_length}]"
                )));
            }
        }
        if !(self.residual_tolerance >= 0.0) {
            return Err(DassError::Config("residual tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

/// Owns the evolving model of one stream.
///
/// Blocks are kept in a buffer until it holds `tracked + 1` blocks, or is
/// full if that comes first; with the incremental updater the buffer fit
/// then seeds incremental PCA and the buffer is released. Directions beyond
/// the data rank start with zero eigenvalue and are rotated into use as
/// further blocks arrive.
#[derive(Debug, Clone)]
pub struct Learner {
    config: LearnerConfig,
    tracked: usize,
    buffer: ModelBuffer,
    model: Option<SignalModel>,
    absorbed: usize,
}

impl Learner {
    pub fn new(config: LearnerConfig, block_length: usize, tracked: usize) -> Result<Self> {
        config.validate(block_length)?;
        if tracked == 0 || tracked > block_length {
            return Err(DassError::Config(format!(
                "tracked dimension {tracked} outside [1, {block_length}]"
            )));
        }
        Ok(Self {
            buffer: ModelBuffer::new(config.buffer_length.max(crate::field::MIN_READY_SAMPLES), block_length)?,
            config,
            tracked,
            model: None,
            absorbed: 0,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn tracked_dimension(&self) -> usize {
        self.tracked
    }

    pub fn absorbed(&self) -> usize {
        self.absorbed
    }

    /// Blocks absorbed before the buffer fit is complete: `tracked + 1`,
    /// capped by the buffer length.
    pub fn seed_blocks(&self) -> usize {
        (self.tracked + 1)
            .min(self.buffer.capacity())
            .max(crate::field::MIN_READY_SAMPLES)
    }

    pub fn absorb(&mut self, block: &FieldBlock) -> Result<()> {
        let incremental_ready = self.config.updater == UpdaterKind::Incremental
            && self
                .model
                .as_ref()
                .is_some_and(|m| m.dimension() == self.tracked && self.buffer.is_empty());
        if incremental_ready {
            let current = self.model.as_ref().expect("checked above");
            self.model = Some(update_model_incremental(current, block, &self.config)?);
        } else {
            let fit = update_model_buffer(&mut self.buffer, block, self.tracked)?;
            let seeded = self.config.updater == UpdaterKind::Incremental
                && self.buffer.len() >= self.seed_blocks();
            self.model = Some(if seeded {
                pad_dimension(fit.model, self.tracked)?
            } else {
                fit.model
            });
            if seeded {
                self.buffer.clear();
            }
        }
        self.absorbed += 1;
        Ok(())
    }

    /// Current model, or [`DassError::ModelNotReady`] during cold start.
    pub fn model(&self) -> Result<&SignalModel> {
        match &self.model {
            Some(m) => {
                m.ensure_ready()?;
                Ok(m)
            }
            None => Err(DassError::ModelNotReady {
                absorbed: 0,
                required: crate::field::MIN_READY_SAMPLES,
            }),
        }
    }
}

/// Extend a model to `k` components with orthonormal completion directions
/// carrying zero eigenvalue.
pub(crate) fn pad_dimension(model: SignalModel, k: usize) -> Result<SignalModel> {
    let have = model.dimension();
    if have >= k {
        return Ok(model);
    }
    let n = model.block_length();
    let mut basis = DMatrix::zeros(n, k);
    basis.columns_mut(0, have).copy_from(model.basis());
    orthonormalize(&mut basis);
    let mut eigenvalues = nalgebra::DVector::zeros(k);
    eigenvalues.rows_mut(0, have).copy_from(model.eigenvalues());
    SignalModel::new(
        basis,
        model.mean().clone(),
        eigenvalues,
        model.total_variance(),
        model.sample_count(),
    )
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// decreasing and eigenvectors in matching column order.
pub(crate) fn sorted_symmetric_eigen(matrix: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = matrix.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    (values, vectors)
}

/// Flip each column so its entry of largest magnitude is nonnegative.
pub(crate) fn canonical_signs(basis: &mut DMatrix<f64>) {
    for mut col in basis.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Modified Gram-Schmidt in column order. Columns that collapse are replaced
/// by the first coordinate vector not yet spanned.
pub(crate) fn orthonormalize(basis: &mut DMatrix<f64>) {
    let (n, k) = basis.shape();
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let proj = basis.column(i).dot(&basis.column(j));
                let prev = basis.column(i).clone_owned();
                basis.column_mut(j).axpy(-proj, &prev, 1.0);
            }
        }
        let norm = basis.column(j).norm();
        if norm > 1e-10 {
            basis.column_mut(j).unscale_mut(norm);
            continue;
        }
        for e in 0..n {
            let mut cand = nalgebra::DVector::zeros(n);
            cand[e] = 1.0;
            for i in 0..j {
                let proj = basis.column(i).dot(&cand);
                cand.axpy(-proj, &basis.column(i).clone_owned(), 1.0);
            }
            let c_norm = cand.norm();
            if c_norm > 0.5 {
                basis.set_column(j, &(cand / c_norm));
                break;
            }
        }
    }
}
