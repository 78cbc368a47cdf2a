use nalgebra::{DMatrix, DVector};

use super::{canonical_signs, orthonormalize, sorted_symmetric_eigen, IncrementalVariant, LearnerConfig};
use crate::error::{DassError, Result};
use crate::field::{orthonormality_deviation, FieldBlock, SignalModel, ORTHONORMAL_TOL};

/// Absorb one interpolated block into the model by incremental PCA.
///
/// With `d = x − x̄`, `a = Ψᵀd`, `b = normalize(Ψa + x̄ − x)` and `c = bᵀd`,
/// the small matrix
///
/// ```text
/// D = w·[diag(λ) 0; 0 0] + L/(L+1)²·[aaᵀ ca; caᵀ c²]
/// ```
///
/// is diagonalised as `R·diag(λ')·Rᵀ`, the new basis is the leading K
/// columns of `[Ψ b]·R` and the mean becomes `(L·x̄ + x)/(L+1)`. The weight
/// `w` is `1/(L+1)` for [`IncrementalVariant::AsPrinted`] and `L/(L+1)` for
/// [`IncrementalVariant::Rescaled`].
///
/// `L` is the configured buffer length, capped by the number of blocks the
/// model has absorbed so a young model is not over-weighted. When `‖b‖`
/// before normalisation is below the residual tolerance the block lies in
/// the current subspace and the augmentation is skipped.
pub fn update_model_incremental(
    model: &SignalModel,
    new: &FieldBlock,
    cfg: &LearnerConfig,
) -> Result<SignalModel> {
    let n = model.block_length();
    let k = model.dimension();
    if new.len() != n {
        return Err(DassError::LengthMismatch {
            expected: n,
            actual: new.len(),
        });
    }
    let deviation = orthonormality_deviation(model.basis());
    if !(deviation <= ORTHONORMAL_TOL) {
        return Err(DassError::NotOrthonormal { deviation });
    }

    let l = cfg.buffer_length.min(model.sample_count()).max(1) as f64;
    let prior_weight = match cfg.variant {
        IncrementalVariant::AsPrinted => 1.0 / (l + 1.0),
        IncrementalVariant::Rescaled => l / (l + 1.0),
    };
    let sample_weight = l / ((l + 1.0) * (l + 1.0));

    let psi = model.basis();
    let x = new.as_dvector();
    let d = &x - model.mean();
    let a = psi.transpose() * &d;
    let mut b = psi * &a + model.mean() - &x;
    let residual = b.norm();

    let (values, rotated) = if residual < cfg.residual_tolerance {
        let mut dm = DMatrix::from_diagonal(model.eigenvalues()) * prior_weight;
        dm += &a * a.transpose() * sample_weight;
        let (vals, r) = sorted_symmetric_eigen(dm);
        (vals, psi * r)
    } else {
        b.unscale_mut(residual);
        let c = b.dot(&d);
        let mut dm = DMatrix::zeros(k + 1, k + 1);
        for i in 0..k {
            dm[(i, i)] = prior_weight * model.eigenvalues()[i];
        }
        let mut aug = DVector::zeros(k + 1);
        aug.rows_mut(0, k).copy_from(&a);
        aug[k] = c;
        dm += &aug * aug.transpose() * sample_weight;
        let (vals, r) = sorted_symmetric_eigen(dm);
        let mut extended = DMatrix::zeros(n, k + 1);
        extended.columns_mut(0, k).copy_from(psi);
        extended.set_column(k, &b);
        (vals, extended * r)
    };

    let mut basis = rotated.columns(0, k).into_owned();
    orthonormalize(&mut basis);
    canonical_signs(&mut basis);
    let eigenvalues = DVector::from_iterator(k, values.iter().take(k).map(|&v| v.max(0.0)));
    let mean = (model.mean() * l + &x) / (l + 1.0);
    let total_variance =
        prior_weight * model.total_variance() + sample_weight * d.norm_squared();

    SignalModel::new(
        basis,
        mean,
        eigenvalues,
        total_variance,
        model.sample_count().saturating_add(1),
    )
}
