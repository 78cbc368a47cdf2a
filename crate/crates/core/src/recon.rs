//! Least-squares reconstruction on the selected rows of a learned model,
//! the Θ stability cost of a pattern, and the reconstruction error bound
//! `ε² ≤ ε_a²/λ_K + σ²·Σ 1/λ_k` over the spectrum of the selected-row Gram
//! matrix.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{DassError, Result};
use crate::field::{select, FieldBlock, Measurement, SamplingPattern, SignalModel};

/// Relative singular-value cutoff for rank detection in the pseudoinverse.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Gram eigenvalues at or below this are treated as zero by [`theta_cost`].
pub const GRAM_EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub estimate: FieldBlock,
    pub coefficients: DVector<f64>,
    pub theta: f64,
    /// Error bound evaluated with the model's own approximation-error
    /// estimate and the measurement's noise level. Infinite when the
    /// pattern is rank-deficient.
    pub bound: f64,
}

/// Thin SVD whose factors reproduce the input.
///
/// nalgebra's default convergence threshold can stop the bidiagonal sweep
/// early on clustered singular values and return factors that recompose to
/// a visibly different matrix. This tries tighter thresholds first and
/// checks the recomposition.
pub fn checked_svd(matrix: &DMatrix<f64>) -> SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    let mut fallback = None;
    for eps in [1e-14, 1e-13, 1e-12] {
        if let Some(svd) = SVD::try_new(matrix.clone(), true, true, eps, 0) {
            let err = svd.clone().recompose().map_or(f64::INFINITY, |r| (r - matrix).amax());
            if err <= 1e-11 * scale {
                return svd;
            }
            fallback.get_or_insert(svd);
        }
    }
    fallback.unwrap_or_else(|| SVD::new(matrix.clone(), true, true))
}

/// Rows of the model basis picked by `pattern` (an M×K matrix).
pub fn selected_rows(model: &SignalModel, pattern: &SamplingPattern) -> Result<DMatrix<f64>> {
    check_pattern(model, pattern)?;
    Ok(model.basis().select_rows(pattern.indices()))
}

fn check_pattern(model: &SignalModel, pattern: &SamplingPattern) -> Result<()> {
    if pattern.block_length() != model.block_length() {
        return Err(DassError::LengthMismatch {
            expected: model.block_length(),
            actual: pattern.block_length(),
        });
    }
    Ok(())
}

/// Eigenvalues of `ÃᵀÃ` sorted decreasing.
pub fn gram_spectrum(selected: &DMatrix<f64>) -> Vec<f64> {
    let gram = selected.transpose() * selected;
    let mut eig: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

fn theta_from_spectrum(spectrum: &[f64], dimension: usize) -> f64 {
    if spectrum.len() < dimension || spectrum.iter().any(|&l| l <= GRAM_EIGEN_FLOOR) {
        return f64::INFINITY;
    }
    spectrum.iter().map(|l| 1.0 / l).sum()
}

/// Σ 1/λ_k over the Gram spectrum of the selected rows; `+∞` when the
/// selection cannot determine all K coefficients.
pub fn theta_cost(model: &SignalModel, pattern: &SamplingPattern) -> Result<f64> {
    let selected = selected_rows(model, pattern)?;
    if pattern.len() < model.dimension() {
        return Ok(f64::INFINITY);
    }
    Ok(theta_from_spectrum(&gram_spectrum(&selected), model.dimension()))
}

/// Θ of `pattern` under each leading truncation of the model: entry `k - 1`
/// is Θ with the first `k` components, for `k = 1..=max_k`.
///
/// Grows a Cholesky factor of the selected-row Gram matrix one column at a
/// time; `Θ = ‖L⁻¹‖_F²` and each new component adds one row to `L⁻¹`. Once
/// a pivot vanishes every larger truncation is `+∞`.
pub fn nested_theta(model: &SignalModel, pattern: &SamplingPattern, max_k: usize) -> Result<Vec<f64>> {
    let a = selected_rows(model, pattern)?;
    let max_k = max_k.min(model.dimension());
    let mut out = Vec::with_capacity(max_k);
    // rows of L⁻¹, lower triangular, row j has j + 1 entries
    let mut linv: Vec<Vec<f64>> = Vec::with_capacity(max_k);
    let mut l: Vec<Vec<f64>> = Vec::with_capacity(max_k);
    let mut theta = 0.0;
    let mut dead = false;
    for k in 0..max_k {
        if dead || k >= pattern.len() {
            out.push(f64::INFINITY);
            continue;
        }
        let col = a.column(k);
        let b: Vec<f64> = (0..k).map(|j| a.column(j).dot(&col)).collect();
        let c = col.norm_squared();
        // forward solve L y = b
        let mut y = vec![0.0; k];
        for i in 0..k {
            let acc: f64 = (0..i).map(|j| l[i][j] * y[j]).sum();
            y[i] = (b[i] - acc) / l[i][i];
        }
        let d2 = c - y.iter().map(|v| v * v).sum::<f64>();
        if d2 <= GRAM_EIGEN_FLOOR.max(c * 1e-12) {
            dead = true;
            out.push(f64::INFINITY);
            continue;
        }
        let d = d2.sqrt();
        let mut row = vec![0.0; k + 1];
        for j in 0..k {
            let acc: f64 = (j..k).map(|i| y[i] * linv[i][j]).sum();
            row[j] = -acc / d;
        }
        row[k] = 1.0 / d;
        theta += row.iter().map(|v| v * v).sum::<f64>();
        out.push(theta);
        let mut lrow = y;
        lrow.push(d);
        l.push(lrow);
        linv.push(row);
    }
    Ok(out)
}

/// `ε_a²/λ_K + σ²·Θ`, or `+∞` for a rank-deficient pattern.
pub fn error_bound(
    model: &SignalModel,
    pattern: &SamplingPattern,
    approximation_error: f64,
    sigma: f64,
) -> Result<f64> {
    if !(approximation_error >= 0.0) || !(sigma >= 0.0) {
        return Err(DassError::InvalidArgument(format!(
            "approximation error ({approximation_error}) and sigma ({sigma}) must be >= 0"
        )));
    }
    let selected = selected_rows(model, pattern)?;
    if pattern.len() < model.dimension() {
        return Ok(f64::INFINITY);
    }
    let spectrum = gram_spectrum(&selected);
    Ok(bound_from_spectrum(&spectrum, model.dimension(), approximation_error, sigma))
}

pub(crate) fn bound_from_spectrum(
    spectrum: &[f64],
    dimension: usize,
    approximation_error: f64,
    sigma: f64,
) -> f64 {
    let theta = theta_from_spectrum(spectrum, dimension);
    if !theta.is_finite() {
        return f64::INFINITY;
    }
    let smallest = spectrum[dimension - 1];
    approximation_error * approximation_error / smallest + sigma * sigma * theta
}

/// Reconstruct a block from `m` with the model: the coefficients solve
/// `min ‖y − x̄[τ] − Ψ[τ]·α‖₂` and the estimate is `Ψ·α + x̄`.
///
/// Fails when the pattern has fewer samples than the model dimension or
/// when the selected rows are numerically rank-deficient.
pub fn ols_reconstruct(model: &SignalModel, m: &Measurement) -> Result<Reconstruction> {
    let k = model.dimension();
    if m.pattern().len() < k {
        return Err(DassError::Underdetermined {
            measurements: m.pattern().len(),
            dimension: k,
        });
    }
    solve(model, m, true)
}

/// Minimum-norm variant that tolerates rank-deficient patterns by dropping
/// singular directions below the cutoff. Used for baselines whose patterns
/// are not designed (e.g. random sampling).
pub fn ols_reconstruct_min_norm(model: &SignalModel, m: &Measurement) -> Result<Reconstruction> {
    solve(model, m, false)
}

fn solve(model: &SignalModel, m: &Measurement, strict: bool) -> Result<Reconstruction> {
    let selected = selected_rows(model, m.pattern())?;
    let mean_at = select(model.mean().as_slice(), m.pattern())?;
    let rhs = DVector::from_iterator(
        m.pattern().len(),
        m.observed().iter().zip(&mean_at).map(|(y, mu)| y - mu),
    );

    let svd = checked_svd(&selected);
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_CUTOFF * s_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if strict && (rank < model.dimension() || s_max == 0.0) {
        return Err(DassError::IllConditioned {
            pattern: m.pattern().to_string(),
        });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut coefficients = DVector::zeros(model.dimension());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let proj = u.column(i).dot(&rhs) / s;
            coefficients += v_t.row(i).transpose() * proj;
        }
    }
    let estimate = model.synthesize(&coefficients);
    let spectrum = gram_spectrum(&selected);
    let theta = if m.pattern().len() < model.dimension() {
        f64::INFINITY
    } else {
        theta_from_spectrum(&spectrum, model.dimension())
    };
    let bound = if theta.is_finite() {
        bound_from_spectrum(
            &spectrum,
            model.dimension(),
            model.approximation_error(),
            m.noise_sigma(),
        )
    } else {
        f64::INFINITY
    };
    Ok(Reconstruction {
        estimate: FieldBlock::single(estimate.as_slice().to_vec(), 0)?,
        coefficients,
        theta,
        bound,
    })
}
