use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{DassError, Result};
use crate::field::{SamplingPattern, SignalModel};

/// How the noise term is weighed against the residual when choosing K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DimensionRule {
    /// Residual per sample against the total noise energy `σ²·Θ̂`, as in
    /// the error bound.
    Bound,
    /// Expected squared error per sample of least squares on an ideal
    /// selection, treating the residual on the sampled rows as white:
    /// `ε̂_a² + (ε̂_a² + σ²)·Θ̂/N`.
    #[default]
    Mse,
}

impl DimensionRule {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bound => "bound",
            Self::Mse => "mse",
        }
    }
}

impl fmt::Display for DimensionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DimensionRule {
    type Err = DassError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bound" => Ok(Self::Bound),
            "mse" => Ok(Self::Mse),
            _ => Err(DassError::Config(format!(
                "unknown dimension rule {s:?} (expected bound or mse)"
            ))),
        }
    }
}

/// Pick the model dimension for `m` samples per block at noise level `sigma`
/// from the full covariance spectrum (sorted decreasing, length N).
///
/// Minimises the estimated error bound over `K ∈ [1, M]`, with the residual
/// energy `Σ_{k>K} spectrum_k / N` as the squared approximation error and an
/// orthonormal-ideal selection whose Gram eigenvalues all equal `M/N`:
///
/// ```text
/// ε̂_a(K)²·N/M + σ²·K·N/M
/// ```
///
/// Ties go to the smaller K.
pub fn select_dimension(spectrum: &[f64], m: usize, sigma: f64) -> Result<usize> {
    select_dimension_with_tail(spectrum, 0.0, spectrum.len(), m, sigma)
}

/// As [`select_dimension`] for a truncated spectrum: `top` holds the leading
/// eigenvalues and `tail_energy` the summed variance beyond them, over
/// blocks of length `block_length`.
pub fn select_dimension_with_tail(
    top: &[f64],
    tail_energy: f64,
    block_length: usize,
    m: usize,
    sigma: f64,
) -> Result<usize> {
    select_dimension_by(DimensionRule::Bound, top, tail_energy, block_length, m, sigma)
}

/// Dimension choice under `rule`. With [`DimensionRule::Mse`] the cost is
/// `ε̂_a(K)²·(1 + K/M) + σ²·K/M`, with the noise floor of
/// [`interpolated_noise_floor`] taken off every eigenvalue first.
pub fn select_dimension_by(
    rule: DimensionRule,
    top: &[f64],
    tail_energy: f64,
    block_length: usize,
    m: usize,
    sigma: f64,
) -> Result<usize> {
    if top.is_empty() {
        return Err(DassError::InvalidArgument("empty spectrum".into()));
    }
    if m < 1 {
        return Err(DassError::InvalidArgument("M must be >= 1".into()));
    }
    if !(sigma >= 0.0) || !(tail_energy >= 0.0) {
        return Err(DassError::InvalidArgument(
            "sigma and tail energy must be >= 0".into(),
        ));
    }
    if block_length == 0 {
        return Err(DassError::InvalidArgument("block length must be >= 1".into()));
    }
    let n = block_length as f64;
    let scale = n / m as f64;
    let max_k = m.min(top.len());

    // The Mse rule removes the noise floor σ² from every direction.
    let floor = match rule {
        DimensionRule::Bound => 0.0,
        DimensionRule::Mse => interpolated_noise_floor(sigma, block_length, m),
    };
    let signal: Vec<f64> = top.iter().map(|v| (v - floor).max(0.0)).collect();
    let tail_energy = (tail_energy - (n - top.len() as f64).max(0.0) * floor).max(0.0);
    // residual[k] = energy beyond the first k components
    let mut residual = tail_energy + signal.iter().sum::<f64>();
    let mut best = (f64::INFINITY, 1);
    for k in 1..=max_k {
        residual = (residual - signal[k - 1]).max(0.0);
        let eps2 = residual / n;
        let cost = match rule {
            DimensionRule::Bound => eps2 * scale + sigma * sigma * k as f64 * scale,
            DimensionRule::Mse => eps2 + (eps2 + sigma * sigma) * k as f64 / m as f64,
        };
        if cost < best.0 {
            best = (cost, k);
        }
    }
    Ok(best.1)
}

/// Noise variance per learned direction when the model is fed linear
/// interpolations of `m` noisy samples per block of `n`: the interpolant
/// spreads about `2/3·N·σ²` of noise energy over an M-dimensional span.
pub fn interpolated_noise_floor(sigma: f64, n: usize, m: usize) -> f64 {
    let spread = (2.0 * n as f64 / (3.0 * m.max(1) as f64)).max(1.0);
    sigma * sigma * spread
}

/// Dimension choice from a learned model's tracked spectrum, treating the
/// variance it does not capture as the tail.
pub fn select_dimension_for_model(
    model: &SignalModel,
    m: usize,
    sigma: f64,
    rule: DimensionRule,
) -> Result<usize> {
    let top = model.eigenvalues().as_slice();
    let captured: f64 = top.iter().sum();
    let tail = (model.total_variance() - captured).max(0.0);
    select_dimension_by(rule, top, tail, model.block_length(), m, sigma)
}

/// Expected-error dimension choice for a known pattern. Ties go to the
/// smaller K.
///
/// The cost is the expected squared error per sample of least squares on
/// the first K components when blocks follow the learned covariance:
///
/// ```text
/// N·ε̂²(K) = Σ_{K<j≤D} λ_j·(1 + ‖Ψ_{K,S}⁺ ψ_{j,S}‖²) + t·(1 + Θ_K/N) + σ²·Θ_K
/// ```
///
/// where D is the tracked dimension, `t` the variance beyond it (treated as
/// white) and `Θ_K` the Θ of the pattern with K components. The model is
/// learned from interpolated noisy measurements, so each eigenvalue and the
/// tail first lose the floor of [`interpolated_noise_floor`].
pub fn select_dimension_for_pattern(
    model: &SignalModel,
    pattern: &SamplingPattern,
    sigma: f64,
) -> Result<usize> {
    Ok(expected_error_by_dimension(model, pattern, sigma)?.0)
}

/// The minimising K of [`select_dimension_for_pattern`] with its cost.
pub fn expected_error_by_dimension(
    model: &SignalModel,
    pattern: &SamplingPattern,
    sigma: f64,
) -> Result<(usize, f64)> {
    if !(sigma >= 0.0) {
        return Err(DassError::InvalidArgument("sigma must be >= 0".into()));
    }
    if pattern.block_length() != model.block_length() {
        return Err(DassError::LengthMismatch {
            expected: model.block_length(),
            actual: pattern.block_length(),
        });
    }
    let n = model.block_length() as f64;
    let d = model.dimension();
    let floor = interpolated_noise_floor(sigma, model.block_length(), pattern.len());
    let signal: Vec<f64> = model.eigenvalues().iter().map(|l| (l - floor).max(0.0)).collect();
    let captured: f64 = model.eigenvalues().iter().sum();
    let tail = (model.total_variance() - captured - (n - d as f64) * floor).max(0.0);

    // Ψ_S = Q·R; Ψ_{K,S}⁺ ψ_{j,S} = R_KK⁻¹ R_{1:K,j} and R_KK⁻¹ is the
    // leading block of R⁻¹.
    let a = model.basis().select_rows(pattern.indices());
    let r = a.qr().r();
    let scale = r.diagonal().amax().max(f64::MIN_POSITIVE);
    let rank = (0..r.nrows().min(d))
        .take_while(|&i| r[(i, i)].abs() > 1e-7 * scale)
        .count();
    if rank == 0 {
        return Ok((1, f64::INFINITY));
    }
    let lead = r.view((0, 0), (rank, rank)).into_owned();
    let inv = lead
        .solve_upper_triangular(&DMatrix::identity(rank, rank))
        .ok_or_else(|| DassError::IllConditioned {
            pattern: format!("{:?}", pattern.indices()),
        })?;

    let mut theta = 0.0;
    let mut best = (1, f64::INFINITY);
    for k in 1..=rank {
        theta += (0..k).map(|i| inv[(i, k - 1)].powi(2)).sum::<f64>();
        let mut alias = 0.0;
        if k < d {
            let coupling = inv.view((0, 0), (k, k)) * r.view((0, k), (k, d - k));
            for (c, j) in (k..d).enumerate() {
                alias += signal[j] * (1.0 + coupling.column(c).norm_squared());
            }
        }
        let cost = (alias + tail * (1.0 + theta / n) + sigma * sigma * theta) / n;
        if cost < best.1 {
            best = (k, cost);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn noiseless_picks_m() {
        let spectrum: Vec<f64> = (0..20).map(|i| 0.5f64.powi(i)).collect();
        assert_eq!(select_dimension(&spectrum, 7, 0.0).unwrap(), 7);
    }

    #[test]
    fn rank_one_field() {
        let mut spectrum = vec![0.0; 12];
        spectrum[0] = 1.0;
        for sigma in [1e-3, 0.1, 2.0] {
            assert_eq!(select_dimension(&spectrum, 5, sigma).unwrap(), 1);
        }
    }

    #[test]
    fn nondecreasing_as_noise_falls() {
        let spectrum: Vec<f64> = (0..16).map(|i| 10.0 * 0.1f64.powi(i)).collect();
        let mut prev = 0;
        for e in (0..40).rev() {
            let sigma = 10f64.powf(e as f64 / 8.0 - 4.0);
            let k = select_dimension(&spectrum, 8, sigma).unwrap();
            assert!(k >= prev, "sigma {sigma}: K {k} < {prev}");
            prev = k;
        }
        assert_eq!(prev, 8);
    }

    #[test]
    fn errors() {
        assert!(select_dimension(&[], 3, 0.1).is_err());
        assert!(select_dimension(&[1.0], 0, 0.1).is_err());
    }

    #[test]
    fn tail_is_counted() {
        // With a heavy tail beyond the tracked spectrum, more components
        // still pay off only when they remove more than σ² each.
        let top = [4.0, 1.0, 0.01];
        let k = select_dimension_with_tail(&top, 50.0, 10, 3, 0.2).unwrap();
        assert_eq!(k, 2);
    }

    #[test]
    fn mse_rule_keeps_more_components() {
        let spectrum: Vec<f64> = (0..32).map(|i| 0.7f64.powi(i)).collect();
        for sigma in [0.05, 0.2, 1.0] {
            let bound = select_dimension_by(DimensionRule::Bound, &spectrum, 0.0, 32, 8, sigma).unwrap();
            let mse = select_dimension_by(DimensionRule::Mse, &spectrum, 0.0, 32, 8, sigma).unwrap();
            assert!(mse >= bound);
        }
        assert_eq!("MSE".parse::<DimensionRule>().unwrap(), DimensionRule::Mse);
        assert!("x".parse::<DimensionRule>().is_err());
    }

    #[test]
    fn pattern_aware_choice_avoids_unsupported_components() {
        // Components 3 and 4 live only on rows the pattern never sees.
        let mut basis = DMatrix::zeros(12, 4);
        for r in 0..6 {
            basis[(r, 0)] = 1.0 / 6f64.sqrt();
            basis[(r, 1)] = if r % 2 == 0 { 1.0 } else { -1.0 } / 6f64.sqrt();
        }
        basis[(8, 2)] = 1.0;
        basis[(10, 3)] = 1.0;
        let model = SignalModel::new(basis, DVector::zeros(12), DVector::from_vec(vec![4.0, 2.0, 1.0, 0.5]), 5.0, 50).unwrap();
        let pattern = SamplingPattern::new(vec![0, 1, 2, 3, 4, 5], 12).unwrap();
        assert_eq!(select_dimension_for_pattern(&model, &pattern, 0.1).unwrap(), 2);
        let wide = SamplingPattern::new(vec![0, 1, 2, 3, 8, 10], 12).unwrap();
        assert_eq!(select_dimension_for_pattern(&model, &wide, 0.01).unwrap(), 4);
    }
}
