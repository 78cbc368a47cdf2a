//! Domain types shared across the crate: field blocks, sampling patterns,
//! learned signal models and measurements, plus the selection operator,
//! noise injection and the RMSE metric.
//!
//! The selection operator is never materialised as a dense 0/1 matrix. A
//! [`SamplingPattern`] is the strictly increasing index set that the matrix
//! would encode, and every operator in the crate works on that index set.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{DassError, Result};

/// The single seedable generator type threaded through every stochastic API.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Generator for an independent sub-stream of `seed`, e.g. one per block.
pub fn rng_stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One block of the discretised field. Multi-node blocks are the node-major
/// concatenation of `node_count` segments of `per_node_length` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldBlock {
    values: Vec<f64>,
    block_index: usize,
    node_count: usize,
    per_node_length: usize,
}

impl FieldBlock {
    pub fn new(values: Vec<f64>, block_index: usize, node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(DassError::InvalidArgument("node_count must be >= 1".into()));
        }
        if values.is_empty() || !values.len().is_multiple_of(node_count) {
            return Err(DassError::InvalidArgument(format!(
                "block length {} is not a positive multiple of node_count {}",
                values.len(),
                node_count
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DassError::InvalidArgument(format!(
                "non-finite value at index {i}"
            )));
        }
        let per_node_length = values.len() / node_count;
        Ok(Self {
            values,
            block_index,
            node_count,
            per_node_length,
        })
    }

    /// Single-node block.
    pub fn single(values: Vec<f64>, block_index: usize) -> Result<Self> {
        Self::new(values, block_index, 1)
    }

    /// Node-major concatenation of single-node blocks sharing an index.
    pub fn concat(parts: &[FieldBlock]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| DassError::InvalidArgument("nothing to concatenate".into()))?;
        let mut values = Vec::with_capacity(first.len() * parts.len());
        let mut nodes = 0;
        for p in parts {
            if p.per_node_length != first.per_node_length {
                return Err(DassError::LengthMismatch {
                    expected: first.per_node_length,
                    actual: p.per_node_length,
                });
            }
            values.extend_from_slice(&p.values);
            nodes += p.node_count;
        }
        Self::new(values, first.block_index, nodes)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block_index(&self) -> usize {
        self.block_index
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn per_node_length(&self) -> usize {
        self.per_node_length
    }

    /// Samples of one node.
    pub fn node(&self, node: usize) -> &[f64] {
        let start = node * self.per_node_length;
        &self.values[start..start + self.per_node_length]
    }

    /// Keep the first `nodes` node segments.
    pub fn leading_nodes(&self, nodes: usize) -> Result<Self> {
        if nodes == 0 || nodes > self.node_count {
            return Err(DassError::InvalidArgument(format!(
                "cannot take {nodes} of {} nodes",
                self.node_count
            )));
        }
        Self::new(
            self.values[..nodes * self.per_node_length].to_vec(),
            self.block_index,
            nodes,
        )
    }

    /// Single-node block holding node `node`'s segment.
    pub fn node_block(&self, node: usize) -> Result<Self> {
        if node >= self.node_count {
            return Err(DassError::IndexOutOfRange {
                index: node,
                len: self.node_count,
            });
        }
        Self::single(self.node(node).to_vec(), self.block_index)
    }

    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

/// Strictly increasing index set into a block of length `block_length`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SamplingPattern {
    indices: Vec<usize>,
    block_length: usize,
}

impl SamplingPattern {
    pub fn new(indices: Vec<usize>, block_length: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(DassError::InvalidPattern("pattern is empty".into()));
        }
        if indices.len() > block_length {
            return Err(DassError::InvalidPattern(format!(
                "{} indices for block length {block_length}",
                indices.len()
            )));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(DassError::InvalidPattern(format!(
                "indices not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= block_length {
                return Err(DassError::IndexOutOfRange {
                    index: last,
                    len: block_length,
                });
            }
        }
        Ok(Self {
            indices,
            block_length,
        })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut indices: Vec<usize>, block_length: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, block_length)
    }

    pub fn full(block_length: usize) -> Result<Self> {
        Self::new((0..block_length).collect(), block_length)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    /// Parse the comma-separated wire form produced by `Display`.
    pub fn parse(text: &str, block_length: usize) -> Result<Self> {
        let mut indices = Vec::new();
        for (column, field) in text.trim().split(',').enumerate() {
            let idx = field.trim().parse::<usize>().map_err(|e| DassError::Parse {
                line: 1,
                column: column + 1,
                message: format!("{field:?}: {e}"),
            })?;
            indices.push(idx);
        }
        Self::new(indices, block_length)
    }
}

impl fmt::Display for SamplingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, idx) in self.indices.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{idx}")?;
        }
        Ok(())
    }
}

/// Orthonormality tolerance for model bases.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Learned affine subspace: `x ≈ basis · alpha + mean`.
///
/// `total_variance` is the trace of the covariance estimate the model was
/// learned from; the energy it holds beyond the retained eigenvalues is the
/// residual used to estimate the approximation error.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalModel {
    basis: DMatrix<f64>,
    mean: DVector<f64>,
    eigenvalues: DVector<f64>,
    total_variance: f64,
    sample_count: usize,
}

impl SignalModel {
    pub fn new(
        basis: DMatrix<f64>,
        mean: DVector<f64>,
        eigenvalues: DVector<f64>,
        total_variance: f64,
        sample_count: usize,
    ) -> Result<Self> {
        let (n, k) = basis.shape();
        if k == 0 || k > n {
            return Err(DassError::InvalidArgument(format!(
                "basis shape {n}x{k} must satisfy 1 <= K <= N"
            )));
        }
        if mean.len() != n {
            return Err(DassError::LengthMismatch {
                expected: n,
                actual: mean.len(),
            });
        }
        if eigenvalues.len() != k {
            return Err(DassError::LengthMismatch {
                expected: k,
                actual: eigenvalues.len(),
            });
        }
        let deviation = orthonormality_deviation(&basis);
        if !(deviation <= ORTHONORMAL_TOL) {
            return Err(DassError::NotOrthonormal { deviation });
        }
        if eigenvalues.iter().any(|&l| !(l >= 0.0)) {
            return Err(DassError::InvalidArgument(
                "eigenvalues must be nonnegative".into(),
            ));
        }
        if eigenvalues.as_slice().windows(2).any(|w| w[0] < w[1]) {
            return Err(DassError::InvalidArgument(
                "eigenvalues must be sorted nonincreasing".into(),
            ));
        }
        if !(total_variance >= 0.0) {
            return Err(DassError::InvalidArgument(
                "total variance must be nonnegative".into(),
            ));
        }
        Ok(Self {
            basis,
            mean,
            eigenvalues,
            total_variance,
            sample_count,
        })
    }

    /// Zero-mean model with the given orthonormal basis and unit eigenvalues.
    pub fn from_basis(basis: DMatrix<f64>) -> Result<Self> {
        let (n, k) = basis.shape();
        Self::new(
            basis,
            DVector::zeros(n),
            DVector::from_element(k, 1.0),
            k as f64,
            usize::MAX,
        )
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn block_length(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    /// Ready for reconstruction and scheduling once two blocks are absorbed.
    pub fn ensure_ready(&self) -> Result<()> {
        if self.sample_count < MIN_READY_SAMPLES {
            return Err(DassError::ModelNotReady {
                absorbed: self.sample_count,
                required: MIN_READY_SAMPLES,
            });
        }
        Ok(())
    }

    /// Leading `k` components of the model.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.dimension() {
            return Err(DassError::InvalidArgument(format!(
                "cannot truncate dimension {} to {k}",
                self.dimension()
            )));
        }
        Ok(Self {
            basis: self.basis.columns(0, k).into_owned(),
            mean: self.mean.clone(),
            eigenvalues: self.eigenvalues.rows(0, k).into_owned(),
            total_variance: self.total_variance,
            sample_count: self.sample_count,
        })
    }

    /// Variance not captured by the retained components, per sample.
    /// This is the squared approximation error estimate.
    pub fn approximation_error_sq(&self) -> f64 {
        let captured: f64 = self.eigenvalues.iter().sum();
        (self.total_variance - captured).max(0.0) / self.block_length() as f64
    }

    pub fn approximation_error(&self) -> f64 {
        self.approximation_error_sq().sqrt()
    }

    /// `basis · coefficients + mean`.
    pub fn synthesize(&self, coefficients: &DVector<f64>) -> DVector<f64> {
        &self.basis * coefficients + &self.mean
    }
}

pub const MIN_READY_SAMPLES: usize = 2;

/// Largest absolute entry of `BᵀB − I`.
pub fn orthonormality_deviation(basis: &DMatrix<f64>) -> f64 {
    let gram = basis.transpose() * basis;
    let k = gram.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Observed samples together with the pattern that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    observed: Vec<f64>,
    pattern: SamplingPattern,
    noise_sigma: f64,
}

impl Measurement {
    pub fn new(observed: Vec<f64>, pattern: SamplingPattern, noise_sigma: f64) -> Result<Self> {
        if observed.len() != pattern.len() {
            return Err(DassError::LengthMismatch {
                expected: pattern.len(),
                actual: observed.len(),
            });
        }
        if !(noise_sigma >= 0.0) {
            return Err(DassError::InvalidArgument(format!(
                "noise sigma must be >= 0, got {noise_sigma}"
            )));
        }
        Ok(Self {
            observed,
            pattern,
            noise_sigma,
        })
    }

    /// Sense `x` through `pattern` and add white Gaussian noise.
    pub fn sense(x: &FieldBlock, pattern: &SamplingPattern, sigma: f64, rng: &mut SimRng) -> Result<Self> {
        let clean = apply_pattern(x, pattern)?;
        let observed = add_noise(&clean, sigma, rng)?;
        Self::new(observed, pattern.clone(), sigma)
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }
}

/// Pure selection `x[τ]`.
pub fn apply_pattern(x: &FieldBlock, pattern: &SamplingPattern) -> Result<Vec<f64>> {
    select(x.values(), pattern)
}

pub(crate) fn select(values: &[f64], pattern: &SamplingPattern) -> Result<Vec<f64>> {
    if pattern.block_length() != values.len() {
        return Err(DassError::LengthMismatch {
            expected: pattern.block_length(),
            actual: values.len(),
        });
    }
    Ok(pattern.indices().iter().map(|&i| values[i]).collect())
}

/// `y + w` with `w` i.i.d. N(0, σ²) drawn from `rng`.
pub fn add_noise<R: Rng + ?Sized>(y: &[f64], sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(DassError::InvalidArgument(format!(
            "noise sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(y.to_vec());
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    Ok(y.iter().map(|&v| v + normal.sample(rng)).collect())
}

/// [`add_noise`] with a fresh generator seeded by `seed`.
pub fn add_noise_seeded(y: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    add_noise(y, sigma, &mut rng_from_seed(seed))
}

/// `‖x − x̃‖₂ / √N`.
pub fn rmse(x: &FieldBlock, estimate: &FieldBlock) -> Result<f64> {
    rmse_slices(x.values(), estimate.values())
}

pub fn rmse_slices(x: &[f64], estimate: &[f64]) -> Result<f64> {
    if x.len() != estimate.len() {
        return Err(DassError::LengthMismatch {
            expected: x.len(),
            actual: estimate.len(),
        });
    }
    if x.is_empty() {
        return Err(DassError::InvalidArgument("empty blocks".into()));
    }
    let sq: f64 = x.iter().zip(estimate).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sq / x.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn block(v: &[f64]) -> FieldBlock {
        FieldBlock::single(v.to_vec(), 0).unwrap()
    }

    #[test]
    fn selection_examples() {
        let x = block(&[10.0, 20.0, 30.0, 40.0]);
        let p = SamplingPattern::new(vec![0, 2], 4).unwrap();
        assert_eq!(apply_pattern(&x, &p).unwrap(), vec![10.0, 30.0]);

        let full = SamplingPattern::full(4).unwrap();
        assert_eq!(apply_pattern(&x, &full).unwrap(), x.values());

        let x12 = block(&(0..12).map(|i| i as f64).collect::<Vec<_>>());
        let uniform = SamplingPattern::new(vec![0, 3, 6, 9], 12).unwrap();
        assert_eq!(apply_pattern(&x12, &uniform).unwrap(), vec![0.0, 3.0, 6.0, 9.0]);
    }

    #[test]
    fn selection_rejects_mismatch() {
        let x = block(&[1.0, 2.0, 3.0]);
        let p = SamplingPattern::new(vec![0, 2], 4).unwrap();
        assert!(matches!(
            apply_pattern(&x, &p),
            Err(DassError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn pattern_validation() {
        assert!(SamplingPattern::new(vec![], 4).is_err());
        assert!(SamplingPattern::new(vec![1, 1], 4).is_err());
        assert!(SamplingPattern::new(vec![2, 1], 4).is_err());
        assert!(matches!(
            SamplingPattern::new(vec![0, 4], 4),
            Err(DassError::IndexOutOfRange { index: 4, len: 4 })
        ));
        let p = SamplingPattern::from_unsorted(vec![5, 1, 3, 1], 6).unwrap();
        assert_eq!(p.indices(), &[1, 3, 5]);
    }

    #[test]
    fn pattern_wire_format() {
        let p = SamplingPattern::new(vec![0, 3, 6, 9], 12).unwrap();
        assert_eq!(p.to_string(), "0,3,6,9");
        assert_eq!(SamplingPattern::parse("0, 3,6,9\n", 12).unwrap(), p);
        assert!(SamplingPattern::parse("0,x", 12).is_err());
    }

    #[test]
    fn field_block_invariants() {
        assert!(FieldBlock::new(vec![1.0; 5], 0, 2).is_err());
        assert!(FieldBlock::single(vec![1.0, f64::NAN], 0).is_err());
        let b = FieldBlock::new((0..6).map(f64::from).collect(), 3, 3).unwrap();
        assert_eq!(b.per_node_length(), 2);
        assert_eq!(b.node(1), &[2.0, 3.0]);
        assert_eq!(b.leading_nodes(2).unwrap().values(), &[0.0, 1.0, 2.0, 3.0]);
        let joined = FieldBlock::concat(&[b.node_block(2).unwrap(), b.node_block(0).unwrap()]).unwrap();
        assert_eq!(joined.values(), &[4.0, 5.0, 0.0, 1.0]);
        assert_eq!(joined.node_count(), 2);
    }

    #[test]
    fn zero_noise_is_identity() {
        let y = vec![1.5, -2.0, 3.25];
        assert_eq!(add_noise_seeded(&y, 0.0, 9).unwrap(), y);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let y = vec![0.0; 64];
        let a = add_noise_seeded(&y, 0.7, 42).unwrap();
        let b = add_noise_seeded(&y, 0.7, 42).unwrap();
        let c = add_noise_seeded(&y, 0.7, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_variance_matches_sigma() {
        let y = vec![0.0; 100_000];
        let w = add_noise_seeded(&y, 1.0, 2024).unwrap();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w.len() as f64;
        assert!((0.98..=1.02).contains(&var), "sample variance {var}");
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(add_noise_seeded(&[0.0], -1.0, 0).is_err());
        assert!(Measurement::new(vec![0.0], SamplingPattern::full(1).unwrap(), -0.1).is_err());
    }

    #[test]
    fn rmse_examples() {
        let x = block(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(rmse(&x, &x).unwrap(), 0.0);
        let shifted = block(&[2.0, 3.0, 4.0, 5.0]);
        assert!((rmse(&x, &shifted).unwrap() - 1.0).abs() < 1e-15);
        let d = rmse(&block(&[0.0, 0.0]), &block(&[3.0, 4.0])).unwrap();
        assert!((d - 5.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(rmse(&x, &block(&[1.0])).is_err());
    }

    #[test]
    fn model_validation() {
        let basis = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(SignalModel::from_basis(basis.clone()).is_ok());
        let skewed = DMatrix::from_row_slice(3, 2, &[1.0, 0.1, 0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            SignalModel::from_basis(skewed),
            Err(DassError::NotOrthonormal { .. })
        ));
        let unsorted = SignalModel::new(
            basis,
            DVector::zeros(3),
            DVector::from_vec(vec![1.0, 2.0]),
            3.0,
            5,
        );
        assert!(unsorted.is_err());
    }

    proptest! {
        #[test]
        fn selection_is_linear(
            x in prop::collection::vec(-100.0f64..100.0, 16),
            z in prop::collection::vec(-100.0f64..100.0, 16),
            a in -5.0f64..5.0,
            b in -5.0f64..5.0,
            mask in prop::collection::vec(any::<bool>(), 16),
        ) {
            let mut idx: Vec<usize> = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
            if idx.is_empty() { idx.push(0); }
            let p = SamplingPattern::new(idx, 16).unwrap();
            let combo: Vec<f64> = x.iter().zip(&z).map(|(u, v)| a * u + b * v).collect();
            let lhs = apply_pattern(&block(&combo), &p).unwrap();
            let px = apply_pattern(&block(&x), &p).unwrap();
            let pz = apply_pattern(&block(&z), &p).unwrap();
            for i in 0..lhs.len() {
                prop_assert!((lhs[i] - (a * px[i] + b * pz[i])).abs() < 1e-9);
            }
        }

        #[test]
        fn rmse_is_a_scaled_metric(
            x in prop::collection::vec(-50.0f64..50.0, 8),
            y in prop::collection::vec(-50.0f64..50.0, 8),
            z in prop::collection::vec(-50.0f64..50.0, 8),
        ) {
            let (bx, by, bz) = (block(&x), block(&y), block(&z));
            let dxy = rmse(&bx, &by).unwrap();
            prop_assert!((dxy - rmse(&by, &bx).unwrap()).abs() < 1e-12);
            prop_assert!(dxy <= rmse(&bx, &bz).unwrap() + rmse(&bz, &by).unwrap() + 1e-9);
        }
    }
}
