//! Block-by-block experiment engine.
//!
//! For every block the sink senses through the current pattern, reconstructs
//! with the method under test, absorbs the interpolated measurement into its
//! model and plans the next block. Planning (dimension and pattern) for
//! block `t + 1` only sees data up to block `t`.
//!
//! Measurement noise for block `t` is one standard-normal field drawn from a
//! stream keyed by the seed and `t`, read at the sampled indices, so every
//! method sees the same noise value at a given position.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use crate::cs::{l1_reconstruct, L1Config};
use crate::energy::EnergyPlatform;
use crate::error::{DassError, Result};
use crate::field::{rmse_slices, rng_stream, FieldBlock, Measurement, SamplingPattern, SignalModel};
use crate::model::{
    expected_error_by_dimension, interpolate_segments, select_dimension_for_model, select_dimension_for_pattern, Dimension, DimensionRule, Learner,
    LearnerConfig,
};
use crate::recon::{error_bound, ols_reconstruct, ols_reconstruct_min_norm, theta_cost};
use crate::scheduler::{
    greedy_elimination, greedy_schedule_against, random_pattern, uniform_pattern_nodes, GreedyOptions, PatternSource,
};

const NOISE_SALT: u64 = 0x6e6f_6973_655f_7631;
const PATTERN_SALT: u64 = 0x7061_7474_6572_6e31;
const NODE_SEED_STEP: u64 = 0x9e37_79b9_7f4a_7c15;

pub const DEFAULT_SNR_WINDOW: usize = 30;
pub const MIN_WARMUP: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dass,
    OlsUniform,
    OlsRandom,
    Cs,
    Csn,
}

impl Method {
    pub const ALL: [Method; 5] = [Self::Dass, Self::OlsUniform, Self::OlsRandom, Self::Cs, Self::Csn];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dass => "DASS",
            Self::OlsUniform => "OLS_uniform",
            Self::OlsRandom => "OLS_random",
            Self::Cs => "CS",
            Self::Csn => "CSN",
        }
    }

    fn is_ols(self) -> bool {
        matches!(self, Self::Dass | Self::OlsUniform | Self::OlsRandom)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = DassError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        match key.as_str() {
            "dass" => Ok(Self::Dass),
            "ols_uniform" => Ok(Self::OlsUniform),
            "ols_random" => Ok(Self::OlsRandom),
            "cs" => Ok(Self::Cs),
            "csn" => Ok(Self::Csn),
            _ => Err(DassError::Config(format!(
                "unknown method {s:?} (expected DASS, OLS_uniform, OLS_random, CS or CSN)"
            ))),
        }
    }
}

/// Measurement noise, either absolute or relative to the signal power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    /// `10·log10(P/σ²)` with `P` the mean square of the ground truth over a
    /// trailing window of blocks.
    SnrDb(f64),
    Sigma(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub gamma: f64,
    pub noise: NoiseSpec,
    /// Samples per node per block.
    pub block_length: usize,
    pub node_count: usize,
    pub learner: LearnerConfig,
    /// Blocks to run; `None` runs every block of the data.
    pub blocks: Option<usize>,
    pub seed: u64,
    /// Error of the SNR the sink believes in; negative underestimates.
    pub snr_estimation_error_db: f64,
    pub scheduler: GreedyOptions,
    /// Dictionary size for CS and CSN; `None` uses M.
    pub cs_dimension: Option<usize>,
    /// Residual budget for CSN; `None` uses `σ̂·√M`.
    pub xi: Option<f64>,
    pub l1: L1Config,
    pub snr_window: usize,
    /// Warmup length; `None` uses the learner's seeding length, at least 5.
    pub warmup: Option<usize>,
    pub platform: Option<EnergyPlatform>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::Dass,
            gamma: 0.1,
            noise: NoiseSpec::SnrDb(30.0),
            block_length: 144,
            node_count: 1,
            learner: LearnerConfig::default(),
            blocks: None,
            seed: 0,
            snr_estimation_error_db: 0.0,
            scheduler: GreedyOptions::default(),
            cs_dimension: None,
            xi: None,
            l1: L1Config::default(),
            snr_window: DEFAULT_SNR_WINDOW,
            warmup: None,
            platform: None,
        }
    }
}

impl ExperimentConfig {
    pub fn total_length(&self) -> usize {
        self.block_length * self.node_count
    }

    /// `M = ⌊γ·N_total⌋`.
    pub fn samples_per_block(&self) -> usize {
        (self.gamma * self.total_length() as f64 + 1e-9).floor() as usize
    }

    /// Set γ so that exactly `m` samples are taken per block.
    pub fn with_samples(mut self, m: usize) -> Self {
        self.gamma = m as f64 / self.total_length() as f64;
        self
    }

    /// Dimension the learner tracks: enough for the OLS dimension and the
    /// CS dictionary.
    pub fn tracked_dimension(&self) -> usize {
        let m = self.samples_per_block();
        let want = match (self.method, self.learner.dimension) {
            (Method::Cs | Method::Csn, _) => self.cs_dimension.unwrap_or(m),
            (_, Dimension::Fixed(k)) => k,
            (_, Dimension::Auto) => m,
        };
        want.clamp(1, self.total_length())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(DassError::Config(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if self.block_length == 0 || self.node_count == 0 {
            return Err(DassError::Config("block length and node count must be >= 1".into()));
        }
        let m = self.samples_per_block();
        if m < 1 {
            return Err(DassError::Config(format!(
                "gamma {} gives no samples for blocks of {}",
                self.gamma,
                self.total_length()
            )));
        }
        match self.noise {
            NoiseSpec::SnrDb(s) if !s.is_finite() => {
                return Err(DassError::Config(format!("SNR must be finite, got {s}")));
            }
            NoiseSpec::Sigma(s) if !(s >= 0.0) || !s.is_finite() => {
                return Err(DassError::Config(format!("sigma must be finite and >= 0, got {s}")));
            }
            _ => {}
        }
        if !self.snr_estimation_error_db.is_finite() {
            return Err(DassError::Config("SNR estimation error must be finite".into()));
        }
        self.learner.validate(self.total_length())?;
        if let (true, Dimension::Fixed(k)) = (self.method.is_ols(), self.learner.dimension) {
            if k > m {
                return Err(DassError::Config(format!(
                    "model dimension {k} exceeds the {m} samples per block"
                )));
            }
        }
        if let Some(k) = self.cs_dimension {
            if k == 0 || k > self.total_length() {
                return Err(DassError::Config(format!("CS dictionary size {k} out of range")));
            }
        }
        if self.xi.is_some() && self.method != Method::Csn {
            return Err(DassError::Config(format!(
                "a residual budget only applies to CSN, not {}",
                self.method
            )));
        }
        if let Some(xi) = self.xi {
            if !(xi >= 0.0) || !xi.is_finite() {
                return Err(DassError::Config(format!("xi must be finite and >= 0, got {xi}")));
            }
        }
        if self.snr_window == 0 {
            return Err(DassError::Config("SNR window must be >= 1 block".into()));
        }
        self.l1.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    pub block_index: usize,
    pub samples: usize,
    /// Model dimension (OLS) or dictionary size (CS) used.
    pub dimension: usize,
    pub rmse: f64,
    pub theta: f64,
    /// Θ of the uniform pattern under the same model.
    pub theta_uniform: f64,
    /// Error bound from the model's estimates of ε_a and σ.
    pub bound: f64,
    pub source: PatternSource,
    /// The strict least-squares solve failed and the minimum-norm solution
    /// was used, or the ℓ1 solver did not certify convergence.
    pub degraded: bool,
    pub sigma: f64,
    pub pattern: SamplingPattern,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub method: Method,
    pub gamma: f64,
    pub samples_per_block: usize,
    pub block_length: usize,
    pub node_count: usize,
    pub seed: u64,
    pub noise: NoiseSpec,
    pub warmup: usize,
    pub records: Vec<BlockRecord>,
    pub wall_time: Duration,
    pub platform: Option<EnergyPlatform>,
}

impl ExperimentReport {
    pub fn mean_rmse(&self) -> f64 {
        mean(self.records.iter().map(|r| r.rmse))
    }

    /// `sqrt(mean(rmse²))`, the RMSE over all post-warmup samples.
    pub fn pooled_rmse(&self) -> f64 {
        mean(self.records.iter().map(|r| r.rmse * r.rmse)).sqrt()
    }

    pub fn mean_theta(&self) -> f64 {
        mean(self.records.iter().map(|r| r.theta))
    }

    pub fn mean_theta_uniform(&self) -> f64 {
        mean(self.records.iter().map(|r| r.theta_uniform))
    }

    pub fn samples_used(&self) -> usize {
        self.records.iter().map(|r| r.samples).sum()
    }

    /// Sensing and radio energy of the post-warmup blocks, when a platform
    /// is configured.
    pub fn energy_joules(&self) -> Option<f64> {
        self.platform
            .as_ref()
            .map(|p| p.sparse_energy(self.samples_used(), self.records.len()))
    }

    /// Records and settings equal; wall time ignored.
    pub fn same_results(&self, other: &Self) -> bool {
        self.method == other.method
            && self.gamma == other.gamma
            && self.samples_per_block == other.samples_per_block
            && self.seed == other.seed
            && self.noise == other.noise
            && self.warmup == other.warmup
            && self.records == other.records
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Pattern and model dimension chosen for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub pattern: SamplingPattern,
    pub source: PatternSource,
    pub dimension: usize,
}

/// Run one experiment over `data`.
pub fn run_experiment(data: &[FieldBlock], cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let started = Instant::now();
    let total = cfg.total_length();
    let blocks = cfg.blocks.unwrap_or(data.len());
    if blocks > data.len() {
        return Err(DassError::Config(format!(
            "{blocks} blocks requested but the data has {}",
            data.len()
        )));
    }
    for blk in &data[..blocks] {
        if blk.len() != total || blk.node_count() != cfg.node_count {
            return Err(DassError::LengthMismatch {
                expected: total,
                actual: blk.len(),
            });
        }
    }

    let m = cfg.samples_per_block();
    let mut learner = Learner::new(cfg.learner.clone(), total, cfg.tracked_dimension())?;
    let warmup = match cfg.warmup {
        Some(w) => {
            if w < learner.seed_blocks() {
                return Err(DassError::Config(format!(
                    "warmup {w} shorter than the {} blocks needed to seed the model",
                    learner.seed_blocks()
                )));
            }
            w
        }
        None => learner.seed_blocks().max(MIN_WARMUP),
    };
    let uniform = uniform_pattern_nodes(cfg.block_length, cfg.node_count, m)?;
    let powers: Vec<f64> = data[..blocks]
        .iter()
        .map(|b| b.values().iter().map(|v| v * v).sum::<f64>() / total as f64)
        .collect();

    let mut records = Vec::with_capacity(blocks.saturating_sub(warmup));
    let mut plan: Option<Plan> = None;
    for (t, truth) in data[..blocks].iter().enumerate() {
        let (sigma, sigma_est) = noise_levels(cfg, &powers, t);
        let pattern = plan.as_ref().map_or(&uniform, |p| &p.pattern).clone();
        let measurement = sense(truth, &pattern, sigma, cfg.seed, t)?;

        if t >= warmup {
            let p = plan.as_ref().expect("planned after warmup");
            let model = learner.model()?;
            records.push(reconstruct(cfg, model, p, &measurement, truth, &uniform, sigma, sigma_est)?);
        }

        let fallback = learner.model().ok().map(|mdl| mdl.mean().as_slice().to_vec());
        let filled = interpolate_segments(&measurement, cfg.node_count, fallback.as_deref())?;
        learner.absorb(&filled)?;

        if t + 1 >= warmup && t + 1 < blocks {
            plan = Some(plan_next(cfg, learner.model()?, m, sigma_est, t + 1)?);
        }
    }

    Ok(ExperimentReport {
        method: cfg.method,
        gamma: cfg.gamma,
        samples_per_block: m,
        block_length: cfg.block_length,
        node_count: cfg.node_count,
        seed: cfg.seed,
        noise: cfg.noise,
        warmup,
        records,
        wall_time: started.elapsed(),
        platform: cfg.platform.clone(),
    })
}

/// True and believed noise level for block `t`.
fn noise_levels(cfg: &ExperimentConfig, powers: &[f64], t: usize) -> (f64, f64) {
    match cfg.noise {
        NoiseSpec::SnrDb(snr) => {
            let lo = (t + 1).saturating_sub(cfg.snr_window);
            let window = &powers[lo..=t];
            let p = window.iter().sum::<f64>() / window.len() as f64;
            let sigma = (p / 10f64.powf(snr / 10.0)).sqrt();
            let sigma_est = (p / 10f64.powf((snr + cfg.snr_estimation_error_db) / 10.0)).sqrt();
            (sigma, sigma_est)
        }
        NoiseSpec::Sigma(s) => (s, s * 10f64.powf(-cfg.snr_estimation_error_db / 20.0)),
    }
}

fn sense(truth: &FieldBlock, pattern: &SamplingPattern, sigma: f64, seed: u64, t: usize) -> Result<Measurement> {
    let mut rng = rng_stream(seed ^ NOISE_SALT, t as u64);
    let field: Vec<f64> = (0..truth.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let observed = pattern
        .indices()
        .iter()
        .map(|&i| truth.values()[i] + sigma * field[i])
        .collect();
    Measurement::new(observed, pattern.clone(), sigma)
}

/// Model dimension for the next block. `reference` is the pattern the
/// expected-error rule prices: the block's own pattern when it is known in
/// advance, otherwise the uniform fallback.
fn ols_dimension(
    cfg: &ExperimentConfig,
    model: &SignalModel,
    reference: &SamplingPattern,
    sigma_est: f64,
) -> Result<usize> {
    let m = reference.len();
    let k = match (cfg.learner.dimension, cfg.learner.dimension_rule) {
        (Dimension::Fixed(k), _) => k,
        (Dimension::Auto, DimensionRule::Bound) => {
            select_dimension_for_model(model, m, sigma_est, DimensionRule::Bound)?
        }
        (Dimension::Auto, DimensionRule::Mse) => select_dimension_for_pattern(model, reference, sigma_est)?,
    };
    Ok(k.min(model.dimension()).min(m))
}

/// DASS picks its dimension together with its pattern: a provisional
/// greedy pattern is drawn at the ideal-selection choice of K, and every K
/// is priced against both that pattern and the uniform one. When the greedy
/// pattern wins it is kept as is; otherwise the usual greedy-or-uniform
/// decision runs at the uniform pattern's best K.
fn plan_dass(cfg: &ExperimentConfig, model: &SignalModel, uniform: &SamplingPattern, sigma_est: f64) -> Result<Plan> {
    let m = uniform.len();
    let k = if cfg.learner.dimension == Dimension::Auto && cfg.learner.dimension_rule == DimensionRule::Mse {
        let k0 = select_dimension_for_model(model, m, sigma_est, DimensionRule::Mse)?.min(model.dimension());
        let trace = greedy_elimination(&model.truncated(k0)?, m, cfg.scheduler)?;
        let greedy = SamplingPattern::from_unsorted(trace.selected, uniform.block_length())?;
        let (kg, cg) = expected_error_by_dimension(model, &greedy, sigma_est)?;
        let (ku, cu) = expected_error_by_dimension(model, uniform, sigma_est)?;
        if cg < cu {
            return Ok(Plan {
                pattern: greedy,
                source: PatternSource::Greedy,
                dimension: kg,
            });
        }
        ku
    } else {
        ols_dimension(cfg, model, uniform, sigma_est)?
    };
    let reduced = model.truncated(k)?;
    let decision = greedy_schedule_against(&reduced, uniform, reduced.approximation_error(), sigma_est, cfg.scheduler)?;
    Ok(Plan {
        pattern: decision.pattern,
        source: decision.source,
        dimension: k,
    })
}

/// Plan block `next` with `m` samples from the current model, as the
/// simulator does after absorbing block `next - 1`.
pub fn plan_next(cfg: &ExperimentConfig, model: &SignalModel, m: usize, sigma_est: f64, next: usize) -> Result<Plan> {
    let total = cfg.total_length();
    let uniform = uniform_pattern_nodes(cfg.block_length, cfg.node_count, m)?;
    match cfg.method {
        Method::Dass => plan_dass(cfg, model, &uniform, sigma_est),
        Method::OlsUniform => Ok(Plan {
            dimension: ols_dimension(cfg, model, &uniform, sigma_est)?,
            pattern: uniform,
            source: PatternSource::Uniform,
        }),
        Method::OlsRandom => {
            let mut rng = rng_stream(cfg.seed ^ PATTERN_SALT, next as u64);
            let pattern = random_pattern(total, m, &mut rng)?;
            Ok(Plan {
                dimension: ols_dimension(cfg, model, &pattern, sigma_est)?,
                pattern,
                source: PatternSource::Random,
            })
        }
        Method::Cs | Method::Csn => Ok(Plan {
            pattern: uniform,
            source: PatternSource::Uniform,
            dimension: cfg.cs_dimension.unwrap_or(m).min(model.dimension()),
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn reconstruct(
    cfg: &ExperimentConfig,
    model: &SignalModel,
    plan: &Plan,
    measurement: &Measurement,
    truth: &FieldBlock,
    uniform: &SamplingPattern,
    sigma: f64,
    sigma_est: f64,
) -> Result<BlockRecord> {
    let reduced = model.truncated(plan.dimension)?;
    let pattern = measurement.pattern();
    let m = pattern.len();
    let (estimate, degraded): (DVector<f64>, bool) = match cfg.method {
        Method::Dass | Method::OlsUniform | Method::OlsRandom => match ols_reconstruct(&reduced, measurement) {
            Ok(r) => (r.estimate.as_dvector(), false),
            Err(DassError::IllConditioned { .. } | DassError::Underdetermined { .. }) => {
                (ols_reconstruct_min_norm(&reduced, measurement)?.estimate.as_dvector(), true)
            }
            Err(e) => return Err(e),
        },
        Method::Cs | Method::Csn => {
            let xi = if cfg.method == Method::Cs {
                0.0
            } else {
                cfg.xi.unwrap_or(sigma_est * (m as f64).sqrt())
            };
            let l1 = L1Config { xi, ..cfg.l1.clone() };
            let r = l1_reconstruct(&reduced, measurement, &l1)?;
            let ok = r.status == crate::cs::L1Status::Converged;
            (r.estimate.as_dvector(), !ok)
        }
    };
    let theta = theta_cost(&reduced, pattern)?;
    let theta_uniform = theta_cost(&reduced, uniform)?;
    let bound = error_bound(&reduced, pattern, reduced.approximation_error(), sigma_est)?;
    Ok(BlockRecord {
        block_index: truth.block_index(),
        samples: m,
        dimension: plan.dimension,
        rmse: rmse_slices(truth.values(), estimate.as_slice())?,
        theta,
        theta_uniform,
        bound,
        source: plan.source,
        degraded,
        sigma,
        pattern: pattern.clone(),
    })
}

/// Seed used for node `node` when nodes run on their own.
pub fn node_seed(seed: u64, node: usize) -> u64 {
    seed.wrapping_add(NODE_SEED_STEP.wrapping_mul(node as u64))
}

/// Per-node data of a multi-node stream.
pub fn split_nodes(data: &[FieldBlock], node: usize) -> Result<Vec<FieldBlock>> {
    data.iter()
        .map(|b| {
            let single = b.node_block(node)?;
            FieldBlock::new(single.into_values(), b.block_index(), 1)
        })
        .collect()
}

/// Leading `nodes` nodes of a multi-node stream.
pub fn leading_nodes(data: &[FieldBlock], nodes: usize) -> Result<Vec<FieldBlock>> {
    data.iter().map(|b| b.leading_nodes(nodes)).collect()
}

/// Run every node on its own with `M = ⌊γN⌋` samples each.
pub fn run_independent(data: &[FieldBlock], cfg: &ExperimentConfig) -> Result<Vec<ExperimentReport>> {
    (0..cfg.node_count)
        .map(|node| {
            let single = ExperimentConfig {
                node_count: 1,
                seed: node_seed(cfg.seed, node),
                ..cfg.clone()
            };
            run_experiment(&split_nodes(data, node)?, &single)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioPoint {
    pub nodes: usize,
    pub joint_samples: usize,
    pub independent_samples: usize,
    pub ratio: f64,
}

/// Smallest per-block sample count whose run reaches `target`, assuming the
/// error falls with more samples. Doubling locates a bracket, bisection
/// narrows it to one sample.
fn min_samples<F>(max: usize, target: f64, mut rmse_at: F) -> Result<usize>
where
    F: FnMut(usize) -> Result<f64>,
{
    let mut best = f64::INFINITY;
    let mut fail = 0;
    let mut hi = 1;
    loop {
        let e = rmse_at(hi)?;
        best = best.min(e);
        if e <= target {
            break;
        }
        if hi == max {
            return Err(DassError::TargetUnreachable { target, best });
        }
        fail = hi;
        hi = (hi * 2).min(max);
    }
    while hi - fail > 1 {
        let mid = fail + (hi - fail) / 2;
        if rmse_at(mid)? <= target {
            hi = mid;
        } else {
            fail = mid;
        }
    }
    Ok(hi)
}

/// For `n = 1..node_count`, the ratio between the samples per block joint
/// operation over the first `n` nodes needs to reach `target_rmse` and the
/// summed samples the same nodes need on their own. Errors are pooled RMSE
/// over the post-warmup blocks.
pub fn joint_vs_independent_ratio(
    data: &[FieldBlock],
    cfg: &ExperimentConfig,
    target_rmse: f64,
) -> Result<Vec<RatioPoint>> {
    if cfg.node_count < 2 {
        return Err(DassError::Config("joint versus independent needs at least 2 nodes".into()));
    }
    if !(target_rmse > 0.0) {
        return Err(DassError::Config("target RMSE must be > 0".into()));
    }
    let n = cfg.block_length;
    let warmup = cfg
        .warmup
        .unwrap_or_else(|| (cfg.learner.buffer_length + 1).max(MIN_WARMUP));

    let mut per_node = Vec::with_capacity(cfg.node_count);
    for node in 0..cfg.node_count {
        let series = split_nodes(data, node)?;
        let base = ExperimentConfig {
            node_count: 1,
            seed: node_seed(cfg.seed, node),
            warmup: Some(warmup),
            ..cfg.clone()
        };
        per_node.push(min_samples(n, target_rmse, |m| {
            Ok(run_experiment(&series, &base.clone().with_samples(m))?.pooled_rmse())
        })?);
    }

    let mut points = Vec::with_capacity(cfg.node_count);
    for nodes in 1..=cfg.node_count {
        let joint_data = leading_nodes(data, nodes)?;
        let base = ExperimentConfig {
            node_count: nodes,
            seed: node_seed(cfg.seed, 0),
            warmup: Some(warmup),
            ..cfg.clone()
        };
        let joint = min_samples(nodes * n, target_rmse, |m| {
            Ok(run_experiment(&joint_data, &base.clone().with_samples(m))?.pooled_rmse())
        })?;
        let independent: usize = per_node[..nodes].iter().sum();
        points.push(RatioPoint {
            nodes,
            joint_samples: joint,
            independent_samples: independent,
            ratio: joint as f64 / independent as f64,
        });
    }
    Ok(points)
}
