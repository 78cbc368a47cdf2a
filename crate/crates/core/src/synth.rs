//! Synthetic field generators standing in for real sensor archives.
//!
//! * `diurnal_smooth`: temperature-like. A drifting daily level and slope
//!   plus three harmonics with slowly wandering amplitude and phase, and a
//!   small AR(1) residual that runs continuously across blocks.
//! * `diurnal_spiky`: solar-like. A clear-sky envelope that is zero outside
//!   the daytime interval, modulated by short random bumps (passing clouds).
//! * `multi_node_correlated`: nodes on a line. Each node mixes a common
//!   process with a local component; the local component is a combination
//!   of independent site processes weighted by `exp(−d/ℓ)` over distance `d`
//!   and cut off beyond the decorrelation distance.
//!
//! All outputs are deterministic functions of the seed.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{DassError, Result};
use crate::field::{rng_stream, FieldBlock, SimRng};

pub const MIN_SYNTH_BLOCK_LENGTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticProfile {
    DiurnalSmooth,
    DiurnalSpiky,
    MultiNodeCorrelated,
}

impl SyntheticProfile {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DiurnalSmooth => "diurnal_smooth",
            Self::DiurnalSpiky => "diurnal_spiky",
            Self::MultiNodeCorrelated => "multi_node_correlated",
        }
    }
}

impl fmt::Display for SyntheticProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyntheticProfile {
    type Err = DassError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diurnal_smooth" => Ok(Self::DiurnalSmooth),
            "diurnal_spiky" => Ok(Self::DiurnalSpiky),
            "multi_node_correlated" => Ok(Self::MultiNodeCorrelated),
            other => Err(DassError::InvalidArgument(format!(
                "unknown synthetic profile {other:?} (expected diurnal_smooth, diurnal_spiky or multi_node_correlated)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    /// Daytime interval as fractions of the block, `[start, end)`.
    pub daytime: (f64, f64),
    /// Distance between consecutive nodes.
    pub node_spacing: f64,
    /// Decay length ℓ of the local mixing weights.
    pub correlation_length: f64,
    /// Mixing weights are zero at or beyond this distance.
    pub decorrelation_distance: f64,
    /// Weight of the process common to all nodes, in `[0, 1]`. At 1 every
    /// node carries an identical copy.
    pub shared_strength: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            daytime: (1.0 / 3.0, 2.0 / 3.0),
            node_spacing: 1.0,
            correlation_length: 1.5,
            decorrelation_distance: 3.0,
            shared_strength: 0.6,
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        let (a, b) = self.daytime;
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(DassError::InvalidArgument(format!(
                "daytime interval ({a}, {b}) must satisfy 0 <= start < end <= 1"
            )));
        }
        if !(self.node_spacing >= 0.0) || !(self.correlation_length > 0.0) || !(self.decorrelation_distance > 0.0) {
            return Err(DassError::InvalidArgument(
                "node spacing must be >= 0, correlation and decorrelation lengths > 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.shared_strength) {
            return Err(DassError::InvalidArgument(format!(
                "shared strength {} outside [0, 1]",
                self.shared_strength
            )));
        }
        Ok(())
    }

    /// Index range of the daytime interval for blocks of length `n`.
    pub fn daytime_range(&self, n: usize) -> std::ops::Range<usize> {
        let lo = (self.daytime.0 * n as f64).round() as usize;
        let hi = ((self.daytime.1 * n as f64).round() as usize).clamp(lo + 1, n);
        lo..hi
    }

    /// Local mixing weight between nodes `i` and `j`.
    pub fn mixing_weight(&self, i: usize, j: usize) -> f64 {
        let d = self.node_spacing * i.abs_diff(j) as f64;
        if d >= self.decorrelation_distance {
            0.0
        } else {
            (-d / self.correlation_length).exp()
        }
    }
}

pub fn generate_synthetic(
    profile: SyntheticProfile,
    blocks: usize,
    n: usize,
    node_count: usize,
    seed: u64,
) -> Result<Vec<FieldBlock>> {
    generate_synthetic_with(profile, blocks, n, node_count, seed, &SynthParams::default())
}

/// Generate `blocks` blocks of `node_count × n` samples, node-major.
pub fn generate_synthetic_with(
    profile: SyntheticProfile,
    blocks: usize,
    n: usize,
    node_count: usize,
    seed: u64,
    params: &SynthParams,
) -> Result<Vec<FieldBlock>> {
    if n < MIN_SYNTH_BLOCK_LENGTH {
        return Err(DassError::InvalidArgument(format!(
            "block length {n} below the minimum of {MIN_SYNTH_BLOCK_LENGTH}"
        )));
    }
    if node_count == 0 {
        return Err(DassError::InvalidArgument("node count must be >= 1".into()));
    }
    params.validate()?;

    let mut out = Vec::with_capacity(blocks);
    match profile {
        SyntheticProfile::DiurnalSmooth | SyntheticProfile::DiurnalSpiky => {
            let mut nodes: Vec<Box<dyn FnMut() -> Vec<f64>>> = (0..node_count as u64)
                .map(|node| -> Box<dyn FnMut() -> Vec<f64>> {
                    let rng = rng_stream(seed, node);
                    if profile == SyntheticProfile::DiurnalSmooth {
                        let mut p = DiurnalProcess::new(rng, n, 1.0);
                        Box::new(move || p.next_block())
                    } else {
                        let mut p = SolarProcess::new(rng, n, params.daytime_range(n));
                        Box::new(move || p.next_block())
                    }
                })
                .collect();
            for t in 0..blocks {
                let mut values = Vec::with_capacity(n * node_count);
                for node in nodes.iter_mut() {
                    values.extend(node());
                }
                out.push(FieldBlock::new(values, t, node_count)?);
            }
        }
        SyntheticProfile::MultiNodeCorrelated => {
            let mut common = DiurnalProcess::new(rng_stream(seed, u64::MAX), n, 1.0);
            let mut sites: Vec<DiurnalProcess> = (0..node_count as u64)
                .map(|j| DiurnalProcess::new(rng_stream(seed, j), n, 0.0))
                .collect();
            let weights: Vec<Vec<f64>> = (0..node_count)
                .map(|i| {
                    let w: Vec<f64> = (0..node_count).map(|j| params.mixing_weight(i, j)).collect();
                    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                    w.into_iter().map(|v| v / norm).collect()
                })
                .collect();
            let c = params.shared_strength;
            let local_scale = (1.0 - c * c).sqrt();
            for t in 0..blocks {
                let shared = common.next_block();
                let anomalies: Vec<Vec<f64>> = sites.iter_mut().map(DiurnalProcess::next_block).collect();
                let mut values = Vec::with_capacity(n * node_count);
                for w in &weights {
                    for i in 0..n {
                        let local: f64 = w.iter().zip(&anomalies).map(|(wj, a)| wj * a[i]).sum();
                        values.push(c * shared[i] + local_scale * local);
                    }
                }
                out.push(FieldBlock::new(values, t, node_count)?);
            }
        }
    }
    Ok(out)
}

fn gauss(rng: &mut SimRng) -> f64 {
    rng.sample(StandardNormal)
}

const HARMONICS: usize = 3;

/// Temperature-like process. `baseline` scales the deterministic daily
/// mean (level and harmonic means); at 0 only the random anomalies remain.
struct DiurnalProcess {
    rng: SimRng,
    n: usize,
    level_mean: f64,
    amp_mean: [f64; HARMONICS],
    phase_mean: [f64; HARMONICS],
    level: f64,
    amp: [f64; HARMONICS],
    phase: [f64; HARMONICS],
    slope: f64,
    residual: f64,
}

impl DiurnalProcess {
    fn new(mut rng: SimRng, n: usize, baseline: f64) -> Self {
        let level_mean = baseline * (12.0 + 4.0 * gauss(&mut rng));
        let amp_mean = [5.0, 1.5, 0.6];
        let phase_mean = [
            PI * (1.0 + 0.1 * gauss(&mut rng)),
            PI * 0.3 * gauss(&mut rng),
            PI * 0.3 * gauss(&mut rng),
        ];
        let amp = amp_mean.map(|a| a * baseline);
        Self {
            level: level_mean,
            amp,
            phase: phase_mean,
            amp_mean: amp_mean.map(|a| a * baseline),
            phase_mean,
            level_mean,
            slope: 0.0,
            residual: 0.0,
            rng,
            n,
        }
    }

    fn next_block(&mut self) -> Vec<f64> {
        let r = &mut self.rng;
        self.level = self.level_mean + 0.85 * (self.level - self.level_mean) + 1.5 * gauss(r);
        self.slope = 0.6 * self.slope + 2.0 * gauss(r);
        for h in 0..HARMONICS {
            let scale = [5.0, 1.5, 0.6][h];
            self.amp[h] = self.amp_mean[h] + 0.85 * (self.amp[h] - self.amp_mean[h]) + 0.25 * scale * gauss(r);
            self.phase[h] = self.phase_mean[h] + 0.85 * (self.phase[h] - self.phase_mean[h]) + 0.15 * gauss(r);
        }
        let n = self.n as f64;
        (0..self.n)
            .map(|i| {
                let u = i as f64 / n;
                self.residual = 0.97 * self.residual + 0.02 * gauss(&mut self.rng);
                let mut v = self.level + self.slope * (u - 0.5) + self.residual;
                for h in 0..HARMONICS {
                    v += self.amp[h] * (2.0 * PI * (h + 1) as f64 * u - self.phase[h]).cos();
                }
                v
            })
            .collect()
    }
}

/// Solar-like process: zero at night, an envelope peaking mid-day, and
/// multiplicative bumps a few samples wide.
struct SolarProcess {
    rng: SimRng,
    n: usize,
    day: std::ops::Range<usize>,
    peak: f64,
}

const SOLAR_PEAK: f64 = 700.0;

impl SolarProcess {
    fn new(rng: SimRng, n: usize, day: std::ops::Range<usize>) -> Self {
        Self {
            rng,
            n,
            day,
            peak: SOLAR_PEAK,
        }
    }

    fn next_block(&mut self) -> Vec<f64> {
        let r = &mut self.rng;
        self.peak = SOLAR_PEAK + 0.9 * (self.peak - SOLAR_PEAK) + 60.0 * gauss(r);
        let (lo, hi) = (self.day.start as f64, self.day.end as f64);
        let count = r.gen_range(0..=6);
        let bumps: Vec<(f64, f64, f64)> = (0..count)
            .map(|_| {
                let centre = r.gen_range(lo..hi);
                let width = r.gen_range(0.8..3.0);
                let height = r.gen_range(-2.0..0.5);
                (centre, width, height)
            })
            .collect();
        (0..self.n)
            .map(|i| {
                if !self.day.contains(&i) {
                    return 0.0;
                }
                let x = i as f64 + 0.5;
                let envelope = (PI * (x - lo) / (hi - lo)).sin().max(0.0).powf(1.2);
                let log_mod: f64 = bumps
                    .iter()
                    .map(|&(c, w, h)| h * (-((x - c) / w).powi(2)).exp())
                    .sum();
                self.peak.max(0.0) * envelope * log_mod.exp()
            })
            .collect()
    }
}

/// Pearson correlation between the per-position anomalies of two nodes,
/// pooled over blocks.
pub fn anomaly_correlation(blocks: &[FieldBlock], a: usize, b: usize) -> Result<f64> {
    let first = blocks
        .first()
        .ok_or_else(|| DassError::InvalidArgument("no blocks".into()))?;
    let n = first.per_node_length();
    let nodes = first.node_count();
    if a >= nodes || b >= nodes {
        return Err(DassError::IndexOutOfRange {
            index: a.max(b),
            len: nodes,
        });
    }
    let count = blocks.len() as f64;
    let mean_of = |node: usize| -> Vec<f64> {
        let mut m = vec![0.0; n];
        for blk in blocks {
            for (acc, v) in m.iter_mut().zip(blk.node(node)) {
                *acc += v / count;
            }
        }
        m
    };
    let (ma, mb) = (mean_of(a), mean_of(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for blk in blocks {
        for i in 0..n {
            let da = blk.node(a)[i] - ma[i];
            let db = blk.node(b)[i] - mb[i];
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
    }
    Ok(sab / (saa * sbb).sqrt())
}
