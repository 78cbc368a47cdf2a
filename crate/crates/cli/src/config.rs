//! Run settings: a TOML file overlaid with command-line flags.
//!
//! ```toml
//! data = "synth:diurnal_smooth"   # or a CSV path
//! method = "DASS"
//! gamma = 0.1
//! snr_db = 30.0
//! blocks = 100
//! seed = 7
//!
//! [sweep]
//! methods = ["DASS", "OLS_uniform", "CSN"]
//! gamma = "0.1"
//! snr_db = "10:5:45"
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dass_core::energy::{parse_range, EnergyPlatform};
use dass_core::model::{Dimension, DimensionRule};
use dass_core::scheduler::{EliminationRule, GreedyOptions, PairStep};
use dass_core::simulator::{ExperimentConfig, Method, NoiseSpec};
use dass_core::synth::{SynthParams, SyntheticProfile};

pub const SYNTH_PREFIX: &str = "synth:";
pub const DEFAULT_SYNTH_BLOCKS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// `synth:<profile>` or a CSV path.
    pub data: String,
    pub method: String,
    pub gamma: f64,
    pub snr_db: f64,
    /// Absolute noise standard deviation; replaces `snr_db` when set.
    pub sigma: Option<f64>,
    pub block_length: usize,
    /// Node count for synthetic data; CSV data uses its own columns.
    pub nodes: usize,
    /// Blocks to run. Synthetic data defaults to 100, CSV data to all.
    pub blocks: Option<usize>,
    pub seed: u64,
    pub snr_error_db: f64,
    /// `auto` or a fixed K.
    pub dimension: String,
    pub dimension_rule: String,
    pub buffer_length: usize,
    pub elimination: String,
    pub pair_step: String,
    pub cs_dimension: Option<usize>,
    pub xi: Option<f64>,
    pub warmup: Option<usize>,
    /// Energy platform preset, adds an energy column to summaries.
    pub platform: Option<String>,
    /// Weight of the common process in multi-node synthetic data.
    pub shared_strength: Option<f64>,
    pub sweep: SweepSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub methods: Vec<String>,
    /// Number or `start:step:end`.
    pub gamma: String,
    pub snr_db: String,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            methods: Method::ALL.iter().map(|m| m.as_str().to_string()).collect(),
            gamma: "0.1".into(),
            snr_db: "30".into(),
        }
    }
}

impl Default for Settings {
    fn default() -> Self {
        let base = ExperimentConfig::default();
        Self {
            data: format!("{SYNTH_PREFIX}{}", SyntheticProfile::DiurnalSmooth),
            method: base.method.to_string(),
            gamma: base.gamma,
            snr_db: 30.0,
            sigma: None,
            block_length: base.block_length,
            nodes: 1,
            blocks: None,
            seed: 0,
            snr_error_db: 0.0,
            dimension: "auto".into(),
            dimension_rule: DimensionRule::default().to_string(),
            buffer_length: base.learner.buffer_length,
            elimination: "normalized_potential".into(),
            pair_step: "same_objective".into(),
            cs_dimension: None,
            xi: None,
            warmup: None,
            platform: None,
            shared_strength: None,
            sweep: SweepSettings::default(),
        }
    }
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// The settings as TOML, one `key = value` per line.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings always serialise")
    }

    pub fn synthetic_profile(&self) -> Result<Option<SyntheticProfile>> {
        match self.data.strip_prefix(SYNTH_PREFIX) {
            Some(p) => Ok(Some(p.parse()?)),
            None => Ok(None),
        }
    }

    pub fn synth_params(&self) -> SynthParams {
        let mut p = SynthParams::default();
        if let Some(s) = self.shared_strength {
            p.shared_strength = s;
        }
        p
    }

    pub fn noise(&self) -> NoiseSpec {
        match self.sigma {
            Some(s) => NoiseSpec::Sigma(s),
            None => NoiseSpec::SnrDb(self.snr_db),
        }
    }

    pub fn method(&self) -> Result<Method> {
        Ok(self.method.parse()?)
    }

    pub fn sweep_methods(&self) -> Result<Vec<Method>> {
        if self.sweep.methods.is_empty() {
            bail!("sweep needs at least one method");
        }
        self.sweep.methods.iter().map(|m| Ok(m.parse()?)).collect()
    }

    pub fn sweep_gammas(&self) -> Result<Vec<f64>> {
        Ok(parse_range(&self.sweep.gamma)?)
    }

    pub fn sweep_snrs(&self) -> Result<Vec<f64>> {
        Ok(parse_range(&self.sweep.snr_db)?)
    }

    fn dimension(&self) -> Result<Dimension> {
        match self.dimension.trim() {
            "auto" => Ok(Dimension::Auto),
            k => Ok(Dimension::Fixed(
                k.parse().with_context(|| format!("dimension must be auto or a count, got {k:?}"))?,
            )),
        }
    }

    /// Experiment for one point of a run or sweep. `node_count` comes from
    /// the loaded data.
    pub fn experiment(&self, method: Method, gamma: f64, noise: NoiseSpec, node_count: usize) -> Result<ExperimentConfig> {
        let base = ExperimentConfig::default();
        let mut learner = base.learner.clone();
        learner.dimension = self.dimension()?;
        learner.dimension_rule = self.dimension_rule.parse()?;
        learner.buffer_length = self.buffer_length;
        let scheduler = GreedyOptions {
            rule: self.elimination.parse::<EliminationRule>()?,
            pair_step: self.pair_step.parse::<PairStep>()?,
        };
        let platform = match &self.platform {
            Some(name) => Some(EnergyPlatform::preset(name)?),
            None => None,
        };
        let cfg = ExperimentConfig {
            method,
            gamma,
            noise,
            block_length: self.block_length,
            node_count,
            learner,
            blocks: self.blocks,
            seed: self.seed,
            snr_estimation_error_db: self.snr_error_db,
            scheduler,
            cs_dimension: self.cs_dimension,
            xi: self.xi,
            warmup: self.warmup,
            platform,
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let s = Settings::default();
        let back: Settings = toml::from_str(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let s: Settings = toml::from_str("gamma = 0.2\n[sweep]\nsnr_db = \"10:10:30\"\n").unwrap();
        assert_eq!(s.gamma, 0.2);
        assert_eq!(s.block_length, 144);
        assert_eq!(s.sweep_snrs().unwrap(), vec![10.0, 20.0, 30.0]);
        assert_eq!(s.sweep_methods().unwrap().len(), 5);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(toml::from_str::<Settings>("gama = 0.2\n").is_err());
    }

    #[test]
    fn experiment_conversion() {
        let s = Settings {
            dimension: "4".into(),
            sigma: Some(0.5),
            platform: Some("tmote_sky".into()),
            ..Settings::default()
        };
        let cfg = s.experiment(Method::OlsUniform, 0.1, s.noise(), 1).unwrap();
        assert_eq!(cfg.learner.dimension, Dimension::Fixed(4));
        assert_eq!(cfg.noise, NoiseSpec::Sigma(0.5));
        assert!(cfg.platform.is_some());
        assert!(Settings { dimension: "many".into(), ..Settings::default() }
            .experiment(Method::Dass, 0.1, NoiseSpec::SnrDb(30.0), 1)
            .is_err());
    }

    #[test]
    fn data_source() {
        assert_eq!(
            Settings::default().synthetic_profile().unwrap(),
            Some(SyntheticProfile::DiurnalSmooth)
        );
        let s = Settings { data: "synth:lunar".into(), ..Settings::default() };
        assert!(s.synthetic_profile().is_err());
        let s = Settings { data: "temps.csv".into(), ..Settings::default() };
        assert_eq!(s.synthetic_profile().unwrap(), None);
    }
}
