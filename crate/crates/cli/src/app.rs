use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use dass_core::energy::{energy_saving_grid, parse_range, EnergyPlatform};
use dass_core::model::{read_model, write_model, Learner};
use dass_core::simulator::{plan_next, run_experiment, ExperimentReport, NoiseSpec};
use dass_core::synth::{generate_synthetic_with, SyntheticProfile};
use dass_core::{FieldBlock, SignalModel};

use crate::config::{Settings, DEFAULT_SYNTH_BLOCKS};
use crate::dataset::{ingest_csv, write_csv, Dataset, DEFAULT_BLOCK_LENGTH};
use crate::report::{emit_report, emit_summary, ReportFormat};

pub const PATTERN_FORMAT_HEADER: &str = "# dass-pattern v1";
pub const ENERGY_FORMAT_HEADER: &str = "# dass-energy v1";

#[derive(Debug, Parser)]
#[command(name = "dass", version, about = "Distributed adaptive sparse sensing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its per-block report.
    Simulate(SimulateArgs),
    /// Cross methods, subsampling rates and SNRs; one summary row per run.
    Sweep(SweepArgs),
    /// Print the sampling pattern for the next block.
    Schedule(ScheduleArgs),
    /// Relative energy saving over compress-and-send collection.
    Energy(EnergyArgs),
    /// Write a synthetic dataset as CSV.
    Synth(SynthArgs),
}

/// Settings shared by every experiment command. Flags override the file.
#[derive(Debug, Args, Default)]
pub struct RunFlags {
    /// TOML settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `synth:<profile>` or a CSV path.
    #[arg(long)]
    pub data: Option<String>,
    /// Absolute noise standard deviation, replacing the SNR.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub block_length: Option<usize>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// SNR estimation error in dB; negative underestimates.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_error_db: Option<f64>,
    /// `auto` or a fixed model dimension.
    #[arg(long)]
    pub dimension: Option<String>,
    /// `mse` or `bound`.
    #[arg(long)]
    pub dimension_rule: Option<String>,
    #[arg(long)]
    pub buffer_length: Option<usize>,
    /// normalized_potential, min_potential or max_potential.
    #[arg(long)]
    pub elimination: Option<String>,
    /// same_objective, max_coherence or skip.
    #[arg(long)]
    pub pair_step: Option<String>,
    #[arg(long)]
    pub cs_dimension: Option<usize>,
    /// Residual budget for CSN.
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Energy platform preset, e.g. tmote_sky.
    #[arg(long)]
    pub platform: Option<String>,
    #[arg(long)]
    pub shared_strength: Option<f64>,
}

impl RunFlags {
    pub fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    s.$field = v.clone();
                }
            )*};
        }
        macro_rules! set_opt {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    s.$field = Some(v.clone());
                }
            )*};
        }
        set!(data, block_length, nodes, seed, snr_error_db, dimension, dimension_rule, buffer_length, elimination, pair_step);
        set_opt!(sigma, blocks, cs_dimension, xi, warmup, platform, shared_strength);
        Ok(s)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunFlags,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Per-block report file.
    #[arg(long, default_value = "report.csv")]
    pub report: PathBuf,
    /// Also write a one-row summary file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunFlags,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Subsampling rate, a number or start:step:end.
    #[arg(long)]
    pub gamma: Option<String>,
    /// SNR in dB, a number or start:step:end.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    #[arg(long, default_value = "sweep.csv")]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub run: RunFlags,
    /// Model snapshot to schedule from. Without it a model is learned from
    /// the fully observed blocks of `--data`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Write the learned model here.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Samples for the next block, instead of `--gamma`.
    #[arg(long)]
    pub samples: Option<usize>,
    /// SNR relative to the model's mean power.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Index of the block being planned; seeds OLS_random.
    #[arg(long, default_value_t = 0)]
    pub next_block: usize,
    /// Pattern file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// Sensing to radio energy ratios, start:step:end.
    #[arg(long, default_value = "0:0.05:1")]
    pub rs: String,
    /// Compression ratios, start:step:end.
    #[arg(long, default_value = "1:1:50")]
    pub rc: String,
    /// Per-block overhead divided by `N·e_radio`.
    #[arg(long, default_value_t = 0.0)]
    pub overhead: f64,
    /// Print the r_s of a platform preset.
    #[arg(long)]
    pub platform: Option<String>,
    /// Grid file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "diurnal_smooth")]
    pub profile: String,
    #[arg(long, default_value_t = DEFAULT_SYNTH_BLOCKS)]
    pub blocks: usize,
    #[arg(long, default_value_t = DEFAULT_BLOCK_LENGTH)]
    pub block_length: usize,
    #[arg(long, default_value_t = 1)]
    pub nodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub shared_strength: Option<f64>,
    #[arg(long, default_value = "")]
    pub units: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Schedule(a) => schedule(a),
        Command::Energy(a) => energy(a),
        Command::Synth(a) => synth(a),
    }
}

fn announce(provenance: &str) {
    println!("# resolved settings");
    print!("{provenance}");
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Blocks named by the settings and their node count.
pub fn load_data(s: &Settings) -> Result<(Vec<FieldBlock>, usize)> {
    match s.synthetic_profile()? {
        Some(profile) => {
            let blocks = s.blocks.unwrap_or(DEFAULT_SYNTH_BLOCKS);
            let data = generate_synthetic_with(profile, blocks, s.block_length, s.nodes, s.seed, &s.synth_params())?;
            Ok((data, s.nodes))
        }
        None => {
            let (dataset, notes) = ingest_csv(Path::new(&s.data), s.block_length)?;
            for w in notes.warnings() {
                eprintln!("warning: {w}");
            }
            Ok((dataset.blocks()?, dataset.node_count()))
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut s = a.run.settings()?;
    if let Some(m) = a.method {
        s.method = m;
    }
    if let Some(g) = a.gamma {
        s.gamma = g;
    }
    if let Some(db) = a.snr_db {
        s.snr_db = db;
    }
    let provenance = s.to_toml();
    announce(&provenance);
    let (data, nodes) = load_data(&s)?;
    let cfg = s.experiment(s.method()?, s.gamma, s.noise(), nodes)?;
    let report = run_experiment(&data, &cfg)?;
    write_file(&a.report, &emit_report(&report, ReportFormat::Table, &provenance))?;
    if let Some(path) = &a.summary {
        write_file(path, &emit_report(&report, ReportFormat::Summary, &provenance))?;
    }
    println!(
        "{} gamma={} M={} blocks={} mean_rmse={:.6} pooled_rmse={:.6} seed={}",
        report.method,
        report.gamma,
        report.samples_per_block,
        report.records.len(),
        report.mean_rmse(),
        report.pooled_rmse(),
        report.seed
    );
    eprintln!("wall time {:.3} s", report.wall_time.as_secs_f64());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut s = a.run.settings()?;
    if let Some(m) = a.methods {
        s.sweep.methods = m;
    }
    if let Some(g) = a.gamma {
        s.sweep.gamma = g;
    }
    if let Some(db) = a.snr_db {
        s.sweep.snr_db = db;
    }
    let provenance = s.to_toml();
    announce(&provenance);
    let (data, nodes) = load_data(&s)?;
    let noises: Vec<NoiseSpec> = match s.sigma {
        Some(sigma) => vec![NoiseSpec::Sigma(sigma)],
        None => s.sweep_snrs()?.into_iter().map(NoiseSpec::SnrDb).collect(),
    };
    let mut configs = Vec::new();
    for method in s.sweep_methods()? {
        for &gamma in &s.sweep_gammas()? {
            for &noise in &noises {
                configs.push(s.experiment(method, gamma, noise, nodes)?);
            }
        }
    }
    let reports: Vec<ExperimentReport> = configs
        .par_iter()
        .map(|cfg| run_experiment(&data, cfg))
        .collect::<dass_core::Result<_>>()?;
    check_budgets(&reports)?;
    write_file(&a.report, &emit_summary(&reports, &provenance))?;
    println!("{} runs written to {}", reports.len(), a.report.display());
    Ok(())
}

/// Every block of every run takes exactly its M samples, and runs at the
/// same subsampling rate share M.
pub fn check_budgets(reports: &[ExperimentReport]) -> Result<()> {
    for r in reports {
        if let Some(b) = r.records.iter().find(|b| b.samples != r.samples_per_block) {
            bail!(
                "{} block {} took {} samples, budget {}",
                r.method,
                b.block_index,
                b.samples,
                r.samples_per_block
            );
        }
        if let Some(o) = reports
            .iter()
            .find(|o| o.gamma == r.gamma && o.samples_per_block != r.samples_per_block)
        {
            bail!("{} and {} disagree on the budget at gamma {}", r.method, o.method, r.gamma);
        }
    }
    Ok(())
}

fn schedule(a: ScheduleArgs) -> Result<()> {
    let mut s = a.run.settings()?;
    if let Some(m) = a.method {
        s.method = m;
    }
    if let Some(g) = a.gamma {
        s.gamma = g;
    }
    if let Some(db) = a.snr_db {
        s.snr_db = db;
    }
    let provenance = s.to_toml();
    announce(&provenance);

    let (model, nodes) = match &a.model {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let model = read_model(BufReader::new(file))?;
            if model.block_length() % s.nodes != 0 {
                bail!("model length {} does not split into {} nodes", model.block_length(), s.nodes);
            }
            s.block_length = model.block_length() / s.nodes;
            (model, s.nodes)
        }
        None => {
            let (data, nodes) = load_data(&s)?;
            let cfg = s.experiment(s.method()?, s.gamma, s.noise(), nodes)?;
            (learn_model(&data, &cfg)?, nodes)
        }
    };
    if let Some(path) = &a.save_model {
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_model(&model, std::io::BufWriter::new(file))?;
    }

    let cfg = s.experiment(s.method()?, s.gamma, s.noise(), nodes)?;
    let m = a.samples.unwrap_or_else(|| cfg.samples_per_block());
    let sigma = match s.noise() {
        NoiseSpec::Sigma(sigma) => sigma,
        NoiseSpec::SnrDb(db) => (mean_power(&model) / 10f64.powf(db / 10.0)).sqrt(),
    } * 10f64.powf(-s.snr_error_db / 20.0);
    let plan = plan_next(&cfg, &model, m, sigma, a.next_block)?;
    let indices: Vec<String> = plan.pattern.indices().iter().map(usize::to_string).collect();
    let mut text = String::from(PATTERN_FORMAT_HEADER);
    text.push('\n');
    for line in provenance.lines() {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str(&format!(
        "# block_length={} samples={} dimension={} source={}\n{}\n",
        plan.pattern.block_length(),
        plan.pattern.len(),
        plan.dimension,
        plan.source,
        indices.join(",")
    ));
    write_out(a.out.as_deref(), &text)
}

/// Mean square value per sample implied by the model.
fn mean_power(model: &SignalModel) -> f64 {
    (model.mean().norm_squared() + model.total_variance()) / model.block_length() as f64
}

/// Model learned from fully observed blocks.
pub fn learn_model(data: &[FieldBlock], cfg: &dass_core::simulator::ExperimentConfig) -> Result<SignalModel> {
    let mut learner = Learner::new(cfg.learner.clone(), cfg.total_length(), cfg.tracked_dimension())?;
    for blk in &data[..cfg.blocks.unwrap_or(data.len()).min(data.len())] {
        learner.absorb(blk)?;
    }
    Ok(learner.model()?.clone())
}

fn energy(a: EnergyArgs) -> Result<()> {
    let provenance = format!(
        "gamma = {}\nrs = \"{}\"\nrc = \"{}\"\noverhead = {}\n",
        a.gamma, a.rs, a.rc, a.overhead
    );
    announce(&provenance);
    if let Some(name) = &a.platform {
        let p = EnergyPlatform::preset(name)?;
        println!(
            "# platform {}: e_sensor = {:e} J, e_radio = {:e} J, r_s = {:.4}",
            p.name,
            p.e_sensor,
            p.e_radio,
            p.r_s()?
        );
    }
    let grid = energy_saving_grid(&parse_range(&a.rs)?, &parse_range(&a.rc)?, a.gamma, a.overhead)?;
    let mut text = String::from(ENERGY_FORMAT_HEADER);
    text.push('\n');
    for line in provenance.lines() {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str("rc,rs,saving,zero_crossing_rs\n");
    for (j, &rc) in grid.rc.iter().enumerate() {
        let zero = grid.zero_crossing[j].map(|z| format!("{z:.9}")).unwrap_or_default();
        for (i, &rs) in grid.rs.iter().enumerate() {
            text.push_str(&format!("{rc:.9},{rs:.9},{:.9},{zero}\n", grid.savings[j][i]));
        }
    }
    write_out(a.out.as_deref(), &text)
}

fn synth(a: SynthArgs) -> Result<()> {
    let settings = Settings {
        data: format!("synth:{}", a.profile),
        block_length: a.block_length,
        nodes: a.nodes,
        blocks: Some(a.blocks),
        seed: a.seed,
        shared_strength: a.shared_strength,
        ..Settings::default()
    };
    let provenance = format!(
        "profile = \"{}\"\nblocks = {}\nblock_length = {}\nnodes = {}\nseed = {}\n{}",
        a.profile,
        a.blocks,
        a.block_length,
        a.nodes,
        a.seed,
        a.shared_strength.map(|v| format!("shared_strength = {v}\n")).unwrap_or_default()
    );
    announce(&provenance);
    let profile: SyntheticProfile = a.profile.parse()?;
    let blocks = generate_synthetic_with(profile, a.blocks, a.block_length, a.nodes, a.seed, &settings.synth_params())?;
    let names = (0..a.nodes).map(|i| format!("node{i}")).collect();
    let dataset = Dataset::from_blocks(profile.as_str(), &a.units, names, &blocks)?;
    let file = File::create(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    write_csv(&dataset, file)?;
    println!("{} blocks x {} nodes written to {}", a.blocks, a.nodes, a.out.display());
    Ok(())
}
