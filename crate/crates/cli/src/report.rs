//! Report files.
//!
//! Every file starts with a format line and the resolved settings as `# `
//! comments, then a CSV table. Numbers have fixed decimal places so that
//! reruns diff cleanly; wall time is left out for the same reason.
//!
//! Per-block table (`table`):
//!
//! | column          | unit                                   |
//! |-----------------|----------------------------------------|
//! | `block`         | block index in the data                |
//! | `samples`       | samples taken in the block             |
//! | `dimension`     | model dimension or dictionary size     |
//! | `rmse`          | data units                             |
//! | `theta`         | dimensionless, Θ of the pattern used   |
//! | `theta_uniform` | dimensionless, Θ of the uniform pattern|
//! | `bound`         | squared data units per sample          |
//! | `sigma`         | data units, noise standard deviation   |
//! | `source`        | greedy, uniform_fallback, uniform, random |
//! | `degraded`      | 1 when a fallback solver was used      |
//! | `pattern`       | sampled indices separated by `;`       |
//!
//! Summary table (`summary`), one row per run: settings of the run, then
//! `mean_rmse`, `pooled_rmse` (data units), `mean_theta`,
//! `mean_theta_uniform`, `samples_used`, `degraded_blocks` and `energy_j`
//! (joules, empty without a platform).

use std::fmt::Write as _;

use dass_core::simulator::{ExperimentReport, NoiseSpec};

pub const REPORT_FORMAT_HEADER: &str = "# dass-report v1";
const DECIMALS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Summary,
}

pub const TABLE_COLUMNS: &str =
    "block,samples,dimension,rmse,theta,theta_uniform,bound,sigma,source,degraded,pattern";
pub const SUMMARY_COLUMNS: &str = "method,gamma,samples_per_block,block_length,nodes,snr_db,sigma,seed,\
blocks,warmup,mean_rmse,pooled_rmse,mean_theta,mean_theta_uniform,samples_used,degraded_blocks,energy_j";

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.DECIMALS$}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn preamble(provenance: &str) -> String {
    let mut out = String::new();
    out.push_str(REPORT_FORMAT_HEADER);
    out.push('\n');
    for line in provenance.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat, provenance: &str) -> String {
    match format {
        ReportFormat::Summary => emit_summary(std::slice::from_ref(report), provenance),
        ReportFormat::Table => {
            let mut out = preamble(provenance);
            out.push_str(TABLE_COLUMNS);
            out.push('\n');
            for r in &report.records {
                let pattern: Vec<String> = r.pattern.indices().iter().map(usize::to_string).collect();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.block_index,
                    r.samples,
                    r.dimension,
                    num(r.rmse),
                    num(r.theta),
                    num(r.theta_uniform),
                    num(r.bound),
                    num(r.sigma),
                    r.source,
                    u8::from(r.degraded),
                    pattern.join(";"),
                );
            }
            out
        }
    }
}

pub fn summary_row(r: &ExperimentReport) -> String {
    let (snr, sigma) = match r.noise {
        NoiseSpec::SnrDb(db) => (num(db), String::new()),
        NoiseSpec::Sigma(s) => (String::new(), num(s)),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.method,
        num(r.gamma),
        r.samples_per_block,
        r.block_length,
        r.node_count,
        snr,
        sigma,
        r.seed,
        r.records.len(),
        r.warmup,
        num(r.mean_rmse()),
        num(r.pooled_rmse()),
        num(r.mean_theta()),
        num(r.mean_theta_uniform()),
        r.samples_used(),
        r.records.iter().filter(|b| b.degraded).count(),
        r.energy_joules().map(num).unwrap_or_default(),
    )
}

/// One summary row per report, in the order given. No reports gives the
/// header alone.
pub fn emit_summary(reports: &[ExperimentReport], provenance: &str) -> String {
    let mut out = preamble(provenance);
    out.push_str(SUMMARY_COLUMNS);
    out.push('\n');
    for r in reports {
        out.push_str(&summary_row(r));
        out.push('\n');
    }
    out
}
