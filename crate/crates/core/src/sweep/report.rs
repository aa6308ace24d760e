//! CSV tables and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::hex;
use super::run::{CellStatus, SweepResult};
use super::SweepError;

pub const ROWS_FILE: &str = "sweep_rows.csv";
pub const SUMMARY_FILE: &str = "sweep_summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const ROW_COLUMNS: [&str; 17] = [
    "placement",
    "ratio_db",
    "snr_db",
    "kind",
    "replicate",
    "link_seed",
    "frame_seed",
    "status",
    "channel_mdl_db",
    "true_mdl_db",
    "uncorrected_db",
    "corrected_db",
    "error_uncorrected_db",
    "error_corrected_db",
    "correction_snr_db",
    "singular_bins",
    "noise_dominated_bins",
];

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "placement",
    "ratio_db",
    "snr_db",
    "kind",
    "replicates",
    "skipped",
    "median_channel_mdl_db",
    "median_true_mdl_db",
    "median_uncorrected_db",
    "median_corrected_db",
    "median_error_uncorrected_db",
    "median_error_corrected_db",
    "failed_bins",
];

/// Six significant digits, `%g` style: fixed notation for exponents in
/// `-4..6`, scientific otherwise, trailing zeros dropped.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig6).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, SweepError> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| SweepError::Output(format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> SweepError + '_ {
    move |e| SweepError::Output(format!("{}: {e}", path.display()))
}

/// Writes the per-replicate rows and the per-cell medians.
pub fn emit_csv(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>, SweepError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| SweepError::Output(format!("{}: {e}", dir.display())))?;

    let rows_path = dir.join(ROWS_FILE);
    let mut w = writer(&rows_path)?;
    w.write_record(ROW_COLUMNS).map_err(csv_err(&rows_path))?;
    for r in &result.records {
        w.write_record([
            r.placement.label(),
            format_sig6(r.ratio_db),
            format_sig6(r.snr_db),
            r.kind.name().into(),
            r.replicate.to_string(),
            r.link_seed.to_string(),
            r.frame_seed.to_string(),
            match r.status {
                CellStatus::Ok => "ok".into(),
                CellStatus::Skipped => "skipped".into(),
            },
            opt(r.channel_mdl_db),
            opt(r.true_mdl_db),
            opt(r.uncorrected_db),
            opt(r.corrected_db),
            opt(r.error_uncorrected_db),
            opt(r.error_corrected_db),
            opt(r.correction_snr_db),
            r.singular_bins.to_string(),
            r.noise_dominated_bins.to_string(),
        ])
        .map_err(csv_err(&rows_path))?;
    }
    w.flush().map_err(|e| SweepError::Output(e.to_string()))?;

    let summary_path = dir.join(SUMMARY_FILE);
    let mut w = writer(&summary_path)?;
    w.write_record(SUMMARY_COLUMNS)
        .map_err(csv_err(&summary_path))?;
    for c in &result.summary {
        w.write_record([
            c.placement.label(),
            format_sig6(c.ratio_db),
            format_sig6(c.snr_db),
            c.kind.name().into(),
            c.seeds.len().to_string(),
            c.skipped.to_string(),
            opt(c.median_channel_mdl_db),
            opt(c.median_true_mdl_db),
            opt(c.median_uncorrected_db),
            opt(c.median_corrected_db),
            opt(c.median_error_uncorrected_db),
            opt(c.median_error_corrected_db),
            c.failed_bins.to_string(),
        ])
        .map_err(csv_err(&summary_path))?;
    }
    w.flush().map_err(|e| SweepError::Output(e.to_string()))?;
    Ok(vec![rows_path, summary_path])
}

#[derive(Serialize)]
struct ManifestFile {
    name: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    tool_version: &'a str,
    config_hash: &'a str,
    mode: super::run::SweepMode,
    config: &'a super::config::SweepConfig,
    files: Vec<ManifestFile>,
}

/// Records the configuration, its hash and a checksum of every file
/// written. Contains nothing run-specific such as timestamps or thread
/// counts, so it is reproducible too.
pub fn emit_manifest(
    result: &SweepResult,
    dir: &Path,
    files: &[PathBuf],
) -> Result<PathBuf, SweepError> {
    let mut listed = Vec::new();
    for f in files {
        let bytes =
            std::fs::read(f).map_err(|e| SweepError::Output(format!("{}: {e}", f.display())))?;
        listed.push(ManifestFile {
            name: f
                .file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned(),
            sha256: hex(&Sha256::digest(&bytes)),
        });
    }
    // where the files went is not part of the result
    let mut config = result.config.clone();
    config.output_dir.clear();
    let manifest = Manifest {
        tool: "modeloss",
        tool_version: &result.tool_version,
        config_hash: &result.config_hash,
        mode: result.mode,
        config: &config,
        files: listed,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text =
        serde_json::to_string_pretty(&manifest).map_err(|e| SweepError::Output(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text)
        .map_err(|e| SweepError::Output(format!("{}: {e}", path.display())))?;
    Ok(path)
}
