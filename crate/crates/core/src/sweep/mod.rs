//! Declarative (attenuation ratio × SNR) experiments and their reports.

mod config;
mod report;
mod run;
mod svg;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{CorrectionSnr, SweepConfig, SCHEMA_VERSION};
pub use report::{
    emit_csv, emit_manifest, format_sig6, MANIFEST_FILE, ROWS_FILE, ROW_COLUMNS, SUMMARY_COLUMNS,
    SUMMARY_FILE,
};
pub use run::{
    median, run_sweep, CellStatus, CellSummary, RowKind, SweepMode, SweepRecord, SweepResult,
};
pub use svg::{
    emit_heatmap, emit_mdl_vs_ratio, heatmap_file_name, heatmap_svg, ErrorVariant,
    MDL_VS_RATIO_CSV, MDL_VS_RATIO_SVG,
};

use crate::channel::ChannelError;
use crate::dsp::DspError;
use crate::mdl::MdlError;

#[derive(Debug, Error)]
pub enum SweepError {
    /// The configuration is unreadable or invalid.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Runtime(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Mdl(#[from] MdlError),
}

impl SweepError {
    pub fn is_config(&self) -> bool {
        matches!(self, SweepError::Config(_))
    }
}

/// Writes every artifact of a result into `dir`: the CSV tables, both
/// heatmap variants (full sweeps only), the MDL-versus-ratio chart and a
/// manifest with checksums of all of them.
pub fn emit_all(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>, SweepError> {
    let mut files = emit_csv(result, dir)?;
    if result.mode == SweepMode::Full {
        files.extend(emit_heatmap(result, ErrorVariant::Uncorrected, dir)?);
        files.extend(emit_heatmap(result, ErrorVariant::Corrected, dir)?);
    }
    files.extend(emit_mdl_vs_ratio(result, dir)?);
    let manifest = emit_manifest(result, dir, &files)?;
    files.push(manifest);
    Ok(files)
}
