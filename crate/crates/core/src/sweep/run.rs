//! Executes a sweep: one parallel task per (placement, ratio, replicate).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{CorrectionSnr, SweepConfig};
use super::SweepError;
use crate::channel::{
    apply_emulator, constant_power_profile, synthesize_link, true_mdl, ChannelError,
    ChannelSpectrum, EmulatorProfile, LinkSpec, Placement,
};
use crate::dsp::{
    estimate_mdl, estimate_snr, estimation_error, fit_equalizer, generate_frames, transmit,
};
use crate::mdl::Snr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Reference run plus every grid SNR.
    #[default]
    Full,
    /// Only the reference run of each (placement, ratio, replicate).
    ReferenceOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    Reference,
    Grid,
}

impl RowKind {
    pub fn name(self) -> &'static str {
        match self {
            RowKind::Reference => "reference",
            RowKind::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    /// The VOA settings were infeasible for this ratio.
    Skipped,
}

/// One (placement, ratio, SNR, replicate) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub placement: Placement,
    pub ratio_db: f64,
    pub snr_db: f64,
    pub kind: RowKind,
    pub replicate: usize,
    pub link_seed: u64,
    pub frame_seed: u64,
    pub status: CellStatus,
    /// MDL of the simulated channel itself.
    pub channel_mdl_db: Option<f64>,
    /// Corrected estimate of the reference run, taken as the true MDL.
    pub true_mdl_db: Option<f64>,
    pub uncorrected_db: Option<f64>,
    pub corrected_db: Option<f64>,
    /// `true − uncorrected`.
    pub error_uncorrected_db: Option<f64>,
    /// `true − corrected`.
    pub error_corrected_db: Option<f64>,
    /// SNR handed to the correction (loaded or estimated).
    pub correction_snr_db: Option<f64>,
    pub singular_bins: usize,
    pub noise_dominated_bins: usize,
}

/// Medians over the replicates of one (placement, ratio, SNR) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub placement: Placement,
    pub ratio_db: f64,
    pub snr_db: f64,
    pub kind: RowKind,
    /// Frame seeds of the replicates that contributed.
    pub seeds: Vec<u64>,
    pub skipped: usize,
    pub median_channel_mdl_db: Option<f64>,
    pub median_true_mdl_db: Option<f64>,
    pub median_uncorrected_db: Option<f64>,
    pub median_corrected_db: Option<f64>,
    pub median_error_uncorrected_db: Option<f64>,
    pub median_error_corrected_db: Option<f64>,
    pub failed_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub config_hash: String,
    pub tool_version: String,
    pub mode: SweepMode,
    /// Ordered by placement, ratio, SNR (reference first), replicate.
    pub records: Vec<SweepRecord>,
    /// Same order as `records`, one entry per cell.
    pub summary: Vec<CellSummary>,
}

impl SweepResult {
    pub fn cells<'a>(
        &'a self,
        placement: &'a Placement,
    ) -> impl Iterator<Item = &'a CellSummary> + 'a {
        self.summary
            .iter()
            .filter(move |c| &c.placement == placement)
    }
}

/// Median; the mean of the two middle values for an even count.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn derive_seed(root: &[u8; 32], key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root);
    h.update(key.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

/// Seeds depend on cell values, not grid positions, so adding or removing
/// grid points leaves the other cells untouched.
fn cell_key(
    tag: &str,
    placement: &Placement,
    ratio: f64,
    snr: Option<f64>,
    replicate: usize,
) -> String {
    let snr = snr.map_or_else(|| "ref".to_string(), |s| format!("{:016x}", s.to_bits()));
    format!(
        "{tag}|{}|{:016x}|{snr}|{replicate}",
        placement.label(),
        ratio.to_bits()
    )
}

struct Task {
    placement: Placement,
    ratio: f64,
    replicate: usize,
}

pub fn run_sweep(
    config: &SweepConfig,
    threads: usize,
    mode: SweepMode,
) -> Result<SweepResult, SweepError> {
    config.validate()?;
    let root = config.seed_root();
    let mut tasks = Vec::new();
    for &placement in &config.placements {
        for &ratio in &config.ratio_grid_db {
            for replicate in 0..config.seeds {
                tasks.push(Task {
                    placement,
                    ratio,
                    replicate,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SweepError::Runtime(format!("thread pool: {e}")))?;
    let per_task: Vec<Vec<SweepRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| run_task(config, &root, t, mode))
            .collect::<Result<_, _>>()
    })?;

    // Regroup from task order (replicate innermost, SNR inside each task)
    // to cell order (SNR outer, replicate innermost).
    let snrs = match mode {
        SweepMode::Full => 1 + config.snr_grid_db.len(),
        SweepMode::ReferenceOnly => 1,
    };
    let mut records = Vec::with_capacity(per_task.len() * snrs);
    let mut summary = Vec::new();
    for group in per_task.chunks(config.seeds) {
        for s in 0..snrs {
            let cell: Vec<&SweepRecord> = group.iter().map(|recs| &recs[s]).collect();
            summary.push(summarize(&cell));
            records.extend(cell.into_iter().cloned());
        }
    }
    Ok(SweepResult {
        config: config.clone(),
        config_hash: config.hash(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        mode,
        records,
        summary,
    })
}

fn summarize(cell: &[&SweepRecord]) -> CellSummary {
    let first = cell[0];
    let ok: Vec<&&SweepRecord> = cell.iter().filter(|r| r.status == CellStatus::Ok).collect();
    let med = |f: fn(&SweepRecord) -> Option<f64>| {
        median(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
    };
    CellSummary {
        placement: first.placement,
        ratio_db: first.ratio_db,
        snr_db: first.snr_db,
        kind: first.kind,
        seeds: ok.iter().map(|r| r.frame_seed).collect(),
        skipped: cell.len() - ok.len(),
        median_channel_mdl_db: med(|r| r.channel_mdl_db),
        median_true_mdl_db: med(|r| r.true_mdl_db),
        median_uncorrected_db: med(|r| r.uncorrected_db),
        median_corrected_db: med(|r| r.corrected_db),
        median_error_uncorrected_db: med(|r| r.error_uncorrected_db),
        median_error_corrected_db: med(|r| r.error_corrected_db),
        failed_bins: ok
            .iter()
            .map(|r| r.singular_bins + r.noise_dominated_bins)
            .sum(),
    }
}

struct Measurement {
    uncorrected: f64,
    corrected: f64,
    correction_snr_db: f64,
    singular_bins: usize,
    noise_dominated_bins: usize,
}

fn measure(
    config: &SweepConfig,
    channel: &ChannelSpectrum,
    snr_db: f64,
    frame_seed: u64,
    noise_seed: u64,
) -> Result<Measurement, SweepError> {
    let snr = Snr::from_db(snr_db)?;
    let frames = generate_frames(channel.layout(), config.training_length, frame_seed)?;
    let rx = transmit(&frames, channel, Some(snr), noise_seed)?;
    let correction_snr = match config.correction_snr {
        CorrectionSnr::Loaded => snr,
        CorrectionSnr::Estimated => estimate_snr(&frames, &rx)?,
    };
    let eq = fit_equalizer(&frames, &rx, correction_snr)?;
    let est = estimate_mdl(
        &eq,
        correction_snr,
        true,
        config.aggregation,
        config.clamp_policy,
    )?;
    Ok(Measurement {
        uncorrected: est.uncorrected.db,
        corrected: est.corrected.expect("correction was requested").db,
        correction_snr_db: correction_snr.db(),
        singular_bins: est.singular_bins,
        noise_dominated_bins: est.noise_dominated_bins,
    })
}

fn run_task(
    config: &SweepConfig,
    root: &[u8; 32],
    task: &Task,
    mode: SweepMode,
) -> Result<Vec<SweepRecord>, SweepError> {
    let Task {
        placement,
        ratio,
        replicate,
    } = *task;
    let link_seed = derive_seed(root, &format!("link|{replicate}"));
    let mut snrs = vec![None];
    if mode == SweepMode::Full {
        snrs.extend(config.snr_grid_db.iter().map(|&s| Some(s)));
    }
    let seeds_for = |snr: Option<f64>| {
        (
            derive_seed(root, &cell_key("frames", &placement, ratio, snr, replicate)),
            derive_seed(root, &cell_key("noise", &placement, ratio, snr, replicate)),
        )
    };
    let blank = |snr: Option<f64>| SweepRecord {
        placement,
        ratio_db: ratio,
        snr_db: snr.unwrap_or(config.reference_snr_db),
        kind: if snr.is_some() {
            RowKind::Grid
        } else {
            RowKind::Reference
        },
        replicate,
        link_seed,
        frame_seed: seeds_for(snr).0,
        status: CellStatus::Ok,
        channel_mdl_db: None,
        true_mdl_db: None,
        uncorrected_db: None,
        corrected_db: None,
        error_uncorrected_db: None,
        error_corrected_db: None,
        correction_snr_db: None,
        singular_bins: 0,
        noise_dominated_bins: 0,
    };

    let attenuation =
        match constant_power_profile(&config.link.layout, ratio, config.base_attenuation_db) {
            Ok(a) => a,
            Err(ChannelError::InfeasibleProfile(_)) => {
                return Ok(snrs
                    .into_iter()
                    .map(|s| SweepRecord {
                        status: CellStatus::Skipped,
                        ..blank(s)
                    })
                    .collect())
            }
            Err(e) => return Err(e.into()),
        };
    let link = synthesize_link(&LinkSpec {
        seed: link_seed,
        ..config.link.clone()
    })?;
    let channel = apply_emulator(
        &link,
        &EmulatorProfile {
            placement,
            attenuation_db: attenuation,
        },
    )?
    .normalized()?;
    let channel_mdl = true_mdl(&channel, config.aggregation)?.db;

    let mut out = Vec::with_capacity(snrs.len());
    let mut truth = 0.0;
    for snr in snrs {
        let (frame_seed, noise_seed) = seeds_for(snr);
        let snr_db = snr.unwrap_or(config.reference_snr_db);
        let m = measure(config, &channel, snr_db, frame_seed, noise_seed).map_err(|e| {
            SweepError::Runtime(format!(
                "{} ratio {ratio} dB, SNR {snr_db} dB, replicate {replicate}: {e}",
                placement.label()
            ))
        })?;
        if snr.is_none() {
            truth = m.corrected;
        }
        out.push(SweepRecord {
            channel_mdl_db: Some(channel_mdl),
            true_mdl_db: Some(truth),
            uncorrected_db: Some(m.uncorrected),
            corrected_db: Some(m.corrected),
            error_uncorrected_db: Some(estimation_error(truth, m.uncorrected)),
            error_corrected_db: Some(estimation_error(truth, m.corrected)),
            correction_snr_db: Some(m.correction_snr_db),
            singular_bins: m.singular_bins,
            noise_dominated_bins: m.noise_dominated_bins,
            ..blank(snr)
        });
    }
    Ok(out)
}
