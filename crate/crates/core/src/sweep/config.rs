//! Declarative sweep configuration (TOML).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SweepError;
use crate::aggregate::AggregationRule;
use crate::channel::{LinkSpec, Placement};
use crate::dsp::MIN_FRAME_LENGTH;
use crate::mdl::ClampPolicy;

pub const SCHEMA_VERSION: u32 = 1;

/// Which SNR drives the eigenvalue correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionSnr {
    /// The SNR that was loaded onto the link.
    #[default]
    Loaded,
    /// A data-driven estimate from the training residual.
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "missing_version")]
    pub schema_version: u32,
    pub placements: Vec<Placement>,
    /// LP01:LP11 attenuation ratios (dB).
    pub ratio_grid_db: Vec<f64>,
    pub snr_grid_db: Vec<f64>,
    /// SNR of the noise-free reference run whose estimate is taken as the
    /// true MDL of each cell.
    pub reference_snr_db: f64,
    /// Attenuation around which the VOA bank is balanced (dB).
    pub base_attenuation_db: f64,
    /// Replicates per cell.
    pub seeds: usize,
    /// Training symbols per stream.
    pub training_length: usize,
    pub aggregation: AggregationRule,
    pub clamp_policy: ClampPolicy,
    pub correction_snr: CorrectionSnr,
    pub output_dir: String,
    /// Link model; `link.seed` is the base seed of the whole sweep.
    pub link: LinkSpec,
}

fn missing_version() -> u32 {
    0
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            placements: vec![Placement::TxSide, Placement::InSpan { section: 7 }],
            ratio_grid_db: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            snr_grid_db: vec![6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0],
            reference_snr_db: 37.0,
            base_attenuation_db: 5.0,
            seeds: 10,
            training_length: 1 << 14,
            aggregation: AggregationRule::MeanGram,
            clamp_policy: ClampPolicy::ClampToFloor,
            correction_snr: CorrectionSnr::Loaded,
            output_dir: "sweep-out".into(),
            link: LinkSpec::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, SweepError> {
        let cfg: SweepConfig =
            toml::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, SweepError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SweepError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The full configuration with every default spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sweep config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::Config(m));
        if self.schema_version == 0 {
            return bad("schema_version is missing".into());
        }
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        self.link
            .validate()
            .map_err(|e| SweepError::Config(e.to_string()))?;
        if self.placements.is_empty() {
            return bad("at least one placement is required".into());
        }
        for (i, p) in self.placements.iter().enumerate() {
            if self.placements[..i].contains(p) {
                return bad(format!("placement {} is listed twice", p.label()));
            }
            if let Placement::InSpan { section } = p {
                if *section >= self.link.sections {
                    return bad(format!(
                        "in-span section {section} is outside 0..{}",
                        self.link.sections
                    ));
                }
            }
        }
        if self.ratio_grid_db.is_empty() || self.snr_grid_db.is_empty() {
            return bad("ratio and SNR grids must be non-empty".into());
        }
        for (name, grid) in [
            ("ratio_grid_db", &self.ratio_grid_db),
            ("snr_grid_db", &self.snr_grid_db),
        ] {
            if grid.iter().any(|v| !v.is_finite()) {
                return bad(format!("{name} contains a non-finite value"));
            }
            for (i, v) in grid.iter().enumerate() {
                if grid[..i].contains(v) {
                    return bad(format!("{name} lists {v} twice"));
                }
            }
        }
        if !self.reference_snr_db.is_finite()
            || self.snr_grid_db.iter().any(|&s| s >= self.reference_snr_db)
        {
            return bad("reference_snr_db must exceed every grid SNR".into());
        }
        if !self.base_attenuation_db.is_finite() {
            return bad("base_attenuation_db must be finite".into());
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        let dim = self.link.layout.dim();
        let minimum = (4 * dim * self.link.bins).max(MIN_FRAME_LENGTH);
        if self.training_length < minimum || !self.training_length.is_multiple_of(self.link.bins) {
            return bad(format!(
                "training_length must be a multiple of {} and at least {minimum}",
                self.link.bins
            ));
        }
        Ok(())
    }

    /// SHA-256 over everything that shapes the numbers, excluding where
    /// the outputs are written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir.clear();
        hex(&Sha256::digest(
            serde_json::to_vec(&c).expect("config serializes"),
        ))
    }

    /// Root of the per-cell seed tree. Grids are left out so a cell's draws
    /// do not depend on which other cells are present.
    pub(crate) fn seed_root(&self) -> [u8; 32] {
        let basis = serde_json::json!({
            "link": self.link,
            "training_length": self.training_length,
        });
        Sha256::digest(serde_json::to_vec(&basis).expect("seed basis serializes")).into()
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
