//! Scalar mathematics of mode-dependent loss.
//!
//! The MMSE equalizer of a linear MIMO channel does not see the channel's
//! eigenvalues `λ²` directly. At a finite SNR the channel implied by the
//! equalizer (its inverse) has eigenvalues
//!
//! ```text
//! λ²_mmse = (λ²)⁻¹ / SNR² + 2 / SNR + λ²
//! ```
//!
//! which compresses the spread between the strongest and weakest modes, so
//! MDL computed from equalizer taps underestimates the link MDL. For a known
//! SNR the map can be inverted; the root on the `λ² ≥ 1/SNR` branch recovers
//! the channel eigenvalue.
//!
//! All SNR arithmetic here is linear; dB only appears in constructors and
//! accessors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// OSNR reference bandwidth, Hz.
pub const OSNR_REFERENCE_BANDWIDTH_HZ: f64 = 12.5e9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdlError {
    #[error("invalid eigenvalue profile: {0}")]
    InvalidProfile(String),
    #[error("invalid SNR {0} (must be finite and > 0 in linear units)")]
    InvalidSnr(f64),
    #[error("value outside the domain of the MMSE eigenvalue map: {0}")]
    Domain(String),
    /// The equalizer eigenvalue sits below the `4/SNR` floor of the forward
    /// map, so no real channel eigenvalue produces it.
    #[error("noise-dominated bin: eigenvalue {value} is {deficit} below the 4/SNR floor")]
    NoiseDominatedBin { value: f64, deficit: f64 },
}

/// Signal-to-noise ratio, stored linearly.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Snr(f64);

impl Snr {
    pub fn from_linear(linear: f64) -> Result<Self, MdlError> {
        if linear.is_finite() && linear > 0.0 {
            Ok(Self(linear))
        } else {
            Err(MdlError::InvalidSnr(linear))
        }
    }

    pub fn from_db(db: f64) -> Result<Self, MdlError> {
        Self::from_linear(10f64.powf(db / 10.0))
    }

    #[inline]
    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

impl TryFrom<f64> for Snr {
    type Error = MdlError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::from_linear(v)
    }
}

impl From<Snr> for f64 {
    fn from(s: Snr) -> f64 {
        s.0
    }
}

/// Peak-to-peak mode-dependent loss in dB.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MdlValue {
    pub db: f64,
}

impl MdlValue {
    pub fn db(self) -> f64 {
        self.db
    }
}

/// Eigenvalues `λ²ᵢ` of `H·Hᴴ` (linear power gains), kept in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueProfile {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bin_index: Option<usize>,
}

impl EigenvalueProfile {
    /// Validates and sorts `values` descending.
    pub fn new(mut values: Vec<f64>) -> Result<Self, MdlError> {
        if values.is_empty() {
            return Err(MdlError::InvalidProfile("empty profile".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(MdlError::InvalidProfile(format!(
                "eigenvalue {bad} is not strictly positive and finite"
            )));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            values,
            bin_index: None,
        })
    }

    pub fn with_bin(mut self, bin: usize) -> Self {
        self.bin_index = Some(bin);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bin_index(&self) -> Option<usize> {
        self.bin_index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// What to do with an equalizer eigenvalue below the `4/SNR` floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClampPolicy {
    /// Propagate [`MdlError::NoiseDominatedBin`].
    Strict,
    /// Replace the eigenvalue by the zero-discriminant root `1/SNR`.
    #[default]
    ClampToFloor,
    /// Drop the whole bin from the corrected estimate.
    SkipBin,
}

impl std::str::FromStr for ClampPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Self::Strict),
            "clamp-to-floor" => Ok(Self::ClampToFloor),
            "skip-bin" => Ok(Self::SkipBin),
            other => Err(format!("unknown clamp policy `{other}`")),
        }
    }
}

/// `10·log10(λ²_max / λ²_min)`.
pub fn mdl_db(profile: &EigenvalueProfile) -> MdlValue {
    let db = 10.0 * (profile.max() / profile.min()).log10();
    // max/min >= 1 by ordering; guard against a -0.0 from rounding
    MdlValue { db: db.max(0.0) }
}

/// Eigenvalue seen through an MMSE equalizer at `snr`.
pub fn mmse_forward(lambda_sq: f64, snr: Snr) -> Result<f64, MdlError> {
    if !(lambda_sq.is_finite() && lambda_sq > 0.0) {
        return Err(MdlError::Domain(format!("eigenvalue {lambda_sq}")));
    }
    let s = snr.linear();
    Ok(1.0 / (lambda_sq * s * s) + 2.0 / s + lambda_sq)
}

/// Positive-branch inverse of [`mmse_forward`]; the result is always `≥ 1/SNR`.
pub fn correct_eigenvalue(lambda_sq_mmse: f64, snr: Snr) -> Result<f64, MdlError> {
    if !(lambda_sq_mmse.is_finite() && lambda_sq_mmse > 0.0) {
        return Err(MdlError::Domain(format!("eigenvalue {lambda_sq_mmse}")));
    }
    let s = snr.linear();
    let floor = 4.0 / s;
    // Divided through by SNR²:
    //   root = (m + sqrt(m² - 4/SNR²)) / 2,  m = μ - 2/SNR,
    // with the discriminant factored as μ·(μ - 4/SNR) to keep precision
    // away from the branch point.
    let excess = lambda_sq_mmse - floor;
    if excess < 0.0 {
        return Err(MdlError::NoiseDominatedBin {
            value: lambda_sq_mmse,
            deficit: -excess,
        });
    }
    let m = lambda_sq_mmse - 2.0 / s;
    let disc = lambda_sq_mmse * excess;
    Ok(0.5 * (m + disc.sqrt()))
}

/// Correction of one eigenvalue under `policy`. `Ok(None)` means the value
/// failed and the policy asks for the bin to be skipped.
pub fn correct_with_policy(
    lambda_sq_mmse: f64,
    snr: Snr,
    policy: ClampPolicy,
) -> Result<(Option<f64>, bool), MdlError> {
    match correct_eigenvalue(lambda_sq_mmse, snr) {
        Ok(v) => Ok((Some(v), false)),
        Err(e @ MdlError::NoiseDominatedBin { .. }) => match policy {
            ClampPolicy::Strict => Err(e),
            ClampPolicy::ClampToFloor => Ok((Some(1.0 / snr.linear()), true)),
            ClampPolicy::SkipBin => Ok((None, true)),
        },
        Err(e) => Err(e),
    }
}

/// Result of correcting a whole profile.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedProfile {
    /// `None` when the policy is [`ClampPolicy::SkipBin`] and some eigenvalue failed.
    pub profile: Option<EigenvalueProfile>,
    /// Number of eigenvalues that were below the noise floor.
    pub noise_dominated: usize,
}

/// Applies [`correct_eigenvalue`] elementwise and re-sorts descending.
pub fn correct_profile(
    profile: &EigenvalueProfile,
    snr: Snr,
    policy: ClampPolicy,
) -> Result<CorrectedProfile, MdlError> {
    let mut out = Vec::with_capacity(profile.len());
    let mut noise_dominated = 0;
    let mut skip = false;
    for &v in profile.values() {
        let (corrected, failed) = correct_with_policy(v, snr, policy)?;
        noise_dominated += usize::from(failed);
        match corrected {
            Some(c) => out.push(c),
            None => skip = true,
        }
    }
    let profile = if skip {
        None
    } else {
        let mut p = EigenvalueProfile::new(out)?;
        p.bin_index = profile.bin_index;
        Some(p)
    };
    Ok(CorrectedProfile {
        profile,
        noise_dominated,
    })
}

/// Per-symbol SNR from OSNR measured in the 12.5 GHz reference bandwidth:
/// `SNR = OSNR · Tₛ · 12.5 GHz`.
pub fn osnr_to_snr(osnr_db: f64, symbol_rate_hz: f64) -> Result<Snr, MdlError> {
    if !(symbol_rate_hz.is_finite() && symbol_rate_hz > 0.0) {
        return Err(MdlError::Domain(format!("symbol rate {symbol_rate_hz}")));
    }
    Snr::from_db(osnr_db + 10.0 * (OSNR_REFERENCE_BANDWIDTH_HZ / symbol_rate_hz).log10())
}
