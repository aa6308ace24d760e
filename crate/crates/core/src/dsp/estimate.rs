//! MDL extraction from equalizer taps, with and without SNR correction.

use serde::{Deserialize, Serialize};

use super::equalizer::{EqualizerSolution, CONDITION_LIMIT};
use super::DspError;
use crate::aggregate::{aggregate, AggregationRule, BinGram};
use crate::linalg::{condition_number, from_eigen, right_singular};
use crate::mdl::{correct_with_policy, ClampPolicy, EigenvalueProfile, MdlValue, Snr};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdlEstimate {
    pub uncorrected: MdlValue,
    /// Present when the correction was requested.
    pub corrected: Option<MdlValue>,
    pub snr: Snr,
    pub aggregation: AggregationRule,
    pub clamp_policy: ClampPolicy,
    /// Raw `λ²_MMSE` of `W(f)⁻¹` for every bin that could be inverted.
    pub per_bin_profiles: Vec<EigenvalueProfile>,
    /// Bins whose equalizer failed the condition-number guard.
    pub singular_bins: usize,
    /// Bins with at least one eigenvalue below the `4/SNR` floor.
    pub noise_dominated_bins: usize,
}

impl MdlEstimate {
    pub fn failed_bins(&self) -> usize {
        self.singular_bins + self.noise_dominated_bins
    }
}

/// Inverts each `W(f)` to the implied channel `Ĥ(f)`, reads `λ²_MMSE` from
/// its singular values and aggregates. The corrected estimate passes every
/// eigenvalue through the inverse MMSE map at `snr` while keeping the
/// bin's eigenvectors, then aggregates the corrected operators.
pub fn estimate_mdl(
    eq: &EqualizerSolution,
    snr: Snr,
    apply_correction: bool,
    aggregation: AggregationRule,
    clamp_policy: ClampPolicy,
) -> Result<MdlEstimate, DspError> {
    let mut raw = Vec::with_capacity(eq.bins.len());
    let mut corrected = Vec::with_capacity(eq.bins.len());
    let mut profiles = Vec::with_capacity(eq.bins.len());
    let mut singular_bins = 0;
    let mut noise_dominated_bins = 0;

    for (i, w) in eq.bins.iter().enumerate() {
        if condition_number(w) > CONDITION_LIMIT {
            singular_bins += 1;
            continue;
        }
        let Some(h) = w.clone().try_inverse() else {
            singular_bins += 1;
            continue;
        };
        let (values, vectors) = right_singular(&h);
        profiles.push(EigenvalueProfile::new(values.clone())?.with_bin(i));

        if apply_correction {
            let mut fixed = Vec::with_capacity(values.len());
            let mut failed = false;
            let mut skip = false;
            for &v in &values {
                let (c, f) = correct_with_policy(v, snr, clamp_policy)?;
                failed |= f;
                match c {
                    Some(c) => fixed.push(c),
                    None => skip = true,
                }
            }
            noise_dominated_bins += usize::from(failed);
            if !skip {
                let gram = from_eigen(&fixed, &vectors);
                fixed.sort_by(|a, b| b.total_cmp(a));
                corrected.push(BinGram {
                    gram,
                    eigenvalues: fixed,
                });
            }
        }
        raw.push(BinGram::from_transfer(&h));
    }

    if raw.is_empty() {
        return Err(DspError::Estimation(format!(
            "all {} equalizer bins are singular",
            eq.bins.len()
        )));
    }
    let uncorrected = aggregate(&raw, aggregation)?;
    let corrected = if apply_correction {
        if corrected.is_empty() {
            return Err(DspError::Estimation(
                "every bin was skipped as noise dominated".into(),
            ));
        }
        Some(aggregate(&corrected, aggregation)?)
    } else {
        None
    };
    Ok(MdlEstimate {
        uncorrected,
        corrected,
        snr,
        aggregation,
        clamp_policy,
        per_bin_profiles: profiles,
        singular_bins,
        noise_dominated_bins,
    })
}

/// `reference − estimated`; positive means the estimate undershoots.
pub fn estimation_error(reference_db: f64, estimated_db: f64) -> f64 {
    reference_db - estimated_db
}
