//! Collapsing per-frequency-bin eigenvalues into a single MDL figure.

use serde::{Deserialize, Serialize};

use crate::linalg::{gram, hermitian_eigen, right_singular, CMat};
use crate::mdl::{mdl_db, EigenvalueProfile, MdlError, MdlValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationRule {
    /// Eigenvalues of the bin-averaged input-side Gram operator `⟨Hᴴ·H⟩_f`.
    #[default]
    MeanGram,
    /// Sort each bin's eigenvalues, average each rank across bins.
    RankMean,
    /// Mean over bins of the per-bin MDL in dB.
    PerBinMeanMdl,
    /// Largest per-bin MDL.
    WorstBin,
}

impl AggregationRule {
    pub const ALL: [AggregationRule; 4] = [
        AggregationRule::MeanGram,
        AggregationRule::RankMean,
        AggregationRule::PerBinMeanMdl,
        AggregationRule::WorstBin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MeanGram => "mean-gram",
            Self::RankMean => "rank-mean",
            Self::PerBinMeanMdl => "per-bin-mean-mdl",
            Self::WorstBin => "worst-bin",
        }
    }
}

impl std::str::FromStr for AggregationRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown aggregation rule `{s}`"))
    }
}

/// One frequency bin: its Hermitian Gram operator and that operator's
/// eigenvalues (descending).
#[derive(Debug, Clone)]
pub struct BinGram {
    pub gram: CMat,
    pub eigenvalues: Vec<f64>,
}

impl BinGram {
    pub fn new(gram: CMat) -> Self {
        let (eigenvalues, _) = hermitian_eigen(&gram);
        Self { gram, eigenvalues }
    }

    /// Gram operator `Hᴴ·H` of a transfer matrix, with eigenvalues taken
    /// from the singular values of `H` rather than from the squared operator.
    pub fn from_transfer(h: &CMat) -> Self {
        let (eigenvalues, _) = right_singular(h);
        Self {
            gram: gram(h),
            eigenvalues,
        }
    }
}

/// Aggregates the bins under `rule`. `bins` must be non-empty and all of
/// equal dimension.
pub fn aggregate(bins: &[BinGram], rule: AggregationRule) -> Result<MdlValue, MdlError> {
    if bins.is_empty() {
        return Err(MdlError::InvalidProfile("no bins to aggregate".into()));
    }
    let n = bins[0].eigenvalues.len();
    match rule {
        AggregationRule::MeanGram => {
            let mut acc = CMat::zeros(n, n);
            for b in bins {
                acc += &b.gram;
            }
            acc /= num_complex::Complex64::new(bins.len() as f64, 0.0);
            let (values, _) = hermitian_eigen(&acc);
            Ok(mdl_db(&EigenvalueProfile::new(values)?))
        }
        AggregationRule::RankMean => {
            let mut mean = vec![0.0; n];
            for b in bins {
                for (m, v) in mean.iter_mut().zip(&b.eigenvalues) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= bins.len() as f64;
            }
            Ok(mdl_db(&EigenvalueProfile::new(mean)?))
        }
        AggregationRule::PerBinMeanMdl => {
            let mut sum = 0.0;
            for b in bins {
                sum += mdl_db(&EigenvalueProfile::new(b.eigenvalues.clone())?).db;
            }
            Ok(MdlValue {
                db: sum / bins.len() as f64,
            })
        }
        AggregationRule::WorstBin => {
            let mut worst: f64 = 0.0;
            for b in bins {
                worst = worst.max(mdl_db(&EigenvalueProfile::new(b.eigenvalues.clone())?).db);
            }
            Ok(MdlValue { db: worst })
        }
    }
}
