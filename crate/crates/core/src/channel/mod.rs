//! Ground-truth multimode channel synthesis and MDL emulation.
//!
//! The link is a chain of `K` sections. Each section is a frequency-flat
//! Haar unitary preceded by a diagonal modal-delay matrix, so the composite
//! response `H(f) = S_K(f)⋯S_1(f)·L₀` with `S_k(f) = U_k·D(f; τ_k)` is
//! frequency selective but fully mixing. `L₀` is the insertion MDL of the
//! launch lantern. A second pair of lanterns is drawn up front for the
//! in-span demux/attenuate/remux sandwich so that both placements see the
//! same fibre plant.

mod noise;

pub use noise::awgn;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::{aggregate, AggregationRule, BinGram};
use crate::linalg::{haar_unitary, is_finite, CMat};
use crate::mdl::{MdlError, MdlValue};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid mode layout: {0}")]
    InvalidLayout(String),
    #[error("invalid link spec: {0}")]
    InvalidSpec(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error(
        "in-span placement after section {section} is out of range for a {sections}-section link"
    )]
    PlacementOutOfRange { section: usize, sections: usize },
    #[error("in-span emulation needs the section structure of a synthesized link")]
    MissingSections,
    #[error("infeasible attenuation profile: {0}")]
    InfeasibleProfile(String),
    #[error("invalid emulator profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Mdl(#[from] MdlError),
}

/// Spatial modes times polarizations. Channel index is `mode * polarizations + pol`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModeLayout {
    pub spatial_modes: Vec<String>,
    pub polarizations: usize,
}

impl Default for ModeLayout {
    fn default() -> Self {
        Self {
            spatial_modes: vec!["LP01".into(), "LP11a".into(), "LP11b".into()],
            polarizations: 2,
        }
    }
}

impl ModeLayout {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.polarizations == 0 {
            return Err(ChannelError::InvalidLayout("zero polarizations".into()));
        }
        if self.dim() < 2 {
            return Err(ChannelError::InvalidLayout(format!(
                "dimension {} < 2",
                self.dim()
            )));
        }
        for (i, a) in self.spatial_modes.iter().enumerate() {
            if self.spatial_modes[..i].contains(a) {
                return Err(ChannelError::InvalidLayout(format!(
                    "duplicate mode label {a}"
                )));
            }
        }
        Ok(())
    }

    pub fn modes(&self) -> usize {
        self.spatial_modes.len()
    }

    pub fn dim(&self) -> usize {
        self.spatial_modes.len() * self.polarizations
    }

    /// Repeats a per-spatial-mode value across that mode's polarizations.
    pub fn per_channel(&self, per_mode: &[f64]) -> Vec<f64> {
        per_mode
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, self.polarizations))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkSpec {
    #[serde(flatten)]
    pub layout: ModeLayout,
    /// Number of coupling sections `K`.
    pub sections: usize,
    /// Number of frequency bins spanning one symbol rate.
    pub bins: usize,
    pub symbol_rate_hz: f64,
    /// Per-section modal delays are drawn uniformly in `[0, delay_spread_s]`.
    pub delay_spread_s: f64,
    /// Per-lantern, per-mode insertion gains are uniform in `±spread/2` dB.
    pub insertion_mdl_spread_db: f64,
    pub seed: u64,
}

impl Default for LinkSpec {
    fn default() -> Self {
        Self {
            layout: ModeLayout::default(),
            sections: 16,
            bins: 64,
            symbol_rate_hz: 25e9,
            // a quarter symbol per section at 25 GBd
            delay_spread_s: 1e-11,
            insertion_mdl_spread_db: 5.0,
            seed: 1,
        }
    }
}

impl LinkSpec {
    pub fn validate(&self) -> Result<(), ChannelError> {
        self.layout.validate()?;
        if self.sections == 0 {
            return Err(ChannelError::InvalidSpec(
                "at least one section required".into(),
            ));
        }
        if self.bins == 0 {
            return Err(ChannelError::InvalidSpec(
                "at least one frequency bin required".into(),
            ));
        }
        if !(self.symbol_rate_hz.is_finite() && self.symbol_rate_hz > 0.0) {
            return Err(ChannelError::InvalidSpec(
                "symbol rate must be positive".into(),
            ));
        }
        if !(self.delay_spread_s.is_finite() && self.delay_spread_s >= 0.0) {
            return Err(ChannelError::InvalidSpec(
                "delay spread must be >= 0".into(),
            ));
        }
        if !(self.insertion_mdl_spread_db.is_finite() && self.insertion_mdl_spread_db >= 0.0) {
            return Err(ChannelError::InvalidSpec(
                "insertion MDL spread must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Factors of a synthesized link, kept so the link can be split for
/// in-span emulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSections {
    #[serde(with = "crate::container::matrix_list")]
    pub unitaries: Vec<CMat>,
    pub delays_s: Vec<Vec<f64>>,
    /// Per spatial mode, dB gain.
    pub launch_lantern_db: Vec<f64>,
    pub sandwich_tx_lantern_db: Vec<f64>,
    pub sandwich_rx_lantern_db: Vec<f64>,
}

impl LinkSections {
    /// `S_{hi-1}(f)⋯S_{lo}(f)·input`
    fn propagate(&self, freq_hz: f64, range: std::ops::Range<usize>, mut m: CMat) -> CMat {
        for k in range {
            for (row, tau) in self.delays_s[k].iter().enumerate() {
                let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * freq_hz * tau);
                for z in m.row_mut(row).iter_mut() {
                    *z *= phase;
                }
            }
            m = &self.unitaries[k] * m;
        }
        m
    }
}

/// Per-bin `N×N` transfer matrices. Bin `m` sits at `m·Δf` for `m < F/2` and
/// at `(m − F)·Δf` above, matching the DFT of an `F`-symbol block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpectrum {
    layout: ModeLayout,
    bin_spacing_hz: f64,
    #[serde(with = "crate::container::matrix_list")]
    bins: Vec<CMat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sections: Option<LinkSections>,
}

impl ChannelSpectrum {
    pub fn new(
        layout: ModeLayout,
        bin_spacing_hz: f64,
        bins: Vec<CMat>,
    ) -> Result<Self, ChannelError> {
        let c = Self {
            layout,
            bin_spacing_hz,
            bins,
            sections: None,
        };
        c.validate()?;
        Ok(c)
    }

    /// The same matrix in every bin.
    pub fn flat(
        layout: ModeLayout,
        matrix: CMat,
        bins: usize,
        bin_spacing_hz: f64,
    ) -> Result<Self, ChannelError> {
        Self::new(layout, bin_spacing_hz, vec![matrix; bins])
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        self.layout.validate()?;
        if self.bins.is_empty() {
            return Err(ChannelError::InvalidChannel("no frequency bins".into()));
        }
        let n = self.layout.dim();
        for (i, h) in self.bins.iter().enumerate() {
            if h.nrows() != n || h.ncols() != n {
                return Err(ChannelError::InvalidChannel(format!(
                    "bin {i} is {}x{}, layout needs {n}x{n}",
                    h.nrows(),
                    h.ncols()
                )));
            }
            if !is_finite(h) {
                return Err(ChannelError::InvalidChannel(format!(
                    "bin {i} is not finite"
                )));
            }
        }
        if !(self.bin_spacing_hz.is_finite() && self.bin_spacing_hz > 0.0) {
            return Err(ChannelError::InvalidChannel(
                "bin spacing must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn bins(&self) -> &[CMat] {
        &self.bins
    }

    pub fn bin_spacing_hz(&self) -> f64 {
        self.bin_spacing_hz
    }

    pub fn sections(&self) -> Option<&LinkSections> {
        self.sections.as_ref()
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin_frequency(bin, self.bins.len(), self.bin_spacing_hz)
    }

    /// Mean received power per channel for unit-power inputs,
    /// `⟨‖H(f)‖²_F⟩_f / N`.
    pub fn mean_power(&self) -> f64 {
        let total: f64 = self
            .bins
            .iter()
            .map(|h| h.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        total / (self.bins.len() * self.dim()) as f64
    }

    /// Scaled copy with unit [`mean_power`](Self::mean_power). Drops the
    /// section structure, which no longer multiplies out to the bins.
    pub fn normalized(&self) -> Result<Self, ChannelError> {
        let p = self.mean_power();
        if !(p.is_finite() && p > 0.0) {
            return Err(ChannelError::InvalidChannel("zero channel power".into()));
        }
        let scale = Complex64::new(p.sqrt().recip(), 0.0);
        Ok(Self {
            layout: self.layout.clone(),
            bin_spacing_hz: self.bin_spacing_hz,
            bins: self.bins.iter().map(|h| h * scale).collect(),
            sections: None,
        })
    }
}

pub fn bin_frequency(bin: usize, bins: usize, spacing_hz: f64) -> f64 {
    let m = bin as f64;
    if 2 * bin < bins {
        m * spacing_hz
    } else {
        (m - bins as f64) * spacing_hz
    }
}

fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Draws a link realization from `spec.seed`.
pub fn synthesize_link(spec: &LinkSpec) -> Result<ChannelSpectrum, ChannelError> {
    spec.validate()?;
    let n = spec.layout.dim();
    let modes = spec.layout.modes();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut unitaries = Vec::with_capacity(spec.sections);
    let mut delays_s = Vec::with_capacity(spec.sections);
    for _ in 0..spec.sections {
        unitaries.push(haar_unitary(n, &mut rng));
        delays_s.push(
            (0..n)
                .map(|_| rng.random::<f64>() * spec.delay_spread_s)
                .collect(),
        );
    }
    let mut lantern = || -> Vec<f64> {
        (0..modes)
            .map(|_| (rng.random::<f64>() - 0.5) * spec.insertion_mdl_spread_db)
            .collect()
    };
    let launch_lantern_db = lantern();
    let sandwich_tx_lantern_db = lantern();
    let sandwich_rx_lantern_db = lantern();

    let sections = LinkSections {
        unitaries,
        delays_s,
        launch_lantern_db,
        sandwich_tx_lantern_db,
        sandwich_rx_lantern_db,
    };
    let spacing = spec.symbol_rate_hz / spec.bins as f64;
    let launch = diag_gain(&spec.layout, &sections.launch_lantern_db);
    let bins = (0..spec.bins)
        .map(|b| {
            let f = bin_frequency(b, spec.bins, spacing);
            sections.propagate(f, 0..spec.sections, launch.clone())
        })
        .collect();
    Ok(ChannelSpectrum {
        layout: spec.layout.clone(),
        bin_spacing_hz: spacing,
        bins,
        sections: Some(sections),
    })
}

fn diag_gain(layout: &ModeLayout, per_mode_db: &[f64]) -> CMat {
    let amps: Vec<f64> = layout
        .per_channel(per_mode_db)
        .into_iter()
        .map(db_to_amplitude)
        .collect();
    crate::linalg::real_diagonal(&amps)
}

/// Where the VOA bank sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Placement {
    /// Between the decorrelation fibres and the launch lantern.
    TxSide,
    /// After the first `section` link sections, between two extra lanterns.
    InSpan { section: usize },
}

impl Placement {
    pub fn label(&self) -> String {
        match self {
            Placement::TxSide => "tx-side".into(),
            Placement::InSpan { section } => format!("in-span-{section}"),
        }
    }
}

/// Per-spatial-mode attenuation (dB, positive is loss) and placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmulatorProfile {
    pub placement: Placement,
    pub attenuation_db: Vec<f64>,
}

/// Applies the VOA bank to `channel`.
pub fn apply_emulator(
    channel: &ChannelSpectrum,
    profile: &EmulatorProfile,
) -> Result<ChannelSpectrum, ChannelError> {
    let layout = channel.layout();
    if profile.attenuation_db.len() != layout.modes() {
        return Err(ChannelError::InvalidProfile(format!(
            "{} attenuations for {} spatial modes",
            profile.attenuation_db.len(),
            layout.modes()
        )));
    }
    if profile.attenuation_db.iter().any(|a| !a.is_finite()) {
        return Err(ChannelError::InvalidProfile(
            "non-finite attenuation".into(),
        ));
    }
    let gains_db: Vec<f64> = profile.attenuation_db.iter().map(|a| -a).collect();

    let bins = match profile.placement {
        Placement::TxSide => {
            let amps: Vec<f64> = layout
                .per_channel(&gains_db)
                .into_iter()
                .map(db_to_amplitude)
                .collect();
            channel
                .bins
                .iter()
                .map(|h| {
                    let mut out = h.clone();
                    for (j, a) in amps.iter().enumerate() {
                        for z in out.column_mut(j).iter_mut() {
                            *z *= *a;
                        }
                    }
                    out
                })
                .collect()
        }
        Placement::InSpan { section } => {
            let sections = channel
                .sections
                .as_ref()
                .ok_or(ChannelError::MissingSections)?;
            let k_total = sections.unitaries.len();
            if section >= k_total {
                return Err(ChannelError::PlacementOutOfRange {
                    section,
                    sections: k_total,
                });
            }
            // Lr · A · Lt, all diagonal, so the dB values just add
            let mid_db: Vec<f64> = gains_db
                .iter()
                .zip(&sections.sandwich_tx_lantern_db)
                .zip(&sections.sandwich_rx_lantern_db)
                .map(|((a, t), r)| a + t + r)
                .collect();
            let mid = diag_gain(layout, &mid_db);
            let launch = diag_gain(layout, &sections.launch_lantern_db);
            (0..channel.num_bins())
                .map(|b| {
                    let f = channel.frequency(b);
                    let before = sections.propagate(f, 0..section, launch.clone());
                    sections.propagate(f, section..k_total, &mid * before)
                })
                .collect()
        }
    };
    Ok(ChannelSpectrum {
        layout: layout.clone(),
        bin_spacing_hz: channel.bin_spacing_hz,
        bins,
        sections: None,
    })
}

/// VOA settings that raise the higher-order modes' attenuation and lower the
/// fundamental's symmetrically around `base_db`, so the LP01:LP11 ratio is
/// `ratio_db`. The first spatial mode of the layout is the fundamental.
pub fn constant_power_profile(
    layout: &ModeLayout,
    ratio_db: f64,
    base_db: f64,
) -> Result<Vec<f64>, ChannelError> {
    if !(ratio_db.is_finite() && base_db.is_finite()) {
        return Err(ChannelError::InfeasibleProfile("non-finite setting".into()));
    }
    let fundamental = base_db - ratio_db / 2.0;
    let higher = base_db + ratio_db / 2.0;
    if fundamental < 0.0 || higher < 0.0 {
        return Err(ChannelError::InfeasibleProfile(format!(
            "ratio {ratio_db} dB around {base_db} dB needs negative attenuation"
        )));
    }
    Ok((0..layout.modes())
        .map(|i| if i == 0 { fundamental } else { higher })
        .collect())
}

/// Peak-to-peak MDL of the channel from the eigenvalues of `H(f)·Hᴴ(f)`,
/// collapsed across bins by `rule`.
pub fn true_mdl(
    channel: &ChannelSpectrum,
    rule: AggregationRule,
) -> Result<MdlValue, ChannelError> {
    channel.validate()?;
    let bins: Vec<BinGram> = channel.bins.iter().map(BinGram::from_transfer).collect();
    for (i, b) in bins.iter().enumerate() {
        let max = b.eigenvalues[0];
        let min = *b.eigenvalues.last().unwrap();
        if !(max > 0.0 && min > max * 1e-13) {
            return Err(ChannelError::InvalidChannel(format!("bin {i} is singular")));
        }
    }
    Ok(aggregate(&bins, rule)?)
}
