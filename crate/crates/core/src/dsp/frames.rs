//! Decorrelated 16-QAM training frames and block-circular transmission.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use super::DspError;
use crate::channel::{awgn, ChannelSpectrum, ModeLayout};
use crate::mdl::Snr;

pub const MIN_FRAME_LENGTH: usize = 1 << 10;

/// Decorrelation fibre lengths in front of each mode's lantern port, metres.
/// Modes beyond the third continue in 10 m steps.
pub const DECORRELATION_FIBRE_M: [f64; 3] = [0.0, 20.0, 30.0];
const FIBRE_GROUP_INDEX: f64 = 1.468;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_SYMBOL_RATE_HZ: f64 = 25e9;

/// Gray-mapped 16-QAM with unit average power. Bits 3..2 select the in-phase
/// level, bits 1..0 the quadrature level; `00 → -3, 01 → -1, 11 → +1, 10 → +3`.
pub fn qam16_gray(nibble: u8) -> Complex64 {
    const LEVELS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];
    let scale = 10f64.sqrt().recip();
    let i = LEVELS[((nibble >> 2) & 3) as usize];
    let q = LEVELS[(nibble & 3) as usize];
    Complex64::new(i * scale, q * scale)
}

/// Cyclic shift in symbols equivalent to each mode's decorrelation fibre.
pub fn default_shifts(modes: usize, length: usize, symbol_rate_hz: f64) -> Vec<usize> {
    (0..modes)
        .map(|m| {
            let metres = DECORRELATION_FIBRE_M
                .get(m)
                .copied()
                .unwrap_or(DECORRELATION_FIBRE_M[2] + 10.0 * (m as f64 - 2.0));
            let symbols =
                (metres * FIBRE_GROUP_INDEX / SPEED_OF_LIGHT * symbol_rate_hz).round() as usize;
            symbols % length
        })
        .collect()
}

/// Known transmit symbols, one sequence per channel (`mode * pols + pol`).
/// Every spatial mode carries the same polarization-multiplexed source,
/// delayed by that mode's cyclic shift.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    layout: ModeLayout,
    symbols: Vec<Vec<Complex64>>,
    shifts: Vec<usize>,
    seed: u64,
}

impl FrameSet {
    pub fn symbols(&self) -> &[Vec<Complex64>] {
        &self.symbols
    }

    pub fn shifts(&self) -> &[usize] {
        &self.shifts
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.symbols[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn generate_frames(
    layout: &ModeLayout,
    length: usize,
    seed: u64,
) -> Result<FrameSet, DspError> {
    let shifts = default_shifts(layout.modes(), length.max(1), DEFAULT_SYMBOL_RATE_HZ);
    generate_frames_with_shifts(layout, length, &shifts, seed)
}

pub fn generate_frames_with_shifts(
    layout: &ModeLayout,
    length: usize,
    shifts: &[usize],
    seed: u64,
) -> Result<FrameSet, DspError> {
    layout.validate()?;
    if length < MIN_FRAME_LENGTH {
        return Err(DspError::InvalidFrames(format!(
            "frame length {length} is below {MIN_FRAME_LENGTH}"
        )));
    }
    if shifts.len() != layout.modes() {
        return Err(DspError::InvalidFrames(format!(
            "{} shifts for {} modes",
            shifts.len(),
            layout.modes()
        )));
    }
    let shifts: Vec<usize> = shifts.iter().map(|s| s % length).collect();
    for (i, s) in shifts.iter().enumerate() {
        if shifts[..i].contains(s) {
            return Err(DspError::InvalidFrames(format!("shift {s} used twice")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources: Vec<Vec<Complex64>> = (0..layout.polarizations)
        .map(|_| {
            (0..length)
                .map(|_| qam16_gray(rng.random::<u8>() & 0xf))
                .collect()
        })
        .collect();
    let mut symbols = Vec::with_capacity(layout.dim());
    for &shift in &shifts {
        for src in &sources {
            // delayed copy: out[n] = src[n - shift]
            let mut s = src.clone();
            s.rotate_right(shift);
            symbols.push(s);
        }
    }
    Ok(FrameSet {
        layout: layout.clone(),
        symbols,
        shifts,
        seed,
    })
}

/// Receiver-side samples at the equalizer input.
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub samples: Vec<Vec<Complex64>>,
    /// Block length used for the frequency-domain channel, equal to the
    /// number of channel bins.
    pub bins: usize,
    /// `None` for a noiseless link.
    pub noise_variance: Option<f64>,
}

pub(crate) struct BlockFft {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    size: usize,
}

impl BlockFft {
    pub(crate) fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
            size,
        }
    }

    /// Unitary DFT of each consecutive block of `size` samples.
    pub(crate) fn forward(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = x.to_vec();
        self.forward.process(&mut buf);
        let s = (self.size as f64).sqrt().recip();
        buf.iter_mut().for_each(|z| *z *= s);
        buf
    }

    pub(crate) fn inverse(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = x.to_vec();
        self.inverse.process(&mut buf);
        let s = (self.size as f64).sqrt().recip();
        buf.iter_mut().for_each(|z| *z *= s);
        buf
    }
}

/// Passes the frames through `channel` block by block (block length = number
/// of bins, circular within a block) and adds white noise of variance
/// `1/snr` per channel. The SNR is referred to the unit transmit power of
/// each stream, which equals the mean receiver SNR for a channel of unit
/// mean power (see [`ChannelSpectrum::normalized`]).
pub fn transmit(
    frames: &FrameSet,
    channel: &ChannelSpectrum,
    snr: Option<Snr>,
    seed: u64,
) -> Result<Received, DspError> {
    let n = channel.dim();
    let f = channel.num_bins();
    if frames.symbols.len() != n {
        return Err(DspError::Dimension(format!(
            "{} streams into a {n}x{n} channel",
            frames.symbols.len()
        )));
    }
    let len = frames.len();
    if !len.is_multiple_of(f) {
        return Err(DspError::Dimension(format!(
            "frame length {len} is not a multiple of the {f}-bin block"
        )));
    }
    let fft = BlockFft::new(f);
    let spectra: Vec<Vec<Complex64>> = frames.symbols.iter().map(|s| fft.forward(s)).collect();
    let mut out_spectra = vec![vec![Complex64::new(0.0, 0.0); len]; n];
    for block in 0..len / f {
        for (bin, h) in channel.bins().iter().enumerate() {
            let k = block * f + bin;
            for (r, out) in out_spectra.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, x) in spectra.iter().enumerate() {
                    acc += h[(r, c)] * x[k];
                }
                out[k] = acc;
            }
        }
    }
    let clean: Vec<Vec<Complex64>> = out_spectra.iter().map(|y| fft.inverse(y)).collect();
    Ok(match snr {
        None => Received {
            samples: clean,
            bins: f,
            noise_variance: None,
        },
        Some(snr) => Received {
            samples: awgn(&clean, snr, &vec![1.0; n], seed),
            bins: f,
            noise_variance: Some(1.0 / snr.linear()),
        },
    })
}
