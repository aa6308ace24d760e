//! Per-bin MMSE (Wiener) MIMO equalizers: analytic and fitted from training.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frames::{BlockFft, FrameSet, Received};
use super::DspError;
use crate::channel::ChannelSpectrum;
use crate::linalg::{condition_number, identity, is_finite, CMat};
use crate::mdl::Snr;

/// Above this condition number a matrix is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Per-bin equalizer matrices `W(f)` (symbols out = `W·y`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizerSolution {
    #[serde(with = "crate::container::matrix_list")]
    pub bins: Vec<CMat>,
    pub fitted_snr: Snr,
    /// Symbols of training per stream; zero for the analytic solution.
    pub training_length: usize,
}

impl EqualizerSolution {
    pub fn dim(&self) -> usize {
        self.bins.first().map_or(0, |w| w.nrows())
    }
}

/// `W(f) = Hᴴ(f)·(H(f)·Hᴴ(f) + I/SNR)⁻¹` for unit-power inputs.
pub fn wiener_equalizer(
    channel: &ChannelSpectrum,
    snr: Snr,
) -> Result<EqualizerSolution, DspError> {
    let n = channel.dim();
    let reg = identity(n) * Complex64::new(1.0 / snr.linear(), 0.0);
    let bins = channel
        .bins()
        .iter()
        .enumerate()
        .map(|(i, h)| {
            if h.iter().all(|z| z.norm_sqr() == 0.0) {
                return Err(DspError::ZeroChannel(i));
            }
            let inv = (h * h.adjoint() + &reg)
                .try_inverse()
                .ok_or_else(|| DspError::Singular(format!("regularized Gram of bin {i}")))?;
            Ok(h.adjoint() * inv)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EqualizerSolution {
        bins,
        fitted_snr: snr,
        training_length: 0,
    })
}

/// Block spectra laid out as `[stream][block * bins + bin]`.
fn block_spectra(streams: &[Vec<Complex64>], bins: usize) -> Vec<Vec<Complex64>> {
    let fft = BlockFft::new(bins);
    streams.iter().map(|s| fft.forward(s)).collect()
}

fn check_training(
    frames: &FrameSet,
    received: &Received,
) -> Result<(usize, usize, usize), DspError> {
    let n = frames.symbols().len();
    let f = received.bins;
    let len = frames.len();
    if received.samples.len() != n || received.samples.iter().any(|s| s.len() != len) {
        return Err(DspError::Dimension(
            "received samples do not match the frames".into(),
        ));
    }
    if f == 0 || !len.is_multiple_of(f) {
        return Err(DspError::Dimension(format!(
            "frame length {len} vs block {f}"
        )));
    }
    if len < 4 * n * f {
        return Err(DspError::InsufficientTraining(format!(
            "{len} symbols < 4·N·F = {}",
            4 * n * f
        )));
    }
    Ok((n, f, len / f))
}

/// Sample cross- and auto-spectra for one bin: `Σ a·bᴴ / blocks`.
fn outer_mean(
    a: &[Vec<Complex64>],
    b: &[Vec<Complex64>],
    bin: usize,
    bins: usize,
    blocks: usize,
) -> CMat {
    let n = a.len();
    let mut acc = vec![Complex64::new(0.0, 0.0); n * n];
    for blk in 0..blocks {
        let k = blk * bins + bin;
        for r in 0..n {
            let ar = a[r][k];
            for c in 0..n {
                acc[r * n + c] += ar * b[c][k].conj();
            }
        }
    }
    let scale = Complex64::new(1.0 / blocks as f64, 0.0);
    CMat::from_fn(n, n, |r, c| acc[r * n + c] * scale)
}

/// Supervised per-bin Wiener fit `W(f) = Ŝxy(f)·Ŝyy(f)⁻¹` from known
/// transmit symbols. `snr_hint` is recorded as the solution's SNR.
pub fn fit_equalizer(
    frames: &FrameSet,
    received: &Received,
    snr_hint: Snr,
) -> Result<EqualizerSolution, DspError> {
    let (_, f, blocks) = check_training(frames, received)?;
    let xs = block_spectra(frames.symbols(), f);
    let ys = block_spectra(&received.samples, f);
    let bins = (0..f)
        .into_par_iter()
        .map(|bin| {
            let sxy = outer_mean(&xs, &ys, bin, f, blocks);
            let syy = outer_mean(&ys, &ys, bin, f, blocks);
            let cond = condition_number(&syy);
            if cond > CONDITION_LIMIT {
                return Err(DspError::InsufficientTraining(format!(
                    "received auto-spectrum of bin {bin} has condition number {cond:e}"
                )));
            }
            let inv = syy.try_inverse().ok_or_else(|| {
                DspError::InsufficientTraining(format!("bin {bin} auto-spectrum is singular"))
            })?;
            let w = sxy * inv;
            if !is_finite(&w) {
                return Err(DspError::Singular(format!(
                    "bin {bin} equalizer is not finite"
                )));
            }
            Ok(w)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EqualizerSolution {
        bins,
        fitted_snr: snr_hint,
        training_length: frames.len(),
    })
}

/// Data-driven SNR: least-squares channel fit `Ĥ = Ŝyx·Ŝxx⁻¹` per bin, then
/// the residual variance (with `blocks − N` degrees of freedom per output)
/// gives the noise power relative to the unit transmit power.
pub fn estimate_snr(frames: &FrameSet, received: &Received) -> Result<Snr, DspError> {
    let (n, f, blocks) = check_training(frames, received)?;
    let xs = block_spectra(frames.symbols(), f);
    let ys = block_spectra(&received.samples, f);
    let residual: f64 = (0..f)
        .into_par_iter()
        .map(|bin| {
            let syx = outer_mean(&ys, &xs, bin, f, blocks);
            let sxx = outer_mean(&xs, &xs, bin, f, blocks);
            let h = syx
                * sxx.try_inverse().ok_or_else(|| {
                    DspError::InsufficientTraining(format!("bin {bin} input spectrum is singular"))
                })?;
            let mut acc = 0.0;
            for blk in 0..blocks {
                let k = blk * f + bin;
                for r in 0..n {
                    let mut pred = Complex64::new(0.0, 0.0);
                    for c in 0..n {
                        pred += h[(r, c)] * xs[c][k];
                    }
                    acc += (ys[r][k] - pred).norm_sqr();
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<f64>, DspError>>()?
        .iter()
        .sum();
    let dof = (n * f * (blocks - n)) as f64;
    let noise = residual / dof;
    Snr::from_linear(noise.recip()).map_err(DspError::from)
}
