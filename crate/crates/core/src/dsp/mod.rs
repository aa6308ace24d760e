//! Training frames, transmission, MMSE equalization and MDL extraction.

mod equalizer;
mod estimate;
mod frames;

pub use equalizer::{
    estimate_snr, fit_equalizer, wiener_equalizer, EqualizerSolution, CONDITION_LIMIT,
};
pub use estimate::{estimate_mdl, estimation_error, MdlEstimate};
pub use frames::{
    default_shifts, generate_frames, generate_frames_with_shifts, qam16_gray, transmit, FrameSet,
    Received, DECORRELATION_FIBRE_M, DEFAULT_SYMBOL_RATE_HZ, MIN_FRAME_LENGTH,
};

use thiserror::Error;

use crate::channel::ChannelError;
use crate::mdl::MdlError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid frames: {0}")]
    InvalidFrames(String),
    #[error("insufficient training: {0}")]
    InsufficientTraining(String),
    #[error("channel bin {0} is identically zero")]
    ZeroChannel(usize),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("MDL estimation failed: {0}")]
    Estimation(String),
    #[error(transparent)]
    Mdl(#[from] MdlError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}
