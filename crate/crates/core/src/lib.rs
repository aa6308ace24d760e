//! Simulation of mode-dependent loss (MDL) in coupled multimode links and of
//! its estimation from supervised MMSE MIMO equalizers.
//!
//! * [`mdl`]: the MDL metric, the MMSE eigenvalue distortion and its
//!   SNR-aware correction, OSNR to SNR conversion.
//! * [`channel`]: sectioned random-coupling link synthesis, transmitter-side
//!   and in-span VOA emulation, AWGN.
//! * [`dsp`]: 16-QAM training frames, block-circular transmission, analytic
//!   and fitted Wiener equalizers, MDL estimation from equalizer taps.
//! * [`sweep`]: declarative (attenuation ratio × SNR) experiments with CSV and
//!   SVG output.
//! * [`container`]: JSON container for channels, equalizers and estimates.

pub mod aggregate;
pub mod channel;
pub mod container;
pub mod dsp;
pub mod linalg;
pub mod mdl;
pub mod sweep;

pub use aggregate::AggregationRule;
pub use mdl::{ClampPolicy, EigenvalueProfile, MdlValue, Snr};
