use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::mdl::Snr;

/// Adds circularly-symmetric complex Gaussian noise of variance
/// `signal_power[c] / snr` to each channel `c`. Deterministic per `seed`.
///
/// Panics if `signal_power` does not have one entry per channel.
pub fn awgn(
    samples: &[Vec<Complex64>],
    snr: Snr,
    signal_power: &[f64],
    seed: u64,
) -> Vec<Vec<Complex64>> {
    assert_eq!(
        samples.len(),
        signal_power.len(),
        "one signal power per channel"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples
        .iter()
        .zip(signal_power)
        .map(|(chan, &p)| {
            let sigma = (p / snr.linear() / 2.0).sqrt();
            chan.iter()
                .map(|&z| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    z + Complex64::new(re, im) * sigma
                })
                .collect()
        })
        .collect()
}
