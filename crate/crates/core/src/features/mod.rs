//! Per-window statistics: standard deviation, RMS, spectral entropy and
//! kurtosis, plus the fixed-order feature vector built from them.

mod fft;

pub use fft::{fft_in_place, real_fft};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{is_valid_width, Channel, Window};

/// Number of statistics per channel.
pub const FEATURES_PER_CHANNEL: usize = 4;
pub const FEATURE_NAMES: [&str; FEATURES_PER_CHANNEL] = ["sigma", "rms", "entropy_bits", "kurtosis"];

fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Population standard deviation (divisor `N`).
pub fn std_dev(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mu = mean(samples);
    let var = samples.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / samples.len() as f64;
    Ok(var.sqrt())
}

pub fn rms(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok((samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64).sqrt())
}

/// Population, non-excess kurtosis: the mean fourth power of the
/// standardized samples. A Gaussian gives 3.
pub fn kurtosis(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mu = mean(samples);
    let sigma = std_dev(samples)?;
    if sigma == 0.0 || samples.len() < 2 {
        return Err(Error::SigmaZero);
    }
    let k = samples
        .iter()
        .map(|x| ((x - mu) / sigma).powi(4))
        .sum::<f64>()
        / samples.len() as f64;
    Ok(k)
}

/// One-sided normalized periodogram.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    probs: Vec<f64>,
    total_power: f64,
}

impl PowerSpectrum {
    /// Builds a spectrum from raw non-negative bin powers.
    pub fn from_powers(powers: &[f64]) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::EmptyInput);
        }
        if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidSeries("bin powers must be finite and >= 0".into()));
        }
        let total: f64 = powers.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroPower);
        }
        Ok(Self {
            probs: powers.iter().map(|p| p / total).collect(),
            total_power: total,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Sum of folded bin powers before normalization.
    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn bins(&self) -> usize {
        self.probs.len()
    }
}

/// Folded periodogram `|X_j|^2 / W` for `j = 0..=W/2`, interior bins doubled.
/// The bins sum to `sum(x^2)`.
pub fn bin_powers(samples: &[f64]) -> Result<Vec<f64>> {
    let w = samples.len();
    if !is_valid_width(w) {
        return Err(Error::InvalidWidth(w));
    }
    let spec = real_fft(samples);
    let half = w / 2;
    let inv_w = 1.0 / w as f64;
    Ok((0..=half)
        .map(|j| {
            let (re, im) = spec[j];
            let p = (re * re + im * im) * inv_w;
            if j == 0 || j == half {
                p
            } else {
                2.0 * p
            }
        })
        .collect())
}

pub fn power_spectrum(samples: &[f64]) -> Result<PowerSpectrum> {
    PowerSpectrum::from_powers(&bin_powers(samples)?)
}

/// Shannon entropy of the spectrum in bits, with `0 log 0 = 0`.
pub fn spectral_entropy(ps: &PowerSpectrum) -> f64 {
    let h: f64 = ps
        .probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    // A one-hot spectrum yields -0.0.
    h.max(0.0)
}

/// Features for a single channel window, in `FEATURE_NAMES` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelFeatures {
    pub sigma: f64,
    pub rms: f64,
    pub entropy_bits: f64,
    pub kurtosis: f64,
}

impl ChannelFeatures {
    pub fn to_array(self) -> [f64; FEATURES_PER_CHANNEL] {
        [self.sigma, self.rms, self.entropy_bits, self.kurtosis]
    }
}

pub fn channel_features(samples: &[f64]) -> Result<ChannelFeatures> {
    if !is_valid_width(samples.len()) {
        return Err(Error::InvalidWidth(samples.len()));
    }
    let kurtosis = kurtosis(samples)?;
    let ps = power_spectrum(samples)?;
    Ok(ChannelFeatures {
        sigma: std_dev(samples)?,
        rms: rms(samples)?,
        entropy_bits: spectral_entropy(&ps),
        kurtosis,
    })
}

/// Per-channel feature quadruples, kept sorted by channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    entries: Vec<(Channel, ChannelFeatures)>,
}

impl FeatureVector {
    pub fn single(channel: Channel, features: ChannelFeatures) -> Self {
        Self {
            entries: vec![(channel, features)],
        }
    }

    /// Merges single-channel vectors; channels must be distinct.
    pub fn concat(parts: impl IntoIterator<Item = FeatureVector>) -> Result<Self> {
        let mut entries: Vec<_> = parts.into_iter().flat_map(|p| p.entries).collect();
        entries.sort_by_key(|(c, _)| *c);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::ShapeMismatch("channel repeated in feature vector".into()));
        }
        Ok(Self { entries })
    }

    pub fn channels(&self) -> Vec<Channel> {
        self.entries.iter().map(|(c, _)| *c).collect()
    }

    pub fn get(&self, channel: Channel) -> Option<ChannelFeatures> {
        self.entries.iter().find(|(c, _)| *c == channel).map(|(_, f)| *f)
    }

    pub fn dim(&self) -> usize {
        self.entries.len() * FEATURES_PER_CHANNEL
    }

    /// Flattened values, channel-major.
    pub fn to_vec(&self) -> Vec<f64> {
        self.entries.iter().flat_map(|(_, f)| f.to_array()).collect()
    }

    /// Column names matching `to_vec`, e.g. `vibration_sigma`.
    pub fn names(&self) -> Vec<String> {
        feature_names(&self.channels())
    }
}

pub fn feature_names(channels: &[Channel]) -> Vec<String> {
    channels
        .iter()
        .flat_map(|c| FEATURE_NAMES.iter().map(move |n| format!("{c}_{n}")))
        .collect()
}

pub fn extract_features(window: &Window) -> Result<FeatureVector> {
    Ok(FeatureVector::single(
        window.channel,
        channel_features(&window.samples)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    /// Direct O(N^2) evaluation of the DFT definition, folded one-sided.
    fn naive_bin_powers(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..=n / 2)
            .map(|j| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, &v) in x.iter().enumerate() {
                    let ang = -2.0 * PI * (j * t % n) as f64 / n as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                let p = (re * re + im * im) / n as f64;
                if j == 0 || j == n / 2 {
                    p
                } else {
                    2.0 * p
                }
            })
            .collect()
    }

    #[test]
    fn std_dev_examples() {
        assert_eq!(std_dev(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(std_dev(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(std_dev(&[0.0, 2.0]).unwrap(), 1.0);
        assert!(matches!(std_dev(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn rms_examples() {
        assert_eq!(rms(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(rms(&[3.0, -3.0, 3.0, -3.0]).unwrap(), 3.0);
        assert_abs_diff_eq!(rms(&[3.0, 4.0]).unwrap(), 12.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(rms(&[3.0, 4.0]).unwrap(), 3.535534, epsilon = 1e-6);
        assert!(matches!(rms(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn kurtosis_examples() {
        assert_eq!(kurtosis(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 1.0);
        assert!(matches!(kurtosis(&[7.0, 7.0, 7.0]), Err(Error::SigmaZero)));
        assert!(matches!(kurtosis(&[]), Err(Error::EmptyInput)));
        assert!(matches!(kurtosis(&[3.0]), Err(Error::SigmaZero)));
    }

    #[test]
    fn kurtosis_of_gaussian_is_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let x: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let k = kurtosis(&x).unwrap();
        assert!((k - 3.0).abs() < 0.1, "kurtosis {k}");
    }

    #[test]
    fn dc_only_spectrum() {
        let ps = power_spectrum(&[2.5; 16]).unwrap();
        assert_eq!(ps.probabilities()[0], 1.0);
        assert!(ps.probabilities()[1..].iter().all(|&p| p.abs() < 1e-15));
        assert_eq!(ps.bins(), 9);
    }

    #[test]
    fn bin_aligned_tone() {
        let x: Vec<f64> = (0..32).map(|t| (2.0 * PI * 5.0 * t as f64 / 32.0).sin()).collect();
        let ps = power_spectrum(&x).unwrap();
        for (j, p) in ps.probabilities().iter().enumerate() {
            if j == 5 {
                assert_abs_diff_eq!(*p, 1.0, epsilon = 1e-12);
            } else {
                assert!(p.abs() < 1e-12, "bin {j}: {p}");
            }
        }
    }

    #[test]
    fn fft_matches_naive_dft_on_random_16() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let x: Vec<f64> = (0..16).map(|_| rng.random_range(-3.0..3.0)).collect();
        let fast = bin_powers(&x).unwrap();
        let slow = naive_bin_powers(&x);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn spectrum_errors() {
        assert!(matches!(power_spectrum(&[0.0; 8]), Err(Error::ZeroPower)));
        assert!(matches!(power_spectrum(&[1.0; 12]), Err(Error::InvalidWidth(12))));
        assert!(matches!(power_spectrum(&[1.0; 4]), Err(Error::InvalidWidth(4))));
    }

    #[test]
    fn entropy_examples() {
        let uniform = PowerSpectrum::from_powers(&[1.0; 8]).unwrap();
        assert_eq!(spectral_entropy(&uniform), 3.0);
        let mut one_hot = vec![0.0; 9];
        one_hot[0] = 4.0;
        assert_eq!(spectral_entropy(&PowerSpectrum::from_powers(&one_hot).unwrap()), 0.0);
        let coin = PowerSpectrum::from_powers(&[0.5, 0.5]).unwrap();
        assert_eq!(spectral_entropy(&coin), 1.0);
    }

    #[test]
    fn alternating_window_features() {
        let w = Window {
            machine_id: "m".into(),
            channel: Channel::Vibration,
            start_index: 0,
            end_timestamp_ms: 7,
            samples: vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
            label: None,
        };
        let fv = extract_features(&w).unwrap();
        assert_eq!(fv.to_vec(), vec![1.0, 1.0, 0.0, 1.0]);
        assert_eq!(fv.names()[2], "vibration_entropy_bits");
    }

    #[test]
    fn constant_window_is_an_error() {
        assert!(matches!(channel_features(&[3.0; 8]), Err(Error::SigmaZero)));
    }

    #[test]
    fn composition_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..4.0)).collect();
        let f = channel_features(&x).unwrap();
        assert_eq!(f.sigma, std_dev(&x).unwrap());
        assert_eq!(f.rms, rms(&x).unwrap());
        assert_eq!(f.entropy_bits, spectral_entropy(&power_spectrum(&x).unwrap()));
        assert_eq!(f.kurtosis, kurtosis(&x).unwrap());
    }

    #[test]
    fn concat_orders_by_channel() {
        let f = ChannelFeatures { sigma: 1.0, rms: 2.0, entropy_bits: 3.0, kurtosis: 4.0 };
        let g = ChannelFeatures { sigma: 5.0, rms: 6.0, entropy_bits: 7.0, kurtosis: 8.0 };
        let v = FeatureVector::concat([
            FeatureVector::single(Channel::Load, g),
            FeatureVector::single(Channel::Vibration, f),
        ])
        .unwrap();
        assert_eq!(v.channels(), vec![Channel::Vibration, Channel::Load]);
        assert_eq!(v.to_vec(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(v.dim(), 8);
        assert!(FeatureVector::concat([v.clone(), v]).is_err());
    }

    fn window_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop_oneof![Just(8usize), Just(16), Just(32), Just(64)]
            .prop_flat_map(|w| prop::collection::vec(-100.0f64..100.0, w))
    }

    proptest! {
        #[test]
        fn scale_equivariance(x in window_strategy(), c in 0.01f64..100.0) {
            let y: Vec<f64> = x.iter().map(|v| c * v).collect();
            let (s, r) = (std_dev(&x).unwrap(), rms(&x).unwrap());
            prop_assert!((std_dev(&y).unwrap() - c * s).abs() <= 1e-12 * c * s);
            prop_assert!((rms(&y).unwrap() - c * r).abs() <= 1e-12 * c * r);
        }

        #[test]
        fn scale_and_shift_invariance(x in window_strategy(), c in prop_oneof![-50.0f64..-0.02, 0.02f64..50.0], a in -1e3f64..1e3) {
            prop_assume!(std_dev(&x).unwrap() > 1e-3);
            let y: Vec<f64> = x.iter().map(|v| c * v).collect();
            let hx = spectral_entropy(&power_spectrum(&x).unwrap());
            let hy = spectral_entropy(&power_spectrum(&y).unwrap());
            prop_assert!((hx - hy).abs() < 1e-9);
            let kx = kurtosis(&x).unwrap();
            prop_assert!((kx - kurtosis(&y).unwrap()).abs() < 1e-9);
            let z: Vec<f64> = x.iter().map(|v| v + a).collect();
            prop_assert!((kx - kurtosis(&z).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn parseval_and_entropy_bounds(x in window_strategy()) {
            prop_assume!(x.iter().any(|v| *v != 0.0));
            let ps = power_spectrum(&x).unwrap();
            let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
            let expected = x.len() as f64 * mean_sq;
            prop_assert!((ps.total_power() - expected).abs() <= 1e-9 * expected);
            let h = spectral_entropy(&ps);
            prop_assert!(h >= 0.0 && h <= (ps.bins() as f64).log2() + 1e-12);
        }

        #[test]
        fn kurtosis_lower_bound(x in window_strategy()) {
            prop_assume!(std_dev(&x).unwrap() > 1e-6);
            prop_assert!(kurtosis(&x).unwrap() >= 1.0 - 1e-12);
        }
    }
}
