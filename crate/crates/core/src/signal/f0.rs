//! YIN fundamental-frequency tracking.
//!
//! Frames share the MFCC frame grid: frame `t` is centred on sample
//! `t * hop + frame / 2`. Each frame analyses `2 * tau_max` samples around the
//! centre (zero outside the signal), where `tau_max = sr / f0_min` is both the
//! longest lag searched and the integration window.

use thiserror::Error;

use super::{AudioBuffer, ConfigError, FeatureConfig};
use crate::scalar::{seconds_to_samples, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum F0Error {
    #[error("signal of {samples} samples is shorter than the {window}-sample F0 analysis window")]
    TooShort { samples: usize, window: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Per-frame F0 in Hz; 0 marks an unvoiced frame.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Contour<T> {
    pub f0: Vec<T>,
    pub voiced: Vec<bool>,
    /// Hop in seconds.
    pub hop: f64,
}

impl<T: Scalar> F0Contour<T> {
    /// Builds a contour from raw values; frames with `f0 <= 0` are unvoiced.
    pub fn from_hz(values: Vec<T>, hop: f64) -> Self {
        let f0: Vec<T> = values
            .into_iter()
            .map(|v| if v > T::zero() { v } else { T::zero() })
            .collect();
        let voiced = f0.iter().map(|&v| v > T::zero()).collect();
        F0Contour { f0, voiced, hop }
    }

    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.voiced.is_empty() {
            return 0.0;
        }
        self.voiced.iter().filter(|&&v| v).count() as f64 / self.voiced.len() as f64
    }
}

/// Outcome of YIN on a single frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePitch<T> {
    /// Refined period in samples.
    pub period: T,
    /// Normalized difference at the chosen lag.
    pub aperiodicity: T,
}

struct Yin<T> {
    tau_min: usize,
    tau_max: usize,
    threshold: T,
    diff: Vec<T>,
    cmnd: Vec<T>,
}

impl<T: Scalar> Yin<T> {
    fn new(cfg: &FeatureConfig, sample_rate: u32) -> Self {
        let sr = f64::from(sample_rate);
        let tau_max = (sr / cfg.f0_min).ceil() as usize;
        let tau_min = ((sr / cfg.f0_max).floor() as usize).max(2);
        Yin {
            tau_min,
            tau_max,
            threshold: T::lit(cfg.voicing_threshold),
            diff: vec![T::zero(); tau_max + 2],
            cmnd: vec![T::zero(); tau_max + 2],
        }
    }

    fn window(&self) -> usize {
        2 * self.tau_max
    }

    /// `seg` holds `window() + 2` samples (the extra two feed the lag used by interpolation).
    fn analyse(&mut self, seg: &[T]) -> Option<FramePitch<T>> {
        let w = self.tau_max;
        let energy: T = seg[..w].iter().map(|&s| s * s).sum();
        if energy <= T::lit(1e-12) {
            return None;
        }
        let last = self.tau_max + 1;
        self.diff[0] = T::zero();
        for tau in 1..=last {
            self.diff[tau] = (0..w)
                .map(|j| {
                    let d = seg[j] - seg[j + tau];
                    d * d
                })
                .sum();
        }
        self.cmnd[0] = T::one();
        let mut running = T::zero();
        for tau in 1..=last {
            running += self.diff[tau];
            self.cmnd[tau] = if running > T::zero() {
                self.diff[tau] * T::from_usize_lossy(tau) / running
            } else {
                T::one()
            };
        }
        let mut tau = (self.tau_min..=self.tau_max).find(|&t| self.cmnd[t] < self.threshold)?;
        while tau < self.tau_max && self.cmnd[tau + 1] < self.cmnd[tau] {
            tau += 1;
        }
        let (a, b, c) = (self.cmnd[tau - 1], self.cmnd[tau], self.cmnd[tau + 1]);
        let denom = a - T::lit(2.0) * b + c;
        let shift = if denom > T::zero() {
            (a - c) / (T::lit(2.0) * denom)
        } else {
            T::zero()
        };
        let shift = shift.max(T::lit(-1.0)).min(T::one());
        Some(FramePitch {
            period: T::from_usize_lossy(tau) + shift,
            aperiodicity: b,
        })
    }
}

pub fn estimate_f0<T: Scalar>(
    buf: &AudioBuffer<T>,
    cfg: &FeatureConfig,
) -> Result<F0Contour<T>, F0Error> {
    cfg.validate_for_rate(buf.sample_rate)?;
    let mut yin = Yin::<T>::new(cfg, buf.sample_rate);
    let n = buf.samples.len();
    let window = yin.window();
    if n < window {
        return Err(F0Error::TooShort { samples: n, window });
    }
    let frame = seconds_to_samples(cfg.frame_length, buf.sample_rate);
    let hop = seconds_to_samples(cfg.hop, buf.sample_rate).max(1);
    let n_frames = if n >= frame { (n - frame) / hop + 1 } else { 0 };
    let sr = T::from_u32(buf.sample_rate).expect("sample rate representable");
    let (lo, hi) = (T::lit(cfg.f0_min), T::lit(cfg.f0_max));

    let mut seg = vec![T::zero(); window + 2];
    let mut f0 = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let center = (t * hop + frame / 2) as i64;
        let start = center - yin.tau_max as i64;
        for (i, s) in seg.iter_mut().enumerate() {
            let idx = start + i as i64;
            *s = if idx >= 0 && (idx as usize) < n {
                buf.samples[idx as usize]
            } else {
                T::zero()
            };
        }
        let hz = yin
            .analyse(&seg)
            .map(|p| sr / p.period)
            .filter(|&hz| hz >= lo && hz <= hi)
            .unwrap_or_else(T::zero);
        f0.push(hz);
    }
    Ok(F0Contour::from_hz(
        f0,
        hop as f64 / f64::from(buf.sample_rate),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tone(freq: f64, sr: u32, secs: f64) -> AudioBuffer<f64> {
        let n = (secs * f64::from(sr)) as usize;
        let w = 2.0 * std::f64::consts::PI * freq / f64::from(sr);
        AudioBuffer::new((0..n).map(|i| 0.6 * (w * i as f64).sin()).collect(), sr)
    }

    fn interior<T: Copy>(v: &[T]) -> &[T] {
        let margin = v.len() / 20 + 2;
        &v[margin..v.len() - margin]
    }

    #[test]
    fn sine_220() {
        let c = estimate_f0(&tone(220.0, 22050, 2.0), &FeatureConfig::default()).unwrap();
        let inner = interior(&c.f0);
        let good = inner.iter().filter(|&&f| (f - 220.0).abs() <= 2.0).count();
        assert!(
            good as f64 >= 0.9 * inner.len() as f64,
            "{good}/{}",
            inner.len()
        );
    }

    #[test]
    fn silence_unvoiced() {
        let c = estimate_f0(
            &AudioBuffer::new(vec![0.0f64; 22050], 22050),
            &FeatureConfig::default(),
        )
        .unwrap();
        assert!(c.f0.iter().all(|&f| f == 0.0));
        assert!(c.voiced.iter().all(|&v| !v));
    }

    #[test]
    fn white_noise_mostly_unvoiced() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let buf = AudioBuffer::new(
            (0..22050).map(|_| rng.random_range(-0.5f64..0.5)).collect(),
            22050,
        );
        let c = estimate_f0(&buf, &FeatureConfig::default()).unwrap();
        assert!(
            c.voiced_fraction() <= 0.2,
            "voiced fraction {}",
            c.voiced_fraction()
        );
    }

    #[test]
    fn voiced_iff_positive() {
        let c = estimate_f0(&tone(150.0, 22050, 0.5), &FeatureConfig::default()).unwrap();
        for (f, v) in c.f0.iter().zip(&c.voiced) {
            assert_eq!(*v, *f > 0.0);
            if *v {
                assert!((70.0..=400.0).contains(f));
            }
        }
    }

    #[test]
    fn frame_grid_matches_mfcc() {
        let cfg = FeatureConfig::default();
        let buf = tone(200.0, 22050, 1.3);
        let c = estimate_f0(&buf, &cfg).unwrap();
        let m = crate::signal::mfcc(&buf, &cfg).unwrap();
        assert_eq!(c.len(), m.n_frames());
        assert_eq!(c.hop, m.hop);
    }

    #[test]
    fn too_short_rejected() {
        let buf = AudioBuffer::new(vec![0.1f64; 100], 22050);
        assert!(matches!(
            estimate_f0(&buf, &FeatureConfig::default()),
            Err(F0Error::TooShort { .. })
        ));
    }
}
