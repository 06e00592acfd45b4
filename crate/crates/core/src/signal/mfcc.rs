//! Mel-frequency cepstral coefficients.
//!
//! Per frame: periodic Hann window, zero-padded FFT power spectrum, triangular
//! filters on the HTK mel scale `2595 log10(1 + f/700)`, natural log floored at
//! [`LOG_FLOOR`], orthonormal DCT-II, first `n_mfcc` coefficients.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use super::{AudioBuffer, ConfigError, FeatureConfig};
use crate::scalar::{seconds_to_samples, Scalar};

pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("signal of {samples} samples is shorter than one {frame}-sample frame")]
    TooShort { samples: usize, frame: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Frame-major matrix of cepstral coefficients `c0..c{K-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix<T> {
    data: Vec<T>,
    n_frames: usize,
    n_coeffs: usize,
    /// Effective frame length in seconds (whole samples).
    pub frame_length: f64,
    /// Effective hop in seconds (whole samples).
    pub hop: f64,
    pub sample_rate: u32,
}

impl<T: Scalar> MfccMatrix<T> {
    /// Builds a matrix from rows. Panics if rows differ in length.
    pub fn from_rows(rows: Vec<Vec<T>>, frame_length: f64, hop: f64, sample_rate: u32) -> Self {
        let n_coeffs = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_coeffs), "ragged MFCC rows");
        MfccMatrix {
            n_frames: rows.len(),
            n_coeffs,
            data: rows.into_iter().flatten().collect(),
            frame_length,
            hop,
            sample_rate,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_coeffs(&self) -> usize {
        self.n_coeffs
    }

    pub fn frame(&self, t: usize) -> &[T] {
        &self.data[t * self.n_coeffs..(t + 1) * self.n_coeffs]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[T]> {
        self.data
            .chunks_exact(self.n_coeffs.max(1))
            .take(self.n_frames)
    }

    pub fn is_empty(&self) -> bool {
        self.n_frames == 0
    }
}

/// Triangular mel filters evaluated at FFT bin centre frequencies.
#[derive(Debug, Clone)]
pub struct MelFilterbank<T> {
    /// `n_mels + 2` edge frequencies in Hz.
    edges_hz: Vec<f64>,
    /// Per filter: first bin and weights.
    filters: Vec<(usize, Vec<T>)>,
}

impl<T: Scalar> MelFilterbank<T> {
    pub fn new(n_mels: usize, fft_size: usize, sample_rate: u32) -> Self {
        let nyquist = f64::from(sample_rate) / 2.0;
        let mel_max = hz_to_mel(nyquist);
        let edges_hz: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = f64::from(sample_rate) / fft_size as f64;
        let n_bins = fft_size / 2 + 1;
        let filters = (0..n_mels)
            .map(|m| {
                let (lo, mid, hi) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
                let first = (lo / bin_hz).floor() as usize;
                let last = ((hi / bin_hz).ceil() as usize).min(n_bins - 1);
                let weights = (first..=last)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = if f <= lo || f >= hi {
                            0.0
                        } else if f <= mid {
                            (f - lo) / (mid - lo)
                        } else {
                            (hi - f) / (hi - mid)
                        };
                        T::lit(w)
                    })
                    .collect();
                (first, weights)
            })
            .collect();
        MelFilterbank { edges_hz, filters }
    }

    pub fn n_mels(&self) -> usize {
        self.filters.len()
    }

    /// `(lower, centre, upper)` frequencies of filter `m` in Hz.
    pub fn band(&self, m: usize) -> (f64, f64, f64) {
        (self.edges_hz[m], self.edges_hz[m + 1], self.edges_hz[m + 2])
    }

    pub fn apply(&self, power: &[T], out: &mut [T]) {
        for ((first, weights), o) in self.filters.iter().zip(out.iter_mut()) {
            *o = weights
                .iter()
                .zip(&power[*first..])
                .map(|(&w, &p)| w * p)
                .sum();
        }
    }
}

struct FrameAnalyzer<T: Scalar> {
    frame: usize,
    hop: usize,
    window: Vec<T>,
    fft: std::sync::Arc<dyn rustfft::Fft<T>>,
    fft_size: usize,
    bank: MelFilterbank<T>,
    scratch: Vec<Complex<T>>,
    power: Vec<T>,
}

impl<T: Scalar> FrameAnalyzer<T> {
    fn new(cfg: &FeatureConfig, sample_rate: u32) -> Result<Self, FeatureError> {
        cfg.validate_for_rate(sample_rate)?;
        let frame = seconds_to_samples(cfg.frame_length, sample_rate);
        let hop = seconds_to_samples(cfg.hop, sample_rate).max(1);
        let two_pi = T::lit(2.0) * T::PI();
        let window = (0..frame)
            .map(|i| {
                T::lit(0.5)
                    - T::lit(0.5)
                        * (two_pi * T::from_usize_lossy(i) / T::from_usize_lossy(frame)).cos()
            })
            .collect();
        Ok(FrameAnalyzer {
            frame,
            hop,
            window,
            fft: FftPlanner::new().plan_fft_forward(cfg.fft_size),
            fft_size: cfg.fft_size,
            bank: MelFilterbank::new(cfg.n_mels, cfg.fft_size, sample_rate),
            scratch: vec![Complex::new(T::zero(), T::zero()); cfg.fft_size],
            power: vec![T::zero(); cfg.fft_size / 2 + 1],
        })
    }

    fn n_frames(&self, n_samples: usize) -> Result<usize, FeatureError> {
        if n_samples < self.frame {
            return Err(FeatureError::TooShort {
                samples: n_samples,
                frame: self.frame,
            });
        }
        Ok((n_samples - self.frame) / self.hop + 1)
    }

    fn mel_energies(&mut self, samples: &[T], t: usize, out: &mut [T]) {
        let start = t * self.hop;
        for (i, c) in self.scratch.iter_mut().enumerate() {
            let v = if i < self.frame {
                samples[start + i] * self.window[i]
            } else {
                T::zero()
            };
            *c = Complex::new(v, T::zero());
        }
        self.fft.process(&mut self.scratch);
        for (p, c) in self
            .power
            .iter_mut()
            .zip(&self.scratch[..self.fft_size / 2 + 1])
        {
            *p = c.norm_sqr();
        }
        self.bank.apply(&self.power, out);
    }
}

/// Per-frame mel filterbank energies (linear power), `T x n_mels`.
pub fn mel_energies<T: Scalar>(
    buf: &AudioBuffer<T>,
    cfg: &FeatureConfig,
) -> Result<Vec<Vec<T>>, FeatureError> {
    let mut an = FrameAnalyzer::new(cfg, buf.sample_rate)?;
    let n = an.n_frames(buf.samples.len())?;
    Ok((0..n)
        .map(|t| {
            let mut row = vec![T::zero(); cfg.n_mels];
            an.mel_energies(&buf.samples, t, &mut row);
            row
        })
        .collect())
}

fn dct_matrix<T: Scalar>(n_in: usize, n_out: usize) -> Vec<Vec<T>> {
    let m = n_in as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / m).sqrt()
            } else {
                (2.0 / m).sqrt()
            };
            (0..n_in)
                .map(|i| {
                    T::lit(scale * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / m).cos())
                })
                .collect()
        })
        .collect()
}

pub fn mfcc<T: Scalar>(
    buf: &AudioBuffer<T>,
    cfg: &FeatureConfig,
) -> Result<MfccMatrix<T>, FeatureError> {
    let mut an = FrameAnalyzer::new(cfg, buf.sample_rate)?;
    let n_frames = an.n_frames(buf.samples.len())?;
    let dct = dct_matrix::<T>(cfg.n_mels, cfg.n_mfcc);
    let floor = T::lit(LOG_FLOOR);
    let mut mel = vec![T::zero(); cfg.n_mels];
    let mut data = Vec::with_capacity(n_frames * cfg.n_mfcc);
    for t in 0..n_frames {
        an.mel_energies(&buf.samples, t, &mut mel);
        mel.iter_mut().for_each(|e| *e = e.max(floor).ln());
        data.extend(
            dct.iter()
                .map(|row| row.iter().zip(&mel).map(|(&a, &b)| a * b).sum::<T>()),
        );
    }
    let sr = f64::from(buf.sample_rate);
    Ok(MfccMatrix {
        data,
        n_frames,
        n_coeffs: cfg.n_mfcc,
        frame_length: an.frame as f64 / sr,
        hop: an.hop as f64 / sr,
        sample_rate: buf.sample_rate,
    })
}
