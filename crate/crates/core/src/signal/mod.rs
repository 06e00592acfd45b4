//! Audio I/O and acoustic features.

mod config;
mod f0;
mod mfcc;
mod resample;
mod wav;

pub use config::{ConfigError, FeatureConfig};
pub use f0::{estimate_f0, F0Contour, F0Error, FramePitch};
pub use mfcc::{
    hz_to_mel, mel_energies, mel_to_hz, mfcc, FeatureError, MelFilterbank, MfccMatrix, LOG_FLOOR,
};
pub use resample::{resample, ResampleError};
pub use wav::{read_wav, write_wav, WavError};

/// Mono audio samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer<T> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
}

impl<T> AudioBuffer<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Self {
        AudioBuffer {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}
