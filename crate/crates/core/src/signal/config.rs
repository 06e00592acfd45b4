use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid feature configuration: {0}")]
    Invalid(String),
}

/// Analysis parameters for MFCC and F0 extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Analysis frame length in seconds.
    pub frame_length: f64,
    /// Frame advance in seconds.
    pub hop: f64,
    pub n_mels: usize,
    /// Number of cepstral coefficients kept, including c0.
    pub n_mfcc: usize,
    pub fft_size: usize,
    pub f0_min: f64,
    pub f0_max: f64,
    /// Cumulative-mean-normalized difference below which a frame is voiced.
    pub voicing_threshold: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            frame_length: 0.025,
            hop: 0.010,
            n_mels: 80,
            n_mfcc: 14,
            fft_size: 1024,
            f0_min: 70.0,
            f0_max: 400.0,
            voicing_threshold: 0.15,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.frame_length.is_nan()
            || self.hop.is_nan()
            || self.frame_length <= 0.0
            || self.hop <= 0.0
        {
            return bad("frame_length and hop must be positive");
        }
        if !(self.f0_min > 0.0 && self.f0_min < self.f0_max) {
            return bad("f0_min must be positive and below f0_max");
        }
        if self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            return bad("n_mfcc must be in 1..=n_mels");
        }
        if !self.fft_size.is_power_of_two() {
            return bad("fft_size must be a power of two");
        }
        if !(self.voicing_threshold > 0.0 && self.voicing_threshold < 1.0) {
            return bad("voicing_threshold must lie in (0, 1)");
        }
        Ok(())
    }

    /// Checks the rate-dependent constraint `fft_size >= frame samples`.
    pub fn validate_for_rate(&self, sample_rate: u32) -> Result<(), ConfigError> {
        self.validate()?;
        let frame = crate::scalar::seconds_to_samples(self.frame_length, sample_rate);
        if frame == 0 {
            return Err(ConfigError::Invalid("frame shorter than one sample".into()));
        }
        if self.fft_size < frame {
            return Err(ConfigError::Invalid(format!(
                "fft_size {} smaller than frame of {frame} samples at {sample_rate} Hz",
                self.fft_size
            )));
        }
        if self.f0_max >= f64::from(sample_rate) / 2.0 {
            return Err(ConfigError::Invalid(
                "f0_max must be below the Nyquist frequency".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for FeatureConfig {
    /// Flat `key=value` form, one entry per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "frame_length={}", self.frame_length)?;
        writeln!(f, "hop={}", self.hop)?;
        writeln!(f, "n_mels={}", self.n_mels)?;
        writeln!(f, "n_mfcc={}", self.n_mfcc)?;
        writeln!(f, "fft_size={}", self.fft_size)?;
        writeln!(f, "f0_min={}", self.f0_min)?;
        writeln!(f, "f0_max={}", self.f0_max)?;
        writeln!(f, "voicing_threshold={}", self.voicing_threshold)
    }
}

impl FromStr for FeatureConfig {
    type Err = ConfigError;

    /// Unlisted keys keep their defaults; `#` starts a comment.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cfg = FeatureConfig::default();
        for (i, raw) in s.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("expected key=value, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let syntax = |m: String| ConfigError::Syntax {
                line: line_no,
                message: m,
            };
            let real = || {
                value
                    .parse::<f64>()
                    .map_err(|_| syntax(format!("`{key}` expects a number")))
            };
            let count = || {
                value
                    .parse::<usize>()
                    .map_err(|_| syntax(format!("`{key}` expects an integer")))
            };
            match key {
                "frame_length" => cfg.frame_length = real()?,
                "hop" => cfg.hop = real()?,
                "n_mels" => cfg.n_mels = count()?,
                "n_mfcc" => cfg.n_mfcc = count()?,
                "fft_size" => cfg.fft_size = count()?,
                "f0_min" => cfg.f0_min = real()?,
                "f0_max" => cfg.f0_max = real()?,
                "voicing_threshold" => cfg.voicing_threshold = real()?,
                other => return Err(syntax(format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let cfg = FeatureConfig {
            n_mfcc: 13,
            f0_max: 350.5,
            ..Default::default()
        };
        assert_eq!(cfg.to_string().parse::<FeatureConfig>().unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: FeatureConfig = "# override\nhop = 0.005\n".parse().unwrap();
        assert_eq!(cfg.hop, 0.005);
        assert_eq!(cfg.n_mels, 80);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            "hop".parse::<FeatureConfig>(),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            "\nbogus=1".parse::<FeatureConfig>(),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            "f0_min=500".parse::<FeatureConfig>(),
            Err(ConfigError::Invalid(_))
        ));
        assert!(FeatureConfig {
            fft_size: 512,
            ..Default::default()
        }
        .validate_for_rate(44100)
        .is_err());
        assert!(FeatureConfig::default().validate_for_rate(22050).is_ok());
    }
}
