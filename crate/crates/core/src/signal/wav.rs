//! RIFF/WAVE container, 16-bit PCM mono only.

use thiserror::Error;

use super::AudioBuffer;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WavError {
    #[error("unsupported container")]
    UnsupportedContainer,
    #[error("unsupported codec (format tag {0:#06x})")]
    UnsupportedCodec(u16),
    #[error("unsupported bit depth {0}")]
    UnsupportedBitDepth(u16),
    #[error("unsupported channel count {0}; only mono is accepted")]
    UnsupportedChannels(u16),
    #[error("truncated {0} chunk")]
    Truncated(&'static str),
    #[error("missing {0} chunk")]
    MissingChunk(&'static str),
    #[error("invalid sample rate 0")]
    ZeroSampleRate,
}

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decodes a 16-bit PCM mono WAV file. Samples are scaled by 1/32768.
pub fn read_wav<T: Scalar>(bytes: &[u8]) -> Result<AudioBuffer<T>, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::UnsupportedContainer);
    }
    let mut pos = 12;
    let mut format: Option<(u16, u32)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body_start + size > bytes.len() {
                    return Err(WavError::Truncated("fmt"));
                }
                let fmt = &bytes[body_start..body_start + size];
                let mut tag = u16_at(fmt, 0);
                let channels = u16_at(fmt, 2);
                let rate = u32_at(fmt, 4);
                let bits = u16_at(fmt, 14);
                if tag == FORMAT_EXTENSIBLE && size >= 26 {
                    tag = u16_at(fmt, 24);
                }
                if tag != FORMAT_PCM {
                    return Err(WavError::UnsupportedCodec(tag));
                }
                if bits != 16 {
                    return Err(WavError::UnsupportedBitDepth(bits));
                }
                if channels != 1 {
                    return Err(WavError::UnsupportedChannels(channels));
                }
                if rate == 0 {
                    return Err(WavError::ZeroSampleRate);
                }
                format = Some((channels, rate));
            }
            b"data" => {
                let (_, rate) = format.ok_or(WavError::MissingChunk("fmt"))?;
                if body_start + size > bytes.len() || !size.is_multiple_of(2) {
                    return Err(WavError::Truncated("data"));
                }
                let scale = T::lit(1.0 / 32768.0);
                let samples = bytes[body_start..body_start + size]
                    .chunks_exact(2)
                    .map(|c| T::lit(f64::from(i16::from_le_bytes([c[0], c[1]]))) * scale)
                    .collect();
                return Ok(AudioBuffer::new(samples, rate));
            }
            _ => {}
        }
        pos = body_start + size + (size & 1);
    }
    Err(if format.is_none() {
        WavError::MissingChunk("fmt")
    } else {
        WavError::MissingChunk("data")
    })
}

/// Encodes as 16-bit PCM mono. Samples are scaled by 32768, rounded and clipped.
pub fn write_wav<T: Scalar>(buf: &AudioBuffer<T>) -> Vec<u8> {
    let data_len = (buf.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&buf.sample_rate.to_le_bytes());
    out.extend_from_slice(&(buf.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &buf.samples {
        let v = (s.to_f64_lossy() * 32768.0)
            .round()
            .clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
