//! Rational-ratio polyphase resampling with a Kaiser-windowed sinc kernel.

use thiserror::Error;

use super::AudioBuffer;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResampleError {
    #[error("target sample rate must be positive")]
    ZeroRate,
}

/// Zero crossings of the sinc kept on each side of the kernel centre.
const LOBES: f64 = 24.0;
/// Cutoff as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.94;
const KAISER_BETA: f64 = 8.6;
/// Above this many phases the kernel is evaluated per output sample instead of tabulated.
const MAX_TABLE_PHASES: u64 = 4096;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut term, mut sum, mut k) = (1.0, 1.0, 1.0);
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

struct Kernel {
    /// Cutoff in cycles per input sample.
    fc: f64,
    half_width: f64,
    /// Taps per phase; offsets run from `1 - reach` to `reach` around the base index.
    reach: i64,
    inv_i0_beta: f64,
}

impl Kernel {
    fn new(up: u64, down: u64) -> Self {
        let fc = 0.5 * ROLLOFF * (up as f64 / down as f64).min(1.0);
        let half_width = LOBES / (2.0 * fc);
        Kernel {
            fc,
            half_width,
            reach: half_width.ceil() as i64,
            inv_i0_beta: 1.0 / bessel_i0(KAISER_BETA),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let u = x / self.half_width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let arg = 2.0 * self.fc * x;
        let sinc = if arg == 0.0 {
            1.0
        } else {
            (std::f64::consts::PI * arg).sin() / (std::f64::consts::PI * arg)
        };
        let window = bessel_i0(KAISER_BETA * (1.0 - u * u).sqrt()) * self.inv_i0_beta;
        2.0 * self.fc * sinc * window
    }

    /// Taps for fractional offset `frac` in [0, 1), normalized to unit DC gain.
    fn phase_taps(&self, frac: f64) -> Vec<f64> {
        let mut taps: Vec<f64> = (1 - self.reach..=self.reach)
            .map(|j| self.eval(frac - j as f64))
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= sum);
        taps
    }
}

/// Resamples to `target_rate`. The output holds `round(n * target / source)`
/// samples; a same-rate call returns an identical copy.
pub fn resample<T: Scalar>(
    buf: &AudioBuffer<T>,
    target_rate: u32,
) -> Result<AudioBuffer<T>, ResampleError> {
    if target_rate == 0 {
        return Err(ResampleError::ZeroRate);
    }
    if target_rate == buf.sample_rate {
        return Ok(buf.clone());
    }
    let g = gcd(u64::from(buf.sample_rate), u64::from(target_rate));
    let up = u64::from(target_rate) / g;
    let down = u64::from(buf.sample_rate) / g;
    let n = buf.samples.len() as u64;
    let out_len = ((2 * n * up + down) / (2 * down)) as usize;
    let kernel = Kernel::new(up, down);

    let table: Option<Vec<Vec<T>>> = (up <= MAX_TABLE_PHASES).then(|| {
        (0..up)
            .map(|p| {
                kernel
                    .phase_taps(p as f64 / up as f64)
                    .into_iter()
                    .map(T::lit)
                    .collect()
            })
            .collect()
    });

    let x = &buf.samples;
    let mut out = Vec::with_capacity(out_len);
    let mut owned;
    for i in 0..out_len as u64 {
        let pos = i * down;
        let base = (pos / up) as i64;
        let phase = pos % up;
        let taps: &[T] = match &table {
            Some(t) => &t[phase as usize],
            None => {
                owned = kernel
                    .phase_taps(phase as f64 / up as f64)
                    .into_iter()
                    .map(T::lit)
                    .collect::<Vec<T>>();
                &owned
            }
        };
        let first = base + 1 - kernel.reach;
        let mut acc = T::zero();
        for (k, &w) in taps.iter().enumerate() {
            let idx = first + k as i64;
            if idx >= 0 && (idx as usize) < x.len() {
                acc += x[idx as usize] * w;
            }
        }
        out.push(acc);
    }
    Ok(AudioBuffer::new(out, target_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};

    fn sine(freq: f64, rate: u32, n: usize, amp: f64) -> AudioBuffer<f64> {
        let w = 2.0 * std::f64::consts::PI * freq / f64::from(rate);
        AudioBuffer::new((0..n).map(|i| amp * (w * i as f64).sin()).collect(), rate)
    }

    #[test]
    fn halving_length() {
        let buf = sine(300.0, 44100, 44100, 0.5);
        let out = resample(&buf, 22050).unwrap();
        assert_eq!(out.sample_rate, 22050);
        assert!((out.samples.len() as i64 - 22050).abs() <= 1);
        let odd = AudioBuffer::new(vec![0.0f32; 7], 44100);
        assert_eq!(resample(&odd, 22050).unwrap().samples.len(), 4);
    }

    #[test]
    fn same_rate_is_identity() {
        let buf = sine(123.0, 22050, 1000, 0.3);
        assert_eq!(resample(&buf, 22050).unwrap(), buf);
        assert_eq!(resample(&buf, 0), Err(ResampleError::ZeroRate));
    }

    #[test]
    fn tone_survives_downsampling() {
        let amp = 0.5;
        let buf = sine(1000.0, 44100, 2 * 44100, amp);
        let out = resample(&buf, 22050).unwrap();
        // one second from the interior: 1 Hz bins
        let seg: Vec<f64> = out.samples[11025..11025 + 22050].to_vec();
        let mut spec: Vec<Complex<f64>> = seg.iter().map(|&s| Complex::new(s, 0.0)).collect();
        FftPlanner::new()
            .plan_fft_forward(spec.len())
            .process(&mut spec);
        let peak = (0..spec.len() / 2)
            .max_by(|&a, &b| spec[a].norm().total_cmp(&spec[b].norm()))
            .unwrap();
        assert!((peak as i64 - 1000).abs() <= 1, "peak bin {peak}");
        let rms = (seg.iter().map(|s| s * s).sum::<f64>() / seg.len() as f64).sqrt();
        let db = 20.0 * (rms / (amp / 2f64.sqrt())).log10();
        assert!(db.abs() < 0.1, "passband deviation {db} dB");
    }

    #[test]
    fn non_integer_ratio_and_upsampling() {
        let buf = sine(440.0, 48000, 4800, 0.5);
        let out = resample(&buf, 22050).unwrap();
        assert_eq!(out.samples.len(), 2205);
        let up = resample(&sine(440.0, 22050, 2205, 0.5), 44100).unwrap();
        assert_eq!(up.samples.len(), 4410);
        let expected = sine(440.0, 44100, 4410, 0.5);
        let err = up.samples[500..3900]
            .iter()
            .zip(&expected.samples[500..3900])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "max interior error {err}");
    }

    #[test]
    fn large_phase_count_uses_direct_kernel() {
        let buf = sine(200.0, 44101, 4410, 0.5);
        let out = resample(&buf, 22050).unwrap();
        assert_eq!(
            out.samples.len(),
            (4410.0f64 * 22050.0 / 44101.0).round() as usize
        );
    }
}
