//! Mel cepstral distortion and F0 contour comparison along a DTW path.

use serde::{Deserialize, Serialize};

use super::{AlignmentPath, MetricError};
use crate::scalar::Scalar;
use crate::signal::{F0Contour, MfccMatrix};

/// Mean over path pairs of `(10 / ln 10) * sqrt(2 * sum_{k>=1} (c_k - c'_k)^2)`.
pub fn mcd<T: Scalar>(
    reference: &MfccMatrix<T>,
    synth: &MfccMatrix<T>,
    path: &AlignmentPath,
) -> Result<T, MetricError> {
    if reference.n_coeffs() != synth.n_coeffs() {
        return Err(MetricError::CoefficientMismatch(
            reference.n_coeffs(),
            synth.n_coeffs(),
        ));
    }
    if reference.n_coeffs() < 2 {
        return Err(MetricError::TooFewCoefficients(reference.n_coeffs()));
    }
    path.check(reference.n_frames(), synth.n_frames())?;
    let scale = T::lit(10.0) / T::LN_10();
    let two = T::lit(2.0);
    let total: T = path
        .pairs()
        .iter()
        .map(|&(i, j)| {
            let sq: T = reference
                .frame(i)
                .iter()
                .zip(synth.frame(j))
                .skip(1)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            scale * (two * sq).sqrt()
        })
        .sum();
    Ok(total / T::from_usize_lossy(path.len()))
}

fn voiced_pairs<'a, T: Scalar>(
    reference: &'a F0Contour<T>,
    synth: &'a F0Contour<T>,
    path: &'a AlignmentPath,
) -> Result<impl Iterator<Item = (T, T)> + 'a, MetricError> {
    path.check(reference.len(), synth.len())?;
    Ok(path
        .pairs()
        .iter()
        .filter(|&&(i, j)| reference.voiced[i] && synth.voiced[j])
        .map(|&(i, j)| (reference.f0[i], synth.f0[j])))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F0Rmse<T> {
    /// `None` when no aligned pair is voiced on both sides.
    pub rmse: Option<T>,
    pub n_voiced_pairs: usize,
}

/// Linear-Hz RMSE over aligned pairs voiced in both contours.
pub fn rmse_f0<T: Scalar>(
    reference: &F0Contour<T>,
    synth: &F0Contour<T>,
    path: &AlignmentPath,
) -> Result<F0Rmse<T>, MetricError> {
    let (mut sum, mut n) = (T::zero(), 0usize);
    for (a, b) in voiced_pairs(reference, synth, path)? {
        sum += (a - b) * (a - b);
        n += 1;
    }
    let rmse = (n > 0).then(|| (sum / T::from_usize_lossy(n)).sqrt());
    Ok(F0Rmse {
        rmse,
        n_voiced_pairs: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UndefinedReason {
    /// Fewer than two mutually voiced pairs.
    TooFewPairs(usize),
    ConstantContour,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation<T> {
    Defined(T),
    Undefined(UndefinedReason),
}

impl<T: Copy> Correlation<T> {
    pub fn value(&self) -> Option<T> {
        match *self {
            Correlation::Defined(v) => Some(v),
            Correlation::Undefined(_) => None,
        }
    }
}

/// Pearson sample correlation of `(x, y)` pairs.
pub fn pearson<T: Scalar>(pairs: &[(T, T)]) -> Correlation<T> {
    let n = pairs.len();
    if n < 2 {
        return Correlation::Undefined(UndefinedReason::TooFewPairs(n));
    }
    let nf = T::from_usize_lossy(n);
    let mx = pairs.iter().map(|p| p.0).sum::<T>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<T>() / nf;
    let (mut sxy, mut sxx, mut syy, mut qx, mut qy) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for &(x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
        qx += x * x;
        qy += y * y;
    }
    let tiny = T::epsilon() * T::lit(16.0);
    if sxx <= tiny * qx || syy <= tiny * qy {
        return Correlation::Undefined(UndefinedReason::ConstantContour);
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Correlation::Defined(r.max(-T::one()).min(T::one()))
}

/// Pearson correlation over aligned pairs voiced in both contours.
pub fn f0_corr<T: Scalar>(
    reference: &F0Contour<T>,
    synth: &F0Contour<T>,
    path: &AlignmentPath,
) -> Result<Correlation<T>, MetricError> {
    let pairs: Vec<(T, T)> = voiced_pairs(reference, synth, path)?.collect();
    Ok(pearson(&pairs))
}
