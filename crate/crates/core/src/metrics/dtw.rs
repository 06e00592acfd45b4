use super::MetricError;
use crate::scalar::Scalar;
use crate::signal::MfccMatrix;

/// Monotone frame correspondence between a reference and a synthesized sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentPath {
    pairs: Vec<(usize, usize)>,
}

impl AlignmentPath {
    /// Validates the boundary and step conditions.
    pub fn new(
        pairs: Vec<(usize, usize)>,
        n_ref: usize,
        n_syn: usize,
    ) -> Result<Self, MetricError> {
        let path = AlignmentPath { pairs };
        path.check(n_ref, n_syn)?;
        Ok(path)
    }

    /// `(0,0), (1,1), ...` for two sequences of equal length.
    pub fn diagonal(n: usize) -> Self {
        AlignmentPath {
            pairs: (0..n).map(|i| (i, i)).collect(),
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn check(&self, n_ref: usize, n_syn: usize) -> Result<(), MetricError> {
        let invalid = |m: String| Err(MetricError::InvalidPath(m));
        if n_ref == 0 || n_syn == 0 {
            return Err(MetricError::Empty);
        }
        match (self.pairs.first(), self.pairs.last()) {
            (Some(&(0, 0)), Some(&last)) if last == (n_ref - 1, n_syn - 1) => {}
            _ => {
                return invalid(format!(
                    "path must run from (0,0) to ({}, {})",
                    n_ref - 1,
                    n_syn - 1
                ))
            }
        }
        for w in self.pairs.windows(2) {
            let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
            if !matches!((di, dj), (1, 0) | (0, 1) | (1, 1)) {
                return invalid(format!("illegal step {:?} -> {:?}", w[0], w[1]));
            }
        }
        Ok(())
    }
}

/// A DTW path together with its accumulated local cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment<T> {
    pub path: AlignmentPath,
    pub cost: T,
}

/// Euclidean distance over `c1..c{K-1}`.
pub fn cepstral_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .skip(1)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

/// Minimum-cost alignment with unit-weight steps (1,0), (0,1), (1,1).
/// Ties prefer the diagonal, then the reference advance.
pub fn dtw_align<T: Scalar>(
    reference: &MfccMatrix<T>,
    synth: &MfccMatrix<T>,
) -> Result<Alignment<T>, MetricError> {
    if reference.is_empty() || synth.is_empty() {
        return Err(MetricError::Empty);
    }
    if reference.n_coeffs() != synth.n_coeffs() {
        return Err(MetricError::CoefficientMismatch(
            reference.n_coeffs(),
            synth.n_coeffs(),
        ));
    }
    Ok(dtw_with(reference.n_frames(), synth.n_frames(), |i, j| {
        cepstral_distance(reference.frame(i), synth.frame(j))
    }))
}

/// DTW over an arbitrary local cost `dist(i, j)`.
pub fn dtw_with<T: Scalar>(n: usize, m: usize, dist: impl Fn(usize, usize) -> T) -> Alignment<T> {
    assert!(n > 0 && m > 0);
    let mut acc = vec![T::infinity(); n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            let d = dist(i, j);
            let best = if i == 0 && j == 0 {
                T::zero()
            } else {
                let diag = if i > 0 && j > 0 {
                    acc[at(i - 1, j - 1)]
                } else {
                    T::infinity()
                };
                let up = if i > 0 {
                    acc[at(i - 1, j)]
                } else {
                    T::infinity()
                };
                let left = if j > 0 {
                    acc[at(i, j - 1)]
                } else {
                    T::infinity()
                };
                diag.min(up).min(left)
            };
            acc[at(i, j)] = best + d;
        }
    }
    let mut pairs = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let up = acc[at(i - 1, j)];
            let left = acc[at(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        pairs.push((i, j));
    }
    pairs.reverse();
    Alignment {
        path: AlignmentPath { pairs },
        cost: acc[at(n - 1, m - 1)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> MfccMatrix<f64> {
        MfccMatrix::from_rows(rows, 0.025, 0.01, 22050)
    }

    #[test]
    fn self_alignment_is_diagonal() {
        let m = matrix(
            (0..7)
                .map(|i| vec![i as f64, (i * i) as f64, -(i as f64)])
                .collect(),
        );
        let a = dtw_align(&m, &m).unwrap();
        assert_eq!(a.path, AlignmentPath::diagonal(7));
        assert_eq!(a.cost, 0.0);
    }

    #[test]
    fn single_reference_frame_visits_every_synth_frame() {
        let r = matrix(vec![vec![0.0, 1.0]]);
        let s = matrix((0..5).map(|i| vec![0.0, i as f64]).collect());
        let a = dtw_align(&r, &s).unwrap();
        assert_eq!(a.path.pairs(), &[(0, 0), (0, 1), (0, 2), (0, 3), (0, 4)]);
        a.path.check(1, 5).unwrap();
    }

    #[test]
    fn input_errors() {
        let empty = matrix(vec![]);
        let one = matrix(vec![vec![0.0, 1.0]]);
        assert_eq!(dtw_align(&empty, &one), Err(MetricError::Empty));
        let other = matrix(vec![vec![0.0, 1.0, 2.0]]);
        assert_eq!(
            dtw_align(&one, &other),
            Err(MetricError::CoefficientMismatch(2, 3))
        );
    }

    #[test]
    fn path_validation() {
        assert!(AlignmentPath::new(vec![(0, 0), (1, 1)], 2, 2).is_ok());
        assert!(AlignmentPath::new(vec![(0, 0), (2, 2)], 3, 3).is_err());
        assert!(AlignmentPath::new(vec![(0, 0), (1, 0)], 2, 2).is_err());
        assert!(AlignmentPath::new(vec![(0, 0), (1, 1), (1, 0), (1, 1)], 2, 2).is_err());
    }
}
