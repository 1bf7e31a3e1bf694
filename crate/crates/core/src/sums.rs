//! Discrete iterated sums
//!
//! ```text
//! Σ^{i_1…i_ν}(n) = Σ_{0 ≤ k_1 < … < k_ν < n} ξ_{i_1}(k_1) ⋯ ξ_{i_ν}(k_ν)
//! ```
//!
//! computed in one streaming pass. Each pushed sample updates the levels in
//! decreasing degree so that level `n` only sees the pre-update level `n − 1`,
//! which enforces the strict ordering of the indices (no diagonal terms).

use crate::error::{Error, Result};
use crate::tensor::{scale_levels, SignatureState, Word};

/// A finite stretch `ξ(0), ξ(1), …` of a `d`-dimensional series.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSeries {
    dim: usize,
    samples: Vec<f64>,
    mean: Option<Vec<f64>>,
    bound: Option<f64>,
}

impl SampleSeries {
    pub fn new(dim: usize, samples: Vec<Vec<f64>>) -> Result<Self> {
        let mut flat = Vec::with_capacity(samples.len() * dim);
        for s in &samples {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: s.len(),
                });
            }
            flat.extend_from_slice(s);
        }
        Self::from_flat(dim, flat)
    }

    /// Row-major samples: sample `k` occupies `flat[k*d..(k+1)*d]`.
    pub fn from_flat(dim: usize, flat: Vec<f64>) -> Result<Self> {
        if dim == 0 || !flat.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: flat.len(),
            });
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("SampleSeries"));
        }
        Ok(Self {
            dim,
            samples: flat,
            mean: None,
            bound: None,
        })
    }

    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    pub fn with_mean(mut self, mean: Vec<f64>) -> Result<Self> {
        if mean.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: mean.len(),
            });
        }
        self.mean = Some(mean);
        Ok(self)
    }

    /// Attaches a sup-norm bound, checked against every sample.
    pub fn with_bound(mut self, bound: f64) -> Result<Self> {
        if let Some(k) = self.iter().position(|x| sup_norm(x) > bound) {
            return Err(Error::InvalidModel(format!(
                "sample {k} exceeds declared bound {bound}"
            )));
        }
        self.bound = Some(bound);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> Option<&[f64]> {
        self.mean.as_deref()
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.samples[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.samples.chunks_exact(self.dim)
    }

    pub fn empirical_mean(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for x in self.iter() {
            for (a, v) in acc.iter_mut().zip(x) {
                *a += v;
            }
        }
        let n = self.len().max(1) as f64;
        acc.iter().map(|a| a / n).collect()
    }
}

pub(crate) fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Consumes one sample: `level n += level (n−1) ⊗ x` for `n = N, …, 1`.
pub fn push(state: &mut SignatureState, x: &[f64]) -> Result<()> {
    state.check_vector(x)?;
    let dim = state.dim();
    for n in (1..=state.depth()).rev() {
        let (lower, mut writer) = state.level_parts(n);
        for (w, &a) in lower[n - 1].values().iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (i, &xi) in x.iter().enumerate() {
                writer.add(w * dim + i, a * xi);
            }
        }
    }
    state.advance(1.0);
    Ok(())
}

/// Streams a whole series into a fresh state of the given depth.
pub fn signature_of_series(series: &SampleSeries, depth: usize) -> Result<SignatureState> {
    let mut state = SignatureState::identity(series.dim(), depth)?;
    for x in series.iter() {
        push(&mut state, x)?;
    }
    state.check_finite("push")?;
    Ok(state)
}

/// Reference value of `Σ^{w}(n)` by enumerating every strictly increasing
/// index tuple. Cost is `C(n, ν)`; meant for small `n` only.
pub fn brute_force_sum(series: &SampleSeries, word: &Word, n: usize) -> Result<f64> {
    if word.dim() != series.dim() {
        return Err(Error::DimensionMismatch {
            expected: series.dim(),
            actual: word.dim(),
        });
    }
    if n > series.len() {
        return Err(Error::SeriesTooShort {
            requested: n,
            available: series.len(),
        });
    }
    fn rec(series: &SampleSeries, letters: &[usize], start: usize, n: usize) -> f64 {
        match letters.split_first() {
            None => 1.0,
            Some((&letter, rest)) => {
                // leave room for the remaining letters
                let last = n.saturating_sub(rest.len());
                (start..last)
                    .map(|k| series.sample(k)[letter - 1] * rec(series, rest, k + 1, n))
                    .sum()
            }
        }
    }
    Ok(rec(series, word.letters(), 0, n))
}

/// `t^{-ν}` normalization by the number of consumed samples.
pub fn normalized_signature(state: &SignatureState) -> Result<SignatureState> {
    if state.elapsed() < 1.0 {
        return Err(Error::EmptyState);
    }
    scale_levels(state, state.elapsed())
}

/// Ergodic limit of the normalized coordinate: `(∏_j Q_{i_j}) / ν!`.
pub fn theoretical_limit(mean: &[f64], word: &Word) -> f64 {
    let product: f64 = word.letters().iter().map(|&l| mean[l - 1]).product();
    product / factorial(word.degree())
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Right-hand side of Abel's summation by parts,
///
/// ```text
/// Σ_{r<n} (r+1)(a_r − a_{r+1}) σ_r + (n+1) a_n σ_n,   σ_r = (r+1)^{-1} Σ_{q≤r} b_q,
/// ```
///
/// which equals `Σ_r a_r b_r`.
pub fn abel_rhs(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::LengthMismatch { left: 0, right: 1 });
    }
    let n = a.len() - 1;
    let mut prefix = 0.0;
    let mut total = 0.0;
    for r in 0..=n {
        prefix += b[r];
        let sigma = prefix / (r + 1) as f64;
        let weight = if r < n { a[r] - a[r + 1] } else { a[n] };
        total += (r + 1) as f64 * weight * sigma;
    }
    Ok(total)
}

/// Prefix trajectory `Σ^{w}(m)` for `m = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateTrack {
    word: Word,
    values: Vec<f64>,
}

impl CoordinateTrack {
    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of samples covered (`values.len() − 1`).
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every `every`-th prefix value, always keeping the final one.
    pub fn decimated(&self, every: usize) -> Vec<(usize, f64)> {
        let every = every.max(1);
        let mut out: Vec<(usize, f64)> = self
            .values
            .iter()
            .copied()
            .enumerate()
            .step_by(every)
            .collect();
        let last = self.values.len() - 1;
        if out.last().map(|&(m, _)| m) != Some(last) {
            out.push((last, self.values[last]));
        }
        out
    }
}

/// One streaming pass carrying only the prefixes of `w`: `O(ν)` per sample.
pub fn coordinate_track(series: &SampleSeries, word: &Word) -> Result<CoordinateTrack> {
    coordinate_track_from(series.iter(), series.dim(), word, series.len())
}

pub(crate) fn coordinate_track_from<'a>(
    samples: impl Iterator<Item = &'a [f64]>,
    dim: usize,
    word: &Word,
    capacity: usize,
) -> Result<CoordinateTrack> {
    if word.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: word.dim(),
        });
    }
    let letters: Vec<usize> = word.letters().iter().map(|l| l - 1).collect();
    let nu = letters.len();
    // partial[j] = Σ^{i_1…i_j}(m), partial[0] = 1
    let mut partial = vec![0.0; nu + 1];
    partial[0] = 1.0;
    let mut values = Vec::with_capacity(capacity + 1);
    values.push(partial[nu]);
    for x in samples {
        for j in (1..=nu).rev() {
            partial[j] += partial[j - 1] * x[letters[j - 1]];
        }
        values.push(partial[nu]);
    }
    Ok(CoordinateTrack {
        word: word.clone(),
        values,
    })
}
