//! Dense truncated tensor algebra over `R^d`.
//!
//! A [`SignatureState`] holds one dense [`LevelTensor`] per degree `0..=depth`.
//! Level `n` has `d^n` entries, indexed by words `i_1 … i_n` flattened in
//! lexicographic (row-major) order. Letters are 1-based in the public
//! [`Word`] API and 0-based in storage.
//!
//! The algebra supplies what both streaming engines need:
//!
//! ```text
//! outer append     (T ⊗ v)[w·i]   = T[w] v_i
//! Chen product     (S ⊗ E)_n      = Σ_{a+b=n} S_a ⊗ E_b
//! exponential      exp(v h)_n     = (v h)^{⊗n} / n!
//! normalization    level n        ↦ t^{-n} · level n
//! ```

use std::fmt;

use crate::error::{Error, Result};

/// A multi-index `(i_1, …, i_n)` with `1 <= i_j <= d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<usize>,
    dim: usize,
}

impl Word {
    pub fn new(letters: Vec<usize>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        for (position, &letter) in letters.iter().enumerate() {
            if letter == 0 || letter > dim {
                return Err(Error::InvalidWord {
                    letter,
                    position,
                    dim,
                });
            }
        }
        Ok(Self { letters, dim })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            letters: Vec::new(),
            dim,
        }
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.letters.len()
    }

    /// Offset of this word inside its level: `Σ_j (i_j − 1)·d^{n−j}`.
    pub fn flatten(&self) -> usize {
        self.letters
            .iter()
            .fold(0, |acc, &letter| acc * self.dim + (letter - 1))
    }

    /// Inverse of [`Word::flatten`] for a word of the given degree.
    pub fn unflatten(offset: usize, degree: usize, dim: usize) -> Result<Self> {
        let size = level_len(dim, degree);
        if dim == 0 || offset >= size {
            return Err(Error::InvalidWord {
                letter: offset,
                position: 0,
                dim,
            });
        }
        let mut letters = vec![0; degree];
        let mut rest = offset;
        for slot in letters.iter_mut().rev() {
            *slot = rest % dim + 1;
            rest /= dim;
        }
        Ok(Self { letters, dim })
    }

    /// The word without its last letter.
    pub fn prefix(&self) -> Option<Word> {
        let (_, head) = self.letters.split_last()?;
        Some(Word {
            letters: head.to_vec(),
            dim: self.dim,
        })
    }

    /// Short tag used in file names, e.g. `1-2-2`.
    pub fn tag(&self) -> String {
        if self.letters.is_empty() {
            return "empty".to_string();
        }
        self.letters
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, letter) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{letter}")?;
        }
        write!(f, ")")
    }
}

pub fn flatten_index(word: &Word) -> usize {
    word.flatten()
}

pub(crate) fn level_len(dim: usize, degree: usize) -> usize {
    dim.pow(degree as u32)
}

/// The homogeneous degree-`n` part of a tensor-algebra element.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelTensor {
    degree: usize,
    dim: usize,
    values: Vec<f64>,
}

impl LevelTensor {
    pub fn zeros(degree: usize, dim: usize) -> Self {
        Self {
            degree,
            dim,
            values: vec![0.0; level_len(dim, degree)],
        }
    }

    pub fn from_values(degree: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        let expected = level_len(dim, degree);
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                left: expected,
                right: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LevelTensor::from_values"));
        }
        Ok(Self {
            degree,
            dim,
            values,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, word: &Word) -> Result<f64> {
        if word.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: word.dim(),
            });
        }
        if word.degree() != self.degree {
            return Err(Error::LengthMismatch {
                left: self.degree,
                right: word.degree(),
            });
        }
        Ok(self.values[word.flatten()])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            degree: self.degree,
            dim: self.dim,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Appends one letter: `result[w·i] = T[w]·v_i`.
pub fn outer_append(tensor: &LevelTensor, v: &[f64]) -> Result<LevelTensor> {
    if v.len() != tensor.dim {
        return Err(Error::DimensionMismatch {
            expected: tensor.dim,
            actual: v.len(),
        });
    }
    let values = tensor
        .values
        .iter()
        .flat_map(|&t| v.iter().map(move |&x| t * x))
        .collect();
    Ok(LevelTensor {
        degree: tensor.degree + 1,
        dim: tensor.dim,
        values,
    })
}

/// Adds `left ⊗ right` into `out`, where `out` has degree `left.degree + right.degree`.
pub(crate) fn accumulate_product(out: &mut [f64], left: &[f64], right: &[f64]) {
    let stride = right.len();
    for (u, &a) in left.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let block = &mut out[u * stride..(u + 1) * stride];
        for (slot, &b) in block.iter_mut().zip(right) {
            *slot += a * b;
        }
    }
}

/// Accumulates increments into one level, Kahan-compensated when the owning
/// state has compensation enabled.
pub(crate) struct LevelWriter<'a> {
    values: &'a mut [f64],
    comp: Option<&'a mut [f64]>,
}

impl LevelWriter<'_> {
    #[inline]
    pub(crate) fn add(&mut self, index: usize, increment: f64) {
        let slot = &mut self.values[index];
        match self.comp.as_deref_mut() {
            Some(comp) => {
                let c = &mut comp[index];
                let y = increment - *c;
                let t = *slot + y;
                *c = (t - *slot) - y;
                *slot = t;
            }
            None => *slot += increment,
        }
    }
}

/// Element of the truncated tensor algebra `⊕_{n=0}^{N} (R^d)^{⊗n}`.
///
/// `elapsed` is the number of samples consumed (discrete engine) or the total
/// path duration (continuous engine).
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureState {
    dim: usize,
    depth: usize,
    levels: Vec<LevelTensor>,
    elapsed: f64,
    compensation: Option<Vec<Vec<f64>>>,
}

impl SignatureState {
    /// The unit element: level 0 is 1, all higher levels vanish.
    pub fn identity(dim: usize, depth: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::NonPositive {
                what: "dimension",
                value: 0.0,
            });
        }
        if depth == 0 {
            return Err(Error::NonPositive {
                what: "truncation depth",
                value: 0.0,
            });
        }
        let mut levels: Vec<LevelTensor> =
            (0..=depth).map(|n| LevelTensor::zeros(n, dim)).collect();
        levels[0].values[0] = 1.0;
        Ok(Self {
            dim,
            depth,
            levels,
            elapsed: 0.0,
            compensation: None,
        })
    }

    /// Switches on Kahan-compensated accumulation for streaming updates.
    pub fn with_compensation(mut self, enabled: bool) -> Self {
        self.compensation = enabled.then(|| {
            self.levels
                .iter()
                .map(|l| vec![0.0; l.values.len()])
                .collect()
        });
        self
    }

    pub fn from_levels(levels: Vec<LevelTensor>, elapsed: f64) -> Result<Self> {
        let depth = levels
            .len()
            .checked_sub(1)
            .filter(|&d| d >= 1)
            .ok_or(Error::NonPositive {
                what: "truncation depth",
                value: 0.0,
            })?;
        let dim = levels[0].dim;
        for (n, level) in levels.iter().enumerate() {
            if level.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: level.dim,
                });
            }
            if level.degree != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: level.degree,
                });
            }
        }
        if levels[0].values[0] != 1.0 {
            return Err(Error::InvalidModel("level 0 must equal 1".into()));
        }
        Ok(Self {
            dim,
            depth,
            levels,
            elapsed,
            compensation: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    pub fn is_compensated(&self) -> bool {
        self.compensation.is_some()
    }

    pub fn levels(&self) -> &[LevelTensor] {
        &self.levels
    }

    pub fn level(&self, degree: usize) -> Result<&LevelTensor> {
        self.levels.get(degree).ok_or(Error::LevelOutOfRange {
            requested: degree,
            depth: self.depth,
        })
    }

    pub fn coefficient(&self, word: &Word) -> Result<f64> {
        self.level(word.degree())?.get(word)
    }

    /// `coefficient(word) / t^{degree}`, the same arithmetic as [`scale_levels`].
    pub fn normalized_coefficient(&self, word: &Word, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::NonPositive {
                what: "scale",
                value: t,
            });
        }
        Ok(self.coefficient(word)? / t.powi(word.degree() as i32))
    }

    pub(crate) fn check_vector(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// Shared view of levels `0..n` together with a writer into level `n`.
    pub(crate) fn level_parts(&mut self, n: usize) -> (&[LevelTensor], LevelWriter<'_>) {
        let (lower, upper) = self.levels.split_at_mut(n);
        let comp = self.compensation.as_mut().map(|c| c[n].as_mut_slice());
        (
            lower,
            LevelWriter {
                values: &mut upper[0].values,
                comp,
            },
        )
    }

    pub(crate) fn advance(&mut self, by: f64) {
        self.elapsed += by;
    }

    pub(crate) fn check_finite(&self, what: &'static str) -> Result<()> {
        if self
            .levels
            .iter()
            .all(|l| l.values.iter().all(|v| v.is_finite()))
        {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        if self.depth != other.depth {
            return Err(Error::DepthMismatch {
                left: self.depth,
                right: other.depth,
            });
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .levels
            .iter()
            .zip(&other.levels)
            .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }
}

/// Tensor concatenation product truncated at the common depth.
pub fn chen_concat(left: &SignatureState, right: &SignatureState) -> Result<SignatureState> {
    left.check_compatible(right)?;
    let mut levels = Vec::with_capacity(left.depth + 1);
    for n in 0..=left.depth {
        let mut out = LevelTensor::zeros(n, left.dim);
        for a in 0..=n {
            accumulate_product(
                &mut out.values,
                &left.levels[a].values,
                &right.levels[n - a].values,
            );
        }
        levels.push(out);
    }
    let state = SignatureState {
        dim: left.dim,
        depth: left.depth,
        levels,
        elapsed: left.elapsed + right.elapsed,
        compensation: None,
    };
    state.check_finite("chen_concat")?;
    Ok(state)
}

/// Signature of the constant path `v` over a segment of length `h`.
pub fn tensor_exp(v: &[f64], h: f64, depth: usize, dim: usize) -> Result<SignatureState> {
    if !(h > 0.0) {
        return Err(Error::NonPositive {
            what: "segment duration",
            value: h,
        });
    }
    let mut state = SignatureState::identity(dim, depth)?;
    state.check_vector(v)?;
    let step: Vec<f64> = v.iter().map(|x| x * h).collect();
    for n in 1..=depth {
        let next = outer_append(&state.levels[n - 1], &step)?.scaled(1.0 / n as f64);
        state.levels[n] = next;
    }
    state.elapsed = h;
    state.check_finite("tensor_exp")?;
    Ok(state)
}

/// Multiplies level `n` by `t^{-n}`; `elapsed` is left untouched.
pub fn scale_levels(state: &SignatureState, t: f64) -> Result<SignatureState> {
    if !(t > 0.0) {
        return Err(Error::NonPositive {
            what: "scale",
            value: t,
        });
    }
    let mut out = state.clone();
    out.compensation = None;
    for (n, level) in out.levels.iter_mut().enumerate().skip(1) {
        let denom = t.powi(n as i32);
        for v in &mut level.values {
            *v /= denom;
        }
    }
    out.check_finite("scale_levels")?;
    Ok(out)
}
