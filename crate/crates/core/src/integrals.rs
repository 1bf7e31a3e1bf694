//! Iterated integrals of piecewise-constant paths.
//!
//! On a segment where the path is constant `v` for a duration `h`, the
//! signature is exactly `exp(v h)`, so the signature of the whole path is the
//! Chen product of the segment exponentials. No quadrature error is involved.
//!
//! [`riemann_oracle`] evaluates the nested recursion
//! `Σ^{i_1…i_n}(t) = ∫_0^t ξ_{i_n}(s) Σ^{i_1…i_{n−1}}(s) ds` with left sums on a
//! refined grid instead. It misses the diagonal of the simplex, so it converges
//! to the exact value at rate `O(1/refinement)`.

use crate::error::{Error, Result};
use crate::sums::SampleSeries;
use crate::tensor::{accumulate_product, scale_levels, tensor_exp, SignatureState, Word};

/// Path held at `values[j]` on `[j·h, (j+1)·h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathGrid {
    dim: usize,
    step: f64,
    values: Vec<f64>,
}

impl PathGrid {
    pub fn new(dim: usize, step: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        let series = SampleSeries::new(dim, values)?;
        Self::from_series(&series, step)
    }

    pub fn from_series(series: &SampleSeries, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::NonPositive {
                what: "grid step",
                value: step,
            });
        }
        Ok(Self {
            dim: series.dim(),
            step,
            values: series.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn segments(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn duration(&self) -> f64 {
        self.step * self.segments() as f64
    }

    pub fn segment(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }
}

/// Extends the path by a constant segment: `state ← state ⊗ exp(v h)`.
///
/// Updates in place, highest level first, so the compensated accumulator of
/// the state (if enabled) sees one increment per entry.
pub fn push_segment(state: &mut SignatureState, v: &[f64], h: f64) -> Result<()> {
    state.check_vector(v)?;
    let depth = state.depth();
    let exp = tensor_exp(v, h, depth, state.dim())?;
    let mut increment = Vec::new();
    for n in (1..=depth).rev() {
        let (lower, mut writer) = state.level_parts(n);
        increment.clear();
        increment.resize(exp.levels()[n].values().len(), 0.0);
        for (a, level) in lower.iter().enumerate() {
            accumulate_product(&mut increment, level.values(), exp.levels()[n - a].values());
        }
        for (k, &inc) in increment.iter().enumerate() {
            writer.add(k, inc);
        }
    }
    state.advance(h);
    Ok(())
}

pub fn signature_of_path(path: &PathGrid, depth: usize) -> Result<SignatureState> {
    let mut state = SignatureState::identity(path.dim(), depth)?;
    for v in path.iter() {
        push_segment(&mut state, v, path.step())?;
    }
    state.check_finite("push_segment")?;
    Ok(state)
}

/// Left-endpoint evaluation of the nested integral recursion for one word,
/// with every segment split into `refinement` equal sub-steps.
pub fn riemann_oracle(path: &PathGrid, word: &Word, refinement: usize) -> Result<f64> {
    if word.dim() != path.dim() {
        return Err(Error::DimensionMismatch {
            expected: path.dim(),
            actual: word.dim(),
        });
    }
    if refinement == 0 {
        return Err(Error::NonPositive {
            what: "refinement",
            value: 0.0,
        });
    }
    let ds = path.step() / refinement as f64;
    let letters = word.letters();
    let nu = letters.len();
    let mut partial = vec![0.0; nu + 1];
    partial[0] = 1.0;
    for v in path.iter() {
        for _ in 0..refinement {
            for j in (1..=nu).rev() {
                partial[j] += ds * v[letters[j - 1] - 1] * partial[j - 1];
            }
        }
    }
    Ok(partial[nu])
}

/// `T^{-ν}` normalization by the path duration.
pub fn normalized_path_signature(state: &SignatureState, duration: f64) -> Result<SignatureState> {
    scale_levels(state, duration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sums::factorial;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(letters: &[usize], d: usize) -> Word {
        Word::new(letters.to_vec(), d).unwrap()
    }

    fn random_path(rng: &mut ChaCha8Rng, dim: usize, segments: usize) -> PathGrid {
        let step = rng.random_range(0.05..0.5);
        let values = (0..segments)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        PathGrid::new(dim, step, values).unwrap()
    }

    #[test]
    fn single_segment_is_exponential() {
        let v = [0.4, -1.1];
        let t = 1.7;
        let mut state = SignatureState::identity(2, 4).unwrap();
        push_segment(&mut state, &v, t).unwrap();
        let exact = tensor_exp(&v, t, 4, 2).unwrap();
        assert!(state.max_abs_diff(&exact).unwrap() <= 1e-15);
        assert_eq!(state.elapsed(), t);
    }

    #[test]
    fn two_scalar_segments() {
        let (a, b, h) = (0.8, -0.3, 0.6);
        let path = PathGrid::new(1, h, vec![vec![a], vec![b]]).unwrap();
        let state = signature_of_path(&path, 2).unwrap();
        assert_abs_diff_eq!(
            state.level(2).unwrap().values()[0],
            ((a + b) * h).powi(2) / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_segments_change_nothing() {
        let mut state = tensor_exp(&[0.3, 0.2], 1.0, 3, 2).unwrap();
        let before = state.clone();
        push_segment(&mut state, &[0.0, 0.0], 2.0).unwrap();
        assert_eq!(state.levels(), before.levels());
        assert!(push_segment(&mut state, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn riemann_degree_one_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let path = random_path(&mut rng, 2, 9);
        let exact: f64 = path.iter().map(|v| v[1]).sum::<f64>() * path.step();
        assert_abs_diff_eq!(
            riemann_oracle(&path, &w(&[2], 2), 1).unwrap(),
            exact,
            epsilon = 1e-14
        );
    }

    #[test]
    fn riemann_constant_triangle() {
        let path = PathGrid::new(1, 1.0, vec![vec![1.0]]).unwrap();
        for r in [1usize, 2, 5, 10, 100, 1000] {
            let got = riemann_oracle(&path, &w(&[1, 1], 1), r).unwrap();
            let rf = r as f64;
            assert_abs_diff_eq!(got, (rf - 1.0) / (2.0 * rf), epsilon = 1e-12);
        }
    }

    #[test]
    fn riemann_error_halves_under_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut ratios = Vec::new();
        for _ in 0..20 {
            let path = random_path(&mut rng, 2, 8);
            let word = w(&[1, 2, 1], 2);
            let exact = signature_of_path(&path, 3)
                .unwrap()
                .coefficient(&word)
                .unwrap();
            let e1 = (riemann_oracle(&path, &word, 64).unwrap() - exact).abs();
            let e2 = (riemann_oracle(&path, &word, 128).unwrap() - exact).abs();
            ratios.push(e1 / e2);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(mean >= 1.8, "mean error ratio {mean}");
    }

    #[test]
    fn normalized_constant_path() {
        let v = [0.5, -2.0];
        for t in [0.5, 1.0, 40.0] {
            let state = tensor_exp(&v, t, 3, 2).unwrap();
            let norm = normalized_path_signature(&state, t).unwrap();
            let unit = tensor_exp(&v, 1.0, 3, 2).unwrap();
            assert!(norm.max_abs_diff(&unit).unwrap() <= 1e-12);
        }
        let state = tensor_exp(&v, 2.0, 3, 2).unwrap();
        assert_eq!(
            normalized_path_signature(&state, 1.0).unwrap().levels(),
            state.levels()
        );
        assert!(normalized_path_signature(&state, -1.0).is_err());
    }

    #[test]
    fn alternating_path_normalizes_to_zero() {
        let mut last = f64::INFINITY;
        for segments in [10usize, 100, 1000, 10000] {
            let values = (0..segments)
                .map(|j| vec![if j % 2 == 0 { 1.0 } else { -1.0 }])
                .collect();
            let path = PathGrid::new(1, 1.0, values).unwrap();
            let state = signature_of_path(&path, 2).unwrap();
            let norm = normalized_path_signature(&state, path.duration()).unwrap();
            let l1 = norm.level(1).unwrap().values()[0];
            let l2 = norm.level(2).unwrap().values()[0];
            assert_abs_diff_eq!(l2, l1 * l1 / 2.0, epsilon = 1e-15);
            assert!(l2.abs() <= last);
            last = l2.abs();
        }
        assert!(last < 1e-8);
    }

    proptest! {
        #[test]
        fn scalar_levels_are_powers(values in prop::collection::vec(-1.0f64..1.0, 1..30), step in 0.01f64..1.0) {
            let path = PathGrid::new(1, step, values.into_iter().map(|v| vec![v]).collect()).unwrap();
            let state = signature_of_path(&path, 5).unwrap();
            let x = state.level(1).unwrap().values()[0];
            // rounding scales with the total variation, not with |x| after cancellation
            let mass: f64 = path.iter().map(|v| v[0].abs()).sum::<f64>() * step;
            for n in 2..=5 {
                let want = x.powi(n as i32) / factorial(n);
                let scale = want.abs().max(mass.powi(n as i32) / factorial(n));
                let got = state.level(n).unwrap().values()[0];
                prop_assert!((got - want).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn time_additivity(seed in 0u64..500, split in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let path = random_path(&mut rng, 3, 12);
            let whole = signature_of_path(&path, 4).unwrap();
            let mut head = SignatureState::identity(3, 4).unwrap();
            let mut tail = SignatureState::identity(3, 4).unwrap();
            for (j, v) in path.iter().enumerate() {
                let target = if j < split { &mut head } else { &mut tail };
                push_segment(target, v, path.step()).unwrap();
            }
            let joined = crate::tensor::chen_concat(&head, &tail).unwrap();
            prop_assert!(joined.max_abs_diff(&whole).unwrap() <= 1e-12);
            prop_assert!((joined.elapsed() - whole.elapsed()).abs() <= 1e-12);
        }

        #[test]
        fn shuffle_without_diagonal(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let path = random_path(&mut rng, 3, 10);
            let state = signature_of_path(&path, 2).unwrap();
            for i in 1..=3 {
                for j in 1..=3 {
                    let lhs = state.coefficient(&w(&[i], 3)).unwrap() * state.coefficient(&w(&[j], 3)).unwrap();
                    let rhs = state.coefficient(&w(&[i, j], 3)).unwrap() + state.coefficient(&w(&[j, i], 3)).unwrap();
                    prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
                }
            }
        }

        #[test]
        fn riemann_error_is_first_order(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = rng.random_range(1..=3);
            let segments = rng.random_range(1..=16);
            let path = random_path(&mut rng, dim, segments);
            let nu = rng.random_range(1..=4);
            let word = Word::new((0..nu).map(|_| rng.random_range(1..=dim)).collect(), dim).unwrap();
            let exact = signature_of_path(&path, 4).unwrap().coefficient(&word).unwrap();
            // r·|error| stays bounded as r grows
            let k: Vec<f64> = [8usize, 32, 128]
                .iter()
                .map(|&r| r as f64 * (riemann_oracle(&path, &word, r).unwrap() - exact).abs())
                .collect();
            let bound = 4.0 * k[0].max(k[1]) + 1e-9;
            prop_assert!(k.iter().all(|x| x.is_finite()) && k[2] <= bound, "{k:?}");
        }
    }
}
