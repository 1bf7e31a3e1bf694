//! Rate functions for window averages of one coordinate.
//!
//! The cumulant generating function `Λ(λ)` is the log moment generating
//! function for i.i.d. models and the log Perron root of the tilted kernel
//! `P_λ(x, y) = P(x, y)·exp(λ f(y))` for Markov functionals. The rate is its
//! Legendre transform `I(α) = sup_λ (λα − Λ(λ))`, found by solving
//! `Λ'(λ) = α` on the increasing branch `λ > 0`.

use crate::error::{Error, Result};
use crate::processes::{ProcessModel, TransitionMatrix};

const PERRON_TOLERANCE: f64 = 1e-12;
const PERRON_MAX_ITERATIONS: usize = 200_000;
const LAMBDA_CAP: f64 = 500.0;

#[derive(Clone, Debug)]
enum Tilt {
    Iid {
        values: Vec<f64>,
        probabilities: Vec<f64>,
    },
    Markov {
        transition: TransitionMatrix,
        values: Vec<f64>,
    },
}

/// Perron root and the left/right eigenvectors of a primitive matrix.
#[derive(Clone, Debug)]
pub struct PerronPair {
    pub root: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration with Collatz–Wielandt bracketing: stops once
/// `max_x (Av)_x/v_x − min_x (Av)_x/v_x ≤ 1e−12 · root`.
pub fn perron_root(matrix: &[f64], size: usize) -> Result<PerronPair> {
    let (root, right, it_r) = power_iterate(matrix, size, false)?;
    let (_, left, it_l) = power_iterate(matrix, size, true)?;
    Ok(PerronPair {
        root,
        left,
        right,
        iterations: it_r.max(it_l),
    })
}

fn power_iterate(matrix: &[f64], size: usize, transpose: bool) -> Result<(f64, Vec<f64>, usize)> {
    let at = |x: usize, y: usize| {
        if transpose {
            matrix[y * size + x]
        } else {
            matrix[x * size + y]
        }
    };
    let mut v = vec![1.0; size];
    let mut next = vec![0.0; size];
    let mut gap = f64::INFINITY;
    for it in 1..=PERRON_MAX_ITERATIONS {
        for (x, slot) in next.iter_mut().enumerate() {
            *slot = (0..size).map(|y| at(x, y) * v[y]).sum();
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (a, b) in next.iter().zip(&v) {
            let r = a / b;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let scale = next.iter().fold(0.0f64, |m, x| m.max(*x));
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::NonFinite("Perron iteration"));
        }
        for (vx, nx) in v.iter_mut().zip(&next) {
            *vx = nx / scale;
        }
        gap = (hi - lo) / hi;
        // a zero entry in v would make the ratios meaningless; keep iterating
        if lo > 0.0 && gap <= PERRON_TOLERANCE {
            return Ok((0.5 * (hi + lo), v, it));
        }
    }
    Err(Error::NoConvergence {
        what: "Perron power iteration",
        iterations: PERRON_MAX_ITERATIONS,
        residual: gap,
    })
}

/// Rate function of coordinate `i` of a bounded ψ-mixing model.
#[derive(Clone, Debug)]
pub struct RateFunction {
    tilt: Tilt,
    coordinate: usize,
    mean: f64,
    sup: f64,
}

impl RateFunction {
    /// `coordinate` is 0-based.
    pub fn new(model: &ProcessModel, coordinate: usize) -> Result<Self> {
        let sup = model.essential_sup(coordinate)?;
        let mean = model.mean()[coordinate];
        let tilt = match model {
            ProcessModel::Iid(m) => Tilt::Iid {
                values: m.support().iter().map(|x| x[coordinate]).collect(),
                probabilities: m.probabilities().to_vec(),
            },
            ProcessModel::Markov(m) => Tilt::Markov {
                transition: m.transition().clone(),
                values: m.values().iter().map(|x| x[coordinate]).collect(),
            },
            ProcessModel::Rotation(_) => {
                return Err(Error::Unsupported(
                    "rate functions are only available for i.i.d. and Markov models".into(),
                ))
            }
        };
        Ok(Self {
            tilt,
            coordinate,
            mean,
            sup,
        })
    }

    pub fn coordinate(&self) -> usize {
        self.coordinate
    }

    /// Lower end of the domain, the stationary mean `Q_i`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Upper end of the domain, `c⁺_i`.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// `Λ(λ)` and `Λ'(λ)` together.
    pub fn cgf_with_slope(&self, lambda: f64) -> Result<(f64, f64)> {
        match &self.tilt {
            Tilt::Iid {
                values,
                probabilities,
            } => {
                let shift = values
                    .iter()
                    .zip(probabilities)
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(x, _)| lambda * x)
                    .fold(f64::NEG_INFINITY, f64::max);
                let (mut z, mut zx) = (0.0, 0.0);
                for (x, p) in values.iter().zip(probabilities) {
                    if *p > 0.0 {
                        let e = p * (lambda * x - shift).exp();
                        z += e;
                        zx += e * x;
                    }
                }
                Ok((shift + z.ln(), zx / z))
            }
            Tilt::Markov { transition, values } => {
                let m = transition.size();
                // shift exponents so every tilted entry stays ≤ P(x, y)
                let shift = values
                    .iter()
                    .map(|f| lambda * f)
                    .fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = values.iter().map(|f| (lambda * f - shift).exp()).collect();
                let mut tilted = vec![0.0; m * m];
                for x in 0..m {
                    for y in 0..m {
                        tilted[x * m + y] = transition.get(x, y) * weights[y];
                    }
                }
                let pair = perron_root(&tilted, m)?;
                let num: f64 = (0..m)
                    .map(|y| pair.left[y] * values[y] * pair.right[y])
                    .sum();
                let den: f64 = (0..m).map(|y| pair.left[y] * pair.right[y]).sum();
                Ok((shift + pair.root.ln(), num / den))
            }
        }
    }

    pub fn cgf(&self, lambda: f64) -> Result<f64> {
        Ok(self.cgf_with_slope(lambda)?.0)
    }

    pub fn cgf_slope(&self, lambda: f64) -> Result<f64> {
        Ok(self.cgf_with_slope(lambda)?.1)
    }

    fn check_domain(&self, alpha: f64) -> Result<()> {
        if !(alpha > self.mean && alpha < self.sup) {
            return Err(Error::OutOfDomain {
                alpha,
                lower: self.mean,
                upper: self.sup,
            });
        }
        Ok(())
    }

    /// Maximizer `λ*` of `λα − Λ(λ)`, i.e. the root of `Λ'(λ) = α`.
    pub fn optimal_tilt(&self, alpha: f64) -> Result<f64> {
        if alpha == self.mean {
            return Ok(0.0);
        }
        self.check_domain(alpha)?;
        let (mut lo, mut hi) = (0.0, 1.0);
        loop {
            let slope = self.cgf_slope(hi)?;
            if slope >= alpha {
                break;
            }
            if hi >= LAMBDA_CAP {
                return Err(Error::Window(format!(
                    "alpha = {alpha} too close to the upper end {}: Λ'({hi}) = {slope} still below it",
                    self.sup
                )));
            }
            lo = hi;
            hi = (2.0 * hi).min(LAMBDA_CAP);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cgf_slope(mid)? < alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `I(α)` on `[Q_i, c⁺_i)`; exactly 0 at the mean.
    pub fn eval(&self, alpha: f64) -> Result<f64> {
        if alpha == self.mean {
            return Ok(0.0);
        }
        let lambda = self.optimal_tilt(alpha)?;
        Ok(lambda * alpha - self.cgf(lambda)?)
    }
}

/// `Λ(λ)` for coordinate `i` (0-based).
pub fn cgf(model: &ProcessModel, coordinate: usize, lambda: f64) -> Result<f64> {
    RateFunction::new(model, coordinate)?.cgf(lambda)
}

/// `I_i(α)` for coordinate `i` (0-based).
pub fn rate(model: &ProcessModel, coordinate: usize, alpha: f64) -> Result<f64> {
    RateFunction::new(model, coordinate)?.eval(alpha)
}

/// Window length `ℓ_n = ⌊ln n / I(α)⌋`, required to satisfy `1 ≤ ℓ_n < n`.
pub fn window_length(n: usize, rate: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::Window(format!("need n >= 2, got {n}")));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::NonPositive {
            what: "rate I(alpha)",
            value: rate,
        });
    }
    let ell = ((n as f64).ln() / rate).floor() as usize;
    if ell == 0 {
        return Err(Error::Window(format!(
            "window length is 0 for n = {n}, I = {rate}"
        )));
    }
    if ell >= n {
        return Err(Error::Window(format!(
            "window length {ell} exceeds the {n} available samples"
        )));
    }
    Ok(ell)
}
