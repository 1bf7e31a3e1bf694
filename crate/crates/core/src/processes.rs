//! Stationary generators with exactly known mean, bound and essential sup.
//!
//! Three kinds are supported:
//!
//! * i.i.d. draws from a finite support,
//! * functionals `f(X_k)` of a finite irreducible aperiodic Markov chain
//!   started from its stationary distribution,
//! * the irrational rotation `x ↦ x + α mod 1` observed through a finite
//!   trigonometric polynomial (deterministic, uniquely ergodic).
//!
//! Sampling uses ChaCha8 with the seed as key and a caller-chosen stream
//! number, so replications get independent, reproducible streams.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sums::{sup_norm, SampleSeries};

const STOCHASTIC_TOLERANCE: f64 = 1e-12;
const STATIONARY_RESIDUAL: f64 = 1e-12;
const DIRECT_SOLVE_MAX_STATES: usize = 64;
const RATIONAL_DENOMINATOR_CAP: u64 = 10_000;
const RATIONAL_TOLERANCE: f64 = 1e-9;

/// `(√5 − 1)/2`, the default rotation number.
pub const GOLDEN_FREQUENCY: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcessKind {
    Iid,
    MarkovFunctional,
    Rotation,
}

/// Row-stochastic matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::InvalidModel("empty transition matrix".into()));
        }
        let mut entries = Vec::with_capacity(size * size);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidModel(format!(
                    "row {x} has {} entries, expected {size}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidModel(format!(
                    "row {x} has a negative or non-finite entry"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(Error::InvalidModel(format!(
                    "row {x} sums to {total}, not 1"
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.size + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.size..(x + 1) * self.size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|x| self.row(x).to_vec()).collect()
    }

    pub fn support_graph(&self) -> SupportGraph {
        SupportGraph {
            adjacency: (0..self.size)
                .map(|x| (0..self.size).filter(|&y| self.get(x, y) > 0.0).collect())
                .collect(),
        }
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.size, self.size, &self.entries)
    }

    /// `P^n` by repeated squaring.
    pub fn power(&self, n: u32) -> DMatrix<f64> {
        let mut result = DMatrix::identity(self.size, self.size);
        let mut base = self.to_matrix();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }
}

/// Directed graph on `0..n` given by adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportGraph {
    adjacency: Vec<Vec<usize>>,
}

impl SupportGraph {
    pub fn new(adjacency: Vec<Vec<usize>>) -> Result<Self> {
        let n = adjacency.len();
        if adjacency.iter().flatten().any(|&y| y >= n) {
            return Err(Error::InvalidModel("edge target out of range".into()));
        }
        Ok(Self { adjacency })
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn successors(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    fn reaches_all(&self, adjacency: &[Vec<usize>]) -> bool {
        let n = adjacency.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.adjacency.is_empty() {
            return false;
        }
        let mut reverse = vec![Vec::new(); self.len()];
        for (x, ys) in self.adjacency.iter().enumerate() {
            for &y in ys {
                reverse[y].push(x);
            }
        }
        self.reaches_all(&self.adjacency) && self.reaches_all(&reverse)
    }

    /// Period of a strongly connected graph: gcd over edges of `level(x) + 1 − level(y)`
    /// for BFS levels from node 0.
    pub fn period(&self) -> Result<usize> {
        if !self.is_strongly_connected() {
            return Err(Error::Reducible);
        }
        let mut level = vec![usize::MAX; self.len()];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0]);
        while let Some(x) = queue.pop_front() {
            for &y in &self.adjacency[x] {
                if level[y] == usize::MAX {
                    level[y] = level[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        let mut g = 0usize;
        for (x, ys) in self.adjacency.iter().enumerate() {
            for &y in ys {
                let diff = (level[x] + 1).abs_diff(level[y]);
                g = gcd(g, diff);
            }
        }
        Ok(g)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `g(x) = c + Σ_m a_m cos(2π m x) + b_m sin(2π m x)`, `m = 1, 2, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigObservable {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigObservable {
    pub fn eval(&self, x: f64) -> f64 {
        let tau = std::f64::consts::TAU;
        let mut acc = self.constant;
        for (m, a) in self.cos.iter().enumerate() {
            acc += a * (tau * (m + 1) as f64 * x).cos();
        }
        for (m, b) in self.sin.iter().enumerate() {
            acc += b * (tau * (m + 1) as f64 * x).sin();
        }
        acc
    }

    /// Sup-norm bound by the sum of absolute coefficients.
    pub fn bound(&self) -> f64 {
        self.constant.abs()
            + self.cos.iter().map(|a| a.abs()).sum::<f64>()
            + self.sin.iter().map(|b| b.abs()).sum::<f64>()
    }

    fn is_finite(&self) -> bool {
        self.constant.is_finite()
            && self.cos.iter().all(|a| a.is_finite())
            && self.sin.iter().all(|b| b.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IidModel {
    dim: usize,
    support: Vec<Vec<f64>>,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovModel {
    dim: usize,
    transition: TransitionMatrix,
    values: Vec<Vec<f64>>,
    stationary: Vec<f64>,
    stationary_cumulative: Vec<f64>,
    row_cumulative: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationModel {
    frequency: f64,
    start: f64,
    observables: Vec<TrigObservable>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProcessModel {
    Iid(IidModel),
    Markov(MarkovModel),
    Rotation(RotationModel),
}

fn cumulative(probabilities: &[f64]) -> Vec<f64> {
    probabilities
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// Index drawn from cumulative weights, never landing on a zero-weight entry.
fn draw(cumulative: &[f64], u: f64) -> usize {
    let k = cumulative.partition_point(|&c| c <= u);
    if k < cumulative.len() {
        return k;
    }
    // u beyond the rounded total: take the last entry with positive weight
    (0..cumulative.len())
        .rev()
        .find(|&j| cumulative[j] > if j == 0 { 0.0 } else { cumulative[j - 1] })
        .unwrap_or(cumulative.len() - 1)
}

fn check_values(dim: usize, values: &[Vec<f64>], what: &str) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidModel("dimension must be at least 1".into()));
    }
    for (k, v) in values.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::InvalidModel(format!(
                "{what} {k} has dimension {}, expected {dim}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel(format!("{what} {k} is not finite")));
        }
    }
    Ok(())
}

impl ProcessModel {
    pub fn iid(support: Vec<Vec<f64>>, probabilities: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probabilities.len() {
            return Err(Error::InvalidModel(format!(
                "{} support points but {} probabilities",
                support.len(),
                probabilities.len()
            )));
        }
        let dim = support[0].len();
        check_values(dim, &support, "support point")?;
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidModel("negative probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::InvalidModel(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self::Iid(IidModel {
            dim,
            cumulative: cumulative(&probabilities),
            support,
            probabilities,
        }))
    }

    /// The degenerate model `ξ(k) ≡ value`.
    pub fn constant(value: Vec<f64>) -> Result<Self> {
        Self::iid(vec![value], vec![1.0])
    }

    pub fn markov(transition: TransitionMatrix, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != transition.size() {
            return Err(Error::InvalidModel(format!(
                "{} states but {} value vectors",
                transition.size(),
                values.len()
            )));
        }
        let dim = values[0].len();
        check_values(dim, &values, "state value")?;
        let period = transition.support_graph().period()?;
        if period != 1 {
            return Err(Error::Periodic(period));
        }
        let stationary = stationary_distribution(&transition)?;
        let row_cumulative = (0..transition.size())
            .map(|x| cumulative(transition.row(x)))
            .collect();
        Ok(Self::Markov(MarkovModel {
            dim,
            stationary_cumulative: cumulative(&stationary),
            stationary,
            row_cumulative,
            transition,
            values,
        }))
    }

    pub fn rotation(frequency: f64, start: f64, observables: Vec<TrigObservable>) -> Result<Self> {
        if observables.is_empty() {
            return Err(Error::InvalidModel(
                "rotation needs at least one observable".into(),
            ));
        }
        if !frequency.is_finite() || !start.is_finite() {
            return Err(Error::InvalidModel("non-finite rotation parameters".into()));
        }
        if !(0.0..1.0).contains(&start) {
            return Err(Error::InvalidModel(format!("start {start} outside [0, 1)")));
        }
        if observables.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidModel(
                "non-finite observable coefficient".into(),
            ));
        }
        let frequency = frequency.rem_euclid(1.0);
        if let Some(q) = rational_denominator(frequency) {
            return Err(Error::InvalidModel(format!(
                "rotation frequency {frequency} is rational (denominator {q})"
            )));
        }
        Ok(Self::Rotation(RotationModel {
            frequency,
            start,
            observables,
        }))
    }

    pub fn kind(&self) -> ProcessKind {
        match self {
            Self::Iid(_) => ProcessKind::Iid,
            Self::Markov(_) => ProcessKind::MarkovFunctional,
            Self::Rotation(_) => ProcessKind::Rotation,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Iid(m) => m.dim,
            Self::Markov(m) => m.dim,
            Self::Rotation(m) => m.observables.len(),
        }
    }

    /// Exact stationary mean `Q`.
    pub fn mean(&self) -> Vec<f64> {
        match self {
            Self::Iid(m) => weighted_mean(m.dim, &m.support, &m.probabilities),
            Self::Markov(m) => weighted_mean(m.dim, &m.values, &m.stationary),
            Self::Rotation(m) => m.observables.iter().map(|g| g.constant).collect(),
        }
    }

    /// Sup-norm bound `C` on every sample.
    pub fn bound(&self) -> f64 {
        match self {
            Self::Iid(m) => m
                .support
                .iter()
                .zip(&m.probabilities)
                .filter(|(_, &p)| p > 0.0)
                .map(|(x, _)| sup_norm(x))
                .fold(0.0, f64::max),
            Self::Markov(m) => m.values.iter().map(|v| sup_norm(v)).fold(0.0, f64::max),
            Self::Rotation(m) => m.observables.iter().map(|g| g.bound()).fold(0.0, f64::max),
        }
    }

    /// `c⁺_i`, the essential sup of long-run averages of coordinate `i` (0-based).
    ///
    /// Support maximum for i.i.d., maximum cycle mean of the value graph for
    /// Markov functionals, and `Q_i` for the uniquely ergodic rotation.
    pub fn essential_sup(&self, coordinate: usize) -> Result<f64> {
        if coordinate >= self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: coordinate + 1,
            });
        }
        match self {
            Self::Iid(m) => Ok(m
                .support
                .iter()
                .zip(&m.probabilities)
                .filter(|(_, &p)| p > 0.0)
                .map(|(x, _)| x[coordinate])
                .fold(f64::NEG_INFINITY, f64::max)),
            Self::Markov(m) => {
                let f: Vec<f64> = m.values.iter().map(|v| v[coordinate]).collect();
                max_mean_cycle(&m.transition, &f)
            }
            Self::Rotation(m) => Ok(m.observables[coordinate].constant),
        }
    }

    pub fn as_iid(&self) -> Option<&IidModel> {
        match self {
            Self::Iid(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_markov(&self) -> Option<&MarkovModel> {
        match self {
            Self::Markov(m) => Some(m),
            _ => None,
        }
    }

    /// Sample stream `stream` of the generator keyed by `seed`.
    pub fn sampler(&self, seed: u64, stream: u64) -> Sampler<'_> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let state = match self {
            Self::Markov(m) => draw(&m.stationary_cumulative, rng.random::<f64>()),
            _ => 0,
        };
        Sampler {
            model: self,
            rng,
            state,
            step: 0,
        }
    }
}

impl IidModel {
    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

impl MarkovModel {
    pub fn transition(&self) -> &TransitionMatrix {
        &self.transition
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }
}

impl RotationModel {
    pub fn frequency(&self) -> f64 {
        self.frequency
    }
}

fn weighted_mean(dim: usize, points: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; dim];
    for (x, w) in points.iter().zip(weights) {
        for (qi, xi) in q.iter_mut().zip(x) {
            *qi += w * xi;
        }
    }
    q
}

/// Smallest `q <= 10^4` with `q·α` within `1e-9` of an integer.
fn rational_denominator(alpha: f64) -> Option<u64> {
    (1..=RATIONAL_DENOMINATOR_CAP).find(|&q| {
        let t = q as f64 * alpha;
        (t - t.round()).abs() < RATIONAL_TOLERANCE
    })
}

/// Reproducible stream of samples from a [`ProcessModel`].
pub struct Sampler<'a> {
    model: &'a ProcessModel,
    rng: ChaCha8Rng,
    state: usize,
    step: u64,
}

impl Sampler<'_> {
    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Writes the next sample into `out` (length `d`).
    pub fn fill_next(&mut self, out: &mut [f64]) {
        match self.model {
            ProcessModel::Iid(m) => {
                let k = draw(&m.cumulative, self.rng.random::<f64>());
                out.copy_from_slice(&m.support[k]);
            }
            ProcessModel::Markov(m) => {
                out.copy_from_slice(&m.values[self.state]);
                self.state = draw(&m.row_cumulative[self.state], self.rng.random::<f64>());
            }
            ProcessModel::Rotation(m) => {
                let x = (m.start + self.step as f64 * m.frequency).rem_euclid(1.0);
                for (o, g) in out.iter_mut().zip(&m.observables) {
                    *o = g.eval(x);
                }
            }
        }
        self.step += 1;
    }
}

impl Iterator for Sampler<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.fill_next(&mut out);
        Some(out)
    }
}

/// `n` samples of stream 0, with the exact mean and bound attached.
pub fn generate(model: &ProcessModel, n: usize, seed: u64) -> Result<SampleSeries> {
    generate_stream(model, n, seed, 0)
}

pub fn generate_stream(
    model: &ProcessModel,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<SampleSeries> {
    if n == 0 {
        return Err(Error::NonPositive {
            what: "series length",
            value: 0.0,
        });
    }
    let dim = model.dim();
    let mut flat = vec![0.0; n * dim];
    let mut sampler = model.sampler(seed, stream);
    for chunk in flat.chunks_exact_mut(dim) {
        sampler.fill_next(chunk);
    }
    SampleSeries::from_flat(dim, flat)?
        .with_mean(model.mean())?
        .with_bound(model.bound() * (1.0 + 1e-12))
}

/// Stationary distribution `π P = π`, `Σ π = 1`, `π > 0`.
///
/// Direct LU solve up to 64 states, power iteration on the lazy chain above.
pub fn stationary_distribution(transition: &TransitionMatrix) -> Result<Vec<f64>> {
    if !transition.support_graph().is_strongly_connected() {
        return Err(Error::Reducible);
    }
    let m = transition.size();
    let mut pi = if m <= DIRECT_SOLVE_MAX_STATES {
        solve_stationary(transition)?
    } else {
        power_stationary(transition)?
    };
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    if let Some(x) = pi.iter().position(|&p| !(p > 0.0)) {
        return Err(Error::ZeroMass(x));
    }
    let residual = stationary_residual(transition, &pi);
    if residual > STATIONARY_RESIDUAL {
        return Err(Error::NoConvergence {
            what: "stationary distribution",
            iterations: 0,
            residual,
        });
    }
    Ok(pi)
}

/// `|π P − π|_1`.
pub fn stationary_residual(transition: &TransitionMatrix, pi: &[f64]) -> f64 {
    let m = transition.size();
    (0..m)
        .map(|y| {
            let flow: f64 = (0..m).map(|x| pi[x] * transition.get(x, y)).sum();
            (flow - pi[y]).abs()
        })
        .sum()
}

fn solve_stationary(transition: &TransitionMatrix) -> Result<Vec<f64>> {
    let m = transition.size();
    // (Pᵀ − I) π = 0 with the last equation replaced by Σ π = 1
    let mut a = transition.to_matrix().transpose() - DMatrix::identity(m, m);
    for y in 0..m {
        a[(m - 1, y)] = 1.0;
    }
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    let lu = a.clone().lu();
    let mut pi = lu.solve(&b).ok_or(Error::Reducible)?;
    // one step of iterative refinement
    let r = &b - &a * &pi;
    if let Some(delta) = lu.solve(&r) {
        pi += delta;
    }
    Ok(pi.iter().copied().collect())
}

fn power_stationary(transition: &TransitionMatrix) -> Result<Vec<f64>> {
    let m = transition.size();
    let cap = 1_000_000;
    let mut pi = vec![1.0 / m as f64; m];
    let mut residual = f64::INFINITY;
    for _ in 0..cap {
        // lazy chain (P + I)/2 shares π and is aperiodic
        let mut next: Vec<f64> = pi.iter().map(|p| 0.5 * p).collect();
        for x in 0..m {
            let px = 0.5 * pi[x];
            for (y, n) in next.iter_mut().enumerate() {
                *n += px * transition.get(x, y);
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|p| *p /= total);
        pi = next;
        residual = stationary_residual(transition, &pi);
        if residual <= 0.1 * STATIONARY_RESIDUAL {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence {
        what: "stationary power iteration",
        iterations: cap,
        residual,
    })
}

/// `ψ̄(n) = max_{x,y} |P^n(x,y)/π(y) − 1|`, a computable upper-bound surrogate
/// for the ψ-mixing coefficient at lag `n`.
pub fn psi_bound(transition: &TransitionMatrix, n: u32) -> Result<f64> {
    let pi = stationary_distribution(transition)?;
    psi_bound_with(transition, &pi, n)
}

fn psi_bound_with(transition: &TransitionMatrix, pi: &[f64], n: u32) -> Result<f64> {
    if let Some(y) = pi.iter().position(|&p| p <= 0.0) {
        return Err(Error::ZeroMass(y));
    }
    let pn = transition.power(n);
    let m = transition.size();
    let mut worst = 0.0f64;
    for x in 0..m {
        for y in 0..m {
            worst = worst.max((pn[(x, y)] / pi[y] - 1.0).abs());
        }
    }
    Ok(worst)
}

/// ψ̄ over a set of lags with a fitted exponential decay `ψ̄(n) ≈ exp(c − Λ n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingDiagnostic {
    pub lags: Vec<u32>,
    pub bounds: Vec<f64>,
    /// Fitted `Λ̂`; `None` when fewer than two lags lie above the round-off floor.
    pub decay_rate: Option<f64>,
    pub intercept: Option<f64>,
}

/// Values of ψ̄ below this are treated as round-off and excluded from the fit.
const PSI_FLOOR: f64 = 1e-11;

impl MixingDiagnostic {
    pub fn compute(transition: &TransitionMatrix, lags: &[u32]) -> Result<Self> {
        let period = transition.support_graph().period()?;
        if period != 1 {
            return Err(Error::Periodic(period));
        }
        let pi = stationary_distribution(transition)?;
        let bounds = lags
            .iter()
            .map(|&n| psi_bound_with(transition, &pi, n))
            .collect::<Result<Vec<_>>>()?;
        let points: Vec<(f64, f64)> = lags
            .iter()
            .zip(&bounds)
            .filter(|(_, &b)| b > PSI_FLOOR)
            .map(|(&n, &b)| (n as f64, b.ln()))
            .collect();
        let (decay_rate, intercept) = match least_squares(&points) {
            Some((slope, intercept)) => (Some(-slope), Some(intercept)),
            None => (None, None),
        };
        Ok(Self {
            lags: lags.to_vec(),
            bounds,
            decay_rate,
            intercept,
        })
    }

    pub fn fitted(&self, n: u32) -> Option<f64> {
        Some((self.intercept? - self.decay_rate? * n as f64).exp())
    }
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub(crate) fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Karp's maximum cycle mean on a strongly connected graph with `n` nodes and
/// weighted edges `(from, to, weight)`.
///
/// `D_k(v)` is the heaviest `k`-edge walk ending at `v` from a virtual source
/// attached to every node; the answer is `max_v min_{k<n} (D_n(v) − D_k(v))/(n − k)`.
pub fn karp_max_mean_cycle(n: usize, edges: &[(usize, usize, f64)]) -> Result<f64> {
    if n == 0 {
        return Err(Error::Reducible);
    }
    let mut adjacency = vec![Vec::new(); n];
    for &(x, y, w) in edges {
        if x >= n || y >= n {
            return Err(Error::InvalidModel("edge endpoint out of range".into()));
        }
        if !w.is_finite() {
            return Err(Error::NonFinite("edge weight"));
        }
        adjacency[x].push(y);
    }
    if !SupportGraph::new(adjacency)?.is_strongly_connected() {
        return Err(Error::Reducible);
    }
    let mut walks = vec![vec![f64::NEG_INFINITY; n]; n + 1];
    walks[0].fill(0.0);
    for k in 1..=n {
        for &(x, y, w) in edges {
            let prev = walks[k - 1][x];
            if prev > f64::NEG_INFINITY && prev + w > walks[k][y] {
                walks[k][y] = prev + w;
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    for v in 0..n {
        let top = walks[n][v];
        if top == f64::NEG_INFINITY {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| walks[k][v] > f64::NEG_INFINITY)
            .map(|k| (top - walks[k][v]) / (n - k) as f64)
            .fold(f64::INFINITY, f64::min);
        best = best.max(worst);
    }
    Ok(best)
}

/// `c⁺` of the functional chain: max cycle mean with weight `f(y)` on edge `x → y`.
pub fn max_mean_cycle(transition: &TransitionMatrix, values: &[f64]) -> Result<f64> {
    let m = transition.size();
    if values.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: values.len(),
        });
    }
    let edges: Vec<(usize, usize, f64)> = (0..m)
        .flat_map(|x| (0..m).map(move |y| (x, y)))
        .filter(|&(x, y)| transition.get(x, y) > 0.0)
        .map(|(x, y)| (x, y, values[y]))
        .collect();
    karp_max_mean_cycle(m, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_state() -> TransitionMatrix {
        TransitionMatrix::new(vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap()
    }

    fn cosine() -> TrigObservable {
        TrigObservable {
            constant: 0.0,
            cos: vec![1.0],
            sin: vec![],
        }
    }

    #[test]
    fn rotation_cosine_has_zero_mean() {
        let model = ProcessModel::rotation(GOLDEN_FREQUENCY, 0.3, vec![cosine()]).unwrap();
        assert_eq!(model.mean(), vec![0.0]);
        assert_eq!(model.bound(), 1.0);
        assert_eq!(model.kind(), ProcessKind::Rotation);
    }

    #[test]
    fn bernoulli_mean_and_bound() {
        let model = ProcessModel::iid(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        assert_eq!(model.mean(), vec![0.5]);
        assert_eq!(model.bound(), 1.0);
        assert_eq!(model.essential_sup(0).unwrap(), 1.0);
    }

    #[test]
    fn two_state_chain_stationary() {
        let model = ProcessModel::markov(two_state(), vec![vec![0.0], vec![1.0]]).unwrap();
        let m = model.as_markov().unwrap();
        assert_abs_diff_eq!(m.stationary()[0], 5.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.stationary()[1], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(model.mean()[0], 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert!(TransitionMatrix::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::new(vec![vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
        let reducible = TransitionMatrix::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            ProcessModel::markov(reducible, vec![vec![0.0], vec![1.0]]),
            Err(Error::Reducible)
        ));
        let periodic = TransitionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            ProcessModel::markov(periodic, vec![vec![0.0], vec![1.0]]),
            Err(Error::Periodic(2))
        ));
        assert!(ProcessModel::rotation(0.25, 0.0, vec![cosine()]).is_err());
        assert!(ProcessModel::rotation(1.0 / 3.0, 0.0, vec![cosine()]).is_err());
        assert!(ProcessModel::rotation(GOLDEN_FREQUENCY, 1.2, vec![cosine()]).is_err());
        assert!(ProcessModel::iid(vec![vec![0.0], vec![1.0]], vec![0.5, 0.6]).is_err());
        assert!(ProcessModel::iid(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn doubly_stochastic_has_uniform_stationary() {
        let p = TransitionMatrix::new(vec![
            vec![0.2, 0.5, 0.3],
            vec![0.3, 0.2, 0.5],
            vec![0.5, 0.3, 0.2],
        ])
        .unwrap();
        let pi = stationary_distribution(&p).unwrap();
        for x in pi {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn stationary_residual_under_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in [2usize, 5, 17, 64, 80] {
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
                    let total: f64 = raw.iter().sum();
                    raw.iter().map(|r| r / total).collect()
                })
                .collect();
            let p = TransitionMatrix::new(rows).unwrap();
            let pi = stationary_distribution(&p).unwrap();
            assert!(stationary_residual(&p, &pi) <= 1e-12);
            assert_abs_diff_eq!(pi.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn psi_examples() {
        let p = two_state();
        // n = 0: max_y |1/π(y) − 1| = 1/(1/6) − 1
        assert_abs_diff_eq!(psi_bound(&p, 0).unwrap(), 5.0, epsilon = 1e-12);
        let iid_like = TransitionMatrix::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(psi_bound(&iid_like, 1).unwrap() < 1e-14);
        // P^n = Π + 0.4^n (I − Π) gives ψ̄(n) = 5·0.4^n
        for n in [1u32, 3, 10, 20] {
            let want = 5.0 * 0.4f64.powi(n as i32);
            assert_abs_diff_eq!(psi_bound(&p, n).unwrap(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixing_diagnostic_decay() {
        let lags: Vec<u32> = (1..=20).collect();
        let diag = MixingDiagnostic::compute(&two_state(), &lags).unwrap();
        let rate = diag.decay_rate.unwrap();
        assert_abs_diff_eq!(rate, -(0.4f64.ln()), epsilon = 1e-6);
        assert!(diag.bounds.windows(2).all(|w| w[1] <= w[0]));
        assert!(diag.fitted(25).unwrap() < diag.fitted(5).unwrap());
    }

    #[test]
    fn karp_examples() {
        let p = TransitionMatrix::new(vec![
            vec![0.2, 0.3, 0.5],
            vec![0.4, 0.1, 0.5],
            vec![0.6, 0.4, 0.0],
        ])
        .unwrap();
        assert_abs_diff_eq!(max_mean_cycle(&p, &[2.5, 2.5, 2.5]).unwrap(), 2.5);
        let edges = [(0, 0, 3.0), (0, 1, 1.0), (1, 0, 2.0)];
        assert_eq!(karp_max_mean_cycle(2, &edges).unwrap(), 3.0);
        let disconnected = [(0, 0, 1.0), (1, 1, 2.0)];
        assert!(matches!(
            karp_max_mean_cycle(2, &disconnected),
            Err(Error::Reducible)
        ));
    }

    #[test]
    fn generate_is_reproducible() {
        let model =
            ProcessModel::markov(two_state(), vec![vec![0.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let a = generate(&model, 1000, 7).unwrap();
        let b = generate(&model, 1000, 7).unwrap();
        let c = generate(&model, 1000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.mean(), Some(model.mean().as_slice()));
        assert!(generate(&model, 0, 7).is_err());
    }

    #[test]
    fn streams_differ() {
        let model = ProcessModel::iid(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        let a = generate_stream(&model, 200, 1, 0).unwrap();
        let b = generate_stream(&model, 200, 1, 1).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn rotation_mean_converges_fast() {
        let model = ProcessModel::rotation(GOLDEN_FREQUENCY, 0.1, vec![cosine()]).unwrap();
        for n in [1000usize, 100_000] {
            let s = generate(&model, n, 0).unwrap();
            assert!(s.empirical_mean()[0].abs() <= 10.0 / n as f64);
        }
    }
}
