//! Seed-reproducible experiments for the iterated ergodic theorems and the
//! Erdős–Rényi law.
//!
//! * [`as_sweep`]: one trajectory, normalized coordinate at each checkpoint.
//! * [`continuous_sweep`]: same, for the piecewise-constant path built from
//!   the samples with step `h`.
//! * [`l1_sweep`]: Monte Carlo mean of `|S(n) − L|` over independent streams.
//! * [`er_scan`]: the scan statistic over windows of length `ℓ_n`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrals::push_segment;
use crate::large_deviations::{window_length, RateFunction};
use crate::processes::{least_squares, ProcessKind, ProcessModel};
use crate::sums::{coordinate_track, factorial, push, theoretical_limit, CoordinateTrack};
use crate::tensor::{SignatureState, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    AlmostSureDiscrete,
    AlmostSureContinuous,
    L1MonteCarlo,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AlmostSureDiscrete => "almost_sure_discrete",
            Self::AlmostSureContinuous => "almost_sure_continuous",
            Self::L1MonteCarlo => "L1_monte_carlo",
        }
    }
}

/// Discrete sums, or the piecewise-constant path with the given step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Engine {
    Discrete,
    Continuous { step: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepOptions {
    /// Truncation depth of the streamed state; `None` uses the largest word degree.
    pub depth: Option<usize>,
    pub kahan: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub word: Word,
    pub mode: SweepMode,
    /// Samples (discrete) or segments (continuous) consumed at each checkpoint.
    pub checkpoints: Vec<usize>,
    /// Segment length for continuous sweeps.
    pub step: Option<f64>,
    pub values: Vec<f64>,
    pub limit: f64,
    pub errors: Vec<f64>,
    /// Standard error of the Monte Carlo mean (L¹ sweeps only).
    pub stderr: Option<Vec<f64>>,
    pub replications: Option<usize>,
    /// Slope of `ln e_k` against `ln n_k`; needs ≥ 4 checkpoints and all `e_k > 0`.
    pub slope: Option<f64>,
}

impl ConvergenceReport {
    fn new(
        word: Word,
        mode: SweepMode,
        checkpoints: &[usize],
        step: Option<f64>,
        values: Vec<f64>,
        limit: f64,
        errors: Vec<f64>,
    ) -> Self {
        let slope = fit_slope(checkpoints, &errors);
        Self {
            word,
            mode,
            checkpoints: checkpoints.to_vec(),
            step,
            values,
            limit,
            errors,
            stderr: None,
            replications: None,
            slope,
        }
    }

    pub fn final_error(&self) -> Option<(usize, f64)> {
        Some((*self.checkpoints.last()?, *self.errors.last()?))
    }
}

fn fit_slope(checkpoints: &[usize], errors: &[f64]) -> Option<f64> {
    if checkpoints.len() < 4 || errors.iter().any(|&e| !(e > 0.0)) {
        return None;
    }
    let points: Vec<(f64, f64)> = checkpoints
        .iter()
        .zip(errors)
        .map(|(&n, &e)| ((n as f64).ln(), e.ln()))
        .collect();
    least_squares(&points).map(|(slope, _)| slope)
}

/// Rejects non-increasing or zero checkpoints.
pub fn check_checkpoints(checkpoints: &[usize]) -> Result<()> {
    if checkpoints.first() == Some(&0) {
        return Err(Error::Checkpoints("checkpoints must be at least 1".into()));
    }
    if let Some(w) = checkpoints.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Checkpoints(format!(
            "not strictly increasing: {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `n_1·2^k` for `k = 0..count`.
pub fn geometric_checkpoints(start: usize, count: usize) -> Vec<usize> {
    (0..count).map(|k| start << k).collect()
}

fn check_words(model: &ProcessModel, words: &[Word], depth: usize) -> Result<()> {
    for word in words {
        if word.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                actual: word.dim(),
            });
        }
        if word.degree() > depth {
            return Err(Error::LevelOutOfRange {
                requested: word.degree(),
                depth,
            });
        }
    }
    Ok(())
}

fn resolve_depth(words: &[Word], opts: &SweepOptions) -> usize {
    opts.depth
        .unwrap_or_else(|| words.iter().map(Word::degree).max().unwrap_or(1))
        .max(1)
}

/// Streams one trajectory and returns the normalized coordinate of every word
/// at every checkpoint (`values[word][k]`).
fn stream_normalized(
    model: &ProcessModel,
    words: &[Word],
    checkpoints: &[usize],
    seed: u64,
    stream: u64,
    engine: Engine,
    opts: &SweepOptions,
) -> Result<Vec<Vec<f64>>> {
    let depth = resolve_depth(words, opts);
    check_words(model, words, depth)?;
    let mut state = SignatureState::identity(model.dim(), depth)?.with_compensation(opts.kahan);
    let mut sampler = model.sampler(seed, stream);
    let mut x = vec![0.0; model.dim()];
    let mut values = vec![Vec::with_capacity(checkpoints.len()); words.len()];
    let mut consumed = 0usize;
    for &n in checkpoints {
        while consumed < n {
            sampler.fill_next(&mut x);
            match engine {
                Engine::Discrete => push(&mut state, &x)?,
                Engine::Continuous { step } => push_segment(&mut state, &x, step)?,
            }
            consumed += 1;
        }
        let horizon = match engine {
            Engine::Discrete => n as f64,
            Engine::Continuous { step } => n as f64 * step,
        };
        for (word, out) in words.iter().zip(values.iter_mut()) {
            let v = state.normalized_coefficient(word, horizon)?;
            if !v.is_finite() {
                return Err(Error::NonFinite("sweep"));
            }
            out.push(v);
        }
    }
    Ok(values)
}

fn single_run(
    model: &ProcessModel,
    words: &[Word],
    checkpoints: &[usize],
    seed: u64,
    engine: Engine,
    opts: &SweepOptions,
) -> Result<Vec<ConvergenceReport>> {
    check_checkpoints(checkpoints)?;
    let values = stream_normalized(model, words, checkpoints, seed, 0, engine, opts)?;
    let mean = model.mean();
    let (mode, step) = match engine {
        Engine::Discrete => (SweepMode::AlmostSureDiscrete, None),
        Engine::Continuous { step } => (SweepMode::AlmostSureContinuous, Some(step)),
    };
    Ok(words
        .iter()
        .zip(values)
        .map(|(word, values)| {
            let limit = theoretical_limit(&mean, word);
            let errors = values.iter().map(|v| (v - limit).abs()).collect();
            ConvergenceReport::new(word.clone(), mode, checkpoints, step, values, limit, errors)
        })
        .collect())
}

/// Almost-sure sweep over several words sharing one trajectory.
pub fn as_sweep_words(
    model: &ProcessModel,
    words: &[Word],
    checkpoints: &[usize],
    seed: u64,
    opts: &SweepOptions,
) -> Result<Vec<ConvergenceReport>> {
    single_run(model, words, checkpoints, seed, Engine::Discrete, opts)
}

pub fn as_sweep(
    model: &ProcessModel,
    word: &Word,
    checkpoints: &[usize],
    seed: u64,
) -> Result<ConvergenceReport> {
    let mut reports = as_sweep_words(
        model,
        std::slice::from_ref(word),
        checkpoints,
        seed,
        &SweepOptions::default(),
    )?;
    Ok(reports.remove(0))
}

pub fn continuous_sweep_words(
    model: &ProcessModel,
    words: &[Word],
    step: f64,
    checkpoints: &[usize],
    seed: u64,
    opts: &SweepOptions,
) -> Result<Vec<ConvergenceReport>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::NonPositive {
            what: "path step",
            value: step,
        });
    }
    single_run(
        model,
        words,
        checkpoints,
        seed,
        Engine::Continuous { step },
        opts,
    )
}

pub fn continuous_sweep(
    model: &ProcessModel,
    word: &Word,
    step: f64,
    checkpoints: &[usize],
    seed: u64,
) -> Result<ConvergenceReport> {
    let mut reports = continuous_sweep_words(
        model,
        std::slice::from_ref(word),
        step,
        checkpoints,
        seed,
        &SweepOptions::default(),
    )?;
    Ok(reports.remove(0))
}

/// Normalized values `S_r^{word}(n_k)` of every replication, indexed
/// `[replication][word][checkpoint]`. Replication `r` uses stream `r`.
pub fn replicate(
    model: &ProcessModel,
    words: &[Word],
    checkpoints: &[usize],
    replications: usize,
    seed: u64,
    engine: Engine,
    opts: &SweepOptions,
) -> Result<Vec<Vec<Vec<f64>>>> {
    check_checkpoints(checkpoints)?;
    (0..replications as u64)
        .into_par_iter()
        .map(|r| stream_normalized(model, words, checkpoints, seed, r, engine, opts))
        .collect()
}

/// Monte Carlo estimate of `E|S(n) − L|` with its standard error.
pub fn l1_sweep_words(
    model: &ProcessModel,
    words: &[Word],
    checkpoints: &[usize],
    replications: usize,
    seed: u64,
    engine: Engine,
    opts: &SweepOptions,
) -> Result<Vec<ConvergenceReport>> {
    if replications < 2 {
        return Err(Error::TooFewReplications(replications));
    }
    if let Engine::Continuous { step } = engine {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::NonPositive {
                what: "path step",
                value: step,
            });
        }
    }
    let runs = replicate(model, words, checkpoints, replications, seed, engine, opts)?;
    let mean = model.mean();
    let step = match engine {
        Engine::Discrete => None,
        Engine::Continuous { step } => Some(step),
    };
    let r = replications as f64;
    Ok(words
        .iter()
        .enumerate()
        .map(|(w, word)| {
            let limit = theoretical_limit(&mean, word);
            let mut values = Vec::with_capacity(checkpoints.len());
            let mut errors = Vec::with_capacity(checkpoints.len());
            let mut stderr = Vec::with_capacity(checkpoints.len());
            for k in 0..checkpoints.len() {
                let devs: Vec<f64> = runs.iter().map(|run| (run[w][k] - limit).abs()).collect();
                let avg = devs.iter().sum::<f64>() / r;
                let var = devs.iter().map(|d| (d - avg).powi(2)).sum::<f64>() / (r - 1.0);
                values.push(runs.iter().map(|run| run[w][k]).sum::<f64>() / r);
                errors.push(avg);
                stderr.push((var / r).sqrt());
            }
            let mut report = ConvergenceReport::new(
                word.clone(),
                SweepMode::L1MonteCarlo,
                checkpoints,
                step,
                values,
                limit,
                errors,
            );
            report.stderr = Some(stderr);
            report.replications = Some(replications);
            report
        })
        .collect())
}

pub fn l1_sweep(
    model: &ProcessModel,
    word: &Word,
    checkpoints: &[usize],
    replications: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    let mut reports = l1_sweep_words(
        model,
        std::slice::from_ref(word),
        checkpoints,
        replications,
        seed,
        Engine::Discrete,
        &SweepOptions::default(),
    )?;
    Ok(reports.remove(0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErdosRenyiReport {
    pub word: Word,
    pub alpha: f64,
    /// `I_{i_ν}(α)`.
    pub rate: f64,
    pub checkpoints: Vec<usize>,
    pub window_lengths: Vec<usize>,
    pub statistics: Vec<f64>,
    /// `α ∏_{j<ν} Q_{i_j} / (ν − 1)!`.
    pub predicted_limit: f64,
    /// `c⁺_{i_ν}`.
    pub sup: f64,
    /// `Q_{i_ν}`.
    pub mean: f64,
}

/// `max_{0 ≤ m ≤ n−ℓ} (track[m+ℓ] − track[m])`, one pass over the prefix values.
pub fn max_window_increment(track: &[f64], ell: usize) -> f64 {
    track
        .iter()
        .zip(&track[ell..])
        .map(|(lo, hi)| hi - lo)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Same maximum, re-summing the `ℓ` one-step increments of every window.
pub fn max_window_increment_naive(track: &[f64], ell: usize) -> f64 {
    let steps: Vec<f64> = track.windows(2).map(|w| w[1] - w[0]).collect();
    (0..=steps.len() - ell)
        .map(|m| steps[m..m + ell].iter().sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Scan statistic `I(α)·max_m (Σ(m+ℓ) − Σ(m)) / (n^{ν−1} ln n)` for the first `n` samples.
pub fn scan_statistic(track: &CoordinateTrack, n: usize, ell: usize, rate: f64) -> Result<f64> {
    if n > track.len() {
        return Err(Error::SeriesTooShort {
            requested: n,
            available: track.len(),
        });
    }
    if ell == 0 || ell >= n {
        return Err(Error::Window(format!("window {ell} invalid for n = {n}")));
    }
    let nu = track.word().degree() as i32;
    let best = max_window_increment(&track.values()[..=n], ell);
    let stat = rate * best / ((n as f64).powi(nu - 1) * (n as f64).ln());
    if !stat.is_finite() {
        return Err(Error::NonFinite("scan statistic"));
    }
    Ok(stat)
}

pub fn predicted_scan_limit(mean: &[f64], word: &Word, alpha: f64) -> f64 {
    let letters = word.letters();
    let head = &letters[..letters.len() - 1];
    let product: f64 = head.iter().map(|&l| mean[l - 1]).product();
    alpha * product / factorial(head.len())
}

/// Erdős–Rényi scan along one seeded trajectory.
pub fn er_scan(
    model: &ProcessModel,
    word: &Word,
    alpha: f64,
    checkpoints: &[usize],
    seed: u64,
) -> Result<ErdosRenyiReport> {
    Ok(er_scan_with_track(model, word, alpha, checkpoints, seed)?.0)
}

/// As [`er_scan`], also returning the coordinate track it was computed from.
pub fn er_scan_with_track(
    model: &ProcessModel,
    word: &Word,
    alpha: f64,
    checkpoints: &[usize],
    seed: u64,
) -> Result<(ErdosRenyiReport, CoordinateTrack)> {
    if model.kind() == ProcessKind::Rotation {
        return Err(Error::Unsupported(
            "the scan statistic needs a mixing model (iid or markov)".into(),
        ));
    }
    if word.degree() == 0 {
        return Err(Error::Unsupported(
            "scan needs a word of degree >= 1".into(),
        ));
    }
    if word.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: word.dim(),
        });
    }
    check_checkpoints(checkpoints)?;
    let last = *word.letters().last().expect("degree >= 1");
    let rate_fn = RateFunction::new(model, last - 1)?;
    let rate = rate_fn.eval(alpha)?;
    if alpha == rate_fn.mean() {
        return Err(Error::OutOfDomain {
            alpha,
            lower: rate_fn.mean(),
            upper: rate_fn.sup(),
        });
    }
    let window_lengths = checkpoints
        .iter()
        .map(|&n| window_length(n, rate))
        .collect::<Result<Vec<_>>>()?;
    if let Some(w) = window_lengths.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Checkpoints(format!(
            "window lengths must grow along checkpoints, got {} then {}",
            w[0], w[1]
        )));
    }
    let n_max = checkpoints.last().copied().unwrap_or(0);
    let track = if n_max == 0 {
        coordinate_track(
            &crate::sums::SampleSeries::from_flat(model.dim(), Vec::new())?,
            word,
        )?
    } else {
        coordinate_track(&crate::processes::generate(model, n_max, seed)?, word)?
    };
    let statistics = checkpoints
        .iter()
        .zip(&window_lengths)
        .map(|(&n, &ell)| scan_statistic(&track, n, ell, rate))
        .collect::<Result<Vec<_>>>()?;
    let report = ErdosRenyiReport {
        word: word.clone(),
        alpha,
        rate,
        checkpoints: checkpoints.to_vec(),
        window_lengths,
        statistics,
        predicted_limit: predicted_scan_limit(&model.mean(), word, alpha),
        sup: rate_fn.sup(),
        mean: rate_fn.mean(),
    };
    Ok((report, track))
}
