//! Self-check suite over random inputs: algebraic identities that every
//! correct implementation of the sums and integrals must satisfy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::integrals::{push_segment, signature_of_path, PathGrid};
use crate::sums::{abel_rhs, brute_force_sum, push, signature_of_series, SampleSeries};
use crate::tensor::{chen_concat, tensor_exp, SignatureState, Word};

pub const TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    /// Largest relative discrepancy seen.
    pub worst: f64,
}

impl IdentityCheck {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

struct Tally {
    name: &'static str,
    passed: usize,
    total: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: 0,
            total: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
        self.total += 1;
        self.worst = self.worst.max(rel);
        if rel <= TOLERANCE {
            self.passed += 1;
        }
    }

    fn finish(self) -> IdentityCheck {
        IdentityCheck {
            name: self.name,
            passed: self.passed,
            total: self.total,
            worst: self.worst,
        }
    }
}

fn vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn series(rng: &mut ChaCha8Rng, dim: usize, len: usize) -> Result<SampleSeries> {
    SampleSeries::from_flat(dim, vector(rng, dim * len))
}

fn random_word(rng: &mut ChaCha8Rng, dim: usize, degree: usize) -> Result<Word> {
    Word::new(
        (0..degree).map(|_| rng.random_range(1..=dim)).collect(),
        dim,
    )
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize, depth: usize) -> Result<SignatureState> {
    let mut s = SignatureState::identity(dim, depth)?;
    for _ in 0..rng.random_range(1..6) {
        push(&mut s, &vector(rng, dim))?;
    }
    Ok(s)
}

fn abel(rng: &mut ChaCha8Rng, cases: usize) -> Result<IdentityCheck> {
    let mut t = Tally::new("abel");
    for _ in 0..cases {
        let n = rng.random_range(1..=50);
        let a = vector(rng, n);
        let b = vector(rng, n);
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        t.record(abel_rhs(&a, &b)?, dot);
    }
    Ok(t.finish())
}

fn oracle(rng: &mut ChaCha8Rng, cases: usize) -> Result<IdentityCheck> {
    let mut t = Tally::new("streaming-vs-enumeration");
    for _ in 0..cases {
        let dim = rng.random_range(1..=3);
        let depth = rng.random_range(1..=4);
        let len = rng.random_range(1..=12);
        let s = series(rng, dim, len)?;
        let sig = signature_of_series(&s, depth)?;
        let degree = rng.random_range(1..=depth);
        let w = random_word(rng, dim, degree)?;
        t.record(sig.coefficient(&w)?, brute_force_sum(&s, &w, s.len())?);
    }
    Ok(t.finish())
}

fn quasi_shuffle(rng: &mut ChaCha8Rng, cases: usize) -> Result<IdentityCheck> {
    let mut t = Tally::new("quasi-shuffle");
    for _ in 0..cases {
        let dim = rng.random_range(1..=3);
        let len = rng.random_range(1..=30);
        let s = series(rng, dim, len)?;
        let sig = signature_of_series(&s, 2)?;
        let i = rng.random_range(1..=dim);
        let j = rng.random_range(1..=dim);
        let si = sig.coefficient(&Word::new(vec![i], dim)?)?;
        let sj = sig.coefficient(&Word::new(vec![j], dim)?)?;
        let sij = sig.coefficient(&Word::new(vec![i, j], dim)?)?;
        let sji = sig.coefficient(&Word::new(vec![j, i], dim)?)?;
        let diagonal: f64 = s.iter().map(|x| x[i - 1] * x[j - 1]).sum();
        t.record(si * sj, sij + sji + diagonal);
    }
    Ok(t.finish())
}

fn shuffle(rng: &mut ChaCha8Rng, cases: usize) -> Result<IdentityCheck> {
    let mut t = Tally::new("shuffle");
    for _ in 0..cases {
        let dim = rng.random_range(1..=3);
        let len = rng.random_range(1..=30);
        let s = series(rng, dim, len)?;
        let path = PathGrid::from_series(&s, rng.random_range(0.05..1.0))?;
        let sig = signature_of_path(&path, 3)?;
        let [i, j, k] = [(); 3].map(|_| rng.random_range(1..=dim));
        let c = |letters: Vec<usize>| sig.coefficient(&Word::new(letters, dim)?);
        t.record(c(vec![i])? * c(vec![j])?, c(vec![i, j])? + c(vec![j, i])?);
        t.record(
            c(vec![i, j])? * c(vec![k])?,
            c(vec![i, j, k])? + c(vec![i, k, j])? + c(vec![k, i, j])?,
        );
    }
    Ok(t.finish())
}

fn associativity(rng: &mut ChaCha8Rng, cases: usize) -> Result<IdentityCheck> {
    let mut t = Tally::new("chen-associativity");
    for _ in 0..cases {
        let dim = rng.random_range(1..=3);
        let depth = rng.random_range(1..=4);
        let a = random_state(rng, dim, depth)?;
        let b = random_state(rng, dim, depth)?;
        let c = random_state(rng, dim, depth)?;
        let left = chen_concat(&chen_concat(&a, &b)?, &c)?;
        let right = chen_concat(&a, &chen_concat(&b, &c)?)?;
        for (l, r) in left.levels().iter().zip(right.levels()) {
            for (x, y) in l.values().iter().zip(r.values()) {
                t.record(*x, *y);
            }
        }
    }
    Ok(t.finish())
}

fn exp_additivity(rng: &mut ChaCha8Rng, cases: usize) -> Result<IdentityCheck> {
    let mut t = Tally::new("segment-push-vs-exp");
    for _ in 0..cases {
        let dim = rng.random_range(1..=3);
        let depth = rng.random_range(1..=4);
        let mut state = random_state(rng, dim, depth)?;
        let v = vector(rng, dim);
        let h = rng.random_range(0.01..2.0);
        let want = chen_concat(&state, &tensor_exp(&v, h, depth, dim)?)?;
        push_segment(&mut state, &v, h)?;
        for (l, r) in state.levels().iter().zip(want.levels()) {
            for (x, y) in l.values().iter().zip(r.values()) {
                t.record(*x, *y);
            }
        }
    }
    Ok(t.finish())
}

/// Runs every identity on `cases` random inputs each.
pub fn run_suite(seed: u64, cases: usize) -> Result<Vec<IdentityCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        abel(&mut rng, cases)?,
        oracle(&mut rng, cases)?,
        quasi_shuffle(&mut rng, cases)?,
        shuffle(&mut rng, cases)?,
        associativity(&mut rng, cases)?,
        exp_additivity(&mut rng, cases)?,
    ])
}
