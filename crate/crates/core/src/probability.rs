//! Level probabilities `|𝒜ₙ| / 2^{f(n)}` under the uniform measure on `P(ω)`:
//! partial sums, exact union measure over a window, and Monte Carlo.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::funcspec::FuncSpec;
use crate::guessing::{width_at, GuessingStructure};
use crate::rng::{fair_window, substream};

/// Widest level a term or cylinder is computed for exactly.
pub const MAX_EXACT_WIDTH: u64 = 1 << 20;
pub const MIN_TRIALS: u64 = 100;

/// Where the per-level counts come from.
#[derive(Debug, Clone, Copy)]
pub enum TermSource<'a> {
    /// `π(n)` guesses of width `f(n)`.
    Specs { pi: &'a FuncSpec, f: &'a FuncSpec },
    Structure(&'a GuessingStructure),
}

/// An exact rational printed as `p/q`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Exact(pub BigRational);

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl Exact {
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub level: u32,
    pub count: u64,
    pub width: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BCReport {
    pub upto: u32,
    pub terms: Vec<Term>,
    /// `partial_sums[k]` is the sum of the first `k + 1` terms.
    pub partial_sums: Vec<f64>,
    pub sum: Exact,
    /// The second half of the range alone contributes at least 1/2.
    pub divergence_flag: bool,
}

fn term_parts(source: TermSource<'_>, n: u32) -> Result<(u64, u64)> {
    match source {
        TermSource::Specs { pi, f } => Ok((pi.eval(u64::from(n))?, f.eval(u64::from(n))?)),
        TermSource::Structure(g) => {
            if n >= g.horizon() {
                return Err(Error::OutOfHorizon {
                    value: u64::from(n),
                    horizon: u64::from(g.horizon()),
                });
            }
            Ok((g.level(n).len() as u64, u64::from(width_at(g.f(), n)?)))
        }
    }
}

fn term(count: u64, width: u64) -> Result<BigRational> {
    if width > MAX_EXACT_WIDTH {
        return Err(Error::WindowTooLarge {
            width,
            limit: MAX_EXACT_WIDTH,
        });
    }
    Ok(BigRational::new(BigInt::from(count), BigInt::one() << width as usize))
}

/// Exact `∑_{from ≤ n < to} count(n) / 2^{f(n)}`.
pub fn window_sum(source: TermSource<'_>, from: u32, to: u32) -> Result<BigRational> {
    let mut sum = BigRational::zero();
    for n in from..to {
        let (count, width) = term_parts(source, n)?;
        sum += term(count, width)?;
    }
    Ok(sum)
}

/// Partial sums of the terms for `n < upto`.
pub fn bc_partial_sum(source: TermSource<'_>, upto: u32) -> Result<BCReport> {
    let mut sum = BigRational::zero();
    let mut tail = BigRational::zero();
    let mut terms = Vec::with_capacity(upto as usize);
    let mut partial_sums = Vec::with_capacity(upto as usize);
    for n in 0..upto {
        let (count, width) = term_parts(source, n)?;
        let t = term(count, width)?;
        if n >= upto / 2 {
            tail += &t;
        }
        sum += &t;
        terms.push(Term {
            level: n,
            count,
            width,
            value: t.to_f64().unwrap_or(f64::NAN),
        });
        partial_sums.push(sum.to_f64().unwrap_or(f64::NAN));
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    Ok(BCReport {
        upto,
        terms,
        partial_sums,
        sum: Exact(sum),
        divergence_flag: upto > 0 && tail >= half,
    })
}

/// Probability that `X ∩ f(n) ∈ 𝒜ₙ` for some `n` in `[from, to)`.
///
/// The guessed event is a union of cylinders; after discarding every guess
/// that extends another, the cylinders are disjoint and their measures add.
pub fn exact_guess_measure(g: &GuessingStructure, from: u32, to: u32) -> Result<BigRational> {
    let mut all: BTreeSet<&BitString> = BTreeSet::new();
    for (n, level) in g.nonempty_levels() {
        if n < from || n >= to {
            continue;
        }
        if u64::from(level.width) > MAX_EXACT_WIDTH {
            return Err(Error::WindowTooLarge {
                width: u64::from(level.width),
                limit: MAX_EXACT_WIDTH,
            });
        }
        all.extend(level.members.iter());
    }
    let mut measure = BigRational::zero();
    let mut last: Option<&BitString> = None;
    // In string order the extensions of a kept guess follow it directly.
    for s in all {
        if last.is_some_and(|p| p.is_prefix_of(s)) {
            continue;
        }
        measure += term(1, u64::from(s.len()))?;
        last = Some(s);
    }
    Ok(measure)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub seed: u64,
    pub trials: u64,
    pub window_start: u32,
    pub window_end: u32,
    pub hits: u64,
    pub fraction: f64,
    pub std_error: f64,
}

/// Fraction of uniformly random subjects guessed at one or more levels of
/// `[from, to)`. Trial `i` samples from substream `i` of `seed`.
pub fn mc_guess_fraction(
    g: &GuessingStructure,
    from: u32,
    to: u32,
    trials: u64,
    seed: u64,
) -> Result<TrialReport> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidInput(format!("at least {MIN_TRIALS} trials are required, got {trials}")));
    }
    let levels: Vec<_> = g
        .nonempty_levels()
        .filter(|&(n, _)| n >= from && n < to)
        .map(|(_, level)| level)
        .collect();
    let width = levels.iter().map(|l| l.width).max().unwrap_or(0);
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let subject = fair_window(&mut substream(seed, t), width);
            u64::from(levels.iter().any(|l| l.guesses(&subject)))
        })
        .sum();
    let fraction = hits as f64 / trials as f64;
    Ok(TrialReport {
        seed,
        trials,
        window_start: from,
        window_end: to,
        hits,
        fraction,
        std_error: (fraction * (1.0 - fraction) / trials as f64).sqrt(),
    })
}

/// A structure with `min(π(n), 2^{f(n)})` distinct uniformly random guesses
/// at every level below `horizon`.
pub fn random_structure(pi: &FuncSpec, f: &FuncSpec, horizon: u32, seed: u64) -> Result<GuessingStructure> {
    const MAX_LEVEL_SIZE: u64 = 1 << 20;
    let mut levels = Vec::new();
    for n in 0..horizon {
        let width = width_at(f, n)?;
        let want = pi.eval(u64::from(n))?;
        let space = if width < 64 { 1u64 << width } else { u64::MAX };
        let size = want.min(space);
        if size > MAX_LEVEL_SIZE {
            return Err(Error::WindowTooLarge {
                width: size,
                limit: MAX_LEVEL_SIZE,
            });
        }
        let mut rng = substream(seed, u64::from(n));
        let members: Vec<BitString> = if size == space {
            (0..space).map(|w| BitString::from_word(width, w)).collect()
        } else {
            let mut chosen = BTreeSet::new();
            while (chosen.len() as u64) < size {
                let bits = fair_window(&mut rng, width);
                chosen.insert(BitString::from_ones(width, bits.iter())?);
            }
            chosen.into_iter().collect()
        };
        levels.push((n, members));
    }
    GuessingStructure::new(pi.clone(), f.clone(), horizon, levels)
}
