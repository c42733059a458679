//! Guessing sequences `⟨𝒜ₙ : n < H⟩` with `𝒜ₙ ⊆ P(f(n))` and `|𝒜ₙ| ≤ π(n)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bits::{BitString, SetWindow};
use crate::error::{Error, Result};
use crate::funcspec::{Expr, FuncSpec};

/// One nonempty level: the common width `f(n)` and the sorted, distinct guesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub width: u32,
    pub members: Vec<BitString>,
}

impl Level {
    pub fn contains(&self, s: &BitString) -> bool {
        self.members.binary_search(s).is_ok()
    }

    /// Whether `X ∩ width` is one of the guesses.
    pub fn guesses(&self, subject: &SetWindow) -> bool {
        if self.members.len() <= 4 {
            self.members.iter().any(|m| subject.prefix_equals(m))
        } else {
            subject
                .prefix(self.width)
                .map(|trace| self.contains(&trace))
                .unwrap_or(false)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "StructureFile", try_from = "StructureFile")]
pub struct GuessingStructure {
    pi: FuncSpec,
    f: FuncSpec,
    horizon: u32,
    levels: BTreeMap<u32, Level>,
}

/// On-disk shape: horizon, the two index functions, and level-keyed 0/1 strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureFile {
    pub horizon: u32,
    pub pi: FuncSpec,
    pub f: FuncSpec,
    pub levels: BTreeMap<u32, Vec<BitString>>,
}

impl From<GuessingStructure> for StructureFile {
    fn from(g: GuessingStructure) -> Self {
        StructureFile {
            horizon: g.horizon,
            pi: g.pi,
            f: g.f,
            levels: g
                .levels
                .into_iter()
                .map(|(n, level)| (n, level.members))
                .collect(),
        }
    }
}

impl TryFrom<StructureFile> for GuessingStructure {
    type Error = Error;

    fn try_from(file: StructureFile) -> Result<Self> {
        GuessingStructure::new(file.pi, file.f, file.horizon, file.levels)
    }
}

pub(crate) fn width_at(f: &FuncSpec, n: u32) -> Result<u32> {
    let w = f.eval(u64::from(n))?;
    u32::try_from(w).map_err(|_| Error::OutOfHorizon {
        value: w,
        horizon: u64::from(u32::MAX),
    })
}

impl GuessingStructure {
    /// Validates and normalizes (sorts, deduplicates) the levels.
    pub fn new(
        pi: FuncSpec,
        f: FuncSpec,
        horizon: u32,
        levels: impl IntoIterator<Item = (u32, Vec<BitString>)>,
    ) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (n, mut members) in levels {
            if n >= horizon {
                return Err(Error::OutOfHorizon {
                    value: u64::from(n),
                    horizon: u64::from(horizon),
                });
            }
            members.sort_unstable();
            members.dedup();
            if members.is_empty() {
                continue;
            }
            let width = width_at(&f, n)?;
            if let Some(bad) = members.iter().find(|m| m.len() != width) {
                return Err(Error::InvalidStructure(format!(
                    "level {n}: guess {bad} has length {}, f({n}) = {width}",
                    bad.len()
                )));
            }
            let bound = pi.eval(u64::from(n))?;
            if members.len() as u64 > bound {
                return Err(Error::InvalidStructure(format!(
                    "level {n}: {} guesses exceed pi({n}) = {bound}",
                    members.len()
                )));
            }
            if out.insert(n, Level { width, members }).is_some() {
                return Err(Error::InvalidStructure(format!("level {n} listed twice")));
            }
        }
        Ok(GuessingStructure {
            pi,
            f,
            horizon,
            levels: out,
        })
    }

    /// Every level `n < horizon` holds all of `P(f(n))`. Needs `π(n) ≥ 2^{f(n)}`.
    pub fn full_power_sets(pi: FuncSpec, f: FuncSpec, horizon: u32) -> Result<Self> {
        let mut levels = Vec::new();
        for n in 0..horizon {
            let w = width_at(&f, n)?;
            if w > 24 {
                return Err(Error::WindowTooLarge {
                    width: u64::from(w),
                    limit: 24,
                });
            }
            let members = (0..1u64 << w).map(|word| BitString::from_word(w, word)).collect();
            levels.push((n, members));
        }
        GuessingStructure::new(pi, f, horizon, levels)
    }

    pub fn pi(&self) -> &FuncSpec {
        &self.pi
    }

    pub fn f(&self) -> &FuncSpec {
        &self.f
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn level(&self, n: u32) -> &[BitString] {
        self.levels.get(&n).map_or(&[], |l| &l.members)
    }

    pub fn level_entry(&self, n: u32) -> Option<&Level> {
        self.levels.get(&n)
    }

    pub fn nonempty_levels(&self) -> impl Iterator<Item = (u32, &Level)> + '_ {
        self.levels.iter().map(|(&n, l)| (n, l))
    }

    /// Widths are only pinned on nonempty levels; an empty level guesses nothing.
    pub fn max_width(&self) -> u32 {
        self.levels.values().map(|l| l.width).max().unwrap_or(0)
    }

    pub fn is_guessed_at(&self, n: u32, subject: &SetWindow) -> bool {
        self.levels.get(&n).is_some_and(|l| l.guesses(subject))
    }
}

/// A subject together with the levels at which it is guessed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessSet {
    pub subject: SetWindow,
    pub hits: SetWindow,
}

/// `{n < H : X ∩ f(n) ∈ 𝒜ₙ}`.
pub fn guess_levels(g: &GuessingStructure, subject: &SetWindow) -> Result<GuessSet> {
    let needed = g.max_width();
    if subject.horizon() < needed {
        return Err(Error::HorizonMismatch {
            needed: u64::from(needed),
            got: u64::from(subject.horizon()),
        });
    }
    let hits = g
        .nonempty_levels()
        .filter(|(_, level)| level.guesses(subject))
        .map(|(n, _)| n);
    Ok(GuessSet {
        subject: subject.clone(),
        hits: SetWindow::from_members(g.horizon(), hits)?,
    })
}

/// `𝒜′ₙ = {X ∩ g(n) : X ∈ 𝒜ₙ}`, with width `min(f, g)`.
///
/// Levels where `g(n) ≥ f(n)` are unchanged, and `g = f` returns the input.
pub fn restrict_guessing(g: &GuessingStructure, cut: &FuncSpec) -> Result<GuessingStructure> {
    if cut == g.f() {
        return Ok(g.clone());
    }
    let f = g.f().min_with(cut);
    let mut levels = Vec::new();
    for (n, level) in g.nonempty_levels() {
        let w = level.width.min(width_at(cut, n)?);
        levels.push((n, level.members.iter().map(|m| m.cut(w)).collect()));
    }
    GuessingStructure::new(g.pi().clone(), f, g.horizon(), levels)
}

/// Pulls the structure back along `p`: level `i` becomes level `p(i)`.
pub fn rk_transport(g: &GuessingStructure, p: &FuncSpec) -> Result<GuessingStructure> {
    if *p.expr() == Expr::Id {
        return Ok(g.clone());
    }
    let mut levels = Vec::new();
    for i in 0..g.horizon() {
        let j = p.eval(u64::from(i))?;
        if j >= u64::from(g.horizon()) {
            return Err(Error::OutOfHorizon {
                value: j,
                horizon: u64::from(g.horizon()),
            });
        }
        let members = g.level(j as u32);
        if !members.is_empty() {
            levels.push((i, members.to_vec()));
        }
    }
    GuessingStructure::new(g.pi().compose(p), g.f().compose(p), g.horizon(), levels)
}
