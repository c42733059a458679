//! Finite-horizon filter bases: finite intersection checks, the branch
//! generators of a splitting tree, sky probes and the goodness-preserving
//! extension step.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::SetWindow;
use crate::error::{Error, Result};
use crate::funcspec::{EvalError, FuncSpec};
use crate::tree::{branch_hits, BranchSample, PseudoTree};

pub const DEFAULT_ARITY: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub window: SetWindow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "BaseFile", try_from = "BaseFile")]
pub struct FilterBase {
    horizon: u32,
    generators: Vec<Generator>,
}

/// On-disk shape: windows as little-endian hex bitsets under a horizon header.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseFile {
    pub horizon: u32,
    pub generators: Vec<HexGenerator>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HexGenerator {
    pub name: String,
    pub hex: String,
}

impl From<FilterBase> for BaseFile {
    fn from(base: FilterBase) -> Self {
        BaseFile {
            horizon: base.horizon,
            generators: base
                .generators
                .into_iter()
                .map(|g| HexGenerator {
                    name: g.name,
                    hex: g.window.to_hex(),
                })
                .collect(),
        }
    }
}

impl TryFrom<BaseFile> for FilterBase {
    type Error = Error;

    fn try_from(file: BaseFile) -> Result<Self> {
        let mut base = FilterBase::new(file.horizon);
        for g in file.generators {
            base.push(g.name, SetWindow::from_hex(file.horizon, &g.hex)?)?;
        }
        Ok(base)
    }
}

impl FilterBase {
    pub fn new(horizon: u32) -> Self {
        FilterBase {
            horizon,
            generators: Vec::new(),
        }
    }

    /// Empty windows are accepted and surface as FIP failures at arity 1.
    pub fn push(&mut self, name: impl Into<String>, window: SetWindow) -> Result<()> {
        if window.horizon() != self.horizon {
            return Err(Error::HorizonMismatch {
                needed: u64::from(self.horizon),
                got: u64::from(window.horizon()),
            });
        }
        self.generators.push(Generator {
            name: name.into(),
            window,
        });
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, window: SetWindow) -> Result<Self> {
        self.push(name, window)?;
        Ok(self)
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn empty_generators(&self) -> Vec<&str> {
        self.generators
            .iter()
            .filter(|g| g.window.is_empty())
            .map(|g| g.name.as_str())
            .collect()
    }

    /// Intersection of the listed generators; the full window for none.
    pub fn intersection(&self, members: &[usize]) -> SetWindow {
        members
            .iter()
            .fold(SetWindow::full(self.horizon), |acc, &i| {
                acc.intersection(&self.generators[i].window)
            })
    }
}

/// `B_r = {n : r↾f(n) ∈ 𝓛ₙ}` for each branch, named `b0, b1, …`.
pub fn base_from_tree(tree: &PseudoTree, branches: &[BranchSample]) -> Result<FilterBase> {
    let mut base = FilterBase::new(tree.horizon());
    for (i, branch) in branches.iter().enumerate() {
        if branch.bits.horizon() < tree.horizon() {
            return Err(Error::HorizonMismatch {
                needed: u64::from(tree.horizon()),
                got: u64::from(branch.bits.horizon()),
            });
        }
        base.push(format!("b{i}"), branch_hits(tree, branch)?)?;
    }
    Ok(base)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubfamilyOutcome {
    pub members: Vec<usize>,
    /// Largest element of the intersection, if any.
    pub witness: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FipReport {
    pub arity: usize,
    pub generators: usize,
    pub checked: usize,
    pub outcomes: Vec<SubfamilyOutcome>,
}

impl FipReport {
    pub fn passes(&self) -> bool {
        self.outcomes.iter().all(|o| o.witness.is_some())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SubfamilyOutcome> + '_ {
        self.outcomes.iter().filter(|o| o.witness.is_none())
    }

    pub fn witness(&self, members: &[usize]) -> Option<u32> {
        self.outcomes
            .iter()
            .find(|o| o.members == members)
            .and_then(|o| o.witness)
    }
}

/// Every subfamily of size `1..=arity` (arity clamped to the number of
/// generators), in size then lexicographic order.
pub fn check_fip(base: &FilterBase, arity: usize) -> FipReport {
    let arity = arity.min(base.len());
    let subfamilies: Vec<Vec<usize>> = (1..=arity)
        .flat_map(|k| (0..base.len()).combinations(k))
        .collect();
    let outcomes: Vec<SubfamilyOutcome> = subfamilies
        .into_par_iter()
        .map(|members| {
            let witness = base.intersection(&members).max();
            SubfamilyOutcome { members, witness }
        })
        .collect();
    FipReport {
        arity,
        generators: base.len(),
        checked: outcomes.len(),
        outcomes,
    }
}

/// Which sky comparison a probe approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkyRelation {
    /// `{n : g(π(n)) < f(n)}` meets every probed set past the midpoint.
    NotGeq,
    /// `g(π(n)) < f(n)` at every probed point past the midpoint.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Supported,
    RefutedAtHorizon,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub test: FuncSpec,
    pub probe: String,
    /// `{n ∈ X : g(π(n)) < f(n)}` over the whole horizon.
    pub below: SetWindow,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkyVerdict {
    pub relation: SkyRelation,
    pub midpoint: u32,
    pub records: Vec<ProbeRecord>,
    pub verdict: Verdict,
    /// Points of a probed set past the midpoint that break the relation.
    pub counterexample: Option<SetWindow>,
}

/// `{n < H : g(π(n)) < f(n)}`; an overflowing `g(π(n))` counts as not below.
pub fn below_window(pi: &FuncSpec, f: &FuncSpec, g: &FuncSpec, horizon: u32) -> Result<SetWindow> {
    let mut window = SetWindow::empty(horizon);
    for n in 0..horizon {
        let bound = f.eval(u64::from(n))?;
        let value = match g.eval(pi.eval(u64::from(n))?) {
            Ok(v) => Some(v),
            Err(EvalError::Overflow { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        if value.is_some_and(|v| v < bound) {
            window.insert(n);
        }
    }
    Ok(window)
}

/// Tests each `g` against every generator and the full intersection of the
/// base (or the whole window when the base is empty).
pub fn sky_probe(
    pi: &FuncSpec,
    f: &FuncSpec,
    base: &FilterBase,
    tests: &[FuncSpec],
    relation: SkyRelation,
    midpoint: Option<u32>,
) -> Result<SkyVerdict> {
    if tests.is_empty() {
        return Err(Error::InvalidInput("sky probe needs at least one test function".into()));
    }
    let horizon = base.horizon();
    let midpoint = midpoint.unwrap_or(horizon / 2).min(horizon);
    let mut probes: Vec<(String, SetWindow)> = base
        .generators()
        .iter()
        .map(|g| (g.name.clone(), g.window.clone()))
        .collect();
    let all: Vec<usize> = (0..base.len()).collect();
    probes.push(("all".into(), base.intersection(&all)));

    let mut records = Vec::new();
    let mut counterexample = None;
    for g in tests {
        let below = below_window(pi, f, g, horizon)?;
        for (name, probe) in &probes {
            let tail = probe.tail(midpoint);
            let good_tail = tail.intersection(&below);
            let bad_tail = tail.intersection(&below.complement());
            let verdict = if tail.is_empty() {
                Verdict::Inconclusive
            } else {
                let holds = match relation {
                    SkyRelation::NotGeq => !good_tail.is_empty(),
                    SkyRelation::Less => bad_tail.is_empty(),
                };
                if holds {
                    Verdict::Supported
                } else {
                    if counterexample.is_none() {
                        counterexample = Some(bad_tail.clone());
                    }
                    Verdict::RefutedAtHorizon
                }
            };
            records.push(ProbeRecord {
                test: g.clone(),
                probe: name.clone(),
                below: probe.intersection(&below),
                verdict,
            });
        }
    }
    let verdict = if records.iter().any(|r| r.verdict == Verdict::RefutedAtHorizon) {
        Verdict::RefutedAtHorizon
    } else if records.iter().all(|r| r.verdict == Verdict::Supported) {
        Verdict::Supported
    } else {
        Verdict::Inconclusive
    };
    Ok(SkyVerdict {
        relation,
        midpoint,
        records,
        verdict,
        counterexample,
    })
}

/// Adjoins `{n : g(π(n)) < f(n)}` and re-certifies the finite intersection
/// property at `arity`.
pub fn extend_good(
    base: &FilterBase,
    pi: &FuncSpec,
    f: &FuncSpec,
    g: &FuncSpec,
    arity: usize,
) -> Result<(FilterBase, FipReport)> {
    let window = below_window(pi, f, g, base.horizon())?;
    let extended = base.clone().with(format!("below:{g}"), window)?;
    let report = check_fip(&extended, arity);
    if let Some(failure) = report.failures().next() {
        return Err(Error::FipFailure {
            subfamily: failure
                .members
                .iter()
                .map(|&i| extended.generators()[i].name.clone())
                .collect(),
        });
    }
    Ok((extended, report))
}
