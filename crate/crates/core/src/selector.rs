//! Selectors for partitions of `[0, H)` into intervals: sets meeting every
//! piece at most once.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::SetWindow;
use crate::error::{Error, Result};
use crate::filter::FilterBase;
use crate::rng::{fair_window, substream};

/// Consecutive intervals `[starts[k], starts[k+1])`, the last ending at the horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PartitionFile", into = "PartitionFile")]
pub struct FinitePartition {
    horizon: u32,
    starts: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionFile {
    pub horizon: u32,
    pub boundaries: Vec<u32>,
}

impl From<FinitePartition> for PartitionFile {
    fn from(p: FinitePartition) -> Self {
        PartitionFile {
            horizon: p.horizon,
            boundaries: p.starts,
        }
    }
}

impl TryFrom<PartitionFile> for FinitePartition {
    type Error = Error;

    fn try_from(file: PartitionFile) -> Result<Self> {
        FinitePartition::new(file.horizon, file.boundaries)
    }
}

impl FinitePartition {
    pub fn new(horizon: u32, starts: Vec<u32>) -> Result<Self> {
        if horizon == 0 {
            if starts.is_empty() {
                return Ok(FinitePartition { horizon, starts });
            }
            return Err(Error::InvalidInput("the empty window has no pieces".into()));
        }
        if starts.first() != Some(&0) {
            return Err(Error::InvalidInput("the first piece must start at 0".into()));
        }
        if starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!("piece boundaries not increasing: {starts:?}")));
        }
        if let Some(&last) = starts.last() {
            if last >= horizon {
                return Err(Error::OutOfHorizon {
                    value: u64::from(last),
                    horizon: u64::from(horizon),
                });
            }
        }
        Ok(FinitePartition { horizon, starts })
    }

    /// `[n², (n+1)²)` cut at the horizon.
    pub fn squares(horizon: u32) -> Self {
        let starts = (0u64..)
            .map(|n| n * n)
            .take_while(|&s| s < u64::from(horizon))
            .map(|s| s as u32)
            .collect();
        FinitePartition { horizon, starts }
    }

    pub fn singletons(horizon: u32) -> Self {
        FinitePartition {
            horizon,
            starts: (0..horizon).collect(),
        }
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn pieces(&self) -> impl Iterator<Item = Range<u32>> + '_ {
        self.starts
            .iter()
            .enumerate()
            .map(|(k, &s)| s..self.starts.get(k + 1).copied().unwrap_or(self.horizon))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorSource {
    Supplied,
    Seeded { seed: u64, trial: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorResult {
    pub selector: SetWindow,
    pub source: SelectorSource,
    /// `|X ∩ piece|` per piece.
    pub piece_hits: Vec<u32>,
}

/// Keeps `p ∩ G` for every piece `p` meeting `G` in at most one point.
pub fn extract_selector(partition: &FinitePartition, source: &SetWindow) -> Result<SelectorResult> {
    if source.horizon() != partition.horizon() {
        return Err(Error::HorizonMismatch {
            needed: u64::from(partition.horizon()),
            got: u64::from(source.horizon()),
        });
    }
    let mut selector = SetWindow::empty(partition.horizon());
    let mut piece_hits = Vec::with_capacity(partition.len());
    for piece in partition.pieces() {
        let mut inside = source.bitmap().range(piece);
        match (inside.next(), inside.next()) {
            (Some(k), None) => {
                selector.insert(k);
                piece_hits.push(1);
            }
            _ => piece_hits.push(0),
        }
    }
    Ok(SelectorResult {
        selector,
        source: SelectorSource::Supplied,
        piece_hits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorReport {
    pub seed: u64,
    pub trials: u64,
    pub pieces: usize,
    /// Trials whose selector meets every generator.
    pub meets: u64,
    pub fraction: f64,
    pub empty_selectors: u64,
    pub max_piece_hits: u32,
}

/// Runs `trials` fair-bit sources through [`extract_selector`] and counts
/// the selectors that meet every generator of `base`.
pub fn selector_vs_base(
    partition: &FinitePartition,
    base: &FilterBase,
    trials: u64,
    seed: u64,
) -> Result<SelectorReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    if base.horizon() != partition.horizon() {
        return Err(Error::HorizonMismatch {
            needed: u64::from(partition.horizon()),
            got: u64::from(base.horizon()),
        });
    }
    let outcomes: Vec<(bool, bool, u32)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let source = fair_window(&mut substream(seed, t), partition.horizon());
            let result = extract_selector(partition, &source)?;
            let meets = base
                .generators()
                .iter()
                .all(|g| !result.selector.intersection(&g.window).is_empty());
            let max_hits = result.piece_hits.iter().copied().max().unwrap_or(0);
            Ok((meets, result.selector.is_empty(), max_hits))
        })
        .collect::<Result<_>>()?;
    let meets = outcomes.iter().filter(|o| o.0).count() as u64;
    Ok(SelectorReport {
        seed,
        trials,
        pieces: partition.len(),
        meets,
        fraction: meets as f64 / trials as f64,
        empty_selectors: outcomes.iter().filter(|o| o.1).count() as u64,
        max_piece_hits: outcomes.iter().map(|o| o.2).max().unwrap_or(0),
    })
}

/// The source window a seeded trial uses.
pub fn seeded_source(horizon: u32, seed: u64, trial: u64) -> SetWindow {
    fair_window(&mut substream(seed, trial), horizon)
}
