//! Isbell's independent family over a coded countable set.
//!
//! The ground set is all pairs `(F, 𝒢)` with `F ⊆ [0, cap)` and `𝒢 ⊆ P(F)`
//! of size at most `arity`, numbered in enumeration order. Each index set
//! `X` codes to `A_X = {(F, 𝒢) : X ∩ F ∈ 𝒢}`.

use itertools::Itertools;
use rayon::prelude::*;
use roaring::RoaringBitmap;
use serde::{Deserialize, Serialize};

use crate::bits::SetWindow;
use crate::error::{Error, Result};

pub const MAX_GROUND_CAP: u32 = 12;
pub const MAX_GROUND_SIZE: u64 = 1 << 24;

/// `(F, 𝒢)` with subsets of `[0, cap)` written as bit masks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundElement {
    pub support: u32,
    pub guesses: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsbellFamily {
    pub ground_cap: u32,
    pub arity: usize,
    pub ground: Vec<GroundElement>,
    /// Each index set restricted to `[0, cap)`.
    pub traces: Vec<u32>,
    pub members: Vec<SetWindow>,
}

fn submasks(mask: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut sub = mask;
    loop {
        out.push(sub);
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & mask;
    }
    out.reverse();
    out
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

pub fn ground_size(cap: u32, arity: usize) -> u64 {
    (0..=cap)
        .map(|size| {
            let supports = binomial(u64::from(cap), u64::from(size));
            let guess_sets: u64 = (0..=arity as u64)
                .filter(|&k| size >= 64 || k <= 1u64 << size)
                .map(|k| binomial(1u64 << size.min(63), k))
                .fold(0u64, u64::saturating_add);
            supports.saturating_mul(guess_sets)
        })
        .fold(0u64, u64::saturating_add)
}

fn trace(index: &SetWindow, cap: u32) -> u32 {
    index.iter().take_while(|&k| k < cap).fold(0, |acc, k| acc | 1 << k)
}

/// Codes each index set; index sets must differ below `ground_cap`.
pub fn isbell_family(ground_cap: u32, indices: &[SetWindow], arity: usize) -> Result<IsbellFamily> {
    if ground_cap > MAX_GROUND_CAP {
        return Err(Error::WindowTooLarge {
            width: u64::from(ground_cap),
            limit: u64::from(MAX_GROUND_CAP),
        });
    }
    let size = ground_size(ground_cap, arity);
    if size > MAX_GROUND_SIZE {
        return Err(Error::WindowTooLarge {
            width: size,
            limit: MAX_GROUND_SIZE,
        });
    }
    let traces: Vec<u32> = indices.iter().map(|x| trace(x, ground_cap)).collect();
    if let Some((a, b)) = (0..traces.len())
        .tuple_combinations()
        .find(|&(a, b)| traces[a] == traces[b])
    {
        return Err(Error::InvalidInput(format!(
            "index sets {a} and {b} agree below {ground_cap}, so their coded sets coincide"
        )));
    }

    let mut ground = Vec::with_capacity(size as usize);
    for support in 0..1u32 << ground_cap {
        let subs = submasks(support);
        for k in 0..=arity.min(subs.len()) {
            for guesses in subs.iter().copied().combinations(k) {
                ground.push(GroundElement { support, guesses });
            }
        }
    }
    let horizon = u32::try_from(ground.len()).map_err(|_| Error::WindowTooLarge {
        width: ground.len() as u64,
        limit: u64::from(u32::MAX),
    })?;
    let members = traces
        .iter()
        .map(|&t| {
            SetWindow::from_predicate(horizon, |code| {
                let e = &ground[code as usize];
                e.guesses.binary_search(&(t & e.support)).is_ok()
            })
        })
        .collect();
    Ok(IsbellFamily {
        ground_cap,
        arity,
        ground,
        traces,
        members,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Combination {
    pub members: Vec<usize>,
    pub complements: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub arity: usize,
    pub ground_size: u32,
    pub checked: u64,
    pub empty: Vec<Combination>,
}

impl IndependenceReport {
    pub fn passes(&self) -> bool {
        self.empty.is_empty()
    }
}

impl IsbellFamily {
    pub fn horizon(&self) -> u32 {
        self.ground.len() as u32
    }

    /// `⋂_{i∈I} A_i ∩ ⋂_{j∈J} A_j^c`.
    pub fn combination(&self, members: &[usize], complements: &[usize]) -> RoaringBitmap {
        let mut acc = match members.split_first() {
            Some((&first, rest)) => rest
                .iter()
                .fold(self.members[first].bitmap().clone(), |acc, &i| acc & self.members[i].bitmap()),
            None => {
                let mut all = RoaringBitmap::new();
                all.insert_range(0..self.horizon());
                all
            }
        };
        for &j in complements {
            acc -= self.members[j].bitmap();
        }
        acc
    }
}

/// Every split of every set of at most `arity` distinct indices into
/// members and complements, the empty combination included.
pub fn check_independence(family: &IsbellFamily, arity: usize) -> IndependenceReport {
    let n = family.members.len();
    let combos: Vec<Combination> = (0..=arity.min(n))
        .flat_map(|k| (0..n).combinations(k))
        .flat_map(|chosen| {
            let k = chosen.len();
            (0..1u32 << k).map(move |signs| {
                let (members, complements): (Vec<usize>, Vec<usize>) =
                    chosen.iter().enumerate().partition_map(|(pos, &i)| {
                        if signs >> pos & 1 == 1 {
                            itertools::Either::Left(i)
                        } else {
                            itertools::Either::Right(i)
                        }
                    });
                Combination { members, complements }
            })
        })
        .collect();
    let checked = combos.len() as u64;
    let empty: Vec<Combination> = combos
        .into_par_iter()
        .filter(|c| family.combination(&c.members, &c.complements).is_empty())
        .collect();
    IndependenceReport {
        arity,
        ground_size: family.horizon(),
        checked,
        empty,
    }
}
