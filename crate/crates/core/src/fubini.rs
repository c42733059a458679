//! Sums of guessing sequences over pairs: column `i` of the sum is structure
//! `Gᵢ`, and pairs `(i, j)` are numbered by a [`PairCodec`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bits::{BitString, SetWindow};
use crate::error::{Error, Result};
use crate::guessing::GuessingStructure;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "codec", rename_all = "snake_case")]
pub enum PairCodec {
    /// `(i + j)(i + j + 1)/2 + j`.
    #[default]
    Cantor,
    /// `i · width + j` for `j < width`.
    RowMajor { width: u32 },
}

impl PairCodec {
    pub fn encode(&self, i: u64, j: u64) -> Result<u32> {
        let range = || Error::CodecRange { i, j };
        let code = match *self {
            PairCodec::Cantor => {
                let s = i.checked_add(j).ok_or_else(range)?;
                let tri = s.checked_mul(s + 1).ok_or_else(range)? / 2;
                tri.checked_add(j).ok_or_else(range)?
            }
            PairCodec::RowMajor { width } => {
                if j >= u64::from(width) {
                    return Err(range());
                }
                i.checked_mul(u64::from(width)).and_then(|r| r.checked_add(j)).ok_or_else(range)?
            }
        };
        u32::try_from(code).map_err(|_| range())
    }

    pub fn decode(&self, code: u32) -> (u64, u64) {
        let n = u64::from(code);
        match *self {
            PairCodec::Cantor => {
                // largest s with s(s+1)/2 ≤ n
                let mut s = (((8 * n + 1) as f64).sqrt() as u64).saturating_sub(1) / 2;
                while (s + 1) * (s + 2) / 2 <= n {
                    s += 1;
                }
                while s * (s + 1) / 2 > n {
                    s -= 1;
                }
                let j = n - s * (s + 1) / 2;
                (s - j, j)
            }
            PairCodec::RowMajor { width } => (n / u64::from(width), n % u64::from(width)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumStructure {
    codec: PairCodec,
    columns: Vec<GuessingStructure>,
    /// Code of every nonempty cell, with its pair.
    cells: BTreeMap<u32, (u32, u32)>,
}

pub fn build_sum(structures: Vec<GuessingStructure>, codec: PairCodec) -> Result<SumStructure> {
    if let PairCodec::RowMajor { width: 0 } = codec {
        return Err(Error::InvalidInput("row-major codec needs a positive width".into()));
    }
    let mut cells = BTreeMap::new();
    for (i, g) in structures.iter().enumerate() {
        for (j, _) in g.nonempty_levels() {
            let code = codec.encode(i as u64, u64::from(j))?;
            cells.insert(code, (i as u32, j));
        }
    }
    Ok(SumStructure {
        codec,
        columns: structures,
        cells,
    })
}

impl SumStructure {
    pub fn codec(&self) -> PairCodec {
        self.codec
    }

    pub fn columns(&self) -> &[GuessingStructure] {
        &self.columns
    }

    /// One past the largest code in use.
    pub fn horizon(&self) -> u32 {
        self.cells.keys().next_back().map_or(0, |&c| c + 1)
    }

    /// `𝒜_{(i,j)}` read through the code.
    pub fn level(&self, code: u32) -> &[BitString] {
        let (i, j) = self.codec.decode(code);
        match self.columns.get(i as usize) {
            Some(g) if j < u64::from(g.horizon()) => g.level(j as u32),
            _ => &[],
        }
    }

    pub fn max_width(&self) -> u32 {
        self.columns.iter().map(GuessingStructure::max_width).max().unwrap_or(0)
    }
}

/// `{(i, j) : X ∩ fᵢ(j) ∈ (𝒜ᵢ)ⱼ}`, found by walking the codes in use.
pub fn sum_guess_levels(sum: &SumStructure, subject: &SetWindow) -> Result<BTreeSet<(u32, u32)>> {
    if subject.horizon() < sum.max_width() {
        return Err(Error::HorizonMismatch {
            needed: u64::from(sum.max_width()),
            got: u64::from(subject.horizon()),
        });
    }
    let mut out = BTreeSet::new();
    for &code in sum.cells.keys() {
        let (i, j) = sum.codec.decode(code);
        let hit = sum.columns[i as usize]
            .level_entry(j as u32)
            .is_some_and(|level| level.guesses(subject));
        if hit {
            out.insert((i as u32, j as u32));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspec::FuncSpec;
    use crate::guessing::guess_levels;
    use crate::tree::construct_splitting_tree;

    #[test]
    fn cantor_round_trip() {
        let c = PairCodec::Cantor;
        assert_eq!(c.encode(0, 0).unwrap(), 0);
        assert_eq!(c.encode(1, 0).unwrap(), 1);
        assert_eq!(c.encode(0, 1).unwrap(), 2);
        assert_eq!(c.encode(1, 5).unwrap(), 26);
        for code in 0..5000 {
            let (i, j) = c.decode(code);
            assert_eq!(c.encode(i, j).unwrap(), code);
        }
        assert!(c.encode(1 << 20, 1 << 20).is_err());
    }

    #[test]
    fn row_major_range() {
        let c = PairCodec::RowMajor { width: 10 };
        assert_eq!(c.encode(3, 4).unwrap(), 34);
        assert_eq!(c.decode(34), (3, 4));
        assert!(matches!(c.encode(0, 10), Err(Error::CodecRange { i: 0, j: 10 })));
    }

    #[test]
    fn single_column_matches_input() {
        let (tree, _) = construct_splitting_tree(&FuncSpec::ruler(), 2, 1 << 20).unwrap();
        let g = tree.to_guessing().unwrap();
        let sum = build_sum(vec![g.clone()], PairCodec::RowMajor { width: g.horizon() }).unwrap();
        for j in 0..g.horizon() {
            assert_eq!(sum.level(j), g.level(j));
        }
    }

    #[test]
    fn ruler_columns_decode() {
        let (t0, _) = construct_splitting_tree(&FuncSpec::ruler(), 2, 1 << 20).unwrap();
        let (t1, _) = construct_splitting_tree(&FuncSpec::ruler(), 3, 1 << 20).unwrap();
        let g0 = t0.to_guessing().unwrap();
        let g1 = t1.to_guessing().unwrap();
        let sum = build_sum(vec![g0.clone(), g1.clone()], PairCodec::Cantor).unwrap();
        let code = PairCodec::Cantor.encode(1, 5).unwrap();
        assert_eq!(sum.level(code), g1.level(5));
        assert!(!sum.level(code).is_empty());

        let twice = build_sum(vec![g0.clone(), g0.clone()], PairCodec::Cantor).unwrap();
        for j in 0..g0.horizon() {
            let a = twice.level(PairCodec::Cantor.encode(0, u64::from(j)).unwrap());
            let b = twice.level(PairCodec::Cantor.encode(1, u64::from(j)).unwrap());
            assert_eq!(a, b);
        }

        let subject = SetWindow::from_members(64, [2]).unwrap();
        let got = sum_guess_levels(&twice, &subject).unwrap();
        let column: Vec<u32> = guess_levels(&g0, &subject).unwrap().hits.iter().collect();
        let expected: BTreeSet<(u32, u32)> = (0..2).flat_map(|i| column.iter().map(move |&j| (i, j))).collect();
        assert_eq!(got, expected);
        assert_eq!(column, vec![3, 9, 11]);
    }

    #[test]
    fn empty_sums() {
        let empty = GuessingStructure::new(FuncSpec::constant(0), FuncSpec::id(), 8, []).unwrap();
        let sum = build_sum(vec![empty.clone(), empty], PairCodec::Cantor).unwrap();
        assert!(sum_guess_levels(&sum, &SetWindow::full(8)).unwrap().is_empty());
        assert_eq!(sum.horizon(), 0);
    }
}
