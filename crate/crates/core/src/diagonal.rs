//! Diagonalizing against a guessing sequence: on the levels where `π` is
//! large, choose guesses whose short prefixes are pairwise different, so no
//! single subject can thread two of them.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{BitString, SetWindow};
use crate::error::{Error, Result};
use crate::guessing::GuessingStructure;

/// Widest subject space [`sweep_subjects`] enumerates.
pub const MAX_SWEEP_WIDTH: u32 = 24;

/// `n · 2^{⌊n/2⌋}`, saturating.
pub fn large_level_bound(n: u32) -> u128 {
    let shift = n / 2;
    if shift >= 120 {
        return u128::MAX;
    }
    u128::from(n).saturating_mul(1u128 << shift)
}

/// Prefix length compared at level `n`: the naturals below `n/2`.
pub fn prefix_length(n: u32) -> u32 {
    n.div_ceil(2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalCertificate {
    pub horizon: u32,
    /// `{n ≥ 1 : π(n) > n · 2^{⌊n/2⌋}}`.
    pub large_levels: SetWindow,
    pub chosen: BTreeMap<u32, BitString>,
    /// Pairs `(i, n)`, `i < n`, `n` large, whose prefixes were compared.
    pub pairs_checked: u64,
}

impl DiagonalCertificate {
    /// Re-checks that each large-level choice differs from every earlier
    /// choice on the first `⌈n/2⌉` bits.
    pub fn verify(&self) -> bool {
        self.large_levels.iter().all(|n| {
            let Some(xn) = self.chosen.get(&n) else {
                return false;
            };
            let p = prefix_length(n);
            let head = xn.cut(p);
            self.chosen.range(..n).all(|(_, xi)| xi.cut(p) != head)
        })
    }
}

/// First fit in string order at every level; on large levels the choice must
/// avoid the `⌈n/2⌉`-prefixes of all earlier choices.
pub fn diagonalize(g: &GuessingStructure) -> Result<DiagonalCertificate> {
    let horizon = g.horizon();
    let mut large = SetWindow::empty(horizon);
    for n in 1..horizon {
        if u128::from(g.pi().eval(u64::from(n))?) > large_level_bound(n) {
            large.insert(n);
        }
    }
    for n in large.iter() {
        let have = g.level(n).len();
        if have as u128 <= large_level_bound(n) {
            return Err(Error::CountingHypothesis {
                level: n,
                have,
                bound: format!("{n} * 2^{}", n / 2),
            });
        }
    }

    let mut chosen: BTreeMap<u32, BitString> = BTreeMap::new();
    let mut pairs_checked = 0u64;
    for (n, level) in g.nonempty_levels() {
        let pick = if large.contains(n) {
            let p = prefix_length(n);
            let taken: Vec<BitString> = chosen.values().map(|x| x.cut(p)).collect();
            pairs_checked += taken.len() as u64;
            level
                .members
                .iter()
                .find(|x| {
                    let head = x.cut(p);
                    !taken.contains(&head)
                })
                .ok_or_else(|| {
                    Error::Internal(format!("level {n}: every guess repeats an earlier prefix"))
                })?
        } else {
            &level.members[0]
        };
        chosen.insert(n, pick.clone());
    }
    Ok(DiagonalCertificate {
        horizon,
        large_levels: large,
        chosen,
        pairs_checked,
    })
}

/// `{n ∈ C : X ∩ |Xₙ| = Xₙ}`.
pub fn check_threadable(
    chosen: &BTreeMap<u32, BitString>,
    subject: &SetWindow,
    candidates: &SetWindow,
) -> SetWindow {
    let hits = candidates
        .iter()
        .filter(|n| chosen.get(n).is_some_and(|x| subject.prefix_equals(x)));
    let mut out = SetWindow::empty(candidates.horizon());
    for n in hits {
        out.insert(n);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub width: u32,
    pub subjects: u64,
    pub max_agreement: u32,
    /// A subject reaching `max_agreement`, as a little-endian word.
    pub worst_subject: u64,
    /// Subjects agreeing with the choices on two or more large levels.
    pub violations: u64,
}

/// Every subject `X ⊆ [0, width)`, counting the large levels it threads.
pub fn sweep_subjects(cert: &DiagonalCertificate, width: u32) -> Result<SweepReport> {
    if width > MAX_SWEEP_WIDTH {
        return Err(Error::WindowTooLarge {
            width: u64::from(width),
            limit: u64::from(MAX_SWEEP_WIDTH),
        });
    }
    let targets: Vec<(u64, u64)> = cert
        .large_levels
        .iter()
        .map(|n| {
            let x = &cert.chosen[&n];
            if x.len() > width {
                return Err(Error::HorizonMismatch {
                    needed: u64::from(x.len()),
                    got: u64::from(width),
                });
            }
            Ok(((1u64 << x.len()) - 1, x.to_word()))
        })
        .collect::<Result<_>>()?;
    let (max_agreement, worst_subject, violations) = (0..1u64 << width)
        .into_par_iter()
        .map(|w| {
            let agree = targets.iter().filter(|&&(mask, word)| w & mask == word).count() as u32;
            (agree, w, u64::from(agree >= 2))
        })
        .reduce(
            || (0, u64::MAX, 0),
            |a, b| {
                let best = if (b.0, Reverse(b.1)) > (a.0, Reverse(a.1)) { b } else { a };
                (best.0, best.1, a.2 + b.2)
            },
        );
    Ok(SweepReport {
        width,
        subjects: 1u64 << width,
        max_agreement,
        worst_subject,
        violations,
    })
}
