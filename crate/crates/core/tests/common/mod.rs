//! Brute-force reference implementations shared by the integration tests.
//! They recompute everything from raw level contents with plain loops and
//! pairwise comparisons, without going through the library's helpers.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ultraguess::tree::PseudoTree;
use ultraguess::{BitString, GuessingStructure, SetWindow};

/// A binary string as its length and sorted one-positions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Str {
    pub len: u32,
    pub ones: Vec<u32>,
}

impl Str {
    pub fn of(s: &BitString) -> Self {
        Str {
            len: s.len(),
            ones: s.ones().to_vec(),
        }
    }

    pub fn root() -> Self {
        Str { len: 0, ones: Vec::new() }
    }

    pub fn ones_below(&self, k: u32) -> &[u32] {
        &self.ones[..self.ones.partition_point(|&x| x < k)]
    }

    pub fn is_prefix_of(&self, other: &Str) -> bool {
        self.len <= other.len && other.ones_below(self.len) == self.ones.as_slice()
    }

    pub fn comparable(&self, other: &Str) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }
}

/// A subset of the naturals as sorted members; read as an infinite 0/1 string.
pub fn subject_starts_with(subject: &[u32], s: &Str) -> bool {
    subject[..subject.partition_point(|&x| x < s.len)] == *s.ones
}

pub fn members(w: &SetWindow) -> Vec<u32> {
    w.iter().collect()
}

pub fn ruler(n: u64) -> u64 {
    let mut x = n + 1;
    let mut r = 0;
    while x % 2 == 0 {
        x /= 2;
        r += 1;
    }
    r
}

pub type Node = (u32, Str);

pub fn nodes(tree: &PseudoTree) -> Vec<Node> {
    tree.nonempty_levels()
        .flat_map(|(k, level)| level.iter().map(move |s| (k, Str::of(s))))
        .collect()
}

fn is_root(x: &Node) -> bool {
    x.0 == 0 && x.1.len == 0
}

/// `y` extends `x`: higher level and `x ⊑ y`. The root `(0, ε)` sits below everything.
pub fn extends(x: &Node, y: &Node) -> bool {
    if is_root(x) {
        return !is_root(y);
    }
    y.0 > x.0 && x.1.is_prefix_of(&y.1)
}

pub fn maximal(set: &[Node]) -> Vec<Node> {
    set.iter()
        .filter(|x| !set.iter().any(|y| extends(x, y)))
        .cloned()
        .collect()
}

pub fn branches_in(x: &Node, set: &[Node]) -> bool {
    let ext: Vec<&Node> = set.iter().filter(|y| extends(x, y)).collect();
    ext.iter()
        .enumerate()
        .any(|(i, a)| ext[i + 1..].iter().any(|b| !a.1.comparable(&b.1)))
}

/// `S_n`: nodes on levels below `m_n`.
pub fn stage_set(all: &[Node], mark: u32) -> Vec<Node> {
    all.iter().filter(|(k, _)| *k < mark).cloned().collect()
}

/// Maximal nodes of `S_n`; the empty string stands in for `S_0 = ∅`.
pub fn stage_maximal(all: &[Node], mark: u32) -> Vec<Node> {
    let set = stage_set(all, mark);
    if set.is_empty() {
        return vec![(0, Str::root())];
    }
    maximal(&set)
}

/// Re-checks the six stage conditions of the inductive construction from
/// the tree's levels and marks. Returns one message per violation.
pub fn stage_conditions(tree: &PseudoTree, pi: impl Fn(u64) -> u64) -> Vec<String> {
    let all = nodes(tree);
    let marks = tree.stage_marks();
    let mut errors = Vec::new();
    if marks.first() != Some(&0) {
        errors.push("m_0 is not 0".into());
    }
    for n in 0..marks.len() {
        let s_n = stage_set(&all, marks[n]);
        // (i) S_n ⊆ 2^{≤ m_n}, with level-k nodes of length k
        if let Some((k, _)) = s_n.iter().find(|(k, s)| s.len > marks[n] || s.len != *k) {
            errors.push(format!("(i) stage {n}: node at level {k} has the wrong length"));
        }
        // (ii) marks increase, so S_n is the restriction of every later S_m
        if n > 0 && marks[n] <= marks[n - 1] {
            errors.push(format!("(ii) m_{n} does not increase"));
        }
        // (iii) at most π(k) nodes per level below m_n
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for (k, _) in &s_n {
            *counts.entry(*k).or_default() += 1;
        }
        for (k, c) in counts {
            if c > pi(u64::from(k)) {
                errors.push(format!("(iii) level {k} has {c} nodes"));
            }
        }
    }
    for n in 0..marks.len().saturating_sub(1) {
        let after = stage_set(&all, marks[n + 1]);
        let tops = stage_maximal(&all, marks[n]);
        let added: Vec<&Node> = after.iter().filter(|x| x.0 >= marks[n]).collect();
        // (iv) new nodes sit above maximal nodes of S_n
        for t in &added {
            if !tops.iter().any(|s| extends(s, t)) {
                errors.push(format!("(iv) stage {n}: new node at level {} above no maximal node", t.0));
            }
        }
        if n % 2 == 0 {
            // (v) every maximal node branches
            for s in &tops {
                if !branches_in(s, &after) {
                    errors.push(format!("(v) stage {n}: maximal node at level {} does not branch", s.0));
                }
            }
        } else {
            // (vi) no maximal node branches, and every set of them is met together
            for s in &tops {
                if branches_in(s, &after) {
                    errors.push(format!("(vi) stage {n}: maximal node at level {} branches", s.0));
                }
            }
            let used: BTreeSet<u32> = added.iter().map(|t| t.0).collect();
            let masks: Vec<(u64, u64)> = used
                .into_iter()
                .map(|k| {
                    let mask = tops.iter().enumerate().fold(0u64, |acc, (i, s)| {
                        let hit = added.iter().any(|y| y.0 == k && extends(s, y));
                        acc | (u64::from(hit) << i)
                    });
                    (mask, pi(u64::from(k)))
                })
                .collect();
            for f in 1u64..1 << tops.len() {
                let size = u64::from(f.count_ones());
                if !masks.iter().any(|&(m, p)| m & f == f && size <= p) {
                    errors.push(format!("(vi) stage {n}: subset {f:b} never met together"));
                }
            }
        }
    }
    errors
}

/// `{k : r↾k ∈ 𝓛ₖ}` as a sorted list.
pub fn hit_levels(all: &[Node], branch: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = all
        .iter()
        .filter(|(_, s)| subject_starts_with(branch, s))
        .map(|(k, _)| *k)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub fn by_level(all: &[Node]) -> BTreeMap<u32, BTreeSet<Str>> {
    let mut out: BTreeMap<u32, BTreeSet<Str>> = BTreeMap::new();
    for (k, s) in all {
        out.entry(*k).or_default().insert(s.clone());
    }
    out
}

pub fn trace(branch: &[u32], k: u32) -> Str {
    Str {
        len: k,
        ones: branch[..branch.partition_point(|&x| x < k)].to_vec(),
    }
}

/// Levels `m` at which the level is exactly the set of restrictions.
pub fn exact_levels(levels: &BTreeMap<u32, BTreeSet<Str>>, family: &[Vec<u32>]) -> Vec<u32> {
    levels
        .iter()
        .filter(|(k, level)| {
            let traces: BTreeSet<Str> = family.iter().map(|r| trace(r, **k)).collect();
            traces == **level
        })
        .map(|(k, _)| *k)
        .collect()
}

/// Levels at which a structure guesses the subject, by direct comparison.
pub fn guessed_levels(g: &GuessingStructure, subject: &[u32]) -> BTreeSet<u32> {
    g.nonempty_levels()
        .filter(|(_, level)| level.members.iter().any(|s| subject_starts_with(subject, &Str::of(s))))
        .map(|(n, _)| n)
        .collect()
}

/// Number of `width`-bit subjects guessed somewhere in `[from, to)`.
pub fn enumerate_measure(g: &GuessingStructure, from: u32, to: u32, width: u32) -> u64 {
    let levels: Vec<Vec<Str>> = g
        .nonempty_levels()
        .filter(|(n, _)| *n >= from && *n < to)
        .map(|(_, level)| level.members.iter().map(Str::of).collect())
        .collect();
    (0..1u64 << width)
        .filter(|w| {
            let subject: Vec<u32> = (0..width).filter(|i| w >> i & 1 == 1).collect();
            levels.iter().any(|l| l.iter().any(|s| subject_starts_with(&subject, s)))
        })
        .count() as u64
}

/// Merge intersection of sorted lists.
pub fn intersect_sorted(lists: &[&[u32]]) -> Vec<u32> {
    let Some((first, rest)) = lists.split_first() else {
        return Vec::new();
    };
    let mut acc: Vec<u32> = first.to_vec();
    for list in rest {
        let (mut i, mut j) = (0, 0);
        let mut next = Vec::new();
        while i < acc.len() && j < list.len() {
            match acc[i].cmp(&list[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    next.push(acc[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        acc = next;
    }
    acc
}

/// All index subsets of `0..n` with sizes in `1..=max`, by plain recursion.
pub fn subsets_up_to(n: usize, max: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == max {
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, max, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, max, &mut Vec::new(), &mut out);
    out
}
