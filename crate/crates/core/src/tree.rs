//! Perfect-(π, f)-splitting pseudo-trees.
//!
//! A pseudo-tree is an arbitrary set of binary strings grouped by level:
//! level `k` holds strings of length `f(k)`. Node `y` extends node `x` when
//! `y` sits on a higher level and `t_x ⊑ t_y`. The constructor here builds,
//! stage by stage, a tree in which every node branches and every finite set
//! of branches is guessed exactly at some level of each odd stage.
//!
//! Construction (f = id), starting from a virtual empty root with `m₀ = 0`:
//!
//! * even stage `n`: above every maximal node `s` put `s0…0` and `s0…01` on
//!   the smallest unused level `k ≥ mₙ`, `k > |s|`, with `π(k) ≥ 2`;
//!   `mₙ₊₁` is one past the last level used.
//! * odd stage `n` with maximal nodes `s₁ … s_d`: `mₙ₊₁` is the least `m`
//!   with `π(m) ≥ d` such that `[mₙ, m)` holds `C(d, j)` levels of value
//!   exactly `j` for every `1 ≤ j ≤ d`. Each `sᵢ` is zero-padded to
//!   `yᵢ ∈ 2^{mₙ₊₁}` and every nonempty `F ⊆ {1..d}` gets its own level
//!   `k_F` with `𝓛_{k_F} = {yᵢ↾k_F : i ∈ F}`. If no such `m` exists below
//!   the cap, the search falls back to `π(k_F) ≥ |F|` and flags the stage.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::bits::{BitString, SetWindow};
use crate::error::{Error, Result};
use crate::funcspec::FuncSpec;
use crate::guessing::{width_at, GuessingStructure};

/// Odd stages enumerate all `2^d - 1` subsets of maximal nodes.
pub const MAX_ODD_STAGE_WIDTH: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "TreeFile", try_from = "TreeFile")]
pub struct PseudoTree {
    pi: FuncSpec,
    f: FuncSpec,
    horizon: u32,
    levels: BTreeMap<u32, Vec<BitString>>,
    stage_marks: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeFile {
    pub horizon: u32,
    pub pi: FuncSpec,
    pub f: FuncSpec,
    pub stage_marks: Vec<u32>,
    pub levels: BTreeMap<u32, Vec<BitString>>,
}

impl From<PseudoTree> for TreeFile {
    fn from(t: PseudoTree) -> Self {
        TreeFile {
            horizon: t.horizon,
            pi: t.pi,
            f: t.f,
            stage_marks: t.stage_marks,
            levels: t.levels,
        }
    }
}

impl TryFrom<TreeFile> for PseudoTree {
    type Error = Error;

    fn try_from(file: TreeFile) -> Result<Self> {
        PseudoTree::from_levels(file.pi, file.f, file.horizon, file.levels, file.stage_marks)
    }
}

impl PseudoTree {
    /// Checks lengths, distinctness and marks. Level sizes are not checked
    /// here; [`verify_splitting`] reports them.
    pub fn from_levels(
        pi: FuncSpec,
        f: FuncSpec,
        horizon: u32,
        levels: impl IntoIterator<Item = (u32, Vec<BitString>)>,
        stage_marks: Vec<u32>,
    ) -> Result<Self> {
        if stage_marks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStructure(format!(
                "stage marks not strictly increasing: {stage_marks:?}"
            )));
        }
        if let Some(&last) = stage_marks.last() {
            if last > horizon {
                return Err(Error::OutOfHorizon {
                    value: u64::from(last),
                    horizon: u64::from(horizon),
                });
            }
        }
        let mut out = BTreeMap::new();
        for (k, mut nodes) in levels {
            if k >= horizon {
                return Err(Error::OutOfHorizon {
                    value: u64::from(k),
                    horizon: u64::from(horizon),
                });
            }
            let width = width_at(&f, k)?;
            nodes.sort_unstable();
            let before = nodes.len();
            nodes.dedup();
            if nodes.len() != before {
                return Err(Error::InvalidStructure(format!("level {k} repeats a node")));
            }
            if let Some(bad) = nodes.iter().find(|s| s.len() != width) {
                return Err(Error::InvalidStructure(format!(
                    "level {k}: node {bad} has length {}, f({k}) = {width}",
                    bad.len()
                )));
            }
            if !nodes.is_empty() && out.insert(k, nodes).is_some() {
                return Err(Error::InvalidStructure(format!("level {k} listed twice")));
            }
        }
        Ok(PseudoTree {
            pi,
            f,
            horizon,
            levels: out,
            stage_marks,
        })
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

    pub fn stage_marks(&self) -> &[u32] {
        &self.stage_marks
    }

    pub fn level(&self, k: u32) -> &[BitString] {
        self.levels.get(&k).map_or(&[], Vec::as_slice)
    }

    pub fn nonempty_levels(&self) -> impl Iterator<Item = (u32, &[BitString])> + '_ {
        self.levels.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn node_count(&self) -> usize {
        self.levels.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `mₙ` for the last even stage: every node below it has branched.
    pub fn branching_frontier(&self) -> u32 {
        let stages = self.stage_marks.len().saturating_sub(1);
        if stages == 0 {
            return 0;
        }
        self.stage_marks[(stages - 1) & !1]
    }

    /// Nodes as `(level, string)` in level order.
    pub fn nodes(&self) -> impl Iterator<Item = (u32, &BitString)> + '_ {
        self.levels
            .iter()
            .flat_map(|(&k, nodes)| nodes.iter().map(move |s| (k, s)))
    }

    /// Nodes with no extension on a higher level, in level order.
    pub fn maximal_nodes(&self) -> Vec<(u32, BitString)> {
        let mut sorted: Vec<(&BitString, u32)> = self.nodes().map(|(k, s)| (s, k)).collect();
        sorted.sort_unstable();
        // Extensions of s form a contiguous run right after s in string order.
        let mut out = Vec::new();
        for (i, &(s, k)) in sorted.iter().enumerate() {
            let extended = sorted[i + 1..]
                .iter()
                .take_while(|(t, _)| s.is_prefix_of(t))
                .any(|&(_, kt)| kt > k);
            if !extended {
                out.push((k, s.clone()));
            }
        }
        out.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        out
    }

    /// The tree read as a guessing sequence, `𝒜ₙ = 𝓛ₙ`.
    pub fn to_guessing(&self) -> Result<GuessingStructure> {
        GuessingStructure::new(
            self.pi.clone(),
            self.f.clone(),
            self.horizon,
            self.levels.iter().map(|(&k, v)| (k, v.clone())),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// `k_F` for one nonempty subset `F` of the stage's maximal nodes (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub subset: Vec<usize>,
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: usize,
    pub parity: Parity,
    pub mark_start: u32,
    pub mark_end: u32,
    pub maximal_before: Vec<BitString>,
    pub added_levels: Vec<u32>,
    pub added_nodes: usize,
    pub allocation: Vec<Allocation>,
    /// False when an odd stage had to settle for `π(k_F) ≥ |F|`.
    pub exact_allocation: bool,
    pub maximal_after: Vec<BitString>,
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

fn saturate(v: u64) -> u8 {
    v.min(u64::from(u8::MAX)) as u8
}

/// Builds the first `stages` stages (stage 0 is even) with every mark at most `cap`.
pub fn construct_splitting_tree(
    pi: &FuncSpec,
    stages: usize,
    cap: u32,
) -> Result<(PseudoTree, Vec<StageLog>)> {
    let mut levels: BTreeMap<u32, Vec<BitString>> = BTreeMap::new();
    let mut marks = vec![0u32];
    let mut maximal = vec![BitString::zeros(0)];
    let mut logs = Vec::with_capacity(stages);

    for stage in 0..stages {
        let start = *marks.last().expect("m0");
        let log = if stage % 2 == 0 {
            even_stage(pi, stage, start, cap, &maximal, &mut levels)?
        } else {
            odd_stage(pi, stage, start, cap, &maximal, &mut levels)?
        };
        marks.push(log.mark_end);
        maximal = log.maximal_after.clone();
        logs.push(log);
    }

    let horizon = *marks.last().expect("marks");
    let tree = PseudoTree {
        pi: pi.clone(),
        f: FuncSpec::id(),
        horizon,
        levels,
        stage_marks: marks,
    };
    Ok((tree, logs))
}

fn even_stage(
    pi: &FuncSpec,
    stage: usize,
    start: u32,
    cap: u32,
    maximal: &[BitString],
    levels: &mut BTreeMap<u32, Vec<BitString>>,
) -> Result<StageLog> {
    let mut cursor = start;
    let mut added_levels = Vec::new();
    let mut children = Vec::new();
    for (i, s) in maximal.iter().enumerate() {
        let mut k = cursor.max(s.len() + 1);
        loop {
            if k >= cap {
                return Err(Error::HorizonExhausted {
                    stage,
                    cap,
                    demand: format!("an empty level with pi >= 2 above maximal node {i}"),
                });
            }
            if pi.eval(u64::from(k))? >= 2 {
                break;
            }
            k += 1;
        }
        let low = s.cut(k);
        let high = low.with_bit(k - 1);
        levels.insert(k, vec![low.clone(), high.clone()]);
        children.push(low);
        children.push(high);
        added_levels.push(k);
        cursor = k + 1;
    }
    children.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(StageLog {
        stage,
        parity: Parity::Even,
        mark_start: start,
        mark_end: cursor.max(start + 1),
        maximal_before: maximal.to_vec(),
        added_nodes: children.len(),
        added_levels,
        allocation: Vec::new(),
        exact_allocation: true,
        maximal_after: children,
    })
}

/// Scans `m = start, start+1, …` for the least admissible `mₙ₊₁`; returns it
/// together with the saturated `π` values of `[start, m)`.
fn search_mark(
    pi: &FuncSpec,
    start: u32,
    cap: u32,
    d: usize,
    exact: bool,
) -> Result<Option<(u32, Vec<u8>)>> {
    // need[j]: levels that must be available for sets of size j (exact), or
    // for sets of size ≥ j (fallback, Hall's condition on nested demands).
    let need: Vec<u64> = (0..=d)
        .map(|j| match j {
            0 => 0,
            _ if exact => binomial(d, j),
            _ => (j..=d).map(|i| binomial(d, i)).sum(),
        })
        .collect();
    let mut have = vec![0u64; d + 1];
    let mut unmet = d;
    let mut values = Vec::new();
    for m in start..cap {
        let v = pi.eval(u64::from(m))?;
        if unmet == 0 && v >= d as u64 {
            return Ok(Some((m, values)));
        }
        values.push(saturate(v));
        let bump = |j: usize, have: &mut [u64], unmet: &mut usize| {
            have[j] += 1;
            if have[j] == need[j] {
                *unmet -= 1;
            }
        };
        if exact {
            if (1..=d as u64).contains(&v) {
                bump(v as usize, &mut have, &mut unmet);
            }
        } else {
            for j in 1..=d.min(v as usize) {
                bump(j, &mut have, &mut unmet);
            }
        }
    }
    Ok(None)
}

fn odd_stage(
    pi: &FuncSpec,
    stage: usize,
    start: u32,
    cap: u32,
    maximal: &[BitString],
    levels: &mut BTreeMap<u32, Vec<BitString>>,
) -> Result<StageLog> {
    let d = maximal.len();
    if d > MAX_ODD_STAGE_WIDTH {
        return Err(Error::InvalidInput(format!(
            "stage {stage} has {d} maximal nodes; at most {MAX_ODD_STAGE_WIDTH} are supported"
        )));
    }
    let (exact, (mark, values)) = match search_mark(pi, start, cap, d, true)? {
        Some(found) => (true, found),
        None => match search_mark(pi, start, cap, d, false)? {
            Some(found) => (false, found),
            None => {
                return Err(Error::HorizonExhausted {
                    stage,
                    cap,
                    demand: format!(
                        "for each 1 <= i <= {d}, C({d}, i) levels with pi >= i in [{start}, m) and pi(m) >= {d}"
                    ),
                })
            }
        },
    };

    let padded: Vec<BitString> = maximal.iter().map(|s| s.cut(mark)).collect();
    let mut used = vec![false; values.len()];
    let mut allocation = Vec::with_capacity((1usize << d) - 1);
    for size in (1..=d).rev() {
        let mut cursor = 0usize;
        for subset in (0..d).combinations(size) {
            let fits = |v: u8| {
                if exact {
                    usize::from(v) == size
                } else {
                    usize::from(v) >= size
                }
            };
            while cursor < values.len() && (used[cursor] || !fits(values[cursor])) {
                cursor += 1;
            }
            // The mark search guarantees enough levels for every size class.
            let slot = cursor;
            if slot >= values.len() {
                return Err(Error::Internal(format!(
                    "stage {stage}: allocation ran out of levels for |F| = {size}"
                )));
            }
            used[slot] = true;
            allocation.push(Allocation {
                subset,
                level: start + slot as u32,
            });
        }
    }

    let mut top = vec![start; d];
    let mut added_levels = Vec::with_capacity(allocation.len());
    let mut added_nodes = 0;
    for a in &allocation {
        let mut nodes: Vec<BitString> = a.subset.iter().map(|&i| padded[i].cut(a.level)).collect();
        nodes.sort_unstable();
        added_nodes += nodes.len();
        levels.insert(a.level, nodes);
        added_levels.push(a.level);
        for &i in &a.subset {
            top[i] = top[i].max(a.level);
        }
    }
    added_levels.sort_unstable();
    let mut maximal_after: Vec<BitString> = padded.iter().zip(&top).map(|(y, &k)| y.cut(k)).collect();
    maximal_after.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    Ok(StageLog {
        stage,
        parity: Parity::Odd,
        mark_start: start,
        mark_end: mark,
        maximal_before: maximal.to_vec(),
        added_levels,
        added_nodes,
        allocation,
        exact_allocation: exact,
        maximal_after,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalityViolation {
    pub level: u32,
    pub size: usize,
    pub bound: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchingFailure {
    pub level: u32,
    pub node: BitString,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplittingReport {
    pub horizon: u32,
    pub safety_frontier: u32,
    pub cardinality_violations: Vec<CardinalityViolation>,
    /// Levels `k < H` with `|𝓛ₖ| < π(k)`: the strict-equality reading fails there.
    pub equality_shortfalls: u64,
    pub branching_failures: Vec<BranchingFailure>,
    pub checked_nodes: usize,
    pub indeterminate_nodes: usize,
}

impl SplittingReport {
    pub fn passes(&self) -> bool {
        self.cardinality_violations.is_empty() && self.branching_failures.is_empty()
    }
}

/// Checks `|𝓛ₖ| ≤ π(k)` everywhere and branching below `safety_frontier`.
/// Nodes on or above the frontier are counted as indeterminate.
pub fn verify_splitting(tree: &PseudoTree, safety_frontier: u32) -> Result<SplittingReport> {
    let frontier = safety_frontier.min(tree.horizon);
    let mut cardinality_violations = Vec::new();
    let mut equality_shortfalls = 0u64;
    for k in 0..tree.horizon {
        let size = tree.level(k).len();
        let bound = tree.pi.eval(u64::from(k))?;
        if size as u64 > bound {
            cardinality_violations.push(CardinalityViolation { level: k, size, bound });
        } else if (size as u64) < bound {
            equality_shortfalls += 1;
        }
    }

    let nodes: Vec<(u32, &BitString)> = tree.nodes().collect();
    let mut branching_failures = Vec::new();
    let mut checked_nodes = 0;
    for (idx, &(k, s)) in nodes.iter().enumerate() {
        if k >= frontier {
            continue;
        }
        checked_nodes += 1;
        if !branches(&nodes[idx + 1..], k, s) {
            branching_failures.push(BranchingFailure {
                level: k,
                node: s.clone(),
            });
        }
    }
    Ok(SplittingReport {
        horizon: tree.horizon,
        safety_frontier: frontier,
        cardinality_violations,
        equality_shortfalls,
        branching_failures,
        checked_nodes,
        indeterminate_nodes: nodes.len() - checked_nodes,
    })
}

/// `later` is in level order. The extensions of `s` form a chain exactly
/// when each one extends the previous, so the first break is a witness pair.
fn branches(later: &[(u32, &BitString)], level: u32, s: &BitString) -> bool {
    let mut previous: Option<(u32, &BitString)> = None;
    for &(k, t) in later {
        if k <= level || !s.is_prefix_of(t) {
            continue;
        }
        if let Some((pk, p)) = previous {
            if !(pk < k && p.is_prefix_of(t)) {
                return true;
            }
        }
        previous = Some((k, t));
    }
    false
}

/// An element of `2^H` standing for a branch through the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSample {
    pub bits: SetWindow,
}

impl BranchSample {
    pub fn new(bits: SetWindow) -> Self {
        BranchSample { bits }
    }

    pub fn restrict(&self, k: u32) -> Result<BitString> {
        self.bits.prefix(k)
    }

    pub fn passes_through(&self, node: &BitString) -> bool {
        self.bits.prefix_equals(node)
    }
}

/// One branch per maximal node: the node zero-extended to the horizon.
pub fn frontier_branches(tree: &PseudoTree) -> Result<Vec<BranchSample>> {
    tree.maximal_nodes()
        .iter()
        .map(|(_, s)| SetWindow::from_bitstring(tree.horizon, s).map(BranchSample::new))
        .collect()
}

/// `{m < H : r↾f(m) ∈ 𝓛ₘ}`.
pub fn branch_hits(tree: &PseudoTree, branch: &BranchSample) -> Result<SetWindow> {
    let hits = tree
        .nonempty_levels()
        .filter(|(_, nodes)| nodes.iter().any(|s| branch.passes_through(s)))
        .map(|(k, _)| k);
    SetWindow::from_members(tree.horizon, hits)
}

/// Per-branch hit sets, reused across many subsets of one branch family.
pub struct StarIndex<'a> {
    tree: &'a PseudoTree,
    branches: &'a [BranchSample],
    hits: Vec<SetWindow>,
}

impl<'a> StarIndex<'a> {
    pub fn new(tree: &'a PseudoTree, branches: &'a [BranchSample]) -> Result<Self> {
        let hits = branches
            .iter()
            .map(|b| branch_hits(tree, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(StarIndex { tree, branches, hits })
    }

    pub fn hits(&self, i: usize) -> &SetWindow {
        &self.hits[i]
    }

    /// Levels `m` with `𝓛ₘ = {r↾f(m) : r ∈ subset}` exactly.
    pub fn exact_levels(&self, subset: &[usize]) -> Result<Vec<u32>> {
        let Some((&first, rest)) = subset.split_first() else {
            return Ok(Vec::new());
        };
        let common = rest
            .iter()
            .fold(self.hits[first].clone(), |acc, &i| acc.intersection(&self.hits[i]));
        let mut out = Vec::new();
        for m in common.iter() {
            let level = self.tree.level(m);
            let width = level[0].len();
            let mut traces = subset
                .iter()
                .map(|&i| self.branches[i].restrict(width))
                .collect::<Result<Vec<_>>>()?;
            traces.sort_unstable();
            traces.dedup();
            // Every trace is already in the level, so equal counts mean equal sets.
            if traces.len() == level.len() {
                out.push(m);
            }
        }
        Ok(out)
    }
}

/// Levels at which exactly the restrictions of `family` make up the level.
pub fn verify_star(tree: &PseudoTree, family: &[BranchSample]) -> Result<Vec<u32>> {
    let index = StarIndex::new(tree, family)?;
    let all: Vec<usize> = (0..family.len()).collect();
    index.exact_levels(&all)
}

/// Drops every node through which fewer than `min_support` sample branches pass.
pub fn prune_thin(tree: &PseudoTree, sample: &[BranchSample], min_support: usize) -> PseudoTree {
    let levels = tree
        .levels
        .iter()
        .map(|(&k, nodes)| {
            let kept: Vec<BitString> = nodes
                .iter()
                .filter(|s| sample.iter().filter(|r| r.passes_through(s)).count() >= min_support)
                .cloned()
                .collect();
            (k, kept)
        })
        .filter(|(_, v)| !v.is_empty())
        .collect();
    PseudoTree {
        pi: tree.pi.clone(),
        f: tree.f.clone(),
        horizon: tree.horizon,
        levels,
        stage_marks: tree.stage_marks.clone(),
    }
}

/// Finds `p′ ⊒ p` and a target level `m` with `p′ ∉ 𝓛ₘ`, `|p′| = f(m)`.
///
/// At the first target level wide enough for `π(m) + 1` distinct extensions
/// of `p`, those extensions are tried in order (`j` written little-endian
/// into the free bits); at most `π(m)` of them can be occupied.
pub fn avoid_level_extension(
    tree: &PseudoTree,
    p: &BitString,
    target_levels: &SetWindow,
) -> Result<(BitString, u32)> {
    for m in target_levels.iter().filter(|&m| m < tree.horizon) {
        let width = width_at(&tree.f, m)?;
        if width < p.len() {
            continue;
        }
        let free = width - p.len();
        let slots = tree.pi.eval(u64::from(m))?;
        if free < 64 && slots >= 1u64 << free {
            continue;
        }
        let occupied = tree.level(m);
        let base = p.cut(width);
        for j in 0..=slots {
            let candidate = (0..free.min(64))
                .filter(|b| j >> b & 1 == 1)
                .fold(base.clone(), |acc, b| acc.with_bit(p.len() + b));
            if occupied.binary_search(&candidate).is_err() {
                return Ok((candidate, m));
            }
        }
    }
    Err(Error::NoAdmissibleLevel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn ruler_tree(stages: usize) -> (PseudoTree, Vec<StageLog>) {
        construct_splitting_tree(&FuncSpec::ruler(), stages, 1 << 20).unwrap()
    }

    #[test]
    fn first_even_stage_from_the_root() {
        let (tree, logs) = ruler_tree(1);
        assert_eq!(tree.level(3), &[bs("000"), bs("001")]);
        assert_eq!(tree.stage_marks(), &[0, 4]);
        assert_eq!(logs[0].added_levels, vec![3]);
        assert_eq!(tree.node_count(), 2);
    }

    #[test]
    fn first_odd_stage_allocation() {
        let (tree, logs) = ruler_tree(2);
        let odd = &logs[1];
        assert!(odd.exact_allocation);
        let alloc: Vec<(Vec<usize>, u32)> =
            odd.allocation.iter().map(|a| (a.subset.clone(), a.level)).collect();
        assert_eq!(alloc, vec![(vec![0, 1], 11), (vec![0], 5), (vec![1], 9)]);
        assert_eq!(tree.stage_marks(), &[0, 4, 15]);
        assert_eq!(tree.level(5), &[bs("00000")]);
        assert_eq!(tree.level(9), &[bs("001000000")]);
        assert_eq!(tree.level(11), &[bs("00000000000"), bs("00100000000")]);
    }

    #[test]
    fn degenerate_pi_exhausts_the_horizon() {
        let err = construct_splitting_tree(&FuncSpec::constant(0), 1, 1000).unwrap_err();
        assert!(matches!(err, Error::HorizonExhausted { stage: 0, .. }));
        // pi = 1 everywhere: the even stage cannot branch either
        assert!(construct_splitting_tree(&FuncSpec::constant(1), 3, 1000).is_err());
    }

    #[test]
    fn fallback_allocation_is_flagged() {
        // pi = 2 everywhere: sets of size 1 cannot find levels of value exactly 1.
        let (tree, logs) = construct_splitting_tree(&FuncSpec::constant(2), 2, 1000).unwrap();
        assert!(!logs[1].exact_allocation);
        assert!(verify_splitting(&tree, 0).unwrap().passes());
    }

    #[test]
    fn verify_examples() {
        let (tree, _) = ruler_tree(6);
        let report = verify_splitting(&tree, tree.branching_frontier()).unwrap();
        assert!(report.passes(), "{report:?}");
        assert!(report.checked_nodes > 0);

        let bad = PseudoTree::from_levels(
            FuncSpec::ruler(),
            FuncSpec::id(),
            8,
            [(3, vec![bs("000"), bs("001"), bs("010")])],
            vec![],
        )
        .unwrap();
        let report = verify_splitting(&bad, 0).unwrap();
        assert_eq!(
            report.cardinality_violations,
            vec![CardinalityViolation { level: 3, size: 3, bound: 2 }]
        );

        let empty = PseudoTree::from_levels(FuncSpec::ruler(), FuncSpec::id(), 0, [], vec![]).unwrap();
        assert!(verify_splitting(&empty, 0).unwrap().passes());
    }

    #[test]
    fn branching_is_detected() {
        // 0 -> {00, 01} branches; 1 -> 10 -> 100 is a chain
        let tree = PseudoTree::from_levels(
            FuncSpec::constant(2),
            FuncSpec::id(),
            4,
            [(1, vec![bs("0"), bs("1")]), (2, vec![bs("00"), bs("01")]), (3, vec![bs("100")])],
            vec![],
        )
        .unwrap();
        let report = verify_splitting(&tree, 2).unwrap();
        assert_eq!(report.branching_failures.len(), 1);
        assert_eq!(report.branching_failures[0].node, bs("1"));
        assert_eq!(report.indeterminate_nodes, 3);
    }

    #[test]
    fn frontier_branch_examples() {
        let (tree, _) = ruler_tree(1);
        let branches = frontier_branches(&tree).unwrap();
        assert_eq!(branches.len(), 2);
        assert!(branches[0].bits.is_empty());
        assert_eq!(branches[1].bits.iter().collect::<Vec<_>>(), vec![2]);

        let single =
            PseudoTree::from_levels(FuncSpec::constant(1), FuncSpec::id(), 3, [(1, vec![bs("1")])], vec![]).unwrap();
        assert_eq!(frontier_branches(&single).unwrap().len(), 1);

        let (tree, logs) = ruler_tree(6);
        assert_eq!(frontier_branches(&tree).unwrap().len(), logs.last().unwrap().maximal_after.len());
    }

    #[test]
    fn star_examples() {
        let (tree, _) = ruler_tree(2);
        let branches = frontier_branches(&tree).unwrap();
        assert_eq!(verify_star(&tree, &branches).unwrap(), vec![3, 11]);
        assert_eq!(verify_star(&tree, &branches[..1]).unwrap(), vec![5]);
        assert_eq!(verify_star(&tree, &branches[1..]).unwrap(), vec![9]);
        let stray = BranchSample::new(SetWindow::from_members(tree.horizon(), [0, 1]).unwrap());
        assert!(verify_star(&tree, &[stray]).unwrap().is_empty());
    }

    #[test]
    fn prune_examples() {
        let (tree, _) = ruler_tree(4);
        let branches = frontier_branches(&tree).unwrap();
        assert_eq!(prune_thin(&tree, &branches, 1), tree);
        assert!(prune_thin(&tree, &branches, branches.len() + 1).is_empty());

        let one = &branches[..1];
        let pruned = prune_thin(&tree, one, 1);
        assert!(!pruned.is_empty());
        let chain: Vec<&BitString> = pruned.nodes().map(|(_, s)| s).collect();
        assert!(chain.windows(2).all(|w| w[0].is_prefix_of(w[1])));
        assert!(pruned.nodes().all(|(_, s)| one[0].passes_through(s)));
        assert_eq!(prune_thin(&pruned, one, 1), pruned);
    }

    #[test]
    fn avoid_examples() {
        let tree =
            PseudoTree::from_levels(FuncSpec::constant(1), FuncSpec::id(), 6, [(4, vec![bs("0000")])], vec![]).unwrap();
        let targets = SetWindow::from_members(6, [4]).unwrap();
        let (ext, m) = avoid_level_extension(&tree, &BitString::zeros(0), &targets).unwrap();
        assert_eq!((ext, m), (bs("1000"), 4));

        let targets = SetWindow::from_members(6, [5]).unwrap();
        let (ext, m) = avoid_level_extension(&tree, &bs("01"), &targets).unwrap();
        assert_eq!((ext, m), (bs("01000"), 5));

        assert!(matches!(
            avoid_level_extension(&tree, &BitString::zeros(0), &SetWindow::empty(6)),
            Err(Error::NoAdmissibleLevel)
        ));
    }

    #[test]
    fn avoid_never_lands_in_the_level() {
        let (tree, _) = ruler_tree(4);
        let targets = SetWindow::full(tree.horizon());
        for (_, node) in tree.nodes().take(40) {
            let (ext, m) = avoid_level_extension(&tree, node, &targets).unwrap();
            assert!(node.is_prefix_of(&ext));
            assert_eq!(ext.len(), m);
            assert!(!tree.level(m).contains(&ext));
        }
    }

    #[test]
    fn tree_file_round_trip() {
        let (tree, _) = ruler_tree(3);
        let text = serde_json::to_string(&tree).unwrap();
        let back: PseudoTree = serde_json::from_str(&text).unwrap();
        assert_eq!(back, tree);
    }
}
