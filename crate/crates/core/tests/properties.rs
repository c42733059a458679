mod common;

use std::collections::BTreeSet;

use common::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use ultraguess::filter::{below_window, check_fip, extend_good, FilterBase};
use ultraguess::fubini::PairCodec;
use ultraguess::probability::{exact_guess_measure, mc_guess_fraction, random_structure};
use ultraguess::selector::{extract_selector, selector_vs_base, FinitePartition};
use ultraguess::tree::{
    avoid_level_extension, construct_splitting_tree, frontier_branches, prune_thin, BranchSample,
};
use ultraguess::{BitString, FuncSpec, GuessingStructure, SetWindow};

fn spec(text: &str) -> FuncSpec {
    text.parse().unwrap()
}

fn window(horizon: u32, members: &BTreeSet<u32>) -> SetWindow {
    SetWindow::from_members(horizon, members.iter().copied()).unwrap()
}

fn arb_base() -> impl Strategy<Value = (u32, Vec<BTreeSet<u32>>)> {
    (4u32..40).prop_flat_map(|h| {
        (
            Just(h),
            prop::collection::vec(prop::collection::btree_set(0..h, 0..h as usize), 1..7),
        )
    })
}

fn arb_structure() -> impl Strategy<Value = GuessingStructure> {
    // levels of width n with up to 3 guesses each
    prop::collection::vec(prop::collection::vec(any::<u64>(), 0..4), 1..12).prop_map(|levels| {
        let horizon = levels.len() as u32;
        let levels = levels.into_iter().enumerate().map(|(n, words)| {
            let n = n as u32;
            let members = words.into_iter().map(|w| BitString::from_word(n, w)).collect();
            (n, members)
        });
        GuessingStructure::new(FuncSpec::constant(3), FuncSpec::id(), horizon, levels).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fip_matches_pairwise_intersection((h, sets) in arb_base(), arity in 1usize..5) {
        let mut base = FilterBase::new(h);
        for (i, s) in sets.iter().enumerate() {
            base.push(format!("s{i}"), window(h, s)).unwrap();
        }
        let report = check_fip(&base, arity);
        let families = subsets_up_to(sets.len(), arity);
        prop_assert_eq!(report.checked, families.len());
        for family in families {
            let lists: Vec<Vec<u32>> = family.iter().map(|&i| sets[i].iter().copied().collect()).collect();
            let refs: Vec<&[u32]> = lists.iter().map(Vec::as_slice).collect();
            let meet = intersect_sorted(&refs);
            prop_assert_eq!(report.witness(&family), meet.last().copied());
        }
    }

    #[test]
    fn exact_measure_matches_enumeration(g in arb_structure(), from in 0u32..4) {
        let to = g.horizon();
        let width = to.saturating_sub(1);
        let exact = exact_guess_measure(&g, from, to).unwrap();
        let count = enumerate_measure(&g, from, to, width);
        prop_assert_eq!(exact, BigRational::new(count.into(), BigInt::from(1u64 << width)));
    }

    #[test]
    fn monte_carlo_replays(g in arb_structure(), seed in any::<u64>()) {
        let a = mc_guess_fraction(&g, 0, g.horizon(), 200, seed).unwrap();
        let b = mc_guess_fraction(&g, 0, g.horizon(), 200, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn codecs_round_trip(i in 0u64..3000, j in 0u64..3000, width in 1u32..5000) {
        let cantor = PairCodec::Cantor;
        prop_assert_eq!(cantor.decode(cantor.encode(i, j).unwrap()), (i, j));
        let rows = PairCodec::RowMajor { width };
        match rows.encode(i, j) {
            Ok(code) => prop_assert_eq!(rows.decode(code), (i, j)),
            Err(_) => prop_assert!(j >= u64::from(width)),
        }
    }

    #[test]
    fn selectors_meet_pieces_once(h in 1u32..80, cuts in prop::collection::btree_set(1u32..80, 0..20), src in prop::collection::btree_set(0u32..80, 0..60)) {
        let starts: Vec<u32> = std::iter::once(0).chain(cuts.into_iter().filter(|&c| c < h)).collect();
        let partition = FinitePartition::new(h, starts).unwrap();
        let source: BTreeSet<u32> = src.into_iter().filter(|&k| k < h).collect();
        let result = extract_selector(&partition, &window(h, &source)).unwrap();
        let x = members(&result.selector);
        for (piece, &hits) in partition.pieces().zip(&result.piece_hits) {
            let inside: Vec<u32> = source.iter().copied().filter(|k| piece.contains(k)).collect();
            let kept: Vec<u32> = x.iter().copied().filter(|k| piece.contains(k)).collect();
            prop_assert!(kept.len() <= 1);
            prop_assert_eq!(hits as usize, kept.len());
            prop_assert_eq!(kept.len() == 1, inside.len() == 1);
        }
    }

    #[test]
    fn below_window_matches_pointwise(h in 1u32..60, c in 0u64..8) {
        let pi = spec("ruler");
        let f = spec("id");
        let g = spec(&format!("add(id, {c})"));
        let w = below_window(&pi, &f, &g, h).unwrap();
        for n in 0..h {
            prop_assert_eq!(w.contains(n), ruler(u64::from(n)) + c < u64::from(n));
        }
    }

    #[test]
    fn extension_avoids_the_level(len in 0u32..8, word in any::<u64>()) {
        let (tree, _) = construct_splitting_tree(&FuncSpec::ruler(), 4, 1 << 20).unwrap();
        let p = BitString::from_word(len, word);
        let targets = SetWindow::from_predicate(tree.horizon(), |k| k >= 3);
        let (q, m) = avoid_level_extension(&tree, &p, &targets).unwrap();
        prop_assert!(p.is_prefix_of(&q));
        prop_assert_eq!(q.len(), m);
        prop_assert!(!tree.level(m).contains(&q));
    }
}

#[test]
fn pruning_is_idempotent_and_shrinks() {
    let (tree, _) = construct_splitting_tree(&FuncSpec::ruler(), 5, 1 << 20).unwrap();
    let branches = frontier_branches(&tree).unwrap();
    for support in 0..=3 {
        let once = prune_thin(&tree, &branches, support);
        let twice = prune_thin(&once, &branches, support);
        assert_eq!(once, twice);
        let all: BTreeSet<Node> = nodes(&tree).into_iter().collect();
        for node in nodes(&once) {
            assert!(all.contains(&node));
            let through = branch_members(&branches).iter().filter(|r| subject_starts_with(r, &node.1)).count();
            assert!(through >= support);
        }
    }
    assert_eq!(prune_thin(&tree, &branches, 0), tree);
}

fn branch_members(branches: &[BranchSample]) -> Vec<Vec<u32>> {
    branches.iter().map(|b| members(&b.bits)).collect()
}

#[test]
fn stage_conditions_hold_for_other_bounds() {
    let cases: [(&str, fn(u64) -> u64); 3] = [
        ("add(ruler, 1)", |n| ruler(n) + 1),
        ("mul(ruler, 2)", |n| ruler(n) * 2),
        ("add(ruler, 3)", |n| ruler(n) + 3),
    ];
    for (text, pi) in cases {
        let (tree, _) = construct_splitting_tree(&spec(text), 5, 1 << 22).unwrap();
        let errors = stage_conditions(&tree, pi);
        assert!(errors.is_empty(), "{text}: {errors:?}");
    }
}

#[test]
fn extended_base_keeps_old_witnesses() {
    let (tree, _) = construct_splitting_tree(&FuncSpec::ruler(), 4, 1 << 20).unwrap();
    let branches = frontier_branches(&tree).unwrap();
    let base = ultraguess::filter::base_from_tree(&tree, &branches).unwrap();
    let before = check_fip(&base, 3);
    // ruler(n) + 1 < n + 1 eventually everywhere, so the new generator is cofinite
    let (extended, after) = extend_good(&base, &spec("ruler"), &spec("add(id, 1)"), &spec("add(id, 1)"), 3).unwrap();
    assert_eq!(extended.len(), base.len() + 1);
    assert!(after.passes());
    for outcome in &before.outcomes {
        assert_eq!(after.witness(&outcome.members), outcome.witness);
    }

    let none = extend_good(&base, &spec("ruler"), &spec("id"), &spec("add(id, 1000000)"), 3);
    assert!(none.is_err());
}

#[test]
fn selector_meet_fraction_drops_with_more_generators() {
    let (tree, _) = construct_splitting_tree(&FuncSpec::ruler(), 5, 1 << 20).unwrap();
    let partition = FinitePartition::squares(tree.horizon());
    let branches = frontier_branches(&tree).unwrap();
    let full = ultraguess::filter::base_from_tree(&tree, &branches).unwrap();
    let mut fewer = FilterBase::new(tree.horizon());
    for g in &full.generators()[..1] {
        fewer.push(g.name.clone(), g.window.clone()).unwrap();
    }
    let a = selector_vs_base(&partition, &fewer, 300, 9).unwrap();
    let b = selector_vs_base(&partition, &full, 300, 9).unwrap();
    assert!(b.meets <= a.meets);
}

#[test]
fn random_structures_respect_bounds() {
    for seed in 0..20 {
        let g = random_structure(&spec("add(ruler, 1)"), &FuncSpec::id(), 24, seed).unwrap();
        for (n, level) in g.nonempty_levels() {
            assert_eq!(level.members.len() as u64, (ruler(u64::from(n)) + 1).min(1 << n));
            assert!(level.members.iter().all(|s| s.len() == n));
        }
    }
}
