use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use ultraguess::diagonal::{diagonalize, sweep_subjects, MAX_SWEEP_WIDTH};
use ultraguess::filter::{base_from_tree, check_fip, extend_good, sky_probe, FilterBase, SkyRelation, Verdict};
use ultraguess::fubini::{build_sum, sum_guess_levels, PairCodec};
use ultraguess::io::{read_json, write_json};
use ultraguess::isbell::{check_independence, isbell_family};
use ultraguess::probability::{bc_partial_sum, exact_guess_measure, mc_guess_fraction, random_structure, Exact, TermSource};
use ultraguess::rng::{fair_window, substream};
use ultraguess::selector::{selector_vs_base, FinitePartition};
use ultraguess::tree::{construct_splitting_tree, frontier_branches, verify_splitting, verify_star, PseudoTree};
use ultraguess::{guess_levels, FuncSpec, GuessingStructure, SetWindow};

use crate::*;

fn spec(text: &str) -> CliResult<FuncSpec> {
    Ok(text.parse::<FuncSpec>().map_err(ultraguess::Error::from)?)
}

fn save<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    if let Some(path) = path {
        write_json(path, value)?;
    }
    Ok(())
}

fn read_tree(path: &Path) -> CliResult<PseudoTree> {
    Ok(read_json(path)?)
}

fn read_base(path: &Path) -> CliResult<FilterBase> {
    Ok(read_json(path)?)
}

/// Accepts a tree file or a structure file; both carry levels of 0/1 strings.
fn read_structure(path: &Path) -> CliResult<GuessingStructure> {
    let value: serde_json::Value = read_json(path)?;
    if value.get("stage_marks").is_some() {
        let tree: PseudoTree = serde_json::from_value(value).map_err(ultraguess::Error::from)?;
        return Ok(tree.to_guessing()?);
    }
    Ok(serde_json::from_value(value).map_err(ultraguess::Error::from)?)
}

fn structure(a: &StructureArgs) -> CliResult<GuessingStructure> {
    match &a.input {
        Some(path) => read_structure(path),
        None => Ok(random_structure(&spec(&a.pi)?, &spec(&a.f)?, a.horizon, a.structure_seed)?),
    }
}

pub fn build_tree<W: Write>(a: &BuildTreeArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let (tree, logs) = construct_splitting_tree(&spec(&a.pi)?, a.stages, a.cap)?;
    for log in &logs {
        rep.emit("stage", log)?;
    }
    rep.emit(
        "tree",
        &json!({
            "horizon": tree.horizon(),
            "nodes": tree.node_count(),
            "stage_marks": tree.stage_marks(),
            "branching_frontier": tree.branching_frontier(),
        }),
    )?;
    save(a.out.as_deref(), &tree)?;
    eprintln!(
        "built {} stages: horizon {}, {} nodes",
        logs.len(),
        tree.horizon(),
        tree.node_count()
    );
    Ok(Outcome::Pass)
}

pub fn verify<W: Write>(a: &VerifyArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let tree = read_tree(&a.input)?;
    let frontier = a.frontier.unwrap_or_else(|| tree.branching_frontier());
    let report = verify_splitting(&tree, frontier)?;
    rep.emit("splitting", &report)?;
    let branches = frontier_branches(&tree)?;
    let exact = verify_star(&tree, &branches)?;
    rep.emit("star", &json!({"branches": branches.len(), "exact_levels": exact}))?;
    eprintln!(
        "splitting below {frontier}: {}; {} branches, exactly guessed together at {} levels",
        if report.passes() { "ok" } else { "violated" },
        branches.len(),
        exact.len()
    );
    Ok(Outcome::from_pass(report.passes()))
}

pub fn base<W: Write>(a: &BaseArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let tree = read_tree(&a.input)?;
    let branches = frontier_branches(&tree)?;
    let base = base_from_tree(&tree, &branches)?;
    let sizes: Vec<_> = base
        .generators()
        .iter()
        .map(|g| json!({"name": g.name, "size": g.window.len()}))
        .collect();
    rep.emit("base", &json!({"horizon": base.horizon(), "generators": sizes}))?;
    let report = check_fip(&base, a.arity);
    rep.emit("fip", &report)?;
    save(a.out.as_deref(), &base)?;
    eprintln!(
        "{} generators, {} subfamilies checked, {} failures",
        base.len(),
        report.checked,
        report.failures().count()
    );
    Ok(Outcome::from_pass(report.passes()))
}

pub fn sky<W: Write>(a: &SkyArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let base = read_base(&a.input)?;
    let tests = a.g.iter().map(|g| spec(g)).collect::<CliResult<Vec<_>>>()?;
    let relation = match a.relation {
        Relation::NotGeq => SkyRelation::NotGeq,
        Relation::Less => SkyRelation::Less,
    };
    let verdict = sky_probe(&spec(&a.pi)?, &spec(&a.f)?, &base, &tests, relation, a.midpoint)?;
    for record in &verdict.records {
        rep.emit("probe", record)?;
    }
    rep.emit(
        "sky",
        &json!({
            "relation": verdict.relation,
            "midpoint": verdict.midpoint,
            "verdict": verdict.verdict,
            "counterexample": verdict.counterexample,
        }),
    )?;
    eprintln!("{} probes: {:?}", verdict.records.len(), verdict.verdict);
    Ok(Outcome::from_pass(verdict.verdict != Verdict::RefutedAtHorizon))
}

pub fn extend<W: Write>(a: &ExtendArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let base = read_base(&a.input)?;
    match extend_good(&base, &spec(&a.pi)?, &spec(&a.f)?, &spec(&a.g)?, a.arity) {
        Ok((extended, report)) => {
            let added = &extended.generators()[extended.len() - 1];
            rep.emit("extended", &json!({"name": added.name, "size": added.window.len()}))?;
            rep.emit("fip", &report)?;
            save(a.out.as_deref(), &extended)?;
            eprintln!("adjoined {}: {} subfamilies intersect", added.name, report.checked);
            Ok(Outcome::Pass)
        }
        Err(ultraguess::Error::FipFailure { subfamily }) => {
            rep.emit("fip_failure", &json!({"subfamily": subfamily}))?;
            eprintln!("finite intersection fails for {subfamily:?}");
            Ok(Outcome::CheckFailed)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn bc<W: Write>(a: &BcArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let report = match &a.input {
        Some(path) => bc_partial_sum(TermSource::Structure(&read_structure(path)?), a.upto)?,
        None => {
            let (pi, f) = (spec(&a.pi)?, spec(&a.f)?);
            bc_partial_sum(TermSource::Specs { pi: &pi, f: &f }, a.upto)?
        }
    };
    for term in &report.terms {
        rep.emit("term", term)?;
    }
    rep.emit(
        "bc",
        &json!({
            "upto": report.upto,
            "sum": report.sum,
            "sum_f64": report.sum.to_f64(),
            "divergence_flag": report.divergence_flag,
        }),
    )?;
    eprintln!("sum below {}: {:.15}", report.upto, report.sum.to_f64());
    Ok(Outcome::Pass)
}

pub fn measure<W: Write>(a: &MeasureArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let g = structure(&a.structure)?;
    let to = a.to.unwrap_or(g.horizon());
    let p = Exact(exact_guess_measure(&g, a.from, to)?);
    rep.emit("measure", &json!({"from": a.from, "to": to, "exact": p, "f64": p.to_f64()}))?;
    eprintln!("P(guessed in [{}, {to})) = {p} ≈ {}", a.from, p.to_f64());
    Ok(Outcome::Pass)
}

pub fn mc<W: Write>(a: &McArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let g = structure(&a.structure)?;
    let to = a.to.unwrap_or(g.horizon());
    let report = mc_guess_fraction(&g, a.from, to, a.trials, a.seed)?;
    rep.emit("mc", &report)?;
    eprintln!(
        "{} of {} subjects guessed: {} ± {}",
        report.hits, report.trials, report.fraction, report.std_error
    );
    Ok(Outcome::Pass)
}

pub fn diag<W: Write>(a: &DiagArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let g = match &a.input {
        Some(path) => read_structure(path)?,
        None => GuessingStructure::full_power_sets(spec(&a.pi)?, spec(&a.f)?, a.horizon)?,
    };
    let cert = diagonalize(&g)?;
    let valid = cert.verify();
    rep.emit(
        "certificate",
        &json!({
            "horizon": cert.horizon,
            "large_levels": cert.large_levels.iter().collect::<Vec<_>>(),
            "pairs_checked": cert.pairs_checked,
            "valid": valid,
        }),
    )?;
    let width = a.width.unwrap_or(g.horizon().min(MAX_SWEEP_WIDTH));
    let sweep = sweep_subjects(&cert, width)?;
    rep.emit("sweep", &sweep)?;
    save(a.out.as_deref(), &cert)?;
    eprintln!(
        "{} large levels; {} subjects, at most {} threaded, {} violations",
        cert.large_levels.len(),
        sweep.subjects,
        sweep.max_agreement,
        sweep.violations
    );
    Ok(Outcome::from_pass(valid && sweep.violations == 0))
}

pub fn fubini<W: Write>(a: &FubiniArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let columns = a
        .inputs
        .iter()
        .map(|p| read_structure(p))
        .collect::<CliResult<Vec<_>>>()?;
    let codec = match a.codec {
        Codec::Cantor => PairCodec::Cantor,
        Codec::RowMajor => PairCodec::RowMajor {
            width: a
                .row_width
                .unwrap_or_else(|| columns.iter().map(GuessingStructure::horizon).max().unwrap_or(1)),
        },
    };
    let sum = build_sum(columns.clone(), codec)?;
    let width = sum.max_width();
    let mut mismatches = 0u64;
    let mut pairs = 0u64;
    for t in 0..a.trials {
        let subject = fair_window(&mut substream(a.seed, t), width);
        let got = sum_guess_levels(&sum, &subject)?;
        let mut want = std::collections::BTreeSet::new();
        for (i, g) in columns.iter().enumerate() {
            want.extend(guess_levels(g, &subject)?.hits.iter().map(|j| (i as u32, j)));
        }
        pairs += got.len() as u64;
        if got != want {
            mismatches += 1;
            rep.emit("mismatch", &json!({"trial": t, "sum": got, "columns": want}))?;
        }
    }
    rep.emit(
        "fubini",
        &json!({
            "columns": columns.len(),
            "code_horizon": sum.horizon(),
            "subject_width": width,
            "trials": a.trials,
            "guessed_pairs": pairs,
            "mismatches": mismatches,
        }),
    )?;
    eprintln!("{} subjects, {pairs} guessed pairs, {mismatches} mismatches", a.trials);
    Ok(Outcome::from_pass(mismatches == 0))
}

pub fn selector<W: Write>(a: &SelectorArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let base = read_base(&a.input)?;
    let partition = match &a.partition {
        Some(path) => read_json(path)?,
        None => FinitePartition::squares(base.horizon()),
    };
    let report = selector_vs_base(&partition, &base, a.trials, a.seed)?;
    rep.emit("selector", &report)?;
    eprintln!(
        "{} trials over {} pieces: {} selectors meet every generator",
        report.trials, report.pieces, report.meets
    );
    Ok(Outcome::from_pass(report.max_piece_hits <= 1))
}

pub fn isbell<W: Write>(a: &IsbellArgs, rep: &mut Reporter<W>) -> CliResult<Outcome> {
    let all = 1u64 << a.cap.min(31);
    let count = a.indices.map_or(all, u64::from);
    if count > all {
        return Err(CliError::Usage(format!("only {all} distinct index sets exist below {}", a.cap)));
    }
    let indices: Vec<SetWindow> = (0..count as u32)
        .map(|m| SetWindow::from_predicate(a.cap, |k| m >> k & 1 == 1))
        .collect();
    let family = isbell_family(a.cap, &indices, a.arity)?;
    let report = check_independence(&family, a.arity);
    rep.emit("independence", &report)?;
    save(a.out.as_deref(), &family)?;
    eprintln!(
        "{} sets over {} points: {} combinations, {} empty",
        indices.len(),
        report.ground_size,
        report.checked,
        report.empty.len()
    );
    Ok(Outcome::from_pass(report.passes()))
}
