use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, Context};
use serde_json::json;

use lrsx_core::calculus::{validate, Calculus, Command, Severity, Side};
use lrsx_core::diagram::{parse_diagrams, render_diagrams, Diagram};
use lrsx_core::ground::{check_determinism, enumerate_ground};
use lrsx_core::join::{compute_overlaps, join_all, JoinReport, SearchConfig};
use lrsx_core::oracle::{convergence_equivalence, validate_diagrams, Analysed, OracleConfig};
use lrsx_core::termination::{
    detect_nontermination, prove_innermost_termination, run_external_prover, ExternalProver, Verdict,
};
use lrsx_core::trs::{emit_tpdb, encode_diagrams, parse_tpdb, Trs};

use crate::{Cmd, Failure, Outcome, ATP_CMD_ENV, ATP_PATH_ENV};

pub fn run(cmd: &Cmd, out: &Path, verbose: u8) -> Result<Outcome, Failure> {
    match cmd {
        Cmd::Check { input } => check(input),
        Cmd::Overlap { input } => overlap(input, verbose),
        Cmd::Join { input, max_depth, split_budget } => join(input, out, *max_depth, *split_budget, verbose),
        Cmd::Induct { file, emit_only, atp_path, atp_cmd, timeout, loop_depth } => {
            let prover = external_prover(atp_path.as_deref(), atp_cmd.as_deref(), *timeout);
            induct(file, out, *emit_only, prover, *loop_depth)
        }
        Cmd::Oracle { input, size, fuel, diagrams } => oracle(input, *size, *fuel, diagrams),
    }
}

fn load(input: &Path) -> anyhow::Result<Calculus> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let calc = lrsx_core::parse::parse(&text).map_err(|e| anyhow!("{}: {e}", input.display()))?;
    let errors: Vec<String> = validate(&calc)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.to_string())
        .collect();
    if !errors.is_empty() {
        return Err(anyhow!("{}: invalid calculus\n{}", input.display(), errors.join("\n")));
    }
    Ok(calc)
}

fn check(input: &Path) -> Result<Outcome, Failure> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let calc = lrsx_core::parse::parse(&text).map_err(|e| anyhow!("{}: {e}", input.display()))?;
    let diags = validate(&calc);
    for d in &diags {
        println!("{d}");
    }
    let errors = diags.iter().filter(|d| d.severity == Severity::Error).count();
    println!(
        "{} standard reductions, {} transformations, {} answers, {} commands",
        calc.sr_rules.len(),
        calc.transformations.len(),
        calc.answers.len(),
        calc.commands.len()
    );
    if errors > 0 {
        return Err(Failure::Input(anyhow!("{errors} validation error(s)")));
    }
    Ok(Outcome {
        summary: json!({ "diagnostics": diags.len(), "errors": 0 }),
        ..Default::default()
    })
}

fn overlap(input: &Path, verbose: u8) -> Result<Outcome, Failure> {
    let calc = load(input)?;
    let mut counts = serde_json::Map::new();
    for c in &calc.commands {
        let mut n = 0;
        for r in calc.transformations_named(&c.rule, c.variant) {
            let ovs = compute_overlaps(&calc, r, c.side).map_err(|e| anyhow!("{}: {e}", c.output))?;
            if verbose > 0 {
                for o in &ovs {
                    println!("{o}");
                }
            }
            n += ovs.len();
        }
        println!("{}: {n} overlaps", c.output);
        counts.insert(c.output.clone(), json!(n));
    }
    Ok(Outcome { summary: json!({ "overlaps": counts }), ..Default::default() })
}

fn search_config(calc: &Calculus, max_depth: Option<usize>, split_budget: Option<usize>) -> SearchConfig {
    let mut cfg = SearchConfig::from_calculus(calc);
    if let Some(d) = max_depth {
        cfg.max_depth = d;
    }
    if let Some(b) = split_budget {
        cfg.split_budget = b;
    }
    cfg
}

fn run_command(calc: &Calculus, c: &Command, cfg: &SearchConfig) -> anyhow::Result<JoinReport> {
    join_all(calc, &c.rule, c.variant, c.side, cfg).map_err(|e| anyhow!("{}: {e}", c.output))
}

fn join(
    input: &Path,
    out: &Path,
    max_depth: Option<usize>,
    split_budget: Option<usize>,
    verbose: u8,
) -> Result<Outcome, Failure> {
    let calc = load(input)?;
    let cfg = search_config(&calc, max_depth, split_budget);
    let mut reports = Vec::new();
    for c in &calc.commands {
        reports.push((c, run_command(&calc, c, &cfg)?));
    }
    // files are written only after every command finished
    let mut outputs = Vec::new();
    let mut summary = serde_json::Map::new();
    let mut failed = Vec::new();
    for (c, rep) in &reports {
        let path = out.join(&c.output);
        std::fs::write(&path, render_diagrams(&rep.diagrams)).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(path);
        println!("{}: {}/{} overlaps joined, {} diagrams", c.output, rep.joined(), rep.overlaps.len(), rep.diagrams.len());
        for (o, why) in rep.failures() {
            println!("  not joined: {o}\n    {why}");
            failed.push(o);
        }
        if verbose > 0 {
            print!("{}", render_diagrams(&rep.diagrams));
        }
        summary.insert(
            c.output.clone(),
            json!({ "overlaps": rep.overlaps.len(), "joined": rep.joined(), "diagrams": rep.diagrams.len() }),
        );
    }
    Ok(Outcome {
        outputs,
        summary: json!(summary),
        failed: (!failed.is_empty()).then(|| format!("{} overlap(s) not joined", failed.len())),
    })
}

fn external_prover(path: Option<&Path>, cmd: Option<&str>, timeout: u64) -> Option<ExternalProver> {
    let timeout = Duration::from_secs(timeout);
    if let Ok(c) = std::env::var(ATP_CMD_ENV) {
        return Some(ExternalProver { command: c, timeout });
    }
    let dir = std::env::var(ATP_PATH_ENV).ok().map(PathBuf::from).or_else(|| path.map(Path::to_path_buf));
    if let Some(dir) = dir {
        let jar = dir.join("aprove.jar");
        return Some(ExternalProver { command: format!("java -jar {} -m wst -p plain {{file}}", jar.display()), timeout });
    }
    cmd.map(|c| ExternalProver { command: c.to_string(), timeout })
}

fn load_trs(file: &Path) -> anyhow::Result<Trs> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    if file.extension().is_some_and(|e| e == "trs") {
        return parse_tpdb(&text).map_err(|e| anyhow!("{}: {e}", file.display()));
    }
    let ds = parse_diagrams(&text).map_err(|e| anyhow!("{}: {e}", file.display()))?;
    Ok(encode_diagrams(&ds))
}

fn induct(
    file: &Path,
    out: &Path,
    emit_only: bool,
    prover: Option<ExternalProver>,
    loop_depth: usize,
) -> Result<Outcome, Failure> {
    let trs = load_trs(file)?;
    let stem = file.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_else(|| "diagrams".into());
    let tpdb = out.join(format!("{stem}.trs"));
    let listing = out.join(format!("{stem}.rules"));
    std::fs::write(&tpdb, emit_tpdb(&trs)).with_context(|| format!("writing {}", tpdb.display()))?;
    std::fs::write(&listing, trs.listing()).with_context(|| format!("writing {}", listing.display()))?;
    let outputs = vec![tpdb, listing];
    print!("{}", trs.listing());
    if emit_only {
        return Ok(Outcome { outputs, summary: json!({ "rules": trs.rules.len() }), failed: None });
    }
    let mut verdict = prove_innermost_termination(&trs);
    if !verdict.is_proved() {
        let counters = trs.rules.iter().any(|r| !r.free_rhs_vars().is_empty());
        if counters && prover.is_some() {
            println!("external prover skipped: free right-hand-side variables have no TPDB encoding");
        } else if let Some(p) = &prover {
            let ext = run_external_prover(&trs, p);
            if ext.is_proved() {
                verdict = ext;
            }
        }
    }
    if let Verdict::Unknown { loop_hint: None, reason } = &verdict {
        if let Some(w) = detect_nontermination(&trs, loop_depth) {
            verdict = Verdict::Unknown { reason: reason.clone(), loop_hint: Some(w) };
        }
    }
    let detail = match &verdict {
        Verdict::Proved(_) => String::new(),
        Verdict::Disproved(w) => format!("loop: {w}"),
        Verdict::Unknown { reason, loop_hint } => match loop_hint {
            Some(w) => format!("{reason}; loop hint: {w}"),
            None => reason.clone(),
        },
    };
    println!("{}{}", verdict.tag(), if detail.is_empty() { String::new() } else { format!(" ({detail})") });
    Ok(Outcome {
        outputs,
        summary: json!({ "rules": trs.rules.len(), "verdict": verdict.tag(), "detail": detail }),
        failed: (!verdict.is_proved()).then(|| format!("induction not proved: {}", verdict.tag())),
    })
}

fn diagrams_for(c: &Command, files: &[PathBuf]) -> anyhow::Result<Option<Vec<Diagram>>> {
    let Some(f) = files.iter().find(|f| f.file_name().is_some_and(|n| n.to_string_lossy() == c.output)) else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
    Ok(Some(parse_diagrams(&text).map_err(|e| anyhow!("{}: {e}", f.display()))?))
}

fn oracle(input: &Path, size: usize, fuel: Option<usize>, files: &[PathBuf]) -> Result<Outcome, Failure> {
    let calc = load(input)?;
    if calc.all_rules().any(|r| lrsx_core::syntax::has_chain(&r.lhs) || lrsx_core::syntax::has_chain(&r.rhs)) {
        return Err(Failure::Input(anyhow!("the ground oracle does not support chain variables")));
    }
    for f in files {
        if !calc.commands.iter().any(|c| f.file_name().is_some_and(|n| n.to_string_lossy() == c.output)) {
            return Err(Failure::Input(anyhow!("{} matches no command of {}", f.display(), input.display())));
        }
    }
    let cfg = OracleConfig { max_size: size, ..Default::default() };
    let exprs = enumerate_ground(&calc, size);
    let nondet = check_determinism(&calc, &exprs);
    println!("{} ground expressions up to size {size}; {} non-deterministic", exprs.len(), nondet.len());
    for (e, succ) in nondet.iter().take(5) {
        println!("  {e} has {} successors", succ.len());
    }
    let mut failed = Vec::new();
    if !nondet.is_empty() {
        failed.push("standard reduction is not deterministic".to_string());
    }
    let mut summary = serde_json::Map::new();
    let mut names = Vec::new();
    for c in &calc.commands {
        let ds = match diagrams_for(c, files)? {
            Some(ds) => ds,
            None => run_command(&calc, c, &SearchConfig::from_calculus(&calc))?.diagrams,
        };
        let an = Analysed::new(&calc, &c.rule, c.side == Side::Right);
        let rep = validate_diagrams(&calc, &an, &ds, cfg);
        println!("{}: {}/{} forks covered ({:.1}%)", c.output, rep.covered, rep.forks, rep.percent());
        for u in rep.uncovered.iter().take(20) {
            println!("  uncovered: {u}");
        }
        if !rep.complete() {
            failed.push(format!("{}: {} uncovered fork(s)", c.output, rep.forks - rep.covered));
        }
        summary.insert(c.output.clone(), json!({ "forks": rep.forks, "covered": rep.covered }));
        if !names.contains(&c.rule) {
            names.push(c.rule.clone());
        }
    }
    for n in &names {
        let eq = convergence_equivalence(&calc, n, size, fuel);
        println!("{n}: {} steps checked, {} convergence mismatches", eq.pairs, eq.mismatches.len());
        for (s, t, cs, ct) in eq.mismatches.iter().take(5) {
            println!("  {s} ({cs}) -> {t} ({ct})");
        }
        if !eq.mismatches.is_empty() {
            failed.push(format!("{n}: convergence differs on {} step(s)", eq.mismatches.len()));
        }
        summary.insert(format!("equivalence:{n}"), json!({ "pairs": eq.pairs, "mismatches": eq.mismatches.len() }));
    }
    summary.insert("nondeterministic".into(), json!(nondet.len()));
    Ok(Outcome {
        outputs: vec![],
        summary: json!(summary),
        failed: (!failed.is_empty()).then(|| failed.join("\n")),
    })
}
