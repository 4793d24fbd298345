//! Command-line harness: single-cell campaigns, named property suites, and
//! the communication-scaling sweep. All protocol logic lives in the library;
//! this binary parses flags, merges the optional config file, runs the
//! campaign, and emits CSV plus an optional JSON summary.
//!
//! Exit codes: 0 all asserted properties held; 1 at least one violation or
//! liveness failure; 2 usage error.

use clap::{Args, Parser, Subcommand};
use ocioraba::core::Label;
use ocioraba::net::SchedulerKind;
use ocioraba::sim::{csv_header, Adversary, InputMode, Protocol, RunReport, ScenarioConfig};
use ocioraba::suites::{
    complexity_csv_header, complexity_sweep, run_campaign, suite_abbba, suite_apva_def1,
    suite_consistency, suite_validity, CampaignResult, SuiteKind, SuiteReport, Violation,
};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ocioraba", version, about = "Byzantine agreement simulator and property campaigns")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario campaign or a named property suite.
    Run(RunArgs),
    /// Sweep populations and report per-n traffic and election aggregates.
    Complexity(ComplexityArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// ocioraba | ocioraba-star | rbc | abba | abbba | apva
    #[arg(long)]
    protocol: Option<String>,
    /// Population size (default 4).
    #[arg(long)]
    n: Option<usize>,
    /// Fault bound (default floor((n-1)/3)).
    #[arg(long)]
    t: Option<usize>,
    /// unanimous | random | split
    #[arg(long)]
    input: Option<String>,
    /// Input value length in bits (default 64).
    #[arg(long)]
    ell: Option<usize>,
    /// none | silent | crash-after-k | equivocator | random-noise
    #[arg(long)]
    adversary: Option<String>,
    /// fifo | random | lifo | targeted-delay | split-brain
    #[arg(long)]
    scheduler: Option<String>,
    /// Seeds per cell (default 10).
    #[arg(long)]
    seeds: Option<u64>,
    /// First seed value (default 0).
    #[arg(long)]
    seed_base: Option<u64>,
    /// validity | consistency | apva-def1 | abbba-lemma13 | complexity
    #[arg(long)]
    suite: Option<String>,
    /// Write per-run CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write an aggregate JSON summary here.
    #[arg(long)]
    json_summary: Option<PathBuf>,
    /// Permit n < 3t+1 (expected to produce violations).
    #[arg(long)]
    allow_subresilient: bool,
    /// Flat key=value file mirroring these flags; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ComplexityArgs {
    /// Comma-separated population sweep (default 4,7,10,13,16).
    #[arg(long)]
    ns: Option<String>,
    /// Input value length in bits (default 1024).
    #[arg(long)]
    ell: Option<usize>,
    /// Seeds per population (default 50).
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    seed_base: Option<u64>,
    /// Write the aggregate CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json_summary: Option<PathBuf>,
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Complexity(args) => cmd_complexity(args),
    }
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

/// Fill unset flags from a flat key=value file ('#' starts a comment).
fn merge_config(args: &mut RunArgs) -> Result<(), String> {
    let Some(path) = &args.config else { return Ok(()) };
    let text = std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("config line {}: expected key=value", lineno + 1));
        };
        let (key, value) = (key.trim(), value.trim().to_string());
        let parse_num = |v: &str| v.parse::<u64>().map_err(|_| format!("config {key}: bad number {v}"));
        match key {
            "protocol" => {
                args.protocol.get_or_insert(value);
            }
            "input" => {
                args.input.get_or_insert(value);
            }
            "adversary" => {
                args.adversary.get_or_insert(value);
            }
            "scheduler" => {
                args.scheduler.get_or_insert(value);
            }
            "suite" => {
                args.suite.get_or_insert(value);
            }
            "n" => {
                args.n.get_or_insert(parse_num(&value)? as usize);
            }
            "t" => {
                args.t.get_or_insert(parse_num(&value)? as usize);
            }
            "ell" => {
                args.ell.get_or_insert(parse_num(&value)? as usize);
            }
            "seeds" => {
                args.seeds.get_or_insert(parse_num(&value)?);
            }
            "seed_base" => {
                args.seed_base.get_or_insert(parse_num(&value)?);
            }
            "csv" => {
                args.csv.get_or_insert(PathBuf::from(value));
            }
            "json_summary" => {
                args.json_summary.get_or_insert(PathBuf::from(value));
            }
            "allow_subresilient" => {
                args.allow_subresilient |= value == "true" || value == "1";
            }
            other => return Err(format!("config line {}: unknown key {other}", lineno + 1)),
        }
    }
    Ok(())
}

fn cmd_run(mut args: RunArgs) -> ExitCode {
    if let Err(msg) = merge_config(&mut args) {
        return usage(&msg);
    }
    let seeds = args.seeds.unwrap_or(10);
    let seed_base = args.seed_base.unwrap_or(0);
    if seeds == 0 {
        return usage("--seeds must be at least 1");
    }

    if let Some(name) = &args.suite {
        let Some(kind) = SuiteKind::parse(name) else {
            return usage(&format!("unknown suite {name}"));
        };
        return run_suite_cmd(kind, &args, seeds, seed_base);
    }

    // Single-cell campaign.
    let protocol = match args.protocol.as_deref() {
        None => Protocol::Vector,
        Some(name) => match Protocol::parse(name) {
            Some(p) => p,
            None => return usage(&format!("unknown protocol {name}")),
        },
    };
    let n = args.n.unwrap_or(4);
    let t = args.t.unwrap_or(n.saturating_sub(1) / 3);
    if n == 0 || n > 255 {
        return usage("n must be in 1..=255");
    }
    if n < 3 * t + 1 && !args.allow_subresilient {
        return usage(&format!("n={n} < 3t+1={}; pass --allow-subresilient to proceed", 3 * t + 1));
    }
    let input_mode = match args.input.as_deref() {
        None => InputMode::Unanimous,
        Some(name) => match InputMode::parse(name) {
            Some(m) => m,
            None => return usage(&format!("unknown input mode {name}")),
        },
    };
    let adversary = match args.adversary.as_deref() {
        None => Adversary::None,
        Some(name) => match Adversary::parse(name) {
            Some(a) => a,
            None => return usage(&format!("unknown adversary {name}")),
        },
    };
    let scheduler = match args.scheduler.as_deref() {
        None => SchedulerKind::Fifo,
        Some(name) => match SchedulerKind::parse(name) {
            Some(s) => s,
            None => return usage(&format!("unknown scheduler {name}")),
        },
    };
    let ell = args.ell.unwrap_or(64);

    let cells: Vec<ScenarioConfig> = (0..seeds)
        .map(|i| {
            let mut cfg =
                ScenarioConfig::new(protocol, n, t, seed_base + i).with_seeded_byzantine(adversary);
            cfg.input_mode = input_mode;
            cfg.scheduler = scheduler;
            cfg.ell = ell;
            cfg
        })
        .collect();
    let result = run_campaign(cells);

    let mut csv = String::from(csv_header());
    csv.push('\n');
    for report in &result.reports {
        csv.push_str(&report.csv_row());
        csv.push('\n');
    }
    if let Err(code) = emit_csv(&csv, &args.csv) {
        return code;
    }
    if let Some(path) = &args.json_summary {
        let summary = aggregate_summary("run", None, &result, &[]);
        if let Err(code) = emit_json(&summary, path) {
            return code;
        }
    }
    finish(&result)
}

fn run_suite_cmd(kind: SuiteKind, args: &RunArgs, seeds: u64, seed_base: u64) -> ExitCode {
    let ns_override = args.n.map(|n| vec![n]);
    for n in ns_override.iter().flatten() {
        let t = (n.saturating_sub(1)) / 3;
        if *n < 3 * t + 1 && !args.allow_subresilient {
            return usage(&format!("n={n} < 3t+1; pass --allow-subresilient"));
        }
    }
    let report: SuiteReport = match kind {
        SuiteKind::Validity => {
            suite_validity(ns_override.as_deref().unwrap_or(&[4, 7]), seeds, seed_base)
        }
        SuiteKind::Consistency => {
            suite_consistency(ns_override.as_deref().unwrap_or(&[4, 7]), seeds, seed_base)
        }
        SuiteKind::ApvaDef1 => {
            suite_apva_def1(ns_override.as_deref().unwrap_or(&[4, 7, 10]), seeds, seed_base)
        }
        SuiteKind::AbbbaClauses => suite_abbba(seeds, seed_base),
        SuiteKind::Complexity => {
            let ns = ns_override.unwrap_or_else(|| vec![4, 7, 10, 13, 16]);
            let ell = args.ell.unwrap_or(1024);
            let (rows, report) = complexity_sweep(&ns, ell, seeds, seed_base);
            let mut csv = String::from(complexity_csv_header());
            csv.push('\n');
            for row in &rows {
                csv.push_str(&row.csv_row());
                csv.push('\n');
            }
            if let Err(code) = emit_csv(&csv, &args.csv) {
                return code;
            }
            for note in &report.notes {
                println!("# {note}");
            }
            if let Some(path) = &args.json_summary {
                let summary =
                    aggregate_summary("run", Some(kind.name()), &report.result, &report.notes);
                if let Err(code) = emit_json(&summary, path) {
                    return code;
                }
            }
            return finish(&report.result);
        }
    };

    let mut csv = String::from(csv_header());
    csv.push('\n');
    for r in &report.result.reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    if let Err(code) = emit_csv(&csv, &args.csv) {
        return code;
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    if let Some(path) = &args.json_summary {
        let summary = aggregate_summary("run", Some(kind.name()), &report.result, &report.notes);
        if let Err(code) = emit_json(&summary, path) {
            return code;
        }
    }
    finish(&report.result)
}

fn cmd_complexity(args: ComplexityArgs) -> ExitCode {
    let ns: Vec<usize> = match &args.ns {
        None => vec![4, 7, 10, 13, 16],
        Some(list) => {
            let mut ns = Vec::new();
            for part in list.split(',') {
                match part.trim().parse::<usize>() {
                    Ok(x) if x >= 1 && x <= 255 => ns.push(x),
                    _ => return usage(&format!("bad population {part}")),
                }
            }
            ns
        }
    };
    if ns.is_empty() {
        return usage("empty population sweep");
    }
    let ell = args.ell.unwrap_or(1024);
    let seeds = args.seeds.unwrap_or(50);
    if seeds == 0 {
        return usage("--seeds must be at least 1");
    }
    let (rows, report) = complexity_sweep(&ns, ell, seeds, args.seed_base.unwrap_or(0));
    let mut csv = String::from(complexity_csv_header());
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    if let Err(code) = emit_csv(&csv, &args.csv) {
        return code;
    }
    for note in &report.notes {
        println!("# {note}");
    }
    if let Some(path) = &args.json_summary {
        let summary =
            aggregate_summary("complexity", Some("complexity"), &report.result, &report.notes);
        if let Err(code) = emit_json(&summary, path) {
            return code;
        }
    }
    finish(&report.result)
}

fn emit_csv(csv: &str, path: &Option<PathBuf>) -> Result<(), ExitCode> {
    match path {
        Some(path) => std::fs::write(path, csv).map_err(|e| {
            eprintln!("error: writing {}: {e}", path.display());
            ExitCode::from(2)
        }),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn emit_json(summary: &serde_json::Value, path: &PathBuf) -> Result<(), ExitCode> {
    let text = serde_json::to_string_pretty(summary).expect("serializable summary");
    std::fs::write(path, text).map_err(|e| {
        eprintln!("error: writing {}: {e}", path.display());
        ExitCode::from(2)
    })
}

/// Aggregate means over a campaign: traffic by tag, elections, failures.
fn aggregate_summary(
    command: &str,
    suite: Option<&str>,
    result: &CampaignResult,
    notes: &[String],
) -> serde_json::Value {
    let runs = result.reports.len().max(1) as f64;
    let mean = |f: &dyn Fn(&RunReport) -> f64| {
        result.reports.iter().map(|r| f(r)).sum::<f64>() / runs
    };
    let mean_label =
        |label: Label| mean(&|r: &RunReport| r.metrics.bits_for(label) as f64);
    let liveness_failures =
        result.reports.iter().filter(|r| r.liveness.is_some()).count();
    let mut by_property: BTreeMap<&str, usize> = BTreeMap::new();
    for v in &result.violations {
        *by_property.entry(v.property).or_insert(0) += 1;
    }
    serde_json::json!({
        "command": command,
        "suite": suite,
        "runs": result.reports.len(),
        "mean_bits": {
            "total": mean(&|r| r.metrics.total_bits() as f64),
            "rbc": mean_label(Label::Rbc),
            "abba": mean_label(Label::Abba),
            "abbba": mean_label(Label::Abbba),
            "acidd": mean_label(Label::Acidd),
            "apva_stack": mean(&|r| r.bits_apva() as f64),
        },
        "mean_elections": mean(&|r| r.elections as f64),
        "mean_completion_step": mean(&|r| r.completion_step() as f64),
        "forced_deliveries": result.reports.iter().map(|r| r.forced).sum::<u64>(),
        "max_lateness": result.reports.iter().map(|r| r.max_lateness).max().unwrap_or(0),
        "liveness_failures": liveness_failures,
        "violation_count": result.violations.len(),
        "violations_by_property": by_property,
        "violations": result.violations.iter().take(100).map(Violation::to_string).collect::<Vec<_>>(),
        "notes": notes,
    })
}

/// Print failures and map the outcome to the exit-code contract.
fn finish(result: &CampaignResult) -> ExitCode {
    for v in result.violations.iter().take(50) {
        eprintln!("violation: {v}");
    }
    if result.violations.len() > 50 {
        eprintln!("... and {} more violations", result.violations.len() - 50);
    }
    let liveness = result.reports.iter().filter(|r| r.liveness.is_some()).count();
    if liveness > 0 {
        eprintln!("liveness failures: {liveness} run(s) stalled before all honest nodes finished");
    }
    if result.violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
