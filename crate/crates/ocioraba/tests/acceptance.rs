//! Acceptance gate: one test per numbered criterion, each printing a
//! PASS/FAIL line (visible with --nocapture; on failure the line is shown
//! by the harness). Every check runs the real library code end to end.

use ocioraba::codec::{ec_decode, ec_encode};
use ocioraba::core::{BitString, Share};
use ocioraba::net::SchedulerKind;
use ocioraba::sim::{run_scenario, Adversary, InputMode, Protocol, ScenarioConfig};
use ocioraba::suites::{
    abbba_exhaustive, check_run, complexity_sweep, full_protocol_grid, run_campaign,
    suite_abbba, suite_apva_def1,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn verdict(k: u32, ok: bool, detail: &str) {
    println!("ACCEPTANCE {k}: {} — {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {k}: {detail}");
}

/// All k-element index subsets of 0..n, visited in lexicographic order.
fn for_each_subset(n: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(n: usize, k: usize, start: usize, acc: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if acc.len() == k {
            visit(acc);
            return;
        }
        for i in start..n {
            acc.push(i);
            rec(n, k, i + 1, acc, visit);
            acc.pop();
        }
    }
    rec(n, k, 0, &mut Vec::new(), visit);
}

#[test]
fn acceptance_1_codec_every_k_subset_decodes() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);
    let mut subsets_checked = 0u64;
    let mut ok = true;
    for n in [4usize, 7, 10] {
        let t = (n - 1) / 3;
        let k = t + 1;
        for _ in 0..20 {
            let ell = rng.gen_range(1..=256);
            let msg = BitString::random(&mut rng, ell);
            let shares = ec_encode(n, k, &msg).expect("encode");
            for_each_subset(n, k, &mut |subset| {
                subsets_checked += 1;
                let picked: Vec<Share> = subset.iter().map(|i| shares[*i].clone()).collect();
                let decoded = ec_decode(n, k, &picked).expect("decode");
                if decoded.is_garbage() || decoded.into_bits() != msg {
                    ok = false;
                }
            });
        }
    }
    let elapsed = started.elapsed();
    let within_budget = elapsed.as_secs() < 10;
    verdict(
        1,
        ok && within_budget,
        &format!("{subsets_checked} subset decodes over n in {{4,7,10}} in {elapsed:.2?} (budget 10s)"),
    );
}

#[test]
fn acceptance_2_abbba_clauses_hold() {
    let (cases, exhaustive_violations) = abbba_exhaustive();
    let seeded = suite_abbba(500, 0x2BBA);
    let violations = exhaustive_violations.len() + seeded.result.violations.len();
    let ok = violations == 0 && cases <= 100_000;
    verdict(
        2,
        ok,
        &format!(
            "{cases} exhaustive delivery orders (cap 100000) and {} seeded n=7 equivocator runs, {violations} violations",
            seeded.result.reports.len(),
        ),
    );
}

#[test]
fn acceptance_3_rbc_contract() {
    let mut cells = Vec::new();
    let mut counter = 0u64;
    let scheds = SchedulerKind::all();
    for n in [4usize, 7] {
        let t = (n - 1) / 3;
        for adversary in [Adversary::Silent, Adversary::Equivocator, Adversary::CrashAfterK] {
            for s in 0..300u64 {
                let mut cfg = ScenarioConfig::new(Protocol::Rbc, n, t, 0x3BC0 + counter)
                    .with_seeded_byzantine(adversary);
                cfg.scheduler = scheds[(s % 5) as usize];
                counter += 1;
                cells.push(cfg);
            }
        }
    }
    let total = cells.len();
    let result = run_campaign(cells);
    let ok = result.violations.is_empty();
    let detail = format!(
        "{total} broadcast runs across 3 adversaries and n in {{4,7}}, {} violations{}",
        result.violations.len(),
        result.violations.first().map(|v| format!("; first: {v}")).unwrap_or_default(),
    );
    verdict(3, ok, &detail);
}

#[test]
fn acceptance_4_apva_definition_suite() {
    let report = suite_apva_def1(&[4, 7, 10], 300, 0x4DEF);
    let ok = report.result.violations.is_empty();
    let detail = format!(
        "{} vector-agreement runs over the adversary x scheduler grid, {} violations{}",
        report.result.reports.len(),
        report.result.violations.len(),
        report.result.violations.first().map(|v| format!("; first: {v}")).unwrap_or_default(),
    );
    verdict(4, ok, &detail);
}

#[test]
fn acceptance_5_full_protocol_grid() {
    let started = Instant::now();
    let mut runs = 0usize;
    let mut violations = Vec::new();
    // Chunk per (n, mode) so report memory stays flat across 120k runs.
    for n in [4usize, 7, 10, 13] {
        for mode in InputMode::all() {
            let cells = full_protocol_grid(&[n], &[mode], 200, 0x5000);
            runs += cells.len();
            let mut result = run_campaign(cells);
            violations.append(&mut result.violations);
        }
    }
    let elapsed = started.elapsed();
    let ok = violations.is_empty() && elapsed.as_secs() < 30 * 60;
    let detail = format!(
        "{runs} runs over (protocol, n, input, adversary, scheduler) in {elapsed:.1?} (budget 30min), {} violations{}",
        violations.len(),
        violations.first().map(|v| format!("; first: {v}")).unwrap_or_default(),
    );
    verdict(5, ok, &detail);
}

#[test]
fn acceptance_6_election_rounds_stay_constant() {
    let mut worst: (f64, &str) = (0.0, "fifo");
    for scheduler in SchedulerKind::all() {
        let cells: Vec<ScenarioConfig> = (0..200u64)
            .map(|s| {
                let mut cfg = ScenarioConfig::new(Protocol::Vector, 16, 5, 0x6000 + s)
                    .with_seeded_byzantine(Adversary::Silent);
                cfg.scheduler = scheduler;
                cfg
            })
            .collect();
        let result = run_campaign(cells);
        assert!(result.violations.is_empty(), "{}", result.violations[0]);
        let mean = result.reports.iter().map(|r| r.elections as f64).sum::<f64>()
            / result.reports.len() as f64;
        if mean > worst.0 {
            worst = (mean, scheduler.name());
        }
    }
    let ok = worst.0 <= 3.0;
    verdict(
        6,
        ok,
        &format!("worst mean elections {:.2} (under {}) at n=16 over 200 seeds per scheduler, bound 3.0", worst.0, worst.1),
    );
}

#[test]
fn acceptance_7_communication_scaling() {
    let (rows, report) = complexity_sweep(&[4, 7, 10, 13, 16], 1024, 50, 0x7000);
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio_apva_ncube).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let band_ok = hi / lo <= 2.0;
    let note_present = report
        .notes
        .iter()
        .any(|n| n.contains("reported, not certified"));
    let clean = report.result.violations.is_empty();
    let ok = band_ok && note_present && clean;
    verdict(
        7,
        ok,
        &format!(
            "per-node-cubed ratios {:?} span x{:.2} (bound x2); broadcast-bits caveat documented: {note_present}",
            ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>(),
            hi / lo,
        ),
    );
}

#[test]
fn acceptance_8_replay_determinism() {
    let mut configs = Vec::new();
    for (protocol, scheduler, adversary) in [
        (Protocol::Vector, SchedulerKind::Random, Adversary::RandomNoise),
        (Protocol::Star, SchedulerKind::Lifo, Adversary::Equivocator),
        (Protocol::Apva, SchedulerKind::SplitBrain, Adversary::CrashAfterK),
    ] {
        let mut cfg = ScenarioConfig::new(protocol, 7, 2, 0x8888).with_seeded_byzantine(adversary);
        cfg.scheduler = scheduler;
        cfg.input_mode = InputMode::Random;
        configs.push(cfg);
    }
    let mut ok = true;
    for cfg in &configs {
        let rows: Vec<String> = (0..3).map(|_| run_scenario(cfg).csv_row()).collect();
        if rows[0] != rows[1] || rows[1] != rows[2] {
            ok = false;
        }
    }
    verdict(8, ok, "3 configs replayed 3x each produce byte-identical CSV rows");
}

#[test]
fn acceptance_9_subresilient_checks_can_fail() {
    let mut failing_runs = 0usize;
    for (i, protocol) in [Protocol::Star, Protocol::Vector].into_iter().enumerate() {
        for s in 0..100u64 {
            // n = 3t: one node beyond the tolerated bound.
            let mut cfg = ScenarioConfig::new(protocol, 6, 2, 0x9000 + i as u64 * 100 + s)
                .with_seeded_byzantine(Adversary::Equivocator);
            cfg.scheduler = SchedulerKind::Random;
            let report = run_scenario(&cfg);
            if !check_run(&report).is_empty() {
                failing_runs += 1;
            }
        }
    }
    let ok = failing_runs >= 1;
    verdict(
        9,
        ok,
        &format!("{failing_runs}/200 equivocator runs at n=3t falsified a property or stalled"),
    );
}
