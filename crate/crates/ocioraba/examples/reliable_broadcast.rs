//! Reliable broadcast under fire: node 1 broadcasts an erasure-code share
//! to seven nodes, first fault-free, then with two corrupted nodes playing
//! each adversary style. Honest receivers either all deliver the same
//! payload or, when the corruption includes the leader, may deliver
//! nothing at all; they never split.

use ocioraba::core::NodeId;
use ocioraba::sim::{run_scenario, Adversary, Protocol, ScenarioConfig};
use ocioraba::suites::check_run;
use std::collections::BTreeSet;

fn main() {
    for adversary in [
        Adversary::None,
        Adversary::Silent,
        Adversary::CrashAfterK,
        Adversary::Equivocator,
        Adversary::RandomNoise,
    ] {
        let cfg = ScenarioConfig::new(Protocol::Rbc, 7, 2, 41).with_seeded_byzantine(adversary);
        report_line(cfg, adversary.name());
    }

    // A corrupt leader can refuse to broadcast; honest nodes then deliver
    // nothing, which the totality check accepts. What it would reject is a
    // partial delivery, and equivocation cannot cause one.
    let mut cfg = ScenarioConfig::new(Protocol::Rbc, 7, 2, 41);
    cfg.adversary = Adversary::Equivocator;
    cfg.byzantine = BTreeSet::from([NodeId(1), NodeId(4)]);
    report_line(cfg, "corrupt leader");
}

fn report_line(cfg: ScenarioConfig, label: &str) {
    let corrupt: Vec<u8> = cfg.byzantine.iter().map(|id| id.0).collect();
    let honest = cfg.n - corrupt.len();
    let report = run_scenario(&cfg);
    let delivered = report.outputs.len();
    let violations = check_run(&report);
    println!(
        "{:<14} corrupt={:?} delivered={}/{} agree={} bits={} violations={}",
        label,
        corrupt,
        delivered,
        honest,
        report.all_honest_agree(),
        report.metrics.total_bits(),
        violations.len(),
    );
    for v in violations {
        println!("  {v}");
    }
}
