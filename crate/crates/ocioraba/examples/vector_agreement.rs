//! Partial-vector agreement: every node holds an opinion bit per index and
//! the protocol settles one common partial vector with at least n-t defined
//! entries, each backed by some honest opinion. Runs cover random opinions
//! under every adversary; the output column shows the agreed vector with
//! `_` for entries left missing.

use ocioraba::sim::{run_scenario, Adversary, InputMode, Protocol, ScenarioConfig};
use ocioraba::suites::check_run;

fn main() {
    println!("{:<13} {:>4} {:>9} {:>11} {:>9}  vector", "adversary", "seed", "elections", "steps", "clean");
    for adversary in [
        Adversary::None,
        Adversary::Silent,
        Adversary::CrashAfterK,
        Adversary::Equivocator,
        Adversary::RandomNoise,
    ] {
        for seed in 0..4 {
            let mut cfg =
                ScenarioConfig::new(Protocol::Apva, 7, 2, 900 + seed).with_seeded_byzantine(adversary);
            cfg.input_mode = InputMode::Random;
            let report = run_scenario(&cfg);
            let violations = check_run(&report);
            println!(
                "{:<13} {:>4} {:>9} {:>11} {:>9}  {}",
                adversary.name(),
                900 + seed,
                report.elections,
                report.completion_step(),
                violations.is_empty(),
                report.decided(),
            );
        }
    }
}
