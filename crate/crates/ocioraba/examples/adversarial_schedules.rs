//! One agreement scenario replayed under every message scheduler: fifo,
//! seeded-random, lifo, a targeted delay that starves chosen recipients,
//! and a split-brain schedule that favors traffic inside two halves. Every
//! schedule is bounded-fair (no message is withheld forever), so honest
//! nodes agree under all of them; what changes is the outcome a split
//! input resolves to (a camp's value or the fallback) and the path taken,
//! visible in steps, forced deliveries, and worst message lateness.

use ocioraba::net::SchedulerKind;
use ocioraba::sim::{run_scenario, Adversary, InputMode, Protocol, ScenarioConfig};
use ocioraba::suites::check_run;

fn main() {
    println!(
        "{:<15} {:>16} {:>7} {:>6} {:>7} {:>13} {:>6}",
        "scheduler", "decided", "steps", "agree", "forced", "max_lateness", "clean"
    );
    for scheduler in SchedulerKind::all() {
        let mut cfg = ScenarioConfig::new(Protocol::Vector, 7, 2, 505)
            .with_seeded_byzantine(Adversary::Equivocator);
        cfg.input_mode = InputMode::Split;
        cfg.scheduler = scheduler;
        let report = run_scenario(&cfg);
        let violations = check_run(&report);
        println!(
            "{:<15} {:>16} {:>7} {:>6} {:>7} {:>13} {:>6}",
            scheduler.name(),
            report.decided(),
            report.completion_step(),
            report.all_honest_agree(),
            report.forced,
            report.max_lateness,
            violations.is_empty(),
        );
    }
}
