//! The biased one-shot vote and its three guarantees: it terminates when a
//! one-claim is properly backed, a t+1 honest backing of the second
//! coordinate makes 0 impossible, and any 1 output traces back to at least
//! one honest one-input. The demo first replays seeded scenarios per input
//! mode, then exhausts every delivery order of a 4-node instance.

use ocioraba::sim::{run_scenario, Adversary, InputMode, Protocol, ScenarioConfig};
use ocioraba::suites::{abbba_exhaustive, check_run};

fn main() {
    for mode in [InputMode::Unanimous, InputMode::Split, InputMode::Random] {
        println!("{} pairs:", mode.name());
        for seed in 0..6 {
            let mut cfg = ScenarioConfig::new(Protocol::Abbba, 7, 2, seed)
                .with_seeded_byzantine(Adversary::RandomNoise);
            cfg.input_mode = mode;
            let report = run_scenario(&cfg);
            let violations = check_run(&report);
            let pairs: Vec<String> = report
                .honest_inputs()
                .map(|(_, input)| format!("{input:?}").replace("Pair ", ""))
                .collect();
            println!(
                "  seed {seed}: inputs {} -> decided={} violations={}",
                pairs.join(" "),
                report.decided(),
                violations.len(),
            );
        }
    }

    // Every input assignment, every corrupt-message content, every arrival
    // order at 4 nodes with 1 corrupt: the three guarantees hold in all of
    // them, checked right here.
    let (orders, violations) = abbba_exhaustive();
    println!("\nexhaustive sweep: {orders} delivery orders, {} violations", violations.len());
    for v in violations.iter().take(5) {
        println!("  {v}");
    }
}
