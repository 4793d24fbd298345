//! Randomized binary agreement in three conditions. With seven nodes, two
//! silently crashed, and a 3/2 honest split, only the larger camp's bit
//! can assemble a relay quorum, so it always wins. With four fault-free
//! nodes split 2/2 under a shuffled delivery order, both bits stay alive
//! and the round coin breaks the tie. And a unanimous run decides the
//! common input no matter what the corrupt nodes or the coins do.

use ocioraba::net::SchedulerKind;
use ocioraba::sim::{run_scenario, Adversary, InputMode, Protocol, ScenarioConfig};
use ocioraba::suites::check_run;

fn main() {
    println!("3/2 split, silent faults: majority camp wins");
    println!("{:<6} {:>7} {:>10} {:>7}", "seed", "decided", "steps", "agree");
    for seed in 0..6 {
        let mut cfg =
            ScenarioConfig::new(Protocol::Abba, 7, 2, seed).with_seeded_byzantine(Adversary::Silent);
        cfg.input_mode = InputMode::Split;
        let report = run_scenario(&cfg);
        assert!(check_run(&report).is_empty());
        println!(
            "{:<6} {:>7} {:>10} {:>7}",
            seed,
            report.decided(),
            report.completion_step(),
            report.all_honest_agree(),
        );
    }

    println!("\neven split, fault-free, shuffled delivery: the coin breaks the tie");
    print!("decided by seed:");
    for seed in 0..12 {
        let mut cfg = ScenarioConfig::new(Protocol::Abba, 4, 1, seed);
        cfg.input_mode = InputMode::Split;
        cfg.scheduler = SchedulerKind::Random;
        let report = run_scenario(&cfg);
        assert!(check_run(&report).is_empty());
        print!(" {}", report.decided());
    }
    println!();

    // Unanimity pins the outcome regardless of coin flips.
    println!("\nunanimous inputs decide the common bit:");
    for seed in 0..4 {
        let mut cfg = ScenarioConfig::new(Protocol::Abba, 7, 2, seed)
            .with_seeded_byzantine(Adversary::Equivocator);
        cfg.input_mode = InputMode::Unanimous;
        let report = run_scenario(&cfg);
        assert!(check_run(&report).is_empty());
        let inputs: Vec<String> =
            report.honest_inputs().map(|(id, input)| format!("{id}<-{input:?}")).collect();
        println!("seed {seed}: decided={} from {}", report.decided(), inputs.first().unwrap());
    }
}
