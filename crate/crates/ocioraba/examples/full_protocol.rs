//! End-to-end agreement on a 64-bit value, both stack variants side by
//! side: the star variant runs n parallel binary agreements over the
//! share-match bits, the vector variant replaces them with one
//! partial-vector agreement. Unanimous honest inputs must decide exactly
//! that value; split inputs decide one camp's value or the fallback.

use ocioraba::core::Label;
use ocioraba::sim::{run_scenario, Adversary, InputMode, Protocol, ScenarioConfig};
use ocioraba::suites::check_run;

fn main() {
    for protocol in [Protocol::Star, Protocol::Vector] {
        println!("{}:", protocol.name());
        for (mode, adversary) in [
            (InputMode::Unanimous, Adversary::None),
            (InputMode::Unanimous, Adversary::Equivocator),
            (InputMode::Split, Adversary::Silent),
        ] {
            let mut cfg =
                ScenarioConfig::new(protocol, 7, 2, 2026).with_seeded_byzantine(adversary);
            cfg.input_mode = mode;
            let report = run_scenario(&cfg);
            assert!(check_run(&report).is_empty(), "property violation");
            println!(
                "  {:<10} vs {:<13} decided={} agree={}",
                mode.name(),
                adversary.name(),
                report.decided(),
                report.all_honest_agree(),
            );
            println!(
                "    bits: total={} broadcast={} vector-stack={} binary={}",
                report.metrics.total_bits(),
                report.metrics.bits_for(Label::Rbc),
                report.bits_apva(),
                report.metrics.bits_for(Label::Abba),
            );
        }
    }
}
