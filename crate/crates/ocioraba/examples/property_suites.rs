//! Property campaigns in library form: build a grid of scenarios, run it
//! in parallel, and check every report against the deliverable guarantees
//! of its protocol. The same suites back the command-line runner and the
//! acceptance tests; here they run with small counts to stay quick.

use ocioraba::suites::{suite_apva_def1, suite_validity};

fn main() {
    let validity = suite_validity(&[4, 7], 2, 0xE0);
    let runs = validity.result.reports.len();
    println!(
        "validity suite: {} runs, {} violations",
        runs,
        validity.result.violations.len()
    );

    let apva = suite_apva_def1(&[4, 7], 50, 0xE1);
    println!(
        "vector-agreement suite: {} runs, {} violations",
        apva.result.reports.len(),
        apva.result.violations.len()
    );
    for v in apva.result.violations.iter().take(5) {
        println!("  {v}");
    }
}
