//! Communication scaling of the vector-stack agreement: fault-free runs on
//! a 1024-bit input across growing networks, averaged per network size.
//! The vector-stack column is the dispersal, biased-vote, and binary
//! agreement traffic; dividing it by n^3 should give a roughly flat ratio,
//! and the election count should stay near one whatever the size.

use ocioraba::suites::{complexity_csv_header, complexity_sweep};

fn main() {
    let (rows, report) = complexity_sweep(&[4, 7, 10, 13, 16], 1024, 30, 0xC0DE);
    println!("{}", complexity_csv_header());
    for row in &rows {
        println!("{}", row.csv_row());
    }

    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio_apva_ncube).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
    println!("\nvector-stack bits / n^3 spans x{:.2} across sizes", hi / lo);
    for note in &report.notes {
        println!("note: {note}");
    }
}
