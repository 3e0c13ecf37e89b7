//! Derivative coefficient tables and the identities they satisfy.
//!
//! ```bash
//! cargo run --example coeff_tables
//! ```

use ivflow::coeffs::{harmonic, CoeffTable};

fn main() {
    for n in [1usize, 2, 3, 5, 10] {
        let table = CoeffTable::new(n).unwrap();
        print!("n = {n:2}: p_nk =");
        for k in 1..=n as i64 {
            print!(" {:+.6}", table.coeff(k));
        }
        println!();
        println!(
            "        moment j=1: {:.3e} (= 1),  j=2: {:.1e} (= 0),  sum|p| - H_n/2: {:+.1e}",
            table.moment_sum(1),
            table.moment_sum(2),
            table.abs_sum() - harmonic(n) / 2.0
        );
    }

    println!("\nfull order-4 table as CSV:");
    CoeffTable::new(4)
        .unwrap()
        .write_csv(std::io::stdout().lock())
        .unwrap();
}
