//! Preservation of the adiabatic invariant under one map step: sweep
//! `max |h_n(F(x)) - h_n(x)|` over a mesh for several orders and parameter
//! values. The sweep decreases like eps^(2n+1) until the quadrature floor.
//!
//! ```bash
//! cargo run --example delta_h_scan [out_dir]
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use ivflow::adiabatic::{delta_h_scan, write_scan_csv, InvariantSpec};
use ivflow::flow::GridSpec;
use ivflow::maps::MapFamily;

fn main() {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let grid = GridSpec::new(vec![-PI, -PI], vec![PI, PI], vec![30, 30]).unwrap();
    let spec = InvariantSpec::new(vec![0.0, 0.0]);
    let n_list: Vec<usize> = (1..=8).collect();
    let eps_list = [0.05, 0.1, 0.2, 0.4];

    let rows = delta_h_scan(
        &|eps| Arc::new(MapFamily::standard_map(eps)),
        &n_list,
        &eps_list,
        &grid,
        &spec,
    )
    .unwrap();

    print!("{:>4}", "n");
    for eps in eps_list {
        print!("{:>12}", format!("eps={eps}"));
    }
    println!();
    for &n in &n_list {
        print!("{n:>4}");
        for &eps in &eps_list {
            let r = rows
                .iter()
                .find(|r| r.n == n && r.epsilon == eps)
                .unwrap();
            print!("{:>12.2e}", r.max_delta_h);
        }
        println!();
    }

    let path = out_dir.join("delta_h_scan.csv");
    let mut buf = Vec::new();
    write_scan_csv(&rows, &mut buf).unwrap();
    std::fs::write(&path, buf).unwrap();
    println!("wrote {}", path.display());
}
