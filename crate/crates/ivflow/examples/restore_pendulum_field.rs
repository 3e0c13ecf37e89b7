//! Recovering a vector field from its time-eps map.
//!
//! The time-eps map of the pendulum is handed to the interpolation machinery
//! as a black box; the order-n field then matches the true right-hand side to
//! O(eps^2n), doubling the convergence order with every unit of n.
//!
//! ```bash
//! cargo run --example restore_pendulum_field
//! ```

use std::sync::Arc;

use ivflow::ivf::IvfField;
use ivflow::maps::MapFamily;

fn pendulum_map(eps: f64) -> Arc<MapFamily> {
    Arc::new(MapFamily::flow_map(
        |x, out| {
            out[0] = x[1];
            out[1] = -x[0].sin();
        },
        2,
        eps,
        1e-14,
    ))
}

fn main() {
    let epsilons = [0.1, 0.05, 0.025, 0.0125];
    println!("max |X_n - Y| over a 10x10 grid in [-2,2]^2:");
    print!("{:>8}", "eps");
    for n in 1..=3 {
        print!("{:>14}", format!("n = {n}"));
    }
    println!();
    let mut rows = Vec::new();
    for &eps in &epsilons {
        print!("{eps:>8}");
        let mut row = Vec::new();
        for n in 1..=3usize {
            let field = IvfField::new(pendulum_map(eps), n).unwrap();
            let mut worst = 0.0f64;
            for i in 0..10 {
                for j in 0..10 {
                    let x = -2.0 + 4.0 * i as f64 / 9.0;
                    let y = -2.0 + 4.0 * j as f64 / 9.0;
                    let v = field.eval(&[x, y]).unwrap();
                    let err = ((v[0] - y).powi(2) + (v[1] + x.sin()).powi(2)).sqrt();
                    worst = worst.max(err);
                }
            }
            print!("{worst:>14.3e}");
            row.push(worst);
        }
        println!();
        rows.push(row);
    }
    for n in 1..=3usize {
        let top = rows[0][n - 1];
        let bottom = rows[3][n - 1];
        let slope = (top / bottom).ln() / (epsilons[0] / epsilons[3]).ln();
        println!("order n = {n}: observed convergence rate {slope:.2} (expected about {})", 2 * n);
    }
}
