//! Dynamics near a resonant island chain via the q-th iterate.
//!
//! At eps = 0.5 the standard map is no longer near the identity around the
//! 2-periodic chain at y ~ 2*pi, and the plain interpolating field gets the
//! local dynamics wrong. The second iterate IS near the identity there, and
//! its field recovers the island structure.
//!
//! ```bash
//! cargo run --example q_iterate_islands [out_dir]
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use ivflow::flow::{advance, IntegratorSettings};
use ivflow::ivf::IvfField;
use ivflow::linalg::norm2;
use ivflow::maps::{find_periodic_point, iterate_power, MapFamily};

fn main() {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let eps = 0.5;
    let order = 5;
    let map = Arc::new(MapFamily::standard_map(eps));
    let squared = Arc::new(iterate_power(map.clone(), 2));

    // the island centers sit on the 2-periodic orbit of the map
    let periodic = find_periodic_point(&map, 2, &[0.05, 6.2], 1e-12, 50).unwrap();
    let field_q1 = IvfField::new(map.clone(), order).unwrap();
    let field_q2 = IvfField::new(squared.clone(), order).unwrap();
    println!(
        "2-periodic point ({:.6}, {:.6}): |X_{order}| = {:.2e}, |X_(2,{order})| = {:.2e}",
        periodic[0],
        periodic[1],
        norm2(&field_q1.eval(&periodic).unwrap()),
        norm2(&field_q2.eval(&periodic).unwrap()),
    );

    // portraits: map iterates vs flow of the second-iterate field
    let settings = IntegratorSettings::default();
    let map_path = out_dir.join("islands_map.csv");
    let q2_path = out_dir.join("islands_q2_flow.csv");
    let mut map_csv = BufWriter::new(File::create(&map_path).unwrap());
    let mut q2_csv = BufWriter::new(File::create(&q2_path).unwrap());
    writeln!(map_csv, "seed_id,k,x,y").unwrap();
    writeln!(q2_csv, "seed_id,k,x,y").unwrap();
    let seeds = 25;
    for s in 0..seeds {
        let y0 = 5.6 + 1.3 * s as f64 / (seeds - 1) as f64;
        let mut by_map = vec![std::f64::consts::PI, y0];
        let mut by_flow = by_map.clone();
        for k in 0..400u64 {
            let rm = map.reduced(&by_map);
            let rf = map.reduced(&by_flow);
            writeln!(map_csv, "{s},{k},{},{}", rm[0], rm[1]).unwrap();
            writeln!(q2_csv, "{s},{k},{},{}", rf[0], rf[1]).unwrap();
            by_map = map.forward_vec(&by_map).unwrap();
            by_flow = advance(&field_q2, &by_flow, squared.step(), &settings).unwrap();
        }
    }
    println!("wrote {} and {}", map_path.display(), q2_path.display());
}
