//! Phase portrait of the standard map next to the portrait of the time-eps
//! map of its interpolating vector field. The two clouds are visually
//! indistinguishable at eps = 0.1.
//!
//! ```bash
//! cargo run --example standard_map_portrait [out_dir]
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use ivflow::flow::{advance, IntegratorSettings};
use ivflow::ivf::IvfField;
use ivflow::maps::MapFamily;

fn main() {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let eps = 0.1;
    let order = 5;
    let seeds = 60;
    let iterates = 400u64;

    let map = Arc::new(MapFamily::standard_map(eps));
    let field = IvfField::new(map.clone(), order).unwrap();
    let settings = IntegratorSettings::default();

    let map_path = out_dir.join("standard_map_cloud.csv");
    let flow_path = out_dir.join("ivf_flow_cloud.csv");
    let mut map_csv = BufWriter::new(File::create(&map_path).unwrap());
    let mut flow_csv = BufWriter::new(File::create(&flow_path).unwrap());
    writeln!(map_csv, "seed_id,k,x,y").unwrap();
    writeln!(flow_csv, "seed_id,k,x,y").unwrap();

    for s in 0..seeds {
        let y0 = -2.0 * std::f64::consts::PI
            + 4.0 * std::f64::consts::PI * s as f64 / (seeds - 1) as f64;
        let mut by_map = vec![0.0, y0];
        let mut by_flow = by_map.clone();
        for k in 0..=iterates {
            let rm = map.reduced(&by_map);
            let rf = map.reduced(&by_flow);
            writeln!(map_csv, "{s},{k},{},{}", rm[0], rm[1]).unwrap();
            writeln!(flow_csv, "{s},{k},{},{}", rf[0], rf[1]).unwrap();
            by_map = map.forward_vec(&by_map).unwrap();
            by_flow = advance(&field, &by_flow, eps, &settings).unwrap();
        }
    }
    println!(
        "wrote {} and {} ({} seeds x {} iterates, order {order})",
        map_path.display(),
        flow_path.display(),
        seeds,
        iterates
    );
}
