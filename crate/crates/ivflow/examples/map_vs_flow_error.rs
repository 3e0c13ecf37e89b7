//! Level data for `log10 |Phi^eps_{X_n}(x) - F(x)|` over a phase-space grid
//! of the standard map: how well the time-eps flow of the interpolating
//! field reproduces one map step, and how the error shrinks with the order.
//!
//! ```bash
//! cargo run --example map_vs_flow_error [out_dir]
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use ivflow::flow::{flowmap_error_grid, GridSpec, IntegratorSettings};
use ivflow::ivf::IvfField;
use ivflow::maps::MapFamily;

fn main() {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let eps = 0.1;
    let map = Arc::new(MapFamily::standard_map(eps));
    let grid = GridSpec::new(vec![-PI, -2.0 * PI], vec![PI, 2.0 * PI], vec![120, 120]).unwrap();
    let settings = IntegratorSettings::with_tol(1e-12);

    for n in [5usize, 10, 15] {
        let field = IvfField::new(map.clone(), n).unwrap();
        let result = flowmap_error_grid(&field, &grid, &settings);
        let path = out_dir.join(format!("flow_error_n{n}.csv"));
        let mut buf = Vec::new();
        result.write_csv(&mut buf).unwrap();
        std::fs::write(&path, buf).unwrap();
        println!(
            "n = {n:2}: max log10 error {:+.2} over {} points ({} failures) -> {}",
            result.max_error().log10(),
            grid.len(),
            result.failures,
            path.display()
        );
    }
}
