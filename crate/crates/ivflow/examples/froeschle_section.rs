//! Poincare section of a four-dimensional symplectic map.
//!
//! Seeds are placed on the intersection of the section {psi1 = psi2} with a
//! level set of the adiabatic invariant; orbit points jumping over the
//! section are projected onto it along the interpolating field. Plotting
//! (psi, phi) from the output reproduces the area-preserving-map-like picture
//! of the four-dimensional dynamics.
//!
//! ```bash
//! cargo run --example froeschle_section [out_dir]
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use ivflow::adiabatic::InvariantSpec;
use ivflow::flow::IntegratorSettings;
use ivflow::ivf::IvfField;
use ivflow::maps::{FroeschleParams, MapFamily};
use ivflow::section::{section_cloud, seed_levelset, SectionSpec};

fn main() {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let eps = 0.2;
    let order = 10;
    let energy = 1.0;

    let map = Arc::new(MapFamily::froeschle_map(eps, FroeschleParams::default()));
    let field = IvfField::new(map.clone(), order).unwrap();
    let spec = InvariantSpec::for_map(&map).unwrap();

    let seeds = seed_levelset(&field, &spec, energy, &[0.0, 1.0, 2.0, 3.0], 25, 10.0).unwrap();
    println!("{} seeds on the h_{order} = {energy} level of the section", seeds.len());

    let section = SectionSpec::angle_difference(0, 1);
    let cloud = section_cloud(
        &field,
        &section,
        &seeds,
        200,
        1_000_000,
        &IntegratorSettings::with_tol(1e-12),
    );
    println!(
        "{} projected crossings ({} skipped, {} escaped seeds)",
        cloud.records.len(),
        cloud.skipped,
        cloud.escaped_seeds.len()
    );

    let path = out_dir.join("froeschle_section.csv");
    let mut buf = Vec::new();
    cloud.write_csv(&mut buf).unwrap();
    std::fs::write(&path, buf).unwrap();
    println!("wrote {} (plot psi vs phi)", path.display());
}
