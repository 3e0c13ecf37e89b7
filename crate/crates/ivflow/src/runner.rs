//! Experiment orchestration: executes a validated [`ExperimentConfig`],
//! writes the CSV artifact atomically (temp file + rename) and records a run
//! manifest next to it.
//!
//! Numerical results are deterministic for a fixed config: parallel loops
//! preserve point order and reductions run in a fixed order, so CSV bodies
//! are byte-identical across worker counts.

use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::adiabatic::{self};
use crate::coeffs::CoeffTable;
use crate::config::{
    build_invariant, build_map, config_hash, cost_estimate, validate, ExperimentConfig,
    ExperimentKind, SeedsConfig,
};
use crate::error::{Error, Result};
use crate::flow::{self};
use crate::ivf::IvfField;
use crate::maps::MapFamily;
use crate::section;

#[derive(Debug)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
    pub failures: usize,
    pub map_applications: u64,
    pub field_evaluations: u64,
    pub wall_seconds: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: String,
    crate_version: &'a str,
    kind: &'a str,
    wall_seconds: f64,
    map_applications: u64,
    field_evaluations: u64,
    failures: usize,
    outputs: Vec<String>,
    created_unix: u64,
}

/// Run an experiment end to end. Relative output paths are resolved against
/// `out_dir` when given.
pub fn run(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
    workers: Option<usize>,
    quiet: bool,
) -> Result<RunSummary> {
    let report = validate(cfg);
    if !report.is_ok() {
        return Err(Error::Config(report.problems.join("; ")));
    }
    if !quiet {
        if let Some(cost) = cost_estimate(cfg) {
            if cost.map_applications > 50_000_000 {
                eprintln!(
                    "note: estimated cost ~{:.2e} map applications over {} points",
                    cost.map_applications as f64, cost.points
                );
            }
        }
    }

    let started = Instant::now();
    let workers = workers.or(cfg.workers);
    let body = match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| execute(cfg))?
        }
        None => execute(cfg)?,
    };

    let out_path = resolve_output(&cfg.output, out_dir);
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    atomic_write(&out_path, body.csv.as_bytes())?;

    let wall_seconds = started.elapsed().as_secs_f64();
    let manifest = Manifest {
        config_hash: config_hash(cfg),
        crate_version: env!("CARGO_PKG_VERSION"),
        kind: cfg.kind.name(),
        wall_seconds,
        map_applications: body.map_applications,
        field_evaluations: body.field_evaluations,
        failures: body.failures,
        outputs: vec![out_path.display().to_string()],
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let manifest_path = out_path.with_extension("manifest.json");
    atomic_write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;

    if !quiet {
        eprintln!(
            "{}: wrote {} ({} failures, {:.2}s)",
            cfg.kind.name(),
            out_path.display(),
            body.failures,
            wall_seconds
        );
    }
    Ok(RunSummary {
        outputs: vec![out_path, manifest_path],
        failures: body.failures,
        map_applications: body.map_applications,
        field_evaluations: body.field_evaluations,
        wall_seconds,
    })
}

fn resolve_output(output: &str, out_dir: Option<&Path>) -> PathBuf {
    let p = PathBuf::from(output);
    match out_dir {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

struct Body {
    csv: String,
    failures: usize,
    map_applications: u64,
    field_evaluations: u64,
}

impl Body {
    fn new(csv: String, failures: usize) -> Self {
        Body {
            csv,
            failures,
            map_applications: 0,
            field_evaluations: 0,
        }
    }

    fn with_counts(mut self, map: &MapFamily, field: Option<&IvfField>) -> Self {
        self.map_applications = map.applications();
        self.field_evaluations = field.map(|f| f.evaluations()).unwrap_or(0);
        self
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<Body> {
    match cfg.kind {
        ExperimentKind::CoeffDump => coeff_dump(cfg),
        ExperimentKind::Iterate => iterate(cfg),
        ExperimentKind::FlowError => flow_error(cfg),
        ExperimentKind::RestoreField => restore_field(cfg),
        ExperimentKind::DhScan => dh_scan(cfg),
        ExperimentKind::Section => section_run(cfg),
        ExperimentKind::InvariantSeries => invariant_series(cfg),
        ExperimentKind::SeedLevelset => seed_levelset(cfg),
    }
}

fn coeff_dump(cfg: &ExperimentConfig) -> Result<Body> {
    let n = cfg.coeffs.as_ref().unwrap().n;
    let table = CoeffTable::new(n)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    Ok(Body::new(String::from_utf8(buf).unwrap(), 0))
}

fn materialize_seeds(
    cfg: &ExperimentConfig,
    seeds: &SeedsConfig,
    map: &Arc<MapFamily>,
) -> Result<Vec<Vec<f64>>> {
    use rand::{Rng, SeedableRng};
    match seeds {
        SeedsConfig::List { points } => Ok(points.clone()),
        SeedsConfig::Line { from, to, count } => {
            let count = (*count).max(1);
            Ok((0..count)
                .map(|i| {
                    let s = if count == 1 {
                        0.0
                    } else {
                        i as f64 / (count - 1) as f64
                    };
                    from.iter().zip(to).map(|(a, b)| a + s * (b - a)).collect()
                })
                .collect())
        }
        SeedsConfig::Random { lo, hi, count } => {
            let mut rng = rand::rngs::StdRng::seed_from_u64(cfg.rng_seed.unwrap_or(0));
            Ok((0..*count)
                .map(|_| {
                    lo.iter()
                        .zip(hi)
                        .map(|(a, b)| rng.gen_range(*a..*b))
                        .collect()
                })
                .collect())
        }
        SeedsConfig::Levelset {
            energy,
            psi_values,
            count_per_psi,
            j2_max,
        } => {
            let n = cfg
                .ivf
                .as_ref()
                .ok_or_else(|| Error::Config("levelset seeds need an `ivf` block".into()))?
                .n;
            let field = IvfField::new(map.clone(), n)?;
            let spec = build_invariant(cfg.invariant.as_ref(), map)?;
            section::seed_levelset(
                &field,
                &spec,
                *energy,
                psi_values,
                *count_per_psi,
                j2_max.unwrap_or(10.0),
            )
        }
    }
}

fn iterate(cfg: &ExperimentConfig) -> Result<Body> {
    let map = build_map(cfg.map.as_ref().unwrap())?;
    let orbit_cfg = cfg.orbit.as_ref().unwrap();
    let iterates = orbit_cfg.iterates.unwrap();
    let seeds = materialize_seeds(cfg, &orbit_cfg.seeds, &map)?;
    let field = if orbit_cfg.use_ivf_flow {
        Some(Arc::new(IvfField::new(
            map.clone(),
            cfg.ivf.as_ref().unwrap().n,
        )?))
    } else {
        None
    };
    let settings = cfg
        .integrator
        .as_ref()
        .map(|c| c.build())
        .unwrap_or_default();

    let per_seed: Vec<(String, usize)> = seeds
        .par_iter()
        .enumerate()
        .map(|(id, seed)| {
            let mut rows = String::new();
            let mut failures = 0usize;
            let mut x = map.reduced(seed);
            for k in 0..=iterates {
                let red = map.reduced(&x);
                let _ = write!(rows, "{id},{k}");
                for c in &red {
                    let _ = write!(rows, ",{c}");
                }
                rows.push('\n');
                if k == iterates {
                    break;
                }
                let next = match &field {
                    Some(f) => flow::advance(f, &x, map.step(), &settings),
                    None => map.forward_vec(&x),
                };
                match next {
                    Ok(v) if map.domain().contains(&v) => x = v,
                    _ => {
                        failures += 1;
                        break;
                    }
                }
            }
            (rows, failures)
        })
        .collect();

    let mut csv = String::from("seed_id,k");
    for j in 0..map.dim() {
        let _ = write!(csv, ",x{}", j + 1);
    }
    csv.push('\n');
    let mut failures = 0;
    for (rows, f) in per_seed {
        csv.push_str(&rows);
        failures += f;
    }
    Ok(Body::new(csv, failures).with_counts(&map, field.as_deref()))
}

fn flow_error(cfg: &ExperimentConfig) -> Result<Body> {
    let map = build_map(cfg.map.as_ref().unwrap())?;
    let field = IvfField::new(map.clone(), cfg.ivf.as_ref().unwrap().n)?;
    let grid = cfg.grid.as_ref().unwrap().build()?;
    let settings = cfg
        .integrator
        .as_ref()
        .map(|c| c.build())
        .unwrap_or_default();
    let result = flow::flowmap_error_grid(&field, &grid, &settings);
    let mut buf = Vec::new();
    result.write_csv(&mut buf)?;
    Ok(Body::new(String::from_utf8(buf).unwrap(), result.failures)
        .with_counts(&map, Some(&field)))
}

fn restore_field(cfg: &ExperimentConfig) -> Result<Body> {
    let map = build_map(cfg.map.as_ref().unwrap())?;
    if !map.has_limit_field() {
        return Err(Error::NoLimitField);
    }
    let field = IvfField::new(map.clone(), cfg.ivf.as_ref().unwrap().n)?;
    let grid = cfg.grid.as_ref().unwrap().build()?;
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let mut truth = vec![0.0; map.dim()];
            if map.limit_field(&x, &mut truth).is_err() {
                return f64::NAN;
            }
            match field.eval(&x) {
                Ok(v) => crate::linalg::dist2(&v, &truth).log10(),
                Err(_) => f64::NAN,
            }
        })
        .collect();
    let failures = values.iter().filter(|v| v.is_nan()).count();
    let mut csv = String::new();
    for j in 0..grid.dim() {
        let _ = write!(csv, "x{},", j + 1);
    }
    csv.push_str("log10_err\n");
    for (i, v) in values.iter().enumerate() {
        for c in &grid.point(i) {
            let _ = write!(csv, "{c},");
        }
        let _ = writeln!(csv, "{v}");
    }
    Ok(Body::new(csv, failures).with_counts(&map, Some(&field)))
}

fn dh_scan(cfg: &ExperimentConfig) -> Result<Body> {
    let map_cfg = cfg.map.as_ref().unwrap();
    let scan = cfg.scan.as_ref().unwrap();
    let grid = cfg.grid.as_ref().unwrap().build()?;
    let probe = build_map(map_cfg)?;
    let spec = build_invariant(cfg.invariant.as_ref(), &probe)?;

    let built: Mutex<Vec<Arc<MapFamily>>> = Mutex::new(Vec::new());
    let builder = |eps: f64| -> Arc<MapFamily> {
        let mut c = map_cfg.clone();
        c.epsilon = eps;
        let m = build_map(&c).expect("map rebuild at scanned epsilon");
        built.lock().unwrap().push(m.clone());
        m
    };
    let rows = adiabatic::delta_h_scan(&builder, &scan.n_list, &scan.epsilon_list, &grid, &spec)?;
    let mut buf = Vec::new();
    adiabatic::write_scan_csv(&rows, &mut buf)?;
    let failures = rows.iter().map(|r| r.failures).sum();
    let map_applications = built
        .lock()
        .unwrap()
        .iter()
        .map(|m| m.applications())
        .sum();
    let mut body = Body::new(String::from_utf8(buf).unwrap(), failures);
    body.map_applications = map_applications;
    Ok(body)
}

fn section_run(cfg: &ExperimentConfig) -> Result<Body> {
    let map = build_map(cfg.map.as_ref().unwrap())?;
    let field = IvfField::new(map.clone(), cfg.ivf.as_ref().unwrap().n)?;
    let spec = cfg.section.as_ref().unwrap().build();
    let orbit_cfg = cfg.orbit.as_ref().unwrap();
    let seeds = materialize_seeds(cfg, &orbit_cfg.seeds, &map)?;
    let settings = cfg
        .integrator
        .as_ref()
        .map(|c| c.build())
        .unwrap_or_default();
    let cloud = section::section_cloud(
        &field,
        &spec,
        &seeds,
        orbit_cfg.crossings_per_seed.unwrap(),
        orbit_cfg.max_iterates.unwrap_or(10_000_000),
        &settings,
    );
    let mut buf = Vec::new();
    cloud.write_csv(&mut buf)?;
    let failures = cloud.skipped + cloud.escaped_seeds.len() + cloud.in_section_seeds.len();
    Ok(Body::new(String::from_utf8(buf).unwrap(), failures).with_counts(&map, Some(&field)))
}

fn invariant_series(cfg: &ExperimentConfig) -> Result<Body> {
    let map = build_map(cfg.map.as_ref().unwrap())?;
    let field = IvfField::new(map.clone(), cfg.ivf.as_ref().unwrap().n)?;
    let spec = build_invariant(cfg.invariant.as_ref(), &map)?;
    let orbit_cfg = cfg.orbit.as_ref().unwrap();
    let seeds = materialize_seeds(cfg, &orbit_cfg.seeds, &map)?;
    let seed = seeds
        .first()
        .ok_or_else(|| Error::Config("invariant-series needs at least one seed".into()))?;
    let stride = orbit_cfg.sample_every.unwrap_or(1).max(1);
    let section_spec = cfg.section.as_ref().map(|s| s.build());
    let mut failures = 0usize;
    let samples = adiabatic::invariant_series(
        &field,
        &spec,
        seed,
        orbit_cfg.iterates.unwrap(),
        stride,
        section_spec.as_ref(),
        |_, _| failures += 1,
    )?;
    let mut buf = Vec::new();
    adiabatic::write_series_csv(&samples, &mut buf)?;
    Ok(Body::new(String::from_utf8(buf).unwrap(), failures).with_counts(&map, Some(&field)))
}

fn seed_levelset(cfg: &ExperimentConfig) -> Result<Body> {
    let map = build_map(cfg.map.as_ref().unwrap())?;
    let field = IvfField::new(map.clone(), cfg.ivf.as_ref().unwrap().n)?;
    let spec = build_invariant(cfg.invariant.as_ref(), &map)?;
    let l = cfg.levelset.as_ref().unwrap();
    let seeds = section::seed_levelset(
        &field,
        &spec,
        l.energy,
        &l.psi_values,
        l.count_per_psi,
        l.j2_max.unwrap_or(10.0),
    )?;
    let mut csv = String::new();
    for j in 0..map.dim() {
        let _ = write!(csv, "x{},", j + 1);
    }
    csv.push_str("h_n\n");
    let mut failures = 0usize;
    for s in &seeds {
        for c in s {
            let _ = write!(csv, "{c},");
        }
        match adiabatic::invariant(&field, &spec, s) {
            Ok(h) => {
                let _ = writeln!(csv, "{h}");
            }
            Err(_) => {
                failures += 1;
                let _ = writeln!(csv, "NaN");
            }
        }
    }
    Ok(Body::new(csv, failures).with_counts(&map, Some(&field)))
}
