//! Adiabatic invariants of symplectic near-identity maps.
//!
//! For a symplectic family the interpolating field is close to a Hamiltonian
//! one, and the line integral of the one-form `nu_n = omega(X_n, .)` from a
//! base point,
//!
//! ```text
//! h_n(x) = integral over the segment x_b -> x of omega(X_n(gamma), x - x_b) ds,
//! ```
//!
//! is approximately preserved for about `eps^(-2n)` iterates of the map.
//!
//! Points are taken in lifted coordinates exactly as the caller supplies
//! them; the straight segment runs in that chart, anchored at the base
//! point's representative. The usual convention feeds representatives with
//! angles in `(-pi, pi]`. On a cylinder the function is multivalued: choosing
//! a different representative of `x` shifts `h_n` by the circulation of
//! `nu_n` around the corresponding loop (small, of the order of the
//! invariant's own drift, but not zero).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::GridSpec;
use crate::ivf::IvfField;
use crate::maps::{MapFamily, MapKind};

/// Quadrature and path settings for the invariant.
#[derive(Debug, Clone)]
pub struct InvariantSpec {
    pub base_point: Vec<f64>,
    /// Accept the Romberg value once two consecutive diagonal entries differ
    /// by less than this.
    pub quad_tol: f64,
    pub max_romberg_levels: usize,
}

impl InvariantSpec {
    pub fn new(base_point: Vec<f64>) -> Self {
        InvariantSpec {
            base_point,
            quad_tol: 1e-8,
            max_romberg_levels: 20,
        }
    }

    pub fn with_quad_tol(mut self, tol: f64) -> Self {
        self.quad_tol = tol;
        self
    }

    /// Default base point of a family: the origin for the standard map, the
    /// hyperbolic-hyperbolic fixed point `(pi, pi, 0, 0)` for the Froeschle
    /// map.
    pub fn for_map(map: &MapFamily) -> Result<Self> {
        let pi = std::f64::consts::PI;
        match map.kind() {
            MapKind::Standard => Ok(InvariantSpec::new(vec![0.0, 0.0])),
            MapKind::Froeschle(_) => Ok(InvariantSpec::new(vec![pi, pi, 0.0, 0.0])),
            _ => Err(Error::Invalid(
                "no default base point for this family; supply one".into(),
            )),
        }
    }
}

/// The one-form `nu_n` evaluated on a tangent vector:
/// `omega(X_n(x), v) = sum_i (X^i v_{i+d} - X^{i+d} v_i)` for the standard
/// pairing `(i, i+d)`.
pub fn one_form(field: &IvfField, x: &[f64], v: &[f64]) -> Result<f64> {
    let dim = field.map().dim();
    if dim % 2 != 0 {
        return Err(Error::OddDimension(dim));
    }
    let xn = field.eval(x)?;
    Ok(pairing(&xn, v))
}

/// `omega(u, v)` for the standard symplectic form with pairing `(i, i+d)`.
pub fn pairing(u: &[f64], v: &[f64]) -> f64 {
    let d = u.len() / 2;
    let mut s = 0.0;
    for i in 0..d {
        s += u[i] * v[i + d] - u[i + d] * v[i];
    }
    s
}

/// Trapezoid + Romberg quadrature of `f` over `[0, 1]`, starting from 8
/// panels and doubling per level. Accepted once two consecutive diagonal
/// entries differ by less than `tol`.
fn romberg<F>(mut f: F, tol: f64, max_levels: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INIT_PANELS: usize = 8;
    let mut panels = INIT_PANELS;
    let mut h = 1.0 / panels as f64;
    let mut trapezoid = {
        let mut s = 0.5 * (f(0.0)? + f(1.0)?);
        for i in 1..panels {
            s += f(i as f64 * h)?;
        }
        s * h
    };
    let mut diag: Vec<f64> = vec![trapezoid];
    let mut last_diff = f64::INFINITY;
    for level in 1..max_levels {
        // refine the trapezoid with the new midpoints
        let mut new_sum = 0.0;
        for i in 0..panels {
            new_sum += f((i as f64 + 0.5) * h)?;
        }
        panels *= 2;
        h *= 0.5;
        trapezoid = 0.5 * trapezoid + h * new_sum;

        // Richardson extrapolation along the new row
        let mut row = vec![trapezoid];
        let mut pow4 = 1.0;
        for j in 1..=level {
            pow4 *= 4.0;
            let prev = row[j - 1];
            let above = diag.get(j - 1).copied().unwrap_or(prev);
            row.push(prev + (prev - above) / (pow4 - 1.0));
        }
        let new_diag = *row.last().unwrap();
        let old_diag = *diag.last().unwrap();
        last_diff = (new_diag - old_diag).abs();
        diag = row;
        if last_diff < tol {
            return Ok(new_diag);
        }
    }
    Err(Error::QuadratureDiverged {
        levels: max_levels,
        best: *diag.last().unwrap(),
        diff: last_diff,
    })
}

/// The adiabatic invariant `h_n(x)` along the straight segment from the base
/// point. `x` is used exactly as given (lifted chart).
pub fn invariant(field: &IvfField, spec: &InvariantSpec, x: &[f64]) -> Result<f64> {
    let map = field.map();
    let dim = map.dim();
    if dim % 2 != 0 {
        return Err(Error::OddDimension(dim));
    }
    if spec.base_point.len() != dim {
        return Err(Error::Invalid("base point dimension mismatch".into()));
    }
    if !map.domain().contains(&spec.base_point) {
        return Err(Error::Invalid(
            "base point outside the declared domain".into(),
        ));
    }
    let v: Vec<f64> = x
        .iter()
        .zip(&spec.base_point)
        .map(|(a, b)| a - b)
        .collect();
    if v.iter().all(|&c| c == 0.0) {
        return Ok(0.0);
    }
    let mut point = vec![0.0; dim];
    let mut xn = vec![0.0; dim];
    romberg(
        |s| {
            for j in 0..dim {
                point[j] = spec.base_point[j] + s * v[j];
            }
            if !map.domain().contains(&point) {
                return Err(Error::SegmentEscape { s });
            }
            field.eval_into(&point, &mut xn)?;
            Ok(pairing(&xn, &v))
        },
        spec.quad_tol,
        spec.max_romberg_levels,
    )
}

/// `h_n` along an axis-parallel polyline (one coordinate at a time, ascending
/// index). Comparing against the straight segment diagnoses how far `nu_n` is
/// from closed.
pub fn invariant_axis_path(field: &IvfField, spec: &InvariantSpec, x: &[f64]) -> Result<f64> {
    let map = field.map();
    let dim = map.dim();
    if dim % 2 != 0 {
        return Err(Error::OddDimension(dim));
    }
    let mut total = 0.0;
    let mut from = spec.base_point.clone();
    let mut xn = vec![0.0; dim];
    for j in 0..dim {
        let delta = x[j] - from[j];
        if delta == 0.0 {
            continue;
        }
        let mut v = vec![0.0; dim];
        v[j] = delta;
        let base = from.clone();
        let mut point = base.clone();
        total += romberg(
            |s| {
                point[j] = base[j] + s * delta;
                if !map.domain().contains(&point) {
                    return Err(Error::SegmentEscape { s });
                }
                field.eval_into(&point, &mut xn)?;
                Ok(pairing(&xn, &v))
            },
            spec.quad_tol,
            spec.max_romberg_levels,
        )?;
        from[j] = x[j];
    }
    Ok(total)
}

/// Closed-form limit Hamiltonian of the built-in symplectic families:
/// the pendulum energy `y^2/2 - cos x` for the standard map and
/// `a1 J1^2/2 + a2 J1 J2 + a3 J2^2/2 - cos psi1 - eta cos psi2` for the
/// Froeschle map.
pub fn limit_hamiltonian(map: &MapFamily, x: &[f64]) -> Result<f64> {
    match map.kind() {
        MapKind::Standard => Ok(x[1] * x[1] / 2.0 - x[0].cos()),
        MapKind::Froeschle(p) => Ok(p.a1 * x[2] * x[2] / 2.0
            + p.a2 * x[2] * x[3]
            + p.a3 * x[3] * x[3] / 2.0
            - x[0].cos()
            - p.eta * x[1].cos()),
        _ => Err(Error::UnsupportedLimitHamiltonian),
    }
}

/// One row of a `delta h` scan.
#[derive(Debug, Clone)]
pub struct DeltaHRow {
    pub n: usize,
    pub epsilon: f64,
    /// `max_x |h_n(F(x)) - h_n(x)|` over the grid points that converged.
    pub max_delta_h: f64,
    pub failures: usize,
}

/// Sweep `max |h_n o F - h_n|` over a grid for every `(n, eps)` pair.
///
/// `build_map` constructs the family at a given `eps`; the base point and
/// quadrature settings come from `spec`. Grid points run in parallel with a
/// fixed reduction order.
pub fn delta_h_scan(
    build_map: &(dyn Fn(f64) -> std::sync::Arc<MapFamily> + Sync),
    n_list: &[usize],
    epsilon_list: &[f64],
    grid: &GridSpec,
    spec: &InvariantSpec,
) -> Result<Vec<DeltaHRow>> {
    let mut rows = Vec::with_capacity(n_list.len() * epsilon_list.len());
    for &eps in epsilon_list {
        let map = build_map(eps);
        for &n in n_list {
            let field = IvfField::new(map.clone(), n)?;
            let deltas: Vec<Option<f64>> = (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let x = grid.point(i);
                    let image = field.map().forward_vec(&x).ok()?;
                    let h0 = invariant(&field, spec, &x).ok()?;
                    let h1 = invariant(&field, spec, &image).ok()?;
                    Some((h1 - h0).abs())
                })
                .collect();
            let failures = deltas.iter().filter(|d| d.is_none()).count();
            let max_delta_h = deltas.iter().flatten().fold(0.0f64, |m, &d| m.max(d));
            rows.push(DeltaHRow {
                n,
                epsilon: eps,
                max_delta_h,
                failures,
            });
        }
    }
    Ok(rows)
}

pub fn write_scan_csv<W: std::io::Write>(rows: &[DeltaHRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "n,epsilon,max_delta_h,failures")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.n, r.epsilon, r.max_delta_h, r.failures)?;
    }
    Ok(())
}

/// One sample of the invariant along an orbit.
#[derive(Debug, Clone, Copy)]
pub struct InvariantSample {
    pub iterate: u64,
    pub value: f64,
}

/// Track `h_n` along an orbit of the map, reducing each sample point to the
/// fundamental domain before integrating. With no section given the samples
/// are taken every `stride` iterates; with one, at every `stride`-th
/// sign-change crossing of the section function instead.
pub fn invariant_series(
    field: &IvfField,
    spec: &InvariantSpec,
    x0: &[f64],
    num_iterates: u64,
    stride: u64,
    crossing_section: Option<&crate::section::SectionSpec>,
    mut on_failure: impl FnMut(u64, &Error),
) -> Result<Vec<InvariantSample>> {
    let map = field.map();
    let mut samples = Vec::new();
    let mut x = map.reduced(x0);
    let mut sample_at =
        |k: u64, x: &[f64], samples: &mut Vec<InvariantSample>| match invariant(field, spec, x) {
            Ok(value) => samples.push(InvariantSample { iterate: k, value }),
            Err(e) => on_failure(k, &e),
        };
    let mut g_prev = crossing_section.map(|s| s.value(&x));
    let mut crossings: u64 = 0;
    sample_at(0, &x, &mut samples);
    let mut img = vec![0.0; map.dim()];
    for k in 1..=num_iterates {
        map.forward(&x, &mut img)?;
        if !map.domain().contains(&img) {
            return Err(Error::OrbitEscape {
                k: k as i64,
                partial: Vec::new(),
            });
        }
        x.copy_from_slice(&img);
        map.reduce(&mut x);
        match (crossing_section, g_prev) {
            (Some(section), Some(prev)) => {
                let g = section.value(&x);
                if section.is_crossing(prev, g) {
                    crossings += 1;
                    if crossings % stride == 0 {
                        sample_at(k, &x, &mut samples);
                    }
                }
                g_prev = Some(g);
            }
            _ => {
                if k % stride == 0 {
                    sample_at(k, &x, &mut samples);
                }
            }
        }
    }
    Ok(samples)
}

pub fn write_series_csv<W: std::io::Write>(
    samples: &[InvariantSample],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "iterate_index,h_n")?;
    for s in samples {
        writeln!(w, "{},{}", s.iterate, s.value)?;
    }
    Ok(())
}
