//! Poincare sections for maps.
//!
//! A codimension-one surface `Sigma = {g = 0}` cannot be hit by a discrete
//! orbit, but consecutive iterates separated by `Sigma` can be detected and
//! the pre-crossing point projected onto the surface along the interpolating
//! vector field: `y_k = Phi^{t_k}_{X_n}(x_k)` with `g(y_k) = 0`,
//! `t_k in [0, eps]`. The projection never feeds back into the orbit, so the
//! trajectory itself is untouched by the section machinery.

use rayon::prelude::*;
use std::sync::Arc;

use crate::angle::wrap_angle;
use crate::error::{Error, Result};
use crate::ivf::IvfField;
use crate::maps::MapFamily;
use crate::rkf78::{self, IntegratorSettings};

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A scalar section function, its gradient, and the crossing/projection
/// settings.
#[derive(Clone)]
pub struct SectionSpec {
    g: ScalarFn,
    grad: GradFn,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub transversality_floor: f64,
    /// For angle-difference sections: pairs straddling the +-pi cut (rather
    /// than the zero branch) are excluded by requiring `|g| < pi/2` at both
    /// endpoints of a crossing pair.
    wrap_guard: bool,
}

impl std::fmt::Debug for SectionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SectionSpec")
            .field("newton_tol", &self.newton_tol)
            .field("newton_max_iter", &self.newton_max_iter)
            .field("transversality_floor", &self.transversality_floor)
            .field("wrap_guard", &self.wrap_guard)
            .finish()
    }
}

impl SectionSpec {
    pub fn new<G, D>(g: G, grad: D) -> Self
    where
        G: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        D: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        SectionSpec {
            g: Arc::new(g),
            grad: Arc::new(grad),
            newton_tol: 1e-11,
            newton_max_iter: 30,
            transversality_floor: 1e-6,
            wrap_guard: false,
        }
    }

    /// Section `{x_i = x_j}` between two angle coordinates, with the wrapped
    /// difference `g = wrap(x_i - x_j)` and the +-pi cut excluded.
    pub fn angle_difference(i: usize, j: usize) -> Self {
        let mut s = SectionSpec::new(
            move |x: &[f64]| wrap_angle(x[i] - x[j]),
            move |_x: &[f64], out: &mut [f64]| {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[i] = 1.0;
                out[j] = -1.0;
            },
        );
        s.wrap_guard = true;
        s
    }

    /// Section `{x_i = value}` on a non-angle coordinate.
    pub fn coordinate(i: usize, value: f64) -> Self {
        SectionSpec::new(
            move |x: &[f64]| x[i] - value,
            move |_x: &[f64], out: &mut [f64]| {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[i] = 1.0;
            },
        )
    }

    pub fn with_newton_tol(mut self, tol: f64) -> Self {
        self.newton_tol = tol;
        self
    }

    pub fn with_transversality_floor(mut self, floor: f64) -> Self {
        self.transversality_floor = floor;
        self
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.g)(x)
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (self.grad)(x, out)
    }

    /// Crossing predicate for a consecutive pair of section values. A zero at
    /// the first point counts; a zero only at the second is attributed to the
    /// next pair. The wrap guard filters sign changes through the +-pi cut.
    pub fn is_crossing(&self, g_prev: f64, g_next: f64) -> bool {
        let sign_change = g_prev == 0.0 || g_prev * g_next < 0.0;
        if !sign_change {
            return false;
        }
        if self.wrap_guard {
            let half_pi = std::f64::consts::FRAC_PI_2;
            g_prev.abs() < half_pi && g_next.abs() < half_pi
        } else {
            true
        }
    }
}

/// Orbit indices whose consecutive pair straddles the section,
/// `(k, x_k, x_{k+1})` in reduced coordinates.
pub fn detect_crossings(
    map: &MapFamily,
    x0: &[f64],
    num_iterates: u64,
    spec: &SectionSpec,
) -> Result<Vec<(u64, Vec<f64>, Vec<f64>)>> {
    let mut out = Vec::new();
    let mut x = map.reduced(x0);
    let mut g = spec.value(&x);
    let mut img = vec![0.0; map.dim()];
    let mut in_section_run = usize::from(g.abs() < spec.newton_tol);
    for k in 0..num_iterates {
        map.forward(&x, &mut img)?;
        if !map.domain().contains(&img) {
            return Err(Error::OrbitEscape {
                k: k as i64 + 1,
                partial: out.into_iter().map(|(_, a, _)| a).collect(),
            });
        }
        let mut next = img.clone();
        map.reduce(&mut next);
        let g_next = spec.value(&next);
        if g_next.abs() < spec.newton_tol {
            in_section_run += 1;
            if in_section_run >= 3 {
                return Err(Error::InSectionOrbit);
            }
        } else {
            in_section_run = 0;
        }
        if spec.is_crossing(g, g_next) {
            out.push((k, x.clone(), next.clone()));
        }
        x = next;
        g = g_next;
    }
    Ok(out)
}

/// A projected crossing.
#[derive(Debug, Clone)]
pub struct CrossingRecord {
    /// Iterate index of the pre-crossing point.
    pub k: u64,
    /// Pre-crossing orbit point (untouched by the projection).
    pub x_k: Vec<f64>,
    /// Projection time along the field, within `[0, eps]`.
    pub t_k: f64,
    /// Projected point on the section.
    pub y_k: Vec<f64>,
    /// `|g(y_k)|` after the root solve.
    pub residual: f64,
    /// Sign of the transversal velocity `grad(g) . X_n` at the crossing.
    pub direction: i8,
}

/// Project a detected crossing onto the section along the field.
///
/// Newton iteration on `s(t) = g(Phi^t(x_k))` with the analytic derivative
/// `s'(t) = grad(g) . X_n`, safeguarded by the sign-change bracket on
/// `[0, eps]`; a tangency (final `|s'|` below the floor) is reported instead
/// of a record.
pub fn project_crossing(
    field: &IvfField,
    spec: &SectionSpec,
    k: u64,
    x_k: &[f64],
    settings: &IntegratorSettings,
) -> Result<CrossingRecord> {
    let eps = field.map().step();
    let dim = field.map().dim();
    let mut grad = vec![0.0; dim];
    let mut xn = vec![0.0; dim];

    let slope = |y: &[f64], grad: &mut [f64], xn: &mut [f64]| -> Result<f64> {
        spec.gradient(y, grad);
        field.eval_into(y, xn)?;
        Ok(grad.iter().zip(xn.iter()).map(|(a, b)| a * b).sum())
    };

    let mut y = x_k.to_vec();
    let mut t = 0.0;
    let mut s = spec.value(&y);

    if s.abs() <= spec.newton_tol {
        let sp = slope(&y, &mut grad, &mut xn)?;
        if sp.abs() < spec.transversality_floor {
            return Err(Error::Tangency { derivative: sp });
        }
        return Ok(CrossingRecord {
            k,
            x_k: x_k.to_vec(),
            t_k: 0.0,
            y_k: y,
            residual: s.abs(),
            direction: if sp > 0.0 { 1 } else { -1 },
        });
    }

    // bracket endpoints: t_a carries the sign of s(0), t_b the opposite
    let mut t_a = 0.0;
    let mut t_b = eps;
    let s_end = {
        let mut y_end = x_k.to_vec();
        rkf78::integrate(|p, dp| field.eval_into(p, dp), &mut y_end, 0.0, eps, settings)?;
        spec.value(&y_end)
    };
    if s * s_end > 0.0 {
        return Err(Error::NoBracket);
    }

    let total_iters = spec.newton_max_iter + 80;
    for _ in 0..total_iters {
        let sp = slope(&y, &mut grad, &mut xn)?;
        let newton_t = if sp.abs() >= spec.transversality_floor {
            t - s / sp
        } else {
            0.5 * (t_a + t_b)
        };
        let (lo, hi) = if t_a <= t_b { (t_a, t_b) } else { (t_b, t_a) };
        let t_new = if newton_t > lo && newton_t < hi {
            newton_t
        } else {
            0.5 * (t_a + t_b)
        };
        rkf78::integrate(|p, dp| field.eval_into(p, dp), &mut y, t, t_new, settings)?;
        t = t_new;
        s = spec.value(&y);
        if s.abs() <= spec.newton_tol {
            let sp = slope(&y, &mut grad, &mut xn)?;
            if sp.abs() < spec.transversality_floor {
                return Err(Error::Tangency { derivative: sp });
            }
            return Ok(CrossingRecord {
                k,
                x_k: x_k.to_vec(),
                t_k: t,
                y_k: y,
                residual: s.abs(),
                direction: if sp > 0.0 { 1 } else { -1 },
            });
        }
        if s * s_end > 0.0 {
            // same side as the far end: crossing lies in [t_a, t]
            t_b = t;
        } else {
            t_a = t;
        }
        if (t_b - t_a).abs() < f64::EPSILON * eps.abs() {
            break;
        }
    }
    Err(Error::NewtonFailed(format!(
        "crossing residual {:.3e} above tolerance {:.1e}",
        s.abs(),
        spec.newton_tol
    )))
}

/// A section cloud: projected crossings for a batch of seeds, with the
/// `(psi, phi)` torus projection used for four-dimensional action-angle maps.
#[derive(Debug, Clone)]
pub struct CloudRecord {
    pub seed_id: usize,
    pub record: CrossingRecord,
    pub psi: f64,
    pub phi: f64,
}

#[derive(Debug, Default)]
pub struct SectionCloud {
    pub records: Vec<CloudRecord>,
    pub skipped: usize,
    pub escaped_seeds: Vec<usize>,
    pub in_section_seeds: Vec<usize>,
}

impl SectionCloud {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self
            .records
            .first()
            .map(|r| r.record.y_k.len())
            .unwrap_or(0);
        write!(w, "seed_id,k,t_k,")?;
        for j in 0..dim {
            write!(w, "x{},", j + 1)?;
        }
        writeln!(w, "psi,phi,residual,direction")?;
        for r in &self.records {
            write!(w, "{},{},{},", r.seed_id, r.record.k, r.record.t_k)?;
            for c in &r.record.y_k {
                write!(w, "{c},")?;
            }
            writeln!(
                w,
                "{},{},{},{}",
                r.psi, r.phi, r.record.residual, r.record.direction
            )?;
        }
        Ok(())
    }
}

/// Run every seed until `crossings_per_seed` projections are collected (or
/// `max_iterates` map steps pass). Seeds are processed in parallel and merged
/// in seed order; tangencies and failed projections are skipped and counted.
pub fn section_cloud(
    field: &IvfField,
    spec: &SectionSpec,
    seeds: &[Vec<f64>],
    crossings_per_seed: usize,
    max_iterates: u64,
    settings: &IntegratorSettings,
) -> SectionCloud {
    let per_seed: Vec<_> = seeds
        .par_iter()
        .enumerate()
        .map(|(seed_id, seed)| run_seed(field, spec, seed_id, seed, crossings_per_seed, max_iterates, settings))
        .collect();

    let mut cloud = SectionCloud::default();
    for r in per_seed {
        cloud.records.extend(r.records);
        cloud.skipped += r.skipped;
        cloud.escaped_seeds.extend(r.escaped_seeds);
        cloud.in_section_seeds.extend(r.in_section_seeds);
    }
    cloud
}

fn run_seed(
    field: &IvfField,
    spec: &SectionSpec,
    seed_id: usize,
    seed: &[f64],
    crossings_per_seed: usize,
    max_iterates: u64,
    settings: &IntegratorSettings,
) -> SectionCloud {
    let map = field.map();
    let mut out = SectionCloud::default();
    let mut x = map.reduced(seed);
    let mut g = spec.value(&x);
    let mut img = vec![0.0; map.dim()];
    let mut in_section_run = usize::from(g.abs() < spec.newton_tol);
    for k in 0..max_iterates {
        if out.records.len() >= crossings_per_seed {
            break;
        }
        if map.forward(&x, &mut img).is_err() || !map.domain().contains(&img) {
            out.escaped_seeds.push(seed_id);
            break;
        }
        let mut next = img.clone();
        map.reduce(&mut next);
        let g_next = spec.value(&next);
        if g_next.abs() < spec.newton_tol {
            in_section_run += 1;
            if in_section_run >= 3 {
                out.in_section_seeds.push(seed_id);
                break;
            }
        } else {
            in_section_run = 0;
        }
        if spec.is_crossing(g, g_next) {
            match project_crossing(field, spec, k, &x, settings) {
                Ok(record) => {
                    let y = &record.y_k;
                    let psi = wrap_angle(y[0]);
                    let phi = if y.len() >= 4 {
                        y[3].atan2(y[2])
                    } else {
                        f64::NAN
                    };
                    out.records.push(CloudRecord {
                        seed_id,
                        record,
                        psi,
                        phi,
                    });
                }
                Err(e) => {
                    log::debug!("seed {seed_id} crossing at k={k} skipped: {e}");
                    out.skipped += 1;
                }
            }
        }
        x = next;
        g = g_next;
    }
    out
}

/// Seeds on the intersection of the angle-diagonal section with a level set
/// of the adiabatic invariant, for four-dimensional action-angle families.
///
/// For each `psi` the action `J2 > 0` with `h_n((psi,psi,0,J2)) = E` is found
/// by bisection; the level curve through that point is then traced inside the
/// section by integrating the rotated gradient
/// `(dJ1/dt, dJ2/dt) = (-dh/dJ2, +dh/dJ1)` at fixed angles, renormalizing
/// every collected point back onto the level set.
pub fn seed_levelset(
    field: &IvfField,
    spec: &crate::adiabatic::InvariantSpec,
    energy: f64,
    psi_values: &[f64],
    count_per_psi: usize,
    j2_max: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut seeds = Vec::new();
    for &psi in psi_values {
        match levelset_for_psi(field, spec, energy, psi, count_per_psi, j2_max) {
            Ok(mut pts) => seeds.append(&mut pts),
            Err(e) => log::warn!("seed_levelset: psi = {psi} skipped: {e}"),
        }
    }
    if seeds.is_empty() {
        return Err(Error::LevelsetBracket {
            psi: psi_values.first().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(seeds)
}

fn levelset_for_psi(
    field: &IvfField,
    spec: &crate::adiabatic::InvariantSpec,
    energy: f64,
    psi: f64,
    count: usize,
    j2_max: f64,
) -> Result<Vec<Vec<f64>>> {
    let h_at = |j1: f64, j2: f64| -> Result<f64> {
        crate::adiabatic::invariant(field, spec, &[psi, psi, j1, j2])
    };

    // bracket in J2 > 0
    let mut lo = 0.0;
    let mut f_lo = h_at(0.0, lo)? - energy;
    let mut hi = lo;
    let mut f_hi = f_lo;
    let mut found = false;
    let scan_step = 0.25;
    while hi < j2_max {
        hi += scan_step;
        f_hi = h_at(0.0, hi)? - energy;
        if f_lo * f_hi <= 0.0 {
            found = true;
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    if !found {
        return Err(Error::LevelsetBracket { psi });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let f_mid = h_at(0.0, mid)? - energy;
        if f_mid.abs() <= 0.5 * spec.quad_tol || hi - lo < 1e-12 {
            lo = mid;
            break;
        }
        if f_lo * f_mid <= 0.0 {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    let _ = f_hi;
    let j2_root = 0.5 * (lo + hi);

    // trace the level curve in the (J1, J2) plane at fixed angles
    let delta = 1e-4;
    let grad_j = |j: &[f64]| -> Result<[f64; 2]> {
        let d1 = (h_at(j[0] + delta, j[1])? - h_at(j[0] - delta, j[1])?) / (2.0 * delta);
        let d2 = (h_at(j[0], j[1] + delta)? - h_at(j[0], j[1] - delta)?) / (2.0 * delta);
        Ok([d1, d2])
    };
    let renormalize = |j: &mut [f64]| -> Result<f64> {
        let mut dh = 0.0;
        for _ in 0..3 {
            dh = h_at(j[0], j[1])? - energy;
            if dh.abs() <= spec.quad_tol {
                return Ok(dh);
            }
            let g = grad_j(j)?;
            let g2 = g[0] * g[0] + g[1] * g[1];
            if g2 < 1e-20 {
                break;
            }
            j[0] -= dh * g[0] / g2;
            j[1] -= dh * g[1] / g2;
        }
        Ok(dh)
    };

    let aux_settings = IntegratorSettings {
        abs_tol: 1e-8,
        rel_tol: 1e-8,
        h_init: Some(0.05),
        h_max: Some(0.25),
        ..Default::default()
    };
    let arc_step = 0.25;
    let mut j = vec![0.0, j2_root];
    let mut points = Vec::with_capacity(count);
    let mut dh = renormalize(&mut j)?;
    points.push(vec![psi, psi, j[0], j[1]]);
    let max_arcs = 4 * count;
    let mut arcs = 0;
    while points.len() < count && arcs < max_arcs {
        arcs += 1;
        let step = rkf78::integrate(
            |p, dp| {
                let g = grad_j(p)?;
                dp[0] = -g[1];
                dp[1] = g[0];
                Ok(())
            },
            &mut j,
            0.0,
            arc_step,
            &aux_settings,
        );
        if step.is_err() || !field.map().domain().contains(&[psi, psi, j[0], j[1]]) {
            log::warn!("seed_levelset: level curve for psi = {psi} truncated after {} points", points.len());
            break;
        }
        dh = renormalize(&mut j)?;
        if dh.abs() > 10.0 * spec.quad_tol {
            log::debug!("seed_levelset: point off level by {dh:.3e}, skipped");
            continue;
        }
        points.push(vec![psi, psi, j[0], j[1]]);
    }
    let _ = dh;
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adiabatic::InvariantSpec;
    use crate::maps::FroeschleParams;
    use std::f64::consts::PI;

    fn pendulum_flow_field(eps: f64, n: usize) -> IvfField {
        let map = MapFamily::flow_map(
            |x, out| {
                out[0] = x[1];
                out[1] = -x[0].sin();
            },
            2,
            eps,
            1e-12,
        );
        IvfField::new(Arc::new(map), n).unwrap()
    }

    /// Libration period of the pendulum from the AGM form of the complete
    /// elliptic integral: T = 4 K(sin(x_max/2)), an independent oracle.
    fn pendulum_period(x_max: f64) -> f64 {
        let k = (x_max / 2.0).sin();
        let mut a = 1.0f64;
        let mut b = (1.0 - k * k).sqrt();
        for _ in 0..60 {
            let an = 0.5 * (a + b);
            b = (a * b).sqrt();
            a = an;
            if (a - b).abs() < 1e-15 {
                break;
            }
        }
        let kk = PI / (2.0 * a);
        4.0 * kk
    }

    #[test]
    fn pendulum_orbit_crosses_twice_per_revolution() {
        let eps = 0.1;
        let field = pendulum_flow_field(eps, 3);
        let spec = SectionSpec::coordinate(1, 0.0); // {y = 0}
        let iterates = 1000u64;
        let crossings = detect_crossings(field.map(), &[1.0, 0.0], iterates, &spec).unwrap();
        let period = pendulum_period(1.0);
        let revolutions = iterates as f64 * eps / period;
        let expected = 2.0 * revolutions;
        assert!(
            (crossings.len() as f64 - expected).abs() <= 2.0,
            "got {} expected {expected:.1}",
            crossings.len()
        );
    }

    #[test]
    fn projection_is_sound() {
        let field = pendulum_flow_field(0.1, 3);
        let spec = SectionSpec::coordinate(1, 0.0);
        let settings = IntegratorSettings::oracle();
        let crossings = detect_crossings(field.map(), &[1.0, 0.0], 400, &spec).unwrap();
        assert!(!crossings.is_empty());
        for (k, x_k, _) in crossings {
            let rec = project_crossing(&field, &spec, k, &x_k, &settings).unwrap();
            assert!(rec.residual <= spec.newton_tol);
            assert!(rec.t_k >= 0.0 && rec.t_k <= 0.1 + 1e-15, "t = {}", rec.t_k);
            assert!(spec.value(&rec.y_k).abs() <= spec.newton_tol);
        }
    }

    #[test]
    fn point_already_on_the_section_projects_to_itself() {
        let field = pendulum_flow_field(0.1, 2);
        let spec = SectionSpec::coordinate(1, 0.0);
        let rec = project_crossing(
            &field,
            &spec,
            0,
            &[1.0, 0.0],
            &IntegratorSettings::default(),
        )
        .unwrap();
        assert_eq!(rec.t_k, 0.0);
        assert_eq!(rec.y_k, vec![1.0, 0.0]);
    }

    #[test]
    fn in_section_orbit_is_degenerate() {
        let map = Arc::new(MapFamily::froeschle_map(0.2, FroeschleParams::default()));
        let spec = SectionSpec::angle_difference(0, 1);
        // p4 = (pi, pi, 0, 0) stays on psi1 = psi2 forever
        let err = detect_crossings(&map, &[PI, PI, 0.0, 0.0], 100, &spec).unwrap_err();
        assert!(matches!(err, Error::InSectionOrbit));
    }

    #[test]
    fn wrap_cut_sign_changes_are_excluded() {
        let spec = SectionSpec::angle_difference(0, 1);
        // genuine zero crossing
        assert!(spec.is_crossing(-0.2, 0.1));
        // sign change caused by the wrapped difference jumping across +-pi
        assert!(!spec.is_crossing(3.0, -3.05));
        // boundary case: exact zero at the first point counts
        assert!(spec.is_crossing(0.0, 0.4));
        // zero only at the second point belongs to the next pair
        assert!(!spec.is_crossing(0.4, 0.0));
    }

    #[test]
    fn froeschle_crossings_have_wrapped_pairs_near_zero() {
        let map = Arc::new(MapFamily::froeschle_map(0.2, FroeschleParams::default()));
        let spec = SectionSpec::angle_difference(0, 1);
        let crossings = detect_crossings(&map, &[3.0, 3.0, -1.0, 1.4], 2000, &spec).unwrap();
        assert!(!crossings.is_empty());
        for (_, a, b) in &crossings {
            let ga = wrap_angle(a[0] - a[1]);
            let gb = wrap_angle(b[0] - b[1]);
            assert!(ga.abs() < PI / 2.0 && gb.abs() < PI / 2.0);
        }
    }

    #[test]
    fn section_does_not_interfere_with_the_orbit() {
        let map = Arc::new(MapFamily::froeschle_map(0.2, FroeschleParams::default()));
        let x0 = [3.0, 3.0, -1.0, 1.4];
        let n_steps = 500u64;
        // plain orbit
        let mut plain = Vec::new();
        let mut x = map.reduced(&x0);
        for _ in 0..n_steps {
            x = map.reduced(&map.forward_vec(&x).unwrap());
            plain.push(x.clone());
        }
        // the detection pipeline re-iterates the same orbit
        let field = IvfField::new(map.clone(), 4).unwrap();
        let spec = SectionSpec::angle_difference(0, 1);
        let cloud = section_cloud(
            &field,
            &spec,
            &[x0.to_vec()],
            5,
            n_steps,
            &IntegratorSettings::default(),
        );
        assert!(!cloud.records.is_empty());
        // the pre-crossing points are bit-identical to the plain orbit
        for r in &cloud.records {
            let k = r.record.k as usize;
            if k == 0 {
                continue;
            }
            assert_eq!(r.record.x_k, plain[k - 1], "orbit perturbed at k = {k}");
        }
    }

    #[test]
    fn cloud_records_satisfy_the_contracts() {
        let map = Arc::new(MapFamily::froeschle_map(0.2, FroeschleParams::default()));
        let field = IvfField::new(map, 3).unwrap();
        let spec = SectionSpec::angle_difference(0, 1);
        let seeds = vec![vec![3.0, 3.0, -1.0, 1.4], vec![0.5, 0.3, 0.4, 1.2]];
        let cloud = section_cloud(
            &field,
            &spec,
            &seeds,
            20,
            100_000,
            &IntegratorSettings::default(),
        );
        assert!(cloud.records.len() >= 30, "only {} records", cloud.records.len());
        for r in &cloud.records {
            assert!(r.record.residual <= spec.newton_tol);
            assert!(r.record.t_k >= 0.0 && r.record.t_k <= 0.2);
            assert!(r.psi > -PI && r.psi <= PI);
            assert!(r.phi > -PI && r.phi <= PI);
            assert!(r.record.direction == 1 || r.record.direction == -1);
        }
        // seed order is preserved in the merged output
        let ids: Vec<usize> = cloud.records.iter().map(|r| r.seed_id).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn levelset_seeds_sit_on_the_level() {
        let map = Arc::new(MapFamily::froeschle_map(0.2, FroeschleParams::default()));
        let field = IvfField::new(map, 3).unwrap();
        let spec = InvariantSpec::for_map(field.map()).unwrap();
        let seeds = seed_levelset(&field, &spec, 1.0, &[0.0, 2.0], 5, 10.0).unwrap();
        assert!(seeds.len() >= 8, "got {} seeds", seeds.len());
        for s in &seeds {
            assert!(s[3] > 0.0 || s[2].abs() > 1e-6); // J2 > 0 at the anchors
            let h = crate::adiabatic::invariant(&field, &spec, s).unwrap();
            assert!(
                (h - 1.0).abs() <= 10.0 * spec.quad_tol,
                "off level by {:e}",
                (h - 1.0).abs()
            );
        }
    }
}
