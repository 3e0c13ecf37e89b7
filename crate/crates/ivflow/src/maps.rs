//! Near-identity map families with forward and inverse application.
//!
//! A [`MapFamily`] bundles the forward map, its inverse, periodicity metadata
//! (which coordinates are angles) and the declared domain. Applications act on
//! the universal cover: the raw update formulas are lifts, and every
//! application wraps the per-step displacement of angle coordinates into
//! `(-pi, pi]` so that iterate differences never pick up spurious 2*pi jumps.
//! Reduction to the fundamental domain happens only at output boundaries.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::angle::{reduce_state, wrap_angle, wrap_displacement};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rkf78::{self, IntegratorSettings};

type MapFn = Arc<dyn Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync>;
type FieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Parameters of the four-dimensional Froeschle-like map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FroeschleParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub eta: f64,
}

impl Default for FroeschleParams {
    fn default() -> Self {
        FroeschleParams {
            a1: 1.0,
            a2: 0.5,
            a3: 1.25,
            eta: 0.5,
        }
    }
}

/// Which built-in family a [`MapFamily`] came from.
#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    Standard,
    Froeschle(FroeschleParams),
    Flow,
    Custom,
}

/// Box constraints in lifted coordinates. Angle coordinates are unbounded;
/// action-like coordinates carry finite bounds. Escape is reported, never
/// clamped.
#[derive(Debug, Clone)]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn unbounded(dim: usize) -> Self {
        Domain {
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); dim],
        }
    }

    pub fn with_bound(mut self, coord: usize, lo: f64, hi: f64) -> Self {
        self.bounds[coord] = (lo, hi);
        self
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.bounds)
            .all(|(v, (lo, hi))| v.is_finite() && *v >= *lo && *v <= *hi)
    }
}

/// A parametrized near-identity map `F(x) = x + eps * G(x)` together with its
/// inverse and metadata. Immutable after construction; applications are pure
/// and safe to call from any number of threads.
pub struct MapFamily {
    kind: MapKind,
    dim: usize,
    epsilon: f64,
    /// Near-identity time step; `q * epsilon` for q-th iterate families.
    step: f64,
    forward: MapFn,
    inverse: MapFn,
    angle_mask: Vec<bool>,
    limit_field: Option<FieldFn>,
    reversor: Option<Matrix>,
    symplectic: bool,
    fixed_points: Vec<Vec<f64>>,
    domain: Domain,
    applications: AtomicU64,
}

impl std::fmt::Debug for MapFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MapFamily")
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .field("epsilon", &self.epsilon)
            .field("step", &self.step)
            .field("symplectic", &self.symplectic)
            .finish()
    }
}

impl MapFamily {
    /// The Chirikov standard map `(x, y) -> (x + eps*y', y')` with
    /// `y' = y - eps*sin(x)`, on the cylinder (x is the angle).
    pub fn standard_map(epsilon: f64) -> MapFamily {
        let eps = epsilon;
        let forward: MapFn = Arc::new(move |x, out| {
            let ybar = x[1] - eps * x[0].sin();
            out[0] = x[0] + eps * ybar;
            out[1] = ybar;
            Ok(())
        });
        let inverse: MapFn = Arc::new(move |x, out| {
            let xprev = x[0] - eps * x[1];
            out[0] = xprev;
            out[1] = x[1] + eps * xprev.sin();
            Ok(())
        });
        let limit: FieldFn = Arc::new(|x, out| {
            out[0] = x[1];
            out[1] = -x[0].sin();
        });
        MapFamily {
            kind: MapKind::Standard,
            dim: 2,
            epsilon,
            step: epsilon,
            forward,
            inverse,
            angle_mask: vec![true, false],
            limit_field: Some(limit),
            reversor: None,
            symplectic: true,
            fixed_points: vec![vec![0.0, 0.0], vec![std::f64::consts::PI, 0.0]],
            domain: Domain::unbounded(2).with_bound(1, -50.0, 50.0),
            applications: AtomicU64::new(0),
        }
    }

    /// Froeschle-like map on T^2 x R^2 in coordinates `(psi1, psi2, J1, J2)`:
    /// actions kick first, then both angles rotate with the new actions.
    ///
    /// Logs a warning when the action quadratic form is not positive definite
    /// (`a1 > 0`, `a1*a3 - a2^2 > 0` recommended).
    pub fn froeschle_map(epsilon: f64, params: FroeschleParams) -> MapFamily {
        let FroeschleParams { a1, a2, a3, eta } = params;
        if !(a1 > 0.0 && a1 * a3 - a2 * a2 > 0.0) {
            log::warn!(
                "froeschle_map: action form not positive definite (a1={a1}, a2={a2}, a3={a3})"
            );
        }
        let eps = epsilon;
        let forward: MapFn = Arc::new(move |x, out| {
            let j1 = x[2] - eps * x[0].sin();
            let j2 = x[3] - eps * eta * x[1].sin();
            out[0] = x[0] + eps * (a1 * j1 + a2 * j2);
            out[1] = x[1] + eps * (a2 * j1 + a3 * j2);
            out[2] = j1;
            out[3] = j2;
            Ok(())
        });
        let inverse: MapFn = Arc::new(move |x, out| {
            let psi1 = x[0] - eps * (a1 * x[2] + a2 * x[3]);
            let psi2 = x[1] - eps * (a2 * x[2] + a3 * x[3]);
            out[0] = psi1;
            out[1] = psi2;
            out[2] = x[2] + eps * psi1.sin();
            out[3] = x[3] + eps * eta * psi2.sin();
            Ok(())
        });
        let limit: FieldFn = Arc::new(move |x, out| {
            out[0] = a1 * x[2] + a2 * x[3];
            out[1] = a2 * x[2] + a3 * x[3];
            out[2] = -x[0].sin();
            out[3] = -eta * x[1].sin();
        });
        let pi = std::f64::consts::PI;
        MapFamily {
            kind: MapKind::Froeschle(params),
            dim: 4,
            epsilon,
            step: epsilon,
            forward,
            inverse,
            angle_mask: vec![true, true, false, false],
            limit_field: Some(limit),
            reversor: None,
            symplectic: true,
            fixed_points: vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.0, pi, 0.0, 0.0],
                vec![pi, 0.0, 0.0, 0.0],
                vec![pi, pi, 0.0, 0.0],
            ],
            domain: Domain::unbounded(4)
                .with_bound(2, -50.0, 50.0)
                .with_bound(3, -50.0, 50.0),
            applications: AtomicU64::new(0),
        }
    }

    /// Time-`epsilon` map of a smooth autonomous vector field, integrated
    /// adaptively to local tolerance `integ_tol`. The inverse is the
    /// time-`(-epsilon)` map. The field itself becomes the limit field.
    pub fn flow_map<F>(field: F, dim: usize, epsilon: f64, integ_tol: f64) -> MapFamily
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        let field: FieldFn = Arc::new(field);
        let settings = IntegratorSettings::with_tol(integ_tol);
        let fwd_field = field.clone();
        let fwd_settings = settings.clone();
        let forward: MapFn = Arc::new(move |x, out| {
            out.copy_from_slice(x);
            rkf78::integrate(
                |y, dy| {
                    fwd_field(y, dy);
                    Ok(())
                },
                out,
                0.0,
                epsilon,
                &fwd_settings,
            )
        });
        let inv_field = field.clone();
        let inv_settings = settings;
        let inverse: MapFn = Arc::new(move |x, out| {
            out.copy_from_slice(x);
            rkf78::integrate(
                |y, dy| {
                    inv_field(y, dy);
                    Ok(())
                },
                out,
                0.0,
                -epsilon,
                &inv_settings,
            )
        });
        MapFamily {
            kind: MapKind::Flow,
            dim,
            epsilon,
            step: epsilon,
            forward,
            inverse,
            angle_mask: vec![false; dim],
            limit_field: Some(field),
            reversor: None,
            symplectic: false,
            fixed_points: Vec::new(),
            domain: Domain::unbounded(dim),
            applications: AtomicU64::new(0),
        }
    }

    /// A user-supplied map `F(x) = x + eps*G(x)` given by its forward update
    /// only. The inverse solves `F(x) = xbar` by the fixed-point iteration
    /// `x <- xbar - (F(x) - x)` to 1e-13, at most 50 sweeps.
    pub fn custom<F>(forward: F, dim: usize, epsilon: f64) -> MapFamily
    where
        F: Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
    {
        let forward: MapFn = Arc::new(forward);
        let fwd = forward.clone();
        let inverse: MapFn = Arc::new(move |xbar, out| {
            let mut cur = xbar.to_vec();
            let mut img = vec![0.0; xbar.len()];
            for _ in 0..50 {
                fwd(&cur, &mut img)?;
                let mut delta: f64 = 0.0;
                for j in 0..xbar.len() {
                    let next = xbar[j] - (img[j] - cur[j]);
                    delta = delta.max((next - cur[j]).abs());
                    cur[j] = next;
                }
                if delta <= 1e-13 {
                    out.copy_from_slice(&cur);
                    return Ok(());
                }
            }
            Err(Error::NewtonFailed(
                "fixed-point inverse did not converge in 50 sweeps".into(),
            ))
        });
        MapFamily {
            kind: MapKind::Custom,
            dim,
            epsilon,
            step: epsilon,
            forward,
            inverse,
            angle_mask: vec![false; dim],
            limit_field: None,
            reversor: None,
            symplectic: false,
            fixed_points: Vec::new(),
            domain: Domain::unbounded(dim),
            applications: AtomicU64::new(0),
        }
    }

    /// Custom map with an explicit inverse.
    pub fn custom_with_inverse<F, G>(forward: F, inverse: G, dim: usize, epsilon: f64) -> MapFamily
    where
        F: Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
    {
        MapFamily {
            kind: MapKind::Custom,
            dim,
            epsilon,
            step: epsilon,
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            angle_mask: vec![false; dim],
            limit_field: None,
            reversor: None,
            symplectic: false,
            fixed_points: Vec::new(),
            domain: Domain::unbounded(dim),
            applications: AtomicU64::new(0),
        }
    }

    // ---- builder-style metadata -------------------------------------------------

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_angle_mask(mut self, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), self.dim);
        self.angle_mask = mask;
        self
    }

    pub fn with_limit_field<F>(mut self, field: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.limit_field = Some(Arc::new(field));
        self
    }

    pub fn with_symplectic(mut self, flag: bool) -> Self {
        self.symplectic = flag;
        self
    }

    pub fn with_fixed_points(mut self, pts: Vec<Vec<f64>>) -> Self {
        self.fixed_points = pts;
        self
    }

    /// Declare a linear reversor `R` with `R*R = I` and `F^{-1} = R o F o R`.
    /// Both properties are validated on sample points of the domain; a matrix
    /// that fails either check is rejected.
    pub fn with_reversor(mut self, r: Matrix) -> Result<Self> {
        assert_eq!(r.dim, self.dim);
        let inv_defect = r.matmul(&r).max_abs_diff(&Matrix::identity(self.dim));
        if inv_defect > 1e-12 {
            return Err(Error::NotAReversor { defect: inv_defect });
        }
        let mut defect: f64 = 0.0;
        let mut img = vec![0.0; self.dim];
        let mut conj = vec![0.0; self.dim];
        for x in self.sample_points(32, 0x52) {
            // R o F o R
            let rx = r.apply_vec(&x);
            self.forward(&rx, &mut img)?;
            let rfr = r.apply_vec(&img);
            self.inverse(&x, &mut conj)?;
            for j in 0..self.dim {
                let d = if self.angle_mask[j] {
                    wrap_angle(rfr[j] - conj[j]).abs()
                } else {
                    (rfr[j] - conj[j]).abs()
                };
                defect = defect.max(d);
            }
        }
        if defect > 1e-10 {
            return Err(Error::NotAReversor { defect });
        }
        self.reversor = Some(r);
        Ok(self)
    }

    // ---- accessors ---------------------------------------------------------------

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Near-identity time step used by interpolation and time-stepping;
    /// equals `epsilon` for plain families and `q * epsilon` for q-th iterates.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn angle_mask(&self) -> &[bool] {
        &self.angle_mask
    }

    pub fn is_symplectic(&self) -> bool {
        self.symplectic
    }

    pub fn fixed_points(&self) -> &[Vec<f64>] {
        &self.fixed_points
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn reversor(&self) -> Option<&Matrix> {
        self.reversor.as_ref()
    }

    pub fn has_limit_field(&self) -> bool {
        self.limit_field.is_some()
    }

    /// Total forward + inverse applications since construction (diagnostics).
    pub fn applications(&self) -> u64 {
        self.applications.load(Ordering::Relaxed)
    }

    // ---- application -------------------------------------------------------------

    /// Apply the forward lift; angle displacements are wrapped into `(-pi, pi]`.
    pub fn forward(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.forward)(x, out)?;
        self.wrap_hop(x, out);
        self.applications.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Apply the inverse lift; angle displacements are wrapped into `(-pi, pi]`.
    pub fn inverse(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.inverse)(x, out)?;
        self.wrap_hop(x, out);
        self.applications.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    pub fn forward_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.forward(x, &mut out)?;
        Ok(out)
    }

    pub fn inverse_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.inverse(x, &mut out)?;
        Ok(out)
    }

    fn wrap_hop(&self, from: &[f64], to: &mut [f64]) {
        for j in 0..self.dim {
            if self.angle_mask[j] {
                let d = to[j] - from[j];
                if d > std::f64::consts::PI || d <= -std::f64::consts::PI {
                    to[j] = from[j] + wrap_displacement(d);
                }
            }
        }
    }

    /// Evaluate the limit field `G_0` if the family declares one.
    pub fn limit_field(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.limit_field {
            Some(f) => {
                f(x, out);
                Ok(())
            }
            None => Err(Error::NoLimitField),
        }
    }

    /// Reduce the angle coordinates of a state to the fundamental domain.
    pub fn reduce(&self, x: &mut [f64]) {
        reduce_state(x, &self.angle_mask);
    }

    pub fn reduced(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.reduce(&mut out);
        out
    }

    /// Deterministic sample points inside the domain, angles in `(-pi, pi]`,
    /// actions within the declared bounds (clamped to +-3 when unbounded).
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let pi = std::f64::consts::PI;
        (0..count)
            .map(|_| {
                (0..self.dim)
                    .map(|j| {
                        if self.angle_mask[j] {
                            rng.gen_range(-pi..pi)
                        } else {
                            let (lo, hi) = self.domain.bounds[j];
                            let lo = lo.max(-3.0);
                            let hi = hi.min(3.0);
                            rng.gen_range(lo..hi)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// q-fold composition of a base family. The composed family keeps the base
/// `epsilon` and advertises `q * epsilon` as its near-identity time step.
/// Every intermediate iterate is checked against the base domain.
pub fn iterate_power(base: Arc<MapFamily>, q: u32) -> MapFamily {
    assert!(q >= 1, "iterate power must be at least 1");
    let dim = base.dim();
    let fwd_base = base.clone();
    let forward: MapFn = Arc::new(move |x, out| {
        let mut cur = x.to_vec();
        for i in 0..q {
            fwd_base.forward(&cur, out)?;
            if !fwd_base.domain().contains(out) {
                return Err(Error::DomainEscape { k: i as i64 + 1 });
            }
            cur.copy_from_slice(out);
        }
        Ok(())
    });
    let inv_base = base.clone();
    let inverse: MapFn = Arc::new(move |x, out| {
        let mut cur = x.to_vec();
        for i in 0..q {
            inv_base.inverse(&cur, out)?;
            if !inv_base.domain().contains(out) {
                return Err(Error::DomainEscape { k: -(i as i64) - 1 });
            }
            cur.copy_from_slice(out);
        }
        Ok(())
    });
    let limit = base.limit_field.clone();
    MapFamily {
        kind: base.kind.clone(),
        dim,
        epsilon: base.epsilon(),
        step: q as f64 * base.step(),
        forward,
        inverse,
        angle_mask: base.angle_mask().to_vec(),
        limit_field: limit,
        reversor: base.reversor.clone(),
        symplectic: base.is_symplectic(),
        fixed_points: base.fixed_points().to_vec(),
        domain: base.domain().clone(),
        applications: AtomicU64::new(0),
    }
}

/// Iterates `F^k(x0)` for `k_min <= k <= k_max` on the universal cover.
/// Angle coordinates are left unreduced; reduce on output if needed.
pub fn orbit(map: &MapFamily, x0: &[f64], k_min: i64, k_max: i64) -> Result<Vec<Vec<f64>>> {
    assert!(k_min <= k_max);
    let len = (k_max - k_min + 1) as usize;
    let mut states = vec![Vec::new(); len];

    // walk from the anchor k = 0 (or the closest end of the range) outward
    let anchor_k = 0i64.clamp(k_min, k_max);
    let mut cur = x0.to_vec();
    for i in 0..anchor_k.max(0) {
        cur = map.forward_vec(&cur)?;
        if !map.domain().contains(&cur) {
            return Err(Error::OrbitEscape { k: i + 1, partial: Vec::new() });
        }
    }
    for i in 0..(-anchor_k).max(0) {
        cur = map.inverse_vec(&cur)?;
        if !map.domain().contains(&cur) {
            return Err(Error::OrbitEscape { k: -i - 1, partial: Vec::new() });
        }
    }
    states[(anchor_k - k_min) as usize] = cur.clone();

    let mut fwd = cur.clone();
    for k in (anchor_k + 1)..=k_max {
        let mut next = vec![0.0; map.dim()];
        map.forward(&fwd, &mut next)?;
        if !map.domain().contains(&next) {
            states.truncate((k - k_min) as usize);
            return Err(Error::OrbitEscape { k, partial: states });
        }
        states[(k - k_min) as usize] = next.clone();
        fwd = next;
    }
    let mut bwd = cur;
    for k in (k_min..anchor_k).rev() {
        let mut prev = vec![0.0; map.dim()];
        map.inverse(&bwd, &mut prev)?;
        if !map.domain().contains(&prev) {
            let partial = states[(k - k_min + 1) as usize..].to_vec();
            return Err(Error::OrbitEscape { k, partial });
        }
        states[(k - k_min) as usize] = prev.clone();
        bwd = prev;
    }
    Ok(states)
}

/// Locate a q-periodic point of `map` near `guess` by Newton iteration on the
/// wrapped residual `F^q(x) - x`. The converged residual itself certifies the
/// result.
pub fn find_periodic_point(
    map: &MapFamily,
    q: u32,
    guess: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let dim = map.dim();
    let residual = |x: &[f64], out: &mut [f64]| -> Result<()> {
        let mut cur = x.to_vec();
        let mut img = vec![0.0; dim];
        for _ in 0..q {
            map.forward(&cur, &mut img)?;
            cur.copy_from_slice(&img);
        }
        for j in 0..dim {
            let d = cur[j] - x[j];
            out[j] = if map.angle_mask()[j] { wrap_angle(d) } else { d };
        }
        Ok(())
    };
    let mut x = guess.to_vec();
    let mut r = vec![0.0; dim];
    for _ in 0..max_iter {
        residual(&x, &mut r)?;
        if linalg::max_abs(&r) <= tol {
            return Ok(x);
        }
        let jac = linalg::jacobian_fd(|y, out| residual(y, out), &x, 1e-7)?;
        let delta = linalg::solve(jac, r.clone())?;
        for j in 0..dim {
            x[j] -= delta[j];
        }
    }
    residual(&x, &mut r)?;
    if linalg::max_abs(&r) <= tol {
        Ok(x)
    } else {
        Err(Error::NewtonFailed(format!(
            "periodic point residual {:.3e} after {} iterations",
            linalg::max_abs(&r),
            max_iter
        )))
    }
}
