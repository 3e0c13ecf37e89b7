//! The interpolating vector field of a near-identity map.
//!
//! Given a map family `F` with near-identity step `eps` and an order `n`, the
//! field is the velocity at `t = 0` of the degree-`2n` polynomial through the
//! iterates `F^k(x)` at times `k*eps`:
//!
//! ```text
//! X_n(x) = eps^{-1} sum_{k=1}^{n} p_{nk} (x_k - x_{-k}),   x_k = F^k(x).
//! ```
//!
//! Iterates are recomputed on every evaluation: evaluations happen at
//! integrator-chosen points, so a cache would never hit. One evaluation costs
//! exactly `2n` map applications. Differences are taken on the universal
//! cover and the result is a tangent vector, never reduced.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::coeffs::{lagrange_basis, CoeffTable};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::maps::MapFamily;

/// An order-`n` interpolating vector field bound to a map family.
pub struct IvfField {
    map: Arc<MapFamily>,
    table: CoeffTable,
    eval_count: AtomicU64,
}

impl IvfField {
    pub fn new(map: Arc<MapFamily>, n: usize) -> Result<Self> {
        Ok(IvfField {
            map,
            table: CoeffTable::new(n)?,
            eval_count: AtomicU64::new(0),
        })
    }

    pub fn order(&self) -> usize {
        self.table.order()
    }

    pub fn map(&self) -> &MapFamily {
        &self.map
    }

    pub fn map_arc(&self) -> Arc<MapFamily> {
        self.map.clone()
    }

    pub fn table(&self) -> &CoeffTable {
        &self.table
    }

    /// Number of field evaluations so far (diagnostics only).
    pub fn evaluations(&self) -> u64 {
        self.eval_count.load(Ordering::Relaxed)
    }

    /// Evaluate `X_n(x)` into `out`.
    ///
    /// At `eps = 0` the limit field is returned when the family declares one.
    /// A domain escape of any iterate aborts with the signed escape index.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval_count.fetch_add(1, Ordering::Relaxed);
        let eps = self.map.step();
        if eps == 0.0 {
            return self.map.limit_field(x, out);
        }
        let n = self.table.order();
        let dim = self.map.dim();
        let p = self.table.positive_half();

        out.iter_mut().for_each(|v| *v = 0.0);
        let mut fwd = x.to_vec();
        let mut bwd = x.to_vec();
        let mut tmp = vec![0.0; dim];
        for k in 1..=n {
            self.map.forward(&fwd, &mut tmp)?;
            if !self.map.domain().contains(&tmp) {
                return Err(Error::DomainEscape { k: k as i64 });
            }
            fwd.copy_from_slice(&tmp);
            self.map.inverse(&bwd, &mut tmp)?;
            if !self.map.domain().contains(&tmp) {
                return Err(Error::DomainEscape { k: -(k as i64) });
            }
            bwd.copy_from_slice(&tmp);
            let pk = p[k - 1];
            for j in 0..dim {
                out[j] += pk * (fwd[j] - bwd[j]);
            }
        }
        for v in out.iter_mut() {
            *v /= eps;
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.map.dim()];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    /// Evaluate the interpolating curve `p_n(t)` through the iterates of `x`.
    /// Exact at the nodes `t = k*eps`; requires `|t| <= n*eps`.
    pub fn interp_curve(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let eps = self.map.step();
        if eps == 0.0 {
            return Err(Error::Invalid("interpolating curve needs eps != 0".into()));
        }
        let n = self.table.order() as i64;
        let tau = t / eps;
        if tau.abs() > n as f64 {
            return Err(Error::Invalid(format!(
                "curve parameter t = {t} outside the node range |t| <= {}",
                n as f64 * eps.abs()
            )));
        }
        let iterates = crate::maps::orbit(&self.map, x, -n, n).map_err(|e| match e {
            Error::OrbitEscape { k, .. } => Error::DomainEscape { k },
            other => other,
        })?;
        let dim = self.map.dim();
        let mut out = vec![0.0; dim];
        for (idx, state) in iterates.iter().enumerate() {
            let k = idx as i64 - n;
            let w = lagrange_basis(n as usize, k, tau);
            if w != 0.0 {
                for j in 0..dim {
                    out[j] += w * state[j];
                }
            }
        }
        Ok(out)
    }

    /// Worst reversibility defect `max |X_n(R x) + R X_n(x)|` over the sample
    /// points, using the reversor declared by the map family.
    pub fn reversibility_defect(&self, points: &[Vec<f64>]) -> Result<f64> {
        let r = self.map.reversor().ok_or(Error::NoReversor)?.clone();
        self.defect_against(&r, points)
    }

    /// Same as [`IvfField::reversibility_defect`] but validating an explicit
    /// candidate reversor first. A matrix that is not an involution or does
    /// not conjugate the map to its inverse is rejected.
    pub fn reversibility_defect_with(&self, r: &Matrix, points: &[Vec<f64>]) -> Result<f64> {
        let probe = self.map.sample_points(16, 0x1f);
        let inv_defect = r.matmul(r).max_abs_diff(&Matrix::identity(r.dim));
        if inv_defect > 1e-12 {
            return Err(Error::NotAReversor { defect: inv_defect });
        }
        let mut defect: f64 = 0.0;
        let mut img = vec![0.0; self.map.dim()];
        let mut conj = vec![0.0; self.map.dim()];
        for x in &probe {
            let rx = r.apply_vec(x);
            self.map.forward(&rx, &mut img)?;
            let rfr = r.apply_vec(&img);
            self.map.inverse(x, &mut conj)?;
            defect = defect.max(
                rfr.iter()
                    .zip(&conj)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
        }
        if defect > 1e-10 {
            return Err(Error::NotAReversor { defect });
        }
        self.defect_against(r, points)
    }

    fn defect_against(&self, r: &Matrix, points: &[Vec<f64>]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in points {
            let xr = r.apply_vec(x);
            let field_at_rx = self.eval(&xr)?;
            let field_at_x = self.eval(x)?;
            let r_field = r.apply_vec(&field_at_x);
            let defect = field_at_rx
                .iter()
                .zip(&r_field)
                .map(|(a, b)| (a + b) * (a + b))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(defect);
        }
        Ok(worst)
    }
}

/// Velocity of an arbitrary sampled curve at its central node:
/// `v_n = eps^{-1} sum_k p_{nk} gamma(k*eps)` for `2n+1` samples at times
/// `k*eps`, `k = -n..=n`. Shares its kernel with the field evaluation.
pub fn curve_derivative(samples: &[Vec<f64>], table: &CoeffTable, epsilon: f64) -> Result<Vec<f64>> {
    let n = table.order();
    if samples.len() != 2 * n + 1 {
        return Err(Error::Invalid(format!(
            "expected {} samples for order {n}, got {}",
            2 * n + 1,
            samples.len()
        )));
    }
    if epsilon == 0.0 {
        return Err(Error::Invalid("curve derivative needs eps != 0".into()));
    }
    let dim = samples[0].len();
    let mut out = vec![0.0; dim];
    for k in 1..=n {
        let pk = table.coeff(k as i64);
        let plus = &samples[n + k];
        let minus = &samples[n - k];
        for j in 0..dim {
            out[j] += pk * (plus[j] - minus[j]);
        }
    }
    for v in out.iter_mut() {
        *v /= epsilon;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::harmonic;
    use crate::linalg;
    use crate::maps::{Domain, FroeschleParams};
    use proptest::prelude::*;

    fn pendulum_flow(epsilon: f64, tol: f64) -> MapFamily {
        MapFamily::flow_map(
            |x, out| {
                out[0] = x[1];
                out[1] = -x[0].sin();
            },
            2,
            epsilon,
            tol,
        )
    }

    #[test]
    fn equilibrium_at_fixed_point() {
        let map = Arc::new(MapFamily::standard_map(0.1));
        let field = IvfField::new(map, 5).unwrap();
        let v = field.eval(&[0.0, 0.0]).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
        assert_eq!(field.evaluations(), 1);
    }

    #[test]
    fn scaling_family_matches_closed_form() {
        // F(x) = e^{eps} x in one dimension; iterates are e^{k eps} x.
        let eps = 0.05;
        let map = Arc::new(MapFamily::custom_with_inverse(
            move |x, out| {
                out[0] = eps.exp() * x[0];
                Ok(())
            },
            move |x, out| {
                out[0] = (-eps).exp() * x[0];
                Ok(())
            },
            1,
            eps,
        ));
        let field = IvfField::new(map, 3).unwrap();
        let v = field.eval(&[1.0]).unwrap()[0];

        // independent closed-form sum
        let t = CoeffTable::new(3).unwrap();
        let mut expected = 0.0;
        for k in 1..=3i32 {
            expected += t.coeff(k as i64) * ((k as f64 * eps).exp() - (-(k as f64) * eps).exp());
        }
        expected /= eps;
        assert!((v - expected).abs() < 1e-13);

        // recovery of the generator within the interpolation error bound
        let bound = eps.powi(6) * 36.0 / 5040.0 * (3.0 * eps).exp();
        assert!((v - 1.0).abs() <= bound * 1.0001, "err {:e} bound {:e}", (v - 1.0).abs(), bound);
    }

    #[test]
    fn pendulum_field_is_recovered() {
        let map = Arc::new(pendulum_flow(0.1, 1e-13));
        let field = IvfField::new(map, 4).unwrap();
        let v = field.eval(&[1.0, 0.0]).unwrap();
        assert!((v[0] - 0.0).abs() < 1e-9);
        assert!((v[1] + 1.0f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn interp_curve_hits_the_nodes() {
        let map = Arc::new(MapFamily::standard_map(0.2));
        let field = IvfField::new(map.clone(), 3).unwrap();
        let x = [1.0, 0.5];
        let at0 = field.interp_curve(&x, 0.0).unwrap();
        assert_eq!(at0, vec![1.0, 0.5]);
        let at_eps = field.interp_curve(&x, 0.2).unwrap();
        let fwd = map.forward_vec(&x).unwrap();
        assert!(linalg::dist2(&at_eps, &fwd) < 1e-13);
        assert!(field.interp_curve(&x, 0.7).is_err());
    }

    #[test]
    fn interp_curve_midpoint_of_linear_flow() {
        let map = Arc::new(MapFamily::flow_map(|x, out| out[0] = x[0], 1, 0.1, 1e-13));
        let field = IvfField::new(map, 2).unwrap();
        let mid = field.interp_curve(&[1.0], 0.05).unwrap()[0];
        assert!((mid - 0.05f64.exp()).abs() < 2e-7);
    }

    #[test]
    fn curve_derivative_moment_identities() {
        for n in [1usize, 2, 4] {
            let table = CoeffTable::new(n).unwrap();
            let eps = 0.1;
            let linear: Vec<Vec<f64>> = (-(n as i64)..=n as i64)
                .map(|k| vec![k as f64 * eps])
                .collect();
            let v = curve_derivative(&linear, &table, eps).unwrap();
            assert!((v[0] - 1.0).abs() < 1e-13);

            let quad: Vec<Vec<f64>> = (-(n as i64)..=n as i64)
                .map(|k| vec![(k as f64 * eps).powi(2)])
                .collect();
            let v = curve_derivative(&quad, &table, eps).unwrap();
            assert!(v[0].abs() < 1e-13);
        }
    }

    #[test]
    fn curve_derivative_of_sine_meets_the_bound() {
        let table = CoeffTable::new(3).unwrap();
        let eps = 0.1;
        let samples: Vec<Vec<f64>> = (-3i64..=3)
            .map(|k| vec![(k as f64 * eps).sin()])
            .collect();
        let v = curve_derivative(&samples, &table, eps).unwrap()[0];
        let bound = eps.powi(6) * 36.0 / 5040.0; // max |gamma^(7)| = 1
        assert!((v - 1.0).abs() <= bound, "err {:e} bound {:e}", (v - 1.0).abs(), bound);
    }

    #[test]
    fn reversibility_of_the_pendulum_field() {
        let map = pendulum_flow(0.1, 1e-12)
            .with_reversor(Matrix::diagonal(&[-1.0, 1.0]))
            .unwrap();
        let map = Arc::new(map);
        let points = map.sample_points(100, 42);
        for n in 1..=3 {
            let field = IvfField::new(map.clone(), n).unwrap();
            let defect = field.reversibility_defect(&points).unwrap();
            assert!(defect <= 1e-10, "n={n} defect {defect:e}");
        }
    }

    #[test]
    fn field_on_the_symmetry_axis_points_along_it() {
        // R = diag(-1, 1) fixes the y-axis; there X_n + R X_n = 0 forces the
        // second component to vanish.
        let map = Arc::new(pendulum_flow(0.1, 1e-12));
        let field = IvfField::new(map, 3).unwrap();
        for y in [0.3, -0.7, 1.5] {
            let v = field.eval(&[0.0, y]).unwrap();
            assert!(v[1].abs() < 1e-12, "y={y} v={v:?}");
        }
    }

    #[test]
    fn missing_reversor_is_rejected() {
        let map = Arc::new(MapFamily::standard_map(0.1));
        let field = IvfField::new(map.clone(), 2).unwrap();
        let pts = map.sample_points(4, 1);
        assert!(matches!(
            field.reversibility_defect(&pts),
            Err(Error::NoReversor)
        ));
        assert!(matches!(
            field.reversibility_defect_with(&Matrix::identity(2), &pts),
            Err(Error::NotAReversor { .. })
        ));
    }

    #[test]
    fn zero_epsilon_uses_the_limit_field() {
        let map = Arc::new(MapFamily::standard_map(0.0));
        let field = IvfField::new(map, 3).unwrap();
        let v = field.eval(&[1.0, 0.5]).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-15);
        assert!((v[1] + 1.0f64.sin()).abs() < 1e-15);

        let bare = Arc::new(MapFamily::custom(
            |x, out| {
                out.copy_from_slice(x);
                Ok(())
            },
            2,
            0.0,
        ));
        let field = IvfField::new(bare, 3).unwrap();
        assert!(matches!(field.eval(&[1.0, 0.5]), Err(Error::NoLimitField)));
    }

    #[test]
    fn escape_reports_the_iterate_index() {
        let map = MapFamily::standard_map(0.5)
            .with_domain(Domain::unbounded(2).with_bound(1, -2.0, 2.0));
        let field = IvfField::new(Arc::new(map), 8).unwrap();
        let err = field.eval(&[2.0, 1.9]).unwrap_err();
        assert!(matches!(err, Error::DomainEscape { .. }));
    }

    #[test]
    fn q_iterate_field_on_froeschle_fixed_points() {
        let map = Arc::new(MapFamily::froeschle_map(0.2, FroeschleParams::default()));
        let pow = Arc::new(crate::maps::iterate_power(map, 2));
        let field = IvfField::new(pow.clone(), 4).unwrap();
        for p in pow.fixed_points().to_vec() {
            let v = field.eval(&p).unwrap();
            assert!(linalg::norm2(&v) < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn stability_under_sample_perturbations(
            n in 1usize..8,
            delta in 1e-9f64..1e-3,
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let table = CoeffTable::new(n).unwrap();
            let eps = 0.1;
            let base: Vec<Vec<f64>> = (-(n as i64)..=n as i64)
                .map(|k| vec![(k as f64 * eps).sin(), (k as f64 * eps).cos()])
                .collect();
            let perturbed: Vec<Vec<f64>> = base
                .iter()
                .map(|s| s.iter().map(|v| v + rng.gen_range(-delta..delta)).collect())
                .collect();
            let v0 = curve_derivative(&base, &table, eps).unwrap();
            let v1 = curve_derivative(&perturbed, &table, eps).unwrap();
            let diff = v0
                .iter()
                .zip(&v1)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            // sup-norm perturbation of the samples, componentwise
            prop_assert!(diff <= harmonic(n) * delta / eps * (1.0 + 1e-9));
        }

        #[test]
        fn joint_translation_of_a_sample_pair_is_invisible(
            n in 1usize..6,
            k in 1usize..6,
            shift in -10.0f64..10.0,
        ) {
            prop_assume!(k <= n);
            let table = CoeffTable::new(n).unwrap();
            let eps = 0.2;
            let base: Vec<Vec<f64>> = (-(n as i64)..=n as i64)
                .map(|j| vec![(j as f64 * eps).sin()])
                .collect();
            let mut shifted = base.clone();
            shifted[n + k][0] += shift;
            shifted[n - k][0] += shift;
            let v0 = curve_derivative(&base, &table, eps).unwrap()[0];
            let v1 = curve_derivative(&shifted, &table, eps).unwrap()[0];
            // depends on iterates only through the differences x_k - x_{-k}
            prop_assert!((v0 - v1).abs() < 1e-12 * (1.0 + shift.abs() / eps));
        }
    }
}
