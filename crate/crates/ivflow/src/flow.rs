//! Trajectories of an interpolating vector field and map-vs-flow error grids.
//!
//! Cost model: one accepted integrator step spends 13 field evaluations, and
//! each field evaluation of an order-`n` field spends `2n` map applications.
//! The experiment planner surfaces this estimate before long runs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ivf::IvfField;
use crate::linalg::dist2;
use crate::rkf78;

pub use crate::rkf78::IntegratorSettings;

/// Advance `x` by time `t` along the field, `Phi^t_{X_n}(x)`.
pub fn advance(field: &IvfField, x: &[f64], t: f64, settings: &IntegratorSettings) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    rkf78::integrate(|p, dp| field.eval_into(p, dp), &mut y, 0.0, t, settings)?;
    Ok(y)
}

/// Uniform rectangular grid, inclusive of both ends; the last coordinate
/// varies fastest in iteration order.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != counts.len() {
            return Err(Error::Invalid("grid lo/hi/counts lengths differ".into()));
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::Invalid("grid counts must be positive".into()));
        }
        Ok(GridSpec { lo, hi, counts })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let dim = self.dim();
        let mut out = vec![0.0; dim];
        for j in (0..dim).rev() {
            let c = self.counts[j];
            let i = index % c;
            index /= c;
            out[j] = if c == 1 {
                self.lo[j]
            } else {
                self.lo[j] + i as f64 * (self.hi[j] - self.lo[j]) / (c - 1) as f64
            };
        }
        out
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

/// Per-point `log10 |Phi^eps_{X_n}(x) - F(x)|` over a grid, distances taken in
/// lifted coordinates. Failed points carry NaN; the grid always completes.
#[derive(Debug, Clone)]
pub struct ErrorGrid {
    pub grid: GridSpec,
    /// Row-major `log10` errors, NaN where the evaluation failed.
    pub log10_err: Vec<f64>,
    pub failures: usize,
}

impl ErrorGrid {
    /// Largest raw error over the grid, ignoring failed points.
    pub fn max_error(&self) -> f64 {
        let worst = self
            .log10_err
            .iter()
            .filter(|v| !v.is_nan())
            .fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        10f64.powf(worst)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.grid.dim();
        for j in 0..dim {
            write!(w, "x{},", j + 1)?;
        }
        writeln!(w, "log10_err")?;
        for (i, v) in self.log10_err.iter().enumerate() {
            let p = self.grid.point(i);
            for c in &p {
                write!(w, "{c},")?;
            }
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

/// Compare the time-`eps` flow of the field with one map application on every
/// grid point. Points are processed in parallel; the output order is fixed.
pub fn flowmap_error_grid(
    field: &IvfField,
    grid: &GridSpec,
    settings: &IntegratorSettings,
) -> ErrorGrid {
    let eps = field.map().step();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x0 = grid.point(i);
            let flowed = match advance(field, &x0, eps, settings) {
                Ok(v) => v,
                Err(_) => return f64::NAN,
            };
            let mapped = match field.map().forward_vec(&x0) {
                Ok(v) => v,
                Err(_) => return f64::NAN,
            };
            dist2(&flowed, &mapped).log10()
        })
        .collect();
    let failures = values.iter().filter(|v| v.is_nan()).count();
    ErrorGrid {
        grid: grid.clone(),
        log10_err: values,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapFamily;
    use std::sync::Arc;

    fn linear_field_map(eps: f64) -> Arc<MapFamily> {
        Arc::new(MapFamily::flow_map(|x, out| out[0] = x[0], 1, eps, 1e-13))
    }

    #[test]
    fn advance_by_zero_is_identity() {
        let field = IvfField::new(linear_field_map(0.05), 3).unwrap();
        let y = advance(&field, &[1.25], 0.0, &IntegratorSettings::default()).unwrap();
        assert_eq!(y, vec![1.25]);
    }

    #[test]
    fn advance_reaches_e_on_the_linear_field() {
        let field = IvfField::new(linear_field_map(0.05), 3).unwrap();
        let y = advance(&field, &[1.0], 1.0, &IntegratorSettings::oracle()).unwrap();
        assert!(
            (y[0] - std::f64::consts::E).abs() < 1e-8,
            "got {} err {:e}",
            y[0],
            (y[0] - std::f64::consts::E).abs()
        );
    }

    #[test]
    fn group_property_within_tolerance() {
        let map = Arc::new(MapFamily::standard_map(0.1));
        let field = IvfField::new(map, 4).unwrap();
        let s = IntegratorSettings::default();
        let x = [1.0, 0.5];
        let one = advance(&field, &advance(&field, &x, 0.3, &s).unwrap(), 0.4, &s).unwrap();
        let two = advance(&field, &x, 0.7, &s).unwrap();
        assert!(dist2(&one, &two) <= 10.0 * 1e-10);
    }

    #[test]
    fn grid_indexing_is_row_major() {
        let g = GridSpec::new(vec![0.0, 10.0], vec![1.0, 12.0], vec![2, 3]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.point(0), vec![0.0, 10.0]);
        assert_eq!(g.point(1), vec![0.0, 11.0]);
        assert_eq!(g.point(3), vec![1.0, 10.0]);
        assert_eq!(g.point(5), vec![1.0, 12.0]);
    }

    #[test]
    fn error_vanishes_at_the_fixed_point() {
        let map = Arc::new(MapFamily::standard_map(0.1));
        let field = IvfField::new(map, 3).unwrap();
        let g = GridSpec::new(vec![0.0, 0.0], vec![0.0, 0.0], vec![1, 1]).unwrap();
        let grid = flowmap_error_grid(&field, &g, &IntegratorSettings::default());
        assert_eq!(grid.failures, 0);
        // both sides fix the point exactly
        assert!(grid.log10_err[0] <= -11.0 || grid.log10_err[0].is_infinite());
    }

    #[test]
    fn error_decreases_with_order() {
        let map = Arc::new(MapFamily::standard_map(0.1));
        let g = GridSpec::new(
            vec![-3.0, -6.0],
            vec![3.0, 6.0],
            vec![9, 9],
        )
        .unwrap();
        let s = IntegratorSettings::oracle();
        let mut last = f64::INFINITY;
        for n in [2usize, 4, 6] {
            let field = IvfField::new(map.clone(), n).unwrap();
            let grid = flowmap_error_grid(&field, &g, &s);
            let max = grid.max_error();
            assert!(max < last, "n={n}: {max:e} !< {last:e}");
            last = max;
        }
    }

    #[test]
    fn error_field_inherits_the_odd_symmetry() {
        // the standard map commutes with (x, y) -> (-x, -y)
        let map = Arc::new(MapFamily::standard_map(0.1));
        let field = IvfField::new(map.clone(), 3).unwrap();
        let s = IntegratorSettings::oracle();
        for p in [[1.0, 0.7], [2.2, -4.0], [0.4, 3.3]] {
            let q = [-p[0], -p[1]];
            let ep = dist2(
                &advance(&field, &p, 0.1, &s).unwrap(),
                &map.forward_vec(&p).unwrap(),
            );
            let eq = dist2(
                &advance(&field, &q, 0.1, &s).unwrap(),
                &map.forward_vec(&q).unwrap(),
            );
            assert!(
                (ep - eq).abs() <= 2.0 * 1e-13 + 1e-9 * ep,
                "asymmetry at {p:?}: {ep:e} vs {eq:e}"
            );
        }
    }
}
