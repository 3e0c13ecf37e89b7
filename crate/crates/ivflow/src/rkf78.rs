//! Embedded Runge-Kutta-Fehlberg 7(8) integrator with adaptive step size.
//!
//! The classical 13-stage Fehlberg pair. The 8th-order solution is propagated;
//! the difference against the embedded 7th-order solution drives the step-size
//! controller. One accepted step costs 13 right-hand-side evaluations.

use crate::error::{Error, Result};

/// Stage abscissae.
const C: [f64; 13] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    1.0 / 2.0,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

/// Stage coupling coefficients, row `i` holds `a[i][0..i]`.
const A: [&[f64]; 13] = [
    &[],
    &[2.0 / 27.0],
    &[1.0 / 36.0, 1.0 / 12.0],
    &[1.0 / 24.0, 0.0, 1.0 / 8.0],
    &[5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0],
    &[1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0],
    &[-25.0 / 108.0, 0.0, 0.0, 125.0 / 108.0, -65.0 / 27.0, 125.0 / 54.0],
    &[31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0],
    &[2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0],
    &[
        -91.0 / 108.0,
        0.0,
        0.0,
        23.0 / 108.0,
        -976.0 / 135.0,
        311.0 / 54.0,
        -19.0 / 60.0,
        17.0 / 6.0,
        -1.0 / 12.0,
    ],
    &[
        2383.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -301.0 / 82.0,
        2133.0 / 4100.0,
        45.0 / 82.0,
        45.0 / 164.0,
        18.0 / 41.0,
    ],
    &[
        3.0 / 205.0,
        0.0,
        0.0,
        0.0,
        0.0,
        -6.0 / 41.0,
        -3.0 / 205.0,
        -3.0 / 41.0,
        3.0 / 41.0,
        6.0 / 41.0,
        0.0,
    ],
    &[
        -1777.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -289.0 / 82.0,
        2193.0 / 4100.0,
        51.0 / 82.0,
        33.0 / 164.0,
        12.0 / 41.0,
        0.0,
        1.0,
    ],
];

/// 8th-order weights (propagated solution).
const B8: [f64; 13] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

const SAFETY: f64 = 0.9;
const SHRINK_FLOOR: f64 = 0.1;
const GROWTH_CAP: f64 = 5.0;

/// Tolerances and step bounds for the adaptive integration.
#[derive(Debug, Clone)]
pub struct IntegratorSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Initial step magnitude; `None` tries the whole span at once.
    pub h_init: Option<f64>,
    /// Step magnitude below which the integration reports underflow.
    pub h_min: f64,
    /// Cap on the step magnitude; `None` means the span length.
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            abs_tol: 1e-11,
            rel_tol: 1e-11,
            h_init: None,
            h_min: 1e-14,
            h_max: None,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorSettings {
    /// Tight tolerances used for oracle-grade runs.
    pub fn oracle() -> Self {
        IntegratorSettings {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            ..Default::default()
        }
    }

    pub fn with_tol(tol: f64) -> Self {
        IntegratorSettings {
            abs_tol: tol,
            rel_tol: tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Invalid("integrator tolerances must be positive".into()));
        }
        if let (Some(hi), Some(hm)) = (self.h_init, self.h_max) {
            if !(self.h_min <= hi && hi <= hm) {
                return Err(Error::Invalid(
                    "integrator step bounds must satisfy h_min <= h_init <= h_max".into(),
                ));
            }
        } else if let Some(hi) = self.h_init {
            if self.h_min > hi {
                return Err(Error::Invalid(
                    "integrator step bounds must satisfy h_min <= h_init".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Integrate `dy/dt = f(y)` from `t0` to `t1` in place.
///
/// `f` writes the derivative of `y` into its second argument; a failing `f`
/// (domain escape, inner solver failure) aborts the integration.
pub fn integrate<F>(mut f: F, y: &mut [f64], t0: f64, t1: f64, settings: &IntegratorSettings) -> Result<()>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(());
    }
    let dir = span.signum();
    let span_abs = span.abs();
    let h_max = settings.h_max.unwrap_or(span_abs).min(span_abs);
    let mut h = settings.h_init.unwrap_or(span_abs).min(h_max).max(settings.h_min);

    let m = y.len();
    let mut k = vec![vec![0.0; m]; 13];
    let mut stage = vec![0.0; m];
    let mut y_new = vec![0.0; m];

    let mut t_rel = 0.0; // accumulated |t - t0|, exact termination test
    let mut steps = 0;

    while t_rel < span_abs {
        if steps >= settings.max_steps {
            return Err(Error::MaxStepsExceeded {
                max_steps: settings.max_steps,
                t: t0 + dir * t_rel,
                state: y.to_vec(),
            });
        }
        steps += 1;
        let h_eff = h.min(span_abs - t_rel);
        let hs = dir * h_eff;

        f(y, &mut k[0])?;
        for i in 1..13 {
            for (j, s) in stage.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (l, &a) in A[i].iter().enumerate() {
                    if a != 0.0 {
                        acc += a * k[l][j];
                    }
                }
                *s = y[j] + hs * acc;
            }
            let (head, tail) = k.split_at_mut(i);
            let _ = head;
            f(&stage, &mut tail[0])?;
        }

        // 8th-order solution and embedded error estimate
        let mut err_norm: f64 = 0.0;
        for j in 0..m {
            let mut acc = 0.0;
            for (l, &b) in B8.iter().enumerate() {
                if b != 0.0 {
                    acc += b * k[l][j];
                }
            }
            y_new[j] = y[j] + hs * acc;
            let e = (41.0 / 840.0) * hs * (k[0][j] + k[10][j] - k[11][j] - k[12][j]);
            let scale = settings.abs_tol + settings.rel_tol * y[j].abs().max(y_new[j].abs());
            err_norm = err_norm.max((e / scale).abs());
        }

        if err_norm <= 1.0 {
            y.copy_from_slice(&y_new);
            t_rel += h_eff;
            let factor = if err_norm == 0.0 {
                GROWTH_CAP
            } else {
                (SAFETY * err_norm.powf(-1.0 / 8.0)).clamp(SHRINK_FLOOR, GROWTH_CAP)
            };
            h = (h_eff * factor).min(h_max);
        } else {
            h = h_eff * (SAFETY * err_norm.powf(-1.0 / 8.0)).max(SHRINK_FLOOR);
        }
        if h < settings.h_min && t_rel < span_abs {
            return Err(Error::StepUnderflow {
                t: t0 + dir * t_rel,
                state: y.to_vec(),
            });
        }
        let _ = C; // abscissae kept with the tableau; autonomous fields ignore them
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_is_consistent() {
        for i in 0..13 {
            let row: f64 = A[i].iter().sum();
            assert!((row - C[i]).abs() < 1e-13, "row {i}: {row} vs {}", C[i]);
        }
        let b: f64 = B8.iter().sum();
        assert!((b - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_growth() {
        let mut y = vec![1.0];
        integrate(
            |x, dx| {
                dx[0] = x[0];
                Ok(())
            },
            &mut y,
            0.0,
            1.0,
            &IntegratorSettings::default(),
        )
        .unwrap();
        let e = std::f64::consts::E;
        assert!((y[0] - e).abs() <= 100.0 * 1e-11 * e, "err {:e}", (y[0] - e).abs());
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let run = |tol: f64| {
            let mut y = vec![1.0];
            integrate(
                |x, dx| {
                    dx[0] = x[0];
                    Ok(())
                },
                &mut y,
                0.0,
                5.0,
                &IntegratorSettings {
                    abs_tol: tol,
                    rel_tol: tol,
                    h_init: Some(0.5),
                    ..Default::default()
                },
            )
            .unwrap();
            (y[0] - 5.0f64.exp()).abs()
        };
        let coarse = run(1e-6);
        let fine = run(1e-12);
        assert!(fine < coarse, "fine {fine:e} coarse {coarse:e}");
    }

    #[test]
    fn backward_integration_returns() {
        let mut y = vec![2.0, -1.0];
        let f = |x: &[f64], dx: &mut [f64]| {
            dx[0] = x[1];
            dx[1] = -x[0].sin();
            Ok(())
        };
        integrate(f, &mut y, 0.0, 3.0, &IntegratorSettings::oracle()).unwrap();
        integrate(f, &mut y, 3.0, 0.0, &IntegratorSettings::oracle()).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-10);
        assert!((y[1] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn pendulum_energy_is_conserved() {
        let mut y = vec![1.0, 0.5];
        let energy = |y: &[f64]| y[1] * y[1] / 2.0 - y[0].cos();
        let e0 = energy(&y);
        integrate(
            |x, dx| {
                dx[0] = x[1];
                dx[1] = -x[0].sin();
                Ok(())
            },
            &mut y,
            0.0,
            10.0,
            &IntegratorSettings::default(),
        )
        .unwrap();
        assert!((energy(&y) - e0).abs() < 1e-9);
    }

    #[test]
    fn max_steps_is_reported() {
        let mut y = vec![1.0];
        let err = integrate(
            |x, dx| {
                dx[0] = x[0];
                Ok(())
            },
            &mut y,
            0.0,
            1.0,
            &IntegratorSettings {
                max_steps: 2,
                h_init: Some(1e-6),
                h_max: Some(1e-6),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::MaxStepsExceeded { .. }));
    }

    #[test]
    fn underflow_is_reported() {
        // A right-hand side too rough for the requested tolerance forces the
        // controller below h_min.
        let mut y = vec![0.5];
        let err = integrate(
            |x, dx| {
                dx[0] = 1e6 * (1e8 * x[0]).sin();
                Ok(())
            },
            &mut y,
            0.0,
            1.0,
            &IntegratorSettings {
                abs_tol: 1e-12,
                rel_tol: 1e-12,
                h_min: 1e-6,
                h_init: Some(0.1),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }));
    }
}
