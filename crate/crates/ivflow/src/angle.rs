//! Angle arithmetic on the circle and its universal cover.
//!
//! Angle coordinates live in the fundamental domain `(-pi, pi]`. Orbits are
//! tracked on the universal cover: every map application wraps the per-step
//! *displacement* into `(-pi, pi]`, which selects the lift of a near-identity
//! circle map that is itself near the identity. Reduction to the fundamental
//! domain happens only at output boundaries.

use std::f64::consts::{PI, TAU};

/// Reduce an angle to the fundamental domain `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU); // [0, 2*pi)
    if r > PI {
        r -= TAU;
    }
    r
}

/// Wrap a per-step displacement into `(-pi, pi]`.
///
/// Displacements already inside the fundamental domain are returned
/// bit-identically, so the common near-identity path stays exact.
pub fn wrap_displacement(d: f64) -> f64 {
    if d > -PI && d <= PI {
        d
    } else {
        wrap_angle(d)
    }
}

/// Reduce the angle coordinates of a state in place.
pub fn reduce_state(x: &mut [f64], angle_mask: &[bool]) {
    for (xi, &is_angle) in x.iter_mut().zip(angle_mask) {
        if is_angle {
            *xi = wrap_angle(*xi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fundamental_domain_boundaries() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(PI + 0.1) + PI - 0.1).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn small_displacements_are_bit_exact() {
        for &d in &[0.0, 1e-300, -1e-300, 0.5, -0.5, PI, -PI + 1e-12] {
            assert_eq!(wrap_displacement(d), d);
        }
        assert!((wrap_displacement(TAU + 0.25) - 0.25).abs() < 1e-12);
        assert!((wrap_displacement(-TAU + 0.25) - 0.25).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn wrap_is_in_domain(a in -1e6f64..1e6) {
            let w = wrap_angle(a);
            prop_assert!(w > -PI && w <= PI);
            // representative of the same point on the circle
            prop_assert!(((a - w) / TAU - ((a - w) / TAU).round()).abs() < 1e-9);
        }

        #[test]
        fn wrap_is_idempotent(a in -1e3f64..1e3) {
            let w = wrap_angle(a);
            prop_assert_eq!(wrap_angle(w), w);
        }
    }
}
