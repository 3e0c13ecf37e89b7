//! Derivative coefficients of the symmetric Lagrange interpolation.
//!
//! For equispaced nodes `-n..=n` the velocity of the degree-`2n` interpolating
//! polynomial at the central node is a fixed linear combination of the node
//! values with weights `p_{nk}`. In closed form
//!
//! ```text
//! p_{nk} = (-1)^(k+1) (n!)^2 / (k (n+k)! (n-k)!),   p_{n,-k} = -p_{nk},   p_{n0} = 0.
//! ```
//!
//! Tables are computed by a ratio recurrence rather than the factorial
//! quotient, which keeps the relative error at machine level and never
//! overflows for the supported orders. The weights satisfy
//!
//! ```text
//! sum_k p_{nk} k^j = 1 (j = 1),  0 (j = 0 or 2 <= j <= 2n)
//! sum_{k>0} |p_{nk}| = H_n / 2,  sum_{k>0} p_{nk} = H_{2n} - H_n
//! ```
//!
//! with `H_n` the n-th harmonic number.

use crate::error::{Error, Result};

/// Largest supported interpolation order. Useful orders are far lower: the
/// interpolation error eventually grows again with `n` through Runge
/// oscillations.
pub const MAX_ORDER: usize = 64;

/// Table of derivative weights `p_{nk}` for `1 <= k <= n`.
///
/// The full antisymmetric table over `-n..=n` is recovered through
/// [`CoeffTable::coeff`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    n: usize,
    /// `half[k-1] = p_{nk}` for `k = 1..=n`.
    half: Vec<f64>,
}

impl CoeffTable {
    /// Build the order-`n` table with the stable ratio recurrence
    /// `p_{n,1} = n/(n+1)`, `p_{n,k+1} = -p_{nk} k(n-k) / ((k+1)(n+k+1))`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 || n > MAX_ORDER {
            return Err(Error::OrderOutOfRange {
                got: n,
                max: MAX_ORDER,
            });
        }
        let mut half = Vec::with_capacity(n);
        let nf = n as f64;
        let mut p = nf / (nf + 1.0);
        half.push(p);
        for k in 1..n {
            let kf = k as f64;
            p *= -(kf * (nf - kf)) / ((kf + 1.0) * (nf + kf + 1.0));
            half.push(p);
        }
        Ok(CoeffTable { n, half })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Weights `p_{n,1}..p_{n,n}`.
    pub fn positive_half(&self) -> &[f64] {
        &self.half
    }

    /// `p_{nk}` for any `|k| <= n`; antisymmetric, zero at `k = 0`.
    pub fn coeff(&self, k: i64) -> f64 {
        let a = k.unsigned_abs() as usize;
        assert!(a <= self.n, "coefficient index {k} out of range for n = {}", self.n);
        if k == 0 {
            0.0
        } else if k > 0 {
            self.half[a - 1]
        } else {
            -self.half[a - 1]
        }
    }

    /// Moment sum over the full node range, `sum_{k=-n}^{n} p_{nk} k^j`.
    ///
    /// Equals 1 for `j = 1` and 0 for `j = 0` and `2 <= j <= 2n`. Even moments
    /// vanish termwise by antisymmetry; odd moments are evaluated in exact
    /// rational arithmetic, because for large `n` and `j` the alternating
    /// terms reach ~1e38 and cancel completely, far beyond what f64
    /// summation can resolve.
    pub fn moment_sum(&self, j: u32) -> f64 {
        use num::{BigInt, BigRational, One, ToPrimitive, Zero};
        if j % 2 == 0 {
            return 0.0; // p_{nk} k^j + p_{n,-k} (-k)^j = 0 termwise
        }
        let n = self.n;
        let fact = |m: usize| (1..=m).fold(BigInt::one(), |acc, k| acc * BigInt::from(k));
        let n_fact_sq = fact(n) * fact(n);
        let mut sum = BigRational::zero();
        for k in 1..=n {
            let sign = if k % 2 == 1 { BigInt::one() } else { -BigInt::one() };
            let p = BigRational::new(
                sign * &n_fact_sq,
                BigInt::from(k) * fact(n + k) * fact(n - k),
            );
            sum += p * BigRational::from(BigInt::from(2) * BigInt::from(k).pow(j));
        }
        sum.to_f64().unwrap_or(f64::NAN)
    }

    /// `sum_{k=1}^{n} |p_{nk}|`; equals `H_n / 2`.
    pub fn abs_sum(&self) -> f64 {
        self.half.iter().map(|p| p.abs()).sum()
    }

    /// `sum_{k=1}^{n} p_{nk}`; equals `H_{2n} - H_n`.
    pub fn signed_sum(&self) -> f64 {
        self.half.iter().sum()
    }

    /// Dump the full table as CSV (`k,p_nk`), one row per node `-n..=n`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,p_nk")?;
        for k in -(self.n as i64)..=(self.n as i64) {
            writeln!(w, "{},{}", k, self.coeff(k))?;
        }
        Ok(())
    }
}

/// n-th harmonic number `H_n = sum_{k=1}^n 1/k`.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Lagrange basis polynomial for the equispaced symmetric nodes,
/// `l_{nk}(tau) = prod_{j != k} (tau - j)/(k - j)` over `j = -n..=n`.
///
/// Exact at the nodes (`l_{nk}(j)` is exactly `0` or `1`). Used by the
/// interpolating-curve evaluation; the derivative weights on the hot path come
/// from [`CoeffTable`] instead.
pub fn lagrange_basis(n: usize, k: i64, tau: f64) -> f64 {
    debug_assert!(k.unsigned_abs() as usize <= n);
    let mut prod = 1.0;
    for j in -(n as i64)..=(n as i64) {
        if j != k {
            prod *= (tau - j as f64) / ((k - j) as f64);
        }
    }
    prod
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::bigint::BigInt;
    use num::rational::BigRational;
    use num::{One, Signed, ToPrimitive, Zero};
    use proptest::prelude::*;

    fn factorial(n: usize) -> BigInt {
        (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
    }

    /// Closed form in exact integer arithmetic; the independent oracle.
    fn pnk_exact(n: usize, k: usize) -> BigRational {
        let sign = if k % 2 == 0 { -BigInt::one() } else { BigInt::one() };
        let num = sign * factorial(n) * factorial(n);
        let den = BigInt::from(k) * factorial(n + k) * factorial(n - k);
        BigRational::new(num, den)
    }

    fn harmonic_exact(n: usize) -> BigRational {
        (1..=n)
            .map(|k| BigRational::new(BigInt::one(), BigInt::from(k)))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    #[test]
    fn low_order_values() {
        let t1 = CoeffTable::new(1).unwrap();
        assert_eq!(t1.coeff(1), 0.5);

        let t2 = CoeffTable::new(2).unwrap();
        assert!((t2.coeff(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((t2.coeff(2) + 1.0 / 12.0).abs() < 1e-15);

        let t3 = CoeffTable::new(3).unwrap();
        assert!((t3.coeff(1) - 3.0 / 4.0).abs() < 1e-15);
        assert!((t3.coeff(2) + 3.0 / 20.0).abs() < 1e-15);
        assert!((t3.coeff(3) - 1.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn order_bounds_rejected() {
        assert!(matches!(
            CoeffTable::new(0),
            Err(Error::OrderOutOfRange { .. })
        ));
        assert!(matches!(
            CoeffTable::new(MAX_ORDER + 1),
            Err(Error::OrderOutOfRange { .. })
        ));
        assert!(CoeffTable::new(MAX_ORDER).is_ok());
    }

    #[test]
    fn antisymmetry_and_sign_pattern() {
        for n in 1..=20 {
            let t = CoeffTable::new(n).unwrap();
            assert_eq!(t.coeff(0), 0.0);
            for k in 1..=n as i64 {
                assert_eq!(t.coeff(-k), -t.coeff(k));
                let signed = (-1.0f64).powi(k as i32 + 1) * t.coeff(k);
                assert!(signed > 0.0, "sign pattern broken at n={n} k={k}");
                if k > 1 {
                    assert!(
                        t.coeff(k).abs() < t.coeff(k - 1).abs(),
                        "magnitudes not decreasing at n={n} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn matches_exact_closed_form() {
        for n in 1..=20 {
            let t = CoeffTable::new(n).unwrap();
            for k in 1..=n {
                let exact = pnk_exact(n, k).to_f64().unwrap();
                let rel = ((t.coeff(k as i64) - exact) / exact).abs();
                assert!(rel <= 1e-14, "n={n} k={k} rel={rel:.3e}");
            }
        }
    }

    #[test]
    fn moment_sums() {
        let t5 = CoeffTable::new(5).unwrap();
        assert!((t5.moment_sum(1) - 1.0).abs() <= 1e-12);
        assert_eq!(t5.moment_sum(0), 0.0);
        assert_eq!(t5.moment_sum(4), 0.0);

        for n in 1..=20usize {
            let t = CoeffTable::new(n).unwrap();
            for j in 0..=(2 * n as u32) {
                let expected = if j == 1 { 1.0 } else { 0.0 };
                assert!(
                    (t.moment_sum(j) - expected).abs() <= 1e-12,
                    "moment n={n} j={j}"
                );
            }
        }
    }

    #[test]
    fn harmonic_sums() {
        let t1 = CoeffTable::new(1).unwrap();
        assert!((t1.abs_sum() - 0.5).abs() < 1e-15);
        let t3 = CoeffTable::new(3).unwrap();
        assert!((t3.abs_sum() - 11.0 / 12.0).abs() < 1e-15);
        let t2 = CoeffTable::new(2).unwrap();
        assert!((t2.signed_sum() - 7.0 / 12.0).abs() < 1e-15);

        for n in 1..=20 {
            let t = CoeffTable::new(n).unwrap();
            assert!((t.abs_sum() - harmonic(n) / 2.0).abs() <= 1e-12);
            assert!((t.signed_sum() - (harmonic(2 * n) - harmonic(n))).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_identities_hold_in_rationals() {
        // The identities themselves, checked in exact arithmetic for a few n.
        for n in [1usize, 3, 7, 12] {
            let mut abs = BigRational::zero();
            let mut moment1 = BigRational::zero();
            for k in 1..=n {
                let p = pnk_exact(n, k);
                abs += p.abs();
                moment1 += BigRational::from(BigInt::from(2 * k)) * p;
            }
            assert_eq!(abs, harmonic_exact(n) / BigRational::from(BigInt::from(2)));
            assert_eq!(moment1, BigRational::one());
        }
    }

    #[test]
    fn basis_is_cardinal() {
        for n in [1usize, 2, 5, 9] {
            for k in -(n as i64)..=(n as i64) {
                for j in -(n as i64)..=(n as i64) {
                    let v = lagrange_basis(n, k, j as f64);
                    let expected = if k == j { 1.0 } else { 0.0 };
                    assert_eq!(v, expected, "n={n} k={k} j={j}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn basis_partitions_unity(n in 1usize..12, t in -1.0f64..1.0) {
            let tau = t * n as f64;
            let sum: f64 = (-(n as i64)..=(n as i64))
                .map(|k| lagrange_basis(n, k, tau))
                .sum();
            prop_assert!((sum - 1.0).abs() < 1e-10);
        }

        #[test]
        fn derivative_weights_match_basis_slope(n in 1usize..10) {
            // p_{nk} is the slope of the k-th basis polynomial at tau = 0;
            // check against a central difference of the basis itself.
            let t = CoeffTable::new(n).unwrap();
            let h = 1e-6;
            for k in 1..=n as i64 {
                let fd = (lagrange_basis(n, k, h) - lagrange_basis(n, k, -h)) / (2.0 * h);
                prop_assert!((fd - t.coeff(k)).abs() < 1e-8);
            }
        }
    }
}
