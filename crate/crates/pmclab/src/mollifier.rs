//! The standard symmetric mollifier and its cumulative integral.

use std::sync::OnceLock;

use crate::quad;

/// Unnormalized bump `exp(-1/(1-t^2))` on `(-1, 1)`, zero outside.
fn raw_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn normalization() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| quad::fixed_gauss(raw_bump, -1.0, 1.0, 200))
}

/// Normalized standard mollifier: even, supported on `(-1, 1)`, unit mass.
pub fn bump(t: f64) -> f64 {
    raw_bump(t) / normalization()
}

/// Derivative of the normalized bump.
pub fn bump_derivative(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - t * t;
    bump(t) * (-2.0 * t / (q * q))
}

const TABLE_SIZE: usize = 4096;

/// Tabulated cumulative integral of the bump on a uniform grid over `[-1, 1]`.
fn cdf_table() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(TABLE_SIZE + 1);
        table.push(0.0);
        let h = 2.0 / TABLE_SIZE as f64;
        let mut acc = 0.0;
        for i in 0..TABLE_SIZE {
            let a = -1.0 + i as f64 * h;
            acc += quad::fixed_gauss(bump, a, a + h, 16);
            table.push(acc);
        }
        // Pin the endpoint to exactly 1 to kill residual quadrature noise.
        let total = acc;
        for v in table.iter_mut() {
            *v /= total;
        }
        table
    })
}

/// Cumulative integral `Phi(t) = int_{-1}^t bump`. Monotone from 0 to 1 with
/// `Phi(0) = 1/2` by symmetry.
pub fn bump_cdf(t: f64) -> f64 {
    if t <= -1.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let table = cdf_table();
    let h = 2.0 / TABLE_SIZE as f64;
    let pos = (t + 1.0) / h;
    let i = (pos.floor() as usize).min(TABLE_SIZE - 1);
    let a = -1.0 + i as f64 * h;
    // Refine within the cell by quadrature against the table anchor.
    table[i] + quad::fixed_gauss(bump, a, t, 16)
}

/// Inverse of [`bump_cdf`] by monotone bisection: the shift `tau` with
/// `Phi(tau) = lambda`.
pub fn bump_cdf_inverse(lambda: f64) -> f64 {
    assert!((0.0..=1.0).contains(&lambda), "lambda must lie in [0,1]");
    if lambda == 0.0 {
        return -1.0;
    }
    if lambda == 1.0 {
        return 1.0;
    }
    let mut lo = -1.0;
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bump_cdf(mid) < lambda {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Mollification kernel scaled to width `delta`: `bump(x/delta)/delta`.
pub fn scaled_bump(x: f64, delta: f64) -> f64 {
    bump(x / delta) / delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn bump_has_unit_mass_and_symmetry() {
        let mass = quad::fixed_gauss(bump, -1.0, 1.0, 200);
        assert_relative_eq!(mass, 1.0, max_relative = 1e-13);
        assert_abs_diff_eq!(bump(0.3), bump(-0.3), epsilon = 1e-15);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.2), 0.0);
    }

    #[test]
    fn cdf_is_monotone_and_symmetric() {
        assert_abs_diff_eq!(bump_cdf(0.0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(bump_cdf(-1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bump_cdf(1.0), 1.0, epsilon = 1e-15);
        let mut prev = -0.1;
        for i in 0..=40 {
            let t = -1.0 + 2.0 * i as f64 / 40.0;
            let v = bump_cdf(t);
            assert!(v >= prev);
            prev = v;
        }
        assert_abs_diff_eq!(bump_cdf(0.4) + bump_cdf(-0.4), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cdf_inverse_round_trips() {
        for &lam in &[0.0, 0.1, 1.0 / 3.0, 0.5, 0.77, 1.0] {
            let tau = bump_cdf_inverse(lam);
            assert_abs_diff_eq!(bump_cdf(tau), lam, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(bump_cdf_inverse(0.5), 0.0, epsilon = 1e-12);
    }
}
