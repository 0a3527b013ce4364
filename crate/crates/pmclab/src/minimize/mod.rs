//! Discrete minimization of the capillary functional by a first-order
//! primal-dual saddle-point iteration.
//!
//! Two carriers are provided: a radial grid with explicit jump slots at the
//! atom radii ([`radial::RadialSaddleProblem`]) and a 2D Cartesian grid for
//! absolutely continuous densities ([`cartesian::CartesianSaddleProblem`]).
//!
//! Both run the same scheme: a dual ascent step followed by Euclidean
//! projection of the per-cell pair `(w0, w)` onto the unit ball (and of the
//! scalar jump/trace duals onto `[-1, 1]`), a primal descent step on the
//! linear-plus-measure part, and over-relaxation on the primal. Step sizes
//! obey `sigma tau |K|^2 <= 1` with the operator norm estimated by power
//! iteration.

pub mod cartesian;
pub mod radial;

use serde::{Deserialize, Serialize};

pub use cartesian::CartesianSaddleProblem;
pub use radial::{MinimizeSolution, RadialSaddleProblem};

/// Iteration parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MinimizeParams {
    /// Stop once the primal-dual gap falls below this value (absolute, in
    /// the same units as the energy).
    pub tol_gap: f64,
    pub max_iter: usize,
    /// Ratio `sigma / tau` between the dual and primal step sizes.
    pub step_ratio: f64,
    /// Gap evaluation interval, in iterations.
    pub check_every: usize,
}

impl Default for MinimizeParams {
    fn default() -> Self {
        Self { tol_gap: 1e-8, max_iter: 2_000_000, step_ratio: 1.0, check_every: 256 }
    }
}

/// Carrier description embedded in reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridInfo {
    Radial { h: f64, cells: usize, atoms: usize },
    Cartesian { h: f64, nx: usize, ny: usize },
}

/// Convergence report of one minimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub energy: f64,
    pub gap: f64,
    pub iters: usize,
    #[serde(rename = "L_hat")]
    pub l_hat: f64,
    pub grid: GridInfo,
    /// Best feasible dual objective found (a lower bound for the minimum
    /// when `gap_certified` is true).
    pub dual_value: f64,
    /// Whether the gap is certified by an exactly feasible dual point.
    pub gap_certified: bool,
    /// Smallest observed slack in the coercivity lower bound
    /// `energy >= (1 - L_hat) TV(u0) - trace(phi)` over all checked iterates.
    pub coercivity_margin_min: f64,
}

/// Projects the pair `(w0, w)` onto the closed unit ball of the plane.
#[inline]
pub(crate) fn project_ball2(w0: f64, w: f64) -> (f64, f64) {
    let norm = (w0 * w0 + w * w).sqrt();
    if norm > 1.0 {
        (w0 / norm, w / norm)
    } else {
        (w0, w)
    }
}

#[inline]
pub(crate) fn project_ball3(w0: f64, wx: f64, wy: f64) -> (f64, f64, f64) {
    let norm = (w0 * w0 + wx * wx + wy * wy).sqrt();
    if norm > 1.0 {
        (w0 / norm, wx / norm, wy / norm)
    } else {
        (w0, wx, wy)
    }
}

/// Recovers the field component from a dual pair: `t = w / max(w0, eps)`,
/// then `T = t / sqrt(1 + t^2)`, which inverts `(w0, w) = (sqrt(1-T^2), T)`
/// at optimality. The floor keeps the division finite where `|T| -> 1`.
#[inline]
pub(crate) fn recover_field(w0: f64, w: f64) -> f64 {
    const EPS0: f64 = 1e-14;
    let t = w / w0.max(EPS0);
    t / (1.0 + t * t).sqrt()
}

/// Power-iteration estimate of the operator norm of `K`, given `x -> Kx`
/// and `y -> K^T y`. Deterministic start vector.
pub(crate) fn operator_norm(
    x_len: usize,
    y_len: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    apply_transpose: impl Fn(&[f64], &mut [f64]),
) -> f64 {
    let mut x: Vec<f64> = (0..x_len)
        .map(|i| 1.0 + 0.37 * ((i.wrapping_mul(2654435761)) % 97) as f64 / 97.0)
        .collect();
    let mut y = vec![0.0; y_len];
    let mut norm: f64 = 1.0;
    for _ in 0..20 {
        let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nx == 0.0 {
            return 1.0;
        }
        for a in x.iter_mut() {
            *a /= nx;
        }
        apply(&x, &mut y);
        norm = y.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
        apply_transpose(&y, &mut x);
    }
    norm.max(1e-12)
}
