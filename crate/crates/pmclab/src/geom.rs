//! Annular domains and the constants of n-dimensional spherical geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Volume of the unit ball in `R^n`.
///
/// Computed by the two-step recursion `w_n = 2 pi w_{n-2} / n` with
/// `w_1 = 2`, `w_2 = pi`, which avoids the Gamma function entirely.
pub fn unit_ball_volume(n: u32) -> f64 {
    assert!(n >= 1);
    let mut vols = [2.0, std::f64::consts::PI];
    if n <= 2 {
        return vols[(n - 1) as usize];
    }
    for k in 3..=n {
        let next = 2.0 * std::f64::consts::PI * vols[0] / k as f64;
        vols[0] = vols[1];
        vols[1] = next;
    }
    vols[1]
}

/// Surface area of the unit sphere `S^{n-1}` in `R^n`, i.e. `n * w_n`.
pub fn unit_sphere_area(n: u32) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Area of the spherical cap of polar half-angle `theta` on the unit sphere
/// `S^{n-1}`: `|S^{n-2}| * int_0^theta sin(t)^{n-2} dt`.
pub fn unit_cap_area(n: u32, theta: f64) -> f64 {
    assert!(n >= 2);
    let theta = theta.clamp(0.0, std::f64::consts::PI);
    if n == 2 {
        // Two antipodal arc endpoints on the circle: |S^0| = 2.
        return 2.0 * theta;
    }
    if n == 3 {
        return 2.0 * std::f64::consts::PI * (1.0 - theta.cos());
    }
    let s = unit_sphere_area(n - 1);
    s * crate::quad::fixed_gauss(|t| t.sin().powi(n as i32 - 2), 0.0, theta, 32)
}

/// Open annulus `r_a < |x| < r_b` in `R^n`, sitting inside a ball of radius
/// `r_ball` used as the carrier for weak Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialDomain {
    /// Ambient dimension, at least 2.
    pub n: u32,
    /// Inner radius of the annulus.
    pub r_a: f64,
    /// Outer radius of the annulus.
    pub r_b: f64,
    /// Radius of the containing ball, strictly larger than `r_b`.
    pub r_ball: f64,
}

impl RadialDomain {
    pub fn new(n: u32, r_a: f64, r_b: f64, r_ball: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDomain(format!("dimension n = {n} must be >= 2")));
        }
        if !(r_a.is_finite() && r_b.is_finite() && r_ball.is_finite()) {
            return Err(Error::InvalidDomain("radii must be finite".into()));
        }
        if !(0.0 < r_a && r_a < r_b && r_b < r_ball) {
            return Err(Error::InvalidDomain(format!(
                "need 0 < r_a < r_b < r_ball, got ({r_a}, {r_b}, {r_ball})"
            )));
        }
        Ok(Self { n, r_a, r_b, r_ball })
    }

    /// `r^{n-1}`, the density of sphere area against `n w_n`.
    pub fn sphere_weight(&self, r: f64) -> f64 {
        r.powi(self.n as i32 - 1)
    }

    /// Full area of the sphere of radius `r`.
    pub fn sphere_area(&self, r: f64) -> f64 {
        unit_sphere_area(self.n) * self.sphere_weight(r)
    }

    /// Lebesgue volume of the annulus.
    pub fn annulus_volume(&self) -> f64 {
        unit_ball_volume(self.n) * (self.r_b.powi(self.n as i32) - self.r_a.powi(self.n as i32))
    }

    /// Lebesgue volume of the containing ball.
    pub fn ball_volume(&self) -> f64 {
        unit_ball_volume(self.n) * self.r_ball.powi(self.n as i32)
    }

    /// Volume of `ball \ annulus`, the region carrying the constant Dirichlet
    /// extension.
    pub fn complement_volume(&self) -> f64 {
        self.ball_volume() - self.annulus_volume()
    }

    pub fn contains(&self, r: f64) -> bool {
        self.r_a < r && r < self.r_b
    }
}
