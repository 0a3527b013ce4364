//! Signed radial measures on annuli: spherical atoms plus a piecewise radial
//! density, their Hahn split, and the admissibility checkers that gate the
//! variational solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::geom::{unit_cap_area, unit_sphere_area, RadialDomain};
use crate::mollifier;
use crate::profile::RadialProfile;
use crate::quad;

/// Spherical atom: weight per unit sphere-area mass on the sphere of radius
/// `r`, so its total mass is `w * n w_n * r^{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub r: f64,
    pub w: f64,
}

/// One piece of the radial density `h(r)` (mass per unit volume).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityPiece {
    /// Polynomial in `r` on `[r_lo, r_hi]`: `h(r) = sum_k coeffs[k] r^k`.
    /// Must be sign-definite on its interval.
    Poly { r_lo: f64, r_hi: f64, coeffs: Vec<f64> },
    /// Mollified spherical atom: `h(r) = scale * rho_delta(r - center) / r^{n-1}`,
    /// supported on `(center - delta, center + delta)`, total mass
    /// `scale * n w_n` times nothing else — the flux bookkeeping is exact.
    Bump { center: f64, delta: f64, scale: f64 },
}

impl DensityPiece {
    pub fn support(&self) -> (f64, f64) {
        match self {
            DensityPiece::Poly { r_lo, r_hi, .. } => (*r_lo, *r_hi),
            DensityPiece::Bump { center, delta, .. } => (center - delta, center + delta),
        }
    }

    /// Pointwise density value; needs the dimension for the bump weight.
    pub fn eval(&self, r: f64, n: u32) -> f64 {
        let (lo, hi) = self.support();
        if r < lo || r > hi {
            return 0.0;
        }
        match self {
            DensityPiece::Poly { coeffs, .. } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
            }
            DensityPiece::Bump { center, delta, scale } => {
                scale * mollifier::scaled_bump(r - center, *delta) / r.powi(n as i32 - 1)
            }
        }
    }

    /// Signed mass `int_s^t h r^{n-1} dr` over the clipped window, per unit
    /// sphere area (without the `n w_n` factor).
    pub fn mass_between(&self, s: f64, t: f64, n: u32) -> f64 {
        let (lo, hi) = self.support();
        let s = s.max(lo);
        let t = t.min(hi);
        if s >= t {
            return 0.0;
        }
        match self {
            DensityPiece::Poly { coeffs, .. } => {
                // Gauss-Legendre of degree 8 is exact for the stored class.
                quad::fixed_gauss(
                    |r| coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c) * r.powi(n as i32 - 1),
                    s,
                    t,
                    8,
                )
            }
            DensityPiece::Bump { center, delta, scale } => {
                // r^{n-1} cancels: the cumulative bump integral is exact.
                scale
                    * (mollifier::bump_cdf((t - center) / delta)
                        - mollifier::bump_cdf((s - center) / delta))
            }
        }
    }

    /// Sign of the piece: +1 nonnegative, -1 nonpositive.
    fn sign(&self, n: u32) -> Result<i8> {
        match self {
            DensityPiece::Bump { scale, .. } => Ok(if *scale < 0.0 { -1 } else { 1 }),
            DensityPiece::Poly { r_lo, r_hi, .. } => {
                let mut pos = false;
                let mut neg = false;
                for i in 0..=64 {
                    let r = r_lo + (r_hi - r_lo) * i as f64 / 64.0;
                    let v = self.eval(r, n);
                    if v > 1e-14 {
                        pos = true;
                    }
                    if v < -1e-14 {
                        neg = true;
                    }
                }
                if pos && neg {
                    Err(Error::InvalidMeasure(
                        "density piece changes sign; split it at the zero crossing".into(),
                    ))
                } else {
                    Ok(if neg { -1 } else { 1 })
                }
            }
        }
    }
}

/// Signed measure on the annulus: atoms on spheres plus a piecewise density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureSchema", into = "MeasureSchema")]
pub struct RadialMeasure {
    pub domain: RadialDomain,
    atoms: Vec<Atom>,
    density: Vec<DensityPiece>,
}

/// Wire schema for measures (and scenario measure blocks).
#[derive(Serialize, Deserialize)]
struct MeasureSchema {
    n: u32,
    r_a: f64,
    r_b: f64,
    #[serde(rename = "R_B")]
    r_ball: f64,
    atoms: Vec<(f64, f64)>,
    #[serde(default)]
    density: Vec<DensityPiece>,
}

impl TryFrom<MeasureSchema> for RadialMeasure {
    type Error = Error;
    fn try_from(s: MeasureSchema) -> Result<Self> {
        let domain = RadialDomain::new(s.n, s.r_a, s.r_b, s.r_ball)?;
        let atoms = s.atoms.iter().map(|&(r, w)| Atom { r, w }).collect();
        RadialMeasure::new(domain, atoms, s.density)
    }
}

impl From<RadialMeasure> for MeasureSchema {
    fn from(m: RadialMeasure) -> Self {
        MeasureSchema {
            n: m.domain.n,
            r_a: m.domain.r_a,
            r_b: m.domain.r_b,
            r_ball: m.domain.r_ball,
            atoms: m.atoms.iter().map(|a| (a.r, a.w)).collect(),
            density: m.density,
        }
    }
}

impl RadialMeasure {
    pub fn new(domain: RadialDomain, mut atoms: Vec<Atom>, density: Vec<DensityPiece>) -> Result<Self> {
        atoms.sort_by(|a, b| a.r.partial_cmp(&b.r).unwrap());
        for a in &atoms {
            if !(domain.contains(a.r)) {
                return Err(Error::InvalidMeasure(format!(
                    "atom radius {} outside the open annulus ({}, {})",
                    a.r, domain.r_a, domain.r_b
                )));
            }
            if !a.w.is_finite() {
                return Err(Error::InvalidMeasure("atom weight must be finite".into()));
            }
        }
        if atoms.windows(2).any(|w| w[0].r == w[1].r) {
            return Err(Error::InvalidMeasure("atom radii must be pairwise distinct".into()));
        }
        for p in &density {
            let (lo, hi) = p.support();
            if !(lo < hi) || lo < domain.r_a - 1e-12 || hi > domain.r_b + 1e-12 {
                return Err(Error::InvalidMeasure(format!(
                    "density piece support ({lo}, {hi}) must sit inside the annulus"
                )));
            }
            p.sign(domain.n)?;
        }
        Ok(Self { domain, atoms, density })
    }

    pub fn zero(domain: RadialDomain) -> Self {
        Self { domain, atoms: Vec::new(), density: Vec::new() }
    }

    pub fn from_atoms(domain: RadialDomain, atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(domain, atoms.iter().map(|&(r, w)| Atom { r, w }).collect(), Vec::new())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> &[DensityPiece] {
        &self.density
    }

    pub fn is_atoms_only(&self) -> bool {
        self.density.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.density.is_empty()
    }

    /// Total variation `|mu|(annulus)`.
    pub fn total_variation(&self) -> f64 {
        let n = self.domain.n;
        let mut acc: f64 = self.atoms.iter().map(|a| a.w.abs() * self.domain.sphere_weight(a.r)).sum();
        for p in &self.density {
            let (lo, hi) = p.support();
            acc += p.mass_between(lo, hi, n).abs();
        }
        unit_sphere_area(n) * acc
    }

    /// Density mass per unit sphere area over `(s, t)`.
    pub fn density_mass_between(&self, s: f64, t: f64) -> f64 {
        self.density.iter().map(|p| p.mass_between(s, t, self.domain.n)).sum()
    }

    /// Pointwise density value `h(r)`.
    pub fn density_at(&self, r: f64) -> f64 {
        self.density.iter().map(|p| p.eval(r, self.domain.n)).sum()
    }
}

/// Hahn split of a radial measure: indicator 1 exactly on negative-weight
/// atoms and negative-density pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HahnSplit {
    /// One indicator per atom, in atom order.
    pub atom_negative: Vec<bool>,
    /// One indicator per density piece, in piece order.
    pub density_negative: Vec<bool>,
}

impl HahnSplit {
    /// The representative selector at an atom: `lambda = 1` on the negative
    /// set picks `u^+`, `lambda = 0` elsewhere picks `u^-`.
    pub fn lambda_at_atom(&self, k: usize) -> f64 {
        if self.atom_negative[k] {
            1.0
        } else {
            0.0
        }
    }
}

/// Computes the Hahn split `lambda_mu`.
pub fn hahn_lambda(m: &RadialMeasure) -> HahnSplit {
    HahnSplit {
        atom_negative: m.atoms().iter().map(|a| a.w < 0.0).collect(),
        density_negative: m
            .density()
            .iter()
            .map(|p| p.sign(m.domain.n).map(|s| s < 0).unwrap_or(false))
            .collect(),
    }
}

/// One radial interval with endpoint open/closed flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

/// Finite union of radial intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSet {
    pub intervals: Vec<RadialInterval>,
}

impl RadialSet {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self {
            intervals: vec![RadialInterval { lo, hi, lo_closed: false, hi_closed: false }],
        }
    }

    pub fn closed_interval(lo: f64, hi: f64) -> Self {
        Self {
            intervals: vec![RadialInterval { lo, hi, lo_closed: true, hi_closed: true }],
        }
    }
}

/// Evaluates `mu(E^1)` for a radial set `E`. Atoms strictly inside an
/// interval contribute in full; an atom sitting on an endpoint contributes
/// zero regardless of the closed/open flag, because the set of Lebesgue
/// density points excludes the reduced boundary.
pub fn measure_of(m: &RadialMeasure, set: &RadialSet) -> Result<f64> {
    let d = &m.domain;
    let mut iv = set.intervals.clone();
    iv.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    for w in iv.windows(2) {
        if w[0].hi > w[1].lo {
            return Err(Error::InvalidArgument("set intervals must be disjoint".into()));
        }
    }
    let mut acc = 0.0;
    for interval in &iv {
        let (lo, hi) = (interval.lo, interval.hi);
        if !(lo < hi) || lo < d.r_a - 1e-12 || hi > d.r_b + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "interval ({lo}, {hi}) outside the annulus [{}, {}]",
                d.r_a, d.r_b
            )));
        }
        for a in m.atoms() {
            if lo < a.r && a.r < hi {
                acc += a.w * d.sphere_weight(a.r);
            }
        }
        acc += m.density_mass_between(lo, hi);
    }
    Ok(unit_sphere_area(d.n) * acc)
}

/// Report of the non-extremality estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonExtremalityReport {
    /// Certified lower bound for the best constant `L` over all test sets:
    /// the supremum of `|mu(E^1)| / Per(E)` over the radial family only.
    pub l_hat: f64,
    /// Inner and outer radius of the attaining annulus.
    pub attained_by: (f64, f64),
    /// Closed form for a single atom, `|w| r^{n-1} / (r_a^{n-1} + r^{n-1})`.
    pub analytic_single_atom: Option<f64>,
    pub resolution: usize,
}

/// Estimates the non-extremality constant over the family of annuli
/// `B_t \ closed(B_s)` with endpoints on a refinement grid enriched by the
/// atom radii and their one-step neighbors. Endpoint atoms are included as
/// one-sided limits of nearby sets, so atom-hugging suprema are attained
/// exactly. The result is a certified lower bound for the true constant.
pub fn nonextremality_ratio(m: &RadialMeasure, resolution: usize) -> Result<NonExtremalityReport> {
    if resolution < m.atoms().len() + 2 {
        return Err(Error::InvalidArgument(format!(
            "resolution {} must be at least atoms + 2 = {}",
            resolution,
            m.atoms().len() + 2
        )));
    }
    let d = &m.domain;
    let step = (d.r_b - d.r_a) / resolution as f64;
    let mut grid: Vec<f64> = (0..=resolution).map(|i| d.r_a + i as f64 * step).collect();
    for a in m.atoms() {
        grid.push(a.r);
        if a.r - step > d.r_a {
            grid.push(a.r - step);
        }
        if a.r + step < d.r_b {
            grid.push(a.r + step);
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let g = grid.len();

    // Prefix data: density mass from r_a to each node, atom prefix sums, and
    // the atom index sitting exactly on a node (if any).
    let mut dens_prefix = vec![0.0; g];
    for i in 1..g {
        dens_prefix[i] = dens_prefix[i - 1] + m.density_mass_between(grid[i - 1], grid[i]);
    }
    let atom_mass: Vec<f64> = m.atoms().iter().map(|a| a.w * d.sphere_weight(a.r)).collect();
    let mut atom_at_node = vec![None; g];
    let mut atom_prefix = vec![0.0; g]; // mass of atoms with radius < grid[i]
    {
        let mut acc = 0.0;
        let mut k = 0;
        for i in 0..g {
            while k < m.atoms().len() && m.atoms()[k].r < grid[i] - 1e-14 {
                acc += atom_mass[k];
                k += 1;
            }
            atom_prefix[i] = acc;
            if k < m.atoms().len() && (m.atoms()[k].r - grid[i]).abs() <= 1e-14 {
                atom_at_node[i] = Some(k);
            }
        }
    }
    let weights: Vec<f64> = grid.iter().map(|&r| d.sphere_weight(r)).collect();

    // Row-parallel scan over inner radii: for a fixed inner endpoint the best
    // outer endpoint is found in one pass.
    let rows = exec::map_indexed(g - 1, |i| {
        let se = atom_at_node[i].map_or(0.0, |k| atom_mass[k]);
        let mut best = 0.0f64;
        let mut best_j = i + 1;
        for j in (i + 1)..g {
            let strict = atom_prefix[j] - atom_prefix[i] - se + dens_prefix[j] - dens_prefix[i];
            // Endpoint atoms enter as limits of slightly larger sets.
            let te = atom_at_node[j].map_or(0.0, |k| atom_mass[k]);
            let numer = strict
                .abs()
                .max((strict + se).abs())
                .max((strict + te).abs())
                .max((strict + se + te).abs());
            let ratio = numer / (weights[i] + weights[j]);
            if ratio > best {
                best = ratio;
                best_j = j;
            }
        }
        (best, best_j)
    });
    let (i, (l_hat, j)) = rows
        .into_iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap())
        .unwrap_or((0, (0.0, 1.min(g - 1))));

    let analytic = if m.atoms().len() == 1 && m.is_atoms_only() {
        let a = m.atoms()[0];
        Some(a.w.abs() * d.sphere_weight(a.r) / (d.sphere_weight(d.r_a) + d.sphere_weight(a.r)))
    } else {
        None
    };
    Ok(NonExtremalityReport {
        l_hat,
        attained_by: (grid[i], grid[j]),
        analytic_single_atom: analytic,
        resolution,
    })
}

/// Exact supremum of `|mu(E^1)| / Per(E)` over the radial test family for an
/// atoms-only measure: by the mediant inequality single annuli dominate
/// unions, and for a contiguous run of atoms the optimal annulus hugs the
/// run, with endpoints on the neighboring atom spheres (or the inner domain
/// boundary). Measures with a density part fall back to the grid estimator
/// at a fixed high resolution.
pub fn radial_l_constant(m: &RadialMeasure) -> Result<f64> {
    if m.is_zero() {
        return Ok(0.0);
    }
    if !m.is_atoms_only() {
        return Ok(nonextremality_ratio(m, 2048)?.l_hat);
    }
    let d = m.domain;
    let k = m.atoms().len();
    let mass: Vec<f64> = m.atoms().iter().map(|a| a.w * d.sphere_weight(a.r)).collect();
    let mut best = 0.0f64;
    for i in 0..k {
        let s_weight = if i == 0 {
            d.sphere_weight(d.r_a)
        } else {
            d.sphere_weight(m.atoms()[i - 1].r)
        };
        let mut num = 0.0;
        for j in i..k {
            num += mass[j];
            let t_weight = d.sphere_weight(m.atoms()[j].r);
            best = best.max(num.abs() / (s_weight + t_weight));
        }
    }
    Ok(best)
}

/// Report of the ball-condition check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallCheckReport {
    /// Worst observed `|mu(B_r(x))| / (n w_n r^{n-1})`; above 1 certifies a
    /// violation of the necessary condition.
    pub worst_ratio: f64,
    /// Ball radius attaining the worst ratio.
    pub worst_ball_radius: f64,
    /// Distance of the sampled centers from the origin (the mid-sphere).
    pub center_radius: f64,
    pub violated: bool,
}

/// Checks `|mu(B_r(x))| <= n w_n r^{n-1}` on balls centered on the annulus
/// mid-sphere. By radial symmetry of the measure every center on the sphere
/// is equivalent, so the sampling runs over ball radii only; `samples` is the
/// number of radii tried.
pub fn ball_condition_check(m: &RadialMeasure, samples: usize) -> Result<BallCheckReport> {
    if samples < 1 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let d = m.domain;
    let n = d.n;
    let center = 0.5 * (d.r_a + d.r_b);
    let r_max = 0.5 * (d.r_b - d.r_a) * (1.0 - 1e-12);

    let ratios = exec::map_indexed(samples, |k| {
        let r = r_max * (k + 1) as f64 / samples as f64;
        // Sphere of radius s meets B_r(x): cap of polar angle theta with
        // cos(theta) = (s^2 + |x|^2 - r^2) / (2 s |x|).
        let cap_mass = |s: f64, w: f64| -> f64 {
            let cosv = (s * s + center * center - r * r) / (2.0 * s * center);
            if cosv >= 1.0 {
                0.0
            } else if cosv <= -1.0 {
                w * d.sphere_weight(s) * unit_sphere_area(n)
            } else {
                w * d.sphere_weight(s) * unit_cap_area(n, cosv.acos())
            }
        };
        let mut mass = 0.0;
        for a in m.atoms() {
            mass += cap_mass(a.r, a.w);
        }
        for p in m.density() {
            let (lo, hi) = p.support();
            let s_lo = lo.max(center - r);
            let s_hi = hi.min(center + r);
            if s_lo < s_hi {
                mass += quad::adaptive_simpson(
                    |s| cap_mass(s, p.eval(s, n)),
                    s_lo,
                    s_hi,
                    1e-11,
                );
            }
        }
        mass.abs() / (unit_sphere_area(n) * d.sphere_weight(r))
    });
    let (k, worst) = ratios
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    Ok(BallCheckReport {
        worst_ratio: worst,
        worst_ball_radius: r_max * (k + 1) as f64 / samples as f64,
        center_radius: center,
        violated: worst > 1.0,
    })
}

/// Report of the singular-set density bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityBoundReport {
    /// Constant in `H^{n-1}(Gamma cap B_rho(x)) <= Lambda rho^{n-1}`.
    pub lambda: f64,
    /// Radius threshold below which the bound is certified.
    pub rho_bar: f64,
}

/// Analytic density bound for the singular set `Gamma` = union of the atom
/// spheres: balls of radius below half the minimal gap meet at most one
/// sphere, and a single sphere obeys the bound with `Lambda = n w_n`.
pub fn density_bound_check(m: &RadialMeasure) -> DensityBoundReport {
    let d = m.domain;
    if m.atoms().is_empty() {
        return DensityBoundReport { lambda: 0.0, rho_bar: 0.5 * (d.r_b - d.r_a) };
    }
    let mut gaps = Vec::new();
    gaps.push(m.atoms()[0].r - d.r_a);
    gaps.push(d.r_b - m.atoms()[m.atoms().len() - 1].r);
    for w in m.atoms().windows(2) {
        gaps.push(w[1].r - w[0].r);
    }
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    DensityBoundReport { lambda: unit_sphere_area(d.n), rho_bar: 0.5 * min_gap }
}

/// Action of the measure on a profile with the given split:
/// `n w_n * ( sum_atoms w r^{n-1} u^{lambda}(r) + int h u r^{n-1} dr )`,
/// picking the lower trace on positive atoms and the upper trace on negative
/// ones when the profile jumps there.
pub fn measure_action(m: &RadialMeasure, u: &RadialProfile, split: &HahnSplit) -> f64 {
    let d = m.domain;
    let mut acc = 0.0;
    for (k, a) in m.atoms().iter().enumerate() {
        let val = match u.jumps().iter().find(|j| (j.r - a.r).abs() < 1e-12) {
            Some(j) => {
                if split.atom_negative[k] {
                    j.upper
                } else {
                    j.lower
                }
            }
            None => u.eval(a.r),
        };
        acc += a.w * d.sphere_weight(a.r) * val;
    }
    // Absolutely continuous part: the representative choice is immaterial.
    for p in m.density() {
        let (lo, hi) = p.support();
        let grid = u.grid();
        let mut cuts: Vec<f64> = vec![lo];
        for &g in grid {
            if g > lo && g < hi {
                cuts.push(g);
            }
        }
        cuts.push(hi);
        for w in cuts.windows(2) {
            acc += quad::fixed_gauss(
                |r| p.eval(r, d.n) * u.eval(r) * d.sphere_weight(r),
                w[0],
                w[1],
                16,
            );
        }
    }
    unit_sphere_area(d.n) * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn domain() -> RadialDomain {
        RadialDomain::new(2, 1.0, 3.0, 4.0).unwrap()
    }

    #[test]
    fn hahn_split_examples() {
        let wide = RadialDomain::new(2, 1.0, 4.0, 5.0).unwrap();
        let m = RadialMeasure::from_atoms(wide, &[(2.0, 0.8), (3.0, 1.0 / 3.0)]).unwrap();
        let s = hahn_lambda(&m);
        assert_eq!(s.atom_negative, vec![false, false]);

        let m = RadialMeasure::from_atoms(domain(), &[(2.0, -0.5)]).unwrap();
        assert_eq!(hahn_lambda(&m).atom_negative, vec![true]);

        let m = RadialMeasure::from_atoms(domain(), &[(2.0, 0.8), (2.5, -0.1)]).unwrap();
        assert_eq!(hahn_lambda(&m).atom_negative, vec![false, true]);
    }

    #[test]
    fn measure_of_examples() {
        let m = RadialMeasure::from_atoms(domain(), &[(2.0, 0.8)]).unwrap();
        // Sphere mass 2 pi * 0.8 * 2 = 3.2 pi on a covering interval.
        let v = measure_of(&m, &RadialSet::interval(1.5, 2.5)).unwrap();
        assert_relative_eq!(v, 3.2 * PI, max_relative = 1e-14);
        // Atom outside the interval.
        let v = measure_of(&m, &RadialSet::interval(2.5, 3.0)).unwrap();
        assert_eq!(v, 0.0);
        // Atom exactly on the closed endpoint of (1, 2] still contributes
        // zero: density points exclude the reduced boundary.
        let set = RadialSet {
            intervals: vec![RadialInterval { lo: 1.0, hi: 2.0, lo_closed: false, hi_closed: true }],
        };
        let v = measure_of(&m, &set).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn measure_of_is_additive() {
        let m = RadialMeasure::new(
            domain(),
            vec![Atom { r: 2.0, w: 0.8 }],
            vec![DensityPiece::Poly { r_lo: 1.2, r_hi: 2.8, coeffs: vec![0.3] }],
        )
        .unwrap();
        let whole = measure_of(&m, &RadialSet::interval(1.1, 2.9)).unwrap();
        let left = measure_of(&m, &RadialSet::interval(1.1, 2.2)).unwrap();
        let right = measure_of(&m, &RadialSet::interval(2.2, 2.9)).unwrap();
        assert_relative_eq!(whole, left + right, max_relative = 1e-12);
    }

    #[test]
    fn nonextremality_single_atom_closed_form() {
        let m = RadialMeasure::from_atoms(domain(), &[(2.0, 0.8)]).unwrap();
        let rep = nonextremality_ratio(&m, 64).unwrap();
        assert_relative_eq!(rep.l_hat, 8.0 / 15.0, max_relative = 1e-12);
        assert_relative_eq!(rep.analytic_single_atom.unwrap(), 8.0 / 15.0, max_relative = 1e-15);
        // Attained by the annulus hugging the atom from inside the domain.
        assert_abs_diff_eq!(rep.attained_by.0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.attained_by.1, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn nonextremality_zero_measure() {
        let m = RadialMeasure::zero(domain());
        assert_eq!(nonextremality_ratio(&m, 16).unwrap().l_hat, 0.0);
    }

    #[test]
    fn nonextremality_failure_detected() {
        let m = RadialMeasure::from_atoms(domain(), &[(2.0, 1.5)]).unwrap();
        let rep = nonextremality_ratio(&m, 64).unwrap();
        assert_relative_eq!(rep.l_hat, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn ball_check_zero_measure() {
        let m = RadialMeasure::zero(domain());
        let rep = ball_condition_check(&m, 8).unwrap();
        assert_eq!(rep.worst_ratio, 0.0);
        assert!(!rep.violated);
    }

    #[test]
    fn ball_check_against_arc_oracle() {
        // n = 2 closed form: the circle of radius s cut by B_r(x) with
        // |x| = 2 leaves the arc 2 s acos((s^2 + 4 - r^2) / (4 s)).
        let m = RadialMeasure::from_atoms(domain(), &[(2.0, 0.8)]).unwrap();
        let rep = ball_condition_check(&m, 40).unwrap();
        let oracle = |r: f64| {
            let cosv: f64 = (4.0 + 4.0 - r * r) / 8.0;
            0.8 * 2.0 * 2.0 * cosv.acos() / (2.0 * PI * r)
        };
        let mut worst: f64 = 0.0;
        for k in 1..=40 {
            let r = (1.0 - 1e-12) * k as f64 / 40.0;
            worst = worst.max(oracle(r));
        }
        assert_relative_eq!(rep.worst_ratio, worst, max_relative = 1e-9);
        assert!(rep.worst_ratio <= 1.0);
        assert!(!rep.violated);
    }

    #[test]
    fn ball_check_flags_large_atom() {
        // For n = 2 the small-ball limit of the ratio is w / pi, so the check
        // can only trip once w exceeds pi; w = 4 violates near the largest
        // admissible ball.
        let m = RadialMeasure::from_atoms(domain(), &[(2.0, 4.0)]).unwrap();
        let rep = ball_condition_check(&m, 64).unwrap();
        assert!(rep.violated, "worst ratio {} should exceed 1", rep.worst_ratio);
    }

    #[test]
    fn density_bound_reports() {
        let m = RadialMeasure::from_atoms(domain(), &[(2.0, 0.8)]).unwrap();
        let rep = density_bound_check(&m);
        assert_relative_eq!(rep.lambda, 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(rep.rho_bar, 0.5, max_relative = 1e-15);

        let empty = density_bound_check(&RadialMeasure::zero(domain()));
        assert_eq!(empty.lambda, 0.0);

        let two = RadialMeasure::from_atoms(domain(), &[(1.8, 0.5), (2.2, 0.5)]).unwrap();
        let rep = density_bound_check(&two);
        assert_relative_eq!(rep.rho_bar, 0.2, max_relative = 1e-12);
        assert_relative_eq!(rep.lambda, 2.0 * PI, max_relative = 1e-15);
    }

    #[test]
    fn measure_json_schema() {
        let m = RadialMeasure::from_atoms(domain(), &[(2.0, 0.8)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"R_B\":4.0"), "schema uses R_B: {s}");
        let back: RadialMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}
