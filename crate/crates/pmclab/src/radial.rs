//! Closed-form radial solutions on annuli for atom measures: per-interval
//! flux coefficients, jump classification windows, profile quadrature,
//! Dirichlet shooting and the vertical-translation family.
//!
//! The radial field has the form `T(x) = gamma_i x / |x|^n` on each interval
//! between atom spheres; crossing the atom at radius `r_k` changes the flux
//! coefficient by `mu_k r_k^{n-1}`, and a vertical jump of the solution at
//! `r_k` forces the outer-side flux to `sign(mu_k) r_k^{n-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{unit_sphere_area, RadialDomain};
use crate::measure::{hahn_lambda, measure_action, nonextremality_ratio, RadialMeasure};
use crate::profile::RadialProfile;
use crate::quad;

/// How the flux recursion is anchored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    /// Prescribe the flux coefficient on one interval.
    Value { interval: usize, gamma: f64 },
    /// Pin the interval just outside atom `k` to `sign(mu_k) r_k^{n-1}`,
    /// the value forced by a vertical jump at that sphere.
    JumpRule { atom: usize },
}

/// Propagates flux coefficients across the atoms of an atoms-only measure:
/// `gamma_{i+1} = gamma_i + mu_{i+1} r_{i+1}^{n-1}`, anchored as requested.
/// Fails when a propagated coefficient exceeds the sub-unit bound
/// `|gamma| <= r^{n-1}` somewhere on an interval interior.
pub fn field_coefficients(m: &RadialMeasure, anchor: Anchor) -> Result<Vec<f64>> {
    if !m.is_atoms_only() {
        return Err(Error::InvalidArgument(
            "field coefficients require an atoms-only measure".into(),
        ));
    }
    let d = m.domain;
    let k = m.atoms().len();
    let steps: Vec<f64> = m.atoms().iter().map(|a| a.w * d.sphere_weight(a.r)).collect();
    let (idx, value) = match anchor {
        Anchor::Value { interval, gamma } => {
            if interval > k {
                return Err(Error::InvalidArgument(format!(
                    "interval index {interval} out of range 0..={k}"
                )));
            }
            (interval, gamma)
        }
        Anchor::JumpRule { atom } => {
            if atom >= k {
                return Err(Error::InvalidArgument(format!("atom index {atom} out of range")));
            }
            let a = m.atoms()[atom];
            if a.w == 0.0 {
                return Err(Error::InvalidArgument("jump rule needs a nonzero atom".into()));
            }
            (atom + 1, a.w.signum() * d.sphere_weight(a.r))
        }
    };
    let mut gammas = vec![0.0; k + 1];
    gammas[idx] = value;
    for i in (0..idx).rev() {
        gammas[i] = gammas[i + 1] - steps[i];
    }
    for i in idx..k {
        gammas[i + 1] = gammas[i] + steps[i];
    }
    // Feasibility: each interval needs |gamma| <= (left endpoint)^{n-1},
    // equality permitted only next to a jump sphere.
    for (i, &g) in gammas.iter().enumerate() {
        let r_lo = if i == 0 { d.r_a } else { m.atoms()[i - 1].r };
        let bound = d.sphere_weight(r_lo);
        if g.abs() > bound * (1.0 + 1e-12) {
            return Err(Error::Infeasible(format!(
                "flux {g} on interval {i} violates |gamma| <= {bound} at r = {r_lo}"
            )));
        }
    }
    Ok(gammas)
}

/// Outcome of the jump-window classification for a single atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpRegime {
    JumpUp,
    JumpDown,
    ContinuousOnly,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpClassification {
    pub regime: JumpRegime,
    /// The window `[1 - (r_in/r_atom)^{n-1}, 1 + (r_in/r_atom)^{n-1}]` on `|mu|`.
    pub window: (f64, f64),
    /// `|mu|` sits exactly on the lower window edge (classified continuous).
    pub at_lower_edge: bool,
    /// `|mu|` sits exactly on the upper window edge (classified infeasible).
    pub at_upper_edge: bool,
}

/// Classifies an atom of weight `mu_w` on the sphere `r_atom`, with the next
/// smooth interval reaching down to `r_inner`. Below the window only
/// continuous crossings exist; above it no solution exists at all; inside it
/// the sign of the weight fixes the jump direction. Window-edge ties break
/// to the strict side: the lower edge stays continuous, the upper edge is
/// already infeasible.
pub fn jump_classification(n: u32, r_inner: f64, r_atom: f64, mu_w: f64) -> Result<JumpClassification> {
    if !(0.0 < r_inner && r_inner < r_atom) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < r_inner < r_atom, got ({r_inner}, {r_atom})"
        )));
    }
    let ratio = (r_inner / r_atom).powi(n as i32 - 1);
    let lower = 1.0 - ratio;
    let upper = 1.0 + ratio;
    let a = mu_w.abs();
    let tol = 1e-12 * upper;
    let at_lower = (a - lower).abs() <= tol;
    let at_upper = (a - upper).abs() <= tol;
    let regime = if at_upper || a > upper {
        JumpRegime::Infeasible
    } else if at_lower || a < lower {
        JumpRegime::ContinuousOnly
    } else if mu_w > 0.0 {
        JumpRegime::JumpUp
    } else {
        JumpRegime::JumpDown
    };
    Ok(JumpClassification { regime, window: (lower, upper), at_lower_edge: at_lower, at_upper_edge: at_upper })
}

/// Increment `int_{r_lo}^{r_hi} gamma / sqrt(r^{2n-2} - gamma^2) dr`.
///
/// The substitution `s = sqrt(r^{2n-2} - gamma^2)` absorbs the inverse
/// square-root endpoint singularity exactly; the transformed integrand
/// `gamma / ((n-1) r(s)^{2n-3})` is smooth up to `s = 0`.
pub fn increment(gamma: f64, n: u32, r_lo: f64, r_hi: f64) -> Result<f64> {
    check_flux(gamma, n, r_lo, r_hi)?;
    if gamma == 0.0 || r_lo == r_hi {
        return Ok(0.0);
    }
    let p = 2.0 * (n as f64 - 1.0);
    let g2 = gamma * gamma;
    let s_lo = (r_lo.powf(p) - g2).max(0.0).sqrt();
    let s_hi = (r_hi.powf(p) - g2).max(0.0).sqrt();
    let integrand = |s: f64| {
        let r_pow = s * s + g2; // r^{2n-2}
        gamma / ((n as f64 - 1.0) * r_pow.powf((p - 1.0) / p))
    };
    Ok(quad::adaptive_simpson(integrand, s_lo, s_hi, 1e-13))
}

/// Graph-area integral `int_{r_lo}^{r_hi} r^{2n-2} / sqrt(r^{2n-2} - gamma^2) dr`
/// of the solution piece, per unit sphere area. Same substitution as
/// [`increment`].
pub fn area_integral(gamma: f64, n: u32, r_lo: f64, r_hi: f64) -> Result<f64> {
    check_flux(gamma, n, r_lo, r_hi)?;
    if r_lo == r_hi {
        return Ok(0.0);
    }
    if gamma == 0.0 {
        return Ok(quad::fixed_gauss(|r| r.powi(n as i32 - 1), r_lo, r_hi, 32));
    }
    let p = 2.0 * (n as f64 - 1.0);
    let g2 = gamma * gamma;
    let s_lo = (r_lo.powf(p) - g2).max(0.0).sqrt();
    let s_hi = (r_hi.powf(p) - g2).max(0.0).sqrt();
    // dr = s ds / ((n-1) r^{2n-3}); integrand r^{2n-2}/s * dr = r/(n-1) ds.
    let integrand = |s: f64| {
        let r_pow = s * s + g2;
        r_pow.powf(1.0 / p) / (n as f64 - 1.0)
    };
    Ok(quad::adaptive_simpson(integrand, s_lo, s_hi, 1e-13))
}

/// Closed-form increment for `n = 2`: differences of `gamma arccosh(r/|gamma|)`.
/// The independent oracle for the quadrature path.
pub fn increment_closed_form_n2(gamma: f64, r_lo: f64, r_hi: f64) -> f64 {
    if gamma == 0.0 {
        return 0.0;
    }
    let c = gamma.abs();
    gamma.signum() * c * ((r_hi / c).acosh() - (r_lo / c).acosh())
}

fn check_flux(gamma: f64, n: u32, r_lo: f64, r_hi: f64) -> Result<()> {
    if !(0.0 < r_lo && r_lo <= r_hi) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < r_lo <= r_hi, got ({r_lo}, {r_hi})"
        )));
    }
    let bound = r_lo.powi(n as i32 - 1);
    if gamma.abs() > bound * (1.0 + 1e-12) {
        return Err(Error::Infeasible(format!(
            "|gamma| = {} exceeds r_lo^(n-1) = {bound}: integrand undefined",
            gamma.abs()
        )));
    }
    Ok(())
}

/// Samples `u` on `grid` with `u(r_lo) = base` and
/// `u'(r) = gamma / sqrt(r^{2n-2} - gamma^2)`.
pub fn integrate_profile(
    gamma: f64,
    n: u32,
    r_lo: f64,
    r_hi: f64,
    base: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    check_flux(gamma, n, r_lo, r_hi)?;
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = base;
    let mut prev = r_lo;
    for &r in grid {
        if r < r_lo - 1e-12 || r > r_hi + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "grid point {r} outside [{r_lo}, {r_hi}]"
            )));
        }
        let r = r.clamp(r_lo, r_hi);
        let step = increment(gamma, n, prev.min(r), prev.max(r))?;
        acc += if r >= prev { step } else { -step };
        prev = r;
        out.push(acc);
    }
    Ok(out)
}

/// One smooth interval of a radial solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionInterval {
    pub r_lo: f64,
    pub r_hi: f64,
    /// Flux coefficient: `T(r) = gamma / r^{n-1}` on the interval.
    pub gamma: f64,
    /// Value of `u` at the inner end of the interval (after any jump there).
    pub start_value: f64,
}

/// Vertical jump of the solution at a sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionJump {
    pub r: f64,
    /// Nonnegative height.
    pub height: f64,
    /// +1 jumps up with increasing radius, -1 down.
    pub direction: i8,
}

/// Where a residual vertical height may sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpSite {
    /// Boundary jump at `r_a` (the weak Dirichlet datum absorbs it).
    InnerBoundary,
    /// Interior jump at atom index `k`.
    Atom(usize),
}

/// Closed-form radial solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub domain: RadialDomain,
    pub intervals: Vec<SolutionInterval>,
    pub jumps: Vec<SolutionJump>,
    /// Jump at the inner boundary, if the datum is attained weakly there.
    pub inner_jump: Option<SolutionJump>,
    /// Dirichlet data `(phi_a, phi_b)`.
    pub phi: (f64, f64),
}

/// One-sided values of the radial field component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldValue {
    Interior(f64),
    AtJump { inner: f64, outer: f64 },
}

impl RadialSolution {
    /// Radial component `T(r) = gamma_i / r^{n-1}`; at an interval boundary
    /// both one-sided limits are returned.
    pub fn field_at(&self, r: f64) -> Result<FieldValue> {
        let n = self.domain.n as i32;
        if r < self.domain.r_a - 1e-12 || r > self.domain.r_b + 1e-12 {
            return Err(Error::InvalidArgument(format!("radius {r} outside the annulus")));
        }
        let w = r.powi(n - 1);
        for (i, iv) in self.intervals.iter().enumerate() {
            if (r - iv.r_hi).abs() <= 1e-14 * self.domain.r_b {
                if i + 1 < self.intervals.len() {
                    return Ok(FieldValue::AtJump {
                        inner: iv.gamma / w,
                        outer: self.intervals[i + 1].gamma / w,
                    });
                }
                return Ok(FieldValue::Interior(iv.gamma / w));
            }
            if r < iv.r_hi {
                return Ok(FieldValue::Interior(iv.gamma / w));
            }
        }
        let last = self.intervals.last().unwrap();
        Ok(FieldValue::Interior(last.gamma / w))
    }

    /// Pointwise value of `u`; at a jump radius the midpoint of the traces.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let r = r.clamp(self.domain.r_a, self.domain.r_b);
        for (i, iv) in self.intervals.iter().enumerate() {
            if r <= iv.r_hi + 1e-14 || i == self.intervals.len() - 1 {
                if (r - iv.r_hi).abs() <= 1e-14 && i + 1 < self.intervals.len() {
                    let below = self.end_value(i)?;
                    let above = self.intervals[i + 1].start_value;
                    return Ok(0.5 * (below + above));
                }
                let r_eval = r.clamp(iv.r_lo, iv.r_hi);
                return Ok(iv.start_value + increment(iv.gamma, self.domain.n, iv.r_lo, r_eval)?);
            }
        }
        unreachable!()
    }

    fn end_value(&self, interval: usize) -> Result<f64> {
        let iv = &self.intervals[interval];
        Ok(iv.start_value + increment(iv.gamma, self.domain.n, iv.r_lo, iv.r_hi)?)
    }

    /// Trace of `u` at the outer boundary.
    pub fn trace_outer(&self) -> Result<f64> {
        self.end_value(self.intervals.len() - 1)
    }

    /// Trace of `u` just inside the inner boundary.
    pub fn trace_inner(&self) -> f64 {
        self.intervals[0].start_value
    }

    /// Whether each Dirichlet endpoint is attained classically (true) or via
    /// a boundary jump (false). The outer endpoint is always classical for
    /// radial structures: the flux bound of the last interval keeps the
    /// boundary dual strictly interior.
    pub fn boundary_attainment(&self) -> (bool, bool) {
        (self.inner_jump.is_none(), true)
    }

    /// Samples onto a profile with grid step about `h`, carrying the atom
    /// spheres as exact nodes and the interior jumps as jump records.
    pub fn sample_profile(&self, h: f64) -> Result<RadialProfile> {
        let d = self.domain;
        let interior: Vec<f64> = self.intervals.iter().skip(1).map(|iv| iv.r_lo).collect();
        let grid = crate::profile::grid_with_nodes(d.r_a, d.r_b, h, &interior);
        let mut values = Vec::with_capacity(grid.len());
        let mut iv_idx = 0usize;
        for &r in &grid {
            while iv_idx + 1 < self.intervals.len() && r > self.intervals[iv_idx].r_hi + 1e-14 {
                iv_idx += 1;
            }
            let iv = &self.intervals[iv_idx];
            let r_eval = r.clamp(iv.r_lo, iv.r_hi);
            values.push(iv.start_value + increment(iv.gamma, d.n, iv.r_lo, r_eval)?);
        }
        let mut p = RadialProfile::new(d, grid, values)?;
        for j in &self.jumps {
            if j.height > 1e-14 {
                let below = self.value_below_jump(j.r)?;
                let above = below + j.direction as f64 * j.height;
                p.add_jump(j.r, below, above)?;
            }
        }
        Ok(p)
    }

    fn value_below_jump(&self, r: f64) -> Result<f64> {
        for (i, iv) in self.intervals.iter().enumerate() {
            if (iv.r_hi - r).abs() <= 1e-12 {
                return self.end_value(i);
            }
        }
        Err(Error::InvalidArgument(format!("no interval ends at {r}")))
    }
}

/// Dirichlet solve outcome: a unique solution or a nondegenerate family.
#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Unique(RadialSolution),
    Family(RadialFamily),
}

impl SolveOutcome {
    pub fn unique(self) -> Result<RadialSolution> {
        match self {
            SolveOutcome::Unique(s) => Ok(s),
            SolveOutcome::Family(_) => Err(Error::Infeasible(
                "solution is a nondegenerate family, not unique".into(),
            )),
        }
    }
}

/// Family of solutions sharing flux coefficients and boundary traces,
/// differing in how the residual vertical height splits among the
/// simultaneously pinned jump sites. The capillary energy is constant along
/// the family, so the minimization cannot select a member.
#[derive(Debug, Clone)]
pub struct RadialFamily {
    domain: RadialDomain,
    measure: RadialMeasure,
    phi: (f64, f64),
    anchor_flux: f64,
    /// Jump-capable sites pinned at the window edge, in radial order.
    pub sites: Vec<JumpSite>,
    /// Total residual height to be distributed over the sites.
    pub total_height: f64,
    /// Jump direction shared by all sites (+1 up, -1 down).
    pub direction: i8,
}

impl RadialFamily {
    /// The vertical-translation interval of the free middle piece: heights
    /// `t` and `total - t` at the two sites as `t` ranges over `[0, total]`.
    pub fn translation_interval(&self) -> (f64, f64) {
        (0.0, self.total_height)
    }

    /// Member with prescribed per-site heights (nonnegative, summing to the
    /// family total).
    pub fn member(&self, heights: &[f64]) -> Result<RadialSolution> {
        if heights.len() != self.sites.len() {
            return Err(Error::InvalidArgument("one height per site required".into()));
        }
        if heights.iter().any(|&h| h < -1e-12) {
            return Err(Error::InvalidArgument("heights must be nonnegative".into()));
        }
        let sum: f64 = heights.iter().sum();
        if (sum - self.total_height).abs() > 1e-9 * (1.0 + self.total_height) {
            return Err(Error::InvalidArgument(format!(
                "heights sum {sum} must equal the family total {}",
                self.total_height
            )));
        }
        let pairs: Vec<(JumpSite, f64)> =
            self.sites.iter().copied().zip(heights.iter().copied()).collect();
        assemble_solution(&self.measure, self.domain, self.phi, self.anchor_flux, &pairs, self.direction)
    }

    /// Samples `k >= 2` members along the translation parameter; the mass
    /// moves from the innermost pinned site to the outermost.
    pub fn sample(&self, k: usize) -> Result<Vec<RadialSolution>> {
        let k = k.max(2);
        crate::exec::map_indexed(k, |i| {
            let t = self.total_height * i as f64 / (k - 1) as f64;
            let mut heights = vec![0.0; self.sites.len()];
            heights[0] = self.total_height - t;
            *heights.last_mut().unwrap() += t;
            self.member(&heights)
        })
        .into_iter()
        .collect()
    }
}

/// Anchor-flux feasibility window together with the jump-capable sites
/// pinned at each edge.
struct Window {
    lo: f64,
    hi: f64,
    /// Cumulative flux offsets per interval: `gamma_i = anchor + offsets[i]`.
    offsets: Vec<f64>,
    /// Interval left endpoints: `r_a` then the atom radii.
    left_radius: Vec<f64>,
    up_sites: Vec<JumpSite>,
    down_sites: Vec<JumpSite>,
}

fn anchor_window(m: &RadialMeasure) -> Result<Window> {
    let d = m.domain;
    let k = m.atoms().len();
    let mut offsets = vec![0.0; k + 1];
    for i in 0..k {
        offsets[i + 1] = offsets[i] + m.atoms()[i].w * d.sphere_weight(m.atoms()[i].r);
    }
    let mut left_radius = vec![d.r_a];
    left_radius.extend(m.atoms().iter().map(|a| a.r));
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..=k {
        let c = d.sphere_weight(left_radius[i]);
        lo = lo.max(-c - offsets[i]);
        hi = hi.min(c - offsets[i]);
    }
    if lo > hi + 1e-12 {
        return Err(Error::Infeasible(format!(
            "empty anchor window [{lo}, {hi}]: the flux bounds of the intervals are incompatible"
        )));
    }
    let tol = 1e-10 * (1.0 + hi.abs());
    let mut up_sites = Vec::new();
    let mut down_sites = Vec::new();
    for i in 0..=k {
        let c = d.sphere_weight(left_radius[i]);
        if (c - offsets[i] - hi).abs() <= tol {
            // gamma on interval i sits at +c: an up jump needs a positive
            // atom just inside, or the inner boundary itself.
            if i == 0 {
                up_sites.push(JumpSite::InnerBoundary);
            } else if m.atoms()[i - 1].w > 0.0 {
                up_sites.push(JumpSite::Atom(i - 1));
            }
        }
        if (-c - offsets[i] - lo).abs() <= tol {
            if i == 0 {
                down_sites.push(JumpSite::InnerBoundary);
            } else if m.atoms()[i - 1].w < 0.0 {
                down_sites.push(JumpSite::Atom(i - 1));
            }
        }
    }
    Ok(Window { lo, hi, offsets, left_radius, up_sites, down_sites })
}

fn total_increment(m: &RadialMeasure, w: &Window, anchor: f64) -> Result<f64> {
    let d = m.domain;
    let mut acc = 0.0;
    for i in 0..w.offsets.len() {
        let r_lo = w.left_radius[i];
        let r_hi = if i + 1 < w.left_radius.len() { w.left_radius[i + 1] } else { d.r_b };
        let bound = d.sphere_weight(r_lo);
        let g = (anchor + w.offsets[i]).clamp(-bound, bound);
        acc += increment(g, d.n, r_lo, r_hi)?;
    }
    Ok(acc)
}

fn assemble_solution(
    m: &RadialMeasure,
    d: RadialDomain,
    phi: (f64, f64),
    anchor: f64,
    site_heights: &[(JumpSite, f64)],
    direction: i8,
) -> Result<RadialSolution> {
    let w = anchor_window(m)?;
    let mut inner_jump = None;
    let mut atom_heights = vec![0.0; m.atoms().len()];
    for &(site, h) in site_heights {
        match site {
            JumpSite::InnerBoundary => {
                if h > 0.0 {
                    inner_jump = Some(SolutionJump { r: d.r_a, height: h, direction });
                }
            }
            JumpSite::Atom(k) => atom_heights[k] = h,
        }
    }
    let mut intervals = Vec::with_capacity(w.offsets.len());
    let mut value = phi.0 + inner_jump.map_or(0.0, |j| j.direction as f64 * j.height);
    for i in 0..w.offsets.len() {
        let r_lo = w.left_radius[i];
        let r_hi = if i + 1 < w.left_radius.len() { w.left_radius[i + 1] } else { d.r_b };
        let bound = d.sphere_weight(r_lo);
        let gamma = (anchor + w.offsets[i]).clamp(-bound, bound);
        if i > 0 {
            value += direction as f64 * atom_heights[i - 1];
        }
        intervals.push(SolutionInterval { r_lo, r_hi, gamma, start_value: value });
        value += increment(gamma, d.n, r_lo, r_hi)?;
    }
    let jumps = m
        .atoms()
        .iter()
        .zip(&atom_heights)
        .filter(|(_, &h)| h > 0.0)
        .map(|(a, &h)| SolutionJump { r: a.r, height: h, direction })
        .collect();
    Ok(RadialSolution { domain: d, intervals, jumps, inner_jump, phi })
}

/// Minimal and maximal total increments over continuous radial structures:
/// the oscillation bound that forces jumps once the boundary data leave it.
/// Computed as the total increment at the extreme admissible anchor flux.
pub fn continuous_increment_range(m: &RadialMeasure) -> Result<(f64, f64)> {
    let w = anchor_window(m)?;
    Ok((total_increment(m, &w, w.lo)?, total_increment(m, &w, w.hi)?))
}

/// Solves the radial Dirichlet problem for an atoms-only, non-extremal
/// measure. When the boundary increment is reachable by a continuous
/// structure, a scalar shooting equation is solved by bisection (the
/// increment is strictly monotone in the anchor flux, bracket shrunk by
/// 1e-9); otherwise the residual height goes onto the jump sites pinned at
/// the window edge. Two or more simultaneously pinned sites produce a
/// family.
pub fn solve_dirichlet_radial(
    domain: RadialDomain,
    m: &RadialMeasure,
    phi_a: f64,
    phi_b: f64,
) -> Result<SolveOutcome> {
    if !m.is_atoms_only() {
        return Err(Error::InvalidArgument(
            "the closed-form radial solver handles atoms-only measures".into(),
        ));
    }
    if m.domain != domain {
        return Err(Error::InvalidArgument("measure domain mismatch".into()));
    }
    let ne = nonextremality_ratio(m, (64 + 8 * m.atoms().len()).max(64))?;
    if ne.l_hat >= 1.0 {
        return Err(Error::NotNonExtremal { l_hat: ne.l_hat });
    }
    let w = anchor_window(m)?;
    let delta = phi_b - phi_a;
    let inc_lo = total_increment(m, &w, w.lo)?;
    let inc_hi = total_increment(m, &w, w.hi)?;

    if delta >= inc_hi {
        let residual = delta - inc_hi;
        return distribute_residual(m, domain, (phi_a, phi_b), w.hi, &w.up_sites, residual, 1)
            .map_err(|e| diagnose_infeasible(m, e, true));
    }
    if delta <= inc_lo {
        let residual = inc_lo - delta;
        return distribute_residual(m, domain, (phi_a, phi_b), w.lo, &w.down_sites, residual, -1)
            .map_err(|e| diagnose_infeasible(m, e, false));
    }

    // Continuous regime: bisection on the anchor flux.
    let shrink = 1e-9 * (w.hi - w.lo).max(1e-9);
    let mut a = (w.lo + shrink).min(w.hi);
    let mut b = (w.hi - shrink).max(w.lo);
    if total_increment(m, &w, a)? > delta {
        a = w.lo;
    }
    if total_increment(m, &w, b)? < delta {
        b = w.hi;
    }
    while b - a > 1e-12 {
        let mid = 0.5 * (a + b);
        if total_increment(m, &w, mid)? < delta {
            a = mid;
        } else {
            b = mid;
        }
    }
    let anchor = 0.5 * (a + b);
    let sol = assemble_solution(m, domain, (phi_a, phi_b), anchor, &[], 1)?;
    Ok(SolveOutcome::Unique(sol))
}

fn distribute_residual(
    m: &RadialMeasure,
    d: RadialDomain,
    phi: (f64, f64),
    anchor: f64,
    sites: &[JumpSite],
    residual: f64,
    direction: i8,
) -> Result<SolveOutcome> {
    if residual <= 1e-14 {
        let sol = assemble_solution(m, d, phi, anchor, &[], direction)?;
        return Ok(SolveOutcome::Unique(sol));
    }
    match sites.len() {
        0 => Err(Error::Infeasible(format!(
            "boundary increment requires a vertical height of {residual} but no pinned sphere can carry a {} jump",
            if direction > 0 { "rising" } else { "falling" }
        ))),
        1 => {
            let sol = assemble_solution(m, d, phi, anchor, &[(sites[0], residual)], direction)?;
            Ok(SolveOutcome::Unique(sol))
        }
        _ => Ok(SolveOutcome::Family(RadialFamily {
            domain: d,
            measure: m.clone(),
            phi,
            anchor_flux: anchor,
            sites: sites.to_vec(),
            total_height: residual,
            direction,
        })),
    }
}

fn diagnose_infeasible(m: &RadialMeasure, e: Error, upward: bool) -> Error {
    if let Error::Infeasible(msg) = &e {
        let d = m.domain;
        let mut windows = String::new();
        let mut r_in = d.r_a;
        for a in m.atoms() {
            if let Ok(c) = jump_classification(d.n, r_in, a.r, a.w) {
                windows.push_str(&format!(
                    " atom at r = {}: |mu| = {} vs window [{:.6}, {:.6}] -> {:?};",
                    a.r,
                    a.w.abs(),
                    c.window.0,
                    c.window.1,
                    c.regime
                ));
            }
            r_in = a.r;
        }
        Error::Infeasible(format!(
            "{msg} (direction {}):{windows}",
            if upward { "up" } else { "down" }
        ))
    } else {
        e
    }
}

/// Capillary energy of a closed-form solution against its atom measure over
/// the containing ball with the constant extension by the Dirichlet data:
/// graph area plus the measure action, which takes the lower trace at
/// positive atoms and the upper trace at negative ones.
pub fn energy_radial(sol: &RadialSolution, m: &RadialMeasure) -> Result<f64> {
    let d = sol.domain;
    let n = d.n;
    let sph = unit_sphere_area(n);

    let mut energy = d.complement_volume();
    let inner_gap = (sol.trace_inner() - sol.phi.0).abs();
    energy += sph * d.sphere_weight(d.r_a) * inner_gap;
    energy += sph * d.sphere_weight(d.r_b) * (sol.trace_outer()? - sol.phi.1).abs();

    for iv in &sol.intervals {
        energy += sph * area_integral(iv.gamma, n, iv.r_lo, iv.r_hi)?;
    }
    for j in &sol.jumps {
        energy += sph * d.sphere_weight(j.r) * j.height;
    }

    for a in m.atoms() {
        let idx = sol
            .intervals
            .iter()
            .position(|iv| (iv.r_hi - a.r).abs() <= 1e-12)
            .ok_or_else(|| {
                Error::IncompatibleSampling(format!("no interval ends at atom r = {}", a.r))
            })?;
        let below = sol.intervals[idx].start_value
            + increment(sol.intervals[idx].gamma, n, sol.intervals[idx].r_lo, sol.intervals[idx].r_hi)?;
        let above = sol.intervals[idx + 1].start_value;
        // Hahn-split side selection: the lower trace on positive atoms, the
        // upper one on negative atoms.
        let val = if a.w >= 0.0 { below.min(above) } else { below.max(above) };
        energy += sph * a.w * d.sphere_weight(a.r) * val;
    }
    Ok(energy)
}

/// Capillary energy of an arbitrary profile against a radial measure with
/// Dirichlet data `(phi_a, phi_b)`: discrete graph area over the annulus,
/// flat extension over the rest of the ball, boundary-trace jumps, and the
/// measure action with the Hahn-split representative.
pub fn energy_radial_profile(p: &RadialProfile, m: &RadialMeasure, phi_a: f64, phi_b: f64) -> f64 {
    let d = p.domain;
    let sph = unit_sphere_area(d.n);
    let mut energy = d.complement_volume() + crate::profile::area_functional(p);
    energy += sph * d.sphere_weight(d.r_a) * (p.trace_inner() - phi_a).abs();
    energy += sph * d.sphere_weight(d.r_b) * (p.trace_outer() - phi_b).abs();
    energy += measure_action(m, p, &hahn_lambda(m));
    energy
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn domain13() -> RadialDomain {
        RadialDomain::new(2, 1.0, 3.0, 4.0).unwrap()
    }

    fn one_atom() -> RadialMeasure {
        RadialMeasure::from_atoms(domain13(), &[(2.0, 0.8)]).unwrap()
    }

    #[test]
    fn coefficients_jump_rule_one_atom() {
        // Exact arithmetic: the outer flux is sign(mu) r^{n-1} = 2 and the
        // inner one follows from the recursion, 2 - 0.8 * 2.
        let g = field_coefficients(&one_atom(), Anchor::JumpRule { atom: 0 }).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[1], 2.0);
        assert_eq!(g[0], 2.0 - 0.8 * 2.0);
        assert!((g[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn coefficients_no_atoms_anchor_value() {
        let m = RadialMeasure::zero(domain13());
        let g = field_coefficients(&m, Anchor::Value { interval: 0, gamma: 0.7 }).unwrap();
        assert_eq!(g, vec![0.7]);
    }

    #[test]
    fn coefficients_two_sphere() {
        let d = RadialDomain::new(2, 1.0, 4.0, 5.0).unwrap();
        let m = RadialMeasure::from_atoms(d, &[(2.0, 0.8), (3.0, 1.0 / 3.0)]).unwrap();
        let g = field_coefficients(&m, Anchor::JumpRule { atom: 0 }).unwrap();
        assert_eq!(g[1], 2.0);
        assert_eq!(g[0], 2.0 - 0.8 * 2.0);
        assert_abs_diff_eq!(g[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn coefficients_infeasible_flux_reported() {
        let res = field_coefficients(&one_atom(), Anchor::Value { interval: 0, gamma: 1.5 });
        assert!(matches!(res, Err(Error::Infeasible(_))));
    }

    #[test]
    fn classification_window() {
        let c = jump_classification(2, 1.0, 2.0, 0.8).unwrap();
        assert_eq!(c.regime, JumpRegime::JumpUp);
        assert_eq!(c.window, (0.5, 1.5));
        let c = jump_classification(2, 1.0, 2.0, 0.3).unwrap();
        assert_eq!(c.regime, JumpRegime::ContinuousOnly);
        let c = jump_classification(2, 1.0, 2.0, 1.6).unwrap();
        assert_eq!(c.regime, JumpRegime::Infeasible);
        let c = jump_classification(2, 1.0, 2.0, -0.8).unwrap();
        assert_eq!(c.regime, JumpRegime::JumpDown);
        // Edge ties break to the strict side.
        let c = jump_classification(2, 1.0, 2.0, 0.5).unwrap();
        assert_eq!(c.regime, JumpRegime::ContinuousOnly);
        assert!(c.at_lower_edge);
        let c = jump_classification(2, 1.0, 2.0, 1.5).unwrap();
        assert_eq!(c.regime, JumpRegime::Infeasible);
        assert!(c.at_upper_edge);
    }

    #[test]
    fn increment_against_closed_form() {
        // gamma = 2 on (2, 3): 2 arccosh(1.5).
        let v = increment(2.0, 2, 2.0, 3.0).unwrap();
        assert_abs_diff_eq!(v, 2.0 * 1.5f64.acosh(), epsilon = 1e-11);
        assert_abs_diff_eq!(v, increment_closed_form_n2(2.0, 2.0, 3.0), epsilon = 1e-11);
        // gamma = 0.4 on (1, 2): 0.4 (arccosh 5 - arccosh 2.5) = 0.290252...
        let v = increment(0.4, 2, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(v, 0.290252, epsilon = 1e-6);
        assert_abs_diff_eq!(v, increment_closed_form_n2(0.4, 1.0, 2.0), epsilon = 1e-11);
        assert_eq!(increment(0.0, 2, 1.0, 3.0).unwrap(), 0.0);
        // Odd in the flux.
        assert_abs_diff_eq!(
            increment(-0.4, 2, 1.0, 2.0).unwrap(),
            -increment(0.4, 2, 1.0, 2.0).unwrap(),
            epsilon = 1e-13
        );
        // Out-of-range flux rejected.
        assert!(increment(1.5, 2, 1.0, 2.0).is_err());
    }

    #[test]
    fn increment_higher_dimensions() {
        // n = 3 spot check against dense Gauss panels away from the
        // singularity: gamma = 0.5, interval (1.2, 2.0).
        let v = increment(0.5, 3, 1.2, 2.0).unwrap();
        let oracle = quad::fixed_gauss(|r: f64| 0.5 / (r.powi(4) - 0.25).sqrt(), 1.2, 2.0, 200);
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-11);
        // Pinned flux at the inner endpoint stays integrable.
        let v = increment(1.2f64.powi(2), 3, 1.2, 2.0).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn integrate_profile_samples() {
        let grid = [1.0, 1.5, 2.0];
        let u = integrate_profile(0.4, 2, 1.0, 2.0, 1.0, &grid).unwrap();
        assert_eq!(u[0], 1.0);
        assert_abs_diff_eq!(u[2], 1.0 + 0.290252, epsilon = 1e-6);
        assert!(u[1] > u[0] && u[2] > u[1]);
    }

    #[test]
    fn solve_trivial_flat() {
        let d = domain13();
        let m = RadialMeasure::zero(d);
        let sol = solve_dirichlet_radial(d, &m, 0.0, 0.0).unwrap().unique().unwrap();
        assert_eq!(sol.intervals.len(), 1);
        assert_abs_diff_eq!(sol.intervals[0].gamma, 0.0, epsilon = 1e-11);
        assert_abs_diff_eq!(sol.trace_outer().unwrap(), 0.0, epsilon = 1e-11);
        assert_eq!(sol.boundary_attainment(), (true, true));
    }

    #[test]
    fn solve_one_atom_jump_regime() {
        let d = domain13();
        let m = one_atom();
        let q1 = increment_closed_form_n2(0.4, 1.0, 2.0);
        let q2 = increment_closed_form_n2(2.0, 2.0, 3.0);
        let jump = 0.5;
        let sol = solve_dirichlet_radial(d, &m, 0.0, q1 + jump + q2).unwrap().unique().unwrap();
        assert_eq!(sol.intervals.len(), 2);
        assert_abs_diff_eq!(sol.intervals[0].gamma, 0.4, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.intervals[1].gamma, 2.0, epsilon = 1e-10);
        assert_eq!(sol.jumps.len(), 1);
        assert_abs_diff_eq!(sol.jumps[0].height, jump, epsilon = 1e-9);
        assert_eq!(sol.jumps[0].direction, 1);
        assert!(sol.inner_jump.is_none());
        assert_abs_diff_eq!(sol.trace_outer().unwrap(), q1 + jump + q2, epsilon = 1e-9);
    }

    #[test]
    fn solve_one_atom_continuous_regime() {
        let d = domain13();
        let m = RadialMeasure::from_atoms(d, &[(2.0, 0.3)]).unwrap();
        let sol = solve_dirichlet_radial(d, &m, 0.0, 1.0).unwrap().unique().unwrap();
        assert!(sol.jumps.is_empty());
        assert_abs_diff_eq!(sol.trace_outer().unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            sol.intervals[1].gamma - sol.intervals[0].gamma,
            0.3 * 2.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn solve_two_sphere_family() {
        let d = RadialDomain::new(2, 1.0, 4.0, 5.0).unwrap();
        let m = RadialMeasure::from_atoms(d, &[(2.0, 0.8), (3.0, 1.0 - 2.0 / 3.0)]).unwrap();
        let (_, c_max) = continuous_increment_range(&m).unwrap();
        let h = c_max + 1.0;
        let out = solve_dirichlet_radial(d, &m, 0.0, h).unwrap();
        let family = match out {
            SolveOutcome::Family(f) => f,
            SolveOutcome::Unique(_) => panic!("expected a family"),
        };
        assert_eq!(family.sites, vec![JumpSite::Atom(0), JumpSite::Atom(1)]);
        assert_abs_diff_eq!(family.total_height, 1.0, epsilon = 1e-9);
        let members = family.sample(5).unwrap();
        assert_eq!(members.len(), 5);
        for s in &members {
            assert_abs_diff_eq!(s.trace_inner(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.trace_outer().unwrap(), h, epsilon = 1e-9);
        }
        let energies: Vec<f64> = members.iter().map(|s| energy_radial(s, &m).unwrap()).collect();
        for e in &energies[1..] {
            assert_relative_eq!(*e, energies[0], max_relative = 1e-12);
        }
    }

    #[test]
    fn solve_unreachable_down_increment_is_infeasible() {
        // A positive atom cannot carry a down jump, so a large negative
        // increment forces the residual onto the inner boundary instead.
        let d = domain13();
        let m = one_atom();
        match solve_dirichlet_radial(d, &m, 0.0, -10.0) {
            Ok(SolveOutcome::Unique(sol)) => {
                // Down residual goes to the inner boundary jump.
                assert!(sol.inner_jump.is_some());
                assert_eq!(sol.boundary_attainment().0, false);
            }
            Ok(SolveOutcome::Family(_)) => panic!("unexpected family"),
            Err(e) => panic!("inner boundary should absorb the residual: {e}"),
        }
    }

    #[test]
    fn solve_extremal_measure_refused() {
        let d = domain13();
        let m = RadialMeasure::from_atoms(d, &[(2.0, 1.5)]).unwrap();
        let err = solve_dirichlet_radial(d, &m, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::NotNonExtremal { .. }), "got {err:?}");
    }

    #[test]
    fn field_values() {
        let d = domain13();
        let m = one_atom();
        let q1 = increment_closed_form_n2(0.4, 1.0, 2.0);
        let q2 = increment_closed_form_n2(2.0, 2.0, 3.0);
        let sol = solve_dirichlet_radial(d, &m, 0.0, q1 + 0.3 + q2).unwrap().unique().unwrap();
        match sol.field_at(2.0).unwrap() {
            FieldValue::AtJump { inner, outer } => {
                assert_abs_diff_eq!(outer, 1.0, epsilon = 1e-10);
                assert_abs_diff_eq!(inner, 0.2, epsilon = 1e-10);
            }
            _ => panic!("expected one-sided limits at the atom sphere"),
        }
        match sol.field_at(1.0).unwrap() {
            FieldValue::Interior(t) => assert_abs_diff_eq!(t, 0.4, epsilon = 1e-10),
            _ => panic!(),
        }
        for i in 0..=100 {
            let r = 1.0 + 2.0 * i as f64 / 100.0;
            match sol.field_at(r).unwrap() {
                FieldValue::Interior(t) => assert!(t.abs() <= 1.0 + 1e-12),
                FieldValue::AtJump { inner, outer } => {
                    assert!(inner.abs() <= 1.0 + 1e-12 && outer.abs() <= 1.0 + 1e-12)
                }
            }
        }
    }

    #[test]
    fn flat_energy_is_ball_volume() {
        let d = domain13();
        let m = RadialMeasure::zero(d);
        let sol = solve_dirichlet_radial(d, &m, 0.0, 0.0).unwrap().unique().unwrap();
        assert_relative_eq!(energy_radial(&sol, &m).unwrap(), d.ball_volume(), max_relative = 1e-12);
    }

    #[test]
    fn constant_datum_energy_pays_traces() {
        // The zero function with datum c outside the annulus costs
        // |B| + c (2 pi r_a + 2 pi r_b) in two dimensions.
        let d = domain13();
        let m = RadialMeasure::zero(d);
        let c = 0.75;
        let p = RadialProfile::constant(d, 32, 0.0).unwrap();
        let e = energy_radial_profile(&p, &m, c, c);
        let expected = d.ball_volume() + c * (2.0 * std::f64::consts::PI) * (1.0 + 3.0);
        assert_relative_eq!(e, expected, max_relative = 1e-12);
    }

    #[test]
    fn gamma_recursion_telescopes() {
        let d = RadialDomain::new(3, 1.0, 4.0, 5.0).unwrap();
        let m = RadialMeasure::from_atoms(d, &[(1.5, 0.2), (2.0, -0.1), (3.0, 0.15)]).unwrap();
        let g = field_coefficients(&m, Anchor::Value { interval: 0, gamma: 0.1 }).unwrap();
        let total: f64 = m.atoms().iter().map(|a| a.w * d.sphere_weight(a.r)).sum();
        assert_abs_diff_eq!(g[g.len() - 1] - g[0], total, epsilon = 1e-12);
    }

    #[test]
    fn sampled_profile_matches_solution() {
        let d = domain13();
        let m = one_atom();
        let q1 = increment_closed_form_n2(0.4, 1.0, 2.0);
        let q2 = increment_closed_form_n2(2.0, 2.0, 3.0);
        let phi_b = q1 + 0.5 + q2;
        let sol = solve_dirichlet_radial(d, &m, 0.0, phi_b).unwrap().unique().unwrap();
        let p = sol.sample_profile(1e-2).unwrap();
        assert_eq!(p.jumps().len(), 1);
        assert_abs_diff_eq!(p.jumps()[0].height(), 0.5, epsilon = 1e-9);
        for &r in &[1.25, 1.9, 2.4, 2.95] {
            assert_abs_diff_eq!(p.eval(r), sol.eval(r).unwrap(), epsilon = 2e-4);
        }
        // The sampled profile is a competitor: never below the closed form.
        let e_sol = energy_radial(&sol, &m).unwrap();
        let e_prof = energy_radial_profile(&p, &m, 0.0, phi_b);
        assert!(e_prof >= e_sol - 1e-9);
        assert_relative_eq!(e_prof, e_sol, max_relative = 2e-3);
    }
}
