//! Radial saddle-point carrier: grid cells with explicit jump slots at the
//! atom radii, trace penalties realizing the weak Dirichlet datum, and a
//! certified duality gap obtained from the one-parameter family of exactly
//! feasible dual fluxes.

use crate::error::{Error, Result};
use crate::geom::{unit_sphere_area, RadialDomain};
use crate::measure::{radial_l_constant, RadialMeasure};
use crate::profile::{grid_with_nodes, RadialProfile};
use crate::quad;

use super::{
    operator_norm, project_ball2, recover_field, ConvergenceReport, GridInfo, MinimizeParams,
};

/// Assembled discrete problem on the radial carrier.
///
/// All coefficients are per unit sphere area; energies reported to callers
/// are rescaled by `n w_n` and shifted by the flat graph area over
/// `ball \ annulus` so that they match the continuum functional.
#[derive(Debug, Clone)]
pub struct RadialSaddleProblem {
    pub domain: RadialDomain,
    measure: RadialMeasure,
    pub phi: (f64, f64),
    grid: Vec<f64>,
    /// Cell midpoint sphere weights `r_mid^{n-1}`.
    rho: Vec<f64>,
    /// Cell volume weights `r_mid^{n-1} dr`.
    w: Vec<f64>,
    /// Node index of each jump slot (one per atom, interior).
    slot_node: Vec<usize>,
    /// Reduced slot weights `a_k = S_k (1 - |mu_k| / 2)`.
    slot_a: Vec<f64>,
    /// Linear slot coefficients `b_k = S_k mu_k / 2`.
    slot_b: Vec<f64>,
    /// Linear coefficients on node values (atom masses plus density load).
    c_v: Vec<f64>,
    /// Boundary sphere weights.
    s_a: f64,
    s_b: f64,
    /// Non-extremality constant used for the coercivity certificate.
    l_hat: f64,
    h: f64,
}

/// Result of a minimization: primal grid function, recovered field per cell,
/// and the convergence report.
#[derive(Debug, Clone)]
pub struct MinimizeSolution {
    pub u: RadialProfile,
    /// Radial field component per cell, `|T| <= 1`.
    pub t: Vec<f64>,
    pub report: ConvergenceReport,
}

impl RadialSaddleProblem {
    /// Assembles the discrete functional for the measure and Dirichlet data
    /// `(phi_a, phi_b)` on a grid of step about `h` that resolves every atom
    /// radius as an exact node.
    pub fn new(m: &RadialMeasure, phi_a: f64, phi_b: f64, h: f64) -> Result<Self> {
        let d = m.domain;
        if !(h > 0.0) {
            return Err(Error::Config(format!("grid step {h} must be positive")));
        }
        // Refuse non-coercive inputs: the discrete functional would be
        // unbounded below.
        let l_hat = radial_l_constant(m)?;
        if l_hat >= 1.0 {
            return Err(Error::NotNonExtremal { l_hat });
        }
        let atom_radii: Vec<f64> = m.atoms().iter().map(|a| a.r).collect();
        let grid = grid_with_nodes(d.r_a, d.r_b, h, &atom_radii);
        let cells = grid.len() - 1;
        let mut rho = Vec::with_capacity(cells);
        let mut w = Vec::with_capacity(cells);
        for i in 0..cells {
            // Exact cell volume; coincides with the midpoint rule for n = 2.
            let nn = d.n as i32;
            let vol = (grid[i + 1].powi(nn) - grid[i].powi(nn)) / nn as f64;
            w.push(vol);
            // Flux weight = cell-average of r^{n-1}, kept equal to W / dr so
            // the dual conjugate matches the primal area term exactly.
            rho.push(vol / (grid[i + 1] - grid[i]));
        }
        let mut slot_node = Vec::new();
        let mut slot_a = Vec::new();
        let mut slot_b = Vec::new();
        let mut c_v = vec![0.0; grid.len()];
        for a in m.atoms() {
            let node = grid
                .iter()
                .position(|&g| (g - a.r).abs() < 1e-12)
                .ok_or_else(|| Error::Config(format!("carrier does not resolve atom r = {}", a.r)))?;
            if node == 0 || node == grid.len() - 1 {
                return Err(Error::Config("atom on the domain boundary".into()));
            }
            let s_k = d.sphere_weight(a.r);
            slot_node.push(node);
            slot_a.push(s_k * (1.0 - 0.5 * a.w.abs()));
            slot_b.push(s_k * 0.5 * a.w);
            c_v[node] += a.w * s_k;
        }
        // Density load: int h(r) hat_j(r) r^{n-1} dr per node.
        for p in m.density() {
            let (lo, hi) = p.support();
            for i in 0..cells {
                let a = grid[i].max(lo);
                let b = grid[i + 1].min(hi);
                if a >= b {
                    continue;
                }
                let dr = grid[i + 1] - grid[i];
                let left = quad::fixed_gauss(
                    |r| p.eval(r, d.n) * d.sphere_weight(r) * (grid[i + 1] - r) / dr,
                    a,
                    b,
                    16,
                );
                let right = quad::fixed_gauss(
                    |r| p.eval(r, d.n) * d.sphere_weight(r) * (r - grid[i]) / dr,
                    a,
                    b,
                    16,
                );
                c_v[i] += left;
                c_v[i + 1] += right;
            }
        }
        Ok(Self {
            domain: d,
            measure: m.clone(),
            phi: (phi_a, phi_b),
            s_a: d.sphere_weight(d.r_a),
            s_b: d.sphere_weight(d.r_b),
            grid,
            rho,
            w,
            slot_node,
            slot_a,
            slot_b,
            c_v,
            l_hat,
            h,
        })
    }

    pub fn cells(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn l_hat(&self) -> f64 {
        self.l_hat
    }

    pub fn grid_info(&self) -> GridInfo {
        GridInfo::Radial { h: self.h, cells: self.cells(), atoms: self.slot_node.len() }
    }

    /// Slot contribution of cell `i`, if any (at most one slot per cell).
    fn slot_of_cell(&self, i: usize) -> Option<usize> {
        self.slot_node.iter().position(|&n| n == i)
    }

    /// Cell slopes of the primal point `(v, s)`.
    fn slopes(&self, v: &[f64], s: &[f64]) -> Vec<f64> {
        (0..self.cells())
            .map(|i| {
                let jump = self.slot_of_cell(i).map_or(0.0, |k| s[k]);
                (v[i + 1] - v[i] - jump) / (self.grid[i + 1] - self.grid[i])
            })
            .collect()
    }

    /// Discrete functional value (absolute units: rescaled by the sphere
    /// area, plus the flat graph over `ball \ annulus`).
    pub fn energy(&self, v: &[f64], s: &[f64]) -> Result<f64> {
        if v.len() != self.grid.len() || s.len() != self.slot_node.len() {
            return Err(Error::IncompatibleSampling(
                "primal point does not conform to the carrier".into(),
            ));
        }
        Ok(self.energy_unchecked(v, s))
    }

    fn energy_unchecked(&self, v: &[f64], s: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, g) in self.slopes(v, s).iter().enumerate() {
            acc += self.w[i] * g.hypot(1.0);
        }
        for k in 0..s.len() {
            acc += self.slot_a[k] * s[k].abs() + self.slot_b[k] * s[k];
        }
        acc += self.s_a * (v[0] - self.phi.0).abs();
        acc += self.s_b * (v[v.len() - 1] - self.phi.1).abs();
        acc += self.c_v.iter().zip(v).map(|(c, v)| c * v).sum::<f64>();
        unit_sphere_area(self.domain.n) * acc + self.domain.complement_volume()
    }

    /// Evaluates the discrete functional on a sampled profile (jump slots
    /// are filled from the profile's jump records).
    pub fn energy_of_profile(&self, p: &RadialProfile) -> Result<f64> {
        let (v, s) = self.conform_profile(p)?;
        self.energy(&v, &s)
    }

    fn conform_profile(&self, p: &RadialProfile) -> Result<(Vec<f64>, Vec<f64>)> {
        if p.grid().len() != self.grid.len()
            || p.grid().iter().zip(&self.grid).any(|(a, b)| (a - b).abs() > 1e-10)
        {
            return Err(Error::IncompatibleSampling("profile grid differs from the carrier".into()));
        }
        let mut v = p.values().to_vec();
        let mut s = vec![0.0; self.slot_node.len()];
        for j in p.jumps() {
            match self.slot_node.iter().position(|&n| n == j.node) {
                Some(k) => {
                    s[k] = j.outer_trace() - j.inner_trace();
                    v[j.node] = j.inner_trace();
                }
                None => {
                    return Err(Error::IncompatibleSampling(format!(
                        "profile jump at r = {} has no slot on the carrier",
                        j.r
                    )))
                }
            }
        }
        Ok((v, s))
    }

    /// Best exactly feasible dual objective (absolute units). The dual
    /// stationarity conditions force the cell fluxes onto a one-parameter
    /// affine family; the objective is concave in that parameter and is
    /// maximized by golden-section search over the feasible window.
    pub fn dual_value(&self) -> Result<(f64, bool)> {
        let cells = self.cells();
        let m = self.grid.len() - 1;
        // offsets[i]: flux on cell i equals t + offsets[i].
        let mut offsets = vec![0.0; cells];
        for i in 1..cells {
            offsets[i] = offsets[i - 1] + self.c_v[i];
        }
        // Feasible window for t = flux on cell 0 (+ c_v[0] folded into the
        // inner trace dual).
        let mut lo = -self.s_a + self.c_v[0];
        let mut hi = self.s_a + self.c_v[0];
        for i in 0..cells {
            lo = lo.max(-self.rho[i] - offsets[i]);
            hi = hi.min(self.rho[i] - offsets[i]);
        }
        for (k, &node) in self.slot_node.iter().enumerate() {
            lo = lo.max(self.slot_b[k] - self.slot_a[k] - offsets[node]);
            hi = hi.min(self.slot_b[k] + self.slot_a[k] - offsets[node]);
        }
        // Outer trace dual bound.
        lo = lo.max(-self.s_b - self.c_v[m] - offsets[cells - 1]);
        hi = hi.min(self.s_b - self.c_v[m] - offsets[cells - 1]);
        if lo > hi {
            return Ok((f64::NEG_INFINITY, false));
        }
        let objective = |t: f64| -> f64 {
            let mut acc = 0.0;
            for i in 0..cells {
                let flux = t + offsets[i];
                let wsq = 1.0 - (flux / self.rho[i]).powi(2);
                acc += self.w[i] * wsq.max(0.0).sqrt();
            }
            acc -= (t - self.c_v[0]) * self.phi.0;
            acc += (t + offsets[cells - 1] + self.c_v[m]) * self.phi.1;
            acc
        };
        // Golden-section maximization of the concave objective.
        let phi_ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - phi_ratio * (b - a);
        let mut x2 = a + phi_ratio * (b - a);
        let mut f1 = objective(x1);
        let mut f2 = objective(x2);
        for _ in 0..200 {
            if b - a < 1e-14 * (1.0 + b.abs()) {
                break;
            }
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi_ratio * (b - a);
                f2 = objective(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi_ratio * (b - a);
                f1 = objective(x1);
            }
        }
        let best = objective(0.5 * (a + b)).max(f1).max(f2);
        Ok((unit_sphere_area(self.domain.n) * best + self.domain.complement_volume(), true))
    }

    /// Runs the primal-dual iteration until the certified gap drops below
    /// `params.tol_gap` or the iteration budget is exhausted.
    pub fn minimize(&self, params: &MinimizeParams) -> Result<MinimizeSolution> {
        let cells = self.cells();
        let nodes = self.grid.len();
        let slots = self.slot_node.len();
        let sph = unit_sphere_area(self.domain.n);

        // Operator norm of the bilinear coupling.
        let apply = |x: &[f64], y: &mut [f64]| {
            let (v, s) = x.split_at(nodes);
            for i in 0..cells {
                let jump = self.slot_of_cell(i).map_or(0.0, |k| s[k]);
                y[i] = self.rho[i] * (v[i + 1] - v[i] - jump);
            }
            for k in 0..slots {
                y[cells + k] = self.slot_a[k] * s[k];
            }
            y[cells + slots] = self.s_a * v[0];
            y[cells + slots + 1] = self.s_b * v[nodes - 1];
        };
        let apply_t = |y: &[f64], x: &mut [f64]| {
            x.iter_mut().for_each(|a| *a = 0.0);
            for i in 0..cells {
                x[i] -= self.rho[i] * y[i];
                x[i + 1] += self.rho[i] * y[i];
            }
            for k in 0..slots {
                let cell = self.slot_node[k];
                x[nodes + k] = -self.rho[cell] * y[cell] + self.slot_a[k] * y[cells + k];
            }
            x[0] += self.s_a * y[cells + slots];
            x[nodes - 1] += self.s_b * y[cells + slots + 1];
        };
        let norm = operator_norm(nodes + slots, cells + slots + 2, apply, apply_t);
        let sigma = params.step_ratio / norm;
        let tau = 1.0 / (params.step_ratio * norm);

        // Primal: linear interpolation of the data; duals at the feasible
        // center.
        let mut v: Vec<f64> = self
            .grid
            .iter()
            .map(|&r| {
                self.phi.0 + (self.phi.1 - self.phi.0) * (r - self.domain.r_a)
                    / (self.domain.r_b - self.domain.r_a)
            })
            .collect();
        let mut s = vec![0.0; slots];
        let mut v_bar = v.clone();
        let mut s_bar = s.clone();
        let mut w0 = vec![1.0; cells];
        let mut w = vec![0.0; cells];
        let mut beta = vec![0.0; slots];
        let mut tau_a = 0.0f64;
        let mut tau_b = 0.0f64;

        let initial_energy = self.energy_unchecked(&v, &s);
        let (dual, certified) = self.dual_value()?;
        let best_dual = dual;
        let mut gap = initial_energy - best_dual;
        let mut energy = initial_energy;
        let mut iters = 0usize;
        let mut coercivity_margin: f64 = f64::INFINITY;

        let trace_phi = self.s_a * self.phi.0.abs() + self.s_b * self.phi.1.abs();

        while iters < params.max_iter {
            // Dual ascent + projection.
            for i in 0..cells {
                let jump = self.slot_of_cell(i).map_or(0.0, |k| s_bar[k]);
                let coupling = self.rho[i] * (v_bar[i + 1] - v_bar[i] - jump);
                let (p0, p) = project_ball2(w0[i] + sigma * self.w[i], w[i] + sigma * coupling);
                w0[i] = p0;
                w[i] = p;
            }
            for k in 0..slots {
                beta[k] = (beta[k] + sigma * self.slot_a[k] * s_bar[k]).clamp(-1.0, 1.0);
            }
            tau_a = (tau_a + sigma * self.s_a * (v_bar[0] - self.phi.0)).clamp(-1.0, 1.0);
            tau_b = (tau_b + sigma * self.s_b * (v_bar[nodes - 1] - self.phi.1)).clamp(-1.0, 1.0);

            // Primal descent on the linear-plus-measure part, with
            // over-relaxation.
            for j in 0..nodes {
                let mut grad = self.c_v[j];
                if j > 0 {
                    grad += self.rho[j - 1] * w[j - 1];
                }
                if j < cells {
                    grad -= self.rho[j] * w[j];
                }
                if j == 0 {
                    grad += self.s_a * tau_a;
                }
                if j == nodes - 1 {
                    grad += self.s_b * tau_b;
                }
                let new = v[j] - tau * grad;
                v_bar[j] = 2.0 * new - v[j];
                v[j] = new;
            }
            for k in 0..slots {
                let cell = self.slot_node[k];
                let grad = -self.rho[cell] * w[cell] + self.slot_a[k] * beta[k] + self.slot_b[k];
                let new = s[k] - tau * grad;
                s_bar[k] = 2.0 * new - s[k];
                s[k] = new;
            }
            iters += 1;

            if iters % params.check_every == 0 || iters == params.max_iter {
                energy = self.energy_unchecked(&v, &s);
                gap = energy - best_dual;
                // Coercivity: energy >= (1 - L) TV(u0) - trace(phi), all in
                // absolute units.
                let mut tv0 = self.s_a * v[0].abs() + self.s_b * v[nodes - 1].abs();
                for (i, g) in self.slopes(&v, &s).iter().enumerate() {
                    tv0 += self.w[i] * g.abs();
                }
                for (k, &node) in self.slot_node.iter().enumerate() {
                    tv0 += self.domain.sphere_weight(self.grid[node]) * s[k].abs();
                }
                let bound = (1.0 - self.l_hat) * sph * tv0 - sph * trace_phi;
                coercivity_margin = coercivity_margin.min(energy - bound);
                if energy > 10.0 * initial_energy.abs().max(1.0) {
                    return Err(Error::Diverged { iters, energy, initial: initial_energy });
                }
                if gap <= params.tol_gap {
                    break;
                }
            }
        }
        // Assemble outputs. Slots below the noise floor are solver residue,
        // not jumps: complementarity bounds a spurious slot by the gap over
        // its reduced weight, so the floor scales with the certified gap
        // (capped so genuinely small jumps at loose tolerances survive).
        let mut profile = RadialProfile::new(self.domain, self.grid.clone(), v.clone())?;
        let sup_v = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (k, &node) in self.slot_node.iter().enumerate() {
            let noise = 100.0 * gap.max(0.0) / (sph * self.slot_a[k].max(1e-300));
            let jump_floor = (1e-9 * (1.0 + sup_v)).max(noise.min(1e-3 * (1.0 + sup_v)));
            if s[k].abs() > jump_floor {
                let inner = v[node];
                let outer = v[node] + s[k];
                profile.add_jump(self.grid[node], inner, outer)?;
            }
        }
        let t: Vec<f64> = (0..cells).map(|i| recover_field(w0[i], w[i])).collect();
        let report = ConvergenceReport {
            energy,
            gap,
            iters,
            l_hat: self.l_hat,
            grid: self.grid_info(),
            dual_value: best_dual,
            gap_certified: certified,
            coercivity_margin_min: coercivity_margin,
        };
        Ok(MinimizeSolution { u: profile, t, report })
    }

    /// The underlying measure.
    pub fn measure(&self) -> &RadialMeasure {
        &self.measure
    }
}

/// Convenience wrapper: assemble and minimize in one call.
pub fn minimize_radial(
    m: &RadialMeasure,
    phi_a: f64,
    phi_b: f64,
    h: f64,
    params: &MinimizeParams,
) -> Result<MinimizeSolution> {
    RadialSaddleProblem::new(m, phi_a, phi_b, h)?.minimize(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{energy_radial, increment_closed_form_n2, solve_dirichlet_radial};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn domain13() -> RadialDomain {
        RadialDomain::new(2, 1.0, 3.0, 4.0).unwrap()
    }

    #[test]
    fn zero_measure_zero_data_stays_zero() {
        let m = RadialMeasure::zero(domain13());
        let prob = RadialSaddleProblem::new(&m, 0.0, 0.0, 0.05).unwrap();
        let params = MinimizeParams { tol_gap: 1e-10, max_iter: 50_000, ..Default::default() };
        let sol = prob.minimize(&params).unwrap();
        assert!(sol.u.values().iter().all(|&x| x.abs() < 1e-12));
        assert!(sol.t.iter().all(|&x| x.abs() < 1e-12));
        assert_relative_eq!(sol.report.energy, domain13().ball_volume(), max_relative = 1e-12);
        assert!(sol.report.gap <= 1e-10);
        assert!(sol.report.gap_certified);
    }

    #[test]
    fn flat_energy_matches_ball_volume() {
        let m = RadialMeasure::zero(domain13());
        let prob = RadialSaddleProblem::new(&m, 0.0, 0.0, 0.01).unwrap();
        let v: Vec<f64> = vec![0.0; prob.grid().len()];
        let e = prob.energy(&v, &[]).unwrap();
        assert_relative_eq!(e, domain13().ball_volume(), max_relative = 1e-12);
    }

    #[test]
    fn extremal_measure_refused() {
        let m = RadialMeasure::from_atoms(domain13(), &[(2.0, 1.5)]).unwrap();
        let err = RadialSaddleProblem::new(&m, 0.0, 0.0, 0.05).unwrap_err();
        assert!(matches!(err, Error::NotNonExtremal { .. }));
    }

    #[test]
    fn one_atom_jump_matches_closed_form_coarse() {
        // Coarse-grid smoke test of the full pipeline; the acceptance suite
        // runs the tight-tolerance version.
        let d = domain13();
        let m = RadialMeasure::from_atoms(d, &[(2.0, 0.8)]).unwrap();
        let q1 = increment_closed_form_n2(0.4, 1.0, 2.0);
        let q2 = increment_closed_form_n2(2.0, 2.0, 3.0);
        let phi_b = q1 + 0.5 + q2;
        let prob = RadialSaddleProblem::new(&m, 0.0, phi_b, 0.02).unwrap();
        let params = MinimizeParams { tol_gap: 1e-5, max_iter: 400_000, ..Default::default() };
        let sol = prob.minimize(&params).unwrap();
        assert!(sol.report.gap <= 1e-5, "gap = {}", sol.report.gap);
        assert!(sol.report.gap_certified);

        let exact = solve_dirichlet_radial(d, &m, 0.0, phi_b).unwrap().unique().unwrap();
        let exact_energy = energy_radial(&exact, &m).unwrap();
        assert_relative_eq!(sol.report.energy, exact_energy, max_relative = 5e-3);

        // The jump slot carries roughly the closed-form height. At finite h
        // the slot also absorbs part of the steep boundary layer just outside
        // the atom sphere (the continuum slope blows up there), so the match
        // tightens only as h shrinks.
        assert_eq!(sol.u.jumps().len(), 1);
        assert_abs_diff_eq!(sol.u.jumps()[0].height(), 0.5, epsilon = 0.15);
        // Field bounded by one and near one just outside the atom sphere.
        assert!(sol.t.iter().all(|t| t.abs() <= 1.0 + 1e-12));
        // Coercivity margin nonnegative.
        assert!(sol.report.coercivity_margin_min >= -1e-9);
    }

    #[test]
    fn maximum_principle_for_translated_data() {
        let d = domain13();
        let m = RadialMeasure::from_atoms(d, &[(2.0, 0.3)]).unwrap();
        let params = MinimizeParams { tol_gap: 1e-6, max_iter: 200_000, ..Default::default() };
        let hi = RadialSaddleProblem::new(&m, 0.0, 1.0, 0.02).unwrap().minimize(&params).unwrap();
        let lo = RadialSaddleProblem::new(&m, -0.5, 0.5, 0.02)
            .unwrap()
            .minimize(&params)
            .unwrap();
        for (a, b) in hi.u.values().iter().zip(lo.u.values()) {
            assert!(a >= &(b - 1e-6), "ordering violated: {a} < {b}");
        }
    }
}
