//! Cartesian saddle-point carrier for absolutely continuous densities on a
//! rectangle. Same primal-dual scheme as the radial carrier; the feasible
//! dual point for the gap certificate is obtained by projecting the dual
//! iterate onto the discrete divergence constraint with a conjugate-gradient
//! solve, then clipping back into the unit ball.

use crate::error::{Error, Result};
use crate::grid2d::GridFunction2D;

use super::{operator_norm, project_ball3, recover_field, ConvergenceReport, GridInfo, MinimizeParams};

/// Assembled 2D problem. Only absolutely continuous measures are accepted:
/// singular measures on Cartesian grids would require mesh alignment that is
/// not represented here.
pub struct CartesianSaddleProblem {
    x0: f64,
    y0: f64,
    nx: usize,
    ny: usize,
    h: f64,
    /// Dirichlet datum sampled at boundary nodes (same indexing as nodes).
    datum: Vec<f64>,
    boundary: Vec<usize>,
    /// Lumped density load per node.
    c: Vec<f64>,
    l_hat: f64,
}

/// Minimization result on the 2D carrier.
pub struct MinimizeSolution2D {
    pub u: GridFunction2D,
    /// Recovered field per cell.
    pub t: Vec<(f64, f64)>,
    pub report: ConvergenceReport,
}

impl CartesianSaddleProblem {
    pub fn new(
        x0: f64,
        y0: f64,
        nx: usize,
        ny: usize,
        h: f64,
        density: impl Fn(f64, f64) -> f64,
        phi: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 || !(h > 0.0) {
            return Err(Error::Config("need nx, ny >= 2 and h > 0".into()));
        }
        let nodes = (nx + 1) * (ny + 1);
        let mut c = vec![0.0; nodes];
        let mut datum = vec![0.0; nodes];
        let mut boundary = Vec::new();
        let mut sup_density = 0.0f64;
        for j in 0..=ny {
            for i in 0..=nx {
                let idx = j * (nx + 1) + i;
                let x = x0 + i as f64 * h;
                let y = y0 + j as f64 * h;
                let fx = if i == 0 || i == nx { 0.5 } else { 1.0 };
                let fy = if j == 0 || j == ny { 0.5 } else { 1.0 };
                let dens = density(x, y);
                sup_density = sup_density.max(dens.abs());
                c[idx] = dens * h * h * fx * fy;
                if i == 0 || i == nx || j == 0 || j == ny {
                    boundary.push(idx);
                    datum[idx] = phi(x, y);
                }
            }
        }
        // Conservative coercivity gate: |int_E dens| <= |dens|_inf |E| and
        // |E| <= min(Per^2 / 4 pi, |R|) give
        // |mu(E)| / Per(E) <= |dens|_inf sqrt(|R| / 4 pi).
        let area = (nx as f64 * h) * (ny as f64 * h);
        let l_hat = sup_density * (area / (4.0 * std::f64::consts::PI)).sqrt();
        if l_hat >= 1.0 {
            return Err(Error::NotNonExtremal { l_hat });
        }
        Ok(Self { x0, y0, nx, ny, h, datum, boundary, c, l_hat })
    }

    fn nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    fn cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    fn cell_corner(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    pub fn grid_info(&self) -> GridInfo {
        GridInfo::Cartesian { h: self.h, nx: self.nx, ny: self.ny }
    }

    pub fn l_hat(&self) -> f64 {
        self.l_hat
    }

    /// Discrete functional value at a conforming grid function.
    pub fn energy(&self, u: &GridFunction2D) -> Result<f64> {
        if u.nx != self.nx || u.ny != self.ny || (u.h - self.h).abs() > 1e-12 {
            return Err(Error::IncompatibleSampling("grid function does not match carrier".into()));
        }
        Ok(self.energy_values(u.values()))
    }

    fn energy_values(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for cell in 0..self.cells() {
            let (i, j) = self.cell_corner(cell);
            let gx = (v[self.node(i + 1, j)] - v[self.node(i, j)]) / self.h;
            let gy = (v[self.node(i, j + 1)] - v[self.node(i, j)]) / self.h;
            acc += self.h * self.h * (1.0 + gx * gx + gy * gy).sqrt();
        }
        for &b in &self.boundary {
            acc += self.h * (v[b] - self.datum[b]).abs();
        }
        acc += self.c.iter().zip(v).map(|(c, v)| c * v).sum::<f64>();
        acc
    }

    /// Applies the coupling operator: `y = (h dx(v), h dy(v), h v_boundary)`.
    fn apply_b(&self, v: &[f64], y: &mut [f64]) {
        let cells = self.cells();
        for cell in 0..cells {
            let (i, j) = self.cell_corner(cell);
            y[2 * cell] = self.h * (v[self.node(i + 1, j)] - v[self.node(i, j)]);
            y[2 * cell + 1] = self.h * (v[self.node(i, j + 1)] - v[self.node(i, j)]);
        }
        for (k, &b) in self.boundary.iter().enumerate() {
            y[2 * cells + k] = self.h * v[b];
        }
    }

    fn apply_bt(&self, y: &[f64], v: &mut [f64]) {
        v.iter_mut().for_each(|a| *a = 0.0);
        let cells = self.cells();
        for cell in 0..cells {
            let (i, j) = self.cell_corner(cell);
            let wx = y[2 * cell];
            let wy = y[2 * cell + 1];
            v[self.node(i, j)] -= self.h * (wx + wy);
            v[self.node(i + 1, j)] += self.h * wx;
            v[self.node(i, j + 1)] += self.h * wy;
        }
        for (k, &b) in self.boundary.iter().enumerate() {
            v[b] += self.h * y[2 * cells + k];
        }
    }

    /// Feasible dual objective from the current dual point: project onto
    /// the affine constraint `B^T y + c = 0` (conjugate gradient on the
    /// associated graph Laplacian), clip into the constraint boxes, repeat.
    fn certified_dual(&self, y: &[f64]) -> (f64, bool) {
        let cells = self.cells();
        let ny = 2 * cells + self.boundary.len();
        let nv = self.nodes();
        let mut y = y.to_vec();
        let scale = 1.0 + self.c.iter().map(|c| c.abs()).sum::<f64>();
        let mut certified = false;
        for _round in 0..40 {
            // residual = B^T y + c
            let mut res = vec![0.0; nv];
            self.apply_bt(&y, &mut res);
            for (r, c) in res.iter_mut().zip(&self.c) {
                *r += c;
            }
            let res_norm = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
            if res_norm <= 1e-12 * scale {
                certified = true;
                break;
            }
            // Solve (B^T B) z = -res by CG, then y += B z.
            let apply_a = |z: &[f64], out: &mut [f64]| {
                let mut tmp = vec![0.0; ny];
                self.apply_b(z, &mut tmp);
                self.apply_bt(&tmp, out);
            };
            let mut z = vec![0.0; nv];
            let mut r: Vec<f64> = res.iter().map(|x| -x).collect();
            let mut p = r.clone();
            let mut rs: f64 = r.iter().map(|x| x * x).sum();
            let mut ap = vec![0.0; nv];
            for _ in 0..600 {
                if rs.sqrt() <= 1e-14 * scale {
                    break;
                }
                apply_a(&p, &mut ap);
                let denom: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
                if denom <= 0.0 {
                    break;
                }
                let alpha = rs / denom;
                for i in 0..nv {
                    z[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                let rs_new: f64 = r.iter().map(|x| x * x).sum();
                let beta = rs_new / rs;
                rs = rs_new;
                for i in 0..nv {
                    p[i] = r[i] + beta * p[i];
                }
            }
            let mut bz = vec![0.0; ny];
            self.apply_b(&z, &mut bz);
            for (yi, b) in y.iter_mut().zip(&bz) {
                *yi += b;
            }
            // Clip back into the dual constraint sets.
            let mut clipped = false;
            for cell in 0..cells {
                let wx = y[2 * cell];
                let wy = y[2 * cell + 1];
                let norm = (wx * wx + wy * wy).sqrt();
                if norm > 1.0 {
                    y[2 * cell] /= norm;
                    y[2 * cell + 1] /= norm;
                    clipped = true;
                }
            }
            for k in 0..self.boundary.len() {
                let t = y[2 * cells + k];
                if t.abs() > 1.0 {
                    y[2 * cells + k] = t.clamp(-1.0, 1.0);
                    clipped = true;
                }
            }
            if !clipped {
                // Re-check the residual on the next round; if the projection
                // landed inside all boxes we are done after one more pass.
                continue;
            }
        }
        let mut value = 0.0;
        for cell in 0..cells {
            let wx = y[2 * cell];
            let wy = y[2 * cell + 1];
            let w0sq = (1.0 - wx * wx - wy * wy).max(0.0);
            value += self.h * self.h * w0sq.sqrt();
        }
        for (k, &b) in self.boundary.iter().enumerate() {
            value -= self.h * y[2 * cells + k] * self.datum[b];
        }
        (value, certified)
    }

    /// Runs the primal-dual iteration.
    pub fn minimize(&self, params: &MinimizeParams) -> Result<MinimizeSolution2D> {
        let nv = self.nodes();
        let cells = self.cells();
        let nb = self.boundary.len();
        let ny = 2 * cells + nb;

        let norm = operator_norm(nv, ny, |x, y| self.apply_b(x, y), |y, x| self.apply_bt(y, x));
        let sigma = params.step_ratio / norm;
        let tau = 1.0 / (params.step_ratio * norm);

        let mut v = vec![0.0; nv];
        for &b in &self.boundary {
            v[b] = self.datum[b];
        }
        let mut v_bar = v.clone();
        let mut w0 = vec![1.0; cells];
        let mut wx = vec![0.0; cells];
        let mut wy = vec![0.0; cells];
        let mut tau_bnd = vec![0.0; nb];

        let initial_energy = self.energy_values(&v);
        let mut energy = initial_energy;
        let mut gap = f64::INFINITY;
        let mut dual_value = f64::NEG_INFINITY;
        let mut certified = false;
        let mut iters = 0usize;

        while iters < params.max_iter {
            for cell in 0..cells {
                let (i, j) = self.cell_corner(cell);
                let cx = self.h * (v_bar[self.node(i + 1, j)] - v_bar[self.node(i, j)]);
                let cy = self.h * (v_bar[self.node(i, j + 1)] - v_bar[self.node(i, j)]);
                let (p0, px, py) = project_ball3(
                    w0[cell] + sigma * self.h * self.h,
                    wx[cell] + sigma * cx,
                    wy[cell] + sigma * cy,
                );
                w0[cell] = p0;
                wx[cell] = px;
                wy[cell] = py;
            }
            for (k, &b) in self.boundary.iter().enumerate() {
                tau_bnd[k] =
                    (tau_bnd[k] + sigma * self.h * (v_bar[b] - self.datum[b])).clamp(-1.0, 1.0);
            }
            // Primal step: v -= tau (B^T w + c).
            let mut grad = vec![0.0; nv];
            {
                let mut y = vec![0.0; ny];
                for cell in 0..cells {
                    y[2 * cell] = wx[cell];
                    y[2 * cell + 1] = wy[cell];
                }
                y[2 * cells..].copy_from_slice(&tau_bnd);
                self.apply_bt(&y, &mut grad);
            }
            for i in 0..nv {
                let new = v[i] - tau * (grad[i] + self.c[i]);
                v_bar[i] = 2.0 * new - v[i];
                v[i] = new;
            }
            iters += 1;

            if iters % params.check_every == 0 || iters == params.max_iter {
                energy = self.energy_values(&v);
                if energy > 10.0 * initial_energy.abs().max(1.0) {
                    return Err(Error::Diverged { iters, energy, initial: initial_energy });
                }
                let mut y = vec![0.0; ny];
                for cell in 0..cells {
                    y[2 * cell] = wx[cell];
                    y[2 * cell + 1] = wy[cell];
                }
                y[2 * cells..].copy_from_slice(&tau_bnd);
                let (d, ok) = self.certified_dual(&y);
                if d > dual_value {
                    dual_value = d;
                    certified = ok;
                }
                gap = energy - dual_value;
                if gap <= params.tol_gap {
                    break;
                }
            }
        }

        let u = GridFunction2D::new(self.x0, self.y0, self.nx, self.ny, self.h, v)?;
        let t = (0..cells)
            .map(|cell| {
                let wn = (wx[cell] * wx[cell] + wy[cell] * wy[cell]).sqrt();
                let mag = recover_field(w0[cell], wn);
                if wn > 0.0 {
                    (mag * wx[cell] / wn, mag * wy[cell] / wn)
                } else {
                    (0.0, 0.0)
                }
            })
            .collect();
        let report = ConvergenceReport {
            energy,
            gap,
            iters,
            l_hat: self.l_hat,
            grid: self.grid_info(),
            dual_value,
            gap_certified: certified,
            coercivity_margin_min: f64::INFINITY,
        };
        Ok(MinimizeSolution2D { u, t, report })
    }
}
