//! Plain 2D grid functions, the Cartesian carrier for absolutely continuous
//! densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node-based grid function on the rectangle `[x0, x0 + nx h] x [y0, y0 + ny h]`
/// with `nx x ny` cells and square spacing `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction2D {
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    values: Vec<f64>,
}

impl GridFunction2D {
    pub fn new(x0: f64, y0: f64, nx: usize, ny: usize, h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidProfile(format!("mesh spacing h = {h} must be > 0")));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidProfile("grid needs at least one cell per axis".into()));
        }
        let nodes = (nx + 1) * (ny + 1);
        if values.len() != nodes {
            return Err(Error::InvalidProfile(format!(
                "value array has {} entries, node count is {}",
                values.len(),
                nodes
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidProfile("values must be finite".into()));
        }
        Ok(Self { x0, y0, nx, ny, h, values })
    }

    pub fn zeros(x0: f64, y0: f64, nx: usize, ny: usize, h: f64) -> Result<Self> {
        Self::new(x0, y0, nx, ny, h, vec![0.0; (nx + 1) * (ny + 1)])
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.values[k] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn node_x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn node_y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }

    /// Forward-difference gradient on cell `(i, j)`.
    pub fn cell_gradient(&self, i: usize, j: usize) -> (f64, f64) {
        let gx = (self.get(i + 1, j) - self.get(i, j)) / self.h;
        let gy = (self.get(i, j + 1) - self.get(i, j)) / self.h;
        (gx, gy)
    }

    pub fn rectangle_area(&self) -> f64 {
        (self.nx as f64 * self.h) * (self.ny as f64 * self.h)
    }
}
