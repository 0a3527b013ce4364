//! Numerical laboratory for the non-parametric mean curvature equation with
//! measure-valued right-hand side on annular domains.
//!
//! The crate is organized around a handful of building blocks:
//!
//! * [`profile`] — one-dimensional radial BV profiles (piecewise-linear cell
//!   data plus an explicit jump set) with total variation, graph area,
//!   truncation and representative calculus; plain 2D grid functions.
//! * [`measure`] — signed radial measures (spherical atoms plus a piecewise
//!   density), their Hahn split, and the admissibility / non-extremality
//!   checkers that gate the variational solvers.
//! * [`radial`] — closed-form radial solutions on annuli: per-interval flux
//!   coefficients, jump classification windows, profile quadrature, Dirichlet
//!   shooting and the two-sphere non-uniqueness family.
//! * [`minimize`] — discrete minimization of the capillary functional by a
//!   first-order primal-dual saddle-point iteration, on a radial carrier with
//!   explicit jump slots and on a 2D Cartesian carrier.
//! * [`certify`] — residual checks of the weak-solution identities, the field
//!   formula, the midpoint uniqueness test and the maximum-principle
//!   comparator.
//! * [`approx`] — measure mollification, Gamma-convergence experiments, and
//!   smoothing constructions for profiles.
//!
//! All operations are pure functions of immutable inputs and safe to call
//! concurrently. Data-parallel sweeps (test-set enumeration, delta sweeps,
//! family members) use rayon when the default `parallel` feature is enabled
//! and fall back to sequential iteration otherwise.

pub mod approx;
pub mod certify;
pub mod error;
pub mod exec;
pub mod geom;
pub mod grid2d;
pub mod measure;
pub mod minimize;
pub mod mollifier;
pub mod profile;
pub mod quad;
pub mod radial;

pub use error::{Error, Result};
