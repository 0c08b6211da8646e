//! The Onofri functional on the unit sphere with normalized measure:
//!
//! ```text
//! J(u) = 1/4 int |grad u|^2 domega + int u domega - log int e^u domega
//! ```
//!
//! J(0) = 0, J is invariant under adding constants (the linear and log
//! terms shift by the same amount), and the infimum over smooth fields is
//! zero.

use crate::error::{Error, Result};
use crate::geometry::SphereGrid;

/// A field on a sphere grid with its tangential gradient at the nodes.
#[derive(Debug, Clone)]
pub struct SphereField {
    values: Vec<f64>,
    gradient: Vec<[f64; 3]>,
}

impl SphereField {
    pub fn new(values: Vec<f64>, gradient: Vec<[f64; 3]>) -> Self {
        assert_eq!(values.len(), gradient.len());
        Self { values, gradient }
    }

    pub fn zero(grid: &SphereGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            gradient: vec![[0.0; 3]; grid.len()],
        }
    }

    /// Sample `f` and its tangential gradient (the caller supplies the
    /// ambient gradient; the normal component is projected out here).
    pub fn from_fn_with_grad(
        grid: &SphereGrid,
        f: impl Fn(&[f64; 3]) -> f64,
        ambient_grad: impl Fn(&[f64; 3]) -> [f64; 3],
    ) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        let mut gradient = Vec::with_capacity(grid.len());
        for p in grid.points() {
            values.push(f(p));
            let g = ambient_grad(p);
            let dot = g[0] * p[0] + g[1] * p[1] + g[2] * p[2];
            gradient.push([g[0] - dot * p[0], g[1] - dot * p[1], g[2] - dot * p[2]]);
        }
        Self { values, gradient }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The same field shifted by a constant (gradient unchanged).
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
            gradient: self.gradient.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Evaluate the sphere functional.
pub fn sphere_onofri(u: &SphereField, grid: &SphereGrid) -> Result<f64> {
    if u.values.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: u.values.len(),
        });
    }
    if u.max_abs() > 700.0 {
        return Err(Error::Range(
            "exp would overflow; rescale the field amplitude".into(),
        ));
    }
    let mut dirichlet = 0.0;
    let mut mean = 0.0;
    let mut exp_mean = 0.0;
    for ((v, g), &w) in u.values.iter().zip(&u.gradient).zip(grid.weights()) {
        dirichlet += w * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
        mean += w * v;
        exp_mean += w * v.exp();
    }
    Ok(0.25 * dirichlet + mean - exp_mean.ln())
}
