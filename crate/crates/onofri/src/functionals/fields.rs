//! Seeded random test fields: Gaussian bump sums under a polynomial
//! cutoff that enforces an exact zero boundary trace, with analytic
//! gradients so functional evaluations are limited only by quadrature.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DensityFunction, GridFunction, RadialDensityField, RadialField, SphereField};
use crate::densities::ModelDensity;
use crate::error::Result;
use crate::geometry::{DiskGrid, RadialGrid, SphereGrid};

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(1 - r^2/rho^2)_+^2` and its radial derivative; C^1 at the support
/// radius and exactly zero beyond it.
fn cutoff(r: f64, support: f64) -> (f64, f64) {
    let q = 1.0 - r * r / (support * support);
    if q <= 0.0 {
        return (0.0, 0.0);
    }
    (q * q, -4.0 * r * q / (support * support))
}

/// A sum of planar Gaussian bumps multiplied by the cutoff.
#[derive(Debug, Clone)]
pub struct DiskBumpField {
    bumps: Vec<([f64; 2], f64, f64)>, // center, amplitude, 1/(2 sigma^2)
    support: f64,
}

impl DiskBumpField {
    /// Draw 2..=5 bumps with mixed-sign amplitudes inside `0.6 * support`.
    /// Redraws until the field genuinely takes both signs, so amplitude
    /// scaling onto the exponential constraint has a nontrivial root.
    pub fn random(rng: &mut ChaCha8Rng, support: f64) -> Self {
        for _ in 0..50 {
            let candidate = Self::draw(rng, support);
            if candidate.takes_both_signs() {
                return candidate;
            }
        }
        Self::draw(rng, support)
    }

    fn draw(rng: &mut ChaCha8Rng, support: f64) -> Self {
        let count = rng.gen_range(2..=5usize);
        let mut bumps = Vec::with_capacity(count);
        for k in 0..count {
            let rr = support * 0.6 * rng.gen::<f64>().sqrt();
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp = rng.gen_range(0.15..0.6)
                * if k == 0 {
                    1.0
                } else if k == 1 {
                    -1.0
                } else if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                };
            let sigma = rng.gen_range(0.18..0.35) * support;
            bumps.push(([rr * th.cos(), rr * th.sin()], amp, 0.5 / (sigma * sigma)));
        }
        Self { bumps, support }
    }

    fn takes_both_signs(&self) -> bool {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 1..24 {
            let r = self.support * i as f64 / 24.0;
            for j in 0..24 {
                let t = std::f64::consts::TAU * j as f64 / 24.0;
                let v = self.value(r * t.cos(), r * t.sin());
                min = min.min(v);
                max = max.max(v);
            }
        }
        min < -0.05 && max > 0.05
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let r = (x * x + y * y).sqrt();
        let (c, _) = cutoff(r, self.support);
        if c == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for (ctr, a, k) in &self.bumps {
            let dx = x - ctr[0];
            let dy = y - ctr[1];
            s += a * (-(dx * dx + dy * dy) * k).exp();
        }
        s * c
    }

    pub fn grad(&self, x: f64, y: f64) -> (f64, f64) {
        let r = (x * x + y * y).sqrt();
        let (c, dc) = cutoff(r, self.support);
        if c == 0.0 && dc == 0.0 {
            return (0.0, 0.0);
        }
        let mut s = 0.0;
        let mut sx = 0.0;
        let mut sy = 0.0;
        for (ctr, a, k) in &self.bumps {
            let dx = x - ctr[0];
            let dy = y - ctr[1];
            let e = a * (-(dx * dx + dy * dy) * k).exp();
            s += e;
            sx += -2.0 * k * dx * e;
            sy += -2.0 * k * dy * e;
        }
        let (ux, uy) = if r > 0.0 {
            (dc * x / r, dc * y / r)
        } else {
            (0.0, 0.0)
        };
        (sx * c + s * ux, sy * c + s * uy)
    }

    pub fn sample(&self, grid: &DiskGrid) -> GridFunction {
        GridFunction::from_xy_fn_with_grad(grid, |x, y| self.value(x, y), |x, y| self.grad(x, y))
    }
}

/// Radial bump profile: symmetrized Gaussians (so the slope vanishes at
/// the origin) under the same cutoff.
#[derive(Debug, Clone)]
pub struct RadialBumpField {
    bumps: Vec<(f64, f64, f64)>, // center radius, amplitude, 1/(2 sigma^2)
    support: f64,
}

impl RadialBumpField {
    /// Radial analogue of [`DiskBumpField::random`], with the same
    /// both-signs guarantee.
    pub fn random(rng: &mut ChaCha8Rng, support: f64) -> Self {
        for _ in 0..50 {
            let candidate = Self::draw(rng, support);
            let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 1..96 {
                let v = candidate.value(support * i as f64 / 96.0);
                min = min.min(v);
                max = max.max(v);
            }
            if min < -0.05 && max > 0.05 {
                return candidate;
            }
        }
        Self::draw(rng, support)
    }

    fn draw(rng: &mut ChaCha8Rng, support: f64) -> Self {
        let count = rng.gen_range(2..=5usize);
        let mut bumps = Vec::with_capacity(count);
        for k in 0..count {
            let c = rng.gen_range(0.0..0.6 * support);
            let amp = rng.gen_range(0.15..0.6)
                * if k == 0 {
                    1.0
                } else if k == 1 {
                    -1.0
                } else if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                };
            let sigma = rng.gen_range(0.15..0.3) * support;
            bumps.push((c, amp, 0.5 / (sigma * sigma)));
        }
        Self { bumps, support }
    }

    pub fn value(&self, r: f64) -> f64 {
        let (c, _) = cutoff(r, self.support);
        if c == 0.0 {
            return 0.0;
        }
        self.raw(r) * c
    }

    pub fn slope(&self, r: f64) -> f64 {
        let (c, dc) = cutoff(r, self.support);
        if c == 0.0 && dc == 0.0 {
            return 0.0;
        }
        self.raw_slope(r) * c + self.raw(r) * dc
    }

    fn raw(&self, r: f64) -> f64 {
        self.bumps
            .iter()
            .map(|(c, a, k)| a * ((-(r - c) * (r - c) * k).exp() + (-(r + c) * (r + c) * k).exp()))
            .sum()
    }

    fn raw_slope(&self, r: f64) -> f64 {
        self.bumps
            .iter()
            .map(|(c, a, k)| {
                a * (-2.0 * k * (r - c) * (-(r - c) * (r - c) * k).exp()
                    - 2.0 * k * (r + c) * (-(r + c) * (r + c) * k).exp())
            })
            .sum()
    }

    pub fn sample(&self, grid: &RadialGrid) -> RadialField {
        RadialField::from_fn_with_derivative(grid, |r| self.value(r), |r| self.slope(r))
    }
}

/// Random positive disk density: a floor plus squared bumps.
pub fn random_disk_density(rng: &mut ChaCha8Rng, grid: &DiskGrid) -> Result<DensityFunction> {
    let field = DiskBumpField::random(rng, grid.radius());
    let floor = rng.gen_range(0.05..0.3);
    DensityFunction::from_xy_fn(grid, |x, y| {
        let v = field.value(x, y);
        floor + v * v
    })
}

/// Random strictly positive radial density.
pub fn random_radial_density(
    rng: &mut ChaCha8Rng,
    grid: &RadialGrid,
) -> Result<RadialDensityField> {
    let field = RadialBumpField::random(rng, grid.radius());
    let floor = rng.gen_range(0.05..0.3);
    RadialDensityField::from_fn(grid, |r| {
        let v = field.value(r);
        floor + v * v
    })
}

/// Random smooth sphere field: exponential caps around random directions,
/// with the analytic tangential gradient.
pub fn random_sphere_field(rng: &mut ChaCha8Rng, grid: &SphereGrid) -> SphereField {
    let count = rng.gen_range(2..=5usize);
    let mut caps = Vec::with_capacity(count);
    for _ in 0..count {
        let mut q = [0.0f64; 3];
        loop {
            for qk in q.iter_mut() {
                *qk = rng.gen_range(-1.0..1.0);
            }
            let n2: f64 = q.iter().map(|v| v * v).sum();
            if n2 > 1e-3 && n2 < 1.0 {
                let n = n2.sqrt();
                q.iter_mut().for_each(|v| *v /= n);
                break;
            }
        }
        let amp = rng.gen_range(0.1..0.8) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let kappa = rng.gen_range(1.0..6.0);
        caps.push((q, amp, kappa));
    }
    sphere_cap_field(grid, &caps)
}

/// Evaluate a cap sum `sum a_i exp(kappa_i (p.q_i - 1))` and its
/// tangential gradient on the grid.
pub fn sphere_cap_field(grid: &SphereGrid, caps: &[([f64; 3], f64, f64)]) -> SphereField {
    let mut values = Vec::with_capacity(grid.len());
    let mut gradient = Vec::with_capacity(grid.len());
    for p in grid.points() {
        let mut v = 0.0;
        let mut g = [0.0f64; 3];
        for (q, a, kappa) in caps {
            let dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
            let e = a * (kappa * (dot - 1.0)).exp();
            v += e;
            for k in 0..3 {
                // tangential part of kappa * e * q
                g[k] += kappa * e * (q[k] - dot * p[k]);
            }
        }
        values.push(v);
        gradient.push(g);
    }
    SphereField::new(values, gradient)
}

/// The model density written for evaluation at arbitrary points, used by
/// generators that need a strictly positive reference.
pub fn model_density_field(grid: &DiskGrid, d: &ModelDensity) -> Result<DensityFunction> {
    DensityFunction::model(grid, d)
}
