//! Optimal transport between radial densities on a ball, the
//! Monge-Ampere consistency check, the displacement-convexity inequality,
//! and a brute-force discrete oracle.
//!
//! Between radial densities the quadratic-cost optimal map is the
//! monotone rearrangement `T = F1^{-1} o F0`, where `F_k(r)` is the
//! cumulative mass of `rho_k` on B_r. The map is computed by inverting a
//! composite-Simpson cumulative table, which keeps the pushforward
//! property accurate to solver tolerance. Densities are floored at
//! `tol::DENSITY_FLOOR` before inversion and the number of floored cells
//! is reported on the map.

use std::sync::Arc;

use serde::Serialize;

use crate::densities::ModelDensity;
use crate::error::{Error, Result};
use crate::geometry::{unit_sphere_area, RadialGrid};
use crate::tol;

/// A radial density profile backed by a closure, evaluable anywhere on
/// [0, R]; this is what CDF inversion needs (grid samples alone would
/// limit the map accuracy to the sample spacing).
#[derive(Clone)]
pub struct RadialDensity {
    label: String,
    scale: f64,
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialDensity")
            .field("label", &self.label)
            .field("scale", &self.scale)
            .finish()
    }
}

impl RadialDensity {
    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            scale: 1.0,
            profile: Arc::new(f),
        }
    }

    pub fn uniform(level: f64) -> Self {
        Self::from_fn(format!("uniform({level})"), move |_| level)
    }

    pub fn model(d: &ModelDensity) -> Self {
        let d = d.clone();
        Self::from_fn(format!("mu_{}", d.dim()), move |r| d.density_radial(r))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.scale * (self.profile)(r)
    }

    /// The same profile multiplied by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            label: self.label.clone(),
            scale: self.scale * c,
            profile: Arc::clone(&self.profile),
        }
    }

    /// Mass on B_radius in dimension `dim`, by fine composite Simpson.
    pub fn mass(&self, dim: u32, radius: f64) -> f64 {
        let cells = 16384;
        let area = unit_sphere_area(dim);
        let h = radius / cells as f64;
        let g = |r: f64| area * r.powi(dim as i32 - 1) * self.eval(r);
        let mut acc = 0.0;
        for k in 0..cells {
            let a = k as f64 * h;
            let b = a + h;
            acc += h / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
        }
        acc
    }
}

/// Cumulative-mass table with sub-cell Simpson refinement.
struct Cdf<'a> {
    density: &'a RadialDensity,
    dim: u32,
    radius: f64,
    step: f64,
    cum: Vec<f64>,
    floored_cells: usize,
    /// Midpoint radii of floored cells (capped sample).
    floored_radii: Vec<f64>,
}

impl<'a> Cdf<'a> {
    fn build(density: &'a RadialDensity, dim: u32, radius: f64, cells: usize) -> Self {
        let area = unit_sphere_area(dim);
        let step = radius / cells as f64;
        let mut cum = Vec::with_capacity(cells + 1);
        cum.push(0.0);
        let mut floored_cells = 0;
        let mut floored_radii = Vec::new();
        let g = |r: f64| area * r.powi(dim as i32 - 1) * density.eval(r).max(tol::DENSITY_FLOOR);
        for k in 0..cells {
            let a = k as f64 * step;
            let b = a + step;
            let mid = 0.5 * (a + b);
            if density.eval(mid) < tol::DENSITY_FLOOR {
                floored_cells += 1;
                if floored_radii.len() < 64 {
                    floored_radii.push(mid);
                }
            }
            let inc = step / 6.0 * (g(a) + 4.0 * g(mid) + g(b));
            cum.push(cum.last().unwrap() + inc);
        }
        Self {
            density,
            dim,
            radius,
            step,
            cum,
            floored_cells,
            floored_radii,
        }
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn integrand(&self, r: f64) -> f64 {
        unit_sphere_area(self.dim)
            * r.powi(self.dim as i32 - 1)
            * self.density.eval(r).max(tol::DENSITY_FLOOR)
    }

    /// Cumulative mass at r.
    fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.radius {
            return self.total();
        }
        let k = ((r / self.step) as usize).min(self.cum.len() - 2);
        let a = k as f64 * self.step;
        let w = r - a;
        self.cum[k]
            + w / 6.0 * (self.integrand(a) + 4.0 * self.integrand(a + 0.5 * w) + self.integrand(r))
    }

    /// Radius holding cumulative mass q (clamped to [0, R]).
    fn invert(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        if q >= self.total() {
            return self.radius;
        }
        // locate the cell by binary search on the table
        let mut lo_idx = 0usize;
        let mut hi_idx = self.cum.len() - 1;
        while hi_idx - lo_idx > 1 {
            let mid = (lo_idx + hi_idx) / 2;
            if self.cum[mid] <= q {
                lo_idx = mid;
            } else {
                hi_idx = mid;
            }
        }
        // bisect inside the cell
        let mut lo = lo_idx as f64 * self.step;
        let mut hi = lo + self.step;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut root = 0.5 * (lo + hi);
        // Newton polish: centered-difference derivatives of the node table
        // amplify any leftover inversion jitter by the reciprocal node
        // spacing, so push the residual down to rounding
        for _ in 0..2 {
            let slope = self.integrand(root);
            if slope < 1e-8 {
                break;
            }
            root = (root - (self.eval(root) - q) / slope).clamp(lo, hi);
        }
        root
    }
}

/// The radial optimal map sampled at grid nodes: r_i -> T(r_i),
/// nondecreasing with range inside [0, R].
#[derive(Debug, Clone, Serialize)]
pub struct MonotoneRadialMap {
    pub radii: Vec<f64>,
    pub image: Vec<f64>,
    pub dim: u32,
    pub radius: f64,
    /// max_i |F1(T(r_i)) - F0(r_i)| from the construction.
    pub pushforward_error: f64,
    /// Cells where either density sat below the floor during inversion.
    pub floored_cells: usize,
    /// Midpoint radii of the floored cells (first 64 per density), the
    /// ill-conditioning warning attached to a map built over a vanishing
    /// density interval.
    pub floored_radii: Vec<f64>,
}

impl MonotoneRadialMap {
    /// Monotone-cubic evaluation through the anchors (0, 0) and (R, R)
    /// (equal-mass maps fix both the origin and the boundary).
    pub fn value(&self, r: f64) -> f64 {
        MonotoneInterp::through_anchors(&self.radii, &self.image, self.radius).eval(r)
    }

    /// Inverse map evaluation (the table is monotone).
    pub fn inverse_value(&self, t: f64) -> f64 {
        MonotoneInterp::through_anchors(&self.image, &self.radii, self.radius).eval(t)
    }

    /// Node derivative by second-order differences on the non-uniform node
    /// table (one-sided at the ends), written with divided differences so
    /// nearby values are subtracted before any large coefficient enters.
    pub fn derivative(&self) -> Vec<f64> {
        let x = &self.radii;
        let f = &self.image;
        let n = x.len();
        if n == 2 {
            let secant = (f[1] - f[0]) / (x[1] - x[0]);
            return vec![secant; 2];
        }
        // quadratic through (x[k], f[k]) for k in {i, i+1, i+2},
        // differentiated at `at`
        let three_point = |i: usize, at: f64| -> f64 {
            let h1 = x[i + 1] - x[i];
            let h2 = x[i + 2] - x[i + 1];
            let s1 = (f[i + 1] - f[i]) / h1;
            let s2 = (f[i + 2] - f[i + 1]) / h2;
            let dd = (s2 - s1) / (h1 + h2);
            s1 + dd * ((at - x[i]) + (at - x[i + 1]))
        };
        let mut out = vec![0.0; n];
        out[0] = three_point(0, x[0]);
        out[n - 1] = three_point(n - 3, x[n - 1]);
        for i in 1..n - 1 {
            out[i] = three_point(i - 1, x[i]);
        }
        out
    }

    pub fn csv_header() -> &'static str {
        "r,T"
    }

    pub fn to_csv_rows(&self) -> Vec<String> {
        self.radii
            .iter()
            .zip(&self.image)
            .map(|(r, t)| format!("{r:.17e},{t:.17e}"))
            .collect()
    }
}

/// Shape-preserving cubic interpolation (Fritsch-Carlson slopes) of a
/// monotone table.
struct MonotoneInterp {
    xs: Vec<f64>,
    fs: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneInterp {
    /// Build from a node table, prepending (0, 0) and appending
    /// (radius, radius); nearly-duplicate abscissae are dropped.
    fn through_anchors(xs_in: &[f64], fs_in: &[f64], radius: f64) -> Self {
        let eps = 1e-13 * radius.max(1.0);
        let mut xs = vec![0.0];
        let mut fs = vec![0.0];
        for (&x, &f) in xs_in.iter().zip(fs_in) {
            if x > xs.last().unwrap() + eps && x < radius - eps {
                xs.push(x);
                fs.push(f);
            }
        }
        xs.push(radius);
        fs.push(radius);
        Self::new(xs, fs)
    }

    fn new(xs: Vec<f64>, fs: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2, "interpolation needs at least two nodes");
        let h: Vec<f64> = xs.windows(2).map(|p| p[1] - p[0]).collect();
        let d: Vec<f64> = fs
            .windows(2)
            .zip(&h)
            .map(|(p, &hh)| (p[1] - p[0]) / hh)
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = end_slope(
            h[0],
            h.get(1).copied().unwrap_or(h[0]),
            d[0],
            d.get(1).copied().unwrap_or(d[0]),
        );
        slopes[n - 1] = end_slope(
            h[n - 2],
            if n >= 3 { h[n - 3] } else { h[n - 2] },
            d[n - 2],
            if n >= 3 { d[n - 3] } else { d[n - 2] },
        );
        for i in 1..n - 1 {
            slopes[i] = if d[i - 1] * d[i] <= 0.0 {
                0.0
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                (w1 + w2) / (w1 / d[i - 1] + w2 / d[i])
            };
        }
        Self { xs, fs, slopes }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.fs[0];
        }
        if x >= self.xs[n - 1] {
            return self.fs[n - 1];
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.xs[hi] - self.xs[lo];
        let t = (x - self.xs[lo]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.fs[lo]
            + h10 * h * self.slopes[lo]
            + h01 * self.fs[hi]
            + h11 * h * self.slopes[hi]
    }
}

/// One-sided boundary slope with the standard monotonicity clamps.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Number of CDF cells used for a grid of the given size.
fn cdf_cells(grid_len: usize) -> usize {
    (16 * grid_len).max(4096)
}

/// Compute the monotone rearrangement pushing `rho0` to `rho1` on the
/// grid ball. Masses must agree to `tol::MASS_MATCH` (relative).
pub fn radial_brenier(
    rho0: &RadialDensity,
    rho1: &RadialDensity,
    grid: &RadialGrid,
) -> Result<MonotoneRadialMap> {
    radial_brenier_with_cells(rho0, rho1, grid, cdf_cells(grid.len()))
}

/// Same with explicit CDF resolution (the doubled-resolution oracle).
pub fn radial_brenier_with_cells(
    rho0: &RadialDensity,
    rho1: &RadialDensity,
    grid: &RadialGrid,
    cells: usize,
) -> Result<MonotoneRadialMap> {
    let cdf0 = Cdf::build(rho0, grid.dim(), grid.radius(), cells);
    let cdf1 = Cdf::build(rho1, grid.dim(), grid.radius(), cells);
    let (m0, m1) = (cdf0.total(), cdf1.total());
    if (m0 - m1).abs() > tol::MASS_MATCH * m0.max(m1).max(1.0) {
        return Err(Error::MassMismatch {
            mass0: m0,
            mass1: m1,
        });
    }
    let ratio = m1 / m0;
    let mut image = Vec::with_capacity(grid.len());
    let mut pushforward_error = 0.0f64;
    let mut prev = 0.0f64;
    for &r in grid.nodes() {
        let q = cdf0.eval(r) * ratio;
        let mut t = cdf1.invert(q).clamp(0.0, grid.radius());
        if t < prev {
            if prev - t > 1e-9 * grid.radius() {
                return Err(Error::Degenerate(format!(
                    "computed map lost monotonicity at r = {r}"
                )));
            }
            t = prev;
        }
        pushforward_error = pushforward_error.max((cdf1.eval(t) - q).abs());
        image.push(t);
        prev = t;
    }
    if pushforward_error > 1e-8 {
        return Err(Error::Degenerate(format!(
            "pushforward verification failed: residual {pushforward_error:.3e}"
        )));
    }
    let mut floored_radii = cdf0.floored_radii.clone();
    floored_radii.extend_from_slice(&cdf1.floored_radii);
    Ok(MonotoneRadialMap {
        radii: grid.nodes().to_vec(),
        image,
        dim: grid.dim(),
        radius: grid.radius(),
        pushforward_error,
        floored_cells: cdf0.floored_cells + cdf1.floored_cells,
        floored_radii,
    })
}

/// Sup-norm residual of the radial Monge-Ampere equation
/// `rho0(r) = rho1(T) T' (T/r)^{n-1}` with T' from centered differences
/// on the node table.
pub fn monge_ampere_residual(
    map: &MonotoneRadialMap,
    rho0: &RadialDensity,
    rho1: &RadialDensity,
) -> f64 {
    let dt = map.derivative();
    let mut sup = 0.0f64;
    for ((&r, &t), &tp) in map.radii.iter().zip(&map.image).zip(&dt) {
        let ratio = (t / r).powi(map.dim as i32 - 1);
        let res = rho0.eval(r) - rho1.eval(t) * tp * ratio;
        sup = sup.max(res.abs());
    }
    sup
}

/// Both sides of the displacement-convexity inequality
/// `int rho1^{1-1/n} <= (1/n) int rho0^{1-1/n} div T`.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma1Report {
    pub n: u32,
    pub radius: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs - lhs; nonnegative up to quadrature tolerance.
    pub slack: f64,
    pub pushforward_error: f64,
}

impl Lemma1Report {
    pub fn csv_header() -> &'static str {
        "n,R,lhs,rhs,slack"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:.17e},{:.17e},{:.6e}",
            self.n, self.radius, self.lhs, self.rhs, self.slack
        )
    }
}

/// Verify the inequality for one pair of equal-mass radial densities.
///
/// `T'` is evaluated through the Monge-Ampere identity
/// `T' = rho0 r^{n-1} / (rho1(T) T^{n-1})` (exact for the rearrangement),
/// so the slack isolates the arithmetic-geometric-mean gap rather than
/// differencing noise.
pub fn lemma1_check(
    rho0: &RadialDensity,
    rho1: &RadialDensity,
    grid: &RadialGrid,
) -> Result<Lemma1Report> {
    let map = radial_brenier(rho0, rho1, grid)?;
    let nf = grid.dim() as f64;
    let power = 1.0 - 1.0 / nf;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (k, (&r, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        let t = map.image[k];
        let r0 = rho0.eval(r).max(tol::DENSITY_FLOOR);
        let r1t = rho1.eval(t).max(tol::DENSITY_FLOOR);
        let tp = r0 * r.powi(grid.dim() as i32 - 1) / (r1t * t.powi(grid.dim() as i32 - 1));
        let div_t = tp + (nf - 1.0) * t / r;
        lhs += w * rho1.eval(r).max(0.0).powf(power);
        rhs += w * r0.powf(power) * div_t / nf;
    }
    Ok(Lemma1Report {
        n: grid.dim(),
        radius: grid.radius(),
        lhs,
        rhs,
        slack: rhs - lhs,
        pushforward_error: map.pushforward_error,
    })
}

/// A generator of equal-mass strictly positive radial pairs for the
/// inequality suites.
pub fn random_density_pair(
    rng: &mut rand_chacha::ChaCha8Rng,
    dim: u32,
    radius: f64,
) -> (RadialDensity, RadialDensity) {
    use rand::Rng;
    let mut make = |tag: usize| {
        let count = rng.gen_range(1..=3usize);
        let base = rng.gen_range(0.1..0.5);
        let bumps: Vec<(f64, f64, f64)> = (0..count)
            .map(|_| {
                (
                    rng.gen_range(0.0..0.8 * radius),
                    rng.gen_range(0.2..1.5),
                    rng.gen_range(0.05..0.3) * radius,
                )
            })
            .collect();
        RadialDensity::from_fn(format!("random{tag}"), move |r| {
            base + bumps
                .iter()
                .map(|(c, a, s)| a * (-((r - c) * (r - c)) / (2.0 * s * s)).exp())
                .sum::<f64>()
        })
    };
    let rho0 = make(0);
    let rho1 = make(1);
    let m0 = rho0.mass(dim, radius);
    let m1 = rho1.mass(dim, radius);
    (rho0, rho1.scaled(m0 / m1))
}

/// Brute-force optimal assignment between two equal-size point clouds
/// under quadratic cost, by permutation enumeration.
#[derive(Debug, Clone, Serialize)]
pub struct DiscretePairing {
    /// `assignment[i]` is the target index matched to source i.
    pub assignment: Vec<usize>,
    /// sum of |x_i - y_sigma(i)|^2 / 2 at the optimum.
    pub cost: f64,
}

pub fn discrete_ot_oracle(source: &[[f64; 2]], target: &[[f64; 2]]) -> Result<DiscretePairing> {
    const LIMIT: usize = 8;
    if source.len() != target.len() {
        return Err(Error::ShapeMismatch {
            expected: source.len(),
            got: target.len(),
        });
    }
    if source.len() > LIMIT {
        return Err(Error::TooManyPoints {
            got: source.len(),
            limit: LIMIT,
        });
    }
    if source.is_empty() {
        return Err(Error::Domain("point clouds must be nonempty".into()));
    }
    let n = source.len();
    let pair_cost = |i: usize, j: usize| -> f64 {
        let dx = source[i][0] - target[j][0];
        let dy = source[i][1] - target[j][1];
        0.5 * (dx * dx + dy * dy)
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let cost_of =
        |p: &[usize]| -> f64 { p.iter().enumerate().map(|(i, &j)| pair_cost(i, j)).sum() };
    let mut best_cost = cost_of(&perm);
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let cost = cost_of(&perm);
            if cost < best_cost {
                best_cost = cost;
                best = perm.clone();
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(DiscretePairing {
        assignment: best,
        cost: best_cost,
    })
}
