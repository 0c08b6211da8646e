//! Shared numerical thresholds.
//!
//! Every inequality check and constraint guard in the crate reads its
//! tolerance from here rather than from scattered literals. Quadrature on
//! the default grids resolves smooth integrands to well below 1e-12, so
//! the inequality floors leave two to four orders of headroom.

/// A field counts as zero-trace when no boundary sample exceeds this.
pub const ZERO_TRACE: f64 = 1e-12;

/// Cached density mass must agree with fresh quadrature to this.
pub const MASS_CACHE: f64 = 1e-10;

/// Relative mass agreement required of a transport pair.
pub const MASS_MATCH: f64 = 1e-10;

/// Floor for duality gaps, deficits, and corollary slacks.
pub const GAP_FLOOR: f64 = -1e-8;

/// Floor for the displacement-convexity inequality slack.
pub const LEMMA1_FLOOR: f64 = -1e-6;

/// Post-solve residual allowed on the exponential constraint.
pub const CONSTRAINT_RESIDUAL: f64 = 1e-10;

/// Amplitude-scaling roots outside [-SCALE_RANGE, SCALE_RANGE] are rejected.
pub const SCALE_RANGE: f64 = 50.0;

/// Random test fields are clamped so max|u| stays below this.
pub const AMPLITUDE_CAP: f64 = 30.0;

/// Integral identities must close to this at default resolution.
pub const IDENTITY: f64 = 1e-8;

/// Identities between dimension-dependent constants must close to this.
pub const CONSTANT_IDENTITY: f64 = 1e-12;

/// Densities are floored here before CDF inversion and flux evaluation.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Mass drift allowed over a full finite-volume trajectory.
pub const MASS_DRIFT: f64 = 1e-10;
