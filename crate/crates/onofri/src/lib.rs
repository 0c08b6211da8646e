//! Numerical verification of the mass-transport duality between
//! Onofri-type energies and renormalized free energies on balls.
//!
//! The crate evaluates, on quadrature grids over B_R in R^n (and on the
//! unit sphere), the two dual functionals
//!
//! ```text
//! I_R(u)   = (1/beta(n)) int H_n(u, mu_n) + int u dmu_n
//! J_R(rho) = alpha(n) int rho^{(n-1)/n} - int |y|^{n/(n-1)} rho
//! ```
//!
//! together with everything needed to certify the duality
//! `sup J_R(rho) - J_R(mu_n) = inf I_R(u) = 0` at desk scale: the model
//! density and its closed-form identities, radial Brenier maps with a
//! brute-force transport oracle, the epsilon optimization behind the
//! n-dimensional proof, the rescaled fast diffusion flow whose stationary
//! state realizes the maximizer, and constrained minimization of I_R with
//! its Euler-Lagrange residual.
//!
//! Every inequality the library claims is backed by a test at a stated
//! tolerance; `tests/acceptance.rs` runs the full gate.

pub mod densities;
pub mod duality;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod pde;
pub mod tol;
pub mod transport;

pub use densities::{DerivativeMode, IdentityRow, ModelDensity, ResidualReport};
pub use error::{Error, Result};
pub use geometry::{DiskGrid, RadialGrid, SphereGrid};
