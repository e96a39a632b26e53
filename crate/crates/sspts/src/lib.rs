//! Explicit two-derivative multistage (MDRK) time integrators and their
//! strong-stability-preserving analysis.
//!
//! An s-stage two-derivative method advances `u' = F(u)` using both `F` and an
//! approximation `Ft ~ u_tt`:
//!
//! ```text
//! y_i     = u^n + dt * sum_j a_ij F(y_j) + dt^2 * sum_j ahat_ij Ft(y_j)
//! u^{n+1} = u^n + dt * sum_j b_j  F(y_j) + dt^2 * sum_j bhat_j  Ft(y_j)
//! ```
//!
//! The crate provides:
//!
//! * [`tableau`] -- the coefficient data model, block matrix form, Shu-Osher
//!   conversion, and structural validation,
//! * [`order`] -- the full order-condition system through order six plus the
//!   stage-order residuals,
//! * [`ssp`] -- SSP certification against forward-Euler/Taylor-series base
//!   conditions (`C_TS`) and forward-Euler/second-derivative conditions (`C_SD`),
//! * [`methods`] -- a registry of reference tableaus and tableau file I/O,
//! * [`optimizer`] -- numerical search for tableaus maximizing `C_TS(K)`,
//! * [`integrator`] -- the generic stepper with per-stage observation hooks,
//! * [`spatial`] -- 1D semi-discretizations (upwind, WENO5, shallow water),
//! * [`experiments`] -- TVD/positivity sweep harnesses and convergence studies.

pub mod experiments;
pub mod integrator;
mod linalg;
pub mod methods;
pub mod optimizer;
pub mod order;
pub mod spatial;
pub mod ssp;
pub mod tableau;

pub use tableau::{BlockForm, ShuOsherForm, Tableau, Variant};
