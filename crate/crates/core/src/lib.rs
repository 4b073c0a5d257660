//! Robin-Robin domain decomposition for linear parabolic problems.
//!
//! The heat equation `u_t - div(alpha grad u) = f` with homogeneous initial and
//! boundary data is discretized with P1 finite elements and a theta scheme on a
//! rectangle split by a straight interface into two subdomains. The coupled
//! problem is solved either by alternating Robin subdomain solves or by the
//! equivalent Peaceman-Rachford iteration on space-time Steklov-Poincare
//! operators, and the `fracnorm` module provides the discrete fractional
//! Sobolev machinery used to inspect coercivity of the parabolic form.

pub mod assembly;
pub mod error;
pub mod factor;
pub mod fracnorm;
pub mod interface;
pub mod labcli;
pub mod mesh;
pub mod sparse;
pub mod subsolve;

pub use error::{Error, Result};
