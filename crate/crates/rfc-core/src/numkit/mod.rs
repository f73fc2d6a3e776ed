//! Numerical backbone: matrices, eigenvalues, polynomials, rational-function
//! reconstruction and fixed-step linear integration.

pub mod eig;
pub mod matrix;
pub mod ode;
pub mod poly;
pub mod ratfit;
pub mod rng;

pub use eig::eigenvalues;
pub use matrix::{resolvent_apply, Matrix};
pub use ode::{integrate_lti, rk4_step, StateTrace, RK4_STEP_BUDGET};
pub use poly::{poly_roots, Poly};
pub use ratfit::{rational_fit, RationalFit, RationalTf};
pub use rng::SplitMix64;
