//! Synthesis, analysis and simulation of observer-based robust force
//! controllers in state space.
//!
//! The crate builds servo plant models with spring-damper environment
//! coupling, synthesizes disturbance and reaction-torque observers from
//! pluggable disturbance models, assembles the augmented open/inner/outer
//! loops, reconstructs the loop transfer functions numerically from the
//! resolvent, and simulates step responses and estimation experiments.

pub mod analysis;
pub mod error;
pub mod loopsys;
pub mod numkit;
pub mod observer;
pub mod plant;
pub mod sim;

pub use error::{Error, Result, Warning};
