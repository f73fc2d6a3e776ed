//! Servo plant models and the spring-damper environment coupling.
//!
//! The exact, nominal and identified models share one rigid-body structure:
//! `J qdd = u - tau` with an optional viscous term, giving
//! `A = [[0, 1], [0, -b/J]]` and `B = D = [[0], [1/J]]`. The environment
//! contributes `tau_int = K_env q + D_env qdot`, which can be folded into the
//! plant A-matrix so that loop analyses see the contact dynamics.

use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Exact, nominal and identified inertias with optional viscous coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoParams {
    pub j_exact: f64,
    pub j_nominal: f64,
    pub j_identified: f64,
    pub b_exact: f64,
    pub b_nominal: f64,
    pub b_identified: f64,
}

impl ServoParams {
    /// Rigid-body parameters (no viscous friction).
    pub fn rigid(j_exact: f64, j_nominal: f64, j_identified: f64) -> Result<Self> {
        Self::new(j_exact, j_nominal, j_identified, 0.0, 0.0, 0.0)
    }

    pub fn new(
        j_exact: f64,
        j_nominal: f64,
        j_identified: f64,
        b_exact: f64,
        b_nominal: f64,
        b_identified: f64,
    ) -> Result<Self> {
        for (name, j) in [
            ("J_m", j_exact),
            ("J_mn", j_nominal),
            ("J_mi", j_identified),
        ] {
            if !(j.is_finite() && j > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {j}")));
            }
        }
        for (name, b) in [
            ("b_m", b_exact),
            ("b_mn", b_nominal),
            ("b_mi", b_identified),
        ] {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Parameter(format!(
                    "{name} must be non-negative, got {b}"
                )));
            }
        }
        Ok(ServoParams {
            j_exact,
            j_nominal,
            j_identified,
            b_exact,
            b_nominal,
            b_identified,
        })
    }
}

/// Which servo model a matrix set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelVariant {
    Exact,
    Nominal,
    Identified,
}

/// Spring-damper environment in contact with the servo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    /// D_env, N m s / rad.
    pub damping: f64,
    /// K_env, N m / rad.
    pub stiffness: f64,
}

impl Environment {
    pub fn new(damping: f64, stiffness: f64) -> Result<Self> {
        if !(damping.is_finite() && damping >= 0.0) {
            return Err(Error::Parameter(format!(
                "D_env must be non-negative, got {damping}"
            )));
        }
        if !(stiffness.is_finite() && stiffness >= 0.0) {
            return Err(Error::Parameter(format!(
                "K_env must be non-negative, got {stiffness}"
            )));
        }
        Ok(Environment { damping, stiffness })
    }

    /// Free motion: no contact.
    pub fn free() -> Self {
        Environment {
            damping: 0.0,
            stiffness: 0.0,
        }
    }
}

/// State-space matrices of one servo model variant, state `x = [q, qdot]`.
///
/// The input and disturbance columns coincide for every variant, and the
/// inertia/viscous values used to build the matrices are kept for consumers
/// that need them (observer synthesis bookkeeping, identified-disturbance
/// reconstruction).
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrices {
    pub a: Matrix,
    pub b: Matrix,
    pub d: Matrix,
    pub inertia: f64,
    pub viscous: f64,
}

/// Builds `A = [[0, 1], [0, -b/J]]`, `B = D = [[0], [1/J]]` for the chosen
/// variant. With zero viscous coefficient this is the rigid-body model.
pub fn build_servo_matrices(p: &ServoParams, variant: ModelVariant) -> StateMatrices {
    let (j, b) = match variant {
        ModelVariant::Exact => (p.j_exact, p.b_exact),
        ModelVariant::Nominal => (p.j_nominal, p.b_nominal),
        ModelVariant::Identified => (p.j_identified, p.b_identified),
    };
    let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, -b / j]]).unwrap();
    let col = Matrix::col_vector(&[0.0, 1.0 / j]);
    StateMatrices {
        a,
        b: col.clone(),
        d: col,
        inertia: j,
        viscous: b,
    }
}

/// Folds the state-dependent part of the external disturbance into the plant:
/// `A_e = A - D * [K_env, D_env]`. The exogenous disturbance input afterwards
/// carries only the unknown component.
pub fn fold_environment(sm: &StateMatrices, env: &Environment) -> Matrix {
    let coupling = Matrix::row_vector(&[env.stiffness, env.damping]);
    &sm.a - &(&sm.d * &coupling)
}

/// True interaction torque `K_env q + D_env qdot`, the simulation ground
/// truth.
pub fn interaction_torque(env: &Environment, q: f64, qdot: f64) -> f64 {
    env.stiffness * q + env.damping * qdot
}

/// Time profiles for references and disturbances.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Zero,
    Constant(f64),
    /// `amplitude` for `t >= at`, zero before.
    Step { amplitude: f64, at: f64 },
    /// `slope * t`.
    Ramp { slope: f64 },
    Sine { amplitude: f64, omega: f64 },
}

impl Signal {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Signal::Zero => 0.0,
            Signal::Constant(v) => v,
            Signal::Step { amplitude, at } => {
                if t >= at {
                    amplitude
                } else {
                    0.0
                }
            }
            Signal::Ramp { slope } => slope * t,
            Signal::Sine { amplitude, omega } => amplitude * (omega * t).sin(),
        }
    }
}

/// How the identified-disturbance input of the reaction torque observer is
/// produced during simulation.
///
/// The observer synthesis consumes `tau_i` through the `+B tau_i` input of
/// the identified model, so the signal handed over here follows that sign
/// convention. `ModelDerived` reconstructs it from the true acceleration as
/// `(J_mi - J_mn) qdd - tau_id_u`; with perfectly identified externals
/// (`tau_id_u = tau_u`) and matched inertias the observer then recovers the
/// interaction torque exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum TauIMode {
    /// Feed an explicit signal (default: zero).
    Explicit(Signal),
    /// Reconstruct from the simulated true acceleration.
    ModelDerived,
}

/// Exogenous disturbance inputs of a simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSignals {
    /// Unknown external disturbance `tau_d^u`.
    pub tau_u: Signal,
    /// Identified external disturbance `tau_id^u` (used by `ModelDerived`).
    pub tau_id_u: Signal,
    pub tau_i_mode: TauIMode,
}

impl Default for DisturbanceSignals {
    fn default() -> Self {
        DisturbanceSignals {
            tau_u: Signal::Zero,
            tau_id_u: Signal::Zero,
            tau_i_mode: TauIMode::Explicit(Signal::Zero),
        }
    }
}

/// Measurement noise configuration. Only the velocity channel is active in
/// the conventional setup; the position channel is carried for completeness
/// and defaults to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    pub velocity_std: f64,
    pub position_std: f64,
    pub seed: u64,
}

impl Noise {
    pub fn none() -> Self {
        Noise {
            velocity_std: 0.0,
            position_std: 0.0,
            seed: 0,
        }
    }

    pub fn velocity(std: f64, seed: u64) -> Result<Self> {
        if !(std.is_finite() && std >= 0.0) {
            return Err(Error::Parameter(format!(
                "noise std must be non-negative, got {std}"
            )));
        }
        Ok(Noise {
            velocity_std: std,
            position_std: 0.0,
            seed,
        })
    }
}
