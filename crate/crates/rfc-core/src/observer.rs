//! Disturbance and reaction-torque observers as auxiliary-variable observers.
//!
//! Both observers estimate the state of a fictitious disturbance generator
//! `x' = A_gen x, tau = C_gen x` driven through a servo model. Writing the
//! observer on the auxiliary variable `sigma = x_gen + L x` removes the
//! derivative of the measured state, leaving
//!
//! ```text
//! sigma_hat' = A_obs sigma_hat + A_x x + B_obs u (+ B_obs tau_i for the RTOb)
//! A_obs = A_gen - L D C_gen
//! A_x   = L A_model - A_obs L
//! B_obs = L B_model
//! N_obs = [L A_model  -L]
//! ```
//!
//! and the estimate is recovered as `C_gen (sigma_hat - L x)`. The estimation
//! error obeys `e' = A_obs e + N_obs eta`, so gain selection is pole placement
//! on `A_obs`. The conventional observers use the constant disturbance model
//! (`A_gen = 0, C_gen = 1`) with `L = [0, g J]`, which puts the single error
//! pole at `-g`.

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Poly};
use crate::plant::StateMatrices;

/// Internal model of the disturbance (DOb) or interaction torque (RTOb).
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceModel {
    a_gen: Matrix,
    c_gen: Matrix,
}

impl DisturbanceModel {
    /// Constant disturbance: `A = 0`, `C = 1`.
    pub fn constant() -> Self {
        DisturbanceModel {
            a_gen: Matrix::zeros(1, 1),
            c_gen: Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
        }
    }

    /// Sinusoid of known frequency: two-state harmonic generator.
    pub fn periodic(omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Parameter(format!(
                "periodic model frequency must be positive, got {omega}"
            )));
        }
        DisturbanceModel::custom(
            Matrix::from_rows(&[vec![0.0, omega], vec![-omega, 0.0]]).unwrap(),
            Matrix::row_vector(&[1.0, 0.0]),
        )
    }

    pub fn custom(a_gen: Matrix, c_gen: Matrix) -> Result<Self> {
        if !a_gen.is_square() {
            return Err(Error::Dimension {
                context: "DisturbanceModel",
                expected: "square generator matrix".into(),
                found: format!("{}x{}", a_gen.rows(), a_gen.cols()),
            });
        }
        if c_gen.rows() != 1 || c_gen.cols() != a_gen.rows() {
            return Err(Error::Dimension {
                context: "DisturbanceModel",
                expected: format!("1x{} output row", a_gen.rows()),
                found: format!("{}x{}", c_gen.rows(), c_gen.cols()),
            });
        }
        Ok(DisturbanceModel { a_gen, c_gen })
    }

    pub fn order(&self) -> usize {
        self.a_gen.rows()
    }

    pub fn a_gen(&self) -> &Matrix {
        &self.a_gen
    }

    pub fn c_gen(&self) -> &Matrix {
        &self.c_gen
    }

    /// Observability matrix `[C; CA; ...; CA^(k-1)]`.
    fn observability_stack(&self) -> Matrix {
        let k = self.order();
        let mut stack = Matrix::zeros(k, k);
        let mut row = self.c_gen.clone();
        for i in 0..k {
            stack.set_block(i, 0, &row);
            row = &row * &self.a_gen;
        }
        stack
    }

    pub fn is_observable(&self) -> bool {
        rank(&self.observability_stack()) == self.order()
    }
}

/// Numerical rank via row-echelon elimination with a relative threshold.
fn rank(m: &Matrix) -> usize {
    let tol = 1e-10 * m.max_abs().max(1.0);
    let mut work = m.clone();
    let (rows, cols) = (work.rows(), work.cols());
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut piv = r;
        for i in r + 1..rows {
            if work[(i, c)].abs() > work[(piv, c)].abs() {
                piv = i;
            }
        }
        if work[(piv, c)].abs() <= tol {
            continue;
        }
        for j in 0..cols {
            let tmp = work[(r, j)];
            work[(r, j)] = work[(piv, j)];
            work[(piv, j)] = tmp;
        }
        for i in r + 1..rows {
            let f = work[(i, c)] / work[(r, c)];
            for j in 0..cols {
                work[(i, j)] -= f * work[(r, j)];
            }
        }
        r += 1;
    }
    r
}

/// Which loop an observer serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserverKind {
    Dob,
    Rtob,
}

/// Synthesized auxiliary-variable observer.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverRealization {
    pub kind: ObserverKind,
    /// `A_gen - L D C_gen` (k x k); also the estimation-error dynamics.
    pub a_obs: Matrix,
    /// Coupling from the measured state (k x 2).
    pub a_x: Matrix,
    /// Control-input column `L B` (k x 1).
    pub b_obs: Matrix,
    /// Identified-disturbance input column (RTOb only; equals `L B`).
    pub b_tau_i: Option<Matrix>,
    /// Noise input `[L A  -L]` (k x 4), ordered `[eta_x, eta_x']`.
    pub n_obs: Matrix,
    /// Gain matrix (k x 2).
    pub gains: Matrix,
    pub c_gen: Matrix,
    /// Inertia of the servo model the observer was synthesized against.
    pub model_inertia: f64,
}

impl ObserverRealization {
    pub fn order(&self) -> usize {
        self.a_obs.rows()
    }

    /// `C_gen * L` (1 x 2): the direct coupling from the measured state to
    /// the torque estimate, `tau_hat = C_gen sigma_hat - (C_gen L) y`.
    pub fn output_coupling(&self) -> Matrix {
        &self.c_gen * &self.gains
    }
}

/// Estimation-error dynamics `e' = A_err e + N_err eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDynamics {
    pub a_err: Matrix,
    pub n_err: Matrix,
}

/// Conventional gain row `[0, bandwidth * inertia]` for the constant model.
pub fn conventional_gains(bandwidth: f64, inertia: f64) -> Result<Matrix> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::Parameter(format!(
            "observer bandwidth must be positive, got {bandwidth}"
        )));
    }
    if !(inertia.is_finite() && inertia > 0.0) {
        return Err(Error::Parameter(format!(
            "observer inertia must be positive, got {inertia}"
        )));
    }
    Ok(Matrix::row_vector(&[0.0, bandwidth * inertia]))
}

/// Gain matrix placing every estimation-error pole at `-bandwidth` for an
/// arbitrary disturbance model, via Ackermann's formula on the observability
/// pair. Reduces to [`conventional_gains`] for the constant model.
pub fn bandwidth_gains(
    model: &DisturbanceModel,
    bandwidth: f64,
    inertia: f64,
) -> Result<Matrix> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) || !(inertia.is_finite() && inertia > 0.0) {
        return Err(Error::Parameter(
            "bandwidth and inertia must be positive".into(),
        ));
    }
    let k = model.order();
    if !model.is_observable() {
        return Err(Error::Unobservable { order: k });
    }
    // Desired characteristic polynomial (s + g)^k evaluated at A_gen.
    let mut p_of_a = Matrix::identity(k);
    let shifted = &model.a_gen + &Matrix::identity(k).scale(bandwidth);
    for _ in 0..k {
        p_of_a = &p_of_a * &shifted;
    }
    let stack = model.observability_stack();
    let mut e_last = vec![0.0; k];
    e_last[k - 1] = 1.0;
    let y = stack.solve(&e_last)?;
    let l = p_of_a.apply(&y);
    // L = [0 | J * l]: only the velocity column acts through D = [0, 1/J].
    let mut gains = Matrix::zeros(k, 2);
    for i in 0..k {
        gains[(i, 1)] = inertia * l[i];
    }
    Ok(gains)
}

/// Synthesizes an auxiliary-variable observer for the given servo model
/// (nominal for the DOb, identified for the RTOb), disturbance model and
/// gain matrix.
pub fn synthesize(
    model: &StateMatrices,
    dist: &DisturbanceModel,
    gains: &Matrix,
    kind: ObserverKind,
) -> Result<ObserverRealization> {
    let k = dist.order();
    if gains.rows() != k || gains.cols() != 2 {
        return Err(Error::Dimension {
            context: "observer synthesis",
            expected: format!("{k}x2 gain matrix"),
            found: format!("{}x{}", gains.rows(), gains.cols()),
        });
    }
    if !dist.is_observable() {
        return Err(Error::Unobservable { order: k });
    }

    let ld = gains * &model.d; // k x 1
    let a_obs = &dist.a_gen - &(&ld * &dist.c_gen);
    let la = gains * &model.a; // k x 2
    let a_x = &la - &(&a_obs * gains);
    let b_obs = gains * &model.b;

    let mut n_obs = Matrix::zeros(k, 4);
    n_obs.set_block(0, 0, &la);
    n_obs.set_block(0, 2, &gains.scale(-1.0));

    Ok(ObserverRealization {
        kind,
        a_obs,
        a_x,
        b_obs: b_obs.clone(),
        b_tau_i: match kind {
            ObserverKind::Rtob => Some(b_obs),
            ObserverKind::Dob => None,
        },
        n_obs,
        gains: gains.clone(),
        c_gen: dist.c_gen.clone(),
        model_inertia: model.inertia,
    })
}

/// Estimation-error dynamics of a realization (`A_err = A_obs`,
/// `N_err = N_obs`).
pub fn error_dynamics(obs: &ObserverRealization) -> ErrorDynamics {
    ErrorDynamics {
        a_err: obs.a_obs.clone(),
        n_err: obs.n_obs.clone(),
    }
}

/// Reconstructs the torque estimate `C_gen (sigma_hat - L y)` from the
/// auxiliary state and the measured plant state.
pub fn estimate_output(obs: &ObserverRealization, aux_state: &[f64], measured_x: &[f64]) -> f64 {
    debug_assert_eq!(aux_state.len(), obs.order());
    debug_assert_eq!(measured_x.len(), 2);
    let lx = obs.gains.apply(measured_x);
    let shifted: Vec<f64> = aux_state.iter().zip(&lx).map(|(s, l)| s - l).collect();
    obs.c_gen
        .row(0)
        .iter()
        .zip(&shifted)
        .map(|(c, v)| c * v)
        .sum()
}

/// Expands `(s + g)^k`; exposed for tests that want the placement target.
pub fn placement_polynomial(bandwidth: f64, order: usize) -> Poly {
    let mut p = Poly::constant(1.0);
    let factor = Poly::new(vec![1.0, bandwidth]);
    for _ in 0..order {
        p = p.mul(&factor);
    }
    p
}
