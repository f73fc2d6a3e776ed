//! Fixed-step 4th-order Runge-Kutta integration for linear systems.
//!
//! Deterministic by construction: no adaptive stepping, no reordering. The
//! simulator drives `rk4_step` directly so it can hold noise samples constant
//! across the stages of each step.

use crate::error::{Error, Result, Warning};
use crate::numkit::eig::eigenvalues;
use crate::numkit::matrix::Matrix;

/// `dt * max|Re eig(A)|` beyond which RK4 on the real axis is not trusted.
pub const RK4_STEP_BUDGET: f64 = 2.5;

/// One classical RK4 step of `x' = f(t, x)`.
pub fn rk4_step<F>(f: &F, t: f64, x: &[f64], dt: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let n = x.len();
    let k1 = f(t, x);
    let mut xs: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k1[i]).collect();
    let k2 = f(t + 0.5 * dt, &xs);
    for i in 0..n {
        xs[i] = x[i] + 0.5 * dt * k2[i];
    }
    let k3 = f(t + 0.5 * dt, &xs);
    for i in 0..n {
        xs[i] = x[i] + dt * k3[i];
    }
    let k4 = f(t + dt, &xs);
    (0..n)
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Raw state trajectory of a linear time-invariant integration.
#[derive(Debug, Clone)]
pub struct StateTrace {
    pub t: Vec<f64>,
    /// One state vector per sample, time-major.
    pub states: Vec<Vec<f64>>,
    pub warnings: Vec<Warning>,
}

/// Integrates `x' = A x + input_map * u(t)` with classical RK4 at fixed step.
///
/// A stability warning (not an error) is attached when
/// `dt * max|Re eig(A)|` exceeds [`RK4_STEP_BUDGET`].
pub fn integrate_lti<F>(
    a: &Matrix,
    input_map: &Matrix,
    u: F,
    x0: &[f64],
    dt: f64,
    t_end: f64,
) -> Result<StateTrace>
where
    F: Fn(f64) -> Vec<f64>,
{
    if !a.is_square() || a.rows() != x0.len() || input_map.rows() != a.rows() {
        return Err(Error::Dimension {
            context: "integrate_lti",
            expected: format!("A {0}x{0}, input_map {0}xm, x0 of length {0}", a.rows()),
            found: format!(
                "A {}x{}, input_map {}x{}, x0 of length {}",
                a.rows(),
                a.cols(),
                input_map.rows(),
                input_map.cols(),
                x0.len()
            ),
        });
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Parameter("dt must be positive".into()));
    }
    if t_end < dt {
        return Err(Error::Parameter("t_end must be at least dt".into()));
    }

    let mut warnings = Vec::new();
    if let Ok(eig) = eigenvalues(a) {
        let max_re = eig.iter().fold(0.0f64, |m, l| m.max(l.re.abs()));
        if dt * max_re > RK4_STEP_BUDGET {
            warnings.push(Warning::StepSize {
                dt_lambda: dt * max_re,
            });
        }
    }

    let deriv = |t: f64, x: &[f64]| -> Vec<f64> {
        let mut dx = a.apply(x);
        let uv = u(t);
        debug_assert_eq!(uv.len(), input_map.cols());
        for (i, d) in dx.iter_mut().enumerate() {
            let row = input_map.row(i);
            *d += row.iter().zip(&uv).map(|(m, v)| m * v).sum::<f64>();
        }
        dx
    };

    let steps = (t_end / dt).round() as usize;
    let mut t = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    t.push(0.0);
    states.push(x.clone());
    for k in 0..steps {
        let tk = k as f64 * dt;
        x = rk4_step(&deriv, tk, &x, dt);
        t.push((k + 1) as f64 * dt);
        states.push(x.clone());
    }

    Ok(StateTrace {
        t,
        states,
        warnings,
    })
}
