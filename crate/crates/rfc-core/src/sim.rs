//! Time-domain simulation of the closed force loop and open-loop estimation
//! experiments.
//!
//! Integration is fixed-step RK4. Measurement noise is sampled once per step
//! and held constant across the stages of that step, so a scenario with a
//! fixed seed reproduces bit-identical traces. The observers run on the
//! measured output `y = x + eta`, which is why noise enters the augmented
//! dynamics through the measurement coupling columns and the recorded
//! estimates carry the `-C L eta` feedthrough.

use crate::error::{Error, Result, Warning};
use crate::loopsys::{AugmentedSystem, Stage};
use crate::numkit::rk4_step;
use crate::numkit::rng::SplitMix64;
use crate::numkit::{eigenvalues, Matrix, RK4_STEP_BUDGET};
use crate::observer::{estimate_output, ObserverRealization};
use crate::plant::{
    fold_environment, interaction_torque, DisturbanceSignals, Environment, Noise, Signal,
    StateMatrices, TauIMode,
};

/// Inputs of one closed-loop simulation run.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Interaction-torque reference profile (the loop input is
    /// `r = C_f * tau_ref`).
    pub tau_ref: Signal,
    /// Unknown and identified disturbance inputs.
    pub disturbances: DisturbanceSignals,
    pub noise: Noise,
    pub dt: f64,
    pub t_end: f64,
}

impl Scenario {
    /// Noise-free unit reference step with the default horizon.
    pub fn unit_step() -> Self {
        Scenario {
            tau_ref: Signal::Step {
                amplitude: 1.0,
                at: 0.0,
            },
            disturbances: DisturbanceSignals::default(),
            noise: Noise::none(),
            dt: 1e-5,
            t_end: 0.2,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_end < 10.0 * self.dt {
            return Err(Error::Parameter(format!(
                "t_end = {} must be at least 10 dt = {}",
                self.t_end,
                10.0 * self.dt
            )));
        }
        Ok(())
    }
}

/// Recorded channels of a closed-loop run. All series share one length and
/// `tau_int_true[i] = K_env q[i] + D_env qdot[i]` pointwise.
#[derive(Debug, Clone)]
pub struct Trace {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub tau_int_true: Vec<f64>,
    pub tau_int_est: Vec<f64>,
    pub tau_dis_est: Vec<f64>,
    pub u: Vec<f64>,
    pub warnings: Vec<Warning>,
    /// Set when the state left the finite range; the trace holds the samples
    /// up to that time.
    pub diverged_at: Option<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Simulates the outer-closed loop under a scenario.
pub fn simulate(sys: &AugmentedSystem, scenario: &Scenario) -> Result<Trace> {
    if sys.stage() != Stage::OuterClosed {
        return Err(Error::WrongStage {
            required: Stage::OuterClosed.name(),
            actual: sys.stage().name(),
        });
    }
    if !sys.env_folded() {
        return Err(Error::Parameter(
            "simulation requires the environment folded into the plant".into(),
        ));
    }
    scenario.validate()?;

    let force_gain = sys.force_gain().expect("outer stage carries a force gain");
    let n = sys.order();
    let a = sys.a();
    let b_a = sys.b_a();
    let d_a = sys.d_a();
    let b_rho_a = sys.b_rho_a();
    let n_meas = sys.measurement_noise_columns();
    let c_a = sys.c_a();
    let dis_row = sys.dis_row();
    let int_feed = sys.estimate_feedthrough();
    let dis_feed = sys.dis_feedthrough();
    let env = *sys.env();

    debug_assert_eq!(b_rho_a[(1, 0)], 0.0, "tau_i must not drive the plant row");

    let mut warnings = Vec::new();
    if let Ok(eig) = sys.eigenvalues() {
        let max_re = eig.iter().fold(0.0f64, |m, l| m.max(l.re.abs()));
        if scenario.dt * max_re > RK4_STEP_BUDGET {
            warnings.push(Warning::StepSize {
                dt_lambda: scenario.dt * max_re,
            });
        }
    }

    // Model-derived identified disturbance: (J_mi - J_mn) qdd - tau_id_u,
    // reconstructed from the true acceleration (plant row of the dynamics;
    // tau_i itself never enters that row, so there is no circularity).
    let j_mi = sys.rtob().model_inertia;
    let j_mn = sys.dob().model_inertia;

    let steps = (scenario.t_end / scenario.dt).round() as usize;
    let mut rng = SplitMix64::new(scenario.noise.seed);
    let mut x = vec![0.0; n];

    let mut trace = Trace {
        t: Vec::with_capacity(steps + 1),
        q: Vec::with_capacity(steps + 1),
        qdot: Vec::with_capacity(steps + 1),
        tau_int_true: Vec::with_capacity(steps + 1),
        tau_int_est: Vec::with_capacity(steps + 1),
        tau_dis_est: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        warnings,
        diverged_at: None,
    };

    let record = |t: f64, x: &[f64], eta: &[f64; 2], trace: &mut Trace| {
        let q = x[0];
        let qdot = x[1];
        let r = force_gain * scenario.tau_ref.eval(t);
        let int_est = dot(c_a.row(0), x) + int_feed[(0, 0)] * eta[0] + int_feed[(0, 1)] * eta[1];
        let dis_est = dot(dis_row.row(0), x) + dis_feed[(0, 0)] * eta[0] + dis_feed[(0, 1)] * eta[1];
        trace.t.push(t);
        trace.q.push(q);
        trace.qdot.push(qdot);
        trace.tau_int_true.push(interaction_torque(&env, q, qdot));
        trace.tau_int_est.push(int_est);
        trace.tau_dis_est.push(dis_est);
        trace.u.push(r - force_gain * int_est + dis_est);
    };

    let mut eta = [0.0f64; 2];
    for k in 0..steps {
        let tk = k as f64 * scenario.dt;
        eta = [
            scenario.noise.position_std * rng.next_gaussian(),
            scenario.noise.velocity_std * rng.next_gaussian(),
        ];
        record(tk, &x, &eta, &mut trace);

        let deriv = |t: f64, state: &[f64]| -> Vec<f64> {
            let r = force_gain * scenario.tau_ref.eval(t);
            let tau_u = scenario.disturbances.tau_u.eval(t);
            let mut dx = a.apply(state);
            for i in 0..n {
                dx[i] += b_a[(i, 0)] * r
                    + d_a[(i, 0)] * tau_u
                    + n_meas[(i, 0)] * eta[0]
                    + n_meas[(i, 1)] * eta[1];
            }
            let tau_i = match &scenario.disturbances.tau_i_mode {
                TauIMode::Explicit(sig) => sig.eval(t),
                TauIMode::ModelDerived => {
                    let qdd = dx[1];
                    (j_mi - j_mn) * qdd - scenario.disturbances.tau_id_u.eval(t)
                }
            };
            for i in 0..n {
                dx[i] += b_rho_a[(i, 0)] * tau_i;
            }
            dx
        };

        x = rk4_step(&deriv, tk, &x, scenario.dt);
        if !x.iter().all(|v| v.is_finite()) {
            trace.diverged_at = Some((k + 1) as f64 * scenario.dt);
            return Ok(trace);
        }
    }
    record(steps as f64 * scenario.dt, &x, &eta, &mut trace);
    Ok(trace)
}

fn dot(row: &[f64], x: &[f64]) -> f64 {
    row.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Step-response quality metrics.
#[derive(Debug, Clone)]
pub struct StepMetrics {
    /// Peak overshoot above the target, as a fraction of |target| (absolute
    /// when the target is zero).
    pub overshoot: f64,
    /// First time after which the estimate stays within the 2% band;
    /// `None` when the trace never settles.
    pub settling_time_2pct: Option<f64>,
    /// Final-sample deviation from the target.
    pub steady_state_error: f64,
    /// At least two sign changes of the error after the first crossing.
    pub oscillatory: bool,
    pub warnings: Vec<Warning>,
}

/// Metrics of the interaction-torque estimate against a step target.
pub fn step_metrics(trace: &Trace, target: f64) -> Result<StepMetrics> {
    if trace.is_empty() {
        return Err(Error::Parameter("empty trace".into()));
    }
    let est = &trace.tau_int_est;
    let mut warnings = Vec::new();

    let (scale, absolute) = if target == 0.0 {
        warnings.push(Warning::AbsoluteMetrics);
        (1.0, true)
    } else {
        (target.abs(), false)
    };
    let band = if absolute {
        0.02 * est.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        0.02 * scale
    };

    let overshoot = est
        .iter()
        .map(|v| (v - target).max(0.0))
        .fold(0.0f64, f64::max)
        / scale;

    let mut settled_from = None;
    for i in (0..est.len()).rev() {
        if (est[i] - target).abs() <= band {
            settled_from = Some(i);
        } else {
            break;
        }
    }
    let settling_time_2pct = match settled_from {
        Some(0) => Some(trace.t[0]),
        Some(i) if i < est.len() => Some(trace.t[i]),
        _ => None,
    };
    if settling_time_2pct.is_none() {
        warnings.push(Warning::Unsettled);
    }

    let err: Vec<f64> = est.iter().map(|v| v - target).collect();
    let first_crossing = err.windows(2).position(|w| w[0] * w[1] < 0.0);
    let oscillatory = match first_crossing {
        Some(c) => {
            let changes = err[c + 1..]
                .windows(2)
                .filter(|w| w[0] * w[1] < 0.0)
                .count();
            changes >= 2
        }
        None => false,
    };

    Ok(StepMetrics {
        overshoot,
        settling_time_2pct,
        steady_state_error: (est[est.len() - 1] - target).abs(),
        oscillatory,
        warnings,
    })
}

/// Open-loop estimation run: plant under a disturbance with one observer
/// running alongside (no control input, no noise).
#[derive(Debug, Clone)]
pub struct EstimationTrace {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    /// Observer output.
    pub estimate: Vec<f64>,
    /// What the observer is estimating: the external disturbance plus the
    /// environment torque plus the inertia-mismatch term.
    pub true_disturbance: Vec<f64>,
}

/// Runs the plant open loop under `disturbance` with the observer attached,
/// and records estimate vs. truth.
pub fn estimation_experiment(
    plant: &StateMatrices,
    env: &Environment,
    obs: &ObserverRealization,
    disturbance: &Signal,
    dt: f64,
    t_end: f64,
) -> Result<EstimationTrace> {
    if !(dt > 0.0 && t_end >= 10.0 * dt) {
        return Err(Error::Parameter("need dt > 0 and t_end >= 10 dt".into()));
    }
    let k = obs.order();
    let a_env = fold_environment(plant, env);
    let n = 2 + k;

    // Block system [x; sigma]: x' = A_e x - D tau_u, sigma' = A_x x + A_obs s.
    let mut a = Matrix::zeros(n, n);
    a.set_block(0, 0, &a_env);
    a.set_block(2, 0, &obs.a_x);
    a.set_block(2, 2, &obs.a_obs);
    let mut dist_col = vec![0.0; n];
    dist_col[0] = -plant.d[(0, 0)];
    dist_col[1] = -plant.d[(1, 0)];

    if let Ok(eig) = eigenvalues(&a) {
        let max_re = eig.iter().fold(0.0f64, |m, l| m.max(l.re.abs()));
        if dt * max_re > RK4_STEP_BUDGET {
            return Err(Error::Parameter(format!(
                "dt too large for the observer dynamics (dt*max|Re eig| = {:.2})",
                dt * max_re
            )));
        }
    }

    let j_mismatch = plant.inertia - obs.model_inertia;
    let steps = (t_end / dt).round() as usize;
    let mut x = vec![0.0; n];
    let mut out = EstimationTrace {
        t: Vec::with_capacity(steps + 1),
        q: Vec::with_capacity(steps + 1),
        qdot: Vec::with_capacity(steps + 1),
        estimate: Vec::with_capacity(steps + 1),
        true_disturbance: Vec::with_capacity(steps + 1),
    };

    let deriv = |t: f64, state: &[f64]| -> Vec<f64> {
        let mut dx = a.apply(state);
        let tau = disturbance.eval(t);
        for i in 0..n {
            dx[i] += dist_col[i] * tau;
        }
        dx
    };

    for kstep in 0..=steps {
        let t = kstep as f64 * dt;
        let qdd = deriv(t, &x)[1];
        out.t.push(t);
        out.q.push(x[0]);
        out.qdot.push(x[1]);
        out.estimate.push(estimate_output(obs, &x[2..], &x[..2]));
        out.true_disturbance.push(
            disturbance.eval(t) + interaction_torque(env, x[0], x[1]) + j_mismatch * qdd,
        );
        if kstep < steps {
            x = rk4_step(&deriv, t, &x, dt);
        }
    }
    Ok(out)
}

/// Least-squares slope of `ln |err|` over `[t_lo, t_hi]`, returned as a decay
/// rate (positive for decaying error). `None` when fewer than two usable
/// samples fall in the window.
pub fn fit_decay_rate(t: &[f64], err: &[f64], t_lo: f64, t_hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(err)
        .filter(|(tt, e)| **tt >= t_lo && **tt <= t_hi && e.abs() > 1e-300)
        .map(|(tt, e)| (*tt, e.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some(-(n * sxy - sx * sy) / denom)
}
