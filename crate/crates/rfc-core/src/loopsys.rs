//! Augmented loop assembly: open loop, inner disturbance-compensation loop,
//! and outer proportional force loop.
//!
//! The augmented state is `x_a = [x; sigma_hat; rho_hat]` (plant, DOb, RTOb).
//! With the torque-estimate readout rows
//!
//! ```text
//! dis row:  tau_dis_hat = [-C_D L_D | C_D | 0   ] x_a
//! C_a:      tau_int_hat = [-C_R L_R | 0   | C_R ] x_a
//! ```
//!
//! the loop closures are rank-one updates of the open-loop A matrix:
//! `u = tau_per + tau_dis_hat` gives `A_cli = A_ol + B_a * dis_row`, and
//! `tau_per = r - C_f tau_int_hat` gives `A_cl = A_cli - C_f B_a C_a`.
//! Each closure changes only the A matrix and the meaning of the `B_a`
//! input (`u`, then `tau_per`, then `r = C_f tau_ref`); the disturbance,
//! identified-input and noise columns never change.
//!
//! Sign conventions: the exact plant obeys `x' = A x + B u - D tau_d`, so the
//! stored disturbance input column is `d_a = [-D; 0; 0]` and every input
//! enters additively: `x_a' = A x_a + b_a u + d_a tau_u + b_rho_a tau_i`.

use crate::error::{Error, Result};
use crate::numkit::{eigenvalues, Matrix};
use crate::observer::{ObserverKind, ObserverRealization};
use crate::plant::{fold_environment, Environment, StateMatrices};
use num_complex::Complex64;

/// Loop closure progress.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Open,
    InnerClosed,
    OuterClosed,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Open => "open",
            Stage::InnerClosed => "inner_closed",
            Stage::OuterClosed => "outer_closed",
        }
    }
}

/// Outer-loop proportional force gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    pub force_gain: f64,
}

impl ControllerGains {
    pub fn new(force_gain: f64) -> Result<Self> {
        if !(force_gain.is_finite() && force_gain >= 0.0) {
            return Err(Error::Parameter(format!(
                "force gain must be non-negative, got {force_gain}"
            )));
        }
        Ok(ControllerGains { force_gain })
    }
}

/// Augmented system at one of the three loop stages.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    a: Matrix,
    b_a: Matrix,
    d_a: Matrix,
    b_rho_a: Matrix,
    n_a: Matrix,
    c_a: Matrix,
    dis_row: Matrix,
    stage: Stage,
    env_folded: bool,
    a_env: Matrix,
    plant: StateMatrices,
    env: Environment,
    dob: ObserverRealization,
    rtob: ObserverRealization,
    force_gain: Option<f64>,
    /// Scale on the measured-state part of the output row: 1 by default,
    /// J_m / J_mi when the literal exact-inertia readout is selected.
    output_scale: f64,
}

/// Readout row for the DOb estimate `tau_dis_hat = C_D (sigma_hat - L_D x)`.
pub fn dis_output_row(dob: &ObserverRealization, rtob_order: usize) -> Matrix {
    let k = dob.order();
    let n = 2 + k + rtob_order;
    let mut row = Matrix::zeros(1, n);
    row.set_block(0, 0, &dob.output_coupling().scale(-1.0));
    row.set_block(0, 2, &dob.c_gen);
    row
}

/// Output vector of the augmented system,
/// `tau_int_hat = C_R (rho_hat - L_R x)`. For the constant model with
/// conventional gains this is `[0, -g_RTOb J_mi, 0, 1]`.
pub fn output_vector(rtob: &ObserverRealization, dob_order: usize) -> Matrix {
    let k = rtob.order();
    let n = 2 + dob_order + k;
    let mut row = Matrix::zeros(1, n);
    row.set_block(0, 0, &rtob.output_coupling().scale(-1.0));
    row.set_block(0, 2 + dob_order, &rtob.c_gen);
    row
}

/// Literal variant of [`output_vector`] that reads the estimate with the
/// exact inertia in place of the identified one (a comparison switch; the
/// default keeps the identified inertia, consistent with the RTOb gains).
pub fn output_vector_with_exact_inertia(
    rtob: &ObserverRealization,
    dob_order: usize,
    j_exact: f64,
    j_identified: f64,
) -> Matrix {
    let mut row = output_vector(rtob, dob_order);
    let ratio = j_exact / j_identified;
    row[(0, 0)] *= ratio;
    row[(0, 1)] *= ratio;
    row
}

/// Assembles the open-loop augmented system with the environment folded into
/// the plant block; the disturbance input column then carries only the
/// unknown disturbance `tau_d^u`.
pub fn assemble_open_loop(
    plant: &StateMatrices,
    env: &Environment,
    dob: &ObserverRealization,
    rtob: &ObserverRealization,
) -> Result<AugmentedSystem> {
    let a_env = fold_environment(plant, env);
    assemble(plant, env, a_env, true, dob, rtob)
}

/// Free-space variant: the plant block keeps its unfolded A matrix and the
/// disturbance input column carries the whole external disturbance signal.
/// Intended for estimation-only studies.
pub fn assemble_open_loop_free(
    plant: &StateMatrices,
    dob: &ObserverRealization,
    rtob: &ObserverRealization,
) -> Result<AugmentedSystem> {
    assemble(plant, &Environment::free(), plant.a.clone(), false, dob, rtob)
}

fn assemble(
    plant: &StateMatrices,
    env: &Environment,
    a_env: Matrix,
    env_folded: bool,
    dob: &ObserverRealization,
    rtob: &ObserverRealization,
) -> Result<AugmentedSystem> {
    if dob.kind != ObserverKind::Dob {
        return Err(Error::Parameter("inner-loop observer must be a DOb".into()));
    }
    if rtob.kind != ObserverKind::Rtob {
        return Err(Error::Parameter("outer-loop observer must be an RTOb".into()));
    }
    let kd = dob.order();
    let kr = rtob.order();
    let n = 2 + kd + kr;

    let mut a = Matrix::zeros(n, n);
    a.set_block(0, 0, &a_env);
    a.set_block(2, 0, &dob.a_x);
    a.set_block(2, 2, &dob.a_obs);
    a.set_block(2 + kd, 0, &rtob.a_x);
    a.set_block(2 + kd, 2 + kd, &rtob.a_obs);

    let mut b_a = Matrix::zeros(n, 1);
    b_a.set_block(0, 0, &plant.b);
    b_a.set_block(2, 0, &dob.b_obs);
    b_a.set_block(2 + kd, 0, &rtob.b_obs);

    let mut d_a = Matrix::zeros(n, 1);
    d_a.set_block(0, 0, &plant.d.scale(-1.0));

    let mut b_rho_a = Matrix::zeros(n, 1);
    let b_tau_i = rtob
        .b_tau_i
        .as_ref()
        .ok_or_else(|| Error::Parameter("RTOb realization lacks the tau_i input column".into()))?;
    b_rho_a.set_block(2 + kd, 0, b_tau_i);

    let mut n_a = Matrix::zeros(n, 4);
    n_a.set_block(2, 0, &dob.n_obs);
    n_a.set_block(2 + kd, 0, &rtob.n_obs);

    let c_a = output_vector(rtob, kd);
    let dis_row = dis_output_row(dob, kr);

    Ok(AugmentedSystem {
        a,
        b_a,
        d_a,
        b_rho_a,
        n_a,
        c_a,
        dis_row,
        stage: Stage::Open,
        env_folded,
        a_env,
        plant: plant.clone(),
        env: *env,
        dob: dob.clone(),
        rtob: rtob.clone(),
        force_gain: None,
        output_scale: 1.0,
    })
}

impl AugmentedSystem {
    /// Switches the interaction-torque readout to the literal exact-inertia
    /// form `[0, -g_RTOb J_m, ...]` for comparison studies. Must be applied
    /// before any loop is closed; the default keeps the identified inertia,
    /// consistent with the RTOb gain definition.
    pub fn with_exact_inertia_output(mut self) -> Result<Self> {
        if self.stage != Stage::Open {
            return Err(Error::WrongStage {
                required: Stage::Open.name(),
                actual: self.stage.name(),
            });
        }
        self.output_scale = self.plant.inertia / self.rtob.model_inertia;
        self.c_a = output_vector_with_exact_inertia(
            &self.rtob,
            self.dob.order(),
            self.plant.inertia,
            self.rtob.model_inertia,
        );
        Ok(self)
    }

    /// Closes the inner disturbance-compensation loop `u = tau_per +
    /// tau_dis_hat`.
    pub fn close_inner_loop(mut self) -> Result<Self> {
        if self.stage != Stage::Open {
            return Err(Error::WrongStage {
                required: Stage::Open.name(),
                actual: self.stage.name(),
            });
        }
        let update = Matrix::outer(&self.b_a.col(0), self.dis_row.row(0));
        self.a = &self.a + &update;
        self.stage = Stage::InnerClosed;
        Ok(self)
    }

    /// Closes the outer force loop `tau_per = r - C_f tau_int_hat` with
    /// `r = C_f tau_int_ref`.
    pub fn close_outer_loop(mut self, gains: &ControllerGains) -> Result<Self> {
        if self.stage != Stage::InnerClosed {
            return Err(Error::WrongStage {
                required: Stage::InnerClosed.name(),
                actual: self.stage.name(),
            });
        }
        let update = Matrix::outer(&self.b_a.col(0), self.c_a.row(0)).scale(-gains.force_gain);
        self.a = &self.a + &update;
        self.stage = Stage::OuterClosed;
        self.force_gain = Some(gains.force_gain);
        Ok(self)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b_a(&self) -> &Matrix {
        &self.b_a
    }

    pub fn d_a(&self) -> &Matrix {
        &self.d_a
    }

    pub fn b_rho_a(&self) -> &Matrix {
        &self.b_rho_a
    }

    pub fn n_a(&self) -> &Matrix {
        &self.n_a
    }

    pub fn c_a(&self) -> &Matrix {
        &self.c_a
    }

    /// Readout row of the DOb estimate.
    pub fn dis_row(&self) -> &Matrix {
        &self.dis_row
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn env_folded(&self) -> bool {
        self.env_folded
    }

    /// Plant block of the A matrix (environment-folded when applicable).
    pub fn a_env(&self) -> &Matrix {
        &self.a_env
    }

    pub fn plant(&self) -> &StateMatrices {
        &self.plant
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn dob(&self) -> &ObserverRealization {
        &self.dob
    }

    pub fn rtob(&self) -> &ObserverRealization {
        &self.rtob
    }

    pub fn force_gain(&self) -> Option<f64> {
        self.force_gain
    }

    pub fn order(&self) -> usize {
        self.a.rows()
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        eigenvalues(&self.a)
    }

    /// Columns through which measurement noise `eta_x` drives the state:
    /// everywhere the measured state enters the current A matrix minus the
    /// physical plant coupling. (The observers and loop closures act on the
    /// measured output, so noise enters exactly like `x` does.)
    pub fn measurement_noise_columns(&self) -> Matrix {
        let n = self.order();
        let mut cols = self.a.block(0, 0, n, 2);
        for i in 0..2 {
            for j in 0..2 {
                cols[(i, j)] -= self.a_env[(i, j)];
            }
        }
        cols
    }

    /// Direct noise feedthrough of the interaction-torque estimate,
    /// `-C_R L_R` (1 x 2), scaled when the literal readout is active.
    pub fn estimate_feedthrough(&self) -> Matrix {
        self.rtob.output_coupling().scale(-self.output_scale)
    }

    /// Direct noise feedthrough of the DOb estimate, `-C_D L_D` (1 x 2).
    pub fn dis_feedthrough(&self) -> Matrix {
        self.dob.output_coupling().scale(-1.0)
    }

    /// Static gain from the `B_a` input to the interaction-torque estimate,
    /// `-C_a A^{-1} B_a`. At the outer stage the input is `r = C_f tau_ref`,
    /// so the reference-to-estimate DC gain is this value times `C_f`.
    pub fn static_estimate_gain(&self) -> Result<f64> {
        let x = self.a.solve(&self.b_a.col(0))?;
        Ok(-self
            .c_a
            .row(0)
            .iter()
            .zip(&x)
            .map(|(c, v)| c * v)
            .sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::{conventional_gains, synthesize, DisturbanceModel};
    use crate::plant::{build_servo_matrices, ModelVariant, ServoParams};

    fn baseline(
        g_dob: f64,
        g_rtob: f64,
        j_ratio: f64,
    ) -> (StateMatrices, Environment, ObserverRealization, ObserverRealization) {
        let p = ServoParams::rigid(0.25, 0.25, 0.25 * j_ratio).unwrap();
        let exact = build_servo_matrices(&p, ModelVariant::Exact);
        let nominal = build_servo_matrices(&p, ModelVariant::Nominal);
        let identified = build_servo_matrices(&p, ModelVariant::Identified);
        let env = Environment::new(50.0, 10000.0).unwrap();
        let dob = synthesize(
            &nominal,
            &DisturbanceModel::constant(),
            &conventional_gains(g_dob, nominal.inertia).unwrap(),
            ObserverKind::Dob,
        )
        .unwrap();
        let rtob = synthesize(
            &identified,
            &DisturbanceModel::constant(),
            &conventional_gains(g_rtob, identified.inertia).unwrap(),
            ObserverKind::Rtob,
        )
        .unwrap();
        (exact, env, dob, rtob)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        v
    }

    #[test]
    fn open_loop_spectrum_is_block_union() {
        let (exact, env, dob, rtob) = baseline(500.0, 500.0, 1.0);
        let sys = assemble_open_loop(&exact, &env, &dob, &rtob).unwrap();
        let eig = sorted(sys.eigenvalues().unwrap());
        let im = 30000.0f64.sqrt();
        let expect = sorted(vec![
            Complex64::new(-100.0, im),
            Complex64::new(-100.0, -im),
            Complex64::new(-500.0, 0.0),
            Complex64::new(-500.0, 0.0),
        ]);
        for (g, e) in eig.iter().zip(&expect) {
            assert!((g - e).norm() < 1e-6 * 500.0, "{g} vs {e}");
        }
    }

    #[test]
    fn zero_environment_keeps_rigid_body_poles() {
        let p = ServoParams::rigid(0.25, 0.25, 0.25).unwrap();
        let exact = build_servo_matrices(&p, ModelVariant::Exact);
        let nominal = build_servo_matrices(&p, ModelVariant::Nominal);
        let dob = synthesize(
            &nominal,
            &DisturbanceModel::constant(),
            &conventional_gains(500.0, 0.25).unwrap(),
            ObserverKind::Dob,
        )
        .unwrap();
        let rtob = synthesize(
            &nominal,
            &DisturbanceModel::constant(),
            &conventional_gains(500.0, 0.25).unwrap(),
            ObserverKind::Rtob,
        )
        .unwrap();
        let sys = assemble_open_loop(&exact, &Environment::free(), &dob, &rtob).unwrap();
        let eig = sys.eigenvalues().unwrap();
        let zeros_at_origin = eig.iter().filter(|l| l.norm() < 1e-9).count();
        assert_eq!(zeros_at_origin, 2, "double rigid-body pole at the origin");
    }

    #[test]
    fn noise_matrix_follows_gain_pattern() {
        let (exact, env, dob, rtob) = baseline(500.0, 500.0, 1.0);
        let sys = assemble_open_loop(&exact, &env, &dob, &rtob).unwrap();
        let n_a = sys.n_a();
        // Plant rows carry no direct noise input.
        assert!(n_a.row(0).iter().all(|&v| v == 0.0));
        assert!(n_a.row(1).iter().all(|&v| v == 0.0));
        // Observer rows follow [L A_model  -L]; with the rigid model and
        // conventional gains only the eta_qdot' slot is populated (-l2).
        assert_eq!(n_a.row(2), &[0.0, 0.0, 0.0, -125.0]);
        assert_eq!(n_a.row(3), &[0.0, 0.0, 0.0, -125.0]);
    }

    #[test]
    fn inner_closure_keeps_rtob_block_decoupled() {
        let (exact, env, dob, rtob) = baseline(500.0, 500.0, 1.0);
        let sys = assemble_open_loop(&exact, &env, &dob, &rtob)
            .unwrap()
            .close_inner_loop()
            .unwrap();
        let eig = sys.eigenvalues().unwrap();
        // The third block column of the inner-closed A is [0; 0; A_rho], so
        // -g_RTOb stays an eigenvalue.
        assert!(eig
            .iter()
            .any(|l| (l - Complex64::new(-500.0, 0.0)).norm() < 1e-6));
    }

    #[test]
    fn zero_dob_gain_means_no_inner_feedback() {
        let p = ServoParams::rigid(0.25, 0.25, 0.25).unwrap();
        let exact = build_servo_matrices(&p, ModelVariant::Exact);
        let nominal = build_servo_matrices(&p, ModelVariant::Nominal);
        let dob = synthesize(
            &nominal,
            &DisturbanceModel::constant(),
            &Matrix::zeros(1, 2),
            ObserverKind::Dob,
        )
        .unwrap();
        let rtob = synthesize(
            &nominal,
            &DisturbanceModel::constant(),
            &conventional_gains(500.0, 0.25).unwrap(),
            ObserverKind::Rtob,
        )
        .unwrap();
        let env = Environment::new(50.0, 10000.0).unwrap();
        let open = assemble_open_loop(&exact, &env, &dob, &rtob).unwrap();
        let a_open = open.a().clone();
        let closed = open.close_inner_loop().unwrap();
        // With L_D = 0 the estimate is C_D sigma_hat and sigma_hat never
        // moves; the plant column update is zero.
        for i in 0..closed.order() {
            for j in 0..2 {
                assert_eq!(closed.a()[(i, j)], a_open[(i, j)]);
            }
        }
    }

    #[test]
    fn stage_transitions_are_enforced() {
        let (exact, env, dob, rtob) = baseline(500.0, 500.0, 1.0);
        let sys = assemble_open_loop(&exact, &env, &dob, &rtob).unwrap();
        let gains = ControllerGains::new(2.0).unwrap();
        assert!(matches!(
            sys.clone().close_outer_loop(&gains),
            Err(Error::WrongStage { .. })
        ));
        let inner = sys.close_inner_loop().unwrap();
        assert!(matches!(
            inner.clone().close_inner_loop(),
            Err(Error::WrongStage { .. })
        ));
        let outer = inner.close_outer_loop(&gains).unwrap();
        assert_eq!(outer.stage(), Stage::OuterClosed);
        assert_eq!(outer.force_gain(), Some(2.0));
    }

    #[test]
    fn closures_touch_only_the_a_matrix() {
        let (exact, env, dob, rtob) = baseline(500.0, 1000.0, 0.5);
        let open = assemble_open_loop(&exact, &env, &dob, &rtob).unwrap();
        let (b0, d0, br0, n0) = (
            open.b_a().clone(),
            open.d_a().clone(),
            open.b_rho_a().clone(),
            open.n_a().clone(),
        );
        let closed = open
            .close_inner_loop()
            .unwrap()
            .close_outer_loop(&ControllerGains::new(2.0).unwrap())
            .unwrap();
        assert_eq!(closed.b_a(), &b0);
        assert_eq!(closed.d_a(), &d0);
        assert_eq!(closed.b_rho_a(), &br0);
        assert_eq!(closed.n_a(), &n0);
    }

    #[test]
    fn zero_force_gain_keeps_inner_loop_matrix() {
        let (exact, env, dob, rtob) = baseline(500.0, 500.0, 1.0);
        let inner = assemble_open_loop(&exact, &env, &dob, &rtob)
            .unwrap()
            .close_inner_loop()
            .unwrap();
        let a_inner = inner.a().clone();
        let outer = inner
            .close_outer_loop(&ControllerGains::new(0.0).unwrap())
            .unwrap();
        assert_eq!(outer.a(), &a_inner);
    }

    #[test]
    fn output_vector_values() {
        let (_, _, dob, rtob) = baseline(500.0, 500.0, 1.0);
        let c_a = output_vector(&rtob, dob.order());
        assert_eq!(c_a.row(0), &[0.0, -125.0, 0.0, 1.0]);

        // Fig-2d style tuning: g_RTOb = 1000 against J_mi = 0.125.
        let (_, _, dob2, rtob2) = baseline(500.0, 1000.0, 0.5);
        let c_a2 = output_vector(&rtob2, dob2.order());
        assert_eq!(c_a2.row(0), &[0.0, -125.0, 0.0, 1.0]);
    }

    #[test]
    fn output_vector_literal_inertia_switch() {
        let (_, _, dob, rtob) = baseline(500.0, 1000.0, 0.5);
        let row = output_vector_with_exact_inertia(&rtob, dob.order(), 0.25, 0.125);
        // -g_RTOb * J_m = -250 in place of -g_RTOb * J_mi = -125.
        assert_eq!(row.row(0), &[0.0, -250.0, 0.0, 1.0]);
    }

    #[test]
    fn generic_interaction_model_output_shape() {
        // Two-state models on both observers: the output row grows to 1x6
        // with the pattern [0, -(C L)_2, 0 (sigma slots), C_gen].
        let p = ServoParams::rigid(0.25, 0.25, 0.25).unwrap();
        let identified = build_servo_matrices(&p, ModelVariant::Identified);
        let dist = DisturbanceModel::periodic(10.0).unwrap();
        let gains = crate::observer::bandwidth_gains(&dist, 500.0, 0.25).unwrap();
        let rtob = synthesize(&identified, &dist, &gains, ObserverKind::Rtob).unwrap();
        let c_a = output_vector(&rtob, 2);
        assert_eq!(c_a.cols(), 6);
        assert_eq!(c_a.row(0)[0], 0.0); // L column 0 is zero
        assert!(c_a.row(0)[1] != 0.0); // -(C L)_2
        assert_eq!(c_a.row(0)[2], 0.0); // DOb slots
        assert_eq!(c_a.row(0)[3], 0.0);
        assert_eq!(c_a.row(0)[4], 1.0); // C_gen = [1, 0]
        assert_eq!(c_a.row(0)[5], 0.0);
    }

    #[test]
    fn exact_inertia_output_switch() {
        let (exact, env, dob, rtob) = baseline(500.0, 1000.0, 0.5);
        let sys = assemble_open_loop(&exact, &env, &dob, &rtob)
            .unwrap()
            .with_exact_inertia_output()
            .unwrap();
        assert_eq!(sys.c_a().row(0), &[0.0, -250.0, 0.0, 1.0]);
        assert_eq!(sys.estimate_feedthrough().row(0), &[0.0, -250.0]);
        // Too late once a loop is closed.
        let closed = sys.close_inner_loop().unwrap();
        assert!(matches!(
            closed.with_exact_inertia_output(),
            Err(Error::WrongStage { .. })
        ));
        // With matched inertias the switch is the identity.
        let (exact, env, dob, rtob) = baseline(500.0, 500.0, 1.0);
        let plain = assemble_open_loop(&exact, &env, &dob, &rtob).unwrap();
        let switched = plain.clone().with_exact_inertia_output().unwrap();
        assert_eq!(plain.c_a(), switched.c_a());
    }

    #[test]
    fn dc_gain_is_inverse_force_gain() {
        let (exact, env, dob, rtob) = baseline(500.0, 1000.0, 0.5);
        for cf in [0.5, 2.0, 10.0] {
            let sys = assemble_open_loop(&exact, &env, &dob, &rtob)
                .unwrap()
                .close_inner_loop()
                .unwrap()
                .close_outer_loop(&ControllerGains::new(cf).unwrap())
                .unwrap();
            let dc = sys.static_estimate_gain().unwrap();
            assert!(
                (cf * dc - 1.0).abs() < 1e-9,
                "C_f * dc = {} at C_f = {cf}",
                cf * dc
            );
        }
    }
}
