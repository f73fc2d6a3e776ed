//! Shared fixtures: the four root-locus figure configurations and a builder
//! that assembles a loop from raw tuning numbers.

// Each integration-test target compiles its own copy and uses a subset.
#![allow(dead_code)]

use rfc_core::loopsys::{assemble_open_loop, AugmentedSystem, ControllerGains};
use rfc_core::observer::{
    conventional_gains, synthesize, DisturbanceModel, ObserverKind, ObserverRealization,
};
use rfc_core::plant::{build_servo_matrices, Environment, ModelVariant, ServoParams, StateMatrices};

/// One servo/environment/observer tuning.
#[derive(Debug, Clone, Copy)]
pub struct Tuning {
    pub j_exact: f64,
    pub j_nominal: f64,
    pub j_identified: f64,
    pub viscous: f64,
    pub d_env: f64,
    pub k_env: f64,
    pub g_dob: f64,
    pub g_rtob: f64,
}

impl Tuning {
    pub fn baseline() -> Self {
        Tuning {
            j_exact: 0.25,
            j_nominal: 0.25,
            j_identified: 0.25,
            viscous: 0.0,
            d_env: 50.0,
            k_env: 10000.0,
            g_dob: 500.0,
            g_rtob: 500.0,
        }
    }

    /// The four figure configurations: (a) matched inertia, equal bandwidths;
    /// (b) matched inertia, lead tuning; (c) inflated identified inertia;
    /// (d) reduced identified inertia.
    pub fn fig2(which: char) -> Self {
        let mut t = Tuning::baseline();
        match which {
            'a' => {}
            'b' => t.g_rtob = 1000.0,
            'c' => {
                t.g_rtob = 1000.0;
                t.j_identified = 0.5;
            }
            'd' => {
                t.g_rtob = 1000.0;
                t.j_identified = 0.125;
            }
            _ => panic!("unknown configuration {which}"),
        }
        t
    }

    pub fn with_identified_ratio(mut self, ratio: f64) -> Self {
        self.j_identified = self.j_exact * ratio;
        self
    }

    pub fn parts(
        &self,
    ) -> (
        StateMatrices,
        Environment,
        ObserverRealization,
        ObserverRealization,
    ) {
        let p = ServoParams::new(
            self.j_exact,
            self.j_nominal,
            self.j_identified,
            self.viscous,
            self.viscous,
            self.viscous,
        )
        .unwrap();
        let exact = build_servo_matrices(&p, ModelVariant::Exact);
        let nominal = build_servo_matrices(&p, ModelVariant::Nominal);
        let identified = build_servo_matrices(&p, ModelVariant::Identified);
        let env = Environment::new(self.d_env, self.k_env).unwrap();
        let dob = synthesize(
            &nominal,
            &DisturbanceModel::constant(),
            &conventional_gains(self.g_dob, nominal.inertia).unwrap(),
            ObserverKind::Dob,
        )
        .unwrap();
        let rtob = synthesize(
            &identified,
            &DisturbanceModel::constant(),
            &conventional_gains(self.g_rtob, identified.inertia).unwrap(),
            ObserverKind::Rtob,
        )
        .unwrap();
        (exact, env, dob, rtob)
    }

    pub fn open_loop(&self) -> AugmentedSystem {
        let (exact, env, dob, rtob) = self.parts();
        assemble_open_loop(&exact, &env, &dob, &rtob).unwrap()
    }

    pub fn inner_closed(&self) -> AugmentedSystem {
        self.open_loop().close_inner_loop().unwrap()
    }

    pub fn outer_closed(&self, force_gain: f64) -> AugmentedSystem {
        self.inner_closed()
            .close_outer_loop(&ControllerGains::new(force_gain).unwrap())
            .unwrap()
    }
}
