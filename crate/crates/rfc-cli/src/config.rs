//! JSON configuration schema and validation.
//!
//! Unknown keys are rejected everywhere. Field names follow the usual
//! symbols for these controllers (J_m, J_mn, J_mi, D_env, K_env, C_f, ...),
//! so configs read like the figure captions they encode.

use serde::Deserialize;

use rfc_core::loopsys::{assemble_open_loop, AugmentedSystem, ControllerGains};
use rfc_core::numkit::Matrix;
use rfc_core::observer::{
    bandwidth_gains, synthesize, DisturbanceModel, ObserverKind, ObserverRealization,
};
use rfc_core::plant::{
    build_servo_matrices, DisturbanceSignals, Environment, ModelVariant, Noise, ServoParams,
    Signal, StateMatrices, TauIMode,
};
use rfc_core::sim::Scenario;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub servo: ServoSection,
    pub environment: EnvironmentSection,
    pub dob: ObserverSection,
    pub rtob: RtobSection,
    pub controller: ControllerSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServoSection {
    #[serde(rename = "J_m")]
    pub j_m: f64,
    #[serde(rename = "J_mn")]
    pub j_mn: f64,
    #[serde(rename = "J_mi")]
    pub j_mi: f64,
    #[serde(rename = "b_m", default)]
    pub b_m: f64,
    #[serde(rename = "b_mn", default)]
    pub b_mn: f64,
    #[serde(rename = "b_mi", default)]
    pub b_mi: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    #[serde(rename = "D_env")]
    pub d_env: f64,
    #[serde(rename = "K_env")]
    pub k_env: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    pub bandwidth: f64,
    #[serde(default)]
    pub model: ModelSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtobSection {
    pub bandwidth: f64,
    #[serde(default)]
    pub model: ModelSpec,
    /// Which inertia the output vector reads the estimate with. The default
    /// ("identified") is consistent with the RTOb gains; "exact" selects the
    /// literal comparison form.
    #[serde(default)]
    pub c_a_inertia: CaInertia,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CaInertia {
    #[default]
    Identified,
    Exact,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    #[default]
    Constant,
    Periodic {
        omega: f64,
    },
    Custom {
        a: Vec<Vec<f64>>,
        c: Vec<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(rename = "C_f")]
    pub c_f: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_tau_ref")]
    pub tau_ref: SignalSpec,
    #[serde(default)]
    pub tau_u: SignalSpec,
    #[serde(default)]
    pub tau_id_u: SignalSpec,
    #[serde(default)]
    pub tau_i: SignalSpec,
    #[serde(default)]
    pub tau_i_mode: TauIModeSpec,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: default_dt(),
            t_end: default_t_end(),
            tau_ref: default_tau_ref(),
            tau_u: SignalSpec::default(),
            tau_id_u: SignalSpec::default(),
            tau_i: SignalSpec::default(),
            tau_i_mode: TauIModeSpec::default(),
            noise_std: 0.0,
            seed: 0,
        }
    }
}

fn default_dt() -> f64 {
    1e-5
}

fn default_t_end() -> f64 {
    0.2
}

fn default_tau_ref() -> SignalSpec {
    SignalSpec::Step {
        amplitude: 1.0,
        at: 0.0,
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Step {
        amplitude: f64,
        #[serde(default)]
        at: f64,
    },
    Ramp {
        slope: f64,
    },
    Sine {
        amplitude: f64,
        omega: f64,
    },
}

impl SignalSpec {
    pub fn to_signal(&self) -> Signal {
        match *self {
            SignalSpec::Zero => Signal::Zero,
            SignalSpec::Constant { value } => Signal::Constant(value),
            SignalSpec::Step { amplitude, at } => Signal::Step { amplitude, at },
            SignalSpec::Ramp { slope } => Signal::Ramp { slope },
            SignalSpec::Sine { amplitude, omega } => Signal::Sine { amplitude, omega },
        }
    }

    /// Final value of the signal over a horizon, used as the step target for
    /// metrics.
    pub fn target(&self, t_end: f64) -> f64 {
        self.to_signal().eval(t_end)
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TauIModeSpec {
    #[default]
    Explicit,
    ModelDerived,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default)]
    pub gain_grid: Option<GridSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Everything a command needs, validated and synthesized.
pub struct Pipeline {
    pub config: Config,
    pub exact: StateMatrices,
    pub env: Environment,
    pub dob: ObserverRealization,
    pub rtob: ObserverRealization,
    pub force_gain: f64,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn parse(text: &str) -> Result<Config, ConfigError> {
    let config: Config = serde_json::from_str(text).map_err(|e| {
        ConfigError(format!(
            "config parse error at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    validate(&config)?;
    Ok(config)
}

fn validate(c: &Config) -> Result<(), ConfigError> {
    let field_err = |field: &str, why: String| ConfigError(format!("field {field}: {why}"));
    ServoParams::new(
        c.servo.j_m,
        c.servo.j_mn,
        c.servo.j_mi,
        c.servo.b_m,
        c.servo.b_mn,
        c.servo.b_mi,
    )
    .map_err(|e| field_err("servo", e.to_string()))?;
    Environment::new(c.environment.d_env, c.environment.k_env)
        .map_err(|e| field_err("environment", e.to_string()))?;
    for (name, bandwidth, model) in [
        ("dob", c.dob.bandwidth, &c.dob.model),
        ("rtob", c.rtob.bandwidth, &c.rtob.model),
    ] {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(field_err(
                &format!("{name}.bandwidth"),
                format!("must be positive, got {bandwidth}"),
            ));
        }
        build_model(model).map_err(|e| field_err(&format!("{name}.model"), e))?;
    }
    if !(c.controller.c_f.is_finite() && c.controller.c_f >= 0.0) {
        return Err(field_err(
            "controller.C_f",
            format!("must be non-negative, got {}", c.controller.c_f),
        ));
    }
    if !c.sim.dt.is_finite() || c.sim.dt <= 0.0 {
        return Err(field_err("sim.dt", "must be positive".into()));
    }
    if c.sim.t_end < 10.0 * c.sim.dt {
        return Err(field_err("sim.t_end", "must be at least 10 dt".into()));
    }
    if !c.sim.noise_std.is_finite() || c.sim.noise_std < 0.0 {
        return Err(field_err("sim.noise_std", "must be non-negative".into()));
    }
    if let Some(g) = &c.analysis.gain_grid {
        if !(g.min > 0.0 && g.max > g.min && g.points >= 2) {
            return Err(field_err(
                "analysis.gain_grid",
                "requires 0 < min < max and points >= 2".into(),
            ));
        }
    }
    Ok(())
}

fn build_model(spec: &ModelSpec) -> Result<DisturbanceModel, String> {
    match spec {
        ModelSpec::Constant => Ok(DisturbanceModel::constant()),
        ModelSpec::Periodic { omega } => {
            DisturbanceModel::periodic(*omega).map_err(|e| e.to_string())
        }
        ModelSpec::Custom { a, c } => {
            let k = a.len();
            let a_m = Matrix::from_rows(a).map_err(|e| e.to_string())?;
            if c.len() != k {
                return Err(format!("output row has {} entries, generator is {k}x{k}", c.len()));
            }
            DisturbanceModel::custom(a_m, Matrix::row_vector(c)).map_err(|e| e.to_string())
        }
    }
}

impl Config {
    /// Synthesizes both observers and packages everything commands share.
    pub fn build(self) -> Result<Pipeline, ConfigError> {
        let params = ServoParams::new(
            self.servo.j_m,
            self.servo.j_mn,
            self.servo.j_mi,
            self.servo.b_m,
            self.servo.b_mn,
            self.servo.b_mi,
        )
        .map_err(|e| ConfigError(e.to_string()))?;
        let exact = build_servo_matrices(&params, ModelVariant::Exact);
        let nominal = build_servo_matrices(&params, ModelVariant::Nominal);
        let identified = build_servo_matrices(&params, ModelVariant::Identified);
        let env = Environment::new(self.environment.d_env, self.environment.k_env)
            .map_err(|e| ConfigError(e.to_string()))?;

        let dob_model = build_model(&self.dob.model).map_err(ConfigError)?;
        let dob_gains = bandwidth_gains(&dob_model, self.dob.bandwidth, nominal.inertia)
            .map_err(|e| ConfigError(format!("dob gains: {e}")))?;
        let dob = synthesize(&nominal, &dob_model, &dob_gains, ObserverKind::Dob)
            .map_err(|e| ConfigError(format!("dob synthesis: {e}")))?;

        let rtob_model = build_model(&self.rtob.model).map_err(ConfigError)?;
        let rtob_gains = bandwidth_gains(&rtob_model, self.rtob.bandwidth, identified.inertia)
            .map_err(|e| ConfigError(format!("rtob gains: {e}")))?;
        let rtob = synthesize(&identified, &rtob_model, &rtob_gains, ObserverKind::Rtob)
            .map_err(|e| ConfigError(format!("rtob synthesis: {e}")))?;

        Ok(Pipeline {
            force_gain: self.controller.c_f,
            config: self,
            exact,
            env,
            dob,
            rtob,
        })
    }
}

impl Pipeline {
    pub fn inner_closed(&self) -> Result<AugmentedSystem, ConfigError> {
        let open = assemble_open_loop(&self.exact, &self.env, &self.dob, &self.rtob);
        open.and_then(|s| match self.config.rtob.c_a_inertia {
            CaInertia::Identified => Ok(s),
            CaInertia::Exact => s.with_exact_inertia_output(),
        })
        .and_then(|s| s.close_inner_loop())
        .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn outer_closed(&self) -> Result<AugmentedSystem, ConfigError> {
        self.outer_closed_at(self.force_gain)
    }

    pub fn outer_closed_at(&self, force_gain: f64) -> Result<AugmentedSystem, ConfigError> {
        let gains =
            ControllerGains::new(force_gain).map_err(|e| ConfigError(e.to_string()))?;
        self.inner_closed()?
            .close_outer_loop(&gains)
            .map_err(|e| ConfigError(e.to_string()))
    }

    /// Scenario from the sim section; `seed_override` applies the
    /// flag > env > config precedence resolved by the caller.
    pub fn scenario(&self, seed_override: Option<u64>) -> Scenario {
        let sim = &self.config.sim;
        let noise = Noise {
            velocity_std: sim.noise_std,
            position_std: 0.0,
            seed: seed_override.unwrap_or(sim.seed),
        };
        Scenario {
            tau_ref: sim.tau_ref.to_signal(),
            disturbances: DisturbanceSignals {
                tau_u: sim.tau_u.to_signal(),
                tau_id_u: sim.tau_id_u.to_signal(),
                tau_i_mode: match sim.tau_i_mode {
                    TauIModeSpec::Explicit => TauIMode::Explicit(sim.tau_i.to_signal()),
                    TauIModeSpec::ModelDerived => TauIMode::ModelDerived,
                },
            },
            noise,
            dt: sim.dt,
            t_end: sim.t_end,
        }
    }

    pub fn gain_grid(&self) -> Vec<f64> {
        match &self.config.analysis.gain_grid {
            Some(g) => rfc_core::analysis::log_grid(g.min, g.max, g.points),
            None => rfc_core::analysis::default_gain_grid(),
        }
    }
}

/// Numeric config fields addressable by `sweep --param`.
pub const SWEEPABLE: &[&str] = &[
    "servo.J_m",
    "servo.J_mn",
    "servo.J_mi",
    "servo.b_m",
    "servo.b_mn",
    "servo.b_mi",
    "environment.D_env",
    "environment.K_env",
    "dob.bandwidth",
    "rtob.bandwidth",
    "controller.C_f",
    "sim.noise_std",
];

/// Applies a value to a sweepable field.
pub fn set_param(config: &mut Config, param: &str, value: f64) -> Result<(), ConfigError> {
    match param {
        "servo.J_m" => config.servo.j_m = value,
        "servo.J_mn" => config.servo.j_mn = value,
        "servo.J_mi" => config.servo.j_mi = value,
        "servo.b_m" => config.servo.b_m = value,
        "servo.b_mn" => config.servo.b_mn = value,
        "servo.b_mi" => config.servo.b_mi = value,
        "environment.D_env" => config.environment.d_env = value,
        "environment.K_env" => config.environment.k_env = value,
        "dob.bandwidth" => config.dob.bandwidth = value,
        "rtob.bandwidth" => config.rtob.bandwidth = value,
        "controller.C_f" => config.controller.c_f = value,
        "sim.noise_std" => config.sim.noise_std = value,
        other => {
            return Err(ConfigError(format!(
                "parameter {other} is not sweepable; choose one of: {}",
                SWEEPABLE.join(", ")
            )))
        }
    }
    validate(config)
}

/// Parses `a:b:n` (inclusive linear grid) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |msg: &str| ConfigError(format!("grid spec '{spec}': {msg}"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected a:b:n"));
        }
        let a: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
        let b: f64 = parts[1].parse().map_err(|_| bad("bad end"))?;
        let n: usize = parts[2].parse().map_err(|_| bad("bad count"))?;
        if n == 0 {
            return Err(bad("count must be positive"));
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        Ok((0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect())
    } else {
        let vals: Result<Vec<f64>, _> = spec.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|_| bad("bad number"))?;
        if vals.is_empty() {
            return Err(bad("empty"));
        }
        Ok(vals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "servo": {"J_m": 0.25, "J_mn": 0.25, "J_mi": 0.125},
        "environment": {"D_env": 50.0, "K_env": 10000.0},
        "dob": {"bandwidth": 500.0},
        "rtob": {"bandwidth": 1000.0},
        "controller": {"C_f": 2.0}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.sim.dt, 1e-5);
        assert_eq!(c.sim.t_end, 0.2);
        assert!(matches!(c.dob.model, ModelSpec::Constant));
        let p = c.build().unwrap();
        assert_eq!(p.dob.a_obs.row(0), &[-500.0]);
        assert_eq!(p.rtob.a_obs.row(0), &[-1000.0]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let with_extra = MINIMAL.replace(
            "\"controller\": {\"C_f\": 2.0}",
            "\"controller\": {\"C_f\": 2.0, \"mystery\": 1}",
        );
        let err = parse(&with_extra).unwrap_err();
        assert!(err.0.contains("mystery"), "{}", err.0);
    }

    #[test]
    fn invalid_inertia_rejected() {
        let bad = MINIMAL.replace("\"J_mi\": 0.125", "\"J_mi\": -1.0");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("1:3:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("0.5, 2").unwrap(), vec![0.5, 2.0]);
        assert_eq!(parse_grid("5:9:1").unwrap(), vec![5.0]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn sweep_param_paths() {
        let mut c = parse(MINIMAL).unwrap();
        set_param(&mut c, "servo.J_mi", 0.3).unwrap();
        assert_eq!(c.servo.j_mi, 0.3);
        assert!(set_param(&mut c, "sim.tau_ref", 1.0).is_err());
        assert!(set_param(&mut c, "servo.J_mi", -2.0).is_err());
    }

    #[test]
    fn exact_inertia_output_switch_changes_the_readout() {
        let with_switch = MINIMAL.replace(
            "\"rtob\": {\"bandwidth\": 1000.0}",
            "\"rtob\": {\"bandwidth\": 1000.0, \"c_a_inertia\": \"exact\"}",
        );
        let p = parse(&with_switch).unwrap().build().unwrap();
        let sys = p.inner_closed().unwrap();
        // l_R2 = 1000 * 0.125 = 125, scaled by J_m / J_mi = 2.
        assert_eq!(sys.c_a().row(0)[1], -250.0);

        let p = parse(MINIMAL).unwrap().build().unwrap();
        assert_eq!(p.inner_closed().unwrap().c_a().row(0)[1], -125.0);
    }

    #[test]
    fn signal_specs_convert() {
        let s: SignalSpec =
            serde_json::from_str(r#"{"type": "step", "amplitude": 2.0}"#).unwrap();
        assert_eq!(s.to_signal().eval(0.1), 2.0);
        let s: SignalSpec = serde_json::from_str(r#"{"type": "ramp", "slope": 3.0}"#).unwrap();
        assert_eq!(s.to_signal().eval(2.0), 6.0);
    }
}
