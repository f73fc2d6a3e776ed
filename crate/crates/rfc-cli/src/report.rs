//! Human-readable run reports. All numeric output uses 9 significant digits
//! so repeated runs diff cleanly.

use num_complex::Complex64;
use rfc_core::analysis::{Compensator, MinimumPhaseReport, TfChannel, TfSet};
use rfc_core::error::Warning;
use rfc_core::loopsys::AugmentedSystem;
use rfc_core::sim::StepMetrics;

/// 9-significant-digit formatting used for every number in reports and CSVs.
pub fn g9(x: f64) -> String {
    // Normalize negative zero so reports do not depend on its sign bit.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.8e}")
}

pub fn complex9(c: &Complex64) -> String {
    format!("{} {:+.8e}j", g9(c.re), c.im)
}

/// Accumulates report sections; rendered once at the end of a command.
pub struct Report {
    lines: Vec<String>,
    warnings: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &str, config_path: &str) -> Self {
        let mut r = Report {
            lines: Vec::new(),
            warnings: Vec::new(),
        };
        r.lines.push(format!("# rfc {command} report"));
        r.lines.push(format!("config: {config_path}"));
        r.lines.push(String::new());
        r
    }

    pub fn section(&mut self, title: &str) {
        self.lines.push(format!("## {title}"));
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    pub fn kv(&mut self, key: &str, value: impl Into<String>) {
        self.lines.push(format!("{key}: {}", value.into()));
    }

    pub fn blank(&mut self) {
        self.lines.push(String::new());
    }

    pub fn warn(&mut self, w: &Warning) {
        self.warnings.push((w.code().to_string(), w.describe()));
    }

    pub fn warn_raw(&mut self, code: &str, text: &str) {
        self.warnings.push((code.to_string(), text.to_string()));
    }

    pub fn config_echo(&mut self, raw: &str) {
        self.section("configuration");
        for line in raw.trim_end().lines() {
            self.lines.push(format!("  {line}"));
        }
        self.blank();
    }

    pub fn observers(&mut self, sys: &AugmentedSystem) {
        self.section("observers");
        let dob = sys.dob();
        let rtob = sys.rtob();
        self.kv("dob.order", dob.order().to_string());
        self.kv(
            "dob.gains",
            format!("[{}]", row_fmt(dob.gains.row(0))),
        );
        self.kv("dob.error_pole(s)", poles_fmt(&eig_of(&dob.a_obs)));
        self.kv("rtob.order", rtob.order().to_string());
        self.kv(
            "rtob.gains",
            format!("[{}]", row_fmt(rtob.gains.row(0))),
        );
        self.kv("rtob.error_pole(s)", poles_fmt(&eig_of(&rtob.a_obs)));
        self.kv(
            "output_vector",
            format!("[{}]", row_fmt(sys.c_a().row(0))),
        );
        self.blank();
    }

    pub fn tf_channel(&mut self, name: &str, ch: &TfChannel) {
        self.line(format!("{name}:"));
        self.kv("  num", format!("[{}]", row_fmt(ch.tf.num().coeffs())));
        self.kv("  den", format!("[{}]", row_fmt(ch.tf.den().coeffs())));
        self.kv(
            "  degrees",
            format!("({}, {})", ch.tf.num().degree(), ch.tf.den().degree()),
        );
        match ch.tf.zeros() {
            Ok(z) if !z.is_empty() => self.kv("  zeros", poles_fmt(&z)),
            _ => self.kv("  zeros", "none"),
        }
        match ch.tf.poles() {
            Ok(p) if !p.is_empty() => self.kv("  poles", poles_fmt(&p)),
            _ => self.kv("  poles", "none"),
        }
        if !ch.hidden_modes.is_empty() {
            self.kv("  hidden_modes", poles_fmt(&ch.hidden_modes));
            for m in &ch.hidden_modes {
                let w = Warning::Cancellation {
                    location: (m.re, m.im),
                };
                self.warn_raw(w.code(), &format!("{name}: {}", w.describe()));
            }
        }
        self.kv("  fit_residual", g9(ch.residual));
    }

    pub fn tf_set(&mut self, tfs: &TfSet) {
        self.section("transfer functions (inner loop closed)");
        self.tf_channel("L", &tfs.l);
        self.tf_channel("T_tau_d", &tfs.t_tau_d);
        self.tf_channel("T_tau_i", &tfs.t_tau_i);
        self.tf_channel("T_noise", &tfs.t_noise);
        self.blank();
    }

    pub fn classification(&mut self, report: &MinimumPhaseReport) {
        self.section("open-loop classification");
        self.kv("relative_degree", report.relative_degree.to_string());
        self.kv("has_integrator", report.has_integrator.to_string());
        self.kv("rhp_zero", report.rhp_zero.to_string());
        self.kv(
            "compensator",
            match report.compensator {
                Compensator::Lead => "lead",
                Compensator::Lag => "lag",
                Compensator::Neutral => "neutral",
            },
        );
        if report.rhp_zero {
            for z in report.zeros.iter().filter(|z| z.re > 0.0) {
                self.warn(&Warning::RhpZero {
                    location: (z.re, z.im),
                });
            }
        }
        self.blank();
    }

    pub fn closed_loop(&mut self, sys: &AugmentedSystem, dc_gain: Option<f64>) {
        self.section("closed loop");
        self.kv(
            "force_gain",
            g9(sys.force_gain().unwrap_or(f64::NAN)),
        );
        match sys.eigenvalues() {
            Ok(eig) => {
                let stable = eig.iter().all(|l| l.re < 0.0);
                self.kv("poles", poles_fmt(&eig));
                self.kv("stable", stable.to_string());
            }
            Err(e) => self.kv("poles", format!("error: {e}")),
        }
        if let Some(dc) = dc_gain {
            self.kv("dc_gain_ref_to_estimate", g9(dc));
        }
        self.blank();
    }

    pub fn metrics(&mut self, m: &StepMetrics, target: f64) {
        self.section("step metrics");
        self.kv("target", g9(target));
        self.kv("overshoot", g9(m.overshoot));
        match m.settling_time_2pct {
            Some(t) => self.kv("settling_time_2pct", g9(t)),
            None => self.kv("settling_time_2pct", "unsettled"),
        }
        self.kv("steady_state_error", g9(m.steady_state_error));
        self.kv("oscillatory", m.oscillatory.to_string());
        for w in &m.warnings {
            self.warn(w);
        }
        self.blank();
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out.push_str("## warnings\n");
        if self.warnings.is_empty() {
            out.push_str("none\n");
        } else {
            for (code, text) in &self.warnings {
                out.push_str(&format!("[{code}] {text}\n"));
            }
        }
        out
    }
}

fn eig_of(m: &rfc_core::numkit::Matrix) -> Vec<Complex64> {
    rfc_core::numkit::eigenvalues(m).unwrap_or_default()
}

fn row_fmt(row: &[f64]) -> String {
    row.iter().map(|v| g9(*v)).collect::<Vec<_>>().join(", ")
}

fn poles_fmt(poles: &[Complex64]) -> String {
    let mut sorted = poles.to_vec();
    sorted.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    sorted
        .iter()
        .map(complex9)
        .collect::<Vec<_>>()
        .join("; ")
}
