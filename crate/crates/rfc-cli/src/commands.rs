//! The five CLI commands. Each returns the process exit code on success;
//! hard failures map to the documented codes (64 usage/config, 74 I/O).

use std::fs;
use std::path::{Path, PathBuf};

use rfc_core::analysis::{classify, extract_tfs, root_locus, TfSet};
use rfc_core::sim::{simulate, step_metrics, Trace};

use crate::config::{self, parse_grid, set_param, Config, Pipeline};
use crate::report::{g9, Report};
use crate::svg::Plot;

/// Failures that abort a command.
#[derive(Debug)]
pub enum CmdError {
    /// Bad usage or configuration: exit 64.
    Config(String),
    /// Filesystem failure: exit 74.
    Io(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 64,
            CmdError::Io(_) => 74,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Config(m) | CmdError::Io(m) => m,
        }
    }
}

impl From<config::ConfigError> for CmdError {
    fn from(e: config::ConfigError) -> Self {
        CmdError::Config(e.0)
    }
}

type CmdResult = Result<i32, CmdError>;

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CmdError> {
    fs::create_dir_all(dir)
        .map_err(|e| CmdError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| CmdError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn load_pipeline(config_path: &Path) -> Result<(Pipeline, String), CmdError> {
    let raw = fs::read_to_string(config_path)
        .map_err(|e| CmdError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let config = config::parse(&raw)?;
    Ok((config.build()?, raw))
}

fn finish_report(report: &Report, out: &Path) -> Result<(), CmdError> {
    let text = report.render();
    print!("{text}");
    write_file(out, "report.txt", &text)?;
    Ok(())
}

fn extract(pipeline: &Pipeline) -> Result<(rfc_core::loopsys::AugmentedSystem, TfSet), CmdError> {
    let inner = pipeline.inner_closed()?;
    let tfs = extract_tfs(&inner).map_err(|e| CmdError::Config(e.to_string()))?;
    Ok((inner, tfs))
}

/// Structural check: minimum phase and closed-loop stability.
/// Exit 0 when both hold, 2 on a right-half-plane zero, 3 on instability.
pub fn cmd_check(config_path: &Path, out: &Path) -> CmdResult {
    let (pipeline, raw) = load_pipeline(config_path)?;
    let mut report = Report::new("check", &config_path.display().to_string());
    report.config_echo(&raw);

    let (_, tfs) = extract(&pipeline)?;
    let mp = classify(
        &tfs.l.tf,
        pipeline.config.dob.bandwidth,
        pipeline.config.rtob.bandwidth,
    )
    .map_err(|e| CmdError::Config(e.to_string()))?;

    let outer = pipeline.outer_closed()?;
    let eig = outer
        .eigenvalues()
        .map_err(|e| CmdError::Config(e.to_string()))?;
    let stable = eig.iter().all(|l| l.re < 0.0);
    let dc = if stable {
        outer
            .static_estimate_gain()
            .ok()
            .map(|g| g * pipeline.force_gain)
    } else {
        None
    };

    report.observers(&outer);
    report.tf_set(&tfs);
    report.classification(&mp);
    report.closed_loop(&outer, dc);
    finish_report(&report, out)?;

    if mp.rhp_zero {
        Ok(2)
    } else if !stable {
        Ok(3)
    } else {
        Ok(0)
    }
}

/// Prints the extracted transfer functions.
pub fn cmd_tf(config_path: &Path, out: &Path) -> CmdResult {
    let (pipeline, raw) = load_pipeline(config_path)?;
    let mut report = Report::new("tf", &config_path.display().to_string());
    report.config_echo(&raw);
    let (inner, tfs) = extract(&pipeline)?;
    report.observers(&inner);
    report.tf_set(&tfs);
    let mp = classify(
        &tfs.l.tf,
        pipeline.config.dob.bandwidth,
        pipeline.config.rtob.bandwidth,
    )
    .map_err(|e| CmdError::Config(e.to_string()))?;
    report.classification(&mp);
    finish_report(&report, out)?;
    Ok(0)
}

/// Root locus over the force-gain grid: CSV plus SVG.
pub fn cmd_rlocus(config_path: &Path, out: &Path) -> CmdResult {
    let (pipeline, raw) = load_pipeline(config_path)?;
    let mut report = Report::new("rlocus", &config_path.display().to_string());
    report.config_echo(&raw);

    let (_, tfs) = extract(&pipeline)?;
    let grid = pipeline.gain_grid();
    let locus = root_locus(&tfs.l.tf, &grid).map_err(|e| CmdError::Config(e.to_string()))?;

    // Hidden (cancelled) modes are fixed branches: every closed-loop pole set
    // has full state dimension.
    let moving = locus.branches.len();
    let mut csv = String::from("gain,branch_index,re,im\n");
    for (gi, &gain) in locus.gains.iter().enumerate() {
        for (b, branch) in locus.branches.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                g9(gain),
                b,
                g9(branch[gi].re),
                g9(branch[gi].im)
            ));
        }
        for (h, mode) in tfs.l.hidden_modes.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                g9(gain),
                moving + h,
                g9(mode.re),
                g9(mode.im)
            ));
        }
    }
    write_file(out, "rlocus.csv", &csv)?;

    let mut plot = Plot::new("root locus", "Re(s)", "Im(s)");
    let branch_points: Vec<Vec<(f64, f64)>> = locus
        .branches
        .iter()
        .map(|b| b.iter().map(|c| (c.re, c.im)).collect())
        .collect();
    let poles: Vec<(f64, f64)> = tfs
        .l
        .tf
        .poles()
        .map_err(|e| CmdError::Config(e.to_string()))?
        .iter()
        .chain(tfs.l.hidden_modes.iter())
        .map(|c| (c.re, c.im))
        .collect();
    let zeros: Vec<(f64, f64)> = tfs
        .l
        .tf
        .zeros()
        .map_err(|e| CmdError::Config(e.to_string()))?
        .iter()
        .map(|c| (c.re, c.im))
        .collect();
    {
        let mut all: Vec<&[(f64, f64)]> = branch_points.iter().map(|b| b.as_slice()).collect();
        all.push(poles.as_slice());
        all.push(zeros.as_slice());
        plot.fit_ranges(all);
    }
    for (i, b) in branch_points.iter().enumerate() {
        plot.polyline(b, Plot::color(i), None);
    }
    plot.cross_markers(&poles, "#222");
    plot.circle_markers(&zeros, "#222");
    write_file(out, "rlocus.svg", &plot.render())?;

    let mp = classify(
        &tfs.l.tf,
        pipeline.config.dob.bandwidth,
        pipeline.config.rtob.bandwidth,
    )
    .map_err(|e| CmdError::Config(e.to_string()))?;
    report.tf_set(&tfs);
    report.classification(&mp);
    report.section("root locus");
    report.kv("gains", format!("{} points over [{}, {}]", grid.len(), g9(grid[0]), g9(*grid.last().unwrap())));
    report.kv("moving_branches", moving.to_string());
    report.kv("fixed_branches", tfs.l.hidden_modes.len().to_string());
    report.blank();
    finish_report(&report, out)?;
    Ok(0)
}

fn write_trace_csv(out: &Path, trace: &Trace) -> Result<(), CmdError> {
    let mut csv = String::from("t,q,qdot,tau_int_true,tau_int_est,tau_dis_est,u\n");
    for i in 0..trace.len() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            g9(trace.t[i]),
            g9(trace.q[i]),
            g9(trace.qdot[i]),
            g9(trace.tau_int_true[i]),
            g9(trace.tau_int_est[i]),
            g9(trace.tau_dis_est[i]),
            g9(trace.u[i]),
        ));
    }
    write_file(out, "step.csv", &csv)?;
    Ok(())
}

/// Step-response simulation: CSV, SVG and metrics. Exit 3 on divergence
/// (with the partial trace persisted).
pub fn cmd_step(config_path: &Path, out: &Path, seed: Option<u64>) -> CmdResult {
    let (pipeline, raw) = load_pipeline(config_path)?;
    let mut report = Report::new("step", &config_path.display().to_string());
    report.config_echo(&raw);

    let outer = pipeline.outer_closed()?;
    let scenario = pipeline.scenario(seed);
    let trace = simulate(&outer, &scenario).map_err(|e| CmdError::Config(e.to_string()))?;

    write_trace_csv(out, &trace)?;

    let mut plot = Plot::new("step response", "t [s]", "torque [N m]");
    let est: Vec<(f64, f64)> = trace
        .t
        .iter()
        .zip(&trace.tau_int_est)
        .map(|(&t, &v)| (t, v))
        .collect();
    let truth: Vec<(f64, f64)> = trace
        .t
        .iter()
        .zip(&trace.tau_int_true)
        .map(|(&t, &v)| (t, v))
        .collect();
    plot.fit_ranges([est.as_slice(), truth.as_slice()]);
    plot.polyline(&est, Plot::color(0), Some("estimate"));
    plot.polyline(&truth, Plot::color(1), Some("true"));
    write_file(out, "step.svg", &plot.render())?;

    report.observers(&outer);
    report.closed_loop(
        &outer,
        outer
            .static_estimate_gain()
            .ok()
            .map(|gv| gv * pipeline.force_gain),
    );
    for w in &trace.warnings {
        report.warn(w);
    }

    let code = if let Some(t) = trace.diverged_at {
        report.section("result");
        report.kv("diverged_at", g9(t));
        report.blank();
        report.warn_raw("W-DIVERGED", &format!("state left the finite range at t = {}", g9(t)));
        3
    } else {
        let target = pipeline.config.sim.tau_ref.target(scenario.t_end);
        let metrics = step_metrics(&trace, target).map_err(|e| CmdError::Config(e.to_string()))?;
        report.metrics(&metrics, target);
        0
    };
    finish_report(&report, out)?;
    Ok(code)
}

/// One-parameter study. Writes one row per grid point.
pub fn cmd_sweep(
    config_path: &Path,
    out: &Path,
    param: &str,
    grid_spec: &str,
    seed: Option<u64>,
) -> CmdResult {
    let (base_pipeline, raw) = load_pipeline(config_path)?;
    let base = base_pipeline.config;
    let grid = parse_grid(grid_spec)?;
    let mut report = Report::new("sweep", &config_path.display().to_string());
    report.config_echo(&raw);
    report.section("sweep");
    report.kv("parameter", param);
    report.kv("points", grid.len().to_string());
    report.blank();

    let mut csv = String::from(
        "value,stable,rhp_zero,dominant_pole_re,overshoot,settling_time_2pct\n",
    );
    for &value in &grid {
        let mut config: Config = base.clone();
        set_param(&mut config, param, value)?;
        let pipeline = config.build()?;
        let (_, tfs) = extract(&pipeline)?;
        let mp = classify(
            &tfs.l.tf,
            pipeline.config.dob.bandwidth,
            pipeline.config.rtob.bandwidth,
        )
        .map_err(|e| CmdError::Config(e.to_string()))?;

        let outer = pipeline.outer_closed()?;
        let eig = outer
            .eigenvalues()
            .map_err(|e| CmdError::Config(e.to_string()))?;
        let dominant = eig.iter().fold(f64::NEG_INFINITY, |m, l| m.max(l.re));
        let stable = dominant < 0.0;

        let scenario = pipeline.scenario(seed);
        let trace = simulate(&outer, &scenario).map_err(|e| CmdError::Config(e.to_string()))?;
        let target = pipeline.config.sim.tau_ref.target(scenario.t_end);
        let (overshoot, settling) = if trace.diverged_at.is_some() {
            (String::from("inf"), String::new())
        } else {
            let m = step_metrics(&trace, target).map_err(|e| CmdError::Config(e.to_string()))?;
            (
                g9(m.overshoot),
                m.settling_time_2pct.map(g9).unwrap_or_default(),
            )
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            g9(value),
            stable,
            mp.rhp_zero,
            g9(dominant),
            overshoot,
            settling
        ));
    }
    write_file(out, "sweep.csv", &csv)?;
    finish_report(&report, out)?;
    Ok(0)
}
