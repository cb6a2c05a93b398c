//! Executes a resolved [`RunConfig`]. Output bytes depend on the config
//! alone, so a rerun from the sidecar reproduces them exactly.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use pssc_core::params::ParamSet;
use pssc_core::polariton::{self, FiniteDiffSteps};
use pssc_core::stability::{self, fractional_shot_noise};
use pssc_core::transmission::{spectrum_sweep, TransmissionPoint};
use pssc_core::units::rad_to_hz;
use pssc_core::{Branch, ProbeParams};

use crate::config::{trace_path, AxisDoc, Command, Format, RunConfig, SweepDoc};
use crate::error::CliError;

/// Fractional floor the outlook parameters are expected to reach.
pub const FLOOR_TARGET: f64 = 1e-13;

pub struct Outputs {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub summary: serde_json::Value,
}

pub fn execute(cfg: &RunConfig) -> Result<Outputs, CliError> {
    match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::OperatingPoint => operating_point(cfg),
        Command::Stability => stability(cfg),
    }
}

fn missing(key: &str, command: Command) -> CliError {
    CliError::config(key, format!("`{key}` is required for {command}"))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("outputs serialize");
    s.push('\n');
    s.into_bytes()
}

fn spectrum(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let doc: &SweepDoc = cfg.sweep.as_ref().ok_or_else(|| missing("sweep", cfg.command))?;
    for (key, axis) in [("sweep.axis1.points", &doc.axis1), ("sweep.axis2.points", &doc.axis2)] {
        if axis.points == 0 {
            return Err(CliError::config(key, "must be >= 1"));
        }
    }
    let preset = cfg.params.to_preset()?;
    let spec = doc.to_spec(preset.probe.quadrature_phase);
    let grid = spectrum_sweep(&spec, &preset.system)?;
    let (l1, l2) = (doc.axis1.labels(), doc.axis2.labels());
    let trace_label = doc.trace_at;

    let mut files = Vec::new();
    match cfg.format {
        Format::Csv => {
            files.push((cfg.out.clone(), grid_csv(&l1, &l2, &grid.points).into_bytes()));
            if let (Some(trace), Some(at)) = (&grid.trace, trace_label) {
                files.push((
                    trace_path(&cfg.out, cfg.format),
                    grid_csv(&[at], &l2, trace).into_bytes(),
                ));
            }
        }
        Format::Json => {
            let trace = grid
                .trace
                .as_ref()
                .zip(trace_label)
                .map(|(t, at)| json!({ "axis1_value": at, "points": columns(t) }));
            let body = json!({
                "axis1": axis_json(&doc.axis1, &l1),
                "axis2": axis_json(&doc.axis2, &l2),
                "quadrature_phase_rad": preset.probe.quadrature_phase,
                "grid": columns(&grid.points),
                "trace": trace,
            });
            files.push((cfg.out.clone(), to_json(&body)));
        }
    }
    let peak = grid.points.iter().map(|p| p.abs()).fold(0.0, f64::max);
    let summary = json!({
        "axis1": doc.axis1.variable.name(),
        "axis2": doc.axis2.variable.name(),
        "rows": l1.len(),
        "columns": l2.len(),
        "max_abs_t": peak,
    });
    Ok(Outputs { files, summary })
}

fn grid_csv(axis1: &[f64], axis2: &[f64], points: &[TransmissionPoint]) -> String {
    let mut s = String::with_capacity(64 * points.len() + 64);
    s.push_str("axis1,axis2,re_t,im_t,abs_t\n");
    for (i, &a) in axis1.iter().enumerate() {
        for (j, &b) in axis2.iter().enumerate() {
            let t = &points[i * axis2.len() + j];
            let _ = writeln!(s, "{a:e},{b:e},{:e},{:e},{:e}", t.t_complex.re, t.t_complex.im, t.abs());
        }
    }
    s
}

fn axis_json(doc: &AxisDoc, labels: &[f64]) -> serde_json::Value {
    json!({ "variable": doc.variable.name(), "unit": doc.unit(), "values": labels })
}

/// Row-major columns of t.
fn columns(points: &[TransmissionPoint]) -> serde_json::Value {
    json!({
        "re_t": points.iter().map(|p| p.t_complex.re).collect::<Vec<_>>(),
        "im_t": points.iter().map(|p| p.t_complex.im).collect::<Vec<_>>(),
        "abs_t": points.iter().map(|p| p.abs()).collect::<Vec<_>>(),
        "quadrature": points.iter().map(|p| p.quadrature).collect::<Vec<_>>(),
    })
}

#[derive(Debug, Serialize)]
pub struct OperatingPointReport {
    pub branch: Branch,
    /// Instantaneous ω_c − ω_a at the root.
    #[serde(rename = "D_hz")]
    pub d_hz: f64,
    pub cavity_ref_detuning_hz: f64,
    pub frequency_hz: f64,
    #[serde(rename = "dnudT_residual_hz_per_K")]
    pub residual_hz_per_k: f64,
    /// |residual| / (dω_a/dT)
    pub residual_relative: f64,
    #[serde(rename = "curvature_hz_per_K2")]
    pub curvature_hz_per_k2: f64,
    #[serde(rename = "curvature_hz_per_T2")]
    pub curvature_hz_per_t2: f64,
    /// Closed-form detuning for equal couplings g = √((g₊² + g₋²)/2).
    #[serde(rename = "closed_form_D_hz")]
    pub closed_form_d_hz: Option<f64>,
    /// |D − D_closed| / |D_closed|
    pub closed_form_delta: Option<f64>,
    pub params: ParamSet,
}

fn operating_point(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let preset = cfg.params.to_preset()?;
    let spins = &preset.system.spins;
    let env = preset.system.env;
    let branch = cfg.branch.unwrap_or(Branch::Upper);
    let op = polariton::operating_point_numeric(spins, &env, None, branch, FiniteDiffSteps::default())?;

    let g_eff = (0.5 * (spins.g_plus * spins.g_plus + spins.g_minus * spins.g_minus)).sqrt();
    let closed = polariton::operating_point_closed_form(g_eff, env.r_ratio)?;
    let closed_d = match branch {
        Branch::Upper => Some(closed.upper),
        Branch::Lower => Some(closed.lower),
        Branch::Middle => None,
    };
    let report = OperatingPointReport {
        branch,
        d_hz: rad_to_hz(op.detuning),
        cavity_ref_detuning_hz: rad_to_hz(op.cavity_ref_detuning),
        frequency_hz: rad_to_hz(op.frequency),
        residual_hz_per_k: rad_to_hz(op.dnu_dt_residual),
        residual_relative: (op.dnu_dt_residual / env.dwa_dt).abs(),
        curvature_hz_per_k2: rad_to_hz(op.curvature_t),
        curvature_hz_per_t2: rad_to_hz(op.curvature_b),
        closed_form_d_hz: closed_d.map(rad_to_hz),
        closed_form_delta: closed_d.map(|c| ((op.detuning - c) / c).abs()),
        params: cfg.params.clone(),
    };
    let body = match cfg.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("key,value\n");
            let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
            let _ = writeln!(s, "branch,{}", report.branch);
            for (k, v) in [
                ("D_hz", report.d_hz),
                ("cavity_ref_detuning_hz", report.cavity_ref_detuning_hz),
                ("frequency_hz", report.frequency_hz),
                ("dnudT_residual_hz_per_K", report.residual_hz_per_k),
                ("residual_relative", report.residual_relative),
                ("curvature_hz_per_K2", report.curvature_hz_per_k2),
                ("curvature_hz_per_T2", report.curvature_hz_per_t2),
            ] {
                let _ = writeln!(s, "{k},{v:e}");
            }
            let _ = writeln!(s, "closed_form_D_hz,{}", opt(report.closed_form_d_hz));
            let _ = writeln!(s, "closed_form_delta,{}", opt(report.closed_form_delta));
            s.into_bytes()
        }
    };
    let summary = json!({
        "D_hz": report.d_hz,
        "closed_form_delta": report.closed_form_delta,
        "curvature_hz_per_K2": report.curvature_hz_per_k2,
    });
    Ok(Outputs {
        files: vec![(cfg.out.clone(), body)],
        summary,
    })
}

#[derive(Debug, Serialize)]
struct StabilityReport<'a> {
    tau_s: &'a [f64],
    sigma_total: &'a [f64],
    sigma_shot: &'a [f64],
    floor_thermal: f64,
    floor_magnetic: f64,
    floor_pump: f64,
    floor_total: f64,
    floor_below_target: bool,
    floor_target: f64,
    knee_tau_s: f64,
    sigma_shot_1s: f64,
    t_abs_at_probe: f64,
    polarization: &'a pssc_core::PolarizationState,
    operating_point_d_hz: f64,
}

fn stability(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let range = cfg.taus.ok_or_else(|| missing("taus", cfg.command))?;
    if range.points == 0 {
        return Err(CliError::config("taus.points", "must be >= 1"));
    }
    let preset = cfg.params.to_preset()?;
    if preset.probe.photon_flux <= 0.0 {
        return Err(CliError::config("photon_flux_per_s", "probe power must be > 0"));
    }
    let taus = stability::log_space(range.min_s, range.max_s, range.points)?;
    let curve = stability::stability_curve(&preset, &taus)?;
    let floors = curve.floors;
    let one_second = ProbeParams {
        tau: 1.0,
        ..preset.probe
    };
    let sigma_shot_1s = fractional_shot_noise(&preset.system.cavity, &one_second, preset.system.spins.omega_zfs)?;

    let report = StabilityReport {
        tau_s: &curve.taus,
        sigma_total: &curve.sigma_total,
        sigma_shot: &curve.sigma_shot,
        floor_thermal: floors.thermal_floor,
        floor_magnetic: floors.magnetic_floor,
        floor_pump: floors.pump_floor,
        floor_total: floors.floor(),
        floor_below_target: floors.floor() < FLOOR_TARGET,
        floor_target: FLOOR_TARGET,
        knee_tau_s: curve.knee_tau,
        sigma_shot_1s,
        t_abs_at_probe: curve.t_mag,
        polarization: &curve.polarization,
        operating_point_d_hz: rad_to_hz(curve.operating_point.detuning),
    };
    let body = match cfg.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("tau_s,sigma_total,sigma_shot,floor_thermal,floor_magnetic,floor_pump\n");
            for i in 0..curve.taus.len() {
                let _ = writeln!(
                    s,
                    "{:e},{:e},{:e},{:e},{:e},{:e}",
                    curve.taus[i],
                    curve.sigma_total[i],
                    curve.sigma_shot[i],
                    floors.thermal_floor,
                    floors.magnetic_floor,
                    floors.pump_floor
                );
            }
            s.into_bytes()
        }
    };
    let summary = json!({
        "floor_total": report.floor_total,
        "floor_thermal": report.floor_thermal,
        "floor_magnetic": report.floor_magnetic,
        "floor_pump": report.floor_pump,
        "floor_below_target": report.floor_below_target,
        "floor_target": FLOOR_TARGET,
        "knee_tau_s": report.knee_tau_s,
        "sigma_shot_1s": sigma_shot_1s,
    });
    Ok(Outputs {
        files: vec![(cfg.out.clone(), body)],
        summary,
    })
}
