//! Browser bindings. Each export is a thin wrapper over a plain function
//! returning a serializable value, so the logic is testable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pssc_core::figures::{figure_setup, panel_system, Figure};
use pssc_core::polariton::{self, hellmann_feynman, thermal_generator, Branch, CoupledModes, FiniteDiffSteps};
use pssc_core::stability::{log_space, stability_curve};
use pssc_core::transmission::spectrum_sweep;
use pssc_core::units::{hz_to_rad, rad_to_hz};
use pssc_core::{reference_preset, PresetKind};

/// Largest grid the page may request per axis.
pub const MAX_POINTS: usize = 401;

#[derive(Debug, Serialize)]
pub struct MapAxis {
    pub variable: &'static str,
    pub unit: &'static str,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Serialize)]
pub struct TransmissionMap {
    pub figure: &'static str,
    pub axis1: MapAxis,
    pub axis2: MapAxis,
    /// Row-major |t|, axis1 outer.
    pub abs_t: Vec<f64>,
    /// Homodyne quadrature Re[e^{-iφ} t] at φ = π/2.
    pub quadrature: Vec<f64>,
    pub max_abs_t: f64,
    pub cavity_detuning_hz: f64,
}

fn map_axis(a: &pssc_core::transmission::Axis) -> MapAxis {
    use pssc_core::transmission::SweepVariable as V;
    let (unit, scale) = match a.variable {
        V::ProbeDetuning | V::CavityDetuning => ("MHz", rad_to_hz(1.0) * 1e-6),
        V::Temperature => ("K", 1.0),
        V::Field => ("mT", 1e3),
    };
    MapAxis {
        variable: a.variable.name(),
        unit,
        min: a.min * scale,
        max: a.max * scale,
        points: a.points,
    }
}

/// |t| over one figure panel with the coupling and cavity linewidth
/// replaced.
pub fn transmission_map(figure: &str, g_hz: f64, kappa_hz: f64, points: usize) -> Result<TransmissionMap, String> {
    let figure: Figure = figure.parse().map_err(|e: pssc_core::Error| e.to_string())?;
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be in 2..={MAX_POINTS}"));
    }
    let mut system = panel_system();
    system.spins.g_plus = hz_to_rad(g_hz);
    system.spins.g_minus = hz_to_rad(g_hz);
    system.cavity.kappa_out = hz_to_rad(kappa_hz);
    system.validate().map_err(|e| e.to_string())?;
    let setup = figure_setup(figure, points, Some(system)).map_err(|e| e.to_string())?;
    let grid = spectrum_sweep(&setup.sweep, &setup.system).map_err(|e| e.to_string())?;
    let abs_t: Vec<f64> = grid.points.iter().map(|p| p.abs()).collect();
    Ok(TransmissionMap {
        figure: figure.tag(),
        axis1: map_axis(&setup.sweep.axis1),
        axis2: map_axis(&setup.sweep.axis2),
        max_abs_t: abs_t.iter().cloned().fold(0.0, f64::max),
        quadrature: grid.points.iter().map(|p| p.quadrature).collect(),
        abs_t,
        cavity_detuning_hz: rad_to_hz(setup.system.cavity_detuning()),
    })
}

#[derive(Debug, Serialize)]
pub struct OperatingPointView {
    pub d_hz: f64,
    pub closed_form_hz: f64,
    pub curvature_hz_per_k2: f64,
    /// Detuning grid for the slope plot, MHz.
    pub detuning_mhz: Vec<f64>,
    /// Upper-branch dν/dT in units of dω_a/dT.
    pub slope_upper: Vec<f64>,
    pub slope_lower: Vec<f64>,
}

/// Upper-branch operating point for equal couplings `g_hz` and thermal
/// ratio `r`, plus both branch slopes over ±40 MHz for plotting.
pub fn operating_point(g_hz: f64, r: f64) -> Result<OperatingPointView, String> {
    let mut system = panel_system();
    system.spins.g_plus = hz_to_rad(g_hz);
    system.spins.g_minus = hz_to_rad(g_hz);
    system.env.r_ratio = r;
    system.validate().map_err(|e| e.to_string())?;
    let (spins, env) = (&system.spins, &system.env);

    let generator = thermal_generator(env);
    let detuning_mhz: Vec<f64> = (0..=400).map(|i| -40.0 + 0.2 * i as f64).collect();
    let slope = |branch: Branch| -> Vec<f64> {
        detuning_mhz
            .iter()
            .map(|&d| {
                let modes = CoupledModes::at_detuning(spins, env, hz_to_rad(d * 1e6));
                hellmann_feynman(&modes, branch, generator) / env.dwa_dt
            })
            .collect()
    };
    let (slope_upper, slope_lower) = (slope(Branch::Upper), slope(Branch::Lower));

    let op = polariton::operating_point_numeric(spins, env, None, Branch::Upper, FiniteDiffSteps::default())
        .map_err(|e| e.to_string())?;
    let closed = polariton::operating_point_closed_form(spins.g_plus, r).map_err(|e| e.to_string())?;
    Ok(OperatingPointView {
        d_hz: rad_to_hz(op.detuning),
        closed_form_hz: rad_to_hz(closed.upper),
        curvature_hz_per_k2: rad_to_hz(op.curvature_t),
        detuning_mhz,
        slope_upper,
        slope_lower,
    })
}

#[derive(Debug, Serialize)]
pub struct StabilityView {
    pub tau_s: Vec<f64>,
    pub sigma_total: Vec<f64>,
    pub sigma_shot: Vec<f64>,
    pub floor_thermal: f64,
    pub floor_magnetic: f64,
    pub floor_pump: f64,
    pub floor_total: f64,
    pub knee_tau_s: f64,
}

/// σ_y(τ) from 0.1 s to 10⁴ s for a preset with the given instabilities
/// and probe power.
pub fn stability(preset: &str, dt_mk: f64, b_nt: f64, power: f64) -> Result<StabilityView, String> {
    let kind: PresetKind = preset.parse().map_err(|e: pssc_core::Error| e.to_string())?;
    if !(power.is_finite() && power > 0.0) {
        return Err("probe power must be > 0".into());
    }
    let mut p = reference_preset(kind);
    p.stabilities.temperature = dt_mk * 1e-3;
    p.stabilities.field = b_nt * 1e-9;
    p.probe.photon_flux = power;
    p.probe.beta_amplitude = power.sqrt();
    let taus = log_space(0.1, 1e4, 61).map_err(|e| e.to_string())?;
    let curve = stability_curve(&p, &taus).map_err(|e| e.to_string())?;
    let f = curve.floors;
    Ok(StabilityView {
        tau_s: curve.taus,
        sigma_total: curve.sigma_total,
        sigma_shot: curve.sigma_shot,
        floor_thermal: f.thermal_floor,
        floor_magnetic: f.magnetic_floor,
        floor_pump: f.pump_floor,
        floor_total: f.floor(),
        knee_tau_s: curve.knee_tau,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = transmissionMap)]
pub fn transmission_map_js(figure: &str, g_hz: f64, kappa_hz: f64, points: usize) -> Result<String, JsError> {
    to_js(transmission_map(figure, g_hz, kappa_hz, points))
}

#[wasm_bindgen(js_name = operatingPoint)]
pub fn operating_point_js(g_hz: f64, r: f64) -> Result<String, JsError> {
    to_js(operating_point(g_hz, r))
}

#[wasm_bindgen(js_name = stabilityCurve)]
pub fn stability_js(preset: &str, dt_mk: f64, b_nt: f64, power: f64) -> Result<String, JsError> {
    to_js(stability(preset, dt_mk, b_nt, power))
}
