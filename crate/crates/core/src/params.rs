//! Flat key/value parameter document in user-facing units (Hz, s, T, K).
//!
//! Every key carries its unit as a suffix. This is the format of preset
//! files, user configurations and the provenance sidecars written next to
//! every output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    CavityParams, EnvironmentState, Preset, PresetKind, ProbeParams, SpinBranch, SpinClass, SpinEnsembleParams,
    Stabilities, System,
};
use crate::units::{hz_to_rad, rad_to_hz};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinClassDoc {
    pub detuning_offset_hz: f64,
    pub weight: f64,
    pub branch: SpinBranch,
}

fn default_classes() -> Vec<SpinClassDoc> {
    SpinBranch::BOTH
        .iter()
        .map(|&branch| SpinClassDoc {
            detuning_offset_hz: 0.0,
            weight: 1.0,
            branch,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSet {
    pub omega_zfs_hz: f64,
    pub g_plus_hz: f64,
    pub g_minus_hz: f64,
    pub g0_single_hz: f64,
    pub n_spins: u64,
    pub gamma_pump_hz: f64,
    pub gamma_deph_hz: f64,
    pub gamma_0_per_s: f64,
    #[serde(default = "default_classes")]
    pub spin_classes: Vec<SpinClassDoc>,
    /// ω_c,ref − ω_zfs
    pub cavity_detuning_hz: f64,
    pub kappa_out_hz: f64,
    pub kappa_loss_hz: f64,
    pub delta_t_k: f64,
    pub b_field_t: f64,
    pub dwa_dt_hz_per_k: f64,
    pub r_ratio: f64,
    pub gyromagnetic_hz_per_t: f64,
    /// ω − ω_zfs
    pub probe_detuning_hz: f64,
    pub photon_flux_per_s: f64,
    pub beta_amplitude_sqrt_per_s: f64,
    pub tau_s: f64,
    pub quadrature_phase_rad: f64,
    pub temp_stability_k: f64,
    pub field_stability_t: f64,
    pub laser_stability_fraction: f64,
}

/// Upper-branch operating-point detuning ω_c − ω_a for thermal ratio `r < 0`.
fn upper_operating_detuning(g: f64, r: f64) -> f64 {
    let s = r.abs().sqrt();
    std::f64::consts::SQRT_2 * g * (1.0 / s - s)
}

impl ParamSet {
    /// Tabulated sample parameters. The cavity sits at the upper-branch
    /// thermal operating point and the probe on the upper polariton.
    pub fn reference(which: PresetKind) -> Self {
        let (kappa, deph, g, r, g0, n, flux, dt) = match which {
            PresetKind::Current => (200e3, 3e6, 1e6, -0.1, 0.1, 250_000_000_000_000, 1e18, 10e-3),
            PresetKind::Outlook => (50e3, 1e6, 5e6, -0.05, 0.3, 400_000_000_000_000, 1e20, 1e-3),
        };
        let detuning = upper_operating_detuning(g, r);
        let upper = 0.5 * detuning + (0.25 * detuning * detuning + 2.0 * g * g).sqrt();
        ParamSet {
            omega_zfs_hz: 2.87e9,
            g_plus_hz: g,
            g_minus_hz: g,
            g0_single_hz: g0,
            n_spins: n,
            // not tabulated; microsecond-scale pumping
            gamma_pump_hz: 1e6,
            gamma_deph_hz: deph,
            // T₁ ≈ 10 ms
            gamma_0_per_s: 100.0,
            spin_classes: default_classes(),
            cavity_detuning_hz: detuning,
            kappa_out_hz: kappa,
            kappa_loss_hz: 0.0,
            delta_t_k: 0.0,
            b_field_t: 0.0,
            dwa_dt_hz_per_k: EnvironmentState::NV_DWA_DT_HZ_PER_K,
            r_ratio: r,
            gyromagnetic_hz_per_t: EnvironmentState::NV_GYRO_HZ_PER_T,
            probe_detuning_hz: upper,
            photon_flux_per_s: flux,
            beta_amplitude_sqrt_per_s: flux.sqrt(),
            tau_s: 1.0,
            quadrature_phase_rad: std::f64::consts::FRAC_PI_2,
            temp_stability_k: dt,
            field_stability_t: 10e-9,
            laser_stability_fraction: 1e-6,
        }
    }

    pub fn to_preset(&self) -> Result<Preset> {
        let spins = SpinEnsembleParams {
            omega_zfs: hz_to_rad(self.omega_zfs_hz),
            spin_classes: self
                .spin_classes
                .iter()
                .map(|c| SpinClass {
                    detuning_offset: hz_to_rad(c.detuning_offset_hz),
                    weight: c.weight,
                    branch: c.branch,
                })
                .collect(),
            gamma_pump: hz_to_rad(self.gamma_pump_hz),
            gamma_deph: hz_to_rad(self.gamma_deph_hz),
            gamma_0: self.gamma_0_per_s,
            g0_single: hz_to_rad(self.g0_single_hz),
            n_spins: self.n_spins,
            g_plus: hz_to_rad(self.g_plus_hz),
            g_minus: hz_to_rad(self.g_minus_hz),
        };
        let cavity = CavityParams {
            omega_c_ref: spins.omega_zfs + hz_to_rad(self.cavity_detuning_hz),
            kappa_out: hz_to_rad(self.kappa_out_hz),
            kappa_loss: hz_to_rad(self.kappa_loss_hz),
        };
        let env = EnvironmentState {
            delta_t: self.delta_t_k,
            b_field: self.b_field_t,
            dwa_dt: hz_to_rad(self.dwa_dt_hz_per_k),
            r_ratio: self.r_ratio,
            gyromagnetic: hz_to_rad(self.gyromagnetic_hz_per_t),
        };
        let probe = ProbeParams {
            omega_probe: spins.omega_zfs + hz_to_rad(self.probe_detuning_hz),
            photon_flux: self.photon_flux_per_s,
            beta_amplitude: self.beta_amplitude_sqrt_per_s,
            tau: self.tau_s,
            quadrature_phase: self.quadrature_phase_rad,
        };
        let stabilities = Stabilities {
            temperature: self.temp_stability_k,
            field: self.field_stability_t,
            laser_fraction: self.laser_stability_fraction,
        };
        let preset = Preset {
            system: System { spins, cavity, env },
            probe,
            stabilities,
        };
        preset.validate()?;
        Ok(preset)
    }

    /// Inverse of [`ParamSet::to_preset`], up to one rounding of the 2π
    /// conversion per field.
    pub fn from_preset(p: &Preset) -> Self {
        let s = &p.system.spins;
        ParamSet {
            omega_zfs_hz: rad_to_hz(s.omega_zfs),
            g_plus_hz: rad_to_hz(s.g_plus),
            g_minus_hz: rad_to_hz(s.g_minus),
            g0_single_hz: rad_to_hz(s.g0_single),
            n_spins: s.n_spins,
            gamma_pump_hz: rad_to_hz(s.gamma_pump),
            gamma_deph_hz: rad_to_hz(s.gamma_deph),
            gamma_0_per_s: s.gamma_0,
            spin_classes: s
                .spin_classes
                .iter()
                .map(|c| SpinClassDoc {
                    detuning_offset_hz: rad_to_hz(c.detuning_offset),
                    weight: c.weight,
                    branch: c.branch,
                })
                .collect(),
            cavity_detuning_hz: rad_to_hz(p.system.cavity_detuning()),
            kappa_out_hz: rad_to_hz(p.system.cavity.kappa_out),
            kappa_loss_hz: rad_to_hz(p.system.cavity.kappa_loss),
            delta_t_k: p.system.env.delta_t,
            b_field_t: p.system.env.b_field,
            dwa_dt_hz_per_k: rad_to_hz(p.system.env.dwa_dt),
            r_ratio: p.system.env.r_ratio,
            gyromagnetic_hz_per_t: rad_to_hz(p.system.env.gyromagnetic),
            probe_detuning_hz: rad_to_hz(p.probe.omega_probe - s.omega_zfs),
            photon_flux_per_s: p.probe.photon_flux,
            beta_amplitude_sqrt_per_s: p.probe.beta_amplitude,
            tau_s: p.probe.tau,
            quadrature_phase_rad: p.probe.quadrature_phase,
            temp_stability_k: p.stabilities.temperature,
            field_stability_t: p.stabilities.field,
            laser_stability_fraction: p.stabilities.laser_fraction,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameter documents always serialize")
    }

    /// Parses a document, rejecting unknown keys. Does not validate ranges;
    /// call [`ParamSet::to_preset`] for that.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::param(unknown_key(&e), e.to_string()))
    }
}

/// Best-effort extraction of the offending key from a serde message.
fn unknown_key(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    msg.split('`').nth(1).unwrap_or("document").to_string()
}
