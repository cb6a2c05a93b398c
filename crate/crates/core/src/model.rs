//! Physical parameter types, the environment-to-frequency map and the two
//! reference parameter sets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamSet;

/// The `m_s = 0 → ±1` transition a spin class belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinBranch {
    Plus,
    Minus,
}

impl SpinBranch {
    pub const BOTH: [SpinBranch; 2] = [SpinBranch::Plus, SpinBranch::Minus];

    /// Sign of the Zeeman shift for this transition.
    pub fn sign(self) -> f64 {
        match self {
            SpinBranch::Plus => 1.0,
            SpinBranch::Minus => -1.0,
        }
    }
}

/// One spectral class of the ensemble: a fraction `weight` of the spins on
/// `branch`, offset by `detuning_offset` (rad/s) from the line center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinClass {
    pub detuning_offset: f64,
    pub weight: f64,
    pub branch: SpinBranch,
}

impl SpinClass {
    pub fn centered(branch: SpinBranch) -> Self {
        SpinClass {
            detuning_offset: 0.0,
            weight: 1.0,
            branch,
        }
    }
}

/// Collective NV ensemble. Rates are angular (rad/s) except `gamma_0`, which
/// is a population relaxation rate in 1/s.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinEnsembleParams {
    /// Zero-field splitting at the reference temperature.
    pub omega_zfs: f64,
    pub spin_classes: Vec<SpinClass>,
    /// Optical polarization (pumping) rate γ.
    pub gamma_pump: f64,
    /// Dephasing rate Γ.
    pub gamma_deph: f64,
    /// Intrinsic relaxation 1/T₁.
    pub gamma_0: f64,
    /// Single-spin vacuum coupling g₀.
    pub g0_single: f64,
    pub n_spins: u64,
    /// Collective coupling of the `m_s = +1` transition.
    pub g_plus: f64,
    /// Collective coupling of the `m_s = -1` transition.
    pub g_minus: f64,
}

impl SpinEnsembleParams {
    /// Homogeneous line on both branches with equal collective coupling `g`.
    pub fn homogeneous(omega_zfs: f64, g: f64, gamma_pump: f64, gamma_deph: f64) -> Self {
        SpinEnsembleParams {
            omega_zfs,
            spin_classes: SpinBranch::BOTH.iter().map(|&b| SpinClass::centered(b)).collect(),
            gamma_pump,
            gamma_deph,
            gamma_0: 0.0,
            g0_single: 0.0,
            n_spins: 1,
            g_plus: g,
            g_minus: g,
        }
    }

    pub fn branch_coupling(&self, branch: SpinBranch) -> f64 {
        match branch {
            SpinBranch::Plus => self.g_plus,
            SpinBranch::Minus => self.g_minus,
        }
    }

    /// Collective coupling carried by a single spectral class.
    pub fn class_coupling(&self, class: &SpinClass) -> f64 {
        self.branch_coupling(class.branch) * class.weight.sqrt()
    }

    pub fn classes(&self, branch: SpinBranch) -> impl Iterator<Item = &SpinClass> {
        self.spin_classes.iter().filter(move |c| c.branch == branch)
    }

    /// Sum in quadrature of the class couplings on one branch.
    pub fn quadrature_coupling(&self, branch: SpinBranch) -> f64 {
        self.classes(branch)
            .map(|c| self.class_coupling(c).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `g₀·√N`, the collective coupling implied by the single-spin value.
    pub fn collective_from_single(&self) -> f64 {
        self.g0_single * (self.n_spins as f64).sqrt()
    }

    /// `g₀√N / g₊`. Reported, not enforced.
    pub fn coupling_consistency_ratio(&self) -> f64 {
        self.collective_from_single() / self.g_plus
    }

    /// Lorentzian half width `(Γ + γ)/2` of each spin line.
    pub fn halfwidth(&self) -> f64 {
        0.5 * (self.gamma_deph + self.gamma_pump)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_zfs.is_finite() && self.omega_zfs > 0.0) {
            return Err(Error::param("omega_zfs_hz", "must be finite and > 0"));
        }
        for (key, v) in [
            ("gamma_pump_hz", self.gamma_pump),
            ("gamma_deph_hz", self.gamma_deph),
            ("gamma_0_per_s", self.gamma_0),
            ("g0_single_hz", self.g0_single),
            ("g_plus_hz", self.g_plus),
            ("g_minus_hz", self.g_minus),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(key, "must be finite and >= 0"));
            }
        }
        if self.n_spins < 1 {
            return Err(Error::param("n_spins", "must be >= 1"));
        }
        for class in &self.spin_classes {
            if !(class.weight.is_finite() && class.weight >= 0.0) {
                return Err(Error::param("spin_classes", "class weight must be finite and >= 0"));
            }
            if !class.detuning_offset.is_finite() {
                return Err(Error::param("spin_classes", "class offset must be finite"));
            }
        }
        for branch in SpinBranch::BOTH {
            let total: f64 = self.classes(branch).map(|c| c.weight).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::param(
                    "spin_classes",
                    format!("weights on branch {branch:?} sum to {total}, expected 1"),
                ));
            }
            let g = self.branch_coupling(branch);
            let q = self.quadrature_coupling(branch);
            if (q - g).abs() > 1e-12 * g.max(f64::MIN_POSITIVE) {
                return Err(Error::param(
                    "spin_classes",
                    format!("class couplings on {branch:?} do not add to the collective value"),
                ));
            }
        }
        Ok(())
    }
}

/// Microwave cavity. All rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    pub omega_c_ref: f64,
    /// Output (readout) rate κ.
    pub kappa_out: f64,
    /// Internal loss κ_l.
    pub kappa_loss: f64,
}

impl CavityParams {
    /// Loss ratio ξ = κ_l / κ.
    pub fn xi(&self) -> f64 {
        self.kappa_loss / self.kappa_out
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega_c_ref.is_finite() {
            return Err(Error::param("omega_c_ref_hz", "must be finite"));
        }
        if !(self.kappa_out.is_finite() && self.kappa_out > 0.0) {
            return Err(Error::param("kappa_out_hz", "must be finite and > 0"));
        }
        if !(self.kappa_loss.is_finite() && self.kappa_loss >= 0.0) {
            return Err(Error::param("kappa_loss_hz", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Temperature and field seen by the device, plus the linear response
/// coefficients that map them onto the spin and cavity frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentState {
    /// Offset from the reference temperature, K.
    pub delta_t: f64,
    /// Axial field, T.
    pub b_field: f64,
    /// dω_a/dT, rad/s per K.
    pub dwa_dt: f64,
    /// Cavity-to-spin thermal ratio: dω_c/dT = R·dω_a/dT.
    pub r_ratio: f64,
    /// NV gyromagnetic ratio, rad/s per T.
    pub gyromagnetic: f64,
}

impl EnvironmentState {
    pub const NV_DWA_DT_HZ_PER_K: f64 = 77e3;
    pub const NV_GYRO_HZ_PER_T: f64 = 28e9;

    /// Reference conditions with NV room-temperature coefficients.
    pub fn nominal(r_ratio: f64) -> Self {
        EnvironmentState {
            delta_t: 0.0,
            b_field: 0.0,
            dwa_dt: crate::units::hz_to_rad(Self::NV_DWA_DT_HZ_PER_K),
            r_ratio,
            gyromagnetic: crate::units::hz_to_rad(Self::NV_GYRO_HZ_PER_T),
        }
    }

    pub fn dwc_dt(&self) -> f64 {
        self.r_ratio * self.dwa_dt
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("delta_t_k", self.delta_t),
            ("b_field_t", self.b_field),
            ("dwa_dt_hz_per_k", self.dwa_dt),
            ("r_ratio", self.r_ratio),
            ("gyromagnetic_hz_per_t", self.gyromagnetic),
        ] {
            if !v.is_finite() {
                return Err(Error::param(key, "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeParams {
    /// Probe frequency ω, rad/s.
    pub omega_probe: f64,
    /// Source power I in photons/s.
    pub photon_flux: f64,
    /// Probe amplitude β in √(photons/s).
    pub beta_amplitude: f64,
    /// Integration time τ, s.
    pub tau: f64,
    /// Homodyne reference phase φ; the detected quadrature is Re[e^{-iφ} t].
    pub quadrature_phase: f64,
}

impl ProbeParams {
    pub fn validate(&self) -> Result<()> {
        if !self.omega_probe.is_finite() {
            return Err(Error::param("omega_probe_hz", "must be finite"));
        }
        if !(self.photon_flux.is_finite() && self.photon_flux >= 0.0) {
            return Err(Error::param("photon_flux_per_s", "must be finite and >= 0"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::param("tau_s", "must be finite and > 0"));
        }
        if !(self.beta_amplitude.is_finite() && self.beta_amplitude >= 0.0) {
            return Err(Error::param("beta_amplitude_sqrt_per_s", "must be finite and >= 0"));
        }
        if self.beta_amplitude * self.beta_amplitude > self.photon_flux * (1.0 + 1e-12) {
            return Err(Error::param(
                "beta_amplitude_sqrt_per_s",
                "probe power beta^2 exceeds the source flux",
            ));
        }
        if !self.quadrature_phase.is_finite() {
            return Err(Error::param("quadrature_phase_rad", "must be finite"));
        }
        Ok(())
    }
}

/// Instantaneous transition and cavity frequencies, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BareFrequencies {
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub omega_c: f64,
}

/// Linear thermal shift of spins and cavity, linear Zeeman shift of the
/// `m_s = ±1` transitions.
pub fn instantaneous_frequencies(
    spins: &SpinEnsembleParams,
    cavity: &CavityParams,
    env: &EnvironmentState,
) -> BareFrequencies {
    let spin_center = spins.omega_zfs + env.dwa_dt * env.delta_t;
    let zeeman = env.gyromagnetic * env.b_field;
    BareFrequencies {
        omega_plus: spin_center + zeeman,
        omega_minus: spin_center - zeeman,
        omega_c: cavity.omega_c_ref + env.dwc_dt() * env.delta_t,
    }
}

/// Spins, cavity and environment: everything the frequency-domain response
/// depends on except the probe.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub spins: SpinEnsembleParams,
    pub cavity: CavityParams,
    pub env: EnvironmentState,
}

impl System {
    pub fn validate(&self) -> Result<()> {
        self.spins.validate()?;
        self.cavity.validate()?;
        self.env.validate()
    }

    pub fn frequencies(&self) -> BareFrequencies {
        instantaneous_frequencies(&self.spins, &self.cavity, &self.env)
    }

    /// Reference spin-cavity detuning ω_c,ref − ω_zfs.
    pub fn cavity_detuning(&self) -> f64 {
        self.cavity.omega_c_ref - self.spins.omega_zfs
    }

    pub fn with_cavity_detuning(mut self, detuning: f64) -> Self {
        self.cavity.omega_c_ref = self.spins.omega_zfs + detuning;
        self
    }
}

/// Environmental instabilities the clock is assumed to hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stabilities {
    /// K
    pub temperature: f64,
    /// T
    pub field: f64,
    /// Fractional stability of the optical pump rate.
    pub laser_fraction: f64,
}

impl Stabilities {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("temp_stability_k", self.temperature),
            ("field_stability_t", self.field),
            ("laser_stability_fraction", self.laser_fraction),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(key, "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetKind {
    Current,
    Outlook,
}

impl PresetKind {
    pub fn name(self) -> &'static str {
        match self {
            PresetKind::Current => "current",
            PresetKind::Outlook => "outlook",
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "current" => Ok(PresetKind::Current),
            "outlook" => Ok(PresetKind::Outlook),
            other => Err(Error::param("preset", format!("unknown preset `{other}`"))),
        }
    }
}

/// A complete, validated parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub system: System,
    pub probe: ProbeParams,
    pub stabilities: Stabilities,
}

impl Preset {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.probe.validate()?;
        self.stabilities.validate()
    }
}

/// The "current" and "outlook" sample parameter sets.
pub fn reference_preset(which: PresetKind) -> Preset {
    ParamSet::reference(which)
        .to_preset()
        .expect("built-in presets are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{hz_to_rad, khz, mhz};

    fn system() -> System {
        reference_preset(PresetKind::Current).system
    }

    #[test]
    fn identity_at_reference() {
        let mut s = system();
        s.env.delta_t = 0.0;
        s.env.b_field = 0.0;
        let f = s.frequencies();
        assert_eq!(f.omega_plus, s.spins.omega_zfs);
        assert_eq!(f.omega_minus, s.spins.omega_zfs);
        assert_eq!(f.omega_c, s.cavity.omega_c_ref);
    }

    #[test]
    fn one_kelvin_shifts_spins_by_77_khz() {
        let mut s = system();
        s.env.delta_t = 1.0;
        let f = s.frequencies();
        let shift = f.omega_plus - s.spins.omega_zfs;
        assert!((shift - khz(77.0)).abs() < 1e-6 * khz(77.0));
        assert_eq!(f.omega_plus, f.omega_minus);
    }

    #[test]
    fn zeeman_splitting_of_ten_megahertz() {
        let mut s = system();
        s.env.b_field = 10e6 / 28e9; // ≈ 357 µT
        assert!((s.env.b_field - 357.142857e-6).abs() < 1e-12);
        let f = s.frequencies();
        let split = f.omega_plus - f.omega_minus;
        assert!((split - mhz(20.0)).abs() < 1e-9 * mhz(20.0));
    }

    #[test]
    fn affine_in_temperature() {
        let mut s = system();
        s.env.r_ratio = -0.3;
        let h = 0.5;
        let at = |t: f64| {
            let mut e = s.clone();
            e.env.delta_t = t;
            e.frequencies()
        };
        let (lo, hi) = (at(-h), at(h));
        let spin_slope = (hi.omega_plus - lo.omega_plus) / (2.0 * h);
        let cav_slope = (hi.omega_c - lo.omega_c) / (2.0 * h);
        // absolute frequencies are ~1.8e10 rad/s, so the FD slope carries
        // rounding of order ulp(1.8e10)/h
        let tol = 4.0 * f64::EPSILON * s.spins.omega_zfs / h;
        assert!((spin_slope - s.env.dwa_dt).abs() <= tol);
        assert!((cav_slope - s.env.dwc_dt()).abs() <= tol);
    }

    #[test]
    fn zeeman_branches_are_symmetric() {
        let mut s = system();
        s.env.delta_t = 3.0;
        for b in [-1e-3, -2e-6, 0.0, 7e-7, 4e-4] {
            s.env.b_field = b;
            let f = s.frequencies();
            let center = s.spins.omega_zfs + s.env.dwa_dt * s.env.delta_t;
            let up = f.omega_plus - center;
            let down = f.omega_minus - center;
            assert!((up + down).abs() <= 2.0 * f64::EPSILON * center);
        }
    }

    #[test]
    fn current_preset_matches_table() {
        let p = reference_preset(PresetKind::Current);
        let s = &p.system.spins;
        assert_eq!(p.system.cavity.kappa_out, hz_to_rad(200e3));
        assert_eq!(s.gamma_deph, hz_to_rad(3e6));
        assert_eq!(s.g_plus, hz_to_rad(1e6));
        assert_eq!(s.g_minus, hz_to_rad(1e6));
        assert_eq!(p.system.env.r_ratio, -0.1);
        assert_eq!(s.g0_single, hz_to_rad(0.1));
        assert_eq!(s.n_spins, 250_000_000_000_000);
        assert_eq!(p.probe.photon_flux, 1e18);
        assert_eq!(p.stabilities.temperature, 10e-3);
        // g₀√N ≈ 2π·1.58 MHz, recorded against the tabulated 2π·1 MHz
        let implied = s.collective_from_single();
        assert!((implied / hz_to_rad(1.0) - 1.5811e6).abs() < 100.0);
        assert!((s.coupling_consistency_ratio() - 1.5811).abs() < 1e-3);
    }

    #[test]
    fn outlook_preset_matches_table() {
        let p = reference_preset(PresetKind::Outlook);
        let s = &p.system.spins;
        assert_eq!(p.system.cavity.kappa_out, hz_to_rad(50e3));
        assert_eq!(s.gamma_deph, hz_to_rad(1e6));
        assert_eq!(s.g_plus, hz_to_rad(5e6));
        assert_eq!(p.system.env.r_ratio, -0.05);
        assert_eq!(s.g0_single, hz_to_rad(0.3));
        assert_eq!(s.n_spins, 400_000_000_000_000);
        assert_eq!(p.probe.photon_flux, 1e20);
        assert_eq!(p.stabilities.temperature, 1e-3);
    }

    #[test]
    fn rejects_bad_values() {
        let mut s = system();
        s.spins.gamma_deph = -1.0;
        assert!(matches!(
            s.validate(),
            Err(Error::InvalidParameter { ref key, .. }) if key == "gamma_deph_hz"
        ));
        let mut s = system();
        s.cavity.kappa_out = 0.0;
        assert!(s.validate().is_err());
        let mut s = system();
        s.spins.spin_classes[0].weight = 0.5;
        assert!(s.validate().is_err());
        let mut s = system();
        s.spins.n_spins = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn split_classes_preserve_collective_coupling() {
        let mut s = system().spins;
        s.spin_classes = vec![
            SpinClass {
                detuning_offset: mhz(-0.5),
                weight: 0.25,
                branch: SpinBranch::Plus,
            },
            SpinClass {
                detuning_offset: mhz(0.0),
                weight: 0.5,
                branch: SpinBranch::Plus,
            },
            SpinClass {
                detuning_offset: mhz(0.5),
                weight: 0.25,
                branch: SpinBranch::Plus,
            },
            SpinClass::centered(SpinBranch::Minus),
        ];
        s.validate().unwrap();
        let q = s.quadrature_coupling(SpinBranch::Plus);
        assert!((q - s.g_plus).abs() <= 1e-12 * s.g_plus);
    }
}
