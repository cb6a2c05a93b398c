//! Shot-noise-limited readout precision, the low-excitation probe limit,
//! optical-pumping steady state, environmental error floors and the
//! resulting fractional-frequency-deviation curve.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CavityParams, EnvironmentState, Preset, ProbeParams, SpinEnsembleParams, Stabilities};
use crate::polariton::{
    self, branch_shift, field_generator, thermal_generator, Branch, CoupledModes, FiniteDiffSteps, OperatingPoint,
};
use crate::transmission;

/// δν = (κ/√(τI))·√(1 + ξ²/2), rad/s.
pub fn shot_noise_precision(cavity: &CavityParams, probe: &ProbeParams) -> Result<f64> {
    if !(probe.photon_flux > 0.0) {
        return Err(Error::param("photon_flux_per_s", "must be > 0 for a finite precision"));
    }
    if !(probe.tau > 0.0) {
        return Err(Error::param("tau_s", "must be > 0"));
    }
    let xi = cavity.xi();
    Ok(cavity.kappa_out / (probe.tau * probe.photon_flux).sqrt() * (1.0 + 0.5 * xi * xi).sqrt())
}

/// Shot-noise precision as a fraction of `omega_a`.
pub fn fractional_shot_noise(cavity: &CavityParams, probe: &ProbeParams, omega_a: f64) -> Result<f64> {
    Ok(shot_noise_precision(cavity, probe)? / omega_a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowExcitationBound {
    /// Maximum probe amplitude, √(photons/s). Infinite when unbounded.
    pub beta_max: f64,
    /// β²_max, photons/s.
    pub beta_sq_max: f64,
    pub unbounded: bool,
}

/// β_max = min over classes of √(κγ(γ+Γ)) / (4 g₀ |t|), using the
/// single-spin coupling g₀ for every class.
pub fn low_excitation_bound(spins: &SpinEnsembleParams, cavity: &CavityParams, t_mag: f64) -> LowExcitationBound {
    let gamma = spins.gamma_pump;
    let deph = spins.gamma_deph;
    let per_class = spins
        .spin_classes
        .iter()
        .map(|_| (cavity.kappa_out * gamma * (gamma + deph)).sqrt() / (4.0 * spins.g0_single * t_mag))
        .fold(f64::INFINITY, f64::min);
    let unbounded = !per_class.is_finite();
    LowExcitationBound {
        beta_max: if unbounded { f64::INFINITY } else { per_class },
        beta_sq_max: if unbounded {
            f64::INFINITY
        } else {
            per_class * per_class
        },
        unbounded,
    }
}

/// Intracavity field amplitude α = β|t|/√κ for a probe coupled in at rate κ.
pub fn intracavity_amplitude(cavity: &CavityParams, probe: &ProbeParams, t_mag: f64) -> f64 {
    probe.beta_amplitude * t_mag / cavity.kappa_out.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarizationState {
    /// Fraction of the population in m_s = 0.
    pub p: f64,
    /// Ω = g·α
    pub rabi_drive: f64,
    /// γ₀/(γ + Ω + γ₀)², per rad/s.
    pub dp_dgamma: f64,
    /// ∂P/∂γ of the rate-equation expression itself: (Ω + γ₀)/(γ + 2Ω + γ₀)².
    pub dp_dgamma_exact: f64,
    pub gamma_pump: f64,
}

impl PolarizationState {
    /// Fractional coupling change per fractional pump change, (dg/g)/(dγ/γ),
    /// for a collective coupling proportional to √P.
    pub fn coupling_sensitivity(&self) -> f64 {
        0.5 * self.dp_dgamma * self.gamma_pump / self.p
    }
}

/// Steady state P = (γ + Ω)/(γ + 2Ω + γ₀) with Ω = g·α.
pub fn polarization_steady_state(
    gamma_pump: f64,
    gamma_0: f64,
    g_single: f64,
    alpha: f64,
) -> Result<PolarizationState> {
    let rabi = g_single * alpha;
    for (key, v) in [
        ("gamma_pump_hz", gamma_pump),
        ("gamma_0_per_s", gamma_0),
        ("rabi_drive", rabi),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::param(key, "must be finite and >= 0"));
        }
    }
    let denom = gamma_pump + 2.0 * rabi + gamma_0;
    if denom == 0.0 {
        return Err(Error::param(
            "gamma_pump_hz",
            "all rates are zero; polarization undefined",
        ));
    }
    let quoted_denom = gamma_pump + rabi + gamma_0;
    Ok(PolarizationState {
        p: (gamma_pump + rabi) / denom,
        rabi_drive: rabi,
        dp_dgamma: gamma_0 / (quoted_denom * quoted_denom),
        dp_dgamma_exact: (rabi + gamma_0) / (denom * denom),
        gamma_pump,
    })
}

/// Fractional noise contributions. `total` is their quadrature sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseBudget {
    pub shot_sigma: f64,
    pub thermal_floor: f64,
    pub magnetic_floor: f64,
    pub pump_floor: f64,
    pub total: f64,
}

impl NoiseBudget {
    pub fn new(shot_sigma: f64, thermal_floor: f64, magnetic_floor: f64, pump_floor: f64) -> Self {
        let total = (shot_sigma * shot_sigma
            + thermal_floor * thermal_floor
            + magnetic_floor * magnetic_floor
            + pump_floor * pump_floor)
            .sqrt();
        NoiseBudget {
            shot_sigma,
            thermal_floor,
            magnetic_floor,
            pump_floor,
            total,
        }
    }

    pub fn with_shot(&self, shot_sigma: f64) -> Self {
        Self::new(shot_sigma, self.thermal_floor, self.magnetic_floor, self.pump_floor)
    }

    /// Quadrature sum of the environmental terms only.
    pub fn floor(&self) -> f64 {
        self.with_shot(0.0).total
    }
}

/// ∂λ/∂(ln g) of one branch, scaling both collective couplings together.
fn coupling_log_derivative(modes: &CoupledModes, branch: Branch) -> f64 {
    let v = polariton::solve_modes(modes).mode(branch);
    2.0 * v[0] * (v[1] * modes.g_plus + v[2] * modes.g_minus)
}

/// Environmental floors at an operating point, as fractions of the branch
/// frequency. The thermal and magnetic terms are the exact branch shifts
/// for static offsets of the given size; the pump term propagates the laser
/// stability through P and g ∝ √P. `shot_sigma` is left at zero.
pub fn environmental_floors(
    spins: &SpinEnsembleParams,
    env: &EnvironmentState,
    op: &OperatingPoint,
    stabilities: &Stabilities,
    polarization: &PolarizationState,
) -> NoiseBudget {
    let modes = op.modes(spins, env);
    let nu = op.frequency;
    let shift = |generator: [f64; 3], by: f64| {
        if by == 0.0 {
            0.0
        } else {
            branch_shift(&modes, op.branch, generator.map(|x| x * by)).abs()
        }
    };
    let thermal = shift(thermal_generator(env), stabilities.temperature) / nu;
    let magnetic = shift(field_generator(env), stabilities.field) / nu;
    let dg_over_g = polarization.coupling_sensitivity() * stabilities.laser_fraction;
    let pump = (coupling_log_derivative(&modes, op.branch) * dg_over_g).abs() / nu;
    NoiseBudget::new(0.0, thermal, magnetic, pump)
}

/// Branch frequency errors for a sweep of the collective coupling at fixed
/// instabilities, each at its own upper-branch operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingError {
    /// rad/s
    pub g: f64,
    /// |Δν| for the temperature instability, rad/s
    pub thermal_shift: f64,
    /// |Δν| for the field instability, rad/s
    pub magnetic_shift: f64,
}

pub fn coupling_error_sweep(
    spins: &SpinEnsembleParams,
    env: &EnvironmentState,
    couplings: &[f64],
    delta_t: f64,
    delta_b: f64,
) -> Result<Vec<CouplingError>> {
    couplings
        .iter()
        .map(|&g| {
            let mut s = spins.clone();
            s.g_plus = g;
            s.g_minus = g;
            let op = polariton::operating_point_numeric(&s, env, None, Branch::Upper, FiniteDiffSteps::default())?;
            let modes = op.modes(&s, env);
            Ok(CouplingError {
                g,
                thermal_shift: branch_shift(&modes, op.branch, thermal_generator(env).map(|x| x * delta_t)).abs(),
                magnetic_shift: branch_shift(&modes, op.branch, field_generator(env).map(|x| x * delta_b)).abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCurve {
    pub taus: Vec<f64>,
    pub sigma_total: Vec<f64>,
    pub sigma_shot: Vec<f64>,
    pub floors: NoiseBudget,
    /// τ at which the shot-noise term equals the environmental floor.
    pub knee_tau: f64,
    #[serde(skip)]
    pub operating_point: OperatingPoint,
    pub polarization: PolarizationState,
    /// |t| at the locked probe frequency.
    pub t_mag: f64,
}

impl StabilityCurve {
    pub fn budget(&self, i: usize) -> NoiseBudget {
        self.floors.with_shot(self.sigma_shot[i])
    }
}

/// `points` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && points >= 1) || (points > 1 && hi == lo) {
        return Err(Error::param(
            "tau_s",
            format!("bad range {lo}..{hi} with {points} points"),
        ));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..points)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == points {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)
            }
        })
        .collect())
}

/// σ_y(τ) = √(σ_shot(τ)² + σ_floor²) for a preset locked to its upper-branch
/// thermal operating point.
pub fn stability_curve(preset: &Preset, taus: &[f64]) -> Result<StabilityCurve> {
    preset.validate()?;
    let system = &preset.system;
    let spins = &system.spins;
    let env = &system.env;
    let op = polariton::operating_point_numeric(spins, env, None, Branch::Upper, FiniteDiffSteps::default())?;

    let locked = system.clone().with_cavity_detuning(op.cavity_ref_detuning);
    let t_mag = transmission::transmission(&locked, op.frequency, preset.probe.quadrature_phase)?.abs();
    let alpha = intracavity_amplitude(&locked.cavity, &preset.probe, t_mag);
    let polarization = polarization_steady_state(spins.gamma_pump, spins.gamma_0, spins.g0_single, alpha)?;
    let floors = environmental_floors(spins, env, &op, &preset.stabilities, &polarization);

    let one_second = ProbeParams {
        tau: 1.0,
        ..preset.probe
    };
    let sigma_1s = fractional_shot_noise(&locked.cavity, &one_second, spins.omega_zfs)?;
    let mut sigma_shot = Vec::with_capacity(taus.len());
    let mut sigma_total = Vec::with_capacity(taus.len());
    for &tau in taus {
        let probe = ProbeParams { tau, ..preset.probe };
        let shot = fractional_shot_noise(&locked.cavity, &probe, spins.omega_zfs)?;
        sigma_shot.push(shot);
        sigma_total.push(floors.with_shot(shot).total);
    }
    let floor = floors.floor();
    let knee_tau = if floor > 0.0 {
        (sigma_1s / floor).powi(2)
    } else {
        f64::INFINITY
    };

    Ok(StabilityCurve {
        taus: taus.to_vec(),
        sigma_total,
        sigma_shot,
        floors,
        knee_tau,
        operating_point: op,
        polarization,
        t_mag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_preset, PresetKind};
    use crate::units::hz_to_rad;

    #[test]
    fn current_preset_shot_noise_at_one_second() {
        let p = reference_preset(PresetKind::Current);
        let dnu = shot_noise_precision(&p.system.cavity, &p.probe).unwrap();
        assert!((dnu - hz_to_rad(200e3) / 1e9).abs() < 1e-15 * dnu);
        let frac = dnu / p.system.spins.omega_zfs;
        assert!((frac - 6.969e-14).abs() < 1e-16, "{frac:e}");
        assert!(frac < 1e-13);
    }

    #[test]
    fn outlook_preset_shot_noise() {
        let p = reference_preset(PresetKind::Outlook);
        let frac = fractional_shot_noise(&p.system.cavity, &p.probe, p.system.spins.omega_zfs).unwrap();
        assert!((frac - 1.742e-15).abs() < 1e-18, "{frac:e}");
    }

    #[test]
    fn internal_loss_costs_sqrt_three_halves() {
        let p = reference_preset(PresetKind::Current);
        let mut lossy = p.system.cavity;
        lossy.kappa_loss = lossy.kappa_out;
        let ratio =
            shot_noise_precision(&lossy, &p.probe).unwrap() / shot_noise_precision(&p.system.cavity, &p.probe).unwrap();
        assert!((ratio - 1.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_power_or_time_is_rejected() {
        let p = reference_preset(PresetKind::Current);
        let dark = ProbeParams {
            photon_flux: 0.0,
            beta_amplitude: 0.0,
            ..p.probe
        };
        assert!(shot_noise_precision(&p.system.cavity, &dark).is_err());
        let instant = ProbeParams { tau: 0.0, ..p.probe };
        assert!(shot_noise_precision(&p.system.cavity, &instant).is_err());
    }

    #[test]
    fn excitation_bound_limits() {
        let p = reference_preset(PresetKind::Current);
        let s = &p.system.spins;
        assert!(low_excitation_bound(s, &p.system.cavity, 0.0).unbounded);
        let mut free = s.clone();
        free.g0_single = 0.0;
        assert!(low_excitation_bound(&free, &p.system.cavity, 1.0).unbounded);
        let base = low_excitation_bound(s, &p.system.cavity, 1.0);
        let mut strong = s.clone();
        strong.g0_single *= 2.0;
        assert_eq!(
            low_excitation_bound(&strong, &p.system.cavity, 1.0).beta_max,
            0.5 * base.beta_max
        );
        assert!(!base.unbounded);
    }

    #[test]
    fn perfect_pumping_polarizes_fully() {
        let st = polarization_steady_state(hz_to_rad(1e6), 0.0, 1.0, 0.0).unwrap();
        assert_eq!(st.p, 1.0);
        assert_eq!(st.dp_dgamma, 0.0);
        let st = polarization_steady_state(hz_to_rad(1e6), 0.0, 2.0, 5e3).unwrap();
        assert_eq!(st.dp_dgamma, 0.0);
        assert!(st.p > 0.5 && st.p < 1.0);
        assert!(polarization_steady_state(0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn exact_derivative_matches_finite_difference() {
        let (g, g0) = (hz_to_rad(1e6), 3.0);
        let alpha = 2e4;
        let h = 1.0;
        let st = polarization_steady_state(g, g0, 1.0, alpha).unwrap();
        let up = polarization_steady_state(g + h, g0, 1.0, alpha).unwrap().p;
        let down = polarization_steady_state(g - h, g0, 1.0, alpha).unwrap().p;
        let fd = (up - down) / (2.0 * h);
        assert!((fd - st.dp_dgamma_exact).abs() < 1e-6 * st.dp_dgamma_exact);
    }

    #[test]
    fn pump_sensitivity_recorded_against_literature_order() {
        // (dg/g)/(dγ/γ) is reported, not asserted against 1e-8
        let p = reference_preset(PresetKind::Current);
        let s = &p.system.spins;
        let st = polarization_steady_state(s.gamma_pump, s.gamma_0, s.g0_single, 1e5).unwrap();
        let ratio = st.coupling_sensitivity();
        assert!(ratio > 0.0 && ratio < 1e-3, "{ratio:e}");
    }

    fn current_op() -> (Preset, OperatingPoint) {
        let p = reference_preset(PresetKind::Current);
        let op = polariton::operating_point_numeric(
            &p.system.spins,
            &p.system.env,
            None,
            Branch::Upper,
            FiniteDiffSteps::default(),
        )
        .unwrap();
        (p, op)
    }

    #[test]
    fn zero_instability_gives_zero_floors() {
        let (p, op) = current_op();
        let pol = polarization_steady_state(p.system.spins.gamma_pump, 0.0, 0.0, 0.0).unwrap();
        let stab = Stabilities {
            temperature: 0.0,
            field: 0.0,
            laser_fraction: 0.0,
        };
        let b = environmental_floors(&p.system.spins, &p.system.env, &op, &stab, &pol);
        assert_eq!(
            (b.thermal_floor, b.magnetic_floor, b.pump_floor, b.total),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn floors_are_quadratic_at_the_operating_point() {
        let (p, op) = current_op();
        let pol = polarization_steady_state(p.system.spins.gamma_pump, 0.0, 0.0, 0.0).unwrap();
        let floor = |dt: f64, db: f64| {
            let stab = Stabilities {
                temperature: dt,
                field: db,
                laser_fraction: 0.0,
            };
            environmental_floors(&p.system.spins, &p.system.env, &op, &stab, &pol)
        };
        for dt in [1e-3, 1e-2, 1e-1] {
            let r = floor(2.0 * dt, 0.0).thermal_floor / floor(dt, 0.0).thermal_floor;
            assert!((r - 4.0).abs() < 0.04, "dT {dt}: {r}");
        }
        for db in [1e-9, 1e-8, 1e-7] {
            let r = floor(0.0, 2.0 * db).magnetic_floor / floor(0.0, db).magnetic_floor;
            assert!((r - 4.0).abs() < 0.04, "dB {db}: {r}");
        }
    }

    #[test]
    fn frequency_error_falls_with_coupling() {
        let p = reference_preset(PresetKind::Current);
        let gs: Vec<f64> = (1..=5).map(|m| hz_to_rad(m as f64 * 1e6)).collect();
        let errs = coupling_error_sweep(&p.system.spins, &p.system.env, &gs, 10e-3, 10e-9).unwrap();
        for w in errs.windows(2) {
            assert!(w[1].thermal_shift < w[0].thermal_shift);
            assert!(w[1].magnetic_shift < w[0].magnetic_shift);
        }
        // mHz scale for mK-level temperature instability
        let first_hz = crate::units::rad_to_hz(errs[0].thermal_shift);
        assert!(first_hz > 1e-4 && first_hz < 1.0, "{first_hz}");
    }

    #[test]
    fn budget_is_quadrature_sum() {
        let b = NoiseBudget::new(3e-14, 4e-14, 1e-15, 2e-16);
        let sum = b.shot_sigma.powi(2) + b.thermal_floor.powi(2) + b.magnetic_floor.powi(2) + b.pump_floor.powi(2);
        assert!((b.total * b.total - sum).abs() <= 4.0 * f64::EPSILON * sum);
        assert!(b.total >= b.thermal_floor && b.total >= b.shot_sigma);
    }

    #[test]
    fn ideal_environment_follows_inverse_root_tau() {
        let mut p = reference_preset(PresetKind::Current);
        p.stabilities = Stabilities {
            temperature: 0.0,
            field: 0.0,
            laser_fraction: 0.0,
        };
        let c = stability_curve(&p, &[1.0, 100.0]).unwrap();
        assert!((c.sigma_total[1] / c.sigma_total[0] - 0.1).abs() < 1e-15);
        assert!(c.knee_tau.is_infinite());
    }

    #[test]
    fn current_curve_shot_column_at_one_second() {
        let p = reference_preset(PresetKind::Current);
        let c = stability_curve(&p, &log_space(0.1, 1e4, 41).unwrap()).unwrap();
        let i = c.taus.iter().position(|&t| (t - 1.0).abs() < 1e-12).unwrap();
        assert!((c.sigma_shot[i] - 6.969e-14).abs() < 1e-16);
        for w in c.sigma_total.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn log_space_endpoints() {
        let t = log_space(0.1, 1e4, 6).unwrap();
        assert_eq!(t[0], 0.1);
        assert_eq!(t[5], 1e4);
        assert!((t[1] - 1.0).abs() < 1e-12);
        assert!(log_space(0.0, 1.0, 3).is_err());
    }
}
