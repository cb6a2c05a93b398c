//! Weak-probe transmission of the spin-loaded cavity and 2-D spectrum sweeps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CavityParams, EnvironmentState, SpinEnsembleParams, System};

/// One Lorentzian term of the ensemble susceptibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SusceptibilityTerm {
    /// g², (rad/s)²
    pub coupling_sq: f64,
    /// (Γ + γ)/2
    pub halfwidth: f64,
    /// ω_{n,j} − ω
    pub detuning: f64,
}

impl SusceptibilityTerm {
    pub fn value(&self) -> Complex64 {
        self.coupling_sq / Complex64::new(self.halfwidth, self.detuning)
    }
}

pub fn susceptibility_terms(
    spins: &SpinEnsembleParams,
    env: &EnvironmentState,
    omega_probe: f64,
) -> Result<Vec<SusceptibilityTerm>> {
    let halfwidth = spins.halfwidth();
    if !(halfwidth > 0.0) {
        return Err(Error::ZeroLinewidth);
    }
    let probe = omega_probe - spins.omega_zfs;
    let thermal = env.dwa_dt * env.delta_t;
    let zeeman = env.gyromagnetic * env.b_field;
    Ok(spins
        .spin_classes
        .iter()
        .map(|class| SusceptibilityTerm {
            coupling_sq: spins.class_coupling(class).powi(2),
            halfwidth,
            detuning: thermal + class.branch.sign() * zeeman + class.detuning_offset - probe,
        })
        .collect())
}

/// Ensemble susceptibility C = Σ g²/((Γ+γ)/2 + iΔ_{n,j}), rad/s.
pub fn susceptibility(spins: &SpinEnsembleParams, env: &EnvironmentState, omega_probe: f64) -> Result<Complex64> {
    Ok(susceptibility_terms(spins, env, omega_probe)?
        .iter()
        .map(SusceptibilityTerm::value)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionPoint {
    pub omega_probe: f64,
    pub t_complex: Complex64,
    /// Re[e^{-iφ} t] for the homodyne phase φ used.
    pub quadrature: f64,
    /// Δ = ω_c − ω
    pub delta_cavity: f64,
}

impl TransmissionPoint {
    pub fn abs(&self) -> f64 {
        self.t_complex.norm()
    }
}

/// t = κ / (κ + κ_l + iΔ + C), Δ = ω_c(env) − ω.
pub fn transmit(
    cavity: &CavityParams,
    c: Complex64,
    omega_probe: f64,
    env: &EnvironmentState,
    quadrature_phase: f64,
) -> TransmissionPoint {
    debug_assert!(cavity.kappa_out > 0.0);
    let omega_c = cavity.omega_c_ref + env.dwc_dt() * env.delta_t;
    let delta = omega_c - omega_probe;
    let t = cavity.kappa_out / (Complex64::new(cavity.kappa_out + cavity.kappa_loss, delta) + c);
    TransmissionPoint {
        omega_probe,
        t_complex: t,
        quadrature: (Complex64::from_polar(1.0, -quadrature_phase) * t).re,
        delta_cavity: delta,
    }
}

/// Susceptibility and transmission in one call.
pub fn transmission(system: &System, omega_probe: f64, quadrature_phase: f64) -> Result<TransmissionPoint> {
    let c = susceptibility(&system.spins, &system.env, omega_probe)?;
    Ok(transmit(&system.cavity, c, omega_probe, &system.env, quadrature_phase))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// ω − ω_zfs, rad/s
    ProbeDetuning,
    /// ω_c,ref − ω_zfs, rad/s
    CavityDetuning,
    /// ΔT, K
    Temperature,
    /// B, T
    Field,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::ProbeDetuning => "probe_detuning",
            SweepVariable::CavityDetuning => "cavity_detuning",
            SweepVariable::Temperature => "delta_t",
            SweepVariable::Field => "b_field",
        }
    }

    pub fn is_frequency(self) -> bool {
        matches!(self, SweepVariable::ProbeDetuning | SweepVariable::CavityDetuning)
    }
}

/// Uniform grid over one variable, internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(variable: SweepVariable, min: f64, max: f64, points: usize) -> Self {
        Axis {
            variable,
            min,
            max,
            points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.points >= 1
            && self.min.is_finite()
            && self.max.is_finite()
            && (self.points == 1 || self.min < self.max);
        if ok {
            Ok(())
        } else {
            Err(Error::BadAxis(self.variable.name().to_string()))
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.max
                } else {
                    self.min + step * i as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    /// Outer (row) axis.
    pub axis1: Axis,
    /// Inner (column) axis.
    pub axis2: Axis,
    /// Probe detuning used when neither axis is the probe.
    pub probe_detuning: f64,
    pub quadrature_phase: f64,
    /// If set, also evaluate a 1-D trace along axis2 at this axis1 value.
    pub trace_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Row-major: `points[i * axis2.len() + j]`.
    pub points: Vec<TransmissionPoint>,
    pub trace: Option<Vec<TransmissionPoint>>,
}

impl SpectrumGrid {
    pub fn at(&self, i: usize, j: usize) -> &TransmissionPoint {
        &self.points[i * self.axis2.len() + j]
    }

    pub fn row(&self, i: usize) -> &[TransmissionPoint] {
        let n = self.axis2.len();
        &self.points[i * n..(i + 1) * n]
    }
}

fn apply(system: &mut System, probe: &mut f64, variable: SweepVariable, value: f64) {
    match variable {
        SweepVariable::ProbeDetuning => *probe = value,
        SweepVariable::CavityDetuning => system.cavity.omega_c_ref = system.spins.omega_zfs + value,
        SweepVariable::Temperature => system.env.delta_t = value,
        SweepVariable::Field => system.env.b_field = value,
    }
}

fn evaluate_row(spec: &SweepSpec, base: &System, v1: f64, axis2: &[f64]) -> Result<Vec<TransmissionPoint>> {
    let mut system = base.clone();
    let mut probe = spec.probe_detuning;
    apply(&mut system, &mut probe, spec.axis1.variable, v1);
    axis2
        .iter()
        .map(|&v2| {
            let mut s = system.clone();
            let mut p = probe;
            apply(&mut s, &mut p, spec.axis2.variable, v2);
            transmission(&s, s.spins.omega_zfs + p, spec.quadrature_phase)
        })
        .collect()
}

/// Evaluates t over the grid. Rows may be computed in parallel; the output
/// order is always row-major.
pub fn spectrum_sweep(spec: &SweepSpec, system: &System) -> Result<SpectrumGrid> {
    spec.axis1.validate()?;
    spec.axis2.validate()?;
    if spec.axis1.variable == spec.axis2.variable {
        return Err(Error::BadAxis(format!(
            "{} used on both axes",
            spec.axis1.variable.name()
        )));
    }
    system.validate()?;
    let axis1 = spec.axis1.values();
    let axis2 = spec.axis2.values();

    #[cfg(feature = "parallel")]
    let rows: Vec<Result<Vec<TransmissionPoint>>> = {
        use rayon::prelude::*;
        axis1
            .par_iter()
            .map(|&v1| evaluate_row(spec, system, v1, &axis2))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Result<Vec<TransmissionPoint>>> =
        axis1.iter().map(|&v1| evaluate_row(spec, system, v1, &axis2)).collect();

    let mut points = Vec::with_capacity(axis1.len() * axis2.len());
    for row in rows {
        points.extend(row?);
    }
    let trace = spec
        .trace_at
        .map(|v1| evaluate_row(spec, system, v1, &axis2))
        .transpose()?;
    Ok(SpectrumGrid {
        axis1,
        axis2,
        points,
        trace,
    })
}

/// Indices of strict interior local maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .collect()
}
