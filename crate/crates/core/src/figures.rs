//! Parameter sets and axis ranges for the four transmission-spectrum
//! panels: Zeeman-split and nearly degenerate spins vs cavity detuning,
//! temperature sweep and field sweep about the thermal operating point.
//!
//! Common to all panels: κ = 2π·500 kHz, γ = 2π·3 MHz, g = 2π·5 MHz,
//! Γ = 2π·3 MHz, no internal cavity loss.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CavityParams, EnvironmentState, SpinEnsembleParams, System};
use crate::polariton::{self, Branch, FiniteDiffSteps};
use crate::transmission::{Axis, SweepSpec, SweepVariable};
use crate::units::{hz_to_rad, mhz};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Figure {
    #[serde(rename = "2a")]
    ZeemanSplit,
    #[serde(rename = "2b")]
    NearlyDegenerate,
    #[serde(rename = "2c")]
    TemperatureSweep,
    #[serde(rename = "2d")]
    FieldSweep,
}

impl Figure {
    pub const ALL: [Figure; 4] = [
        Figure::ZeemanSplit,
        Figure::NearlyDegenerate,
        Figure::TemperatureSweep,
        Figure::FieldSweep,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Figure::ZeemanSplit => "2a",
            Figure::NearlyDegenerate => "2b",
            Figure::TemperatureSweep => "2c",
            Figure::FieldSweep => "2d",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| Error::param("figure", format!("unknown figure `{s}` (expected 2a, 2b, 2c or 2d)")))
    }
}

pub const PANEL_COUPLING_HZ: f64 = 5e6;
pub const PANEL_KAPPA_HZ: f64 = 500e3;
pub const PANEL_PUMP_HZ: f64 = 3e6;
pub const PANEL_DEPHASING_HZ: f64 = 3e6;
/// |R| for the temperature and field panels; the cavity drifts opposite to
/// the spins.
pub const PANEL_THERMAL_RATIO: f64 = -0.3;

/// Field giving a ±`splitting_hz` Zeeman shift of the two transitions.
pub fn field_for_splitting(splitting_hz: f64) -> f64 {
    splitting_hz / EnvironmentState::NV_GYRO_HZ_PER_T
}

/// The common panel system with the cavity on resonance with ω_zfs. R only
/// matters for the temperature panel.
pub fn panel_system() -> System {
    let zfs = hz_to_rad(2.87e9);
    System {
        spins: SpinEnsembleParams::homogeneous(
            zfs,
            hz_to_rad(PANEL_COUPLING_HZ),
            hz_to_rad(PANEL_PUMP_HZ),
            hz_to_rad(PANEL_DEPHASING_HZ),
        ),
        cavity: CavityParams {
            omega_c_ref: zfs,
            kappa_out: hz_to_rad(PANEL_KAPPA_HZ),
            kappa_loss: 0.0,
        },
        env: EnvironmentState::nominal(PANEL_THERMAL_RATIO),
    }
}

/// A ready-to-run panel: system, sweep and (for 2c/2d) the operating-point
/// trace position.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSetup {
    pub figure: Figure,
    pub system: System,
    pub sweep: SweepSpec,
}

/// Builds the panel with `points` samples per axis. `system` overrides the
/// default panel system (used to apply coupling or κ overrides); for 2c and
/// 2d the cavity is re-placed at the numerically found upper-branch
/// operating point of that system, at its own R.
pub fn figure_setup(figure: Figure, points: usize, system: Option<System>) -> Result<FigureSetup> {
    let mut system = system.unwrap_or_else(panel_system);
    let probe_axis = |half_mhz: f64| Axis::new(SweepVariable::ProbeDetuning, mhz(-half_mhz), mhz(half_mhz), points);
    let cavity_axis = Axis::new(SweepVariable::CavityDetuning, mhz(-40.0), mhz(40.0), points);
    let quadrature = std::f64::consts::FRAC_PI_2;

    let sweep = match figure {
        Figure::ZeemanSplit | Figure::NearlyDegenerate => {
            let split = if figure == Figure::ZeemanSplit { 10e6 } else { 1e6 };
            system.env.b_field = field_for_splitting(split);
            SweepSpec {
                axis1: cavity_axis,
                axis2: probe_axis(40.0),
                probe_detuning: 0.0,
                quadrature_phase: quadrature,
                trace_at: None,
            }
        }
        Figure::TemperatureSweep | Figure::FieldSweep => {
            system.env.b_field = 0.0;
            system.env.delta_t = 0.0;
            let op = polariton::operating_point_numeric(
                &system.spins,
                &system.env,
                None,
                Branch::Upper,
                FiniteDiffSteps::default(),
            )?;
            system = system.with_cavity_detuning(op.cavity_ref_detuning);
            let axis1 = if figure == Figure::TemperatureSweep {
                Axis::new(SweepVariable::Temperature, -200.0, 200.0, points)
            } else {
                // ±0.5 mT ≈ ±14 MHz of Zeeman shift
                Axis::new(SweepVariable::Field, -0.5e-3, 0.5e-3, points)
            };
            SweepSpec {
                axis1,
                axis2: probe_axis(50.0),
                probe_detuning: 0.0,
                quadrature_phase: quadrature,
                trace_at: Some(0.0),
            }
        }
    };
    Ok(FigureSetup { figure, system, sweep })
}
