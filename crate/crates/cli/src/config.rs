//! Fully resolved run description. Everything needed to reproduce an output
//! file lives here; the provenance sidecar is this struct plus a summary.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pssc_core::figures::Figure;
use pssc_core::params::ParamSet;
use pssc_core::transmission::{Axis, SweepSpec, SweepVariable};
use pssc_core::units::{hz_to_rad, rad_to_hz};
use pssc_core::{Branch, PresetKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    OperatingPoint,
    Stability,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Spectrum => "spectrum",
            Command::OperatingPoint => "operating-point",
            Command::Stability => "stability",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Axis in user units: Hz for detunings, K for ΔT, T for B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisDoc {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

fn to_internal(variable: SweepVariable, v: f64) -> f64 {
    if variable.is_frequency() {
        hz_to_rad(v)
    } else {
        v
    }
}

/// Converted back to user units and rounded to 12 significant digits, so
/// panel ranges read as the round numbers they were defined with.
fn to_user(variable: SweepVariable, v: f64) -> f64 {
    let v = if variable.is_frequency() { rad_to_hz(v) } else { v };
    format!("{v:.11e}").parse().unwrap_or(v)
}

impl AxisDoc {
    fn from_axis(a: &Axis) -> Self {
        AxisDoc {
            variable: a.variable,
            min: to_user(a.variable, a.min),
            max: to_user(a.variable, a.max),
            points: a.points,
        }
    }

    pub fn to_axis(self) -> Axis {
        Axis::new(
            self.variable,
            to_internal(self.variable, self.min),
            to_internal(self.variable, self.max),
            self.points,
        )
    }

    /// Grid labels in user units.
    pub fn labels(&self) -> Vec<f64> {
        Axis::new(self.variable, self.min, self.max, self.points).values()
    }

    pub fn unit(&self) -> &'static str {
        match self.variable {
            SweepVariable::ProbeDetuning | SweepVariable::CavityDetuning => "Hz",
            SweepVariable::Temperature => "K",
            SweepVariable::Field => "T",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDoc {
    pub axis1: AxisDoc,
    pub axis2: AxisDoc,
    /// Probe detuning from ω_zfs when neither axis is the probe, Hz.
    pub probe_detuning_hz: f64,
    /// axis1 value (user units) of the extra 1-D trace, if any.
    pub trace_at: Option<f64>,
}

impl SweepDoc {
    pub fn from_spec(spec: &SweepSpec) -> Self {
        SweepDoc {
            axis1: AxisDoc::from_axis(&spec.axis1),
            axis2: AxisDoc::from_axis(&spec.axis2),
            probe_detuning_hz: rad_to_hz(spec.probe_detuning),
            trace_at: spec.trace_at.map(|v| to_user(spec.axis1.variable, v)),
        }
    }

    pub fn to_spec(self, quadrature_phase: f64) -> SweepSpec {
        SweepSpec {
            axis1: self.axis1.to_axis(),
            axis2: self.axis2.to_axis(),
            probe_detuning: hz_to_rad(self.probe_detuning_hz),
            quadrature_phase,
            trace_at: self.trace_at.map(|v| to_internal(self.axis1.variable, v)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauRange {
    pub min_s: f64,
    pub max_s: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// Starting parameter set; informational once `params` is resolved.
    pub preset: Option<PresetKind>,
    pub figure: Option<Figure>,
    pub out: PathBuf,
    pub format: Format,
    /// Recorded for completeness; no command draws random numbers.
    pub seed: u64,
    pub branch: Option<Branch>,
    pub sweep: Option<SweepDoc>,
    pub taus: Option<TauRange>,
    pub params: ParamSet,
}

/// What gets written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub config: RunConfig,
    #[serde(default)]
    pub summary: serde_json::Value,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".provenance.json");
    PathBuf::from(name)
}

pub fn trace_path(out: &Path, format: Format) -> PathBuf {
    out.with_extension(format!("trace.{}", format.extension()))
}
