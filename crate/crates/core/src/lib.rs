//! Numerical model of a polariton-stabilized spin clock: an NV-center spin
//! ensemble strongly coupled to a microwave cavity, read out by homodyne
//! detection of the transmitted probe field.
//!
//! All frequencies and rates are stored as angular quantities (rad/s).
//! User-facing documents ([`params::ParamSet`]) carry Hz and are converted
//! once at the boundary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod error;
pub mod figures;
pub mod model;
pub mod params;
pub mod polariton;
pub mod roots;
pub mod stability;
pub mod transmission;
pub mod units;

pub use error::{Error, Result};
pub use model::{
    instantaneous_frequencies, reference_preset, BareFrequencies, CavityParams, EnvironmentState, Preset, PresetKind,
    ProbeParams, SpinBranch, SpinClass, SpinEnsembleParams, Stabilities, System,
};
pub use polariton::{Branch, OperatingPoint, PolaritonSolution};
pub use stability::{NoiseBudget, PolarizationState, StabilityCurve};
pub use transmission::{SpectrumGrid, SweepSpec, TransmissionPoint};
