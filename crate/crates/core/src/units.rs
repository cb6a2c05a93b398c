//! Conversions between user-facing cycles/s and internal rad/s.

use std::f64::consts::TAU;

#[inline]
pub fn hz_to_rad(hz: f64) -> f64 {
    hz * TAU
}

#[inline]
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / TAU
}

pub const MHZ: f64 = 1e6;
pub const KHZ: f64 = 1e3;

/// `2π·x` with `x` in MHz, the form most literature values come in.
#[inline]
pub fn mhz(x: f64) -> f64 {
    hz_to_rad(x * MHZ)
}

#[inline]
pub fn khz(x: f64) -> f64 {
    hz_to_rad(x * KHZ)
}
