//! Polariton branches of the lossless cavity + two-transition spin system,
//! their thermal and magnetic sensitivities, and thermally insensitive
//! operating points.
//!
//! The coupled-mode matrix is an arrowhead: the cavity couples to each spin
//! transition, the transitions do not couple to each other. All solves are
//! done in a frame rotating at ω_zfs so that the matrix entries are of the
//! order of the couplings rather than of the 2.87 GHz carrier.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigen::{self, Mat3};
use crate::error::{Error, Result};
use crate::model::{CavityParams, EnvironmentState, SpinEnsembleParams, System};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Middle,
    Upper,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Lower, Branch::Middle, Branch::Upper];

    pub fn index(self) -> usize {
        match self {
            Branch::Lower => 0,
            Branch::Middle => 1,
            Branch::Upper => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Lower => "lower",
            Branch::Middle => "middle",
            Branch::Upper => "upper",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Branch::Lower),
            "middle" => Ok(Branch::Middle),
            "upper" => Ok(Branch::Upper),
            other => Err(Error::BranchNotFound(other.to_string())),
        }
    }
}

/// Cavity and spin frequencies relative to `offset` (= ω_zfs), with the
/// collective couplings. Index order everywhere: cavity, spin +, spin −.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledModes {
    pub offset: f64,
    pub cavity: f64,
    pub plus: f64,
    pub minus: f64,
    pub g_plus: f64,
    pub g_minus: f64,
}

impl CoupledModes {
    pub fn from_system(spins: &SpinEnsembleParams, cavity: &CavityParams, env: &EnvironmentState) -> Self {
        Self::at_detuning(spins, env, cavity.omega_c_ref - spins.omega_zfs)
    }

    /// Modes with the cavity reference placed `detuning` above ω_zfs.
    pub fn at_detuning(spins: &SpinEnsembleParams, env: &EnvironmentState, detuning: f64) -> Self {
        let thermal = env.dwa_dt * env.delta_t;
        let zeeman = env.gyromagnetic * env.b_field;
        CoupledModes {
            offset: spins.omega_zfs,
            cavity: detuning + env.dwc_dt() * env.delta_t,
            plus: thermal + zeeman,
            minus: thermal - zeeman,
            g_plus: spins.g_plus,
            g_minus: spins.g_minus,
        }
    }

    pub fn hamiltonian(&self) -> Mat3 {
        [
            [self.cavity, self.g_plus, self.g_minus],
            [self.g_plus, self.plus, 0.0],
            [self.g_minus, 0.0, self.minus],
        ]
    }

    pub fn shifted(&self, du: [f64; 3]) -> Self {
        CoupledModes {
            cavity: self.cavity + du[0],
            plus: self.plus + du[1],
            minus: self.minus + du[2],
            ..*self
        }
    }
}

/// Diagonal of dH/dT: (R·dω_a/dT, dω_a/dT, dω_a/dT).
pub fn thermal_generator(env: &EnvironmentState) -> [f64; 3] {
    [env.dwc_dt(), env.dwa_dt, env.dwa_dt]
}

/// Diagonal of dH/dB: (0, γ_e, −γ_e).
pub fn field_generator(env: &EnvironmentState) -> [f64; 3] {
    [0.0, env.gyromagnetic, -env.gyromagnetic]
}

fn scaled(v: [f64; 3], by: f64) -> [f64; 3] {
    [v[0] * by, v[1] * by, v[2] * by]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaritonSolution {
    /// Absolute eigenfrequencies, rad/s.
    pub lambdas: [f64; 3],
    /// Eigenfrequencies relative to ω_zfs.
    pub relative: [f64; 3],
    /// `eigvecs[k]` = (cavity, spin +, spin −) amplitudes of mode `k`.
    pub eigvecs: [[f64; 3]; 3],
    pub branch_labels: [Branch; 3],
}

impl PolaritonSolution {
    fn slot(&self, branch: Branch) -> usize {
        self.branch_labels
            .iter()
            .position(|&b| b == branch)
            .expect("every branch label is assigned exactly once")
    }

    pub fn frequency(&self, branch: Branch) -> f64 {
        self.lambdas[self.slot(branch)]
    }

    pub fn relative_frequency(&self, branch: Branch) -> f64 {
        self.relative[self.slot(branch)]
    }

    pub fn mode(&self, branch: Branch) -> [f64; 3] {
        self.eigvecs[self.slot(branch)]
    }
}

pub fn solve_modes(modes: &CoupledModes) -> PolaritonSolution {
    let e = eigen::sym_eigen3(&modes.hamiltonian());
    PolaritonSolution {
        lambdas: e.values.map(|v| v + modes.offset),
        relative: e.values,
        eigvecs: e.vectors,
        branch_labels: Branch::ALL,
    }
}

/// Polariton eigenfrequencies at the given environment, sorted ascending
/// and labelled lower/middle/upper.
pub fn eigenfrequencies(
    spins: &SpinEnsembleParams,
    cavity: &CavityParams,
    env: &EnvironmentState,
) -> PolaritonSolution {
    solve_modes(&CoupledModes::from_system(spins, cavity, env))
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Relabels a sweep so each label follows its mode vector, not its sort
/// position. The first solution keeps sort-order labels.
pub fn track_branches(sweep: &mut [PolaritonSolution]) {
    for i in 1..sweep.len() {
        let prev = sweep[i - 1];
        let cur = &mut sweep[i];
        let overlap = |a: usize, b: usize| eigen::dot(&prev.eigvecs[a], &cur.eigvecs[b]).abs();
        // perm[a] = slot in `cur` continuing slot `a` of `prev`
        let best = PERMUTATIONS
            .iter()
            .max_by(|p, q| {
                let sp: f64 = (0..3).map(|a| overlap(a, p[a])).sum();
                let sq: f64 = (0..3).map(|a| overlap(a, q[a])).sum();
                sp.total_cmp(&sq)
            })
            .expect("non-empty");
        let mut labels = cur.branch_labels;
        for a in 0..3 {
            labels[best[a]] = prev.branch_labels[a];
        }
        cur.branch_labels = labels;
    }
}

/// Solves at each cavity reference detuning and tracks branch labels.
pub fn detuning_sweep(system: &System, detunings: &[f64]) -> Vec<PolaritonSolution> {
    let mut out: Vec<_> = detunings
        .iter()
        .map(|&d| solve_modes(&CoupledModes::at_detuning(&system.spins, &system.env, d)))
        .collect();
    track_branches(&mut out);
    out
}

/// Polariton energies for degenerate spin transitions (ω₊ = ω₋ = ω_a):
/// ν± = (ω_c+ω_a)/2 ± √((ω_c−ω_a)²/4 + g₊² + g₋²). Returns (ν₊, ν₋).
pub fn polariton_energies_degenerate(omega_c: f64, omega_a: f64, g_plus: f64, g_minus: f64) -> (f64, f64) {
    let mean = 0.5 * (omega_c + omega_a);
    let half = 0.5 * (omega_c - omega_a);
    let root = (half * half + g_plus * g_plus + g_minus * g_minus).sqrt();
    (mean + root, mean - root)
}

/// Closed-form dν±/dT for degenerate transitions and equal couplings `g`,
/// obtained by differentiating [`polariton_energies_degenerate`]:
/// 2 dν±/dT = a(1+R) ± a(R−1)(ω_c−ω_a)/√((ω_c−ω_a)² + 8g²).
pub fn dnu_dt_degenerate(omega_c: f64, omega_a: f64, g: f64, dwa_dt: f64, r_ratio: f64, branch: Branch) -> Result<f64> {
    let sign = match branch {
        Branch::Upper => 1.0,
        Branch::Lower => -1.0,
        Branch::Middle => return Err(Error::BranchNotFound("middle (no closed form)".into())),
    };
    let delta = omega_c - omega_a;
    let a = dwa_dt;
    let root = (delta * delta + 8.0 * g * g).sqrt();
    let mixing = if root == 0.0 { 0.0 } else { delta / root };
    Ok(0.5 * (a * (1.0 + r_ratio) + sign * a * (r_ratio - 1.0) * mixing))
}

/// Closed-form d²ν±/dT² for degenerate transitions and equal couplings:
/// ±g²(1−R)²a²/(2f³), f = √(δ²/4 + 2g²).
pub fn thermal_curvature_degenerate(detuning: f64, g: f64, dwa_dt: f64, r_ratio: f64, branch: Branch) -> Result<f64> {
    let sign = match branch {
        Branch::Upper => 1.0,
        Branch::Lower => -1.0,
        Branch::Middle => return Err(Error::BranchNotFound("middle (no closed form)".into())),
    };
    let f = (0.25 * detuning * detuning + 2.0 * g * g).sqrt();
    Ok(sign * g * g * (1.0 - r_ratio).powi(2) * dwa_dt * dwa_dt / (2.0 * f.powi(3)))
}

/// First-order response vᵀ·diag(generator)·v of one branch.
pub fn hellmann_feynman(modes: &CoupledModes, branch: Branch, generator: [f64; 3]) -> f64 {
    let v = solve_modes(modes).mode(branch);
    v[0] * v[0] * generator[0] + v[1] * v[1] * generator[1] + v[2] * v[2] * generator[2]
}

/// dν/dT of one branch at the given environment (Hellmann–Feynman).
pub fn dnu_dt(spins: &SpinEnsembleParams, cavity: &CavityParams, env: &EnvironmentState, branch: Branch) -> f64 {
    hellmann_feynman(
        &CoupledModes::from_system(spins, cavity, env),
        branch,
        thermal_generator(env),
    )
}

/// Frequency change λ(modes + du) − λ(modes) of one branch.
///
/// For branches with a cavity component this solves the secular equation
/// written in differences, so shifts far below the rounding floor of the
/// eigenvalues themselves are resolved to full relative precision.
pub fn branch_shift(modes: &CoupledModes, branch: Branch, du: [f64; 3]) -> f64 {
    let sol = solve_modes(modes);
    let v = sol.mode(branch);
    let lambda0 = sol.relative_frequency(branch);
    let direct = || solve_modes(&modes.shifted(du)).relative_frequency(branch) - lambda0;

    let spins = [(modes.g_plus, modes.plus), (modes.g_minus, modes.minus)];
    if v[0].abs() < 1e-6 {
        // spin-like state with no cavity weight: decoupled or dark
        for (j, &(g, _)) in spins.iter().enumerate() {
            if g == 0.0 && v[j + 1].abs() > 1.0 - 1e-12 {
                return du[j + 1];
            }
        }
        return direct();
    }

    // G(Δ) = (u_c − Δ) + Σ g_j² (u_j − Δ) / (s_j (s_j + u_j − Δ)),  s_j = ω_j − λ₀
    let terms: Vec<(f64, f64, f64)> = spins
        .iter()
        .zip([du[1], du[2]])
        .filter(|(&(g, _), _)| g != 0.0)
        .map(|(&(g, w), u)| (g * g, w - lambda0, u))
        .collect();
    let secular = |d: f64| {
        let mut val = du[0] - d;
        let mut slope = -1.0;
        for &(g2, s, u) in &terms {
            let den = s + u - d;
            val += g2 * (u - d) / (s * den);
            slope -= g2 / (den * den);
        }
        (val, slope)
    };

    let mut d = 0.0;
    for _ in 0..60 {
        let (val, slope) = secular(d);
        let step = val / slope;
        d -= step;
        if step.abs() <= 4.0 * f64::EPSILON * d.abs() || step == 0.0 {
            // stay on the same sheet: the root must not cross a pole
            let crossed = terms.iter().any(|&(_, s, u)| (s + u - d).signum() != s.signum());
            if crossed || !d.is_finite() {
                break;
            }
            return d;
        }
    }
    direct()
}

/// Second derivative of a branch along `generator`, by central differences
/// of [`branch_shift`] with one Richardson step.
pub fn second_derivative(modes: &CoupledModes, branch: Branch, generator: [f64; 3], step: f64) -> f64 {
    let dd = |h: f64| {
        let up = branch_shift(modes, branch, scaled(generator, h));
        let down = branch_shift(modes, branch, scaled(generator, -h));
        (up + down) / (h * h)
    };
    let coarse = dd(step);
    let fine = dd(0.5 * step);
    (4.0 * fine - coarse) / 3.0
}

/// Step sizes for numerical derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDiffSteps {
    /// K
    pub temperature: f64,
    /// T
    pub field: f64,
}

impl Default for FiniteDiffSteps {
    fn default() -> Self {
        FiniteDiffSteps {
            temperature: 1e-3,
            field: 1e-9,
        }
    }
}

/// Operating-point detunings ω_c − ω_a from the closed form, for both
/// branches. Defined only for `r_ratio != 0`; physically meaningful for
/// `r_ratio < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormOperatingPoints {
    pub upper: f64,
    pub lower: f64,
}

pub fn operating_point_closed_form(g: f64, r_ratio: f64) -> Result<ClosedFormOperatingPoints> {
    if r_ratio == 0.0 || !r_ratio.is_finite() {
        return Err(Error::NoOperatingPoint(
            "R = 0: thermally inert cavity has no finite operating point".into(),
        ));
    }
    let s = r_ratio.abs().sqrt();
    let upper = std::f64::consts::SQRT_2 * g * (1.0 / s - s);
    Ok(ClosedFormOperatingPoints { upper, lower: -upper })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Instantaneous spin-cavity detuning ω_c − ω_a at the root, rad/s.
    pub detuning: f64,
    /// Cavity reference detuning ω_c,ref − ω_zfs that realizes it.
    pub cavity_ref_detuning: f64,
    pub branch: Branch,
    /// Branch frequency at the root, rad/s.
    pub frequency: f64,
    /// dν/dT left at the root, rad/s per K.
    pub dnu_dt_residual: f64,
    /// d²ν/dT², rad/s per K².
    pub curvature_t: f64,
    /// d²ν/dB², rad/s per T².
    pub curvature_b: f64,
}

impl OperatingPoint {
    /// Coupled modes at this operating point for the given environment.
    pub fn modes(&self, spins: &SpinEnsembleParams, env: &EnvironmentState) -> CoupledModes {
        CoupledModes::at_detuning(spins, env, self.cavity_ref_detuning)
    }
}

/// Root of dν/dT over the cavity reference detuning, by Brent's method.
/// `range` defaults to ±20·max(g₊, g₋).
pub fn operating_point_numeric(
    spins: &SpinEnsembleParams,
    env: &EnvironmentState,
    range: Option<(f64, f64)>,
    branch: Branch,
    steps: FiniteDiffSteps,
) -> Result<OperatingPoint> {
    let g = spins.g_plus.max(spins.g_minus);
    let (lo, hi) = match range {
        Some(r) => r,
        None => {
            if g == 0.0 {
                return Err(Error::NoOperatingPoint("zero coupling: no avoided crossing".into()));
            }
            (-20.0 * g, 20.0 * g)
        }
    };
    if !(lo < hi) {
        return Err(Error::NoOperatingPoint(format!("empty search range [{lo}, {hi}]")));
    }
    let generator = thermal_generator(env);
    let slope = |d: f64| hellmann_feynman(&CoupledModes::at_detuning(spins, env, d), branch, generator);

    let (f_lo, f_hi) = (slope(lo), slope(hi));
    if f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        let why = if env.r_ratio >= 0.0 {
            format!(
                "R = {} >= 0: spin and cavity drift in the same direction, dν/dT keeps its sign on the {branch} branch",
                env.r_ratio
            )
        } else {
            format!("dν/dT does not change sign on the {branch} branch within the search range")
        };
        return Err(Error::NoOperatingPoint(why));
    }

    let root = roots::brent(slope, lo, hi, 0.0, 200)?;
    let residual = root.fx;
    if residual.abs() > 1e-6 * env.dwa_dt.abs() {
        return Err(Error::RootFinder(format!(
            "residual dν/dT = {residual:e} exceeds tolerance"
        )));
    }
    let modes = CoupledModes::at_detuning(spins, env, root.x);
    let sol = solve_modes(&modes);
    let mut at_zero_field = *env;
    at_zero_field.b_field = 0.0;
    let field_modes = CoupledModes::at_detuning(spins, &at_zero_field, root.x);
    Ok(OperatingPoint {
        detuning: modes.cavity - 0.5 * (modes.plus + modes.minus),
        cavity_ref_detuning: root.x,
        branch,
        frequency: sol.frequency(branch),
        dnu_dt_residual: residual,
        curvature_t: second_derivative(&modes, branch, generator, steps.temperature),
        curvature_b: second_derivative(&field_modes, branch, field_generator(env), steps.field),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticResponse {
    /// rad/s per T
    pub dnu_db: f64,
    /// rad/s per T²
    pub d2nu_db2: f64,
    /// Set when g₊ ≠ g₋, where the first-order cancellation is not expected.
    pub off_nominal: bool,
}

pub fn magnetic_response(
    spins: &SpinEnsembleParams,
    cavity: &CavityParams,
    env: &EnvironmentState,
    branch: Branch,
    steps: FiniteDiffSteps,
) -> MagneticResponse {
    let modes = CoupledModes::from_system(spins, cavity, env);
    let generator = field_generator(env);
    MagneticResponse {
        dnu_db: hellmann_feynman(&modes, branch, generator),
        d2nu_db2: second_derivative(&modes, branch, generator, steps.field),
        off_nominal: spins.g_plus != spins.g_minus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_preset, PresetKind};
    use crate::units::{khz, mhz};

    fn modes(cavity: f64, plus: f64, minus: f64, g: f64) -> CoupledModes {
        CoupledModes {
            offset: 0.0,
            cavity,
            plus,
            minus,
            g_plus: g,
            g_minus: g,
        }
    }

    #[test]
    fn decoupled_limit_returns_bare_frequencies() {
        let sol = solve_modes(&modes(mhz(3.0), mhz(10.0), mhz(-10.0), 0.0));
        assert_eq!(sol.relative, [mhz(-10.0), mhz(3.0), mhz(10.0)]);
    }

    #[test]
    fn symmetric_resonance() {
        let g = mhz(2.0);
        let sol = solve_modes(&modes(0.0, 0.0, 0.0, g));
        let s = std::f64::consts::SQRT_2 * g;
        assert!((sol.relative[0] + s).abs() < 1e-14 * s);
        assert!(sol.relative[1].abs() < 1e-14 * s);
        assert!((sol.relative[2] - s).abs() < 1e-14 * s);
    }

    #[test]
    fn degenerate_closed_form_splitting() {
        let g = mhz(5.0);
        let (up, down) = polariton_energies_degenerate(1.0, 1.0, g, g);
        assert!((up - down - 2.0 * std::f64::consts::SQRT_2 * g).abs() < 1e-6);
        assert_eq!(polariton_energies_degenerate(7.0, 3.0, 0.0, 0.0), (7.0, 3.0));
    }

    #[test]
    fn equal_thermal_coefficients_move_rigidly() {
        let a = khz(77.0);
        for b in [Branch::Upper, Branch::Lower] {
            let d = dnu_dt_degenerate(mhz(3.0), 0.0, mhz(1.0), a, 1.0, b).unwrap();
            assert!((d - a).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn weak_coupling_upper_branch_follows_cavity() {
        let a = khz(77.0);
        let d = dnu_dt_degenerate(mhz(10.0), 0.0, 1e-3, a, -0.3, Branch::Upper).unwrap();
        assert!((d - (-0.3 * a)).abs() < 1e-9 * a);
    }

    #[test]
    fn middle_branch_has_no_closed_form() {
        assert!(matches!(
            dnu_dt_degenerate(0.0, 0.0, 1.0, 1.0, -0.3, Branch::Middle),
            Err(Error::BranchNotFound(_))
        ));
    }

    #[test]
    fn closed_form_operating_points() {
        let p = operating_point_closed_form(mhz(5.0), -1.0).unwrap();
        assert_eq!(p.upper, 0.0);
        let p = operating_point_closed_form(mhz(5.0), -0.3).unwrap();
        assert!((p.upper / mhz(1.0) - 9.0369).abs() < 1e-3);
        assert_eq!(p.lower, -p.upper);
        let p = operating_point_closed_form(mhz(1.0), -0.1).unwrap();
        assert!((p.upper / mhz(1.0) - 4.0249).abs() < 1e-3);
        assert!(operating_point_closed_form(mhz(1.0), 0.0).is_err());
    }

    #[test]
    fn closed_form_root_zeroes_closed_form_slope() {
        let (g, a, r) = (mhz(5.0), khz(77.0), -0.3);
        let d = operating_point_closed_form(g, r).unwrap();
        let up = dnu_dt_degenerate(d.upper, 0.0, g, a, r, Branch::Upper).unwrap();
        let down = dnu_dt_degenerate(d.lower, 0.0, g, a, r, Branch::Lower).unwrap();
        assert!(up.abs() <= 1e-12 * a, "{up}");
        assert!(down.abs() <= 1e-12 * a, "{down}");
    }

    #[test]
    fn numeric_operating_point_matches_closed_form() {
        let mut spins = reference_preset(PresetKind::Current).system.spins;
        spins.g_plus = mhz(5.0);
        spins.g_minus = mhz(5.0);
        let env = EnvironmentState::nominal(-0.3);
        let op = operating_point_numeric(&spins, &env, None, Branch::Upper, FiniteDiffSteps::default()).unwrap();
        let closed = operating_point_closed_form(mhz(5.0), -0.3).unwrap();
        assert!((op.detuning - closed.upper).abs() < 1e-9 * closed.upper);
        assert!(op.dnu_dt_residual.abs() <= 1e-6 * env.dwa_dt);
        let lower = operating_point_numeric(&spins, &env, None, Branch::Lower, FiniteDiffSteps::default()).unwrap();
        assert!((lower.detuning - closed.lower).abs() < 1e-9 * closed.upper);
        assert!(lower.curvature_t < 0.0 && op.curvature_t > 0.0);
    }

    #[test]
    fn positive_ratio_has_no_operating_point() {
        let mut spins = reference_preset(PresetKind::Current).system.spins;
        spins.g_plus = mhz(5.0);
        spins.g_minus = mhz(5.0);
        let env = EnvironmentState::nominal(0.3);
        for b in [Branch::Upper, Branch::Lower, Branch::Middle] {
            let err = operating_point_numeric(&spins, &env, None, b, FiniteDiffSteps::default()).unwrap_err();
            assert!(
                matches!(err, Error::NoOperatingPoint(ref m) if m.contains("R = 0.3")),
                "{err}"
            );
        }
    }

    #[test]
    fn outlook_curvature_matches_analytic() {
        let p = reference_preset(PresetKind::Outlook);
        let env = p.system.env;
        let op =
            operating_point_numeric(&p.system.spins, &env, None, Branch::Upper, FiniteDiffSteps::default()).unwrap();
        let analytic = thermal_curvature_degenerate(
            op.detuning,
            p.system.spins.g_plus,
            env.dwa_dt,
            env.r_ratio,
            Branch::Upper,
        )
        .unwrap();
        assert!(op.curvature_t.is_finite() && op.curvature_b.is_finite());
        assert!(
            (op.curvature_t - analytic).abs() < 0.01 * analytic,
            "{} vs {}",
            op.curvature_t,
            analytic
        );
    }

    #[test]
    fn shift_solver_agrees_with_direct_solve_for_large_steps() {
        let m = modes(mhz(4.0), mhz(0.3), mhz(-0.2), mhz(1.0));
        for b in Branch::ALL {
            for du in [[mhz(0.5), mhz(-0.2), mhz(0.1)], [khz(3.0), khz(1.0), khz(1.0)]] {
                let fast = branch_shift(&m, b, du);
                let slow = solve_modes(&m.shifted(du)).relative_frequency(b) - solve_modes(&m).relative_frequency(b);
                assert!((fast - slow).abs() < 1e-7 * mhz(1.0), "{b}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn dark_state_shift_uses_direct_path() {
        let m = modes(mhz(2.0), 0.0, 0.0, mhz(1.0));
        let s = branch_shift(&m, Branch::Middle, [0.0, 10.0, 10.0]);
        assert!((s - 10.0).abs() < 1e-6);
    }

    #[test]
    fn zero_field_slope_vanishes_for_symmetric_couplings() {
        let p = reference_preset(PresetKind::Current);
        let s = &p.system;
        let r = magnetic_response(&s.spins, &s.cavity, &s.env, Branch::Upper, FiniteDiffSteps::default());
        assert!(r.dnu_db.abs() <= 1e-9 * s.env.gyromagnetic);
        assert!(r.d2nu_db2.is_finite() && !r.off_nominal);
    }

    #[test]
    fn asymmetric_couplings_break_field_cancellation() {
        let p = reference_preset(PresetKind::Current);
        let mut s = p.system.clone();
        s.spins.g_minus = 0.7 * s.spins.g_plus;
        let r = magnetic_response(&s.spins, &s.cavity, &s.env, Branch::Upper, FiniteDiffSteps::default());
        assert!(r.off_nominal);
        // finite-difference check on the precise shift
        let m = CoupledModes::from_system(&s.spins, &s.cavity, &s.env);
        let h = 1e-9;
        let gen = field_generator(&s.env);
        let fd = (branch_shift(&m, Branch::Upper, scaled(gen, h)) - branch_shift(&m, Branch::Upper, scaled(gen, -h)))
            / (2.0 * h);
        assert!(r.dnu_db.abs() > 1e-3 * s.env.gyromagnetic);
        assert!((fd - r.dnu_db).abs() < 1e-6 * r.dnu_db.abs());
    }

    #[test]
    fn ten_nanotesla_shift_is_sub_hundred_millihertz() {
        let p = reference_preset(PresetKind::Current);
        let s = &p.system;
        let m = CoupledModes::from_system(&s.spins, &s.cavity, &s.env);
        let shift = branch_shift(&m, Branch::Upper, scaled(field_generator(&s.env), 10e-9));
        let direct = solve_modes(&m.shifted(scaled(field_generator(&s.env), 10e-9))).relative_frequency(Branch::Upper)
            - solve_modes(&m).relative_frequency(Branch::Upper);
        let hz = crate::units::rad_to_hz(shift).abs();
        assert!(hz < 0.1, "{hz} Hz");
        assert!((shift - direct).abs() < 1e-6, "{shift} vs {direct}");
    }

    #[test]
    fn tracking_keeps_labels_through_sweep() {
        let p = reference_preset(PresetKind::Current);
        let mut sys = p.system.clone();
        sys.env.b_field = 1e-4;
        let ds: Vec<f64> = (-40..=40).map(|i| mhz(i as f64 * 0.5)).collect();
        let sweep = detuning_sweep(&sys, &ds);
        // the cavity-like mode ends on the opposite side of the spins
        let first = sweep.first().unwrap();
        let last = sweep.last().unwrap();
        let cavity_like = |s: &PolaritonSolution| {
            Branch::ALL
                .into_iter()
                .max_by(|a, b| s.mode(*a)[0].abs().total_cmp(&s.mode(*b)[0].abs()))
                .unwrap()
        };
        assert_eq!(cavity_like(first), Branch::Lower);
        assert_eq!(cavity_like(last), Branch::Upper);
        for w in sweep.windows(2) {
            for b in Branch::ALL {
                let o = eigen::dot(&w[0].mode(b), &w[1].mode(b)).abs();
                assert!(o > 0.5, "label jump for {b}");
            }
        }
    }
}
