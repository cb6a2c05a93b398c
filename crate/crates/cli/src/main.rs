mod config;
mod error;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pssc_core::figures::{figure_setup, panel_system, Figure};
use pssc_core::params::ParamSet;
use pssc_core::{reference_preset, Branch, Preset, PresetKind};

use config::{sidecar_path, Command, Format, RunConfig, Sidecar, SweepDoc, TauRange};
use error::CliError;

const THREADS_VAR: &str = "PSSC_THREADS";

#[derive(Parser)]
#[command(
    name = "pssc",
    version,
    about = "Transmission maps, operating points and stability curves for the polariton spin clock",
    after_help = "Thread count: set PSSC_THREADS. Exit codes: 0 ok, 2 config error, 3 solver failure \
                  (errors are reported as one JSON object on stderr)."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Transmission t over a 2-D grid for one of the figure panels.
    ///
    /// Panels share κ = 500 kHz, γ = Γ = 3 MHz, g = 5 MHz (all 2π·). Axes:
    ///   2a  cavity detuning ±40 MHz × probe ±40 MHz, Zeeman split ±10 MHz
    ///   2b  as 2a with a ±1 MHz split
    ///   2c  ΔT ±200 K × probe ±50 MHz, R = −0.3, cavity at the upper operating point
    ///   2d  B ±0.5 mT × probe ±50 MHz, same cavity placement as 2c
    /// 2c and 2d also emit a 1-D trace at ΔT = 0 or B = 0 (<out>.trace.csv).
    #[command(verbatim_doc_comment, allow_negative_numbers = true)]
    Spectrum(SpectrumArgs),
    /// Thermally insensitive cavity detuning (dν/dT = 0) with curvatures and a closed-form check.
    #[command(allow_negative_numbers = true)]
    OperatingPoint(OperatingPointArgs),
    /// Fractional stability σ_y(τ) with shot noise and environmental floors.
    #[command(allow_negative_numbers = true)]
    Stability(StabilityArgs),
}

#[derive(Args, Default)]
struct Common {
    /// Starting parameter set (current | outlook).
    #[arg(long)]
    preset: Option<PresetKind>,
    /// Output file; the provenance sidecar is written to <out>.provenance.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Homodyne reference phase; 90° detects Im t.
    #[arg(long = "quadrature-deg")]
    quadrature_deg: Option<f64>,
    /// Collective coupling g₊ = g₋, Hz.
    #[arg(long = "g-hz")]
    g_hz: Option<f64>,
    /// Cavity output coupling κ, Hz.
    #[arg(long = "kappa-hz")]
    kappa_hz: Option<f64>,
    /// Cavity-to-spin thermal tuning ratio R.
    #[arg(long = "R")]
    r_ratio: Option<f64>,
    /// Temperature instability, mK.
    #[arg(long = "dT-mk")]
    dt_mk: Option<f64>,
    /// Field instability, nT.
    #[arg(long = "B-nt")]
    b_nt: Option<f64>,
    /// Probe power in photons/s (sets β = √I).
    #[arg(long = "power-photons-per-s", visible_alias = "power")]
    power: Option<f64>,
    /// Recorded in the sidecar; no command samples randomly.
    #[arg(long)]
    seed: Option<u64>,
    /// Rerun from a provenance sidecar. Only --out may be combined with it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn has_overrides(&self) -> bool {
        self.preset.is_some()
            || self.format.is_some()
            || self.quadrature_deg.is_some()
            || self.g_hz.is_some()
            || self.kappa_hz.is_some()
            || self.r_ratio.is_some()
            || self.dt_mk.is_some()
            || self.b_nt.is_some()
            || self.power.is_some()
            || self.seed.is_some()
    }

    fn apply(&self, p: &mut ParamSet) -> Result<(), CliError> {
        if let Some(g) = self.g_hz {
            p.g_plus_hz = g;
            p.g_minus_hz = g;
        }
        if let Some(k) = self.kappa_hz {
            p.kappa_out_hz = k;
        }
        if let Some(r) = self.r_ratio {
            p.r_ratio = r;
        }
        if let Some(mk) = self.dt_mk {
            p.temp_stability_k = mk * 1e-3;
        }
        if let Some(nt) = self.b_nt {
            p.field_stability_t = nt * 1e-9;
        }
        if let Some(power) = self.power {
            if !(power.is_finite() && power > 0.0) {
                return Err(CliError::config(
                    "power_photons_per_s",
                    "probe power must be finite and > 0",
                ));
            }
            p.photon_flux_per_s = power;
            p.beta_amplitude_sqrt_per_s = power.sqrt();
        }
        if let Some(deg) = self.quadrature_deg {
            p.quadrature_phase_rad = deg.to_radians();
        }
        Ok(())
    }
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "2a")]
    figure: Figure,
    /// Samples per axis.
    #[arg(long, default_value_t = 1001)]
    points: usize,
}

#[derive(Args)]
struct OperatingPointArgs {
    #[command(flatten)]
    common: Common,
    /// Polariton branch (upper | lower).
    #[arg(long, default_value = "upper")]
    branch: Branch,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    common: Common,
    /// Integration times, "lo..hi" (log-spaced) or a single value, s.
    #[arg(long, default_value = "0.1..1e4")]
    tau: String,
    /// Number of τ samples.
    #[arg(long, default_value_t = 41)]
    points: usize,
}

fn default_out(command: Command, format: Format) -> PathBuf {
    PathBuf::from(format!("{command}.{}", format.extension()))
}

/// Panel system with the current preset's probe and stabilities attached.
fn panel_params() -> ParamSet {
    let current = reference_preset(PresetKind::Current);
    let system = panel_system();
    let probe = pssc_core::ProbeParams {
        omega_probe: system.spins.omega_zfs,
        ..current.probe
    };
    ParamSet::from_preset(&Preset {
        system,
        probe,
        stabilities: current.stabilities,
    })
}

fn parse_tau(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::config("tau", format!("expected `lo..hi` or a single value, got `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    match text.split_once("..") {
        Some((lo, hi)) => Ok((num(lo)?, num(hi)?)),
        None => {
            let v = num(text)?;
            Ok((v, v))
        }
    }
}

fn load_sidecar(path: &Path, command: Command, out: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| {
        let msg = e.to_string();
        let key = msg.split('`').nth(1).unwrap_or("config").to_string();
        CliError::config(key, msg)
    })?;
    let mut cfg = sidecar.config;
    if cfg.command != command {
        return Err(CliError::config(
            "command",
            format!("sidecar is for `{}`, not `{command}`", cfg.command),
        ));
    }
    if let Some(out) = out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn resolve(cmd: Cmd) -> Result<RunConfig, CliError> {
    let (command, common) = match &cmd {
        Cmd::Spectrum(a) => (Command::Spectrum, &a.common),
        Cmd::OperatingPoint(a) => (Command::OperatingPoint, &a.common),
        Cmd::Stability(a) => (Command::Stability, &a.common),
    };
    if let Some(path) = &common.config {
        if common.has_overrides() {
            return Err(CliError::config(
                "config",
                "--config cannot be combined with parameter flags",
            ));
        }
        return load_sidecar(path, command, common.out.as_ref());
    }
    let format = common.format.unwrap_or(match command {
        Command::OperatingPoint => Format::Json,
        _ => Format::Csv,
    });
    let out = common.out.clone().unwrap_or_else(|| default_out(command, format));
    let mut params = match (common.preset, command) {
        (Some(kind), _) => ParamSet::reference(kind),
        (None, Command::Spectrum) => panel_params(),
        (None, _) => ParamSet::reference(PresetKind::Current),
    };
    common.apply(&mut params)?;
    let preset = params.to_preset()?;

    let mut cfg = RunConfig {
        command,
        preset: common.preset,
        figure: None,
        out,
        format,
        seed: common.seed.unwrap_or(0),
        branch: None,
        sweep: None,
        taus: None,
        params,
    };
    match cmd {
        Cmd::Spectrum(a) => {
            if a.points == 0 {
                return Err(CliError::config("points", "must be >= 1"));
            }
            let setup = figure_setup(a.figure, a.points, Some(preset.system.clone()))?;
            let resolved = Preset {
                system: setup.system,
                ..preset
            };
            cfg.params = ParamSet::from_preset(&resolved);
            cfg.figure = Some(a.figure);
            cfg.sweep = Some(SweepDoc::from_spec(&setup.sweep));
        }
        Cmd::OperatingPoint(a) => {
            if a.branch == Branch::Middle {
                return Err(CliError::config(
                    "branch",
                    "the middle branch has no thermal operating point",
                ));
            }
            cfg.branch = Some(a.branch);
        }
        Cmd::Stability(a) => {
            if a.points == 0 {
                return Err(CliError::config("points", "must be >= 1"));
            }
            let (min_s, max_s) = parse_tau(&a.tau)?;
            let points = if min_s == max_s { 1 } else { a.points };
            cfg.taus = Some(TauRange { min_s, max_s, points });
        }
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::config(THREADS_VAR, format!("expected a thread count, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(THREADS_VAR, e.to_string()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::config("out", format!("cannot write {}: {e}", path.display())))
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = resolve(cli.command)?;
    let outputs = run::execute(&cfg)?;
    for (path, bytes) in &outputs.files {
        write(path, bytes)?;
    }
    let sidecar = Sidecar {
        config: cfg,
        summary: outputs.summary,
    };
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    text.push('\n');
    let side = sidecar_path(&sidecar.config.out);
    write(&side, text.as_bytes())?;
    for (path, _) in &outputs.files {
        println!("wrote {}", path.display());
    }
    println!("wrote {}", side.display());
    println!(
        "{}",
        serde_json::to_string(&sidecar.summary).expect("summary serializes")
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
