use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use optonoise::cooling_budget::{budget_report, final_occupancy, PowerChoice};
use optonoise::spectra::{FrequencyGrid, SpectrumTrace};
use optonoise::timedomain_sim::{run_experiment, Experiment};
use optonoise::{
    calibrate_spectrum, detuning_sweep, transduced_power_psd, CalibrationMode, CavityParams,
    ToneDescriptor, Unit,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{self, LoadedConfig};
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_trace(dir: &Path, name: &str, trace: &SpectrumTrace<f64>) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    trace.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes `manifest.json`: fixed header fields followed by command-specific ones.
fn write_manifest(
    dir: &Path,
    command: &str,
    source_bytes: &[u8],
    seed: Option<u64>,
    files: &[&str],
    extra: Value,
) -> Result<(), CliError> {
    let mut m = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_sha256": sha256_hex(source_bytes),
        "seed": seed,
        "files": files,
    });
    if let (Value::Object(base), Value::Object(more)) = (&mut m, extra) {
        base.extend(more);
    }
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST), text)?;
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn seed_of(cfg: &LoadedConfig, seed: Option<u64>) -> Option<u64> {
    seed.or_else(|| cfg.config.simulation.as_ref().map(|s| s.seed))
}

pub fn transduce(cfg: &LoadedConfig, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let laser = cfg.laser("transduce")?;
    let cavity = cfg.cavity("transduce")?;
    let drive = cfg.drive("transduce")?;
    let t = cfg.transduce()?;

    let detunings_hz = match (&t.detunings_hz, t.detuning_min_hz, t.detuning_max_hz, t.detuning_points) {
        (Some(list), None, None, None) => list.clone(),
        (None, Some(lo), Some(hi), Some(n)) if n >= 1 && hi >= lo => linspace(lo, hi, n),
        _ => {
            return Err(CliError::Config(
                "transduce needs `detunings_hz` or `detuning_min_hz`/`detuning_max_hz`/`detuning_points`".into(),
            ))
        }
    };
    let detunings: Vec<f64> = detunings_hz.iter().map(|d| 2.0 * PI * d).collect();
    let omega_a = 2.0 * PI * t.analysis_hz;
    let s_a = laser.eval(omega_a)?;
    let sweep = detuning_sweep(&cavity, drive.power(), omega_a, s_a, &detunings)?;

    if t.omega_points < 2 || !(t.omega_max_hz > t.omega_min_hz) {
        return Err(CliError::Config(
            "transduce needs omega_max_hz > omega_min_hz and omega_points >= 2".into(),
        ));
    }
    let grid = FrequencyGrid::linear(
        2.0 * PI * t.omega_min_hz,
        2.0 * PI * t.omega_max_hz,
        t.omega_points,
    )?;
    let values = grid
        .values()
        .iter()
        .map(|w| Ok(transduced_power_psd(&cavity, &drive, *w, laser.eval(*w)?)))
        .collect::<Result<Vec<f64>, optonoise::Error>>()?;
    let spectrum = SpectrumTrace::new(grid, values, Unit::Power)?;

    create_dir(out)?;
    let mut w = BufWriter::new(File::create(out.join("detuning_sweep.csv"))?);
    sweep.write_csv(&mut w)?;
    w.flush()?;
    write_trace(out, "transduced_spectrum.csv", &spectrum)?;
    let (lo, hi) = sweep.outer_maxima();
    write_manifest(
        out,
        "transduce",
        &cfg.bytes,
        seed_of(cfg, seed),
        &["detuning_sweep.csv", "transduced_spectrum.csv"],
        json!({
            "analysis_omega_rad_per_s": omega_a,
            "s_omega_omega_at_analysis_rad2_hz": s_a,
            "detuning_rad_per_s": drive.detuning(),
            "power_w": drive.power(),
            "sweep_maxima_rad_per_s": sweep.maxima,
            "outer_maxima_rad_per_s": [lo, hi],
        }),
    )?;
    info!("transduce: wrote {}", out.display());
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleCavity {
    pub kappa_rad_per_s: f64,
    pub eta: f64,
    pub omega_optical_rad_per_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleTone {
    pub delta_phi_rad: f64,
    pub omega_mod_rad_per_s: f64,
    pub rbw_hz: f64,
}

/// Fields of a bundle manifest that `calibrate` consumes.
#[derive(Debug, Clone, Deserialize)]
pub struct BundleManifest {
    pub raw: String,
    pub background: String,
    pub unit: String,
    pub tone: Option<BundleTone>,
    pub cavity: Option<BundleCavity>,
    pub detuning_rad_per_s: Option<f64>,
}

pub fn simulate(cfg: &LoadedConfig, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let exp = Experiment {
        laser: cfg.laser("simulate")?,
        cavity: cfg.cavity("simulate")?,
        drive: cfg.drive("simulate")?,
        detector: cfg.detector("simulate")?,
        config: cfg.simulation("simulate", seed)?,
        tone: cfg.tone()?,
    };
    let bundle = run_experiment(&exp)?;
    create_dir(out)?;
    write_trace(out, "raw.csv", &bundle.raw)?;
    write_trace(out, "background.csv", &bundle.background)?;
    let config_value: Value = serde_json::from_slice(&cfg.bytes)?;
    let tone = bundle.tone.map(|t| BundleTone {
        delta_phi_rad: t.delta_phi,
        omega_mod_rad_per_s: t.omega_mod,
        rbw_hz: t.rbw,
    });
    write_manifest(
        out,
        "simulate",
        &cfg.bytes,
        Some(exp.config.seed()),
        &["raw.csv", "background.csv"],
        json!({
            "raw": "raw.csv",
            "background": "background.csv",
            "unit": Unit::Photocurrent.token(),
            "rbw_hz": bundle.raw.rbw(),
            "segments": bundle.segments,
            "mean_photocurrent_a": bundle.mean_photocurrent,
            "tone": tone,
            "cavity": BundleCavity {
                kappa_rad_per_s: exp.cavity.kappa(),
                eta: exp.cavity.eta(),
                omega_optical_rad_per_s: exp.cavity.omega_optical(),
            },
            "detuning_rad_per_s": exp.drive.detuning(),
            "power_w": exp.drive.power(),
            "config": config_value,
        }),
    )?;
    info!("simulate: wrote {}", out.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    /// Flat scale from the tone; valid near the tone frequency.
    RatioAtTone,
    /// Divides out the cavity transduction recorded in the bundle.
    Deconvolved,
}

fn read_trace(dir: &Path, name: &str) -> Result<SpectrumTrace<f64>, CliError> {
    let path = dir.join(name);
    let file = File::open(&path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    Ok(SpectrumTrace::read_csv(BufReader::new(file))?)
}

/// Accepts a bundle directory or the path of its manifest.
fn bundle_paths(input: &Path) -> (PathBuf, PathBuf) {
    if input.is_dir() {
        (input.to_path_buf(), input.join(MANIFEST))
    } else {
        (
            input.parent().map(Path::to_path_buf).unwrap_or_default(),
            input.to_path_buf(),
        )
    }
}

pub fn calibrate(input: &Path, out: Option<&Path>, mode: ModeArg) -> Result<PathBuf, CliError> {
    let (dir, manifest_path) = bundle_paths(input);
    let bytes = fs::read(&manifest_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest: BundleManifest = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Config(format!("{}: {e}", manifest_path.display())))?;
    let raw = read_trace(&dir, &manifest.raw)?;
    let background = read_trace(&dir, &manifest.background)?;
    if Unit::from_token(&manifest.unit) != Some(raw.unit()) {
        return Err(CliError::Config(format!(
            "manifest unit `{}` does not match {}",
            manifest.unit, manifest.raw
        )));
    }
    let Some(t) = &manifest.tone else {
        return Err(CliError::Config(
            "tone not found: bundle has no calibration tone".into(),
        ));
    };
    let tone = ToneDescriptor::new(t.delta_phi_rad, t.omega_mod_rad_per_s, t.rbw_hz)?;
    let cal_mode = match mode {
        ModeArg::RatioAtTone => CalibrationMode::RatioAtTone,
        ModeArg::Deconvolved => {
            let (Some(c), Some(d)) = (&manifest.cavity, manifest.detuning_rad_per_s) else {
                return Err(CliError::Config(
                    "deconvolved mode needs `cavity` and `detuning_rad_per_s` in the bundle manifest".into(),
                ));
            };
            CalibrationMode::Deconvolved {
                cavity: CavityParams::new(c.kappa_rad_per_s, c.eta, c.omega_optical_rad_per_s)?,
                detuning: d,
            }
        }
    };
    let cal = calibrate_spectrum(&raw, &background, &tone, &cal_mode)?;
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join("calibrated"));
    create_dir(&out)?;
    write_trace(&out, "calibrated.csv", &cal.trace)?;
    let bundle_manifest: Value = serde_json::from_slice(&bytes)?;
    write_manifest(
        &out,
        "calibrate",
        &bytes,
        bundle_manifest.get("seed").and_then(Value::as_u64),
        &["calibrated.csv"],
        json!({
            "method": cal.mode,
            "unit": Unit::FrequencyNoise.token(),
            "level_at_tone_rad2_hz": cal.level_at_tone,
            "tone_area": cal.tone_area,
            "tone_index": cal.tone_index,
            "tone_snr": cal.snr,
            "omega_mod_rad_per_s": tone.omega_mod,
            "bundle_manifest_sha256": sha256_hex(&bytes),
        }),
    )?;
    info!("calibrate: wrote {}", out.display());
    Ok(out)
}

pub fn budget(
    cfg: &LoadedConfig,
    out: &Path,
    seed: Option<u64>,
    sweep_power: bool,
) -> Result<(), CliError> {
    let laser = cfg.laser("budget")?;
    let cavity = cfg.cavity("budget")?;
    let mech = cfg.mechanics("budget")?;
    let section = cfg.budget();
    let report = budget_report(
        &mech,
        &cavity,
        cfg.power_choice(),
        &laser,
        section.include_backaction,
    )?;

    create_dir(out)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(out.join("budget_report.json"), text)?;
    let mut files = vec!["budget_report.json"];

    if sweep_power {
        let centre = match (cfg.power_choice(), report.optimal_power) {
            (_, Some(p)) => p,
            (PowerChoice::Fixed(p), None) => p,
            (PowerChoice::Optimize, None) => unreachable!("budget_report rejects this case"),
        };
        let lo = section.sweep_min_w.unwrap_or(centre * 1e-3);
        let hi = section.sweep_max_w.unwrap_or(centre * 1e3);
        if !(lo > 0.0 && hi > lo && section.sweep_points >= 2) {
            return Err(CliError::Config(
                "power sweep needs 0 < sweep_min_w < sweep_max_w and sweep_points >= 2".into(),
            ));
        }
        let s = report.s_at_omega_m;
        let mut w = BufWriter::new(File::create(out.join("power_sweep.csv"))?);
        writeln!(w, "power_w,n_final")?;
        let (llo, lhi) = (lo.ln(), hi.ln());
        for k in 0..section.sweep_points {
            let p = (llo + (lhi - llo) * k as f64 / (section.sweep_points - 1) as f64).exp();
            let n = final_occupancy(&mech, &cavity, p, s, section.include_backaction)?;
            writeln!(w, "{p:.8e},{n:.8e}")?;
        }
        w.flush()?;
        files.push("power_sweep.csv");
    }

    write_manifest(
        out,
        "budget",
        &cfg.bytes,
        seed_of(cfg, seed),
        &files,
        json!({ "feasible": report.feasible }),
    )?;
    info!("budget: wrote {}", out.display());
    Ok(())
}

/// Resolves the output directory for config-driven subcommands.
pub fn out_dir(cfg: &LoadedConfig, cli_out: Option<&Path>) -> PathBuf {
    cfg.output_dir(cli_out)
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    config::load(path)
}
