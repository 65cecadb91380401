//! Experiment runner behind the `secrecy` binary.
//!
//! Configs are TOML files with the [`Scenario`] schema. The name `default`
//! (when no such file exists) resolves to the bundled default scenario, and
//! a `manifest.json` from an earlier run is accepted in place of a config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use satsec::link::db_to_linear;
use satsec::montecarlo::estimate_secrecy_summary;
use satsec::scenario::{Diagnostic, Scenario};
use satsec::secrecy::{
    avg_secrecy_lower_bound, avg_secrecy_taylor_approx, fbl_secrecy_rate, secrecy_capacity,
};
use satsec::sweep::{presets, sweep, SweepError, SweepSpec, SweepTable};

pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");
pub const THREADS_ENV: &str = "SECRECY_THREADS";
pub const MANIFEST_NAME: &str = "manifest.json";

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("invalid configuration:\n{}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("numerical failure in {op}: {message}")]
    Numerical { op: String, message: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Invalid(_) => 2,
            Self::Numerical { .. } => 3,
            Self::Io { .. } => 1,
        }
    }
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

fn numerical(op: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Numerical {
        op: op.to_string(),
        message: err.to_string(),
    }
}

/// Reads a scenario from a TOML config, a run manifest, or the `default`
/// alias. Does not validate it.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    if !path.exists() && path.as_os_str() == "default" {
        return parse_toml(DEFAULT_CONFIG, path);
    }
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().is_some_and(|ext| ext == "json") {
        let manifest: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let resolved = manifest.get("resolved_config").cloned().ok_or_else(|| {
            CliError::Config(format!("{}: no resolved_config entry", path.display()))
        })?;
        return serde_json::from_value(resolved)
            .map_err(|e| CliError::Config(format!("{}: resolved_config: {e}", path.display())));
    }
    parse_toml(&text, path)
}

fn parse_toml(text: &str, path: &Path) -> Result<Scenario, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Diagnostics for the config at `path`; empty when it is valid.
pub fn validate(path: &Path) -> Result<Vec<Diagnostic>, CliError> {
    Ok(load_scenario(path)?.validate())
}

/// Worker cap from `SECRECY_THREADS`, if set.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV} = {v:?} must be a positive integer"
            ))),
        },
    }
}

fn capped(mut scenario: Scenario, cap: Option<usize>) -> Scenario {
    if let Some(cap) = cap {
        scenario.mc.streams = scenario.mc.streams.min(cap);
    }
    scenario
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub master_seed: u64,
    pub samples: u64,
    pub resolved_config: Scenario,
    pub artifacts: Vec<Artifact>,
}

/// Sweep named `name` in the scenario, falling back to the built-in presets.
pub fn find_sweep(scenario: &Scenario, name: &str) -> Option<SweepSpec> {
    scenario
        .sweep(name)
        .cloned()
        .or_else(|| presets::all().into_iter().find(|s| s.name == name))
}

/// Runs one experiment and writes `<experiment>.csv` and `manifest.json`
/// into `out_dir`. Nothing is written unless the whole sweep succeeds.
pub fn run(
    config: &Path,
    experiment: &str,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<Manifest, CliError> {
    let mut scenario = load_scenario(config)?;
    if let Some(seed) = opts.seed {
        scenario.mc.master_seed = seed;
    }
    if let Some(samples) = opts.samples {
        scenario.mc.samples = samples;
    }
    let diags = scenario.validate();
    if !diags.is_empty() {
        return Err(CliError::Invalid(diags));
    }
    let spec = find_sweep(&scenario, experiment).ok_or_else(|| {
        let mut known: Vec<String> = scenario.sweeps.iter().map(|s| s.name.clone()).collect();
        for p in presets::all() {
            if !known.contains(&p.name) {
                known.push(p.name);
            }
        }
        CliError::Config(format!(
            "unknown experiment {experiment:?}; available: {}",
            known.join(", ")
        ))
    })?;

    let table = sweep(&spec, &capped(scenario.clone(), opts.threads)).map_err(|e| match e {
        SweepError::Invalid(d) => CliError::Invalid(d),
        SweepError::Numerical { op, .. } => numerical(op, &e),
    })?;
    let csv = render_csv(&table);

    let file = format!("{experiment}.csv");
    let artifact = Artifact {
        file: file.clone(),
        rows: table.len(),
        sha256: sha256_hex(csv.as_bytes()),
    };
    let manifest = Manifest {
        tool: "secrecy".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: experiment.into(),
        master_seed: scenario.mc.master_seed,
        samples: scenario.mc.samples,
        resolved_config: scenario,
        artifacts: vec![artifact],
    };
    let manifest_text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Config(format!("cannot serialize manifest: {e}")))?
        + "\n";

    let io = |context: String| move |source| CliError::Io { context, source };
    fs::create_dir_all(out_dir).map_err(io(format!("creating {}", out_dir.display())))?;
    write_file(&out_dir.join(&file), &csv).map_err(io(format!("writing {file}")))?;
    write_file(&out_dir.join(MANIFEST_NAME), &manifest_text)
        .map_err(io(format!("writing {MANIFEST_NAME}")))?;
    Ok(manifest)
}

// Write through a temporary name so a crash never leaves a truncated file.
fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    let mut tmp = PathBuf::from(path);
    tmp.set_extension("partial");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Float in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_csv(table: &SweepTable) -> String {
    let mut out = String::new();
    match table {
        SweepTable::Rate { axis, rows } => {
            out.push_str(axis.key());
            out.push_str(
                ",mc_mean,mc_stderr,lower_bound,taylor_approx,capacity,mc_raw_mean,clamped_fraction\n",
            );
            for r in rows {
                let x = if *axis == satsec::sweep::SweepAxis::N {
                    format!("{}", r.x as u64)
                } else {
                    fmt_f64(r.x)
                };
                let fields = [
                    r.mc_mean,
                    r.mc_stderr,
                    r.lower_bound,
                    r.taylor_approx,
                    r.capacity,
                    r.mc_raw_mean,
                    r.clamped_fraction,
                ];
                out.push_str(&x);
                for f in fields {
                    let _ = write!(out, ",{}", fmt_f64(f));
                }
                out.push('\n');
            }
        }
        SweepTable::Leakage { rows } => {
            out.push_str("phi_deg,d_eb_km,delta,log10_delta,saturated\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    fmt_f64(r.phi_deg),
                    fmt_f64(r.d_eb_km),
                    fmt_f64(r.delta),
                    fmt_f64(r.log10_delta),
                    r.saturated
                );
            }
        }
    }
    out
}

/// Short names accepted by `--set` next to full dotted paths.
pub const OVERRIDE_ALIASES: &[(&str, &str)] = &[
    ("n", "fbl.n"),
    ("k", "fbl.k_bits"),
    ("k_bits", "fbl.k_bits"),
    ("eps_b", "fbl.eps_b"),
    ("delta", "fbl.delta"),
    ("snr_b_db", "link.mean_snr_b_db"),
    ("snr_e_db", "link.mean_snr_e_db"),
    ("phi_deg", "geometry.phi_deg"),
    ("d_eb_km", "geometry.d_eb_km"),
    ("samples", "mc.samples"),
    ("seed", "mc.master_seed"),
];

fn parse_value(raw: &str, current: Option<&Value>) -> Value {
    match raw {
        "true" => return Value::Bool(true),
        "false" => return Value::Bool(false),
        _ => {}
    }
    if let Ok(x) = raw.parse::<f64>() {
        let wants_int = matches!(current, Some(Value::Number(n)) if n.is_u64());
        if wants_int && x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
            return json!(x as u64);
        }
        return json!(x);
    }
    Value::String(raw.to_string())
}

/// Applies `key=value` overrides. Unknown keys are config errors.
pub fn apply_overrides(scenario: &Scenario, overrides: &[String]) -> Result<Scenario, CliError> {
    let mut tree = serde_json::to_value(scenario)
        .map_err(|e| CliError::Config(format!("cannot serialize scenario: {e}")))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override {item:?} is not key=value")))?;
        let key = key.trim();
        let path = OVERRIDE_ALIASES
            .iter()
            .find(|(alias, _)| *alias == key)
            .map_or(key, |(_, full)| *full);
        let parts: Vec<&str> = path.split('.').collect();

        if parts[0] == "geometry" && parts.len() == 2 {
            // The two geometry keys are alternatives; setting one clears the other.
            let field = parts[1];
            if field != "phi_deg" && field != "d_eb_km" {
                return Err(CliError::Config(format!("unknown key {key:?}")));
            }
            let value = parse_value(raw.trim(), None);
            let mut geo = Map::new();
            geo.insert(field.to_string(), value);
            tree["geometry"] = Value::Object(geo);
            continue;
        }

        let mut node = &mut tree;
        for (i, part) in parts.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| CliError::Config(format!("unknown key {key:?}")))?;
            if i + 1 == parts.len() {
                let current = obj
                    .get(*part)
                    .ok_or_else(|| CliError::Config(format!("unknown key {key:?}")))?;
                let value = parse_value(raw.trim(), Some(current));
                obj.insert(part.to_string(), value);
                break;
            }
            node = obj
                .get_mut(*part)
                .ok_or_else(|| CliError::Config(format!("unknown key {key:?}")))?;
        }
    }
    serde_json::from_value(tree).map_err(|e| CliError::Config(format!("override rejected: {e}")))
}

/// Single-point report as one JSON object.
pub fn point(
    config: &Path,
    overrides: &[String],
    with_mc: bool,
    threads: Option<usize>,
) -> Result<Value, CliError> {
    let base = load_scenario(config)?;
    let scenario = apply_overrides(&base, overrides)?;
    let diags = scenario.validate();
    if !diags.is_empty() {
        return Err(CliError::Invalid(diags));
    }
    let snr_b = db_to_linear(scenario.link.mean_snr_b_db);
    let snr_e = db_to_linear(scenario.link.mean_snr_e_db);
    let snrs = satsec::secrecy::SnrPair::new(snr_b, snr_e);
    let links = scenario
        .rate_links()
        .map_err(|e| numerical("calibrate_to_mean_snr", e))?;
    let cfg = &scenario.fbl;

    let mut out = Map::new();
    out.insert("n".into(), json!(cfg.n));
    out.insert("mean_snr_b".into(), json!(snr_b));
    out.insert("mean_snr_e".into(), json!(snr_e));
    out.insert("secrecy_capacity".into(), json!(secrecy_capacity(snrs)));
    out.insert(
        "rate_at_mean_snr".into(),
        json!(fbl_secrecy_rate(snrs, cfg).map_err(|e| numerical("fbl_secrecy_rate", e))?),
    );
    out.insert(
        "lower_bound".into(),
        json!(avg_secrecy_lower_bound(&links, cfg)
            .map_err(|e| numerical("avg_secrecy_lower_bound", e))?),
    );
    out.insert(
        "taylor_approx".into(),
        json!(avg_secrecy_taylor_approx(&links, cfg)
            .map_err(|e| numerical("avg_secrecy_taylor_approx", e))?),
    );
    let leak = scenario
        .leakage_at_mean_snrs()
        .map_err(|e| numerical("leakage_for_rate", e))?;
    out.insert("rate_target".into(), json!(cfg.rate_target()));
    out.insert("delta".into(), json!(leak.delta));
    out.insert("log10_delta".into(), json!(leak.log10_delta));
    out.insert("delta_saturated".into(), json!(leak.saturated));

    if let Some(geo) = scenario.geometry {
        let phi = geo.phi_deg(scenario.link.d_e_km);
        let p = scenario
            .leakage_at(phi)
            .map_err(|e| numerical("leakage_for_rate", e))?;
        out.insert(
            "geometry".into(),
            json!({
                "phi_deg": p.phi_deg,
                "d_eb_km": p.d_eb_km,
                "mean_snr_e_db": p.mean_snr_e_db,
                "delta": p.leakage.delta,
                "log10_delta": p.leakage.log10_delta,
                "saturated": p.leakage.saturated,
            }),
        );
    }

    if with_mc {
        let run = capped(scenario.clone(), threads);
        let s = estimate_secrecy_summary(&links, cfg, &run.mc)
            .map_err(|e| numerical("estimate_avg_secrecy", e))?;
        out.insert("mc_mean".into(), json!(s.rate.mean));
        out.insert("mc_stderr".into(), json!(s.rate.std_error));
        out.insert("mc_raw_mean".into(), json!(s.rate.raw_mean));
        out.insert("mc_clamped_fraction".into(), json!(s.rate.clamped_fraction));
        out.insert("mc_capacity".into(), json!(s.capacity.mean));
        out.insert("mc_capacity_stderr".into(), json!(s.capacity.std_error));
        out.insert("mc_samples".into(), json!(s.rate.samples_used));
    }
    Ok(Value::Object(out))
}
