//! Config files. The text format has a `scenario` key and [system], [scan],
//! [engine] and [output] sections, and every section is applied on top of
//! the scenario's preset. A sweep file lists several runs as [[runs]]
//! tables, each overriding the top-level sections. A JSON sidecar written by
//! a previous run is accepted too and reproduces that run.
//!
//! ```toml
//! scenario = "transmission_scan"
//!
//! [system]
//! n_atoms = 1e5
//! omega_a_over_2pi = 6.83e9   # Hz, converted to rad/s
//! eta = 5e5                   # or [re, im]
//! temperature = 0.1           # K
//!
//! [scan]
//! delta_m = { min = -3e4, max = 3e4, points = 241 }
//! w = { min = 1e-3, max = 1e4, points = 25, spacing = "log" }
//! n_atoms = [3.4e5, 1e6]
//!
//! [engine]
//! kind = "cumulant"
//! rel_tol = 1e-8
//!
//! [output]
//! dir = "out"
//! prefix = "scan_a"
//! ```

use crate::presets::preset;
use crate::spec::{set_param, Axis, EngineConfig, EngineKind, OutputConfig, Scenario, ScenarioSpec, Spacing, PARAM_VARS};
use crate::ScenarioError;
use cqed_core::{SystemParams, C64};
use std::path::Path;
use toml::{Table, Value};

pub const ENV_OUT_DIR: &str = "CQED_OUT_DIR";
pub const ENV_WORKERS: &str = "CQED_WORKERS";

/// How the scenario of a config is decided when the file does not name one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioHint {
    None,
    /// Named on the command line; a different name in the file is an error.
    Given(Scenario),
    /// Pick a spectrum scenario from the drive settings.
    Spectrum,
}

fn cfg(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Config(msg.into())
}

pub fn load_file(path: &Path, hint: ScenarioHint) -> Result<Vec<ScenarioSpec>, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| cfg(format!("{}: {e}", path.display())))?;
    let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    if json {
        parse_json(&text, hint).map(|s| vec![s])
    } else {
        parse_toml(&text, hint)
    }
}

/// A sidecar written by a previous run, or a bare serialised spec.
pub fn parse_json(text: &str, hint: ScenarioHint) -> Result<ScenarioSpec, ScenarioError> {
    let mut v: serde_json::Value = serde_json::from_str(text).map_err(|e| cfg(format!("JSON: {e}")))?;
    if let Some(inner) = v.get_mut("spec") {
        v = inner.take();
    }
    let spec: ScenarioSpec = serde_json::from_value(v).map_err(|e| cfg(format!("JSON spec: {e}")))?;
    check_hint(spec.scenario, hint)?;
    spec.check().map_err(ScenarioError::Config)?;
    Ok(spec)
}

fn check_hint(s: Scenario, hint: ScenarioHint) -> Result<(), ScenarioError> {
    match hint {
        ScenarioHint::Given(h) if h != s => Err(cfg(format!("config is for scenario {s}, not {h}"))),
        ScenarioHint::Spectrum if s.inner_axis() != Some("omega") => {
            Err(cfg(format!("scenario {s} does not produce a spectrum")))
        }
        _ => Ok(()),
    }
}

const TOP_KEYS: [&str; 6] = ["scenario", "system", "scan", "engine", "output", "runs"];

pub fn parse_toml(text: &str, hint: ScenarioHint) -> Result<Vec<ScenarioSpec>, ScenarioError> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| cfg(e.to_string()))?;
    for k in doc.keys() {
        if !TOP_KEYS.contains(&k.as_str()) {
            return Err(cfg(format!("unknown top-level key '{k}' (allowed: {})", TOP_KEYS.join(", "))));
        }
    }
    match doc.get("runs") {
        None => Ok(vec![spec_from(&doc, hint)?]),
        Some(Value::Array(runs)) => {
            if runs.is_empty() {
                return Err(cfg("[[runs]] is empty"));
            }
            let mut base = doc.clone();
            base.remove("runs");
            runs.iter()
                .enumerate()
                .map(|(i, r)| {
                    let r = r.as_table().ok_or_else(|| cfg(format!("runs[{i}] is not a table")))?;
                    let merged = merge_run(&base, r).map_err(|e| cfg(format!("runs[{i}]: {e}")))?;
                    spec_from(&merged, hint).map_err(|e| match e {
                        ScenarioError::Config(m) => cfg(format!("runs[{i}]: {m}")),
                        other => other,
                    })
                })
                .collect()
        }
        Some(_) => Err(cfg("'runs' must be an array of tables ([[runs]])")),
    }
}

/// Sections of a run override the top-level ones key by key; a run's [scan]
/// replaces the top-level scan.
fn merge_run(base: &Table, run: &Table) -> Result<Table, String> {
    let mut out = base.clone();
    for (k, v) in run {
        match k.as_str() {
            "scenario" | "scan" => {
                out.insert(k.clone(), v.clone());
            }
            "system" | "engine" | "output" => {
                let add = v.as_table().ok_or(format!("[{k}] must be a table"))?;
                let mut t = out.get(k).and_then(Value::as_table).cloned().unwrap_or_default();
                for (kk, vv) in add {
                    t.insert(kk.clone(), vv.clone());
                }
                out.insert(k.clone(), Value::Table(t));
            }
            _ => return Err(format!("unknown key '{k}' in a run")),
        }
    }
    Ok(out)
}

fn section<'a>(doc: &'a Table, name: &str) -> Result<Option<&'a Table>, ScenarioError> {
    match doc.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(cfg(format!("[{name}] must be a table"))),
    }
}

/// Spectrum scenario implied by the drive settings.
pub fn infer_spectrum(p: &SystemParams) -> Scenario {
    if p.eta.norm() > 0.0 {
        Scenario::DrivenIncoherentSpectrum
    } else if p.w > 0.0 {
        Scenario::PumpedEmissionSpectrum
    } else {
        Scenario::ThermalSpectrum
    }
}

fn spec_from(doc: &Table, hint: ScenarioHint) -> Result<ScenarioSpec, ScenarioError> {
    let named = match doc.get("scenario") {
        None => None,
        Some(Value::String(s)) => Some(s.parse::<Scenario>().map_err(ScenarioError::Config)?),
        Some(_) => return Err(cfg("'scenario' must be a string")),
    };
    let system = section(doc, "system")?;
    let scenario = match (named, hint) {
        (Some(s), _) => s,
        (None, ScenarioHint::Given(s)) => s,
        (None, ScenarioHint::Spectrum) => {
            let mut p = preset(Scenario::ThermalSpectrum).system;
            if let Some(t) = system {
                apply_system(&mut p, t)?;
            }
            infer_spectrum(&p)
        }
        (None, ScenarioHint::None) => return Err(cfg("no scenario given: set 'scenario' in the config")),
    };
    check_hint(scenario, hint)?;
    let mut spec = preset(scenario);
    if let Some(t) = system {
        apply_system(&mut spec.system, t)?;
    }
    if let Some(t) = section(doc, "scan")? {
        // the inner axis of the preset stays unless the file gives its own
        let inner = spec.scenario.inner_axis().and_then(|i| spec.scan.iter().find(|a| a.var == i).cloned());
        spec.scan = parse_scan(t)?;
        if let Some(a) = inner {
            if !spec.scan.iter().any(|b| b.var == a.var) {
                spec.scan.push(a);
            }
        }
    }
    if let Some(t) = section(doc, "engine")? {
        spec.engine = overlay_engine(&spec.engine, t)?;
    }
    if let Some(t) = section(doc, "output")? {
        spec.output = overlay_output(&spec.output, t)?;
    }
    spec.check().map_err(ScenarioError::Config)?;
    Ok(spec)
}

fn number(key: &str, v: &Value) -> Result<f64, ScenarioError> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        _ => Err(cfg(format!("{key} must be a number"))),
    }
}

/// Canonical name and scale factor of a [system] key.
fn system_key(k: &str) -> (&str, f64) {
    let two_pi = 2.0 * std::f64::consts::PI;
    match k {
        "omega_a_over_2pi" => ("omega_a", two_pi),
        "omega_m_over_2pi" => ("omega_m", two_pi),
        "omega_l_over_2pi" => ("omega_l", two_pi),
        "gamma" => ("gamma_a", 1.0),
        "N" => ("n_atoms", 1.0),
        "T" => ("temperature", 1.0),
        _ => (k, 1.0),
    }
}

pub fn apply_system(p: &mut SystemParams, t: &Table) -> Result<(), ScenarioError> {
    let mut seen: Vec<&str> = Vec::new();
    let mut detunings = Vec::new();
    for (k, v) in t {
        let (name, scale) = system_key(k);
        if seen.contains(&name) {
            return Err(cfg(format!("[system] sets {name} twice")));
        }
        seen.push(name);
        match name {
            "eta" => {
                p.eta = match v {
                    Value::Array(a) if a.len() == 2 => C64::new(number("eta", &a[0])?, number("eta", &a[1])?),
                    _ => C64::new(number("eta", v)?, 0.0),
                }
            }
            "delta_m" | "delta_a" => detunings.push((name, number(k, v)?)),
            "n_atoms" => {
                let n = number(k, v)?;
                if n.fract() != 0.0 {
                    return Err(cfg(format!("n_atoms must be a whole number, got {n}")));
                }
                set_param(p, name, n).map_err(ScenarioError::Config)?;
            }
            _ if PARAM_VARS.contains(&name) => {
                set_param(p, name, scale * number(k, v)?).map_err(ScenarioError::Config)?;
            }
            _ => {
                return Err(cfg(format!(
                    "unknown [system] key '{k}' (allowed: {}, omega_*_over_2pi)",
                    PARAM_VARS.join(", ")
                )))
            }
        }
    }
    if detunings.len() > 1 || (!detunings.is_empty() && seen.contains(&"omega_l")) {
        return Err(cfg("give only one of omega_l, delta_m, delta_a"));
    }
    // detunings are relative to the frequencies, whatever order the keys came in
    for (name, d) in detunings {
        set_param(p, name, d).map_err(ScenarioError::Config)?;
    }
    Ok(())
}

const AXIS_KEYS: [&str; 5] = ["values", "min", "max", "points", "spacing"];

pub fn parse_scan(t: &Table) -> Result<Vec<Axis>, ScenarioError> {
    let mut axes = Vec::new();
    for (var, v) in t {
        let axis = match v {
            Value::Array(a) => Axis::list(var, &a.iter().map(|x| number(var, x)).collect::<Result<Vec<_>, _>>()?),
            Value::Table(at) => {
                for k in at.keys() {
                    if !AXIS_KEYS.contains(&k.as_str()) {
                        return Err(cfg(format!("scan.{var}: unknown key '{k}' (allowed: {})", AXIS_KEYS.join(", "))));
                    }
                }
                if let Some(vals) = at.get("values") {
                    let vals = vals.as_array().ok_or_else(|| cfg(format!("scan.{var}.values must be an array")))?;
                    Axis::list(var, &vals.iter().map(|x| number(var, x)).collect::<Result<Vec<_>, _>>()?)
                } else {
                    let get = |k: &str| {
                        at.get(k)
                            .ok_or_else(|| cfg(format!("scan.{var} needs '{k}' (or 'values')")))
                            .and_then(|x| number(&format!("scan.{var}.{k}"), x))
                    };
                    let points = match at.get("points") {
                        Some(Value::Integer(n)) if *n >= 1 => *n as usize,
                        _ => return Err(cfg(format!("scan.{var}.points must be an integer >= 1"))),
                    };
                    let spacing = match at.get("spacing").map(|s| s.as_str()) {
                        None | Some(Some("linear")) => Spacing::Linear,
                        Some(Some("log")) => Spacing::Log,
                        _ => return Err(cfg(format!("scan.{var}.spacing must be \"linear\" or \"log\""))),
                    };
                    Axis {
                        spacing,
                        ..Axis::linear(var, get("min")?, get("max")?, points)
                    }
                }
            }
            _ => return Err(cfg(format!("scan.{var} must be a table or an array of values"))),
        };
        axes.push(axis);
    }
    Ok(axes)
}

fn overlay<T>(base: &T, user: &Table, what: &str, integer_keys: &[&str]) -> Result<T, ScenarioError>
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    let mut t = Table::try_from(base).map_err(|e| cfg(format!("[{what}]: {e}")))?;
    for (k, v) in user {
        let v = match v {
            // tolerances written as 1 rather than 1.0 are still tolerances
            Value::Integer(i) if !integer_keys.contains(&k.as_str()) => Value::Float(*i as f64),
            _ => v.clone(),
        };
        t.insert(k.clone(), v);
    }
    Value::Table(t).try_into().map_err(|e: toml::de::Error| cfg(format!("[{what}]: {}", e.message())))
}

pub fn overlay_engine(base: &EngineConfig, user: &Table) -> Result<EngineConfig, ScenarioError> {
    let mut user = user.clone();
    for alias in ["engine", "type"] {
        if let Some(v) = user.remove(alias) {
            user.insert("kind".into(), v);
        }
    }
    overlay(base, &user, "engine", &["fock_cutoff", "dim_cap"])
}

pub fn overlay_output(base: &OutputConfig, user: &Table) -> Result<OutputConfig, ScenarioError> {
    overlay(base, user, "output", &[])
}

/// Settings from the command line and the environment, applied after the
/// file. Flags win over the environment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out_dir: Option<String>,
    pub engine: Option<EngineKind>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
}

impl Overrides {
    /// Leaves `spec` untouched when the result would be invalid.
    pub fn apply(&self, spec: &mut ScenarioSpec) -> Result<(), ScenarioError> {
        let mut s = spec.clone();
        if let Some(d) = &self.out_dir {
            s.output.dir = d.clone();
        }
        if let Some(k) = self.engine {
            s.engine.kind = k;
        }
        if let Some(t) = self.rel_tol {
            s.engine.rel_tol = t;
        }
        if let Some(t) = self.abs_tol {
            s.engine.abs_tol = t;
        }
        s.check().map_err(ScenarioError::Config)?;
        *spec = s;
        Ok(())
    }
}

pub fn env_out_dir() -> Option<String> {
    std::env::var(ENV_OUT_DIR).ok().filter(|s| !s.is_empty())
}

pub fn env_workers() -> Result<Option<usize>, ScenarioError> {
    match std::env::var(ENV_WORKERS) {
        Err(_) => Ok(None),
        Ok(s) if s.is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(cfg(format!("{ENV_WORKERS} must be an integer >= 1, got '{s}'"))),
        },
    }
}
