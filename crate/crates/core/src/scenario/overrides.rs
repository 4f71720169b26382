//! `key=value` overrides applied through the serialized form, so an
//! override goes through the same validation as a config file.

use super::config::ScenarioConfig;
use crate::error::{Error, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "name",
    "model",
    "initial",
    "grid.n",
    "grid.length",
    "params.nu",
    "params.alpha",
    "params.gamma",
    "params.dealias",
    "params.beta_t",
    "params.beta_u",
    "params.gamma_act",
    "params.uncertainty_amplitude",
    "params.uncertainty_omega",
    "integrator.dt",
    "integrator.t_end",
    "control.family",
    "control.n_actuators",
    "control.mu",
    "control.t_on",
    "control.mean_zero",
    "control.fold_into_symbol",
    "control.node_rule",
    "control.node_offsets",
    "control.c",
    "twin.initial",
    "twin.spinup",
    "outputs.snapshot_stride",
    "outputs.snapshots",
    "outputs.record_uxx",
    "outputs.decay_window",
    "outputs.onset_threshold",
    "outputs.seed",
    "outputs.c_samples",
    "outputs.r2_burn_in",
];

const STRING_KEYS: &[&str] = &[
    "name",
    "model",
    "initial",
    "control.family",
    "control.node_rule",
    "twin.initial",
];

const ALIASES: &[(&str, &str)] = &[
    ("NC", "control.n_actuators"),
    ("nc", "control.n_actuators"),
    ("t_c", "control.t_on"),
    ("family", "control.family"),
];

/// Resolve a dotted key, a bare leaf name (unique across sections), or
/// one of the short aliases.
pub fn resolve_key(key: &str) -> Result<&'static str> {
    let key = key.trim();
    if let Some((_, k)) = ALIASES.iter().find(|(a, _)| *a == key) {
        return Ok(k);
    }
    if let Some(k) = KNOWN_KEYS.iter().find(|k| **k == key) {
        return Ok(k);
    }
    if key.contains('.') {
        return Err(Error::Config(format!("unknown config key '{key}'")));
    }
    let hits: Vec<&'static str> = KNOWN_KEYS
        .iter()
        .copied()
        .filter(|k| k.rsplit('.').next() == Some(key))
        .collect();
    match hits.as_slice() {
        [one] => Ok(one),
        [] => Err(Error::Config(format!("unknown config key '{key}'"))),
        many => Err(Error::Config(format!(
            "ambiguous key '{key}': use one of {}",
            many.join(", ")
        ))),
    }
}

fn parse_value(key: &str, raw: &str) -> toml::Value {
    let raw = raw.trim();
    if STRING_KEYS.contains(&key) {
        return toml::Value::String(raw.to_string());
    }
    if let Ok(t) = format!("v = {raw}").parse::<toml::Table>() {
        if let Some(v) = t.get("v") {
            return v.clone();
        }
    }
    if let Ok(v) = meval::eval_str(raw) {
        return toml::Value::Float(v);
    }
    toml::Value::String(raw.to_string())
}

/// Apply one override.
pub fn apply_override(cfg: &ScenarioConfig, key: &str, value: &str) -> Result<ScenarioConfig> {
    let path = resolve_key(key)?;
    let mut root = toml::Table::try_from(cfg).map_err(|e| Error::Config(e.to_string()))?;
    let v = parse_value(path, value);
    let mut parts = path.split('.').peekable();
    let mut table = &mut root;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            table.insert(part.to_string(), v.clone());
            break;
        }
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{part}' is not a section")))?;
    }
    toml::Value::Table(root)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(format!("override {path}={value}: {e}")))
}

/// Apply a list of `key=value` strings in order.
pub fn apply_overrides<S: AsRef<str>>(cfg: &ScenarioConfig, overrides: &[S]) -> Result<ScenarioConfig> {
    let mut out = cfg.clone();
    for o in overrides {
        let o = o.as_ref();
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{o}' is not of the form key=value")))?;
        out = apply_override(&out, k, v)?;
    }
    Ok(out)
}
