//! JSON experiment configuration.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use uplink_outage::experiments::ExperimentPlan;
use uplink_outage::receiver::CombiningScheme;

use crate::CliError;

/// Every key the configuration file may contain.
pub const CONFIG_KEYS: [&str; 16] = [
    "bandwidth_hz",
    "n_antennas",
    "pathloss_exponent",
    "tx_power_mw",
    "noise_power_dbm",
    "tau_c",
    "tau_p",
    "r_desired_m",
    "k_u",
    "scheme",
    "n_drops",
    "m_small_scale",
    "calibration_fraction",
    "epsilons",
    "margins",
    "seed",
];

pub fn parse_config(path: &Path) -> Result<ExperimentPlan, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text)
}

/// Missing keys keep the defaults of [`ExperimentPlan::default`]; unknown
/// keys are logged and skipped.
pub fn parse_config_str(text: &str) -> Result<ExperimentPlan, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(CliError::Config("configuration must be a JSON object".into()));
    };
    for key in map.keys().filter(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        log::warn!("ignoring unknown configuration key `{key}`");
    }

    let mut plan = ExperimentPlan::default();
    let cfg = &mut plan.cfg;
    set(&map, "bandwidth_hz", &mut cfg.bandwidth_hz)?;
    set(&map, "n_antennas", &mut cfg.n_antennas)?;
    set(&map, "pathloss_exponent", &mut cfg.pathloss_exponent)?;
    set(&map, "tx_power_mw", &mut cfg.tx_power_mw)?;
    set(&map, "noise_power_dbm", &mut cfg.noise_power_dbm)?;
    set(&map, "tau_c", &mut cfg.tau_c)?;
    set(&map, "tau_p", &mut cfg.tau_p)?;
    set(&map, "seed", &mut cfg.seed)?;
    set(&map, "r_desired_m", &mut plan.r_desired_m)?;
    set(&map, "k_u", &mut plan.k_u)?;
    if let Some(v) = map.get("scheme") {
        let name: String = parse_key("scheme", v)?;
        plan.scheme = name
            .parse::<CombiningScheme>()
            .map_err(|e| CliError::Config(format!("scheme: {e}")))?;
    }
    set(&map, "n_drops", &mut plan.n_drops)?;
    set(&map, "m_small_scale", &mut plan.m_small_scale)?;
    set(&map, "calibration_fraction", &mut plan.calibration_fraction)?;
    set(&map, "epsilons", &mut plan.epsilons)?;
    set(&map, "margins", &mut plan.margins)?;

    plan.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(plan)
}

fn parse_key<T: DeserializeOwned>(key: &str, value: &Value) -> Result<T, CliError> {
    T::deserialize(value).map_err(|e| CliError::Config(format!("{key}: {e}")))
}

fn set<T: DeserializeOwned>(map: &Map<String, Value>, key: &str, slot: &mut T) -> Result<(), CliError> {
    if let Some(v) = map.get(key) {
        *slot = parse_key(key, v)?;
    }
    Ok(())
}
