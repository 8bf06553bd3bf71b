//! Human-editable scenario configuration files: TOML key-value pairs with
//! dBm and nanosecond units at the boundary, converted to SI internally.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::float::Float;
use crate::scenario::SystemConfig;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// On-disk configuration. Every key is optional; missing keys take the
/// reference-setup defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub carrier_frequency_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub num_antennas: Option<usize>,
    pub num_subbands: Option<usize>,
    pub num_ttds: Option<usize>,
    pub transmit_power_dbm: Option<f64>,
    pub noise_psd_dbm_hz: Option<f64>,
    pub max_delay_ns: Option<f64>,
    pub ttd_grid_points: Option<usize>,
    pub num_nf_users: Option<usize>,
    pub num_ff_users: Option<usize>,
    pub ao_max_iters: Option<usize>,
    pub ao_tolerance: Option<f64>,
    pub penalty_init: Option<f64>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn into_system_config<T: Float>(self) -> Result<(SystemConfig<T>, u64)> {
        let defaults = SystemConfig::<T>::default();
        let cfg = SystemConfig {
            carrier_frequency_hz: self
                .carrier_frequency_hz
                .map_or(defaults.carrier_frequency_hz, T::of),
            bandwidth_hz: self.bandwidth_hz.map_or(defaults.bandwidth_hz, T::of),
            num_antennas: self.num_antennas.unwrap_or(defaults.num_antennas),
            num_subbands: self.num_subbands.unwrap_or(defaults.num_subbands),
            num_ttds: self.num_ttds.unwrap_or(defaults.num_ttds),
            transmit_power_w: self
                .transmit_power_dbm
                .map_or(defaults.transmit_power_w, |dbm| T::of(dbm_to_watts(dbm))),
            noise_psd_w_per_hz: self
                .noise_psd_dbm_hz
                .map_or(defaults.noise_psd_w_per_hz, |dbm| T::of(dbm_to_watts(dbm))),
            max_delay_s: self
                .max_delay_ns
                .map_or(defaults.max_delay_s, |ns| T::of(ns * 1e-9)),
            ttd_grid_points: self.ttd_grid_points.unwrap_or(defaults.ttd_grid_points),
            num_nf_users: self.num_nf_users.unwrap_or(defaults.num_nf_users),
            num_ff_users: self.num_ff_users.unwrap_or(defaults.num_ff_users),
            ao_max_iters: self.ao_max_iters.unwrap_or(defaults.ao_max_iters),
            ao_tolerance: self.ao_tolerance.map_or(defaults.ao_tolerance, T::of),
            penalty_init: self.penalty_init.map_or(defaults.penalty_init, T::of),
            speed_of_light_m_s: defaults.speed_of_light_m_s,
        };
        cfg.validate()?;
        Ok((cfg, self.seed.unwrap_or(0)))
    }
}

/// Parses a configuration file body; returns the system config and the seed.
pub fn parse_config<T: Float>(text: &str) -> Result<(SystemConfig<T>, u64)> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
    file.into_system_config()
}

pub fn load_config<T: Float>(path: &Path) -> Result<(SystemConfig<T>, u64)> {
    parse_config(&std::fs::read_to_string(path)?)
}
