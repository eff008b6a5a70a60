//! Configuration errors and file/preset resolution for aircraft, controller
//! and wind-field inputs.

use std::path::Path;

use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::aero::AeroModel;
use crate::controller::ControllerConfig;
use crate::windfield::{self, RampFieldParams, WindField, WindVector};
use crate::Real;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("failed to read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse `{path}`: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("failed to parse wind grid `{path}`: {source}")]
    Grid {
        path: String,
        #[source]
        source: windfield::GridParseError,
    },
}

impl ConfigError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        ConfigError::Invalid(msg.into())
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Aircraft preset by name: `eclipson_c` or `seal_g1500`.
pub fn aircraft_preset<T: Real>(name: &str) -> Result<AeroModel<T>, ConfigError> {
    match name {
        "eclipson_c" => Ok(AeroModel::eclipson_c()),
        "seal_g1500" => Ok(AeroModel::seal_g1500()),
        other => Err(ConfigError::UnknownPreset(other.to_string())),
    }
}

/// Resolves `spec` as a preset name first, then as a JSON file path.
pub fn load_aircraft<T: Real + DeserializeOwned>(spec: &str) -> Result<AeroModel<T>, ConfigError> {
    let model = match aircraft_preset(spec) {
        Ok(m) => m,
        Err(_) if Path::new(spec).exists() => read_json(Path::new(spec))?,
        Err(_) => return Err(ConfigError::invalid(format!(
            "`{spec}` is neither an aircraft preset (eclipson_c, seal_g1500) nor an existing file"
        ))),
    };
    model.validate()?;
    Ok(model)
}

/// Resolves `spec` as a controller preset name first, then as a JSON file path.
pub fn load_controller<T: Real + DeserializeOwned>(
    spec: &str,
) -> Result<ControllerConfig<T>, ConfigError> {
    let cfg = match ControllerConfig::preset(spec) {
        Ok(c) => c,
        Err(_) if Path::new(spec).exists() => read_json(Path::new(spec))?,
        Err(_) => {
            return Err(ConfigError::invalid(format!(
                "`{spec}` is neither a controller preset ({}) nor an existing file",
                ControllerConfig::<T>::PRESET_NAMES.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves a wind field: `ramp` (analytic ramp at `nominal_speed`),
/// `uniform` (horizontal stream at `nominal_speed`), or a grid CSV path.
pub fn load_wind<T: Real>(spec: &str, nominal_speed: T) -> Result<WindField<T>, ConfigError> {
    match spec {
        "ramp" => {
            let params = RampFieldParams::standard(nominal_speed);
            windfield::build_ramp_field(params)
        }
        "uniform" => Ok(WindField::Uniform(WindVector::new(
            nominal_speed,
            T::zero(),
            T::zero(),
        ))),
        path if Path::new(path).exists() => {
            windfield::load_grid_field(Path::new(path)).map_err(|source| ConfigError::Grid {
                path: path.to_string(),
                source,
            })
        }
        other => Err(ConfigError::invalid(format!(
            "`{other}` is neither a wind preset (ramp, uniform) nor an existing grid file"
        ))),
    }
}
