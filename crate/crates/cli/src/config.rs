//! Experiment configuration, read from TOML.
//!
//! ```toml
//! experiment_id = "disc-area"
//! j = 2
//! n_grid = [32, 64, 128]
//! reps = 2000
//! y_samples = 2000
//! routes = ["direct", "projection"]
//! master_seed = 42
//!
//! [body]
//! kind = "ball"
//! dim = 2
//! radius = 1.0
//!
//! [density]
//! kind = "uniform"
//!
//! [tolerances]
//! route_sigma = 3.0
//! ```

use std::path::Path;

use randhull_core::bodies::BodyKind;
use randhull_core::estimators::{direct_route, Route};
use randhull_core::{Body, Density, DensitySpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub kind: String,
    pub dim: Option<usize>,
    pub radius: Option<f64>,
    pub semiaxes: Option<Vec<f64>>,
    pub cap_radius: Option<f64>,
    pub core_length: Option<f64>,
    /// 0-based coordinate index of the capsule axis.
    pub axis: Option<usize>,
    pub side: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest tolerated |z| between two routes on the same cell.
    #[serde(default = "default_route_sigma")]
    pub route_sigma: f64,
}

fn default_route_sigma() -> f64 {
    3.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            route_sigma: default_route_sigma(),
        }
    }
}

fn default_y_samples() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub body: BodyConfig,
    #[serde(default = "default_density")]
    pub density: DensitySpec,
    pub j: usize,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    #[serde(default = "default_y_samples")]
    pub y_samples: usize,
    pub routes: Vec<Route>,
    pub master_seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_density() -> DensitySpec {
    DensitySpec::Uniform
}

/// A config whose body and density have been constructed and checked.
#[derive(Clone, Debug)]
pub struct ValidatedConfig {
    pub config: ExperimentConfig,
    pub body: Body,
    pub density: Density,
}

fn required<T: Clone>(value: &Option<T>, path: &str) -> CliResult<T> {
    value
        .clone()
        .ok_or_else(|| CliError::validation(path, "missing required field"))
}

impl BodyConfig {
    pub fn build(&self) -> CliResult<Body> {
        let allowed: &[&str] = match self.kind.as_str() {
            "ball" => &["dim", "radius"],
            "ellipsoid" => &["semiaxes"],
            "capsule" => &["dim", "cap_radius", "core_length", "axis"],
            "cube" => &["dim", "side"],
            other => {
                return Err(CliError::validation(
                    "body.kind",
                    format!("unknown body kind '{other}' (expected ball, ellipsoid, capsule or cube)"),
                ))
            }
        };
        let present = [
            ("dim", self.dim.is_some()),
            ("radius", self.radius.is_some()),
            ("semiaxes", self.semiaxes.is_some()),
            ("cap_radius", self.cap_radius.is_some()),
            ("core_length", self.core_length.is_some()),
            ("axis", self.axis.is_some()),
            ("side", self.side.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) && !(name == "dim" && self.kind == "ellipsoid") {
                return Err(CliError::validation(
                    format!("body.{name}"),
                    format!("not a parameter of a {}", self.kind),
                ));
            }
        }
        let kind = match self.kind.as_str() {
            "ball" => BodyKind::Ball {
                radius: required(&self.radius, "body.radius")?,
            },
            "ellipsoid" => BodyKind::Ellipsoid {
                semiaxes: required(&self.semiaxes, "body.semiaxes")?,
            },
            "capsule" => BodyKind::Capsule {
                cap_radius: required(&self.cap_radius, "body.cap_radius")?,
                core_length: required(&self.core_length, "body.core_length")?,
                axis: self.axis.unwrap_or(0),
            },
            _ => BodyKind::Cube {
                side: required(&self.side, "body.side")?,
            },
        };
        let dim = match &kind {
            BodyKind::Ellipsoid { semiaxes } => {
                if let Some(d) = self.dim {
                    if d != semiaxes.len() {
                        return Err(CliError::validation(
                            "body.dim",
                            format!("dim {d} disagrees with {} semiaxes", semiaxes.len()),
                        ));
                    }
                }
                semiaxes.len()
            }
            _ => required(&self.dim, "body.dim")?,
        };
        Body::new(kind, dim).map_err(|e| CliError::validation("body", e.to_string()))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> CliResult<ExperimentConfig> {
        toml::from_str(text).map_err(|e| CliError::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> CliResult<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        ExperimentConfig::from_toml_str(&text, path)
    }

    /// Checks everything that can be checked before running.
    pub fn validate(self) -> CliResult<ValidatedConfig> {
        if self.experiment_id.trim().is_empty() {
            return Err(CliError::validation("experiment_id", "must not be empty"));
        }
        let body = self.body.build()?;
        let d = body.dim();
        if self.j == 0 || self.j > d {
            return Err(CliError::validation("j", format!("must lie in 1..={d}")));
        }
        if self.n_grid.is_empty() {
            return Err(CliError::validation("n_grid", "must not be empty"));
        }
        if self.n_grid.contains(&0) {
            return Err(CliError::validation("n_grid", "every n must be positive"));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::validation("n_grid", "must be strictly increasing"));
        }
        if self.reps < 2 {
            return Err(CliError::validation("reps", "need at least 2 replicates"));
        }
        if self.y_samples == 0 {
            return Err(CliError::validation("y_samples", "must be positive"));
        }
        if self.routes.is_empty() {
            return Err(CliError::validation("routes", "must list at least one route"));
        }
        for (i, route) in self.routes.iter().enumerate() {
            if *route != Route::Projection && direct_route(self.j, d) != Some(*route) {
                return Err(CliError::validation(
                    format!("routes[{i}]"),
                    format!("route {route} does not apply to j={}, d={d}", self.j),
                ));
            }
        }
        if !(self.tolerances.route_sigma > 0.0) {
            return Err(CliError::validation("tolerances.route_sigma", "must be positive"));
        }
        let density = Density::new(&body, self.density.clone())
            .map_err(|e| CliError::validation("density", e.to_string()))?;
        Ok(ValidatedConfig {
            config: self,
            body,
            density,
        })
    }
}
