//! Batch configuration: every key has a registered per-case default, user
//! files override field-wise, unknown keys are rejected, and validation
//! errors name the offending key.

use crate::equations::PhysConstants;
use crate::timeint::Scheme;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown case id '{0}'")]
    UnknownCase(String),
    #[error("no case selected: pass `case = \"...\"` in the config or --case on the command line")]
    NoCase,
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TerrainConfig {
    pub shape: String,
    pub height: f64,
    pub half_width: f64,
    pub center: f64,
    pub lambda_c: f64,
}

impl TerrainConfig {
    pub fn flat() -> Self {
        Self { shape: "flat".into(), height: 0.0, half_width: 1.0, center: 0.0, lambda_c: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeshConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub nx: usize,
    pub nz: usize,
    pub order_x: usize,
    pub order_z: usize,
    pub periodic_x: bool,
    pub terrain: TerrainConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LayerConfig {
    /// any of "top", "left", "right"
    pub sides: Vec<String>,
    pub order: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DampingConfig {
    /// "sigmoid" (1D layers), "sine2" (vertical layer), or "none"
    pub profile: String,
    pub dgamma: f64,
    /// sigmoid shape parameter
    pub alpha: f64,
    /// zeta = max |layer end| / zeta_divisor
    pub zeta_divisor: f64,
    /// width of the lateral sine^2 zones inside the finite domain (m)
    pub lateral_width: f64,
    pub lateral_dgamma: f64,
    /// whether the density perturbation is damped too
    pub damp_density: bool,
    /// minimum Rayleigh coefficient inside the semi-infinite layer (s^-1);
    /// covers the corner of the sponge ramp that the profile leaves
    /// essentially undamped
    pub floor: f64,
}

impl DampingConfig {
    pub fn none() -> Self {
        Self {
            profile: "none".into(),
            dgamma: 0.0,
            alpha: 0.3,
            zeta_divisor: 18.0,
            lateral_width: 0.0,
            lateral_dgamma: 0.0,
            damp_density: true,
            floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FilterConfig {
    pub enabled: bool,
    pub mu: f64,
    pub cutoff: f64,
    /// damping strength of the semi-infinite (LGR) direction
    pub layer_mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TimeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// snapshot cadence in simulated seconds (0 = initial/final only)
    pub snapshot_interval: f64,
}

/// Case-specific physical parameters; the registry fills the paper values
/// and only the relevant fields are read by each case.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CaseParams {
    /// Gaussian half-width of the 1D wave pulse (m)
    pub sigma: f64,
    /// inflow amplitude (m/s), cycle count and period (s) of the wave train
    pub amplitude: f64,
    pub cycles: f64,
    pub period: f64,
    /// shallow-water reference height and velocity
    pub h_ref: f64,
    pub u_ref: f64,
    /// advecting velocity for the tracer case
    pub velocity_x: f64,
    pub velocity_z: f64,
    /// viscosity and thermal diffusivity
    pub nu: f64,
    pub kappa: f64,
    /// initial pulse / bubble center
    pub x_c: f64,
    pub z_c: f64,
    /// bubble amplitude (K) and radius (m)
    pub theta_c: f64,
    pub r0: f64,
    /// background potential temperature at sea level (K)
    pub theta0: f64,
    /// explicit Brunt-Vaisala frequency override (s^-1, 0 = derive)
    pub n_bv: f64,
    /// background horizontal wind (m/s)
    pub u_bg: f64,
}

impl Default for CaseParams {
    fn default() -> Self {
        Self {
            sigma: 0.15,
            amplitude: 0.025,
            cycles: 30.0,
            period: 5000.0,
            h_ref: 10.0,
            u_ref: 0.0,
            velocity_x: 0.5,
            velocity_z: 1.0,
            nu: 0.0,
            kappa: 0.0,
            x_c: 0.0,
            z_c: 0.0,
            theta_c: 2.0,
            r0: 2000.0,
            theta0: 300.0,
            n_bv: 0.0,
            u_bg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputConfig {
    pub dir: String,
    pub write_csv: bool,
    pub write_vtk: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimulationConfig {
    pub case: String,
    pub mesh: MeshConfig,
    pub layer: Option<LayerConfig>,
    pub damping: DampingConfig,
    pub filter: FilterConfig,
    pub time: TimeConfig,
    pub constants: PhysConstants,
    pub params: CaseParams,
    pub output: OutputConfig,
}

/// User-facing partial config: everything optional, merged over the
/// registered case defaults. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub case: Option<String>,
    pub mesh: Option<PartialMesh>,
    pub layer: Option<PartialLayer>,
    pub damping: Option<PartialDamping>,
    pub filter: Option<PartialFilter>,
    pub time: Option<PartialTime>,
    pub constants: Option<PartialConstants>,
    pub params: Option<PartialParams>,
    pub output: Option<PartialOutput>,
}

macro_rules! partial {
    ($partial:ident, $full:ty, { $($field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Debug, Clone, Default, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $partial {
            $(pub $field: Option<$ty>,)*
        }
        impl $partial {
            pub fn merge_into(&self, full: &mut $full) {
                $(if let Some(v) = &self.$field { full.$field = v.clone(); })*
            }
        }
    };
}

partial!(PartialTerrain, TerrainConfig, {
    shape: String, height: f64, half_width: f64, center: f64, lambda_c: f64,
});
partial!(PartialLayer, LayerConfig, { sides: Vec<String>, order: usize, lambda: f64 });
partial!(PartialDamping, DampingConfig, {
    profile: String, dgamma: f64, alpha: f64, zeta_divisor: f64,
    lateral_width: f64, lateral_dgamma: f64, damp_density: bool, floor: f64,
});
partial!(PartialFilter, FilterConfig, { enabled: bool, mu: f64, cutoff: f64, layer_mu: f64 });
partial!(PartialTime, TimeConfig, { scheme: Scheme, dt: f64, t_end: f64, snapshot_interval: f64 });
partial!(PartialConstants, PhysConstants, { g: f64, c_p: f64, c_v: f64, p0: f64 });
partial!(PartialParams, CaseParams, {
    sigma: f64, amplitude: f64, cycles: f64, period: f64, h_ref: f64, u_ref: f64,
    velocity_x: f64, velocity_z: f64, nu: f64, kappa: f64, x_c: f64, z_c: f64,
    theta_c: f64, r0: f64, theta0: f64, n_bv: f64, u_bg: f64,
});
partial!(PartialOutput, OutputConfig, { dir: String, write_csv: bool, write_vtk: bool });

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialMesh {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub z_min: Option<f64>,
    pub z_max: Option<f64>,
    pub nx: Option<usize>,
    pub nz: Option<usize>,
    pub order_x: Option<usize>,
    pub order_z: Option<usize>,
    pub periodic_x: Option<bool>,
    pub terrain: Option<PartialTerrain>,
}

impl PartialMesh {
    pub fn merge_into(&self, full: &mut MeshConfig) {
        if let Some(v) = self.x_min { full.x_min = v; }
        if let Some(v) = self.x_max { full.x_max = v; }
        if let Some(v) = self.z_min { full.z_min = v; }
        if let Some(v) = self.z_max { full.z_max = v; }
        if let Some(v) = self.nx { full.nx = v; }
        if let Some(v) = self.nz { full.nz = v; }
        if let Some(v) = self.order_x { full.order_x = v; }
        if let Some(v) = self.order_z { full.order_z = v; }
        if let Some(v) = self.periodic_x { full.periodic_x = v; }
        if let Some(t) = &self.terrain { t.merge_into(&mut full.terrain); }
    }
}

impl PartialConfig {
    pub fn merge_into(&self, full: &mut SimulationConfig) {
        if let Some(m) = &self.mesh { m.merge_into(&mut full.mesh); }
        if let Some(l) = &self.layer {
            let mut base = full.layer.clone().unwrap_or(LayerConfig {
                sides: Vec::new(),
                order: 1,
                lambda: 1.0,
            });
            l.merge_into(&mut base);
            full.layer = Some(base);
        }
        if let Some(d) = &self.damping { d.merge_into(&mut full.damping); }
        if let Some(f) = &self.filter { f.merge_into(&mut full.filter); }
        if let Some(t) = &self.time { t.merge_into(&mut full.time); }
        if let Some(c) = &self.constants { c.merge_into(&mut full.constants); }
        if let Some(p) = &self.params { p.merge_into(&mut full.params); }
        if let Some(o) = &self.output { o.merge_into(&mut full.output); }
    }
}

/// Load a config file, resolve it over the registered case defaults, and
/// validate. `case_override` (from the CLI) wins over the file's `case`.
pub fn load_config(
    path: Option<&std::path::Path>,
    case_override: Option<&str>,
    smoke: bool,
) -> Result<SimulationConfig, ConfigError> {
    let partial: PartialConfig = match path {
        Some(p) => toml::from_str(&std::fs::read_to_string(p)?)?,
        None => PartialConfig::default(),
    };
    let case = case_override
        .map(str::to_string)
        .or_else(|| partial.case.clone())
        .ok_or(ConfigError::NoCase)?;
    let mut cfg = crate::cases::case_defaults(&case, smoke)
        .ok_or_else(|| ConfigError::UnknownCase(case.clone()))?;
    partial.merge_into(&mut cfg);
    validate(&cfg)?;
    Ok(cfg)
}

pub fn validate(cfg: &SimulationConfig) -> Result<(), ConfigError> {
    let bad = |key: &'static str, reason: String| Err(ConfigError::Invalid { key, reason });
    if !(cfg.time.dt > 0.0) {
        return bad("time.dt", format!("must be positive, got {}", cfg.time.dt));
    }
    if cfg.time.t_end < 0.0 {
        return bad("time.t_end", "must be non-negative".into());
    }
    if cfg.mesh.nx == 0 || cfg.mesh.nz == 0 {
        return bad("mesh.nx/nz", "element counts must be at least 1".into());
    }
    if cfg.mesh.order_x == 0 || cfg.mesh.order_z == 0 {
        return bad("mesh.order_x/order_z", "orders must be at least 1".into());
    }
    if cfg.mesh.x_max <= cfg.mesh.x_min {
        return bad("mesh.x_max", "must exceed mesh.x_min".into());
    }
    if cfg.mesh.z_max <= cfg.mesh.z_min {
        return bad("mesh.z_max", "must exceed mesh.z_min".into());
    }
    match cfg.mesh.terrain.shape.as_str() {
        "flat" | "agnesi" | "schar" => {}
        other => return bad("mesh.terrain.shape", format!("unknown shape '{other}'")),
    }
    if cfg.mesh.terrain.height < 0.0 {
        return bad("mesh.terrain.height", "must be non-negative".into());
    }
    if cfg.mesh.terrain.half_width <= 0.0 {
        return bad("mesh.terrain.half_width", "must be positive".into());
    }
    if let Some(layer) = &cfg.layer {
        if layer.order == 0 {
            return bad("layer.order", "must be at least 1".into());
        }
        if !(layer.lambda > 0.0) {
            return bad("layer.lambda", "scaling factor must be positive".into());
        }
        for s in &layer.sides {
            if !matches!(s.as_str(), "top" | "left" | "right") {
                return bad("layer.sides", format!("unknown side '{s}'"));
            }
        }
    }
    match cfg.damping.profile.as_str() {
        "none" | "sigmoid" | "sine2" => {}
        other => return bad("damping.profile", format!("unknown profile '{other}'")),
    }
    if cfg.damping.dgamma < 0.0 {
        return bad("damping.dgamma", "must be non-negative".into());
    }
    if cfg.damping.floor < 0.0 {
        return bad("damping.floor", "must be non-negative".into());
    }
    if !(cfg.filter.mu >= 0.0 && cfg.filter.mu <= 1.0) {
        return bad("filter.mu", "strength must lie in [0, 1]".into());
    }
    if !(cfg.filter.layer_mu >= 0.0 && cfg.filter.layer_mu <= 1.0) {
        return bad("filter.layer_mu", "strength must lie in [0, 1]".into());
    }
    if !(cfg.filter.cutoff > 0.0 && cfg.filter.cutoff < 1.0) {
        return bad("filter.cutoff", "cutoff fraction must lie in (0, 1)".into());
    }
    if cfg.time.snapshot_interval < 0.0 {
        return bad("time.snapshot_interval", "must be non-negative".into());
    }
    Ok(())
}
