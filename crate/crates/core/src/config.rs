//! JSON scenario configuration.
//!
//! Only `layout` and `receiver` are required; every other section falls
//! back to documented defaults. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::beampattern::ElementPattern;
use crate::channel::FadingParams;
use crate::dqn::AgentConfig;
use crate::geometry::{SwarmLayout, Vec3};
use crate::hover::HoverSpec;
use crate::interference::Region;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed config: {0}")]
    Parse(String),

    #[error("invalid config value `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Prefixes the key of a core validation error with its section name.
fn scoped(section: &str, err: crate::Error) -> ConfigError {
    match err {
        crate::Error::InvalidParameter { name, reason } => {
            bad(&format!("{section}.{name}"), reason)
        }
        other => bad(section, other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub l_u: usize,
    pub c_u: usize,
    pub r_u: usize,
    pub spacing_delta: f64,
    #[serde(default = "default_origin")]
    pub origin: [f64; 3],
}

fn default_origin() -> [f64; 3] {
    [0.0, 0.0, 30.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoverConfig {
    pub dx_max: f64,
    pub dy_max: f64,
    pub dz_max: f64,
    pub angle_max_deg: f64,
    pub tolerance_fraction: Option<f64>,
}

impl Default for HoverConfig {
    fn default() -> Self {
        Self {
            dx_max: 0.0,
            dy_max: 0.0,
            dz_max: 0.0,
            angle_max_deg: 10.0,
            tolerance_fraction: Some(crate::hover::DEFAULT_TOLERANCE_FRACTION),
        }
    }
}

impl HoverConfig {
    pub fn spec(&self) -> HoverSpec {
        HoverSpec {
            dx_max: self.dx_max,
            dy_max: self.dy_max,
            dz_max: self.dz_max,
            angle_max: self.angle_max_deg.to_radians(),
            tolerance_fraction: self.tolerance_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub rician_k: f64,
    pub pathloss_exponent: f64,
    pub reference_gain: f64,
    pub carrier_freq_hz: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let p = FadingParams::default();
        Self {
            rician_k: p.rician_k,
            pathloss_exponent: p.pathloss_exponent,
            reference_gain: p.reference_gain,
            carrier_freq_hz: p.carrier_freq,
        }
    }
}

impl ChannelConfig {
    pub fn params(&self) -> FadingParams {
        FadingParams {
            rician_k: self.rician_k,
            pathloss_exponent: self.pathloss_exponent,
            reference_gain: self.reference_gain,
            carrier_freq: self.carrier_freq_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferenceConfig {
    pub num_sources: usize,
    pub region: RegionConfig,
    pub power_range_w: [f64; 2],
    pub noise_power_w: f64,
}

impl Default for InterferenceConfig {
    fn default() -> Self {
        Self {
            num_sources: 20,
            region: RegionConfig {
                min: [-250.0, -250.0, 0.0],
                max: [350.0, 350.0, 300.0],
            },
            power_range_w: [0.1, 1.0],
            noise_power_w: 1e-13,
        }
    }
}

impl InterferenceConfig {
    pub fn region(&self) -> Region {
        Region {
            min: self.region.min.into(),
            max: self.region.max.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElementConfig {
    pub exponent_q: f64,
    pub boresight: [f64; 3],
}

impl Default for ElementConfig {
    fn default() -> Self {
        let e = ElementPattern::default();
        Self {
            exponent_q: e.exponent_q,
            boresight: e.boresight_body.to_array(),
        }
    }
}

impl ElementConfig {
    pub fn pattern(&self) -> ElementPattern {
        ElementPattern {
            exponent_q: self.exponent_q,
            boresight_body: self.boresight.into(),
        }
    }
}

/// Beam weights used for the selected subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightsMode {
    /// Conjugate-channel weights from the sampled channel.
    #[default]
    Mrt,
    /// Unit-norm uniform amplitudes with geometric steering phases.
    Steering,
}

/// Parameters of the figure-style sweeps run by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Displacement tolerances for the pattern sweep, in centimetres.
    pub displacement_cm: Vec<f64>,
    /// Array sizes for the displacement sweep (linear arrays along X).
    pub displacement_k: Vec<usize>,
    /// Monte Carlo draws per (K, tolerance) cell of the distortion summary.
    pub displacement_draws: usize,
    /// Points along the elevation cut of pattern sweeps.
    pub cut_points: usize,
    /// Element spacings for the angle-of-arrival sweep, in wavelengths.
    pub aoa_spacings_lambda: Vec<f64>,
    pub aoa_k: usize,
    pub hover_map_step_deg: f64,
    pub hover_map_max_deg: f64,
    pub heatmap_grid: [usize; 2],
    pub heatmap_plane_z: f64,
    pub pearson_reference: usize,
    pub pearson_time_samples: usize,
    pub reform_draws: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            displacement_cm: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            displacement_k: vec![2, 4],
            displacement_draws: 200,
            cut_points: 721,
            aoa_spacings_lambda: vec![0.5, 1.0, 2.0],
            aoa_k: 4,
            hover_map_step_deg: 5.0,
            hover_map_max_deg: 90.0,
            heatmap_grid: [60, 60],
            heatmap_plane_z: 30.0,
            pearson_reference: 1,
            pearson_time_samples: 200,
            reform_draws: 100,
        }
    }
}

fn default_k() -> usize {
    4
}

fn default_tx_power() -> f64 {
    1.0
}

fn default_grid_size() -> usize {
    64
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub layout: LayoutConfig,
    pub receiver: [f64; 3],
    #[serde(default)]
    pub hover: HoverConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub interference: InterferenceConfig,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_tx_power")]
    pub tx_power_w: f64,
    #[serde(default)]
    pub element: ElementConfig,
    #[serde(default)]
    pub weights_mode: WeightsMode,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub sweeps: SweepConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn swarm_layout(&self) -> SwarmLayout {
        SwarmLayout {
            l_u: self.layout.l_u,
            c_u: self.layout.c_u,
            r_u: self.layout.r_u,
            spacing_delta: self.layout.spacing_delta,
            origin: self.layout.origin.into(),
        }
    }

    pub fn receiver(&self) -> Vec3 {
        self.receiver.into()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.swarm_layout()
            .validate()
            .map_err(|e| scoped("layout", e))?;
        let receiver = self.receiver();
        if !receiver.is_finite() {
            return Err(bad("receiver", "coordinates must be finite"));
        }
        let hover = self.hover.spec();
        hover.validate().map_err(|e| scoped("hover", e))?;
        if !(self.hover.angle_max_deg >= 0.0 && self.hover.angle_max_deg <= 180.0) {
            return Err(bad("hover.angle_max_deg", "must lie in [0, 180]"));
        }
        self.channel
            .params()
            .validate()
            .map_err(|e| scoped("channel", e))?;

        let inter = &self.interference;
        inter
            .region()
            .validate()
            .map_err(|e| scoped("interference", e))?;
        let [pmin, pmax] = inter.power_range_w;
        if !(pmin >= 0.0 && pmax >= pmin && pmax.is_finite()) {
            return Err(bad(
                "interference.power_range_w",
                "need 0 <= min <= max, finite",
            ));
        }
        if !(inter.noise_power_w > 0.0 && inter.noise_power_w.is_finite()) {
            return Err(bad(
                "interference.noise_power_w",
                "must be a finite value > 0",
            ));
        }

        let n = self.layout.l_u * self.layout.c_u * self.layout.r_u;
        if self.k == 0 || self.k > n {
            return Err(bad("k", format!("must lie in [1, {n}] for this layout")));
        }
        if !(self.tx_power_w > 0.0 && self.tx_power_w.is_finite()) {
            return Err(bad("tx_power_w", "must be a finite value > 0"));
        }
        self.element
            .pattern()
            .validate()
            .map_err(|e| scoped("element", e))?;
        if self.grid_size < 2 {
            return Err(bad("grid_size", "must be >= 2"));
        }
        self.agent.validate().map_err(|e| scoped("agent", e))?;
        self.validate_sweeps(n)
    }

    fn validate_sweeps(&self, n: usize) -> Result<(), ConfigError> {
        let s = &self.sweeps;
        if s.displacement_cm
            .iter()
            .any(|d| !(*d >= 0.0 && d.is_finite()))
        {
            return Err(bad(
                "sweeps.displacement_cm",
                "tolerances must be finite and >= 0",
            ));
        }
        if s.displacement_k.contains(&0) {
            return Err(bad("sweeps.displacement_k", "array sizes must be >= 1"));
        }
        if s.displacement_draws == 0 {
            return Err(bad("sweeps.displacement_draws", "must be >= 1"));
        }
        if s.cut_points < 2 {
            return Err(bad("sweeps.cut_points", "must be >= 2"));
        }
        if s.aoa_spacings_lambda
            .iter()
            .any(|d| !(*d > 0.0 && d.is_finite()))
        {
            return Err(bad(
                "sweeps.aoa_spacings_lambda",
                "spacings must be finite and > 0",
            ));
        }
        if s.aoa_k == 0 {
            return Err(bad("sweeps.aoa_k", "must be >= 1"));
        }
        if !(s.hover_map_step_deg > 0.0
            && s.hover_map_max_deg >= 0.0
            && s.hover_map_max_deg <= 180.0)
        {
            return Err(bad(
                "sweeps.hover_map_step_deg",
                "need step > 0 and 0 <= max <= 180",
            ));
        }
        if s.heatmap_grid.contains(&0) {
            return Err(bad("sweeps.heatmap_grid", "dimensions must be >= 1"));
        }
        if !s.heatmap_plane_z.is_finite() {
            return Err(bad("sweeps.heatmap_plane_z", "must be finite"));
        }
        if s.pearson_reference == 0 || s.pearson_reference > n {
            return Err(bad(
                "sweeps.pearson_reference",
                format!("must be a 1-based UAV index in [1, {n}]"),
            ));
        }
        if s.pearson_time_samples < 2 {
            return Err(bad("sweeps.pearson_time_samples", "must be >= 2"));
        }
        if s.reform_draws == 0 {
            return Err(bad("sweeps.reform_draws", "must be >= 1"));
        }
        Ok(())
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioConfig::from_json(&text)
}
