//! Simulation core for hovering UAV swarms acting as a collaborative
//! antenna array: geometry and hover models, fading channels, beam
//! patterns, interference-aware subset selection, and a deep Q-learning
//! agent that re-forms distorted beams.

pub mod beampattern;
pub mod channel;
pub mod config;
pub mod dqn;
pub mod error;
pub mod geometry;
pub mod hover;
pub mod interference;
pub mod numeric;
pub mod scenario;
pub mod seed;
pub mod selection;
pub mod sweeps;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use beampattern::{
    array_factor, distorted_array_factor, distortion_eta, distortion_objective, AngularGrid,
    BeamWeights, ElementPattern, PatternSample,
};
pub use channel::{sample_channel, ChannelRealization, FadingParams};
pub use config::{load_config, ConfigError, ScenarioConfig};
pub use error::{Error, Result};
pub use geometry::{build_grid_layout, Direction, RotationAngles, SwarmLayout, UavState, Vec3};
pub use hover::{apply_hover, sample_perturbation, HoverSpec, Perturbation};
pub use interference::{InterferenceField, InterferenceSource, Region, SinrReport};
pub use scenario::{selected_reform_scenario, World};
pub use selection::{brute_force_select, Combination, SelectionProblem, SelectionResult};
