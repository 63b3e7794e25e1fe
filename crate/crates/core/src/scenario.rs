//! Assembles a configured world: swarm, channel, interference field, the
//! selected subset, and the re-forming scenario built on top of it.

use crate::beampattern::{steering_phases, AngularGrid, BeamWeights};
use crate::channel::{sample_channel, ChannelRealization, FadingParams};
use crate::config::{ScenarioConfig, WeightsMode};
use crate::dqn::ReformScenario;
use crate::error::Result;
use crate::geometry::{build_grid_layout, UavState, Vec3};
use crate::hover::HoverSpec;
use crate::interference::{sample_field, InterferenceField};
use crate::seed::stream;
use crate::selection::{brute_force_select, Combination, SelectionProblem, SelectionResult};

/// The full swarm with one channel draw and one interference field.
#[derive(Debug, Clone)]
pub struct World {
    pub uavs: Vec<UavState>,
    pub receiver: Vec3,
    pub params: FadingParams,
    pub channel: ChannelRealization,
    pub field: InterferenceField,
    pub tx_power: f64,
}

impl World {
    /// Channel and field come from the `world.channel` and
    /// `world.interference` streams of `seed`.
    pub fn build(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        let uavs = build_grid_layout(&cfg.swarm_layout());
        let receiver = cfg.receiver();
        let params = cfg.channel.params();
        let channel = sample_channel(
            &uavs,
            receiver,
            &params,
            0,
            &mut stream(seed, "world.channel"),
        )?;
        let inter = &cfg.interference;
        let field = sample_field(
            inter.region(),
            inter.num_sources,
            (inter.power_range_w[0], inter.power_range_w[1]),
            inter.noise_power_w,
            &mut stream(seed, "world.interference"),
        )?;
        Ok(Self {
            uavs,
            receiver,
            params,
            channel,
            field,
            tx_power: cfg.tx_power_w,
        })
    }

    pub fn problem(&self) -> SelectionProblem<'_> {
        SelectionProblem {
            uavs: &self.uavs,
            channel: &self.channel,
            receiver: self.receiver,
            field: &self.field,
            params: &self.params,
            tx_power: self.tx_power,
        }
    }

    pub fn select(&self, k: usize) -> Result<SelectionResult> {
        brute_force_select(&self.problem(), k)
    }

    pub fn subset(&self, combo: &Combination) -> Vec<UavState> {
        combo.zero_based().map(|i| self.uavs[i]).collect()
    }

    /// Beam weights for `combo`: MRT from the channel, or uniform
    /// unit-norm amplitudes with geometric steering phases.
    pub fn weights(&self, combo: &Combination, mode: WeightsMode) -> Result<BeamWeights> {
        match mode {
            WeightsMode::Mrt => self.problem().mrt_weights_for(combo),
            WeightsMode::Steering => {
                let states = self.subset(combo);
                let phases = steering_phases(&states, self.receiver, self.params.wavelength())?;
                let amp = 1.0 / (states.len() as f64).sqrt();
                BeamWeights::new(vec![amp; states.len()], phases)
            }
        }
    }

    /// Re-forming scenario for the subset `combo` under `hover`.
    pub fn reform_scenario(
        &self,
        cfg: &ScenarioConfig,
        combo: &Combination,
        hover: &HoverSpec,
    ) -> Result<ReformScenario> {
        ReformScenario::new(
            self.subset(combo),
            self.weights(combo, cfg.weights_mode)?,
            cfg.element.pattern(),
            AngularGrid::uniform(cfg.grid_size),
            self.params.wavelength(),
            hover,
            cfg.layout.spacing_delta,
        )
    }
}

/// Builds the world, runs the subset search, and returns the re-forming
/// scenario for the winner under the configured hover model.
pub fn selected_reform_scenario(
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<(SelectionResult, ReformScenario)> {
    let world = World::build(cfg, seed)?;
    let selection = world.select(cfg.k)?;
    let scenario = world.reform_scenario(cfg, &selection.best, &cfg.hover.spec())?;
    Ok((selection, scenario))
}
