//! Beam re-forming environment: the agent nudges hovering UAVs back
//! toward their nominal slots, one axis or phase step at a time.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::beampattern::{
    boresights, element_term, grid_magnitudes, quadrature_distance, quadrature_energy, wavenumber,
    AngularGrid, BeamWeights, ElementPattern, GridGeometry,
};
use crate::error::{check_len, invalid, Error, Result};
use crate::geometry::{UavState, Vec3};
use crate::hover::{sample_perturbation, HoverSpec, Perturbation};

/// Number of discrete actions per UAV: `{x, y, z, phase} x {+, -}`.
pub const ACTIONS_PER_UAV: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    X,
    Y,
    Z,
    Phase,
}

/// Decoded form of an action index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Action {
    pub uav: usize,
    pub control: Control,
    pub positive: bool,
}

impl Action {
    /// `index / 8` selects the UAV, `(index % 8) / 2` the control, and an
    /// even index means the positive direction.
    pub fn decode(index: usize, num_uavs: usize) -> Result<Self> {
        let count = num_uavs * ACTIONS_PER_UAV;
        if index >= count {
            return Err(Error::InvalidAction {
                action: index,
                count,
            });
        }
        let control = match (index % ACTIONS_PER_UAV) / 2 {
            0 => Control::X,
            1 => Control::Y,
            2 => Control::Z,
            _ => Control::Phase,
        };
        Ok(Self {
            uav: index / ACTIONS_PER_UAV,
            control,
            positive: index % 2 == 0,
        })
    }

    pub fn encode(self) -> usize {
        let c = match self.control {
            Control::X => 0,
            Control::Y => 1,
            Control::Z => 2,
            Control::Phase => 3,
        };
        self.uav * ACTIONS_PER_UAV + 2 * c + usize::from(!self.positive)
    }
}

/// The selected sub-swarm and everything needed to score its beam.
#[derive(Debug, Clone)]
pub struct ReformScenario {
    pub nominal: Vec<UavState>,
    pub weights: BeamWeights,
    pub element: ElementPattern,
    pub grid: AngularGrid,
    pub wavelength: f64,
    /// Hover spec with any tolerance fraction already resolved.
    pub hover: HoverSpec,
    pub spacing: f64,
    geometry: GridGeometry,
    ideal: Vec<f64>,
    energy: f64,
}

impl ReformScenario {
    pub fn new(
        nominal: Vec<UavState>,
        weights: BeamWeights,
        element: ElementPattern,
        grid: AngularGrid,
        wavelength: f64,
        hover: &HoverSpec,
        spacing: f64,
    ) -> Result<Self> {
        if nominal.is_empty() {
            return Err(Error::EmptyInput("nominal UAV set"));
        }
        check_len(nominal.len(), weights.len())?;
        if grid.is_empty() {
            return Err(Error::EmptyInput("grid"));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(invalid("wavelength", "must be a finite value > 0"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid("spacing_delta", "must be a finite value > 0"));
        }
        element.validate()?;
        hover.validate()?;
        let geometry = GridGeometry::new(&grid);
        let ideal = grid_magnitudes(&geometry, &nominal, &weights, None, &element, wavelength);
        let energy = quadrature_energy(&geometry, &ideal);
        if energy == 0.0 {
            return Err(Error::DegenerateWeights);
        }
        Ok(Self {
            nominal,
            weights,
            element,
            grid,
            wavelength,
            hover: hover.resolved(spacing),
            spacing,
            geometry,
            ideal,
            energy,
        })
    }

    pub fn num_uavs(&self) -> usize {
        self.nominal.len()
    }

    pub fn num_actions(&self) -> usize {
        ACTIONS_PER_UAV * self.nominal.len()
    }

    pub fn state_dim(&self) -> usize {
        6 * self.nominal.len() + 1
    }

    pub fn sample_perturbations<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Perturbation> {
        (0..self.num_uavs())
            .map(|_| sample_perturbation(&self.hover, self.spacing, rng))
            .collect()
    }

    /// Distortion `eta` of a perturbed swarm with phase corrections
    /// added to the weights.
    pub fn eta(&self, perturbed: &[UavState], phase_offsets: &[f64]) -> Result<f64> {
        check_len(self.num_uavs(), perturbed.len())?;
        check_len(self.num_uavs(), phase_offsets.len())?;
        let mags = grid_magnitudes(
            &self.geometry,
            perturbed,
            &self.weights,
            Some(phase_offsets),
            &self.element,
            self.wavelength,
        );
        Ok(quadrature_distance(&self.geometry, &self.ideal, &mags) / self.energy)
    }

    /// `eta` of the uncorrected hovering swarm.
    pub fn perturbed_eta(&self, perturbations: &[Perturbation]) -> Result<f64> {
        let states = crate::hover::apply_hover(&self.nominal, perturbations)?;
        self.eta(&states, &vec![0.0; self.num_uavs()])
    }
}

/// Step sizes and termination rule of an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvParams {
    pub position_step: f64,
    pub phase_step: f64,
    pub eta_threshold: f64,
    pub max_steps: usize,
    pub terminal_bonus: f64,
}

/// Outcome of one [`ReformEnv::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// True only when the threshold was reached; running out of steps is
    /// a truncation, not a terminal state.
    pub success: bool,
    pub eta: f64,
}

/// Per-UAV corrections accumulated by the agent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Correction {
    pub displacement: Vec3,
    pub phase: f64,
}

/// A live episode. Per-UAV grid contributions are cached so that a step
/// re-evaluates only the UAV that moved.
#[derive(Debug, Clone)]
pub struct ReformEnv<'a> {
    scenario: &'a ReformScenario,
    params: EnvParams,
    perturbations: Vec<Perturbation>,
    corrections: Vec<Correction>,
    bores: Vec<Vec3>,
    terms: Vec<Vec<Complex64>>,
    eta: f64,
    steps: usize,
}

impl<'a> ReformEnv<'a> {
    pub fn new(
        scenario: &'a ReformScenario,
        params: EnvParams,
        perturbations: Vec<Perturbation>,
    ) -> Result<Self> {
        check_len(scenario.num_uavs(), perturbations.len())?;
        if !(params.position_step > 0.0 && params.phase_step > 0.0) {
            return Err(invalid(
                "step_sizes",
                "position and phase steps must be > 0",
            ));
        }
        let k = scenario.num_uavs();
        let mut env = Self {
            scenario,
            params,
            perturbations,
            corrections: vec![Correction::default(); k],
            bores: Vec::with_capacity(k),
            terms: Vec::with_capacity(k),
            eta: 0.0,
            steps: 0,
        };
        let states = env.current_states();
        env.bores = boresights(&states, &scenario.element);
        for i in 0..k {
            let t = env.uav_terms(i, &states[i]);
            env.terms.push(t);
        }
        env.eta = env.evaluate();
        Ok(env)
    }

    /// Position residual `actual - nominal` of UAV `i`.
    fn residual(&self, i: usize) -> Vec3 {
        self.perturbations[i].displacement + self.corrections[i].displacement
    }

    /// States after hover and corrections.
    pub fn current_states(&self) -> Vec<UavState> {
        self.scenario
            .nominal
            .iter()
            .enumerate()
            .map(|(i, s)| UavState {
                position: s.position + self.residual(i),
                rotation: s.rotation.compose_additive(self.perturbations[i].rotation),
                ..*s
            })
            .collect()
    }

    pub fn phase_offsets(&self) -> Vec<f64> {
        self.corrections.iter().map(|c| c.phase).collect()
    }

    pub fn corrections(&self) -> &[Correction] {
        &self.corrections
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_success(&self) -> bool {
        self.eta <= self.params.eta_threshold
    }

    pub fn is_done(&self) -> bool {
        self.is_success() || self.steps >= self.params.max_steps
    }

    fn uav_terms(&self, i: usize, state: &UavState) -> Vec<Complex64> {
        let sc = self.scenario;
        let k = wavenumber(sc.wavelength);
        let amp = sc.weights.amplitudes[i];
        let phase = sc.weights.phases[i] + self.corrections[i].phase;
        let bore = self.bores[i];
        sc.geometry
            .units
            .par_iter()
            .with_min_len(512)
            .map(|&u| element_term(state, bore, amp, phase, &sc.element, u, k))
            .collect()
    }

    fn evaluate(&self) -> f64 {
        let sc = self.scenario;
        let mags: Vec<f64> = (0..sc.geometry.len())
            .map(|p| {
                let mut s = Complex64::new(0.0, 0.0);
                for t in &self.terms {
                    s += t[p];
                }
                s.norm()
            })
            .collect();
        quadrature_distance(&sc.geometry, &sc.ideal, &mags) / sc.energy
    }

    /// Observation: position residuals over the spacing, attitude
    /// residuals over the attitude bound (zero when attitude is not
    /// perturbed), then `eta`.
    pub fn observation(&self) -> Vec<f64> {
        let k = self.scenario.num_uavs();
        let mut s = Vec::with_capacity(6 * k + 1);
        for i in 0..k {
            let r = self.residual(i);
            s.extend([r.x, r.y, r.z].map(|v| v / self.scenario.spacing));
        }
        let amax = self.scenario.hover.angle_max;
        for p in &self.perturbations {
            let r = p.rotation;
            s.extend([r.yaw, r.pitch, r.roll].map(|v| if amax > 0.0 { v / amax } else { 0.0 }));
        }
        s.push(self.eta);
        s
    }

    /// Applies one action. The reward is the drop in `eta`, plus the
    /// terminal bonus when the threshold is reached.
    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let a = Action::decode(action, self.scenario.num_uavs())?;
        let sign = if a.positive { 1.0 } else { -1.0 };
        let dp = sign * self.params.position_step;
        let c = &mut self.corrections[a.uav];
        match a.control {
            Control::X => c.displacement.x += dp,
            Control::Y => c.displacement.y += dp,
            Control::Z => c.displacement.z += dp,
            Control::Phase => c.phase += sign * self.params.phase_step,
        }
        let state = UavState {
            position: self.scenario.nominal[a.uav].position + self.residual(a.uav),
            rotation: self.scenario.nominal[a.uav]
                .rotation
                .compose_additive(self.perturbations[a.uav].rotation),
            ..self.scenario.nominal[a.uav]
        };
        self.terms[a.uav] = self.uav_terms(a.uav, &state);
        let before = self.eta;
        self.eta = self.evaluate();
        self.steps += 1;
        let success = self.is_success();
        let mut reward = before - self.eta;
        if success {
            reward += self.params.terminal_bonus;
        }
        Ok(StepOutcome {
            state: self.observation(),
            reward,
            done: success || self.steps >= self.params.max_steps,
            success,
            eta: self.eta,
        })
    }
}

/// `eta` threshold from probe draws: the `quantile` order statistic of
/// the sorted probe distortions, at index `floor(quantile * (n - 1))`.
pub fn calibrate_threshold<R: Rng + ?Sized>(
    scenario: &ReformScenario,
    num_probe_draws: usize,
    quantile: f64,
    rng: &mut R,
) -> Result<f64> {
    if num_probe_draws < 2 {
        return Err(invalid("threshold_probes", "must be >= 2"));
    }
    if !(0.0..1.0).contains(&quantile) {
        return Err(invalid("threshold_quantile", "must lie in [0, 1)"));
    }
    let mut etas = Vec::with_capacity(num_probe_draws);
    for _ in 0..num_probe_draws {
        let p = scenario.sample_perturbations(rng);
        etas.push(scenario.perturbed_eta(&p)?);
    }
    etas.sort_by(f64::total_cmp);
    let idx = (quantile * (num_probe_draws - 1) as f64).floor() as usize;
    Ok(etas[idx])
}
