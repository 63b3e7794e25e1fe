//! Collaborative beam patterns, the distortion objective, and the pattern
//! sweeps used by the hover studies.
//!
//! The array factor is
//!
//! ```text
//! S(theta, phi) = sum_k P_k w_k g_k(u) exp(j (zeta_k + (2 pi / lambda) r_k . u))
//! ```
//!
//! with `u = (cos phi sin theta, sin phi sin theta, cos theta)` and element
//! gain `g_k(u) = max(0, cos alpha_k)^q`, where `alpha_k` is the angle between
//! the UAV's rotated boresight and `u`. With `q = 0` every element is
//! isotropic and the pattern is rotation-invariant.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::geometry::{
    centroid, direction_between, rotate_vector, unit_vector, Direction, RotationAngles, UavState,
    Vec3,
};
use crate::numeric::pairwise_sum;

/// Per-UAV amplitude `w_k` and phase `zeta_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamWeights {
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

impl BeamWeights {
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        check_len(amplitudes.len(), phases.len())?;
        if amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(invalid("amplitudes", "must be finite and >= 0"));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(invalid("phases", "must be finite"));
        }
        Ok(Self { amplitudes, phases })
    }

    /// Unit amplitudes and zero phases.
    pub fn uniform(k: usize) -> Self {
        Self {
            amplitudes: vec![1.0; k],
            phases: vec![0.0; k],
        }
    }

    /// Polar decomposition of complex weights (e.g. MRT output).
    pub fn from_complex(w: &[Complex64]) -> Self {
        Self {
            amplitudes: w.iter().map(|z| z.norm()).collect(),
            phases: w.iter().map(|z| z.arg()).collect(),
        }
    }

    /// Unit amplitudes with geometric steering phases toward `receiver`.
    pub fn steering(uavs: &[UavState], receiver: Vec3, wavelength: f64) -> Result<Self> {
        let phases = steering_phases(uavs, receiver, wavelength)?;
        Ok(Self {
            amplitudes: vec![1.0; uavs.len()],
            phases,
        })
    }

    /// Rescales amplitudes so that `sum w_k^2 = 1`.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::DegenerateWeights);
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

/// Cosine-power element pattern in the UAV body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementPattern {
    pub exponent_q: f64,
    pub boresight_body: Vec3,
}

impl Default for ElementPattern {
    fn default() -> Self {
        Self {
            exponent_q: 2.0,
            boresight_body: Vec3::new(0.0, 0.0, 1.0),
        }
    }
}

impl ElementPattern {
    pub fn isotropic() -> Self {
        Self {
            exponent_q: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent_q >= 0.0 && self.exponent_q.is_finite()) {
            return Err(invalid("exponent_q", "must be a finite value >= 0"));
        }
        if ((self.boresight_body.norm()) - 1.0).abs() > 1e-9 {
            return Err(invalid("boresight", "must be a unit vector"));
        }
        Ok(())
    }

    /// Gain toward unit direction `u` for an element with attitude `rotation`.
    pub fn gain(&self, rotation: RotationAngles, u: Vec3) -> f64 {
        self.gain_with_boresight(self.world_boresight(rotation), u)
    }

    /// Boresight in the world frame for an element with attitude `rotation`.
    pub fn world_boresight(&self, rotation: RotationAngles) -> Vec3 {
        rotate_vector(self.boresight_body, rotation)
    }

    #[inline]
    pub fn gain_with_boresight(&self, boresight: Vec3, u: Vec3) -> f64 {
        if self.exponent_q == 0.0 {
            return 1.0;
        }
        let c = boresight.dot(u).max(0.0);
        if self.exponent_q == 2.0 {
            c * c
        } else {
            c.powf(self.exponent_q)
        }
    }
}

/// One evaluation of the array factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternSample {
    pub direction: Direction,
    pub magnitude: f64,
    pub phase: f64,
}

/// Strictly increasing angle lists spanning part of `[-pi, pi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

fn check_axis(name: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyInput(name));
    }
    if values.iter().any(|v| !(-PI..=PI).contains(v)) {
        return Err(invalid(name, "angles must lie in [-pi, pi]"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(name, "angles must be strictly increasing"));
    }
    Ok(())
}

/// Quadrature widths: each node owns the interval halfway to its
/// neighbours, clipped to `[-pi, pi]`.
fn cell_widths(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 {
                -PI
            } else {
                0.5 * (values[i - 1] + values[i])
            };
            let hi = if i + 1 == n {
                PI
            } else {
                0.5 * (values[i] + values[i + 1])
            };
            hi - lo
        })
        .collect()
}

/// `n` midpoints of equal cells over `[-pi, pi]`.
pub fn midpoints(n: usize) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|i| -PI + (i as f64 + 0.5) * h).collect()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl AngularGrid {
    pub fn new(thetas: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        check_axis("thetas", &thetas)?;
        check_axis("phis", &phis)?;
        Ok(Self { thetas, phis })
    }

    /// Midpoint grid of `n x n` cells over `[-pi, pi]^2`.
    pub fn uniform(n: usize) -> Self {
        Self {
            thetas: midpoints(n.max(1)),
            phis: midpoints(n.max(1)),
        }
    }

    pub fn len(&self) -> usize {
        self.thetas.len() * self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Precomputed directions and quadrature weights for a grid, in row-major
/// order (theta outer, phi inner).
#[derive(Debug, Clone)]
pub struct GridGeometry {
    pub units: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl GridGeometry {
    pub fn new(grid: &AngularGrid) -> Self {
        let wt = cell_widths(&grid.thetas);
        let wp = cell_widths(&grid.phis);
        let mut units = Vec::with_capacity(grid.len());
        let mut weights = Vec::with_capacity(grid.len());
        for (i, &theta) in grid.thetas.iter().enumerate() {
            for (j, &phi) in grid.phis.iter().enumerate() {
                units.push(unit_vector(Direction { theta, phi }));
                weights.push(wt[i] * wp[j]);
            }
        }
        Self { units, weights }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

pub(crate) fn wavenumber(wavelength: f64) -> f64 {
    2.0 * PI / wavelength
}

/// One element's complex contribution toward unit direction `u`, given
/// its world-frame boresight.
#[inline]
pub(crate) fn element_term(
    uav: &UavState,
    boresight: Vec3,
    amplitude: f64,
    phase: f64,
    element: &ElementPattern,
    u: Vec3,
    k: f64,
) -> Complex64 {
    let g = element.gain_with_boresight(boresight, u);
    let arg = phase + k * uav.position.dot(u);
    Complex64::from_polar(uav.power * amplitude * g, arg)
}

/// World-frame boresight of every UAV.
pub(crate) fn boresights(uavs: &[UavState], element: &ElementPattern) -> Vec<Vec3> {
    uavs.iter()
        .map(|u| element.world_boresight(u.rotation))
        .collect()
}

fn sum_terms(
    uavs: &[UavState],
    bores: &[Vec3],
    weights: &BeamWeights,
    phase_offsets: Option<&[f64]>,
    element: &ElementPattern,
    u: Vec3,
    k: f64,
) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (i, uav) in uavs.iter().enumerate() {
        let extra = phase_offsets.map_or(0.0, |p| p[i]);
        s += element_term(
            uav,
            bores[i],
            weights.amplitudes[i],
            weights.phases[i] + extra,
            element,
            u,
            k,
        );
    }
    s
}

/// Complex array-factor sum toward unit direction `u`; `phase_offsets`
/// are added to the weight phases when given.
pub(crate) fn array_sum(
    uavs: &[UavState],
    weights: &BeamWeights,
    phase_offsets: Option<&[f64]>,
    element: &ElementPattern,
    u: Vec3,
    k: f64,
) -> Complex64 {
    if element.exponent_q == 0.0 {
        let mut s = Complex64::new(0.0, 0.0);
        for (i, uav) in uavs.iter().enumerate() {
            let extra = phase_offsets.map_or(0.0, |p| p[i]);
            s += element_term(
                uav,
                Vec3::ZERO,
                weights.amplitudes[i],
                weights.phases[i] + extra,
                element,
                u,
                k,
            );
        }
        return s;
    }
    let bores = boresights(uavs, element);
    sum_terms(uavs, &bores, weights, phase_offsets, element, u, k)
}

fn sample(d: Direction, s: Complex64) -> PatternSample {
    PatternSample {
        direction: d,
        magnitude: s.norm(),
        phase: s.arg(),
    }
}

/// Evaluates the collaborative beam pattern toward `d`.
pub fn array_factor(
    uavs: &[UavState],
    weights: &BeamWeights,
    element: &ElementPattern,
    d: Direction,
    wavelength: f64,
) -> Result<PatternSample> {
    check_len(uavs.len(), weights.len())?;
    let s = array_sum(
        uavs,
        weights,
        None,
        element,
        unit_vector(d),
        wavenumber(wavelength),
    );
    Ok(sample(d, s))
}

/// Direction from the array centroid to the receiver.
pub fn steering_direction(uavs: &[UavState], receiver: Vec3) -> Result<Direction> {
    if uavs.iter().any(|u| u.position == receiver) {
        return Err(Error::DegenerateDirection);
    }
    direction_between(centroid(uavs), receiver)
}

/// Phases `-(2 pi / lambda) r_k . u mod 2 pi` that align every element at
/// the steering direction.
pub fn steering_phases(uavs: &[UavState], receiver: Vec3, wavelength: f64) -> Result<Vec<f64>> {
    let u = unit_vector(steering_direction(uavs, receiver)?);
    let k = wavenumber(wavelength);
    Ok(uavs
        .iter()
        .map(|uav| (-k * uav.position.dot(u)).rem_euclid(2.0 * PI))
        .collect())
}

/// Evaluates the pattern of the perturbed swarm, with phase errors added
/// to the weight phases and the look direction offset by `angle_error`.
#[allow(clippy::too_many_arguments)]
pub fn distorted_array_factor(
    nominal: &[UavState],
    perturbed: &[UavState],
    weights: &BeamWeights,
    element: &ElementPattern,
    d: Direction,
    angle_error: (f64, f64),
    phase_error: &[f64],
    wavelength: f64,
) -> Result<PatternSample> {
    check_len(nominal.len(), perturbed.len())?;
    check_len(perturbed.len(), weights.len())?;
    check_len(perturbed.len(), phase_error.len())?;
    let hat = Direction {
        theta: d.theta + angle_error.0,
        phi: d.phi + angle_error.1,
    };
    let s = array_sum(
        perturbed,
        weights,
        Some(phase_error),
        element,
        unit_vector(hat),
        wavenumber(wavelength),
    );
    Ok(sample(hat, s))
}

/// Beam magnitudes over a precomputed grid.
pub fn grid_magnitudes(
    geometry: &GridGeometry,
    uavs: &[UavState],
    weights: &BeamWeights,
    phase_offsets: Option<&[f64]>,
    element: &ElementPattern,
    wavelength: f64,
) -> Vec<f64> {
    let k = wavenumber(wavelength);
    let bores = boresights(uavs, element);
    geometry
        .units
        .par_iter()
        .with_min_len(256)
        .map(|&u| sum_terms(uavs, &bores, weights, phase_offsets, element, u, k).norm())
        .collect()
}

/// `(1/4) sum_i w_i (a_i - b_i)^2`.
pub fn quadrature_distance(geometry: &GridGeometry, a: &[f64], b: &[f64]) -> f64 {
    let terms: Vec<f64> = geometry
        .weights
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * (x - y) * (x - y))
        .collect();
    0.25 * pairwise_sum(&terms)
}

/// `(1/4) sum_i w_i a_i^2`, the beam energy that normalizes the
/// distortion metric.
pub fn quadrature_energy(geometry: &GridGeometry, a: &[f64]) -> f64 {
    let terms: Vec<f64> = geometry
        .weights
        .iter()
        .zip(a)
        .map(|(w, x)| w * x * x)
        .collect();
    0.25 * pairwise_sum(&terms)
}

/// Midpoint-rule estimate of the distortion objective
/// `J = 1/4 int int |B - B_hat|^2 dtheta dphi`.
#[allow(clippy::too_many_arguments)]
pub fn distortion_objective(
    nominal: &[UavState],
    perturbed: &[UavState],
    weights: &BeamWeights,
    phase_error: &[f64],
    element: &ElementPattern,
    grid: &AngularGrid,
    wavelength: f64,
) -> Result<f64> {
    check_len(nominal.len(), perturbed.len())?;
    check_len(nominal.len(), weights.len())?;
    check_len(nominal.len(), phase_error.len())?;
    if grid.is_empty() {
        return Err(Error::EmptyInput("grid"));
    }
    let geometry = GridGeometry::new(grid);
    let ideal = grid_magnitudes(&geometry, nominal, weights, None, element, wavelength);
    let distorted = grid_magnitudes(
        &geometry,
        perturbed,
        weights,
        Some(phase_error),
        element,
        wavelength,
    );
    Ok(quadrature_distance(&geometry, &ideal, &distorted))
}

/// Distortion normalized by the ideal beam energy, `eta = J / E`.
#[allow(clippy::too_many_arguments)]
pub fn distortion_eta(
    nominal: &[UavState],
    perturbed: &[UavState],
    weights: &BeamWeights,
    phase_error: &[f64],
    element: &ElementPattern,
    grid: &AngularGrid,
    wavelength: f64,
) -> Result<f64> {
    let geometry = GridGeometry::new(grid);
    let ideal = grid_magnitudes(&geometry, nominal, weights, None, element, wavelength);
    let energy = quadrature_energy(&geometry, &ideal);
    if energy == 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let j = distortion_objective(
        nominal,
        perturbed,
        weights,
        phase_error,
        element,
        grid,
        wavelength,
    )?;
    Ok(j / energy)
}

/// Elevation cut of the pattern at fixed azimuth, magnitudes normalized
/// by the cut's maximum.
pub fn aoa_sweep(
    uavs: &[UavState],
    weights: &BeamWeights,
    element: &ElementPattern,
    phi_fixed: f64,
    theta_grid: &[f64],
    wavelength: f64,
) -> Result<Vec<PatternSample>> {
    if theta_grid.is_empty() {
        return Err(Error::EmptyInput("theta_grid"));
    }
    let mut samples = theta_grid
        .iter()
        .map(|&theta| {
            array_factor(
                uavs,
                weights,
                element,
                Direction {
                    theta,
                    phi: phi_fixed,
                },
                wavelength,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let peak = samples.iter().map(|s| s.magnitude).fold(0.0, f64::max);
    if peak > 0.0 {
        samples.iter_mut().for_each(|s| s.magnitude /= peak);
    }
    Ok(samples)
}

/// Main-lobe width and sidelobe census of a normalized sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LobeMetrics {
    /// Contiguous angular extent around the main peak where the normalized
    /// magnitude stays at or above `1/sqrt(2)` (-3 dB).
    pub main_lobe_width: f64,
    /// Local maxima above the threshold, excluding the main peak.
    pub sidelobes_above: usize,
}

/// Lobe metrics for a sweep whose main lobe is the local maximum nearest
/// `steer_angle`. `angles` must be increasing and match `magnitudes`.
pub fn lobe_metrics(
    angles: &[f64],
    magnitudes: &[f64],
    steer_angle: f64,
    threshold_db: f64,
) -> Result<LobeMetrics> {
    check_len(angles.len(), magnitudes.len())?;
    if angles.len() < 3 {
        return Err(invalid("angles", "need at least three samples"));
    }
    let peak = magnitudes.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let m: Vec<f64> = magnitudes.iter().map(|v| v / peak).collect();
    let n = m.len();
    let is_peak = |i: usize| -> bool {
        let left = if i == 0 { f64::NEG_INFINITY } else { m[i - 1] };
        let right = if i + 1 == n {
            f64::NEG_INFINITY
        } else {
            m[i + 1]
        };
        m[i] > left && m[i] >= right
    };
    let peaks: Vec<usize> = (0..n).filter(|&i| is_peak(i)).collect();
    let main = *peaks
        .iter()
        .min_by(|&&a, &&b| {
            (angles[a] - steer_angle)
                .abs()
                .total_cmp(&(angles[b] - steer_angle).abs())
                .then(m[b].total_cmp(&m[a]))
        })
        .ok_or(Error::DegenerateWeights)?;

    let half_power = std::f64::consts::FRAC_1_SQRT_2 * m[main];
    let mut lo = main;
    while lo > 0 && m[lo - 1] >= half_power {
        lo -= 1;
    }
    let mut hi = main;
    while hi + 1 < n && m[hi + 1] >= half_power {
        hi += 1;
    }
    let threshold = 10f64.powf(threshold_db / 20.0);
    let sidelobes_above = peaks
        .iter()
        .filter(|&&i| i != main && m[i] > threshold)
        .count();
    Ok(LobeMetrics {
        main_lobe_width: angles[hi] - angles[lo],
        sidelobes_above,
    })
}

/// One cell of the pitch/roll study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerPhaseCell {
    pub pitch: f64,
    pub roll: f64,
    pub power_db: f64,
    pub phase: f64,
}

/// Received field (dB) and phase toward `receiver` when every UAV is
/// rotated by `(yaw = 0, pitch, roll)`. Rows follow `pitch_grid`.
pub fn hover_power_phase_map(
    uavs: &[UavState],
    weights: &BeamWeights,
    element: &ElementPattern,
    receiver: Vec3,
    pitch_grid: &[f64],
    roll_grid: &[f64],
    wavelength: f64,
) -> Result<Vec<Vec<PowerPhaseCell>>> {
    check_len(uavs.len(), weights.len())?;
    let d = steering_direction(uavs, receiver)?;
    let zero_phase = vec![0.0; uavs.len()];
    pitch_grid
        .iter()
        .map(|&pitch| {
            roll_grid
                .iter()
                .map(|&roll| {
                    let rotated: Vec<UavState> = uavs
                        .iter()
                        .map(|u| UavState {
                            rotation: RotationAngles::new(0.0, pitch, roll),
                            ..*u
                        })
                        .collect();
                    let s = distorted_array_factor(
                        uavs,
                        &rotated,
                        weights,
                        element,
                        d,
                        (0.0, 0.0),
                        &zero_phase,
                        wavelength,
                    )?;
                    Ok(PowerPhaseCell {
                        pitch,
                        roll,
                        power_db: 20.0 * s.magnitude.log10(),
                        phase: s.phase,
                    })
                })
                .collect()
        })
        .collect()
}
