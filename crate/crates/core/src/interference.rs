//! Neighbouring-network interference, subset SINR and interference maps.
//!
//! Interference is made subset-dependent through the chosen subset's own
//! beam pattern: by reciprocity the transmit pattern doubles as the receive
//! sensitivity, so a source that sits in a sidelobe of the subset couples
//! into the link with gain
//!
//! ```text
//! G_rel(u_j) = |B(u_j)|^2 / |B(u_steer)|^2
//! ```
//!
//! where directions are taken from the subset centroid, `u_steer` points at
//! the receiver and `u_j` points at source `j`. Each source then contributes
//! `P_j * pathloss(|source_j - receiver|) * G_rel(u_j)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beampattern::{array_sum, BeamWeights, ElementPattern};
use crate::channel::{combined_gain, FadingParams};
use crate::error::{check_len, invalid, Error, Result};
use crate::geometry::{centroid, UavState, Vec3};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceSource {
    pub position: Vec3,
    /// Watts.
    pub power: f64,
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: Vec3,
    pub max: Vec3,
}

impl Region {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        let r = Self { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(invalid("region", "corners must be finite"));
        }
        if self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z {
            return Err(invalid("region", "min corner must not exceed max corner"));
        }
        Ok(())
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceField {
    pub sources: Vec<InterferenceSource>,
    /// Noise power sigma^2 in watts.
    pub noise_power: f64,
    pub region: Region,
}

impl InterferenceField {
    /// A noise-only field.
    pub fn quiet(noise_power: f64, region: Region) -> Self {
        Self {
            sources: Vec::new(),
            noise_power,
            region,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(invalid("noise_power", "must be a finite value > 0"));
        }
        self.region.validate()?;
        for s in &self.sources {
            if !(s.power >= 0.0) {
                return Err(invalid("power", "source power must be >= 0"));
            }
            if !self.region.contains(s.position) {
                return Err(invalid(
                    "sources",
                    "every source must lie inside the region",
                ));
            }
        }
        Ok(())
    }

    pub fn with_source(mut self, source: InterferenceSource) -> Self {
        self.sources.push(source);
        self
    }
}

/// Interference path gain. Distances are floored at the 1 m reference
/// distance so co-located points stay finite.
pub fn interference_path_gain(params: &FadingParams, distance: f64) -> f64 {
    params.path_gain(distance.max(1.0))
}

fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    (lo + (hi - lo) * u).clamp(lo, hi)
}

/// Draws `num_sources` sources uniformly in `region` with powers uniform in
/// `power_range`.
pub fn sample_field<R: Rng + ?Sized>(
    region: Region,
    num_sources: usize,
    power_range: (f64, f64),
    noise_power: f64,
    rng: &mut R,
) -> Result<InterferenceField> {
    region.validate()?;
    let (pmin, pmax) = power_range;
    if !(pmin >= 0.0 && pmax >= pmin && pmax.is_finite()) {
        return Err(invalid("power_range", "need 0 <= min <= max"));
    }
    if !(noise_power > 0.0) {
        return Err(invalid("noise_power", "must be > 0"));
    }
    let sources = (0..num_sources)
        .map(|_| {
            let position = Vec3::new(
                uniform_in(rng, region.min.x, region.max.x),
                uniform_in(rng, region.min.y, region.max.y),
                uniform_in(rng, region.min.z, region.max.z),
            );
            InterferenceSource {
                position,
                power: uniform_in(rng, pmin, pmax),
            }
        })
        .collect();
    Ok(InterferenceField {
        sources,
        noise_power,
        region,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrReport {
    pub signal_power: f64,
    pub interference_power: f64,
    pub noise_power: f64,
    pub sinr_db: f64,
}

impl SinrReport {
    fn new(signal_power: f64, interference_power: f64, noise_power: f64) -> Self {
        Self {
            signal_power,
            interference_power,
            noise_power,
            sinr_db: 10.0 * (signal_power / (interference_power + noise_power)).log10(),
        }
    }
}

/// The subset's pattern power toward arbitrary points, normalized to 1
/// toward the receiver.
struct RelativeGain<'a> {
    states: &'a [UavState],
    weights: &'a BeamWeights,
    origin: Vec3,
    wavenumber: f64,
    anchor: f64,
}

impl<'a> RelativeGain<'a> {
    fn new(
        states: &'a [UavState],
        weights: &'a BeamWeights,
        receiver: Vec3,
        wavelength: f64,
    ) -> Result<Self> {
        let origin = centroid(states);
        let wavenumber = 2.0 * std::f64::consts::PI / wavelength;
        let steer = (receiver - origin)
            .normalized()
            .ok_or(Error::DegenerateDirection)?;
        let mut probe = Self {
            states,
            weights,
            origin,
            wavenumber,
            anchor: 1.0,
        };
        let anchor = probe.power(steer);
        if !(anchor > 0.0) {
            return Err(Error::DegenerateWeights);
        }
        probe.anchor = anchor;
        Ok(probe)
    }

    fn power(&self, u: Vec3) -> f64 {
        array_sum(
            self.states,
            self.weights,
            None,
            &ElementPattern::isotropic(),
            u,
            self.wavenumber,
        )
        .norm_sqr()
    }

    /// A target on top of the centroid couples at main-lobe gain.
    fn toward(&self, target: Vec3) -> f64 {
        match (target - self.origin).normalized() {
            Some(u) => self.power(u) / self.anchor,
            None => 1.0,
        }
    }
}

/// `G_rel` of the subset toward `target`.
pub fn relative_pattern_gain(
    subset_states: &[UavState],
    weights: &BeamWeights,
    receiver: Vec3,
    target: Vec3,
    wavelength: f64,
) -> Result<f64> {
    check_len(subset_states.len(), weights.len())?;
    Ok(RelativeGain::new(subset_states, weights, receiver, wavelength)?.toward(target))
}

/// SINR of one candidate subset transmitting with total power `tx_power`.
#[allow(clippy::too_many_arguments)]
pub fn subset_sinr(
    subset_states: &[UavState],
    weights: &BeamWeights,
    channel_subset: &[Complex64],
    receiver: Vec3,
    field: &InterferenceField,
    params: &FadingParams,
    tx_power: f64,
) -> Result<SinrReport> {
    check_len(subset_states.len(), weights.len())?;
    check_len(subset_states.len(), channel_subset.len())?;
    let w: Vec<Complex64> = weights
        .amplitudes
        .iter()
        .zip(&weights.phases)
        .map(|(&a, &p)| Complex64::from_polar(a, p))
        .collect();
    let signal_power = tx_power * combined_gain(channel_subset, &w).norm_sqr();

    let gain = RelativeGain::new(subset_states, weights, receiver, params.wavelength())?;
    let interference_power = field
        .sources
        .iter()
        .map(|s| {
            s.power
                * interference_path_gain(params, s.position.distance(receiver))
                * gain.toward(s.position)
        })
        .sum();
    Ok(SinrReport::new(
        signal_power,
        interference_power,
        field.noise_power,
    ))
}

/// Total interference-plus-noise level (dB re 1 W) on the plane
/// `z = plane_z`, sampled at cell centers of an `nx x ny` grid over the
/// field's horizontal extent. Rows follow y, columns follow x.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `values[iy][ix]`
    pub values: Vec<Vec<f64>>,
}

fn cell_centers(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

pub fn heatmap(
    field: &InterferenceField,
    plane_z: f64,
    grid: (usize, usize),
    params: &FadingParams,
) -> Result<Heatmap> {
    let (nx, ny) = grid;
    if nx == 0 || ny == 0 {
        return Err(invalid("grid", "dimensions must be >= 1"));
    }
    let xs = cell_centers(field.region.min.x, field.region.max.x, nx);
    let ys = cell_centers(field.region.min.y, field.region.max.y, ny);
    let values = ys
        .iter()
        .map(|&y| {
            xs.iter()
                .map(|&x| {
                    let p = Vec3::new(x, y, plane_z);
                    let total: f64 = field
                        .sources
                        .iter()
                        .map(|s| s.power * interference_path_gain(params, s.position.distance(p)))
                        .sum();
                    10.0 * (total + field.noise_power).log10()
                })
                .collect()
        })
        .collect();
    Ok(Heatmap { xs, ys, values })
}
