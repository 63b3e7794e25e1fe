//! Rician channel draws, MRT weights and the distance/fading correlation
//! study.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::geometry::{UavState, Vec3};
use crate::hover::{apply_hover, sample_perturbations, HoverSpec};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_CARRIER_HZ: f64 = 3.5e9;

/// Per-UAV complex gains toward the receiver at sample index `timestamp`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gains: Vec<Complex64>,
    pub timestamp: u64,
}

impl ChannelRealization {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// The CQI sub-vector for a set of zero-based indices.
    pub fn subset(&self, indices: &[usize]) -> Vec<Complex64> {
        indices.iter().map(|&i| self.gains[i]).collect()
    }
}

/// Large-scale and small-scale fading parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    /// Linear LoS-to-scatter power ratio; `f64::INFINITY` is pure LoS.
    pub rician_k: f64,
    pub pathloss_exponent: f64,
    /// Power gain at 1 m.
    pub reference_gain: f64,
    pub carrier_freq: f64,
}

impl Default for FadingParams {
    fn default() -> Self {
        Self {
            rician_k: 5.0,
            pathloss_exponent: 2.2,
            reference_gain: 1.0,
            carrier_freq: DEFAULT_CARRIER_HZ,
        }
    }
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rician_k >= 0.0) {
            return Err(invalid("rician_k", "must be >= 0"));
        }
        if !(self.pathloss_exponent > 0.0 && self.pathloss_exponent.is_finite()) {
            return Err(invalid("pathloss_exponent", "must be a finite value > 0"));
        }
        if !(self.reference_gain > 0.0 && self.reference_gain.is_finite()) {
            return Err(invalid("reference_gain", "must be a finite value > 0"));
        }
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            return Err(invalid("carrier_freq", "must be a finite value > 0"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Mean power gain `g0 * d^-n` at distance `d`.
    pub fn path_gain(&self, distance: f64) -> f64 {
        self.reference_gain * distance.powf(-self.pathloss_exponent)
    }

    fn los_scatter_split(&self) -> (f64, f64) {
        if self.rician_k.is_infinite() {
            (1.0, 0.0)
        } else {
            let k = self.rician_k;
            ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
        }
    }
}

/// Circularly-symmetric complex Gaussian with unit variance.
fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws `h_k = sqrt(g0 d^-n) (sqrt(K/(K+1)) e^{-j 2 pi d / lambda} + sqrt(1/(K+1)) CN(0,1))`.
///
/// Pure-LoS draws (`rician_k = inf`) consume no randomness.
pub fn sample_channel<R: Rng + ?Sized>(
    uavs: &[UavState],
    receiver: Vec3,
    params: &FadingParams,
    timestamp: u64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let lambda = params.wavelength();
    let (los, scatter) = params.los_scatter_split();
    let mut gains = Vec::with_capacity(uavs.len());
    for u in uavs {
        let d = u.position.distance(receiver);
        if d == 0.0 {
            return Err(Error::ZeroDistance);
        }
        let amplitude = params.path_gain(d).sqrt();
        let los_term = Complex64::from_polar(los, -2.0 * std::f64::consts::PI * d / lambda);
        let h = if scatter > 0.0 {
            los_term + complex_normal(rng) * scatter
        } else {
            los_term
        };
        gains.push(h * amplitude);
    }
    Ok(ChannelRealization { gains, timestamp })
}

pub fn vector_norm(h: &[Complex64]) -> f64 {
    h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum ratio transmission weights `w = conj(h) / ||h||`.
pub fn mrt_weights(h: &[Complex64]) -> Result<Vec<Complex64>> {
    let norm = vector_norm(h);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateChannel);
    }
    Ok(h.iter().map(|z| z.conj() / norm).collect())
}

/// Sum of `h_k w_k`, the combined gain at the receiver.
pub fn combined_gain(h: &[Complex64], w: &[Complex64]) -> Complex64 {
    h.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(invalid("series", "need at least two samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// One row of the distance/fading correlation study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub pair_index: usize,
    pub relative_distance: f64,
    pub pearson_r: f64,
}

/// Correlates amplitude series `|h_ref|` against every other UAV's series.
/// `amplitudes[t][k]` is the amplitude of UAV `k` at sample `t`.
pub fn correlate_amplitudes(
    reference_uav: usize,
    positions: &[Vec3],
    amplitudes: &[Vec<f64>],
) -> Result<Vec<CorrelationRow>> {
    let n = positions.len();
    if reference_uav >= n {
        return Err(invalid(
            "reference_uav",
            format!("index {reference_uav} out of range for {n} UAVs"),
        ));
    }
    let series = |k: usize| -> Vec<f64> { amplitudes.iter().map(|row| row[k]).collect() };
    let reference = series(reference_uav);
    let mut rows = Vec::with_capacity(n.saturating_sub(1));
    for j in (0..n).filter(|&j| j != reference_uav) {
        rows.push(CorrelationRow {
            pair_index: j,
            relative_distance: positions[reference_uav].distance(positions[j]),
            pearson_r: pearson(&reference, &series(j))?,
        });
    }
    Ok(rows)
}

/// Pearson correlation between the reference UAV's amplitude series and
/// every other UAV's, over `num_time_samples` independent draws. Each draw
/// applies a fresh hover displacement (attitude is irrelevant to the
/// channel) before sampling the channel.
pub fn distance_fading_correlation<R: Rng + ?Sized>(
    reference_uav: usize,
    uavs: &[UavState],
    receiver: Vec3,
    params: &FadingParams,
    hover: Option<(&HoverSpec, f64)>,
    num_time_samples: usize,
    rng: &mut R,
) -> Result<Vec<CorrelationRow>> {
    if uavs.len() < 2 {
        return Err(invalid("uavs", "need at least two UAVs"));
    }
    if num_time_samples < 2 {
        return Err(invalid("num_time_samples", "need at least two samples"));
    }
    let mut amplitudes = Vec::with_capacity(num_time_samples);
    for t in 0..num_time_samples {
        let states = match hover {
            Some((spec, spacing)) => {
                let p = sample_perturbations(spec, spacing, uavs.len(), rng);
                apply_hover(uavs, &p)?
            }
            None => uavs.to_vec(),
        };
        let h = sample_channel(&states, receiver, params, t as u64, rng)?;
        amplitudes.push(h.gains.iter().map(|z| z.norm()).collect());
    }
    let positions: Vec<Vec3> = uavs.iter().map(|u| u.position).collect();
    correlate_amplitudes(reference_uav, &positions, &amplitudes)
}
