//! Building blocks for the figure-style studies: linear test arrays,
//! pattern cuts, and Monte Carlo distortion statistics.

use rand::Rng;

use crate::beampattern::{
    distorted_array_factor, distortion_eta, distortion_objective, steering_direction,
    steering_phases, AngularGrid, BeamWeights, ElementPattern, PatternSample,
};
use crate::error::Result;
use crate::geometry::{Direction, UavState, Vec3};
use crate::hover::{apply_hover, sample_perturbations, HoverSpec};

/// `k` unit-power UAVs along +X starting at `origin`.
pub fn linear_array(k: usize, spacing: f64, origin: Vec3) -> Vec<UavState> {
    (0..k)
        .map(|i| UavState::at(origin + Vec3::new(i as f64 * spacing, 0.0, 0.0)))
        .collect()
}

/// Unit amplitudes with geometric steering phases toward `receiver`.
pub fn unit_steering_weights(
    uavs: &[UavState],
    receiver: Vec3,
    wavelength: f64,
) -> Result<BeamWeights> {
    BeamWeights::new(
        vec![1.0; uavs.len()],
        steering_phases(uavs, receiver, wavelength)?,
    )
}

/// Elevation cut through azimuth `phi` of the pattern radiated by
/// `perturbed` (pass the nominal swarm for the ideal cut).
pub fn pattern_cut(
    nominal: &[UavState],
    perturbed: &[UavState],
    weights: &BeamWeights,
    element: &ElementPattern,
    phi: f64,
    thetas: &[f64],
    wavelength: f64,
) -> Result<Vec<PatternSample>> {
    let zero = vec![0.0; nominal.len()];
    thetas
        .iter()
        .map(|&theta| {
            let d = Direction { theta, phi };
            distorted_array_factor(
                nominal,
                perturbed,
                weights,
                element,
                d,
                (0.0, 0.0),
                &zero,
                wavelength,
            )
        })
        .collect()
}

/// Mean distortion over independent hover draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionStats {
    pub draws: usize,
    pub mean_j: f64,
    pub mean_eta: f64,
}

/// Monte Carlo `J` and `eta` for `draws` independent hover draws of the
/// whole swarm. No phase errors are applied.
#[allow(clippy::too_many_arguments)]
pub fn mean_distortion<R: Rng + ?Sized>(
    nominal: &[UavState],
    weights: &BeamWeights,
    element: &ElementPattern,
    grid: &AngularGrid,
    wavelength: f64,
    hover: &HoverSpec,
    spacing: f64,
    draws: usize,
    rng: &mut R,
) -> Result<DistortionStats> {
    let zero = vec![0.0; nominal.len()];
    let (mut sum_j, mut sum_eta) = (0.0, 0.0);
    for _ in 0..draws {
        let perts = sample_perturbations(hover, spacing, nominal.len(), rng);
        let perturbed = apply_hover(nominal, &perts)?;
        sum_j += distortion_objective(
            nominal, &perturbed, weights, &zero, element, grid, wavelength,
        )?;
        sum_eta += distortion_eta(
            nominal, &perturbed, weights, &zero, element, grid, wavelength,
        )?;
    }
    let n = draws.max(1) as f64;
    Ok(DistortionStats {
        draws,
        mean_j: sum_j / n,
        mean_eta: sum_eta / n,
    })
}

/// Azimuth of the steering direction, used to place pattern cuts.
pub fn steering_azimuth(uavs: &[UavState], receiver: Vec3) -> Result<f64> {
    Ok(steering_direction(uavs, receiver)?.phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;

    const LAMBDA: f64 = 0.085_654_817_714_285_71;

    #[test]
    fn linear_array_layout() {
        let a = linear_array(3, 0.5, Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(a[2].position, Vec3::new(2.0, 2.0, 3.0));
        assert!(a.iter().all(|u| u.power == 1.0));
    }

    #[test]
    fn ideal_cut_peaks_at_steering_direction() {
        let uavs = linear_array(4, 1.0, Vec3::new(0.0, 0.0, 30.0));
        let rx = Vec3::new(50.0, 50.0, 300.0);
        let w = unit_steering_weights(&uavs, rx, LAMBDA).unwrap();
        let d = steering_direction(&uavs, rx).unwrap();
        let cut = pattern_cut(
            &uavs,
            &uavs,
            &w,
            &ElementPattern::isotropic(),
            d.phi,
            &[d.theta],
            LAMBDA,
        )
        .unwrap();
        assert!((cut[0].magnitude - 4.0).abs() < 1e-9);
    }

    #[test]
    fn still_swarm_has_no_distortion() {
        let uavs = linear_array(2, 1.0, Vec3::new(0.0, 0.0, 30.0));
        let w = BeamWeights::uniform(2);
        let s = mean_distortion(
            &uavs,
            &w,
            &ElementPattern::default(),
            &AngularGrid::uniform(16),
            LAMBDA,
            &HoverSpec::still(),
            1.0,
            3,
            &mut stream(0, "t"),
        )
        .unwrap();
        assert_eq!(s.mean_j, 0.0);
        assert_eq!(s.mean_eta, 0.0);
    }
}
