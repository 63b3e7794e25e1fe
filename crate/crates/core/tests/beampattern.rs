use std::f64::consts::PI;

use hoverbeam_core::beampattern::{
    aoa_sweep, hover_power_phase_map, linspace, lobe_metrics, steering_direction, steering_phases,
};
use hoverbeam_core::hover::sample_perturbations;
use hoverbeam_core::seed::stream;
use hoverbeam_core::sweeps::{linear_array, unit_steering_weights};
use hoverbeam_core::{
    apply_hover, array_factor, distorted_array_factor, distortion_objective, AngularGrid,
    BeamWeights, Direction, ElementPattern, FadingParams, HoverSpec, RotationAngles, UavState,
    Vec3,
};

fn lambda() -> f64 {
    FadingParams::default().wavelength()
}

fn rx() -> Vec3 {
    Vec3::new(50.0, 50.0, 300.0)
}

fn iso() -> ElementPattern {
    ElementPattern::isotropic()
}

fn at(x: f64, y: f64, z: f64) -> UavState {
    UavState::at(Vec3::new(x, y, z))
}

#[test]
fn single_isotropic_element_is_flat() {
    let uavs = [at(0.3, -0.2, 0.7)];
    let w = BeamWeights::uniform(1);
    for (theta, phi) in [(0.0, 0.0), (1.0, -2.0), (PI / 2.0, 3.0), (-2.5, 0.4)] {
        let b = array_factor(&uavs, &w, &iso(), Direction { theta, phi }, lambda()).unwrap();
        assert!((b.magnitude - 1.0).abs() < 1e-15);
    }
}

#[test]
fn half_wave_pair_nulls_endfire_and_adds_at_broadside() {
    let l = lambda();
    let uavs = [at(0.0, 0.0, 0.0), at(l / 2.0, 0.0, 0.0)];
    let w = BeamWeights::uniform(2);
    let endfire = array_factor(
        &uavs,
        &w,
        &iso(),
        Direction {
            theta: PI / 2.0,
            phi: 0.0,
        },
        l,
    )
    .unwrap();
    assert!(endfire.magnitude < 1e-12, "{}", endfire.magnitude);
    let broadside = array_factor(
        &uavs,
        &w,
        &iso(),
        Direction {
            theta: PI / 2.0,
            phi: PI / 2.0,
        },
        l,
    )
    .unwrap();
    assert!((broadside.magnitude - 2.0).abs() < 1e-12);
}

#[test]
fn steering_phase_examples() {
    let l = lambda();
    assert_eq!(
        steering_phases(&[at(0.0, 0.0, 0.0)], rx(), l).unwrap(),
        vec![0.0]
    );

    let pair = [at(0.0, 0.0, 30.0), at(1.0, 0.0, 30.0)];
    let phases = steering_phases(&pair, rx(), l).unwrap();
    let d = steering_direction(&pair, rx()).unwrap();
    let ux = d.theta.sin() * d.phi.cos();
    let uz = d.theta.cos();
    let k = 2.0 * PI / l;
    let expect0 = (-k * 30.0 * uz).rem_euclid(2.0 * PI);
    let expect1 = (-k * (ux + 30.0 * uz)).rem_euclid(2.0 * PI);
    assert!((phases[0] - expect0).abs() < 1e-9);
    assert!((phases[1] - expect1).abs() < 1e-9);
    let diff = (phases[1] - phases[0]).rem_euclid(2.0 * PI);
    assert!((diff - (-k * ux).rem_euclid(2.0 * PI)).abs() < 1e-9);
}

#[test]
fn steering_reaches_coherent_bound_and_never_exceeds_it() {
    let l = lambda();
    let uavs = linear_array(4, 1.0, Vec3::new(0.0, 0.0, 30.0));
    let w = unit_steering_weights(&uavs, rx(), l).unwrap();
    let d = steering_direction(&uavs, rx()).unwrap();
    let peak = array_factor(&uavs, &w, &iso(), d, l).unwrap();
    assert!((peak.magnitude - 4.0).abs() < 1e-9);
    let grid = AngularGrid::uniform(32);
    for &theta in &grid.thetas {
        for &phi in &grid.phis {
            let b = array_factor(
                &uavs,
                &w,
                &ElementPattern::default(),
                Direction { theta, phi },
                l,
            )
            .unwrap();
            assert!(b.magnitude <= 4.0 + 1e-12);
        }
    }
}

#[test]
fn common_phase_error_only_rotates_the_phase() {
    let l = lambda();
    let uavs = linear_array(3, 1.0, Vec3::new(0.0, 0.0, 30.0));
    let w = unit_steering_weights(&uavs, rx(), l).unwrap();
    let d = Direction {
        theta: 0.4,
        phi: 0.9,
    };
    let c = 0.7;
    let base =
        distorted_array_factor(&uavs, &uavs, &w, &iso(), d, (0.0, 0.0), &[0.0; 3], l).unwrap();
    let shifted =
        distorted_array_factor(&uavs, &uavs, &w, &iso(), d, (0.0, 0.0), &[c; 3], l).unwrap();
    assert!((base.magnitude - shifted.magnitude).abs() < 1e-12);
    let dphi = (shifted.phase - base.phase).rem_euclid(2.0 * PI);
    assert!((dphi - c).abs() < 1e-12);
}

#[test]
fn five_centimetre_hover_loses_coherence() {
    let l = lambda();
    let uavs = linear_array(4, 1.0, Vec3::new(0.0, 0.0, 30.0));
    let w = unit_steering_weights(&uavs, rx(), l).unwrap();
    let d = steering_direction(&uavs, rx()).unwrap();
    let mut rng = stream(11, "coherence");
    let spec = HoverSpec::displacement_only(0.05);
    let below = (0..1000)
        .filter(|_| {
            let perturbed =
                apply_hover(&uavs, &sample_perturbations(&spec, 1.0, 4, &mut rng)).unwrap();
            let b =
                distorted_array_factor(&uavs, &perturbed, &w, &iso(), d, (0.0, 0.0), &[0.0; 4], l)
                    .unwrap();
            b.magnitude < 4.0
        })
        .count();
    assert_eq!(below, 1000);
}

fn hovered(spec: &HoverSpec, seed: u64, uavs: &[UavState]) -> Vec<UavState> {
    apply_hover(
        uavs,
        &sample_perturbations(spec, 1.0, uavs.len(), &mut stream(seed, "j")),
    )
    .unwrap()
}

#[test]
fn objective_is_symmetric_and_zero_on_identity() {
    let l = lambda();
    let uavs = linear_array(4, 1.0, Vec3::new(0.0, 0.0, 30.0));
    let w = unit_steering_weights(&uavs, rx(), l).unwrap();
    let grid = AngularGrid::uniform(32);
    let el = ElementPattern::default();
    let zero = [0.0; 4];
    assert_eq!(
        distortion_objective(&uavs, &uavs, &w, &zero, &el, &grid, l).unwrap(),
        0.0
    );
    let other = hovered(&HoverSpec::from_fraction(0.3, 0.1), 3, &uavs);
    let ab = distortion_objective(&uavs, &other, &w, &zero, &el, &grid, l).unwrap();
    let ba = distortion_objective(&other, &uavs, &w, &zero, &el, &grid, l).unwrap();
    assert!(ab > 0.0);
    assert!((ab - ba).abs() <= 1e-12 * ab);
}

#[test]
fn larger_hover_distorts_more_on_average() {
    let l = lambda();
    let uavs = linear_array(4, 1.0, Vec3::new(0.0, 0.0, 30.0));
    let w = unit_steering_weights(&uavs, rx(), l).unwrap();
    let grid = AngularGrid::uniform(32);
    let el = ElementPattern::default();
    let mean = |cm: f64| {
        (0..100)
            .map(|s| {
                let p = hovered(&HoverSpec::displacement_only(cm / 100.0), s, &uavs);
                distortion_objective(&uavs, &p, &w, &[0.0; 4], &el, &grid, l).unwrap()
            })
            .sum::<f64>()
            / 100.0
    };
    assert!(mean(5.0) > mean(1.0));
}

#[test]
fn quadrature_converges_under_refinement() {
    let l = lambda();
    let uavs = linear_array(4, 1.0, Vec3::new(0.0, 0.0, 30.0));
    let w = unit_steering_weights(&uavs, rx(), l).unwrap();
    let el = ElementPattern::default();
    let p = hovered(&HoverSpec::from_fraction(0.3, 10f64.to_radians()), 5, &uavs);
    let j64 =
        distortion_objective(&uavs, &p, &w, &[0.0; 4], &el, &AngularGrid::uniform(64), l).unwrap();
    let j128 =
        distortion_objective(&uavs, &p, &w, &[0.0; 4], &el, &AngularGrid::uniform(128), l).unwrap();
    assert!((j64 - j128).abs() < 0.01 * j128, "{j64} vs {j128}");
}

#[test]
fn power_scaling_scales_magnitude_and_objective() {
    let l = lambda();
    let uavs = linear_array(3, 1.0, Vec3::new(0.0, 0.0, 30.0));
    let w = unit_steering_weights(&uavs, rx(), l).unwrap();
    let el = ElementPattern::default();
    let grid = AngularGrid::uniform(24);
    let p = hovered(&HoverSpec::displacement_only(0.03), 9, &uavs);
    let c = 3.0;
    let scale = |v: &[UavState]| -> Vec<UavState> {
        v.iter().map(|u| UavState { power: c, ..*u }).collect()
    };
    let d = Direction {
        theta: 0.7,
        phi: 0.2,
    };
    let b1 = array_factor(&uavs, &w, &el, d, l).unwrap();
    let bc = array_factor(&scale(&uavs), &w, &el, d, l).unwrap();
    assert!((bc.magnitude - c * b1.magnitude).abs() < 1e-12);
    let j1 = distortion_objective(&uavs, &p, &w, &[0.0; 3], &el, &grid, l).unwrap();
    let jc = distortion_objective(&scale(&uavs), &scale(&p), &w, &[0.0; 3], &el, &grid, l).unwrap();
    assert!((jc - c * c * j1).abs() < 1e-9 * jc);
}

#[test]
fn aoa_single_element_is_flat_and_spacing_narrows_the_lobe() {
    let l = lambda();
    let thetas = linspace(-PI / 2.0, PI / 2.0, 721);
    let one = aoa_sweep(
        &[at(0.0, 0.0, 0.0)],
        &BeamWeights::uniform(1),
        &iso(),
        0.0,
        &thetas,
        l,
    )
    .unwrap();
    assert!(one.iter().all(|s| (s.magnitude - 1.0).abs() < 1e-15));

    let metrics = |spacing: f64| {
        let uavs = linear_array(4, spacing * l, Vec3::new(0.0, 0.0, 0.0));
        let cut = aoa_sweep(&uavs, &BeamWeights::uniform(4), &iso(), 0.0, &thetas, l).unwrap();
        let mags: Vec<f64> = cut.iter().map(|s| s.magnitude).collect();
        lobe_metrics(&thetas, &mags, 0.0, -10.0).unwrap()
    };
    let (half, two) = (metrics(0.5), metrics(2.0));
    assert!(two.main_lobe_width < half.main_lobe_width);
    assert!(two.sidelobes_above > half.sidelobes_above);
}

#[test]
fn hover_map_examples() {
    let l = lambda();
    let uavs = linear_array(4, 1.0, Vec3::new(0.0, 0.0, 0.0));
    let receiver = Vec3::new(0.0, 0.0, 50.0);
    let w = unit_steering_weights(&uavs, receiver, l).unwrap();
    let grid: Vec<f64> = [-60.0f64, 0.0, 30.0, 60.0]
        .iter()
        .map(|d| d.to_radians())
        .collect();

    let flat = hover_power_phase_map(&uavs, &w, &iso(), receiver, &grid, &grid, l).unwrap();
    let first = flat[0][0].power_db;
    assert!(flat
        .iter()
        .flatten()
        .all(|c| (c.power_db - first).abs() < 1e-9));

    let map = hover_power_phase_map(
        &uavs,
        &w,
        &ElementPattern::default(),
        receiver,
        &grid,
        &grid,
        l,
    )
    .unwrap();
    let d = steering_direction(&uavs, receiver).unwrap();
    let still = array_factor(&uavs, &w, &ElementPattern::default(), d, l).unwrap();
    assert!((map[1][1].power_db - 20.0 * still.magnitude.log10()).abs() < 1e-12);
    assert!(map[3][1].power_db < map[1][1].power_db);
}

#[test]
fn rotation_changes_only_element_gain() {
    let l = lambda();
    let uavs = linear_array(2, 1.0, Vec3::new(0.0, 0.0, 30.0));
    let w = unit_steering_weights(&uavs, rx(), l).unwrap();
    let tilted: Vec<UavState> = uavs
        .iter()
        .map(|u| UavState {
            rotation: RotationAngles::new(0.0, 0.3, -0.2),
            ..*u
        })
        .collect();
    let d = Direction {
        theta: 0.5,
        phi: 1.1,
    };
    let a =
        distorted_array_factor(&uavs, &tilted, &w, &iso(), d, (0.0, 0.0), &[0.0; 2], l).unwrap();
    let b = array_factor(&uavs, &w, &iso(), d, l).unwrap();
    assert!((a.magnitude - b.magnitude).abs() < 1e-12);
}
