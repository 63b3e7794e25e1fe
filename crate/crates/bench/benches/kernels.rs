use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hoverbeam_core::beampattern::steering_phases;
use hoverbeam_core::hover::sample_perturbations;
use hoverbeam_core::seed::stream;
use hoverbeam_core::{
    apply_hover, array_factor, distortion_objective, AngularGrid, BeamWeights, Direction,
    ElementPattern, FadingParams, HoverSpec, ScenarioConfig, Vec3, World,
};

fn linear(k: usize) -> Vec<hoverbeam_core::UavState> {
    hoverbeam_core::sweeps::linear_array(k, 1.0, Vec3::new(0.0, 0.0, 30.0))
}

fn bench_array_factor(c: &mut Criterion) {
    let lambda = FadingParams::default().wavelength();
    let uavs = linear(8);
    let rx = Vec3::new(50.0, 50.0, 300.0);
    let w = BeamWeights::new(vec![1.0; 8], steering_phases(&uavs, rx, lambda).unwrap()).unwrap();
    let element = ElementPattern::default();
    c.bench_function("array_factor_k8", |b| {
        b.iter(|| {
            array_factor(
                black_box(&uavs),
                &w,
                &element,
                Direction::new(0.3, 0.7),
                lambda,
            )
            .unwrap()
        })
    });
}

fn bench_distortion(c: &mut Criterion) {
    let lambda = FadingParams::default().wavelength();
    let uavs = linear(4);
    let rx = Vec3::new(50.0, 50.0, 300.0);
    let w = BeamWeights::new(vec![0.5; 4], steering_phases(&uavs, rx, lambda).unwrap()).unwrap();
    let perts = sample_perturbations(
        &HoverSpec::from_fraction(0.3, 10f64.to_radians()),
        1.0,
        4,
        &mut stream(1, "bench"),
    );
    let perturbed = apply_hover(&uavs, &perts).unwrap();
    let grid = AngularGrid::uniform(64);
    let element = ElementPattern::default();
    let zero = [0.0; 4];
    c.bench_function("distortion_objective_64x64_k4", |b| {
        b.iter(|| {
            distortion_objective(
                &uavs,
                black_box(&perturbed),
                &w,
                &zero,
                &element,
                &grid,
                lambda,
            )
            .unwrap()
        })
    });
}

fn bench_selection(c: &mut Criterion) {
    let cfg = ScenarioConfig::from_json(
        r#"{"layout": {"l_u": 3, "c_u": 3, "r_u": 3, "spacing_delta": 1.0}, "receiver": [50, 50, 300]}"#,
    )
    .unwrap();
    let world = World::build(&cfg, 7).unwrap();
    let mut group = c.benchmark_group("selection");
    group.sample_size(10);
    group.bench_function("n27_k4", |b| b.iter(|| world.select(black_box(4)).unwrap()));
    group.finish();
}

criterion_group!(
    benches,
    bench_array_factor,
    bench_distortion,
    bench_selection
);
criterion_main!(benches);
