use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use hoverbeam_core::beampattern::{
    aoa_sweep as aoa_cut, hover_power_phase_map, linspace, lobe_metrics, steering_direction,
};
use hoverbeam_core::channel::distance_fading_correlation;
use hoverbeam_core::dqn::{
    evaluate_policy, initial_network, resolve_threshold, train as train_agent, Checkpoint,
    EvalRecord, QNetwork, ReformScenario,
};
use hoverbeam_core::interference::heatmap as interference_heatmap;
use hoverbeam_core::seed::stream;
use hoverbeam_core::sweeps::{linear_array, mean_distortion, pattern_cut, unit_steering_weights};
use hoverbeam_core::{
    apply_hover, selected_reform_scenario, AngularGrid, BeamWeights, ElementPattern, HoverSpec,
    PatternSample, ScenarioConfig, Vec3, World,
};
use serde::Serialize;

use crate::{Output, RunError};

type Res = Result<(), RunError>;

const ARTIFACT_DB_FLOOR: f64 = -300.0;

fn db20(magnitude: f64) -> f64 {
    (20.0 * magnitude.log10()).max(ARTIFACT_DB_FLOOR)
}

/// Compact label for a real-valued parameter in a file name.
fn label(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

fn wavelength(cfg: &ScenarioConfig) -> f64 {
    cfg.channel.params().wavelength()
}

fn origin(cfg: &ScenarioConfig) -> Vec3 {
    cfg.layout.origin.into()
}

#[derive(Serialize)]
struct PatternRow {
    theta_rad: f64,
    phi_rad: f64,
    magnitude_db: f64,
    phase_rad: f64,
}

fn pattern_rows(samples: &[PatternSample]) -> Vec<PatternRow> {
    samples
        .iter()
        .map(|s| PatternRow {
            theta_rad: s.direction.theta,
            phi_rad: s.direction.phi,
            magnitude_db: db20(s.magnitude),
            phase_rad: s.phase,
        })
        .collect()
}

#[derive(Serialize)]
struct MapRow {
    pitch_deg: f64,
    roll_deg: f64,
    power_db: f64,
    phase_rad: f64,
}

fn symmetric_degrees(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step).floor() as i64;
    (-n..=n).map(|i| i as f64 * step).collect()
}

pub fn hover_map(cfg: &ScenarioConfig, out: &mut Output) -> Res {
    let lambda = wavelength(cfg);
    let uavs = linear_array(cfg.k, cfg.layout.spacing_delta, origin(cfg));
    let weights = unit_steering_weights(&uavs, cfg.receiver(), lambda)?;
    let degrees = symmetric_degrees(cfg.sweeps.hover_map_max_deg, cfg.sweeps.hover_map_step_deg);
    let radians: Vec<f64> = degrees.iter().map(|d| d.to_radians()).collect();
    let map = hover_power_phase_map(
        &uavs,
        &weights,
        &cfg.element.pattern(),
        cfg.receiver(),
        &radians,
        &radians,
        lambda,
    )?;
    let rows: Vec<MapRow> = map
        .iter()
        .zip(&degrees)
        .flat_map(|(row, &pitch)| {
            row.iter().zip(&degrees).map(move |(c, &roll)| MapRow {
                pitch_deg: pitch,
                roll_deg: roll,
                power_db: c.power_db.max(ARTIFACT_DB_FLOOR),
                phase_rad: c.phase,
            })
        })
        .collect();
    out.write_csv("hover_map.csv", &rows)
}

#[derive(Serialize)]
struct DistortionRow {
    k: usize,
    displacement_cm: f64,
    draws: usize,
    mean_j: f64,
    mean_eta: f64,
}

pub fn displacement_pattern(cfg: &ScenarioConfig, out: &mut Output) -> Res {
    let lambda = wavelength(cfg);
    let sweeps = &cfg.sweeps;
    let element = cfg.element.pattern();
    let grid = AngularGrid::uniform(cfg.grid_size);
    let thetas = linspace(-PI, PI, sweeps.cut_points);
    let mut summary = Vec::new();
    for &k in &sweeps.displacement_k {
        let uavs = linear_array(k, cfg.layout.spacing_delta, origin(cfg));
        let weights = unit_steering_weights(&uavs, cfg.receiver(), lambda)?;
        let phi = steering_direction(&uavs, cfg.receiver())?.phi;
        let ideal = pattern_cut(&uavs, &uavs, &weights, &element, phi, &thetas, lambda)?;
        out.write_csv(&format!("pattern_k{k}_ideal.csv"), &pattern_rows(&ideal))?;
        for &cm in &sweeps.displacement_cm {
            let hover = HoverSpec::displacement_only(cm / 100.0);
            let tag = format!("k{k}_d{}cm", label(cm));
            let mut rng = stream(cfg.seed, &format!("displacement.pattern.{tag}"));
            let perts = hoverbeam_core::hover::sample_perturbations(
                &hover,
                cfg.layout.spacing_delta,
                k,
                &mut rng,
            );
            let perturbed = apply_hover(&uavs, &perts)?;
            let cut = pattern_cut(&uavs, &perturbed, &weights, &element, phi, &thetas, lambda)?;
            out.write_csv(&format!("pattern_{tag}.csv"), &pattern_rows(&cut))?;

            let stats = mean_distortion(
                &uavs,
                &weights,
                &element,
                &grid,
                lambda,
                &hover,
                cfg.layout.spacing_delta,
                sweeps.displacement_draws,
                &mut stream(cfg.seed, &format!("displacement.stats.k{k}")),
            )?;
            summary.push(DistortionRow {
                k,
                displacement_cm: cm,
                draws: stats.draws,
                mean_j: stats.mean_j,
                mean_eta: stats.mean_eta,
            });
        }
    }
    out.write_csv("distortion_summary.csv", &summary)
}

#[derive(Serialize)]
struct AoaSummaryRow {
    spacing_lambda: f64,
    main_lobe_width_rad: f64,
    sidelobes_above_10db: usize,
}

/// Normalized broadside cuts in the array plane, with lobe metrics.
pub fn aoa_study(
    k: usize,
    spacing_lambda: f64,
    wavelength: f64,
    points: usize,
) -> Result<(Vec<PatternSample>, f64, usize), hoverbeam_core::Error> {
    let uavs = linear_array(k, spacing_lambda * wavelength, Vec3::new(0.0, 0.0, 0.0));
    let thetas = linspace(-PI / 2.0, PI / 2.0, points);
    let cut = aoa_cut(
        &uavs,
        &BeamWeights::uniform(k),
        &ElementPattern::isotropic(),
        0.0,
        &thetas,
        wavelength,
    )?;
    let mags: Vec<f64> = cut.iter().map(|s| s.magnitude).collect();
    let metrics = lobe_metrics(&thetas, &mags, 0.0, -10.0)?;
    Ok((cut, metrics.main_lobe_width, metrics.sidelobes_above))
}

pub fn aoa_sweep(cfg: &ScenarioConfig, out: &mut Output) -> Res {
    let lambda = wavelength(cfg);
    let mut summary = Vec::new();
    for &s in &cfg.sweeps.aoa_spacings_lambda {
        let (cut, width, lobes) = aoa_study(cfg.sweeps.aoa_k, s, lambda, cfg.sweeps.cut_points)?;
        out.write_csv(&format!("aoa_s{}.csv", label(s)), &pattern_rows(&cut))?;
        summary.push(AoaSummaryRow {
            spacing_lambda: s,
            main_lobe_width_rad: width,
            sidelobes_above_10db: lobes,
        });
    }
    out.write_csv("aoa_summary.csv", &summary)
}

#[derive(Serialize)]
struct HeatRow {
    x_m: f64,
    y_m: f64,
    interference_dbm: f64,
}

pub fn heatmap(cfg: &ScenarioConfig, out: &mut Output) -> Res {
    let world = World::build(cfg, cfg.seed)?;
    let [nx, ny] = cfg.sweeps.heatmap_grid;
    let map = interference_heatmap(
        &world.field,
        cfg.sweeps.heatmap_plane_z,
        (nx, ny),
        &world.params,
    )?;
    let rows: Vec<HeatRow> = map
        .values
        .iter()
        .zip(&map.ys)
        .flat_map(|(row, &y)| {
            row.iter().zip(&map.xs).map(move |(&db, &x)| HeatRow {
                x_m: x,
                y_m: y,
                interference_dbm: db + 30.0,
            })
        })
        .collect();
    out.write_csv("heatmap.csv", &rows)
}

#[derive(Serialize)]
struct PearsonRow {
    pair_index: usize,
    relative_distance_m: f64,
    pearson_r: f64,
    time_samples: usize,
}

pub fn pearson(cfg: &ScenarioConfig, out: &mut Output) -> Res {
    let world = World::build(cfg, cfg.seed)?;
    let samples = cfg.sweeps.pearson_time_samples;
    let rows = distance_fading_correlation(
        cfg.sweeps.pearson_reference - 1,
        &world.uavs,
        world.receiver,
        &world.params,
        Some((&cfg.hover.spec(), cfg.layout.spacing_delta)),
        samples,
        &mut stream(cfg.seed, "pearson"),
    )?;
    let rows: Vec<PearsonRow> = rows
        .iter()
        .map(|r| PearsonRow {
            pair_index: r.pair_index + 1,
            relative_distance_m: r.relative_distance,
            pearson_r: r.pearson_r,
            time_samples: samples,
        })
        .collect();
    out.write_csv("pearson.csv", &rows)
}

#[derive(Serialize)]
struct SelectionArtifact {
    best_indices: Vec<usize>,
    best_sinr_db: f64,
    evaluated_count: u64,
    degenerate_count: u64,
    wall_time_s: f64,
    seed: u64,
}

pub fn select(cfg: &ScenarioConfig, out: &mut Output) -> Res {
    let started = Instant::now();
    let world = World::build(cfg, cfg.seed)?;
    let result = world.select(cfg.k)?;
    out.write_json(
        "selection.json",
        &SelectionArtifact {
            best_indices: result.best.indices.clone(),
            best_sinr_db: result.best_sinr_db,
            evaluated_count: result.evaluated_count,
            degenerate_count: result.degenerate_count,
            wall_time_s: started.elapsed().as_secs_f64(),
            seed: cfg.seed,
        },
    )
}

#[derive(Serialize)]
struct LossRow {
    update_index: usize,
    mse_loss: f64,
}

#[derive(Serialize)]
struct EpisodeRow {
    episode: usize,
    total_reward: f64,
    steps: usize,
    final_eta: f64,
    epsilon: f64,
}

#[derive(Serialize)]
struct TrainSummary {
    selected_indices: Vec<usize>,
    tolerance_fraction: Option<f64>,
    eta_threshold: f64,
    updates: usize,
    episodes: usize,
}

fn trained_network(
    cfg: &ScenarioConfig,
    scenario: &ReformScenario,
    out: &mut Output,
    indices: Vec<usize>,
) -> Result<QNetwork, RunError> {
    let log = train_agent(scenario, &cfg.agent, cfg.seed)?;
    let losses: Vec<LossRow> = log
        .losses
        .iter()
        .enumerate()
        .map(|(i, &mse_loss)| LossRow {
            update_index: i + 1,
            mse_loss,
        })
        .collect();
    let episodes: Vec<EpisodeRow> = log
        .episodes
        .iter()
        .map(|e| EpisodeRow {
            episode: e.episode,
            total_reward: e.total_reward,
            steps: e.steps,
            final_eta: e.final_eta,
            epsilon: e.epsilon,
        })
        .collect();
    out.write_csv("train_loss.csv", &losses)?;
    out.write_csv("train_episodes.csv", &episodes)?;
    let mut checkpoint = Checkpoint::new(&log.net, &cfg.hash()).to_json();
    checkpoint.push('\n');
    out.write("qnet.json", checkpoint.as_bytes())?;
    out.write_json(
        "train_summary.json",
        &TrainSummary {
            selected_indices: indices,
            tolerance_fraction: cfg.hover.tolerance_fraction,
            eta_threshold: log.eta_threshold,
            updates: log.losses.len(),
            episodes: log.episodes.len(),
        },
    )?;
    Ok(log.net)
}

pub fn train(cfg: &ScenarioConfig, out: &mut Output) -> Res {
    let (selection, scenario) = selected_reform_scenario(cfg, cfg.seed)?;
    trained_network(cfg, &scenario, out, selection.best.indices)?;
    Ok(())
}

#[derive(Serialize)]
struct EvalRow {
    policy: &'static str,
    draw: usize,
    initial_eta: f64,
    final_eta: f64,
}

#[derive(Serialize)]
struct PolicySummary {
    draws: usize,
    improved: usize,
    improved_fraction: f64,
    mean_initial_eta: f64,
    mean_final_eta: f64,
}

#[derive(Serialize)]
struct EvalSummary {
    checkpoint: String,
    eta_threshold: f64,
    trained: PolicySummary,
    untrained: PolicySummary,
}

/// Share of draws whose re-formed distortion is strictly below the start.
pub fn improved(records: &[EvalRecord]) -> usize {
    records
        .iter()
        .filter(|r| r.final_eta < r.initial_eta)
        .count()
}

fn summarize(records: &[EvalRecord]) -> PolicySummary {
    let n = records.len().max(1) as f64;
    let better = improved(records);
    PolicySummary {
        draws: records.len(),
        improved: better,
        improved_fraction: better as f64 / n,
        mean_initial_eta: records.iter().map(|r| r.initial_eta).sum::<f64>() / n,
        mean_final_eta: records.iter().map(|r| r.final_eta).sum::<f64>() / n,
    }
}

/// Reads a checkpoint if it was produced by this exact configuration.
fn matching_checkpoint(
    path: &Path,
    cfg: &ScenarioConfig,
    scenario: &ReformScenario,
) -> Result<Option<QNetwork>, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Checkpoint {
        path: path.to_path_buf(),
        source,
    })?;
    let cp = Checkpoint::from_json(&text)?;
    if cp.config_hash != cfg.hash() || cp.layer_sizes != cfg.agent.layer_sizes(scenario) {
        return Ok(None);
    }
    Ok(Some(cp.network()?))
}

pub fn reform_eval(cfg: &ScenarioConfig, checkpoint: Option<&Path>, out: &mut Output) -> Res {
    let (selection, scenario) = selected_reform_scenario(cfg, cfg.seed)?;
    let (net, source) = match checkpoint {
        Some(path) => {
            let net = matching_checkpoint(path, cfg, &scenario)?.ok_or_else(|| {
                RunError::Core(hoverbeam_core::Error::Checkpoint(format!(
                    "{} was produced by a different configuration",
                    path.display()
                )))
            })?;
            (net, path.display().to_string())
        }
        None => {
            let default = out.path("qnet.json");
            let cached = if default.exists() {
                matching_checkpoint(&default, cfg, &scenario)?
            } else {
                None
            };
            match cached {
                Some(net) => (net, "qnet.json".to_string()),
                None => (
                    trained_network(cfg, &scenario, out, selection.best.indices)?,
                    "trained".to_string(),
                ),
            }
        }
    };
    let threshold = resolve_threshold(&scenario, &cfg.agent, cfg.seed)?;
    let params = cfg.agent.env_params(scenario.spacing, threshold);
    let draws = cfg.sweeps.reform_draws;
    let trained = evaluate_policy(&net, &scenario, params, draws, cfg.seed)?;
    let baseline = initial_network(&scenario, &cfg.agent, cfg.seed)?;
    let untrained = evaluate_policy(&baseline, &scenario, params, draws, cfg.seed)?;

    let rows: Vec<EvalRow> = [("trained", &trained), ("untrained", &untrained)]
        .into_iter()
        .flat_map(|(policy, recs)| {
            recs.iter().map(move |r| EvalRow {
                policy,
                draw: r.draw + 1,
                initial_eta: r.initial_eta,
                final_eta: r.final_eta,
            })
        })
        .collect();
    out.write_csv("reform_eval.csv", &rows)?;
    out.write_json(
        "reform_summary.json",
        &EvalSummary {
            checkpoint: source,
            eta_threshold: threshold,
            trained: summarize(&trained),
            untrained: summarize(&untrained),
        },
    )
}
