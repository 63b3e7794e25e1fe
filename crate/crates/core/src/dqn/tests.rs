use std::f64::consts::PI;

use rand::{Rng, SeedableRng};

use super::*;
use crate::beampattern::{steering_phases, AngularGrid, BeamWeights, ElementPattern};
use crate::geometry::{UavState, Vec3};
use crate::hover::{HoverSpec, Perturbation};
use crate::seed::{stream, SimRng};

const LAMBDA: f64 = 0.085_654_817_714_285_71;

fn linear_scenario(hover: HoverSpec, grid: usize) -> ReformScenario {
    let nominal: Vec<UavState> = (0..4)
        .map(|i| UavState::at(Vec3::new(i as f64, 0.0, 30.0)))
        .collect();
    let receiver = Vec3::new(50.0, 50.0, 300.0);
    let phases = steering_phases(&nominal, receiver, LAMBDA).unwrap();
    let weights = BeamWeights::new(vec![0.5; 4], phases).unwrap();
    ReformScenario::new(
        nominal,
        weights,
        ElementPattern::default(),
        AngularGrid::uniform(grid),
        LAMBDA,
        &hover,
        1.0,
    )
    .unwrap()
}

fn params(threshold: f64) -> EnvParams {
    EnvParams {
        position_step: 0.01,
        phase_step: PI / 64.0,
        eta_threshold: threshold,
        max_steps: 100,
        terminal_bonus: 1.0,
    }
}

fn transition(state: Vec<f64>, action: usize, reward: f64, terminal: bool) -> Transition {
    Transition {
        next_state: state.iter().map(|v| v * 0.5 + 0.1).collect(),
        state,
        action,
        reward,
        terminal,
    }
}

#[test]
fn zero_network_outputs_zero() {
    let net = QNetwork::zeros(&[3, 5, 4]).unwrap();
    assert_eq!(net.forward(&[0.3, -2.0, 7.0]).unwrap(), vec![0.0; 4]);
}

#[test]
fn identity_layer_passes_state_through() {
    let mut net = QNetwork::zeros(&[3, 3]).unwrap();
    for i in 0..3 {
        let w = net.weight_index(0, i, i);
        net.params_mut()[w] = 1.0;
    }
    let s = [0.25, -1.5, 4.0];
    assert_eq!(net.forward(&s).unwrap(), s.to_vec());
}

#[test]
fn hand_set_two_two_one_network() {
    // h = relu([1 -1; 2 0.5] s + [0, -1]), q = 3 h0 - h1 + 0.5
    let mut net = QNetwork::zeros(&[2, 2, 1]).unwrap();
    let set = |net: &mut QNetwork, idx: usize, v: f64| net.params_mut()[idx] = v;
    let (w, b) = (
        |l, o, i| QNetwork::zeros(&[2, 2, 1]).unwrap().weight_index(l, o, i),
        |l, o| QNetwork::zeros(&[2, 2, 1]).unwrap().bias_index(l, o),
    );
    set(&mut net, w(0, 0, 0), 1.0);
    set(&mut net, w(0, 0, 1), -1.0);
    set(&mut net, w(0, 1, 0), 2.0);
    set(&mut net, w(0, 1, 1), 0.5);
    set(&mut net, b(0, 1), -1.0);
    set(&mut net, w(1, 0, 0), 3.0);
    set(&mut net, w(1, 0, 1), -1.0);
    set(&mut net, b(1, 0), 0.5);
    // s = (2, 1): h = relu(1, 3.5) ; q = 3 - 3.5 + 0.5 = 0
    assert_eq!(net.forward(&[2.0, 1.0]).unwrap(), vec![0.0]);
    // s = (1, 2): h = relu(-1, 2) = (0, 2) ; q = -2 + 0.5
    assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![-1.5]);
}

#[test]
fn forward_rejects_wrong_dimension() {
    let net = QNetwork::zeros(&[3, 2]).unwrap();
    assert_eq!(
        net.forward(&[1.0]),
        Err(crate::Error::LengthMismatch {
            expected: 3,
            found: 1
        })
    );
}

#[test]
fn bellman_examples() {
    assert_eq!(bellman_target(0.5, 1.0, 2.0, 0.05, 0.9), 0.6175);
    assert_eq!(bellman_target(0.75, 0.5, 9.0, 1.0, 0.0), 1.25);
    assert_eq!(bellman_target(1.5, 0.0, 1.5, 0.3, 1.0), 1.5);
}

#[test]
fn loss_examples() {
    assert_eq!(dqn_loss(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
    assert_eq!(dqn_loss(&[0.0], &[2.0]).unwrap(), 4.0);
    assert_eq!(dqn_loss(&[1.0, 2.0], &[0.0, 4.0]).unwrap(), 2.5);
    assert!(dqn_loss(&[], &[]).is_err());
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = SimRng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n_in = rng.random_range(1..5);
        let hidden = rng.random_range(1..6);
        let n_out = rng.random_range(1..5);
        let mut net = QNetwork::random(&[n_in, hidden, hidden + 1, n_out], &mut rng).unwrap();
        // Generic biases keep pre-activations off the rectifier kink.
        for p in net.params_mut() {
            *p += rng.random_range(-0.5..0.5);
        }
        let b = rng.random_range(1..5);
        let states: Vec<Vec<f64>> = (0..b)
            .map(|_| (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let actions: Vec<usize> = (0..b).map(|_| rng.random_range(0..n_out)).collect();
        let targets: Vec<f64> = (0..b).map(|_| rng.random_range(-2.0..2.0)).collect();
        let refs: Vec<&[f64]> = states.iter().map(|s| s.as_slice()).collect();
        let (_, grad) = net.loss_and_gradient(&refs, &actions, &targets).unwrap();
        let h = 1e-6;
        for p in 0..net.params().len() {
            let mut plus = net.clone();
            plus.params_mut()[p] += h;
            let mut minus = net.clone();
            minus.params_mut()[p] -= h;
            let lp = plus.loss_and_gradient(&refs, &actions, &targets).unwrap().0;
            let lm = minus
                .loss_and_gradient(&refs, &actions, &targets)
                .unwrap()
                .0;
            let fd = (lp - lm) / (2.0 * h);
            worst = worst.max(relative_error(grad[p], fd));
        }
    }
    assert!(worst < 1e-5, "max relative error {worst}");
}

#[test]
fn update_is_noop_when_targets_match() {
    let mut rng = SimRng::seed_from_u64(2);
    let mut net = QNetwork::random(&[3, 4, 2], &mut rng).unwrap();
    let before = net.clone();
    // Terminal, reward equal to the prediction: the target equals Q.
    let s = vec![0.1, -0.4, 0.9];
    let q = net.forward(&s).unwrap()[1];
    let t = transition(s, 1, 0.9 * q, true);
    let loss = backward_and_update(&mut net, &[&t], &AgentConfig::default(), 0, None).unwrap();
    assert_eq!(loss, 0.0);
    assert_eq!(net, before);
}

#[test]
fn single_parameter_update_matches_hand_calculus() {
    let mut net = QNetwork::zeros(&[1, 1]).unwrap();
    let w = net.weight_index(0, 0, 0);
    net.params_mut()[w] = 0.8;
    let config = AgentConfig::default();
    let s = 2.0;
    let t = transition(vec![s], 0, 1.0, true);
    let pred = 1.6;
    let target = bellman_target(pred, 1.0, 0.0, 0.05, 0.9);
    let varpi = config.step_size(0);
    let loss = backward_and_update(&mut net, &[&t], &config, 0, None).unwrap();
    assert_eq!(loss, (pred - target) * (pred - target));
    let expected_w = 0.8 - 2.0 * varpi * (pred - target) * s;
    assert!((net.params()[w] - expected_w).abs() < 1e-15);
    assert!((net.params()[net.bias_index(0, 0)] + 2.0 * varpi * (pred - target)).abs() < 1e-15);
}

#[test]
fn step_size_decays_harmonically() {
    let c = AgentConfig::default();
    assert_eq!(c.step_size(0), 0.05);
    assert_eq!(c.step_size(1000), 0.025);
    let constant = AgentConfig {
        step_decay: None,
        ..AgentConfig::default()
    };
    assert_eq!(constant.step_size(123_456), 0.05);
}

#[test]
fn empty_batch_is_an_error() {
    let mut net = QNetwork::zeros(&[1, 1]).unwrap();
    assert!(backward_and_update(&mut net, &[], &AgentConfig::default(), 0, None).is_err());
}

fn net_with_output_biases(q: &[f64]) -> QNetwork {
    let mut net = QNetwork::zeros(&[2, q.len()]).unwrap();
    for (i, &v) in q.iter().enumerate() {
        let b = net.bias_index(0, i);
        net.params_mut()[b] = v;
    }
    net
}

#[test]
fn greedy_choice_and_tie_break() {
    let mut rng = stream(0, "eps");
    let net = net_with_output_biases(&[1.0, 3.0, 2.0]);
    assert_eq!(epsilon_greedy(&net, &[0.0, 0.0], 0.0, &mut rng).unwrap(), 1);
    let tied = net_with_output_biases(&[2.0, 2.0, 1.0]);
    assert_eq!(
        epsilon_greedy(&tied, &[0.0, 0.0], 0.0, &mut rng).unwrap(),
        0
    );
}

#[test]
fn greedy_choice_invariant_to_constant_shift() {
    let q = [0.3, -1.0, 0.9, 0.9, 0.2];
    let shifted: Vec<f64> = q.iter().map(|v| v + 17.25).collect();
    let mut rng = stream(0, "eps");
    assert_eq!(
        epsilon_greedy(&net_with_output_biases(&q), &[1.0, 1.0], 0.0, &mut rng).unwrap(),
        epsilon_greedy(
            &net_with_output_biases(&shifted),
            &[1.0, 1.0],
            0.0,
            &mut rng
        )
        .unwrap()
    );
}

#[test]
fn full_exploration_is_uniform() {
    let net = net_with_output_biases(&[5.0, 0.0, 0.0, 0.0]);
    let mut rng = stream(5, "eps");
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[epsilon_greedy(&net, &[0.0, 0.0], 1.0, &mut rng).unwrap()] += 1;
    }
    for c in counts {
        let f = c as f64 / n as f64;
        assert!((f - 0.25).abs() < 0.02 * 0.25, "frequency {f}");
    }
}

#[test]
fn action_encoding_round_trips() {
    for a in 0..32 {
        let d = Action::decode(a, 4).unwrap();
        assert_eq!(d.encode(), a);
    }
    let d = Action::decode(11, 4).unwrap();
    assert_eq!(
        d,
        Action {
            uav: 1,
            control: Control::Y,
            positive: false
        }
    );
    assert_eq!(
        Action::decode(32, 4),
        Err(crate::Error::InvalidAction {
            action: 32,
            count: 32
        })
    );
}

#[test]
fn zero_perturbation_is_done_at_reset() {
    let sc = linear_scenario(HoverSpec::still(), 16);
    let env = ReformEnv::new(&sc, params(0.0), vec![Perturbation::ZERO; 4]).unwrap();
    assert_eq!(env.eta(), 0.0);
    assert!(env.is_done());
    assert_eq!(env.observation().len(), sc.state_dim());
}

#[test]
fn inverse_action_cancels_a_single_step() {
    let sc = linear_scenario(HoverSpec::still(), 16);
    let mut perts = vec![Perturbation::ZERO; 4];
    perts[1].displacement.x = 0.01;
    let mut env = ReformEnv::new(&sc, params(1e-9), perts).unwrap();
    let before = env.eta();
    assert!(before > 0.0);
    let a = Action {
        uav: 1,
        control: Control::X,
        positive: false,
    };
    let out = env.step(a.encode()).unwrap();
    assert_eq!(out.eta, 0.0);
    assert!(out.done && out.success);
    assert_eq!(out.reward, before + 1.0);
}

#[test]
fn moving_away_from_nominal_is_penalized() {
    let sc = linear_scenario(HoverSpec::still(), 16);
    let mut perts = vec![Perturbation::ZERO; 4];
    perts[2].displacement.z = 0.002;
    let mut env = ReformEnv::new(&sc, params(1e-12), perts).unwrap();
    let a = Action {
        uav: 2,
        control: Control::Z,
        positive: true,
    };
    assert!(env.step(a.encode()).unwrap().reward < 0.0);
}

#[test]
fn cached_eta_matches_full_evaluation_and_rewards_telescope() {
    let sc = linear_scenario(HoverSpec::default(), 24);
    let mut rng = stream(8, "env");
    let perts = sc.sample_perturbations(&mut rng);
    let mut env = ReformEnv::new(&sc, params(1e-12), perts).unwrap();
    let initial = env.eta();
    let mut total = 0.0;
    for _ in 0..40 {
        let out = env.step(rng.random_range(0..sc.num_actions())).unwrap();
        total += out.reward;
        assert_eq!(
            out.eta,
            sc.eta(&env.current_states(), &env.phase_offsets()).unwrap()
        );
    }
    assert!((total - (initial - env.eta())).abs() < 1e-12);
}

#[test]
fn threshold_calibration() {
    let still = linear_scenario(HoverSpec::still(), 16);
    assert_eq!(
        calibrate_threshold(&still, 10, 0.05, &mut stream(1, "cal")).unwrap(),
        0.0
    );

    let sc = linear_scenario(HoverSpec::default(), 16);
    let mut probes: Vec<f64> = {
        let mut rng = stream(1, "cal");
        (0..20)
            .map(|_| {
                sc.perturbed_eta(&sc.sample_perturbations(&mut rng))
                    .unwrap()
            })
            .collect()
    };
    let min = calibrate_threshold(&sc, 20, 0.0, &mut stream(1, "cal")).unwrap();
    probes.sort_by(f64::total_cmp);
    assert_eq!(min, probes[0]);

    let mut rng = stream(2, "cal");
    let th = calibrate_threshold(&sc, 100, 0.05, &mut rng).unwrap();
    let mut rng = stream(2, "cal");
    let etas: Vec<f64> = (0..100)
        .map(|_| {
            sc.perturbed_eta(&sc.sample_perturbations(&mut rng))
                .unwrap()
        })
        .collect();
    assert!(th < crate::numeric::median(&etas));
    assert!(calibrate_threshold(&sc, 1, 0.5, &mut rng).is_err());
}

fn small_config() -> AgentConfig {
    AgentConfig {
        hidden_layers: vec![16],
        episodes: 4,
        max_steps: 10,
        batch_size: 8,
        ..AgentConfig::default()
    }
}

#[test]
fn huge_threshold_ends_every_episode_at_reset() {
    let sc = linear_scenario(HoverSpec::default(), 16);
    let config = AgentConfig {
        eta_threshold: Some(1e9),
        ..small_config()
    };
    let log = train(&sc, &config, 3).unwrap();
    assert!(log.losses.is_empty());
    assert!(log.episodes.iter().all(|e| e.steps == 0));
}

#[test]
fn training_is_deterministic() {
    let sc = linear_scenario(HoverSpec::default(), 16);
    let a = train(&sc, &small_config(), 9).unwrap();
    let b = train(&sc, &small_config(), 9).unwrap();
    assert!(!a.losses.is_empty());
    assert_eq!(a.losses, b.losses);
    assert_eq!(a.episodes, b.episodes);
    assert_eq!(a.net, b.net);
    assert_eq!(a.episodes.len(), 4);
    assert!(a.episodes.windows(2).all(|w| w[1].epsilon <= w[0].epsilon));
}

#[test]
fn corrections_are_zero_without_perturbation() {
    let sc = linear_scenario(HoverSpec::still(), 16);
    let net = QNetwork::random(
        &small_config().layer_sizes(&sc),
        &mut SimRng::seed_from_u64(1),
    )
    .unwrap();
    let out = propose_corrections(&net, &sc, &[Perturbation::ZERO; 4], params(0.0)).unwrap();
    assert!(out.corrections.iter().all(|c| *c == Correction::default()));
    assert_eq!(out.final_eta, 0.0);
    assert_eq!(out.states, sc.nominal);
}

#[test]
fn rollout_never_worse_than_start() {
    let sc = linear_scenario(HoverSpec::default(), 16);
    let net = QNetwork::random(
        &small_config().layer_sizes(&sc),
        &mut SimRng::seed_from_u64(4),
    )
    .unwrap();
    let perts = sc.sample_perturbations(&mut stream(4, "p"));
    let out = propose_corrections(&net, &sc, &perts, params(1e-12)).unwrap();
    assert!(out.final_eta <= out.initial_eta);
    assert_eq!(
        out.final_eta,
        sc.eta(&out.states, &out.phase_offsets).unwrap()
    );
}

#[test]
fn checkpoint_round_trip() {
    let net = QNetwork::random(&[3, 4, 2], &mut SimRng::seed_from_u64(6)).unwrap();
    let cp = Checkpoint::new(&net, "abc123");
    let back = Checkpoint::from_json(&cp.to_json()).unwrap();
    assert_eq!(back.network().unwrap(), net);
    assert_eq!(back.config_hash, "abc123");
}

#[test]
fn checkpoint_rejects_foreign_documents() {
    let net = QNetwork::zeros(&[1, 1]).unwrap();
    let mut cp = Checkpoint::new(&net, "h");
    cp.format = "other".into();
    assert!(matches!(
        Checkpoint::from_json(&cp.to_json()),
        Err(crate::Error::Checkpoint(_))
    ));
    let mut cp = Checkpoint::new(&net, "h");
    cp.version = 7;
    assert!(matches!(
        Checkpoint::from_json(&cp.to_json()),
        Err(crate::Error::Checkpoint(_))
    ));
    assert!(Checkpoint::from_json("{").is_err());
    let mut cp = Checkpoint::new(&net, "h");
    cp.params.pop();
    assert!(Checkpoint::from_json(&cp.to_json())
        .unwrap()
        .network()
        .is_err());
}

#[test]
fn config_validation_names_the_key() {
    let bad = AgentConfig {
        learning_rate: 0.0,
        ..AgentConfig::default()
    };
    assert!(bad
        .validate()
        .unwrap_err()
        .to_string()
        .contains("learning_rate"));
    let bad = AgentConfig {
        batch_size: 20_000,
        ..AgentConfig::default()
    };
    assert!(bad
        .validate()
        .unwrap_err()
        .to_string()
        .contains("batch_size"));
    let bad = AgentConfig {
        eta_threshold: Some(0.0),
        ..AgentConfig::default()
    };
    assert!(bad
        .validate()
        .unwrap_err()
        .to_string()
        .contains("eta_threshold"));
}
