//! Deep Q-learning for beam re-forming.

mod agent;
mod env;
mod network;
mod replay;

pub use agent::{
    argmax, backward_and_update, bellman_target, dqn_loss, epsilon_greedy, evaluate_policy,
    initial_network, minibatch_targets, propose_corrections, resolve_threshold, train, AgentConfig,
    EpisodeRecord, EvalRecord, ReformOutcome, TrainingLog,
};
pub use env::{
    calibrate_threshold, Action, Control, Correction, EnvParams, ReformEnv, ReformScenario,
    StepOutcome, ACTIONS_PER_UAV,
};
pub use network::{Checkpoint, QNetwork, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use replay::{ReplayBuffer, Transition};

#[cfg(test)]
mod tests;
