#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "octo/assembly/policy_set.hpp"
#include "octo/env/environment.hpp"
#include "octo/marl/trainer.hpp"
#include "octo/robot/robot.hpp"

namespace octo::cli {

/// Everything a training run depends on. Serialized as JSON with these keys:
///
///   robot             preset name ("desk2", "full4")
///   model_file        robot model JSON (overrides robot when set)
///   task              trajectory | reorientation | mixed
///   arm_tasks         mixed only, one task name per arm
///   algorithm         mappo | ppo-central
///   seed              training seed
///   episode_length    control steps per episode
///   env               { dt, substeps, reward {w1..w5, epsilon_log},
///                       goal_ranges {base_attitude, ee_orientation},
///                       pd_gains {kp [..], kd [..]},
///                       disturbance {onset, body, force [3], torque [3],
///                                    duration, failed_arm} }
///   train             { gamma, clip, ppo_epochs, entropy_coef, actor_lr,
///                       critic_lr, max_env_steps, gae_lambda,
///                       num_minibatches, num_envs, target_sync_period,
///                       hidden [..], max_grad_norm, value_scale,
///                       initial_log_std, workers, critic_targets td|lambda }
///   checkpoint_every  iterations between checkpoints
///   eval              { episodes, seed }
///
/// Omitted keys keep their defaults. Unknown keys and bad values throw
/// ConfigurationError naming the dotted key.
struct RunConfig {
  std::string robot = "desk2";
  std::string model_file;
  env::TaskKind task = env::TaskKind::TrajectoryPlanning;
  std::vector<env::TaskKind> arm_tasks;
  int episode_length = 50;
  assembly::Algorithm algorithm = assembly::Algorithm::Mappo;
  std::uint64_t seed = 1;
  env::EnvConfig env;  // task is taken from the fields above
  marl::TrainConfig train;
  int checkpoint_every = 50;
  int eval_episodes = 30;
  std::uint64_t eval_seed = 1000;

  /// Defaults for a preset and task: the reorientation and mixed tasks use a
  /// smaller learning rate, desk2 caps training at 2e6 steps and full4 at
  /// 2e7.
  static RunConfig defaults(const std::string& robot, env::TaskKind task);

  /// Robot parameters: the model file when set, otherwise the preset.
  robot::RobotConfig robot_config() const;
  /// Task spec built from task, arm_tasks and the episode length.
  env::TaskSpec task_spec() const;
  /// `env` with the task spec filled in.
  env::EnvConfig env_config() const;
  /// Throws ConfigurationError naming the offending key.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Applies `j` on top of `base`, key by key.
RunConfig from_json(const nlohmann::json& j, RunConfig base);
RunConfig load_run_config(const std::string& path, RunConfig base);

/// Fingerprint of the canonical JSON form.
std::uint64_t run_config_hash(const RunConfig& config);

}  // namespace octo::cli
