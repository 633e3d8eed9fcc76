#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "octo/assembly/policy_set.hpp"
#include "octo/env/environment.hpp"
#include "octo/marl/ppo.hpp"

namespace octo::marl {

enum class CriticTargets { TemporalDifference, LambdaReturn };

struct TrainConfig {
  double gamma = 0.99;
  double clip = 0.2;
  int ppo_epochs = 5;
  double entropy_coef = 0.05;
  double actor_lr = 8e-4;
  double critic_lr = 8e-4;
  std::int64_t max_env_steps = 2'000'000;
  double gae_lambda = 0.95;
  int num_minibatches = 4;
  int num_envs = 8;
  int target_sync_period = 1;  // iterations
  std::vector<int> hidden{64, 64};
  double max_grad_norm = 0.5;
  double value_scale = 100.0;  // critics predict V / value_scale
  double initial_log_std = -0.5;
  int workers = 1;
  CriticTargets critic_targets = CriticTargets::TemporalDifference;

  /// Throws ConfigurationError on out-of-range values.
  void validate() const;
};

/// Per-iteration training metrics. Errors are taken at the last step of each
/// rollout episode and averaged over episodes; NaN when no arm has the
/// corresponding goal.
struct IterationMetrics {
  int iteration = 0;
  std::int64_t env_steps = 0;
  std::vector<double> agent_reward;  // mean per-step reward of each learner
  double mean_reward = 0.0;          // mean over learners
  double episode_return = 0.0;       // per-episode sum over steps and env agents
  double position_error = 0.0;       // m, trajectory arms
  double orientation_error = 0.0;    // rad, arms with an orientation agent
  double base_error = 0.0;           // rad, attitude error norm
  double collision_rate = 0.0;       // fraction of control steps in collision
  double critic_loss = 0.0;
  double entropy = 0.0;
};

/// CSV columns: iteration, env_steps, reward_<id>..., mean_reward,
/// episode_return, pos_err, ori_err, base_err, collision_rate, critic_loss,
/// entropy.
std::string metrics_header(const std::vector<int>& learner_ids);
std::string metrics_row(const IterationMetrics& m);

using EnvFactory = std::function<env::Environment()>;

/// MAPPO (one actor and one centralized critic per agent) or the centralized
/// PPO baseline (one actor over the global state, summed reward). Rollouts
/// use per-environment random streams, so results do not depend on the
/// worker count.
class Trainer {
 public:
  Trainer(const EnvFactory& factory, TrainConfig config, assembly::Algorithm algorithm, std::uint64_t seed,
          assembly::RobotStamp robot = {});

  const TrainConfig& config() const { return config_; }
  assembly::Algorithm algorithm() const { return algorithm_; }
  int iteration() const { return iteration_; }
  std::int64_t env_steps() const { return env_steps_; }
  bool finished() const { return env_steps_ >= config_.max_env_steps; }
  /// Learner ids used in the metrics columns (agent ids, or 0 for the
  /// central learner).
  std::vector<int> learner_ids() const;

  /// Collects one batch and runs the PPO epochs. Throws TrainingError if any
  /// parameter becomes non-finite.
  IterationMetrics iterate();
  std::vector<IterationMetrics> run(const std::function<void(const IterationMetrics&)>& on_iteration = {});

  assembly::PolicySet policy_set() const;

  /// Everything needed to continue bit-identically: counters, networks and
  /// optimizer moments.
  std::string save_state() const;
  void load_state(const std::string& bytes);

 private:
  struct Learner {
    int id = 0;
    int agent_index = -1;  // -1 = central
    nn::GaussianPolicy actor;
    nn::Mlp critic;
    nn::Mlp target;
    ActorOptimizer actor_opt;
    nn::AdamState critic_opt;
  };
  struct Episode;

  Episode collect(env::Environment& env, std::uint64_t goal_seed, std::uint64_t noise_seed) const;
  Eigen::VectorXd learner_input(const Learner& l, const std::vector<Eigen::VectorXd>& obs,
                                const Eigen::VectorXd& state) const;

  TrainConfig config_;
  assembly::Algorithm algorithm_;
  std::uint64_t seed_;
  assembly::RobotStamp robot_;
  std::vector<env::Environment> envs_;
  std::vector<Learner> learners_;
  int iteration_ = 0;
  std::int64_t env_steps_ = 0;
};

assembly::PolicySet mappo_train(const EnvFactory& factory, const TrainConfig& config, std::uint64_t seed,
                                std::vector<IterationMetrics>* metrics = nullptr);
assembly::PolicySet centralized_ppo_train(const EnvFactory& factory, const TrainConfig& config, std::uint64_t seed,
                                          std::vector<IterationMetrics>* metrics = nullptr);

}  // namespace octo::marl
