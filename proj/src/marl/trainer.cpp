#include "octo/marl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <thread>

#include "octo/common/errors.hpp"
#include "octo/common/rng.hpp"
#include "octo/marl/gae.hpp"
#include "octo/nn/serialize.hpp"

namespace octo::marl {

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigurationError("gamma must lie in (0, 1)");
  if (!(clip > 0.0)) throw ConfigurationError("clip must be positive");
  if (ppo_epochs < 1) throw ConfigurationError("ppo_epochs must be at least 1");
  if (!(entropy_coef >= 0.0)) throw ConfigurationError("entropy_coef must be non-negative");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigurationError("learning rates must be positive");
  if (max_env_steps < 1) throw ConfigurationError("max_env_steps must be positive");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigurationError("gae_lambda must lie in [0, 1]");
  if (num_minibatches < 1) throw ConfigurationError("num_minibatches must be at least 1");
  if (num_envs < 1) throw ConfigurationError("num_envs must be at least 1");
  if (target_sync_period < 1) throw ConfigurationError("target_sync_period must be at least 1");
  if (hidden.empty()) throw ConfigurationError("at least one hidden layer is required");
  for (int h : hidden) {
    if (h < 1) throw ConfigurationError("hidden layer sizes must be positive");
  }
  if (!(max_grad_norm >= 0.0)) throw ConfigurationError("max_grad_norm must be non-negative");
  if (!(value_scale > 0.0)) throw ConfigurationError("value_scale must be positive");
  if (workers < 1) throw ConfigurationError("workers must be at least 1");
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

constexpr std::uint32_t kStateMagic = 0x4e52544f;  // "OTRN"
constexpr std::uint32_t kStateVersion = 1;

bool all_finite(std::span<const double> p) {
  for (double v : p) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double mean_or_nan(double sum, int count) {
  return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string metrics_header(const std::vector<int>& learner_ids) {
  std::string h = "iteration,env_steps";
  for (int id : learner_ids) h += ",reward_" + std::to_string(id);
  h += ",mean_reward,episode_return,pos_err,ori_err,base_err,collision_rate,critic_loss,entropy";
  return h;
}

std::string metrics_row(const IterationMetrics& m) {
  std::string r = std::to_string(m.iteration) + "," + std::to_string(m.env_steps);
  for (double v : m.agent_reward) r += "," + fmt(v);
  for (double v : {m.mean_reward, m.episode_return, m.position_error, m.orientation_error, m.base_error,
                   m.collision_rate, m.critic_loss, m.entropy}) {
    r += "," + fmt(v);
  }
  return r;
}

struct Trainer::Episode {
  std::vector<Eigen::MatrixXd> inputs;  // per learner, one column per step
  std::vector<Eigen::MatrixXd> pre_squash;
  std::vector<Eigen::MatrixXd> noise;
  std::vector<Eigen::VectorXd> log_prob;
  std::vector<Eigen::VectorXd> rewards;
  Eigen::MatrixXd states;  // T + 1 columns
  double episode_return = 0.0;
  double position_error = 0.0;
  int position_arms = 0;
  double orientation_error = 0.0;
  int orientation_arms = 0;
  double base_error = 0.0;
  int collisions = 0;
};

Trainer::Trainer(const EnvFactory& factory, TrainConfig config, assembly::Algorithm algorithm, std::uint64_t seed,
                 assembly::RobotStamp robot)
    : config_(std::move(config)), algorithm_(algorithm), seed_(seed), robot_(std::move(robot)) {
  config_.validate();
  for (int e = 0; e < config_.num_envs; ++e) envs_.push_back(factory());
  const env::Environment& proto = envs_.front();
  const int g = proto.global_state_size();
  auto make = [&](int id, int agent_index, int in, int out) {
    Learner l;
    l.id = id;
    l.agent_index = agent_index;
    l.actor = nn::GaussianPolicy(in, config_.hidden, out, config_.initial_log_std);
    Rng actor_rng(Rng::derive(seed_, {0, static_cast<std::uint64_t>(id)}));
    l.actor.initialize(actor_rng);
    std::vector<int> sizes{g};
    sizes.insert(sizes.end(), config_.hidden.begin(), config_.hidden.end());
    sizes.push_back(1);
    l.critic = nn::Mlp(sizes);
    Rng critic_rng(Rng::derive(seed_, {4, static_cast<std::uint64_t>(id)}));
    l.critic.initialize(critic_rng, 1.0);
    l.target = l.critic;
    l.actor_opt = ActorOptimizer(l.actor, config_.actor_lr);
    l.critic_opt = nn::AdamState(l.critic.num_params(), config_.critic_lr);
    learners_.push_back(std::move(l));
  };
  if (algorithm_ == assembly::Algorithm::Mappo) {
    for (int i = 0; i < proto.num_agents(); ++i) {
      const env::AgentSpec& a = proto.agents()[static_cast<std::size_t>(i)];
      make(a.id, i, env::kObservationSize, a.action_size());
    }
  } else {
    make(0, -1, g - 1, proto.tree().num_joints());
  }
}

std::vector<int> Trainer::learner_ids() const {
  std::vector<int> ids;
  for (const Learner& l : learners_) ids.push_back(l.id);
  return ids;
}

Eigen::VectorXd Trainer::learner_input(const Learner& l, const std::vector<Eigen::VectorXd>& obs,
                                       const Eigen::VectorXd& state) const {
  if (l.agent_index >= 0) return obs[static_cast<std::size_t>(l.agent_index)];
  return state.head(state.size() - 1);
}

Trainer::Episode Trainer::collect(env::Environment& env, std::uint64_t goal_seed, std::uint64_t noise_seed) const {
  const int steps = env.config().task.episode_length;
  const std::size_t nl = learners_.size();
  Episode ep;
  ep.states.resize(env.global_state_size(), steps + 1);
  for (const Learner& l : learners_) {
    const int in = l.actor.obs_size();
    const int out = l.actor.action_size();
    ep.inputs.emplace_back(in, steps);
    ep.pre_squash.emplace_back(out, steps);
    ep.noise.emplace_back(out, steps);
    ep.log_prob.emplace_back(steps);
    ep.rewards.emplace_back(steps);
  }
  // Central actor output index for each slot of the agent-ordered action.
  std::vector<int> slot_joint;
  for (const env::AgentSpec& a : env.agents()) slot_joint.insert(slot_joint.end(), a.joints.begin(), a.joints.end());

  Rng rng(noise_seed);
  std::vector<Eigen::VectorXd> obs = env.reset(goal_seed);
  Eigen::VectorXd action(env.action_size());
  env::StepResult result;
  for (int t = 0; t < steps; ++t) {
    const Eigen::VectorXd state = env.global_state();
    ep.states.col(t) = state;
    for (std::size_t k = 0; k < nl; ++k) {
      const Learner& l = learners_[k];
      const Eigen::VectorXd in = learner_input(l, obs, state);
      const nn::PolicySample s = l.actor.sample(in, rng);
      ep.inputs[k].col(t) = in;
      ep.pre_squash[k].col(t) = s.pre_squash;
      ep.noise[k].col(t) = s.noise;
      ep.log_prob[k][t] = s.log_prob;
      if (l.agent_index >= 0) {
        Eigen::Index at = 0;
        for (int i = 0; i < l.agent_index; ++i) at += env.agents()[static_cast<std::size_t>(i)].action_size();
        action.segment(at, s.action.size()) = s.action;
      } else {
        for (std::size_t slot = 0; slot < slot_joint.size(); ++slot) {
          action[static_cast<Eigen::Index>(slot)] = s.action[slot_joint[slot]];
        }
      }
    }
    result = env.step(std::span<const double>(action.data(), static_cast<std::size_t>(action.size())));
    double total = 0.0;
    for (double r : result.rewards) total += r;
    ep.episode_return += total;
    for (std::size_t k = 0; k < nl; ++k) {
      const Learner& l = learners_[k];
      ep.rewards[k][t] = l.agent_index >= 0 ? result.rewards[static_cast<std::size_t>(l.agent_index)] : total;
    }
    if (result.info.collided) ++ep.collisions;
    obs = std::move(result.observations);
  }
  ep.states.col(steps) = env.global_state();

  const env::TaskSpec& task = env.config().task;
  for (int arm = 0; arm < env.tree().arm_count(); ++arm) {
    if (task.arm_task(arm) != env::TaskKind::TrajectoryPlanning) continue;
    ep.position_error += result.info.position_error[static_cast<std::size_t>(arm)];
    ++ep.position_arms;
    bool has_orientation_agent = false;
    for (const env::AgentSpec& a : env.agents()) {
      has_orientation_agent |= a.arm == arm && a.role == env::AgentRole::OrientationReacher;
    }
    if (has_orientation_agent) {
      ep.orientation_error += result.info.orientation_error[static_cast<std::size_t>(arm)];
      ++ep.orientation_arms;
    }
  }
  ep.base_error = result.info.base_error.norm();
  return ep;
}

IterationMetrics Trainer::iterate() {
  const int e_count = config_.num_envs;
  std::vector<Episode> episodes(static_cast<std::size_t>(e_count));
  auto work = [&](int worker) {
    for (int e = worker; e < e_count; e += config_.workers) {
      const auto label = static_cast<std::uint64_t>(e);
      const auto iter = static_cast<std::uint64_t>(iteration_);
      episodes[static_cast<std::size_t>(e)] = collect(envs_[static_cast<std::size_t>(e)],
                                                      Rng::derive(seed_, {1, iter, label}),
                                                      Rng::derive(seed_, {2, iter, label}));
    }
  };
  if (config_.workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < config_.workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  const int steps = envs_.front().config().task.episode_length;
  const Eigen::Index n = static_cast<Eigen::Index>(e_count) * steps;
  const Eigen::Index g = envs_.front().global_state_size();
  Eigen::MatrixXd states(g, n), next_states(g, n);
  std::vector<std::uint8_t> dones(static_cast<std::size_t>(n), 0);
  for (int e = 0; e < e_count; ++e) {
    const Episode& ep = episodes[static_cast<std::size_t>(e)];
    states.middleCols(static_cast<Eigen::Index>(e) * steps, steps) = ep.states.leftCols(steps);
    next_states.middleCols(static_cast<Eigen::Index>(e) * steps, steps) = ep.states.rightCols(steps);
    dones[static_cast<std::size_t>((e + 1) * steps - 1)] = 1;
  }

  IterationMetrics m;
  m.iteration = iteration_;
  struct Batch {
    ActorBatch actor;
    Eigen::VectorXd targets;
  };
  std::vector<Batch> batches(learners_.size());
  for (std::size_t k = 0; k < learners_.size(); ++k) {
    Learner& l = learners_[k];
    Batch& b = batches[k];
    b.actor.obs.resize(l.actor.obs_size(), n);
    b.actor.pre_squash.resize(l.actor.action_size(), n);
    b.actor.noise.resize(l.actor.action_size(), n);
    b.actor.old_log_prob.resize(n);
    Eigen::VectorXd rewards(n);
    for (int e = 0; e < e_count; ++e) {
      const Episode& ep = episodes[static_cast<std::size_t>(e)];
      const Eigen::Index at = static_cast<Eigen::Index>(e) * steps;
      b.actor.obs.middleCols(at, steps) = ep.inputs[k];
      b.actor.pre_squash.middleCols(at, steps) = ep.pre_squash[k];
      b.actor.noise.middleCols(at, steps) = ep.noise[k];
      b.actor.old_log_prob.segment(at, steps) = ep.log_prob[k];
      rewards.segment(at, steps) = ep.rewards[k];
    }
    const Eigen::VectorXd values = predict_values(l.critic, states, config_.value_scale);
    const GaeResult gae = compute_gae(std::span<const double>(rewards.data(), static_cast<std::size_t>(n)),
                                      std::span<const double>(values.data(), static_cast<std::size_t>(n)), dones, 0.0,
                                      config_.gamma, config_.gae_lambda);
    b.actor.advantages = gae.advantages;
    normalize_advantages(std::span<double>(b.actor.advantages.data(), static_cast<std::size_t>(n)));
    b.targets = config_.critic_targets == CriticTargets::TemporalDifference
                    ? td_targets(l.target, std::span<const double>(rewards.data(), static_cast<std::size_t>(n)),
                                 next_states, dones, config_.gamma, config_.value_scale)
                    : gae.returns;
    m.agent_reward.push_back(rewards.mean());
  }

  const Eigen::Index mb = std::max<Eigen::Index>(1, n / config_.num_minibatches);
  double critic_loss_sum = 0.0;
  int critic_updates = 0;
  double entropy_sum = 0.0;
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int epoch = 0; epoch < config_.ppo_epochs; ++epoch) {
    Rng shuffle(Rng::derive(seed_, {3, static_cast<std::uint64_t>(iteration_), static_cast<std::uint64_t>(epoch)}));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = static_cast<int>(i);
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(shuffle.uniform() * static_cast<double>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(std::min(j, i))]);
    }
    for (Eigen::Index start = 0; start + mb <= n; start += mb) {
      const std::vector<int> idx(perm.begin() + start, perm.begin() + start + mb);
      const Eigen::MatrixXd mb_states = states(Eigen::all, idx);
      for (std::size_t k = 0; k < learners_.size(); ++k) {
        Learner& l = learners_[k];
        const Batch& b = batches[k];
        ActorBatch ab;
        ab.obs = b.actor.obs(Eigen::all, idx);
        ab.pre_squash = b.actor.pre_squash(Eigen::all, idx);
        ab.noise = b.actor.noise(Eigen::all, idx);
        ab.old_log_prob = b.actor.old_log_prob(idx);
        ab.advantages = b.actor.advantages(idx);
        const ActorGradients ag =
            ppo_actor_update(l.actor, ab, config_.clip, config_.entropy_coef, l.actor_opt, config_.max_grad_norm);
        entropy_sum += ag.entropy;
        CriticBatch cb{mb_states, b.targets(idx)};
        critic_loss_sum += critic_update(l.critic, cb, l.critic_opt, config_.value_scale, config_.max_grad_norm);
        ++critic_updates;
      }
    }
  }
  for (Learner& l : learners_) {
    if (!all_finite(l.actor.mean_net().params()) || !l.actor.log_std().allFinite() || !all_finite(l.critic.params())) {
      throw TrainingError("training diverged at iteration " + std::to_string(iteration_) +
                          ": non-finite parameters in learner " + std::to_string(l.id));
    }
  }
  ++iteration_;
  if (iteration_ % config_.target_sync_period == 0) {
    for (Learner& l : learners_) sync_target(l.critic, l.target);
  }
  env_steps_ += n;

  m.env_steps = env_steps_;
  double reward_sum = 0.0;
  for (double r : m.agent_reward) reward_sum += r;
  m.mean_reward = reward_sum / static_cast<double>(m.agent_reward.size());
  double pos = 0.0, ori = 0.0, base = 0.0, ret = 0.0;
  int pos_n = 0, ori_n = 0, collisions = 0;
  for (const Episode& ep : episodes) {
    pos += ep.position_error;
    pos_n += ep.position_arms;
    ori += ep.orientation_error;
    ori_n += ep.orientation_arms;
    base += ep.base_error;
    ret += ep.episode_return;
    collisions += ep.collisions;
  }
  m.position_error = mean_or_nan(pos, pos_n);
  m.orientation_error = mean_or_nan(ori, ori_n);
  m.base_error = base / e_count;
  m.episode_return = ret / e_count;
  m.collision_rate = static_cast<double>(collisions) / static_cast<double>(n);
  m.critic_loss = critic_updates > 0 ? critic_loss_sum / critic_updates : 0.0;
  m.entropy = critic_updates > 0 ? entropy_sum / critic_updates : 0.0;
  return m;
}

std::vector<IterationMetrics> Trainer::run(const std::function<void(const IterationMetrics&)>& on_iteration) {
  std::vector<IterationMetrics> out;
  while (!finished()) {
    out.push_back(iterate());
    if (on_iteration) on_iteration(out.back());
  }
  return out;
}

assembly::PolicySet Trainer::policy_set() const {
  assembly::PolicySet set;
  set.name = std::string(assembly::algorithm_name(algorithm_));
  set.algorithm = algorithm_;
  set.robot = robot_;
  const env::Environment& proto = envs_.front();
  set.task = proto.config().task;
  set.provenance.task = std::string(env::task_name(set.task.kind));
  set.provenance.seed = seed_;
  set.provenance.env_steps = env_steps_;
  for (const Learner& l : learners_) {
    assembly::AgentPolicy p;
    if (l.agent_index >= 0) {
      p.spec = proto.agents()[static_cast<std::size_t>(l.agent_index)];
    } else {
      p.spec.id = 1;
      p.spec.arm = -1;
      for (int j = 0; j < proto.tree().num_joints(); ++j) p.spec.joints.push_back(j);
    }
    p.actor = l.actor;
    p.critic = l.critic;
    set.agents.emplace(p.spec.id, std::move(p));
  }
  return set;
}

std::string Trainer::save_state() const {
  nn::BinaryWriter w;
  w.u32(kStateMagic);
  w.u32(kStateVersion);
  w.u32(static_cast<std::uint32_t>(algorithm_));
  w.u64(seed_);
  w.i64(iteration_);
  w.i64(env_steps_);
  w.u32(static_cast<std::uint32_t>(learners_.size()));
  for (const Learner& l : learners_) {
    w.u32(static_cast<std::uint32_t>(l.id));
    nn::write_policy(w, l.actor);
    nn::write_mlp(w, l.critic);
    nn::write_mlp(w, l.target);
    nn::write_adam(w, l.actor_opt.mean);
    nn::write_adam(w, l.actor_opt.log_std);
    nn::write_adam(w, l.critic_opt);
  }
  return w.data();
}

void Trainer::load_state(const std::string& bytes) {
  nn::BinaryReader r(bytes);
  if (r.u32() != kStateMagic) throw CorruptFileError("not a trainer state file");
  if (r.u32() != kStateVersion) throw VersionError("unsupported trainer state version");
  if (r.u32() != static_cast<std::uint32_t>(algorithm_)) throw CompositionError("trainer state is for another algorithm");
  if (r.u64() != seed_) throw CompositionError("trainer state was produced with a different seed");
  const auto iteration = r.i64();
  const auto env_steps = r.i64();
  if (r.u32() != learners_.size()) throw CompositionError("trainer state has a different learner count");
  std::vector<Learner> loaded = learners_;
  for (Learner& l : loaded) {
    if (static_cast<int>(r.u32()) != l.id) throw CompositionError("trainer state learner ids differ");
    nn::GaussianPolicy actor = nn::read_policy(r);
    nn::Mlp critic = nn::read_mlp(r);
    nn::Mlp target = nn::read_mlp(r);
    if (actor.mean_net().sizes() != l.actor.mean_net().sizes() || critic.sizes() != l.critic.sizes()) {
      throw CompositionError("trainer state network shapes differ from the config");
    }
    l.actor = std::move(actor);
    l.critic = std::move(critic);
    l.target = std::move(target);
    l.actor_opt.mean = nn::read_adam(r);
    l.actor_opt.log_std = nn::read_adam(r);
    l.critic_opt = nn::read_adam(r);
  }
  if (r.remaining() != 0) throw CorruptFileError("trailing bytes in trainer state");
  learners_ = std::move(loaded);
  iteration_ = static_cast<int>(iteration);
  env_steps_ = env_steps;
}

assembly::PolicySet mappo_train(const EnvFactory& factory, const TrainConfig& config, std::uint64_t seed,
                                std::vector<IterationMetrics>* metrics) {
  Trainer t(factory, config, assembly::Algorithm::Mappo, seed);
  auto m = t.run();
  if (metrics != nullptr) *metrics = std::move(m);
  return t.policy_set();
}

assembly::PolicySet centralized_ppo_train(const EnvFactory& factory, const TrainConfig& config, std::uint64_t seed,
                                          std::vector<IterationMetrics>* metrics) {
  Trainer t(factory, config, assembly::Algorithm::CentralPpo, seed);
  auto m = t.run();
  if (metrics != nullptr) *metrics = std::move(m);
  return t.policy_set();
}

}  // namespace octo::marl
