#include "octo/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "octo/assembly/agents.hpp"
#include "octo/common/errors.hpp"
#include "octo/common/hash.hpp"

namespace octo::cli {

using nlohmann::json;
using dynamics::Vec3;

namespace {

/// Reads one JSON object, remembering which keys were consumed so that
/// leftovers can be reported by their dotted path.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigurationError("config key '" + label() + "': expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void get(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void get(const std::string& key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<int>();
    }
  }
  void get(const std::string& key, std::int64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<std::int64_t>();
    }
  }
  void get(const std::string& key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const std::string& key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }
  void get(const std::string& key, std::vector<int>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "an array of integers");
      out.clear();
      for (const json& e : *v) {
        if (!e.is_number_integer()) fail(key, "an array of integers");
        out.push_back(e.get<int>());
      }
    }
  }
  void get(const std::string& key, Eigen::VectorXd& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "an array of numbers");
      out.resize(static_cast<Eigen::Index>(v->size()));
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) fail(key, "an array of numbers");
        out[static_cast<Eigen::Index>(i)] = (*v)[i].get<double>();
      }
    }
  }
  void get(const std::string& key, Vec3& out) {
    Eigen::VectorXd tmp;
    get(key, tmp);
    if (tmp.size() == 0 && !has(key)) return;
    if (tmp.size() != 3) fail(key, "an array of 3 numbers");
    out = tmp;
  }

  /// Converts a string value with `parse`, reporting failures by key.
  template <class T, class Parse>
  void parse(const std::string& key, T& out, Parse parse_fn) {
    std::string s;
    get(key, s);
    if (!has(key)) return;
    try {
      out = parse_fn(s);
    } catch (const ConfigurationError& e) {
      throw ConfigurationError("config key '" + key_path(key) + "': " + e.what());
    }
  }

  std::optional<Reader> child(const std::string& key) {
    const json* v = take(key);
    if (v == nullptr) return std::nullopt;
    return Reader(*v, key_path(key));
  }

  const json* take(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  /// Throws on the first key nobody asked for.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigurationError("unknown config key '" + key_path(it.key()) + "'");
    }
  }

 private:
  [[noreturn]] void fail(const std::string& key, const char* expected) const {
    throw ConfigurationError("config key '" + key_path(key) + "': expected " + expected);
  }
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::string_view targets_name(marl::CriticTargets t) {
  return t == marl::CriticTargets::TemporalDifference ? "td" : "lambda";
}

marl::CriticTargets parse_targets(const std::string& s) {
  if (s == "td") return marl::CriticTargets::TemporalDifference;
  if (s == "lambda") return marl::CriticTargets::LambdaReturn;
  throw ConfigurationError("expected td or lambda, got '" + s + "'");
}

/// Runs `check` and prefixes any ConfigurationError with the key it concerns.
template <class F>
void keyed(const std::string& key, F check) {
  try {
    check();
  } catch (const ConfigurationError& e) {
    throw ConfigurationError("config key '" + key + "': " + e.what());
  }
}

}  // namespace

RunConfig RunConfig::defaults(const std::string& robot, env::TaskKind task) {
  RunConfig c;
  c.robot = robot;
  c.task = task;
  if (task != env::TaskKind::TrajectoryPlanning) c.train.actor_lr = c.train.critic_lr = 7e-4;
  // The shared attitude reward pays off late in the episode; lambda-returns
  // carry it back faster than one-step bootstraps.
  if (task == env::TaskKind::BaseReorientation) c.train.critic_targets = marl::CriticTargets::LambdaReturn;
  c.train.max_env_steps = robot == "full4" ? 20'000'000 : 2'000'000;
  return c;
}

robot::RobotConfig RunConfig::robot_config() const {
  if (!model_file.empty()) return robot::load_robot_config(model_file);
  return robot::preset(robot);
}

env::TaskSpec RunConfig::task_spec() const {
  switch (task) {
    case env::TaskKind::TrajectoryPlanning: return env::TaskSpec::trajectory(episode_length);
    case env::TaskKind::BaseReorientation: return env::TaskSpec::reorientation(episode_length);
    case env::TaskKind::Mixed: break;
  }
  return env::TaskSpec::mixed(arm_tasks, episode_length);
}

env::EnvConfig RunConfig::env_config() const {
  env::EnvConfig e = env;
  e.task = task_spec();
  return e;
}

void RunConfig::validate() const {
  robot::RobotConfig rc;
  keyed(model_file.empty() ? "robot" : "model_file", [&] {
    rc = robot_config();
    rc.validate();
  });
  if (task != env::TaskKind::Mixed && !arm_tasks.empty()) {
    throw ConfigurationError("config key 'arm_tasks': only valid for the mixed task");
  }
  keyed("arm_tasks", [&] { task_spec().validate(rc.arm_count); });
  if (episode_length < 1) throw ConfigurationError("config key 'episode_length': must be at least 1");
  if (!(env.dt > 0.0)) throw ConfigurationError("config key 'env.dt': must be positive");
  if (env.substeps < 1) throw ConfigurationError("config key 'env.substeps': must be at least 1");
  keyed("env.reward", [&] { env.reward.validate(); });
  if (!(env.ranges.base_attitude >= 0.0)) {
    throw ConfigurationError("config key 'env.goal_ranges.base_attitude': must be non-negative");
  }
  if (!(env.ranges.ee_orientation >= 0.0)) {
    throw ConfigurationError("config key 'env.goal_ranges.ee_orientation': must be non-negative");
  }
  if (env.arm_gains.kp.size() != 0 || env.arm_gains.kd.size() != 0) {
    if (env.arm_gains.kp.size() != rc.joints_per_arm || env.arm_gains.kd.size() != rc.joints_per_arm) {
      throw ConfigurationError("config key 'env.pd_gains': kp and kd need " + std::to_string(rc.joints_per_arm) +
                               " entries");
    }
  }
  keyed("train", [&] { train.validate(); });
  if (checkpoint_every < 1) throw ConfigurationError("config key 'checkpoint_every': must be at least 1");
  if (eval_episodes < 1) throw ConfigurationError("config key 'eval.episodes': must be at least 1");
  const dynamics::KinematicTree tree = robot::build_space_robot(rc);
  const env::EnvConfig e = env_config();
  if (e.disturbance) keyed("env.disturbance", [&] { e.disturbance->validate(tree, e.horizon()); });
  keyed("task", [&] { assembly::divide_agents(tree, e.task); });
}

json to_json(const RunConfig& c) {
  json j;
  j["robot"] = c.robot;
  if (!c.model_file.empty()) j["model_file"] = c.model_file;
  j["task"] = std::string(env::task_name(c.task));
  if (!c.arm_tasks.empty()) {
    json a = json::array();
    for (env::TaskKind k : c.arm_tasks) a.push_back(std::string(env::task_name(k)));
    j["arm_tasks"] = a;
  }
  j["algorithm"] = std::string(assembly::algorithm_name(c.algorithm));
  j["seed"] = c.seed;
  j["episode_length"] = c.episode_length;

  const env::EnvConfig& e = c.env;
  json env;
  env["dt"] = e.dt;
  env["substeps"] = e.substeps;
  env["reward"] = {{"w1", e.reward.w1}, {"w2", e.reward.w2}, {"w3", e.reward.w3},
                   {"w4", e.reward.w4}, {"w5", e.reward.w5}, {"epsilon_log", e.reward.epsilon_log}};
  env["goal_ranges"] = {{"base_attitude", e.ranges.base_attitude}, {"ee_orientation", e.ranges.ee_orientation}};
  if (e.arm_gains.kp.size() > 0) env["pd_gains"] = {{"kp", vec(e.arm_gains.kp)}, {"kd", vec(e.arm_gains.kd)}};
  if (e.disturbance) {
    const env::DisturbanceSpec& d = *e.disturbance;
    json dj = {{"onset", d.onset}, {"body", d.body}, {"force", vec3(d.force)}, {"torque", vec3(d.torque)},
               {"duration", d.duration}};
    if (d.failed_arm) dj["failed_arm"] = *d.failed_arm;
    env["disturbance"] = dj;
  }
  j["env"] = env;

  const marl::TrainConfig& t = c.train;
  j["train"] = {{"gamma", t.gamma},
                {"clip", t.clip},
                {"ppo_epochs", t.ppo_epochs},
                {"entropy_coef", t.entropy_coef},
                {"actor_lr", t.actor_lr},
                {"critic_lr", t.critic_lr},
                {"max_env_steps", t.max_env_steps},
                {"gae_lambda", t.gae_lambda},
                {"num_minibatches", t.num_minibatches},
                {"num_envs", t.num_envs},
                {"target_sync_period", t.target_sync_period},
                {"hidden", t.hidden},
                {"max_grad_norm", t.max_grad_norm},
                {"value_scale", t.value_scale},
                {"initial_log_std", t.initial_log_std},
                {"workers", t.workers},
                {"critic_targets", std::string(targets_name(t.critic_targets))}};
  j["checkpoint_every"] = c.checkpoint_every;
  j["eval"] = {{"episodes", c.eval_episodes}, {"seed", c.eval_seed}};
  return j;
}

RunConfig from_json(const json& j, RunConfig c) {
  Reader r(j, "");
  r.get("robot", c.robot);
  r.get("model_file", c.model_file);
  r.parse("task", c.task, [](const std::string& s) { return env::parse_task(s); });
  if (const json* a = r.take("arm_tasks")) {
    if (!a->is_array()) throw ConfigurationError("config key 'arm_tasks': expected an array of task names");
    c.arm_tasks.clear();
    for (const json& e : *a) {
      if (!e.is_string()) throw ConfigurationError("config key 'arm_tasks': expected an array of task names");
      keyed("arm_tasks", [&] { c.arm_tasks.push_back(env::parse_task(e.get<std::string>())); });
    }
  }
  r.parse("algorithm", c.algorithm, [](const std::string& s) { return assembly::parse_algorithm(s); });
  r.get("seed", c.seed);
  r.get("episode_length", c.episode_length);

  if (auto env = r.child("env")) {
    env->get("dt", c.env.dt);
    env->get("substeps", c.env.substeps);
    if (auto w = env->child("reward")) {
      w->get("w1", c.env.reward.w1);
      w->get("w2", c.env.reward.w2);
      w->get("w3", c.env.reward.w3);
      w->get("w4", c.env.reward.w4);
      w->get("w5", c.env.reward.w5);
      w->get("epsilon_log", c.env.reward.epsilon_log);
      w->finish();
    }
    if (auto g = env->child("goal_ranges")) {
      g->get("base_attitude", c.env.ranges.base_attitude);
      g->get("ee_orientation", c.env.ranges.ee_orientation);
      g->finish();
    }
    if (auto pd = env->child("pd_gains")) {
      pd->get("kp", c.env.arm_gains.kp);
      pd->get("kd", c.env.arm_gains.kd);
      pd->finish();
    }
    if (auto d = env->child("disturbance")) {
      env::DisturbanceSpec spec = c.env.disturbance.value_or(env::DisturbanceSpec{});
      d->get("onset", spec.onset);
      d->get("body", spec.body);
      d->get("force", spec.force);
      d->get("torque", spec.torque);
      d->get("duration", spec.duration);
      if (d->has("failed_arm")) {
        int arm = 0;
        d->get("failed_arm", arm);
        spec.failed_arm = arm;
      }
      d->finish();
      c.env.disturbance = spec;
    }
    env->finish();
  }

  if (auto t = r.child("train")) {
    marl::TrainConfig& tc = c.train;
    t->get("gamma", tc.gamma);
    t->get("clip", tc.clip);
    t->get("ppo_epochs", tc.ppo_epochs);
    t->get("entropy_coef", tc.entropy_coef);
    t->get("actor_lr", tc.actor_lr);
    t->get("critic_lr", tc.critic_lr);
    t->get("max_env_steps", tc.max_env_steps);
    t->get("gae_lambda", tc.gae_lambda);
    t->get("num_minibatches", tc.num_minibatches);
    t->get("num_envs", tc.num_envs);
    t->get("target_sync_period", tc.target_sync_period);
    t->get("hidden", tc.hidden);
    t->get("max_grad_norm", tc.max_grad_norm);
    t->get("value_scale", tc.value_scale);
    t->get("initial_log_std", tc.initial_log_std);
    t->get("workers", tc.workers);
    t->parse("critic_targets", tc.critic_targets, parse_targets);
    t->finish();
  }
  r.get("checkpoint_every", c.checkpoint_every);
  if (auto e = r.child("eval")) {
    e->get("episodes", c.eval_episodes);
    e->get("seed", c.eval_seed);
    e->finish();
  }
  r.finish();
  return c;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigurationError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j, std::move(base));
}

std::uint64_t run_config_hash(const RunConfig& config) { return fnv1a64(to_json(config).dump()); }

}  // namespace octo::cli
