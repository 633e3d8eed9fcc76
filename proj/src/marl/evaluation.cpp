#include "octo/marl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "octo/common/errors.hpp"
#include "octo/common/rng.hpp"

namespace octo::marl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct ArmSets {
  std::vector<int> position;
  std::vector<int> orientation;
};

ArmSets arm_sets(const env::Environment& e) {
  ArmSets s;
  for (int arm = 0; arm < e.tree().arm_count(); ++arm) {
    if (e.config().task.arm_task(arm) != env::TaskKind::TrajectoryPlanning) continue;
    s.position.push_back(arm);
    for (const env::AgentSpec& a : e.agents()) {
      if (a.arm == arm && a.role == env::AgentRole::OrientationReacher) {
        s.orientation.push_back(arm);
        break;
      }
    }
  }
  return s;
}

double mean_over(const std::vector<double>& v, const std::vector<int>& arms) {
  if (arms.empty()) return kNaN;
  double s = 0.0;
  for (int a : arms) s += v[static_cast<std::size_t>(a)];
  return s / static_cast<double>(arms.size());
}

/// Mean and max ignoring NaN entries; NaN if all are NaN.
std::pair<double, double> stats(const std::vector<EpisodeReport>& r, double EpisodeReport::*field) {
  double sum = 0.0, max = -std::numeric_limits<double>::infinity();
  int n = 0;
  for (const auto& e : r) {
    const double v = e.*field;
    if (std::isnan(v)) continue;
    sum += v;
    max = std::max(max, v);
    ++n;
  }
  return n == 0 ? std::pair{kNaN, kNaN} : std::pair{sum / n, max};
}

nlohmann::json number(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

}  // namespace

EvalSummary evaluate(const assembly::PolicySet& policies, const env::Environment& prototype,
                     const EvalOptions& options) {
  if (options.episodes < 1) throw InputError("evaluation needs at least one episode");
  policies.check_compatible(prototype);
  env::Environment e = prototype;
  const ArmSets arms = arm_sets(e);
  const int steps = e.config().task.episode_length;
  const int steady_steps = std::max(1, static_cast<int>(std::lround(options.steady_fraction * steps)));
  EvalSummary s;
  s.episodes = options.episodes;
  int successes = 0;
  double collisions = 0.0;
  double returns = 0.0;
  for (int k = 0; k < options.episodes; ++k) {
    EpisodeReport rep;
    rep.goal_seed = Rng::derive(options.seed, {static_cast<std::uint64_t>(k)});
    std::vector<Eigen::VectorXd> obs = e.reset(rep.goal_seed);
    env::StepResult result;
    int collided = 0;
    double steady_pos = 0.0, steady_base = 0.0;
    for (int t = 0; t < steps; ++t) {
      const Eigen::VectorXd action = policies.act(e, obs);
      result = e.step(std::span<const double>(action.data(), static_cast<std::size_t>(action.size())));
      for (double r : result.rewards) rep.episode_return += r;
      if (result.info.collided) ++collided;
      const double pos = mean_over(result.info.position_error, arms.position);
      const double base = result.info.base_error.norm();
      if (t >= steps - steady_steps) {
        steady_pos += pos;
        steady_base += base;
      }
      if (options.keep_series) {
        rep.position_series.push_back(pos);
        rep.base_series.push_back(base);
        rep.time.push_back(result.info.time);
      }
      obs = std::move(result.observations);
    }
    rep.position_error = mean_over(result.info.position_error, arms.position);
    rep.orientation_error = mean_over(result.info.orientation_error, arms.orientation);
    rep.base_error = result.info.base_error.norm();
    rep.steady_position_error = steady_pos / steady_steps;
    rep.steady_base_error = steady_base / steady_steps;
    rep.success = rep.base_error < options.success_threshold;
    rep.collision_rate = static_cast<double>(collided) / steps;
    successes += rep.success ? 1 : 0;
    collisions += rep.collision_rate;
    returns += rep.episode_return;
    s.reports.push_back(std::move(rep));
  }
  std::tie(s.mean_position_error, s.max_position_error) = stats(s.reports, &EpisodeReport::position_error);
  std::tie(s.mean_orientation_error, s.max_orientation_error) = stats(s.reports, &EpisodeReport::orientation_error);
  std::tie(s.mean_base_error, s.max_base_error) = stats(s.reports, &EpisodeReport::base_error);
  s.mean_steady_position_error = stats(s.reports, &EpisodeReport::steady_position_error).first;
  s.mean_steady_base_error = stats(s.reports, &EpisodeReport::steady_base_error).first;
  s.success_rate = static_cast<double>(successes) / options.episodes;
  s.collision_rate = collisions / options.episodes;
  s.mean_return = returns / options.episodes;
  return s;
}

std::string summary_json(const EvalSummary& s) {
  nlohmann::json j;
  j["episodes"] = s.episodes;
  j["mean_position_error_m"] = number(s.mean_position_error);
  j["max_position_error_m"] = number(s.max_position_error);
  j["mean_orientation_error_rad"] = number(s.mean_orientation_error);
  j["max_orientation_error_rad"] = number(s.max_orientation_error);
  j["mean_base_error_rad"] = number(s.mean_base_error);
  j["max_base_error_rad"] = number(s.max_base_error);
  j["mean_steady_position_error_m"] = number(s.mean_steady_position_error);
  j["mean_steady_base_error_rad"] = number(s.mean_steady_base_error);
  j["success_rate_0.05rad"] = s.success_rate;
  j["collision_rate"] = s.collision_rate;
  j["mean_return"] = s.mean_return;
  return j.dump(2) + "\n";
}

std::string episodes_csv(const EvalSummary& s) {
  std::string out =
      "episode,goal_seed,pos_err,ori_err,base_err,steady_pos_err,steady_base_err,return,success,collision_rate\n";
  for (std::size_t k = 0; k < s.reports.size(); ++k) {
    const EpisodeReport& r = s.reports[k];
    out += std::to_string(k) + "," + std::to_string(r.goal_seed) + "," + fmt(r.position_error) + "," +
           fmt(r.orientation_error) + "," + fmt(r.base_error) + "," + fmt(r.steady_position_error) + "," +
           fmt(r.steady_base_error) + "," + fmt(r.episode_return) + "," + (r.success ? "1" : "0") + "," +
           fmt(r.collision_rate) + "\n";
  }
  return out;
}

std::string series_csv(const EvalSummary& s) {
  std::string out = "episode,step,time,pos_err,base_err\n";
  for (std::size_t k = 0; k < s.reports.size(); ++k) {
    const EpisodeReport& r = s.reports[k];
    for (std::size_t t = 0; t < r.time.size(); ++t) {
      out += std::to_string(k) + "," + std::to_string(t + 1) + "," + fmt(r.time[t]) + "," +
             fmt(r.position_series[t]) + "," + fmt(r.base_series[t]) + "\n";
    }
  }
  return out;
}

}  // namespace octo::marl
