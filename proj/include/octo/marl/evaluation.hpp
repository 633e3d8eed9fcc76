#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "octo/assembly/policy_set.hpp"
#include "octo/env/environment.hpp"

namespace octo::marl {

struct EvalOptions {
  int episodes = 30;
  std::uint64_t seed = 0;
  double success_threshold = 0.05;  // rad, final base attitude error norm
  /// Fraction of the episode, counted from the end, averaged into the
  /// steady-state errors.
  double steady_fraction = 0.1;
  bool keep_series = false;
};

/// Errors are final-step values: position over trajectory arms (m),
/// orientation over arms with an orientation agent (rad), base attitude
/// error norm (rad). NaN where no arm qualifies.
struct EpisodeReport {
  std::uint64_t goal_seed = 0;
  double position_error = 0.0;
  double orientation_error = 0.0;
  double base_error = 0.0;
  double steady_position_error = 0.0;
  double steady_base_error = 0.0;
  double episode_return = 0.0;  // sum over steps and agents
  bool success = false;         // base_error < threshold
  double collision_rate = 0.0;
  std::vector<double> position_series;  // per control step, filled when keep_series
  std::vector<double> base_series;
  std::vector<double> time;
};

struct EvalSummary {
  int episodes = 0;
  double mean_position_error = 0.0;
  double max_position_error = 0.0;
  double mean_orientation_error = 0.0;
  double max_orientation_error = 0.0;
  double mean_base_error = 0.0;
  double max_base_error = 0.0;
  double mean_steady_position_error = 0.0;
  double mean_steady_base_error = 0.0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double mean_return = 0.0;
  std::vector<EpisodeReport> reports;
};

/// Deterministic (tanh of the mean) rollouts of `policies` on copies of
/// `prototype`. Episode k draws its goals from Rng::derive(seed, {k}).
/// Throws InputError when episodes < 1 and CompositionError when the set does
/// not fit the environment.
EvalSummary evaluate(const assembly::PolicySet& policies, const env::Environment& prototype,
                     const EvalOptions& options);

std::string summary_json(const EvalSummary& summary);
/// Columns: episode, goal_seed, pos_err, ori_err, base_err, steady_pos_err,
/// steady_base_err, return, success, collision_rate.
std::string episodes_csv(const EvalSummary& summary);
/// Columns: episode, step, time, pos_err, base_err (needs keep_series).
std::string series_csv(const EvalSummary& summary);

}  // namespace octo::marl
