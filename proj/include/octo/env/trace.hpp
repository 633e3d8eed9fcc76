#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "octo/env/environment.hpp"

namespace octo::env {

/// Per-step CSV trace. Columns, in order:
///   step, time                       control step index, simulated time (s)
///   q_<j>, qdot_<j>                  joint angle (rad) and velocity (rad/s)
///   pos_err_<arm>, ori_err_<arm>     end-effector error norms (m, rad)
///   base_err_x, base_err_y, base_err_z, base_err   attitude error (rad)
///   reward_<agent id>                reward of each agent
///   collided                         0 or 1
///   lin_mom_x..z, ang_mom_x..z       system momentum (kg m/s, kg m^2/s)
///   ext_force_x..z                   external force applied in the step (N)
/// Row 0 is the state right after reset with zero rewards.
class TraceWriter {
 public:
  explicit TraceWriter(const Environment& env);

  std::string header() const;
  /// Row for the environment's current state.
  void record(const Environment& env, const std::vector<double>& rewards, const StepInfo& info);
  void write(std::ostream& out) const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> rows_;
};

}  // namespace octo::env
