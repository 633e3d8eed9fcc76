#include "octo/env/trace.hpp"

#include <cstdio>

namespace octo::env {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void xyz(std::vector<std::string>& cols, const std::string& prefix) {
  for (const char* a : {"x", "y", "z"}) cols.push_back(prefix + a);
}

}  // namespace

TraceWriter::TraceWriter(const Environment& env) {
  columns_ = {"step", "time"};
  const int n = env.tree().num_joints();
  for (int j = 0; j < n; ++j) columns_.push_back("q_" + std::to_string(j));
  for (int j = 0; j < n; ++j) columns_.push_back("qdot_" + std::to_string(j));
  for (int a = 0; a < env.tree().arm_count(); ++a) columns_.push_back("pos_err_" + std::to_string(a));
  for (int a = 0; a < env.tree().arm_count(); ++a) columns_.push_back("ori_err_" + std::to_string(a));
  xyz(columns_, "base_err_");
  columns_.push_back("base_err");
  for (const AgentSpec& a : env.agents()) columns_.push_back("reward_" + std::to_string(a.id));
  columns_.push_back("collided");
  xyz(columns_, "lin_mom_");
  xyz(columns_, "ang_mom_");
  xyz(columns_, "ext_force_");
}

std::string TraceWriter::header() const {
  std::string h;
  for (std::size_t i = 0; i < columns_.size(); ++i) h += (i ? "," : "") + columns_[i];
  return h;
}

void TraceWriter::record(const Environment& env, const std::vector<double>& rewards, const StepInfo& info) {
  std::vector<std::string> v;
  v.push_back(std::to_string(env.step_count()));
  v.push_back(fmt(env.state().time));
  for (int j = 0; j < env.tree().num_joints(); ++j) v.push_back(fmt(env.state().q[j]));
  for (int j = 0; j < env.tree().num_joints(); ++j) v.push_back(fmt(env.state().qdot[j]));
  for (double e : info.position_error) v.push_back(fmt(e));
  for (double e : info.orientation_error) v.push_back(fmt(e));
  for (int k = 0; k < 3; ++k) v.push_back(fmt(info.base_error[k]));
  v.push_back(fmt(info.base_error.norm()));
  for (std::size_t a = 0; a < env.agents().size(); ++a) v.push_back(fmt(a < rewards.size() ? rewards[a] : 0.0));
  v.push_back(info.collided ? "1" : "0");
  for (int k = 0; k < 3; ++k) v.push_back(fmt(info.momentum.linear[k]));
  for (int k = 0; k < 3; ++k) v.push_back(fmt(info.momentum.angular[k]));
  for (int k = 0; k < 3; ++k) v.push_back(fmt(info.external_force[k]));
  std::string row;
  for (std::size_t i = 0; i < v.size(); ++i) row += (i ? "," : "") + v[i];
  rows_.push_back(std::move(row));
}

void TraceWriter::write(std::ostream& out) const {
  out << header() << '\n';
  for (const auto& r : rows_) out << r << '\n';
}

}  // namespace octo::env
