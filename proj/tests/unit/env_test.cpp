#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <vector>

#include "octo/assembly/agents.hpp"
#include "octo/common/errors.hpp"
#include "octo/common/rng.hpp"
#include "octo/env/environment.hpp"
#include "octo/env/euler.hpp"
#include "octo/env/trace.hpp"
#include "octo/robot/robot.hpp"

namespace octo::env {
namespace {

using Eigen::VectorXd;

Environment make_env(const std::string& preset, const TaskSpec& task, std::optional<DisturbanceSpec> d = {}) {
  auto tree = std::make_shared<const dynamics::KinematicTree>(robot::build_space_robot(robot::preset(preset)));
  EnvConfig cfg;
  cfg.task = task;
  cfg.disturbance = d;
  return Environment(tree, assembly::divide_agents(*tree, task), cfg);
}

std::vector<double> random_action(const Environment& env, Rng& rng) {
  std::vector<double> a(static_cast<std::size_t>(env.action_size()));
  for (double& x : a) x = rng.uniform(-1, 1);
  return a;
}

TEST(PdDriver, OneJointStepSettlesQuickly) {
  // Each desk2 joint driven alone with the others braked: the velocity must
  // be within 10% of the command before 0.2 s.
  const auto tree = robot::build_space_robot(robot::preset("desk2"));
  const PdGains gains = default_arm_gains(3);
  const double dt = 1e-3;
  for (int j = 0; j < 3; ++j) {
    dynamics::SystemState s = dynamics::SystemState::at_rest(tree);
    std::vector<std::uint8_t> locked(6, 1);
    locked[static_cast<std::size_t>(j)] = 0;
    const double command = 1.0;
    PdGains one{VectorXd::Constant(1, gains.kp[j]), VectorXd::Constant(1, gains.kd[j])};
    double prev = 0.0;
    double settled_at = -1.0;
    for (int k = 0; k < 400; ++k) {
      const double qd = s.qdot[j];
      const double acc = (qd - prev) / dt;
      prev = qd;
      const VectorXd tau1 = pd_driver(std::vector<double>{command}, std::vector<double>{qd}, std::vector<double>{acc},
                                      one, std::vector<double>{tree.limits().tau_max[j]});
      std::vector<double> tau(6, 0.0);
      tau[static_cast<std::size_t>(j)] = tau1[0];
      s = dynamics::step(tree, s, tau, dt, {.locked = locked});
      const bool inside = std::abs(s.qdot[j] - command) <= 0.1 * command;
      if (inside && settled_at < 0) settled_at = s.time;
      if (!inside) settled_at = -1.0;
    }
    EXPECT_GE(settled_at, 0.0) << "joint " << j;
    EXPECT_LT(settled_at, 0.2) << "joint " << j;
  }
}

TEST(Reset, SameSeedSameGoalsAndObservations) {
  Environment a = make_env("desk2", TaskSpec::trajectory());
  Environment b = make_env("desk2", TaskSpec::trajectory());
  const auto oa = a.reset(17), ob = b.reset(17);
  ASSERT_EQ(oa.size(), ob.size());
  for (std::size_t i = 0; i < oa.size(); ++i) EXPECT_EQ(oa[i], ob[i]);
  EXPECT_EQ(a.global_state(), b.global_state());
  const auto oc = a.reset(18);
  EXPECT_NE(oa[0], oc[0]);
}

TEST(Reset, HomeConfigurationAtRest) {
  Environment env = make_env("full4", TaskSpec::trajectory());
  env.reset(3);
  EXPECT_EQ(env.state().q, VectorXd::Zero(24));
  EXPECT_EQ(env.state().qdot, VectorXd::Zero(24));
  EXPECT_EQ(env.state().base_linear_velocity, Vec3::Zero());
  EXPECT_EQ(env.step_count(), 0);
}

TEST(Goals, SampledWithinRanges) {
  const auto tree = robot::build_space_robot(robot::preset("full4"));
  const GoalRanges ranges;
  Rng rng(5);
  Vec3 lo = Vec3::Constant(1e9), hi = Vec3::Constant(-1e9);
  const robot::AxisAlignedBox box = robot::default_targets_volume(tree, 0);
  const auto home = dynamics::forward_kinematics(tree, dynamics::SystemState::at_rest(tree));
  const Vec3 home_ori = euler_xyz(home.end_effectors[0].orientation);
  for (int i = 0; i < 10000; ++i) {
    const GoalSet g = sample_goals(tree, ranges, rng);
    lo = lo.cwiseMin(g.base_attitude);
    hi = hi.cwiseMax(g.base_attitude);
    ASSERT_TRUE(box.contains(g.position[0]));
    ASSERT_LE(euler_error(g.orientation[0], home_ori).cwiseAbs().maxCoeff(), 0.3 + 1e-12);
  }
  EXPECT_GE(lo.minCoeff(), -0.2);
  EXPECT_LE(hi.maxCoeff(), 0.2);
  // The range is actually used.
  EXPECT_LT(lo.maxCoeff(), -0.19);
  EXPECT_GT(hi.minCoeff(), 0.19);
}

TEST(Step, ZeroActionsKeepTheRobotStaticAndEndAfterFiftySteps) {
  Environment env = make_env("desk2", TaskSpec::trajectory());
  env.reset(1);
  const std::vector<double> zero(static_cast<std::size_t>(env.action_size()), 0.0);
  StepResult r;
  for (int k = 0; k < 50; ++k) {
    ASSERT_FALSE(env.done());
    r = env.step(zero);
  }
  EXPECT_TRUE(r.done);
  EXPECT_LT(env.state().q.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(env.state().base_position.norm(), 1e-12);
  EXPECT_NEAR(env.state().time, 10.0, 1e-9);
  EXPECT_THROW(env.step(zero), TrainingError);
}

TEST(Step, ActionDimensionMismatch) {
  Environment env = make_env("desk2", TaskSpec::trajectory());
  env.reset(1);
  const std::vector<double> wrong(5, 0.0);
  EXPECT_THROW(env.step(wrong), ConfigurationError);
  std::vector<double> nan(6, 0.0);
  nan[0] = std::nan("");
  EXPECT_THROW(env.step(nan), InputError);
}

TEST(Step, DeterministicGivenSeedAndActions) {
  Environment a = make_env("full4", TaskSpec::trajectory(10));
  Environment b = make_env("full4", TaskSpec::trajectory(10));
  a.reset(9);
  b.reset(9);
  Rng ra(1), rb(1);
  for (int k = 0; k < 10; ++k) {
    const StepResult x = a.step(random_action(a, ra));
    const StepResult y = b.step(random_action(b, rb));
    ASSERT_EQ(x.rewards, y.rewards);
    for (std::size_t i = 0; i < x.observations.size(); ++i) ASSERT_EQ(x.observations[i], y.observations[i]);
  }
}

TEST(Step, MomentumStaysZeroWithoutDisturbance) {
  Environment env = make_env("full4", TaskSpec::trajectory(10));
  env.reset(2);
  Rng rng(2);
  for (int k = 0; k < 10; ++k) {
    const StepResult r = env.step(random_action(env, rng));
    EXPECT_LT(r.info.momentum.linear.norm(), 1e-9);
    EXPECT_LT(r.info.momentum.angular.norm(), 1e-9);
  }
}

TEST(Observation, LayoutAndStability) {
  Environment env = make_env("full4", TaskSpec::trajectory(5));
  env.reset(4);
  Rng rng(4);
  env.step(random_action(env, rng));
  env.step(random_action(env, rng));
  const auto o1 = env.observations();
  const auto o2 = env.observations();
  const auto& s = env.state();
  const auto kin = dynamics::forward_kinematics(env.tree(), s);
  for (int i = 0; i < env.num_agents(); ++i) {
    const VectorXd& o = o1[static_cast<std::size_t>(i)];
    ASSERT_EQ(o, o2[static_cast<std::size_t>(i)]);
    ASSERT_EQ(o.size(), kObservationSize);
    ASSERT_TRUE(o.allFinite());
    const AgentSpec& a = env.agents()[static_cast<std::size_t>(i)];
    EXPECT_EQ(o.segment<3>(0), s.base_position);
    EXPECT_LT((o.segment<3>(3) - euler_xyz(s.base_orientation)).norm(), 1e-15);
    EXPECT_EQ(o.segment<3>(6), s.base_linear_velocity);
    EXPECT_EQ(o.segment<3>(9), s.base_angular_velocity);
    for (int k = 0; k < 3; ++k) {
      const int j = a.joints[static_cast<std::size_t>(k)];
      EXPECT_EQ(o[12 + k], wrap_angle(s.q[j]));
      EXPECT_EQ(o[15 + k], s.qdot[j]);
    }
    const auto arm = static_cast<std::size_t>(a.arm);
    if (a.role == AgentRole::PositionReacher) {
      EXPECT_LT((o.segment<3>(18) - kin.end_effectors[arm].position).norm(), 1e-12);
      EXPECT_EQ(o.segment<3>(21), env.goals().position[arm]);
    } else {
      EXPECT_LT((o.segment<3>(18) - euler_xyz(kin.end_effectors[arm].orientation)).norm(), 1e-12);
      EXPECT_EQ(o.segment<3>(21), env.goals().orientation[arm]);
    }
    for (int k : {3, 4, 5, 12, 13, 14}) {
      EXPECT_LE(std::abs(o[k]), std::numbers::pi);
    }
  }
  EXPECT_EQ(env.global_state().size(), env.global_state_size());
  EXPECT_EQ(env.global_state_size(), 12 + 48 + 48 + 7);
}

TEST(Observation, BaseAdjusterSeesAttitudeError) {
  Environment env = make_env("desk2", TaskSpec::reorientation());
  env.reset(6);
  const VectorXd o = env.observation(0);
  EXPECT_LT((o.segment<3>(18) - euler_error(env.goals().base_attitude, euler_xyz(env.state().base_orientation))).norm(),
            1e-15);
  EXPECT_EQ(o.segment<3>(21), env.goals().base_attitude);
}

TEST(Rewards, SharedInReorientation) {
  Environment env = make_env("full4", TaskSpec::reorientation(10));
  env.reset(7);
  Rng rng(7);
  for (int k = 0; k < 10; ++k) {
    const StepResult r = env.step(random_action(env, rng));
    for (double x : r.rewards) ASSERT_EQ(x, r.rewards.front());
  }
}

TEST(Rewards, TrajectoryRewardDependsOnlyOnOwnTerms) {
  Environment env = make_env("desk2", TaskSpec::trajectory(10));
  env.reset(8);
  Rng rng(8);
  std::vector<double> prev(6, 0.0);
  for (int k = 0; k < 10; ++k) {
    const std::vector<double> u = random_action(env, rng);
    const StepResult r = env.step(u);
    for (int a = 0; a < 2; ++a) {
      const auto off = static_cast<std::ptrdiff_t>(3 * a);
      const std::vector<double> ua(u.begin() + off, u.begin() + off + 3), pa(prev.begin() + off, prev.begin() + off + 3);
      const double expected = reward_trajectory(Vec3(r.info.position_error[static_cast<std::size_t>(a)], 0, 0), ua, pa,
                                                std::vector<double>(3, 0.0), env.config().reward);
      EXPECT_NEAR(r.rewards[static_cast<std::size_t>(a)], expected, 1e-12);
    }
    prev = u;
  }
}

TEST(Disturbance, ReportedFromTheOnsetStep) {
  DisturbanceSpec d;
  Environment env = make_env("desk2", TaskSpec::trajectory(), d);
  env.reset(1);
  const std::vector<double> zero(6, 0.0);
  const int onset_step = static_cast<int>(std::floor(d.onset / env.config().control_period()));
  for (int k = 0; k < 50; ++k) {
    const StepResult r = env.step(zero);
    if (k == onset_step) {
      EXPECT_EQ(r.info.external_force, d.force) << "step " << k;
    } else {
      EXPECT_EQ(r.info.external_force, Vec3::Zero()) << "step " << k;
    }
    if (k < onset_step) {
      EXPECT_LT(r.info.momentum.linear.norm(), 1e-12);
    } else {
      EXPECT_LT((r.info.momentum.linear - d.force * d.duration).norm(), 1e-9) << "step " << k;
    }
  }
}

TEST(Disturbance, FailedArmNeverMoves) {
  DisturbanceSpec d;
  d.force = Vec3::Zero();
  d.failed_arm = 1;
  Environment env = make_env("full4", TaskSpec::reorientation(10), d);
  env.reset(3);
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    env.step(random_action(env, rng));
    for (int j : env.tree().arm_joints(1)) ASSERT_EQ(env.state().qdot[j], 0.0);
  }
  EXPECT_GT(env.state().qdot.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Disturbance, Validation) {
  const auto tree = robot::build_space_robot(robot::preset("desk2"));
  DisturbanceSpec d;
  EXPECT_NO_THROW(d.validate(tree, 10.0));
  EXPECT_THROW(d.validate(tree, 5.0), ConfigurationError);
  d.duration = 0.0;
  EXPECT_THROW(d.validate(tree, 10.0), ConfigurationError);
  d = DisturbanceSpec{};
  d.failed_arm = 2;
  EXPECT_THROW(d.validate(tree, 10.0), ConfigurationError);
  d = DisturbanceSpec{};
  d.body = 7;
  EXPECT_THROW(d.validate(tree, 10.0), ConfigurationError);
  EXPECT_EQ(DisturbanceSpec{}.resolved_body(tree), 3);
}

TEST(Task, MixedAssignsOneKindPerArm) {
  EXPECT_NO_THROW(TaskSpec::mixed({TaskKind::TrajectoryPlanning, TaskKind::BaseReorientation}).validate(2));
  EXPECT_THROW(TaskSpec::mixed({TaskKind::TrajectoryPlanning}).validate(2), ConfigurationError);
  EXPECT_THROW(TaskSpec::mixed({TaskKind::Mixed, TaskKind::TrajectoryPlanning}).validate(2), ConfigurationError);
  const TaskSpec m = TaskSpec::mixed({TaskKind::TrajectoryPlanning, TaskKind::BaseReorientation});
  EXPECT_FALSE(m.share_reward(0));
  EXPECT_TRUE(m.share_reward(1));
  EXPECT_FALSE(TaskSpec::trajectory().share_reward(0));
  EXPECT_TRUE(TaskSpec::reorientation().share_reward(0));
  EXPECT_EQ(parse_task("mixed"), TaskKind::Mixed);
  EXPECT_THROW(parse_task("dance"), ConfigurationError);
}

TEST(Trace, ColumnsAndRows) {
  Environment env = make_env("desk2", TaskSpec::trajectory(3));
  env.reset(1);
  TraceWriter trace(env);
  trace.record(env, std::vector<double>(2, 0.0), env.info());
  const std::vector<double> zero(6, 0.0);
  for (int k = 0; k < 3; ++k) {
    const StepResult r = env.step(zero);
    trace.record(env, r.rewards, r.info);
  }
  EXPECT_EQ(trace.rows(), 4u);
  const std::string header = trace.header();
  for (const char* col : {"step", "time", "q_0", "qdot_5", "pos_err_1", "ori_err_0", "base_err", "reward_1",
                          "reward_2", "collided", "lin_mom_x", "ang_mom_z", "ext_force_y"}) {
    EXPECT_NE(header.find(col), std::string::npos) << col;
  }
  std::ostringstream out;
  trace.write(out);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

}  // namespace
}  // namespace octo::env
