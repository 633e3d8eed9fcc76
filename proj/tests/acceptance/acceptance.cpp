// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and a
// JSON report; the exit code is nonzero only when the harness itself fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "octo/assembly/agents.hpp"
#include "octo/cli/commands.hpp"
#include "octo/common/rng.hpp"
#include "octo/dynamics/dynamics.hpp"
#include "octo/env/environment.hpp"
#include "octo/env/rewards.hpp"
#include "octo/marl/gae.hpp"
#include "octo/nn/mlp.hpp"
#include "octo/robot/robot.hpp"

namespace {

namespace fs = std::filesystem;
using namespace octo;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  int id = 0;
  bool pass = false;
  std::string detail;
  json data = json::object();
};

std::vector<Outcome> outcomes;

void report(Outcome o) {
  std::cout << "criterion " << o.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  outcomes.push_back(std::move(o));
}

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(cli::read_file(path));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::vector<double> csv_column(const std::string& path, const std::string& name) {
  const auto rows = read_csv(path);
  const auto it = std::find(rows.at(0).begin(), rows.at(0).end(), name);
  if (it == rows[0].end()) throw std::runtime_error("column " + name + " missing in " + path);
  const auto col = static_cast<std::size_t>(it - rows[0].begin());
  std::vector<double> out;
  for (std::size_t r = 1; r < rows.size(); ++r) out.push_back(std::stod(rows[r].at(col)));
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json read_json(const std::string& path) { return json::parse(cli::read_file(path)); }

double json_number(const json& j, const char* key) {
  return j.at(key).is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at(key).get<double>();
}

// 1: momentum drift and episode speed ------------------------------------------

void momentum_and_speed() {
  const dynamics::KinematicTree tree = robot::build_space_robot(robot::preset("full4"));
  Rng rng(11);
  dynamics::SystemState s = dynamics::SystemState::at_rest(tree);
  s.base_linear_velocity = dynamics::Vec3(0.05, -0.02, 0.03);
  s.base_angular_velocity = dynamics::Vec3(0.01, 0.02, -0.015);
  for (int j = 0; j < tree.num_joints(); ++j) s.qdot[j] = 0.3 * rng.normal();
  const dynamics::Momentum m0 = dynamics::total_momentum(tree, s);
  const double dt = 1e-3;
  const int steps = 10'000;  // 10 s
  std::vector<double> tau(static_cast<std::size_t>(tree.num_joints()));
  double worst_rate = 0.0;
  for (int k = 0; k < steps; ++k) {
    if (k % 200 == 0) {
      for (std::size_t j = 0; j < tau.size(); ++j) tau[j] = 5.0 * rng.normal();
    }
    s = dynamics::step(tree, s, tau, dt);
    if ((k + 1) % 100 == 0) {
      const dynamics::Momentum m = dynamics::total_momentum(tree, s);
      const double t = (k + 1) * dt;
      const double lin = (m.linear - m0.linear).norm() / m0.linear.norm();
      const double ang = (m.angular - m0.angular).norm() / m0.angular.norm();
      worst_rate = std::max(worst_rate, std::max(lin, ang) / t);
    }
  }

  // One full4 episode with random actions through the environment.
  auto shared = std::make_shared<const dynamics::KinematicTree>(tree);
  env::EnvConfig ec;
  ec.task = env::TaskSpec::trajectory();
  env::Environment e(shared, assembly::divide_agents(tree, ec.task), ec);
  e.reset(3);
  const auto t0 = Clock::now();
  double max_abs_momentum = 0.0;
  std::vector<double> action(static_cast<std::size_t>(e.action_size()));
  while (!e.done()) {
    for (double& a : action) a = rng.uniform(-1.0, 1.0);
    const env::StepResult r = e.step(action);
    max_abs_momentum = std::max({max_abs_momentum, r.info.momentum.linear.norm(), r.info.momentum.angular.norm()});
  }
  const double episode_seconds = seconds_since(t0);
  Outcome o{1, worst_rate < 1e-6 && episode_seconds < 10.0, "", {}};
  o.detail = "full4 relative momentum drift " + num(worst_rate, 3) + " /s (limit 1e-6), 50-step episode " +
             num(episode_seconds, 3) + " s (limit 10), episode |momentum| from rest <= " + num(max_abs_momentum, 3);
  o.data = {{"drift_per_second", worst_rate}, {"episode_seconds", episode_seconds},
            {"episode_max_abs_momentum", max_abs_momentum}};
  report(o);
}

// 2: gradient checks ------------------------------------------------------------

double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-5}); }

double gradient_check(const std::vector<int>& sizes, std::size_t max_checked, std::uint64_t seed) {
  Rng rng(seed);
  nn::Mlp net(sizes);
  net.initialize(rng);
  for (double& p : net.mutable_params()) p += 0.1 * rng.normal();
  const int batch = 3;
  Eigen::MatrixXd x(sizes.front(), batch), w(sizes.back(), batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  const auto loss = [&](const Eigen::MatrixXd& in) {
    nn::MlpCache c;
    return net.forward(in, c).cwiseProduct(w).sum();
  };
  nn::MlpCache cache;
  net.forward(x, cache);
  std::vector<double> grad(net.num_params(), 0.0);
  Eigen::MatrixXd dx;
  net.backward(cache, w, grad, &dx);
  std::vector<std::size_t> idx;
  if (net.num_params() <= max_checked) {
    for (std::size_t i = 0; i < net.num_params(); ++i) idx.push_back(i);
  } else {
    for (std::size_t i = 0; i < max_checked; ++i) idx.push_back(rng.next_u64() % net.num_params());
    idx.push_back(0);
    idx.push_back(net.num_params() - 1);
  }
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i : idx) {
    const double saved = net.params()[i];
    net.mutable_params()[i] = saved + h;
    const double up = loss(x);
    net.mutable_params()[i] = saved - h;
    const double down = loss(x);
    net.mutable_params()[i] = saved;
    worst = std::max(worst, relative_error(grad[i], (up - down) / (2 * h)));
  }
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::MatrixXd xp = x, xm = x;
    xp(r, 0) += h;
    xm(r, 0) -= h;
    worst = std::max(worst, relative_error(dx(r, 0), (loss(xp) - loss(xm)) / (2 * h)));
  }
  return worst;
}

void gradients() {
  const auto t0 = Clock::now();
  // Actor and critic inputs of both presets: desk2 actors 24 -> 3, desk2
  // critics 55 -> 1, full4 critics 115 -> 1, the central full4 actor
  // 114 -> 24, at the desk-scale and the full-width hidden sizes.
  const std::vector<std::vector<int>> shapes{{24, 64, 64, 3},    {55, 64, 64, 1},    {115, 64, 64, 1},
                                             {54, 64, 64, 6},    {114, 64, 64, 24},  {24, 512, 512, 3},
                                             {115, 512, 512, 1}, {114, 512, 512, 24}};
  double worst = 0.0;
  std::uint64_t seed = 100;
  for (const auto& s : shapes) worst = std::max(worst, gradient_check(s, s[1] > 100 ? 600 : 3000, seed++));
  const double secs = seconds_since(t0);
  Outcome o{2, worst < 1e-4 && secs < 60.0, "", {}};
  o.detail = std::to_string(shapes.size()) + " shapes, worst relative error " + num(worst, 3) +
             " (limit 1e-4), " + num(secs, 3) + " s (limit 60)";
  o.data = {{"worst_relative_error", worst}, {"seconds", secs}};
  report(o);
}

// 3: GAE against a brute-force sum ----------------------------------------------

void gae() {
  Rng rng(21);
  const double lambdas[] = {0.0, 1.0, 0.95, 0.5};
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(3 + rng.next_u64() % 18);
    std::vector<double> r(n), v(n);
    std::vector<std::uint8_t> done(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = rng.normal();
      v[i] = rng.normal();
      done[i] = rng.uniform() < 0.15 ? 1 : 0;
    }
    const double bootstrap = rng.normal(), g = rng.uniform(0.8, 0.999), l = lambdas[trial % 4];
    const marl::GaeResult res = marl::compute_gae(r, v, done, bootstrap, g, l);
    for (std::size_t t = 0; t < n; ++t) {
      double a = 0.0, w = 1.0;
      for (std::size_t k = t; k < n; ++k) {
        const double next = k + 1 < n ? v[k + 1] : bootstrap;
        a += w * (r[k] + g * next * (done[k] ? 0.0 : 1.0) - v[k]);
        if (done[k]) break;
        w *= g * l;
      }
      worst = std::max(worst, std::abs(res.advantages[static_cast<Eigen::Index>(t)] - a));
    }
  }
  report({3, worst < 1e-12, "100 episodes of 3-20 steps, lambda in {0, 1, 0.95, 0.5}, max abs error " + num(worst, 3),
          {{"max_abs_error", worst}}});
}

// 9: reward examples --------------------------------------------------------------

void rewards() {
  const env::RewardConfig cfg;
  const std::vector<double> z{0.0, 0.0, 0.0};
  bool ok = true;
  std::string detail;
  const double r0 = env::reward_trajectory(env::Vec3::Zero(), z, z, z, cfg);
  ok = ok && r0 == -std::log(1e-3) && std::abs(r0 - 6.9078) < 5e-5;
  const double r1 = env::reward_trajectory(env::Vec3(0.1, 0, 0), z, z, z, cfg);
  ok = ok && r1 == -(0.001 * 0.01 + std::log(0.011)) && std::abs(r1 - 4.5099) < 5e-5;
  const std::vector<double> u{0.5, -0.5, 1.0}, prev{0.5, 0.5, 0.0};
  const double r2 = env::reward_trajectory(env::Vec3::Zero(), u, prev, z, cfg);
  ok = ok && std::abs(r2 - (r0 - 0.01 * 2.0 - 0.05 * 1.5)) < 1e-15;
  Rng rng(31);
  double worst_delta = 0.0;
  for (int k = 0; k < 100; ++k) {
    const env::Vec3 e(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
    std::vector<double> a(6), b(6);
    for (std::size_t i = 0; i < 6; ++i) {
      a[i] = rng.uniform(-1, 1);
      b[i] = rng.uniform(-1, 1);
    }
    const std::vector<double> tau(6, 0.0);
    const double delta = env::reward_base(e, a, b, tau, true, cfg) - env::reward_base(e, a, b, tau, false, cfg);
    worst_delta = std::max(worst_delta, std::abs(delta + 0.50));
  }
  ok = ok && worst_delta < 1e-12;
  detail = "r(0) = " + num(r0, 5) + ", r(0.1 m) = " + num(r1, 5) + ", action terms, collision delta -0.50 within " +
           num(worst_delta, 3);
  report({9, ok, detail, {{"r0", r0}, {"r_0.1", r1}, {"collision_delta_error", worst_delta}}});
}

// Training-based criteria --------------------------------------------------------------

struct Options {
  std::string out = "acceptance_runs";
  std::int64_t traj_steps = 300'000;
  std::int64_t reo_steps = 1'500'000;
  std::int64_t determinism_steps = 20'000;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int episodes = 30;
};

cli::RunConfig train_config(env::TaskKind task, assembly::Algorithm algo, std::uint64_t seed, std::int64_t steps,
                            int episodes) {
  cli::RunConfig c = cli::RunConfig::defaults("desk2", task);
  c.algorithm = algo;
  c.seed = seed;
  c.train.max_env_steps = steps;
  c.eval_episodes = episodes;
  c.eval_seed = 1000;
  return c;
}

std::string train(const Options& opt, const cli::RunConfig& c, const std::string& name) {
  std::cout << "training " << name << " (" << c.train.max_env_steps << " steps)" << std::endl;
  const auto t0 = Clock::now();
  const std::string dir = cli::cmd_train(c, {opt.out, name}, {{"acceptance", name}, nullptr});
  std::cout << "  done in " << num(seconds_since(t0), 4) << " s: " << dir << std::endl;
  return dir;
}

/// Block means of the last half of a series, `blocks` equal blocks.
std::vector<double> late_block_means(const std::vector<double>& series, int blocks) {
  const std::size_t start = series.size() / 2;
  const std::size_t len = (series.size() - start) / static_cast<std::size_t>(blocks);
  std::vector<double> means;
  for (int b = 0; b < blocks; ++b) {
    double s = 0.0;
    const std::size_t from = start + static_cast<std::size_t>(b) * len;
    for (std::size_t i = from; i < from + len; ++i) s += series[i];
    means.push_back(s / static_cast<double>(len));
  }
  return means;
}

void trajectory_and_ranking(const Options& opt, std::string* mappo_seed1_dir) {
  std::vector<double> pos_errors;
  bool monotone = true;
  json per_seed = json::array();
  int mappo_wins = 0;
  for (std::uint64_t seed : opt.seeds) {
    const std::string mappo = train(opt, train_config(env::TaskKind::TrajectoryPlanning, assembly::Algorithm::Mappo,
                                                      seed, opt.traj_steps, opt.episodes),
                                    "trajectory-mappo-seed" + std::to_string(seed));
    const std::string central =
        train(opt, train_config(env::TaskKind::TrajectoryPlanning, assembly::Algorithm::CentralPpo, seed,
                                opt.traj_steps, opt.episodes),
              "trajectory-ppo-central-seed" + std::to_string(seed));
    if (seed == opt.seeds.front()) *mappo_seed1_dir = mappo;
    const json summary = read_json(mappo + "/eval_summary.json");
    const double pos = json_number(summary, "mean_position_error_m");
    pos_errors.push_back(pos);
    const std::vector<double> blocks = late_block_means(csv_column(mappo + "/metrics.csv", "mean_reward"), 5);
    bool mono = true;
    for (std::size_t b = 1; b < blocks.size(); ++b) mono = mono && blocks[b] >= blocks[b - 1];
    monotone = monotone && mono;
    const double mappo_reward = median(csv_column(mappo + "/eval_episodes.csv", "return"));
    const double central_reward = median(csv_column(central + "/eval_episodes.csv", "return"));
    if (mappo_reward >= central_reward) ++mappo_wins;
    per_seed.push_back({{"seed", seed},
                        {"mappo_position_error", pos},
                        {"late_reward_block_means", blocks},
                        {"monotone", mono},
                        {"mappo_median_eval_return", mappo_reward},
                        {"central_median_eval_return", central_reward},
                        {"mappo_dir", mappo},
                        {"central_dir", central}});
  }
  const double med = median(pos_errors);
  Outcome c4{4, med < 0.05 && monotone, "", {}};
  c4.detail = "desk2 MAPPO median eval position error " + num(med, 4) + " m over " +
              std::to_string(opt.seeds.size()) + " seeds at " + std::to_string(opt.traj_steps) +
              " steps (limit 0.05), late-half reward block means nondecreasing: " + (monotone ? "yes" : "no");
  c4.data = {{"median_position_error", med}, {"monotone", monotone}, {"runs", per_seed}};
  report(c4);
  Outcome c5{5, mappo_wins == static_cast<int>(opt.seeds.size()), "", {}};
  c5.detail = "MAPPO median eval return >= centralized PPO in " + std::to_string(mappo_wins) + "/" +
              std::to_string(opt.seeds.size()) + " seed pairings";
  for (const json& s : per_seed) {
    c5.detail += " [" + num(s["mappo_median_eval_return"].get<double>(), 5) + " vs " +
                 num(s["central_median_eval_return"].get<double>(), 5) + "]";
  }
  c5.data = {{"mappo_wins", mappo_wins}, {"runs", per_seed}};
  report(c5);
}

std::string reorientation(const Options& opt) {
  const std::string dir = train(opt, train_config(env::TaskKind::BaseReorientation, assembly::Algorithm::Mappo, 1,
                                                  opt.reo_steps, opt.episodes),
                                "reorientation-mappo-seed1");
  const std::string ckpt = dir + "/policies.ckpt";
  const json summary = read_json(dir + "/eval_summary.json");
  const double success = summary.at("success_rate_0.05rad").get<double>();

  cli::EvalRequest req;
  req.checkpoint = ckpt;
  req.episodes = opt.episodes;
  req.seed = 1000;
  env::DisturbanceSpec failed;
  failed.force.setZero();
  failed.failed_arm = 1;
  req.disturbance = failed;
  const json failed_report = read_json(cli::cmd_disturb(req, {opt.out, "failed-arm"}) + "/disturb.json");
  req.disturbance = env::DisturbanceSpec{};
  const json push_report = read_json(cli::cmd_disturb(req, {opt.out, "push"}) + "/disturb.json");
  req.disturbance.reset();
  const std::string sweep = cli::cmd_sweep_mass(req, {0.5, 0.75, 1.0, 1.25, 1.5}, {opt.out, "sweep-mass"});
  const double success_125 = csv_column(sweep + "/sweep.csv", "success_rate").at(3);

  const double failed_ratio = json_number(failed_report, "steady_ratio");
  const double push_ratio = json_number(push_report, "steady_ratio");
  Outcome o{6, success >= 0.8 && failed_ratio <= 2.0 && push_ratio <= 2.0, "", {}};
  o.detail = "desk2 reorientation success " + num(success, 3) + " at 0.05 rad (limit 0.8); steady error ratio " +
             num(failed_ratio, 3) + " with arm 1 failed, " + num(push_ratio, 3) +
             " after the 7.5 s push (limit 2); [info] success at 1.25x mass " + num(success_125, 3);
  o.data = {{"success_rate", success},
            {"failed_arm", failed_report},
            {"push", push_report},
            {"success_rate_mass_1.25", success_125},
            {"dir", dir}};
  o.data["failed_arm"].erase("nominal");
  o.data["failed_arm"].erase("disturbed");
  o.data["push"].erase("nominal");
  o.data["push"].erase("disturbed");
  report(o);
  return ckpt;
}

void reassembly(const Options& opt, const std::string& trajectory_ckpt, const std::string& reorientation_ckpt) {
  cli::ReassembleRequest req;
  req.trajectory_checkpoint = trajectory_ckpt;
  req.reorientation_checkpoint = reorientation_ckpt;
  req.episodes = opt.episodes;
  req.seed = 1000;
  const std::string dir = cli::cmd_reassemble_eval(req, {opt.out, "reassembly"});
  const json r = read_json(dir + "/report.json");
  const double pos_ratio = json_number(r, "position_error_ratio");
  const double base_ratio = json_number(r, "base_error_ratio");
  const bool unchanged = r.at("hashes_unchanged").get<bool>();
  Outcome o{7, pos_ratio <= 2.0 && base_ratio <= 2.0 && unchanged, "", {}};
  o.detail = "mixed/single error ratios: position " + num(pos_ratio, 3) + ", base " + num(base_ratio, 3) +
             " (limit 2); donor file and actor hashes unchanged: " + (unchanged ? "yes" : "no");
  o.data = {{"position_error_ratio", pos_ratio},
            {"base_error_ratio", base_ratio},
            {"hashes_unchanged", unchanged},
            {"hashes", r.at("hashes")},
            {"dir", dir}};
  report(o);
}

void determinism(const Options& opt) {
  cli::RunConfig c = train_config(env::TaskKind::TrajectoryPlanning, assembly::Algorithm::Mappo, 7,
                                  opt.determinism_steps, 5);
  c.train.workers = 1;
  const std::string a = train(opt, c, "determinism");
  const std::string b = train(opt, c, "determinism");
  bool same = true;
  std::string which;
  for (const char* f : {"metrics.csv", "eval_summary.json", "eval_episodes.csv", "policies.ckpt"}) {
    const bool eq = cli::read_file(a + "/" + f) == cli::read_file(b + "/" + f);
    same = same && eq;
    which += std::string(" ") + f + (eq ? " identical" : " DIFFERS");
  }
  report({8, same, "two runs, seed 7, workers 1:" + which, {{"dirs", {a, b}}}});
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  bool quick = false;
  std::string only;
  CLI::App app{"Acceptance criteria 1-9"};
  app.add_option("--out", opt.out, "Directory for the training runs");
  app.add_option("--traj-steps", opt.traj_steps, "Step budget of each trajectory run")->capture_default_str();
  app.add_option("--reo-steps", opt.reo_steps, "Step budget of the reorientation run")->capture_default_str();
  app.add_option("--episodes", opt.episodes, "Evaluation episodes")->capture_default_str();
  app.add_flag("--quick", quick, "Tiny budgets: exercises the harness, criteria 4-7 will not pass");
  app.add_option("--only", only, "Comma list of criteria to run (default all)");
  CLI11_PARSE(app, argc, argv);
  if (quick) {
    opt.traj_steps = opt.reo_steps = 4'000;
    opt.determinism_steps = 800;
    opt.episodes = 3;
  }
  const auto wanted = [&](int id) {
    if (only.empty()) return true;
    std::stringstream ss(only);
    for (std::string s; std::getline(ss, s, ',');) {
      if (std::stoi(s) == id) return true;
    }
    return false;
  };

  const auto t0 = Clock::now();
  try {
    fs::create_directories(opt.out);
    if (wanted(1)) momentum_and_speed();
    if (wanted(2)) gradients();
    if (wanted(3)) gae();
    if (wanted(9)) rewards();
    if (wanted(8)) determinism(opt);
    std::string trajectory_dir, reorientation_ckpt;
    if (wanted(4) || wanted(5) || wanted(7)) trajectory_and_ranking(opt, &trajectory_dir);
    if (wanted(6) || wanted(7)) reorientation_ckpt = reorientation(opt);
    if (wanted(7)) reassembly(opt, trajectory_dir + "/policies.ckpt", reorientation_ckpt);
  } catch (const std::exception& e) {
    std::cerr << "acceptance harness error: " << e.what() << std::endl;
    return 1;
  }

  std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  json j = json::array();
  int passed = 0;
  std::cout << "\nsummary (" << num(seconds_since(t0), 5) << " s)\n";
  for (const Outcome& o : outcomes) {
    std::cout << "criterion " << o.id << ": " << (o.pass ? "PASS" : "FAIL") << "\n";
    passed += o.pass ? 1 : 0;
    j.push_back({{"criterion", o.id}, {"pass", o.pass}, {"detail", o.detail}, {"data", o.data}});
  }
  std::cout << passed << "/" << outcomes.size() << " criteria pass" << std::endl;
  cli::write_file((fs::path(opt.out) / "acceptance_report.json").string(), j.dump(2) + "\n");
  return 0;
}
