#include "octo/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "octo/assembly/agents.hpp"
#include "octo/assembly/checkpoint.hpp"
#include "octo/assembly/reassemble.hpp"
#include "octo/common/errors.hpp"
#include "octo/common/hash.hpp"
#include "octo/common/rng.hpp"
#include "octo/env/trace.hpp"
#include "octo/marl/evaluation.hpp"

namespace octo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kMetricsFile = "metrics.csv";
constexpr const char* kStateFile = "trainer_state.bin";

/// One run directory and its manifest.
class Run {
 public:
  Run(const std::string& command, const OutputSpec& out, const std::string& default_name, const Invocation& inv)
      : log_(inv.log) {
    const std::string dir = create_run_dir(output_root(out.root), out.name.empty() ? default_name : out.name);
    m_.command = command;
    m_.argv = inv.argv;
    m_.output_dir = dir;
    m_.started_at = utc_now();
  }

  /// Reopens an existing run for resumption.
  Run(const std::string& run_dir, const Invocation& inv) : log_(inv.log) {
    m_ = RunManifest::read(run_dir);
    m_.output_dir = run_dir;
    m_.status = "running";
    m_.finished_at.clear();
  }

  RunManifest& manifest() { return m_; }
  const std::string& dir() const { return m_.output_dir; }
  std::string path(const std::string& rel) const { return (fs::path(m_.output_dir) / rel).string(); }

  /// Writes a declared output file.
  void put(const std::string& rel, const std::string& content) {
    fs::create_directories(fs::path(path(rel)).parent_path());
    write_file(path(rel), content);
    m_.declare(rel);
    m_.write();
  }

  void declare(const std::string& rel) {
    m_.declare(rel);
    m_.write();
  }

  void finish(const std::string& status, int code) {
    m_.status = status;
    m_.exit_code = code;
    m_.finished_at = utc_now();
    m_.write();
  }

  void say(const std::string& line) const {
    if (log_ != nullptr) *log_ << line << "\n" << std::flush;
  }

 private:
  RunManifest m_;
  std::ostream* log_;
};

int code_for(const std::exception& e) {
  if (dynamic_cast<const CompositionError*>(&e) || dynamic_cast<const VersionError*>(&e)) {
    return exit_code::kComposition;
  }
  if (dynamic_cast<const TrainingError*>(&e)) return exit_code::kDivergence;
  if (dynamic_cast<const ConfigurationError*>(&e) || dynamic_cast<const InputError*>(&e)) {
    return exit_code::kUsage;
  }
  return exit_code::kFailure;
}

/// Runs `body` and records a failure in the manifest before rethrowing.
template <class F>
void guarded(Run& run, F body) {
  try {
    body();
  } catch (const std::exception& e) {
    run.manifest().status = "failed: " + std::string(e.what());
    run.finish(run.manifest().status, code_for(e));
    throw;
  }
}

void set_model(RunManifest& m, const robot::RobotConfig& rc, const std::string& source) {
  m.model_name = rc.name;
  m.model_source = source;
  m.model_hash = git_blob_hash(robot::config_to_json_text(rc));
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Training ------------------------------------------------------------------

struct Setup {
  robot::RobotConfig robot;
  std::shared_ptr<const dynamics::KinematicTree> tree;
  env::EnvConfig env;
  std::vector<env::AgentSpec> agents;

  marl::EnvFactory factory() const {
    return [tree = tree, agents = agents, env = env] { return env::Environment(tree, agents, env); };
  }
};

Setup make_setup(const RunConfig& c, const robot::RobotConfig& rc) {
  Setup s;
  s.robot = rc;
  s.tree = std::make_shared<const dynamics::KinematicTree>(robot::build_space_robot(rc));
  s.env = c.env_config();
  s.agents = assembly::divide_agents(*s.tree, s.env.task);
  return s;
}

std::string iter_name(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "checkpoints/iter_%06d.ckpt", iteration);
  return buf;
}

assembly::PolicySet stamped(const marl::Trainer& tr, const RunConfig& c) {
  assembly::PolicySet set = tr.policy_set();
  set.provenance.config_hash = run_config_hash(c);
  return set;
}

void save_set(Run& run, const std::string& rel, const assembly::PolicySet& set) {
  run.put(rel, assembly::serialize_policies(set));
}

/// Iterates until the budget (or `stop_after_steps`) is spent, appending to
/// metrics.csv and checkpointing along the way.
void train_loop(Run& run, const RunConfig& c, const Setup& setup, marl::Trainer& tr, std::int64_t stop_after_steps) {
  std::ofstream metrics(run.path(kMetricsFile), std::ios::app | std::ios::binary);
  if (!metrics) throw ConfigurationError("cannot append to '" + run.path(kMetricsFile) + "'");
  const auto stop = [&] { return tr.finished() || (stop_after_steps >= 0 && tr.env_steps() >= stop_after_steps); };
  while (!stop()) {
    marl::IterationMetrics m;
    try {
      m = tr.iterate();
    } catch (const TrainingError&) {
      // The networks may hold NaN; keep them for inspection.
      save_set(run, "diagnostic.ckpt", stamped(tr, c));
      run.put("diagnostic_state.bin", tr.save_state());
      throw;
    }
    metrics << marl::metrics_row(m) << "\n" << std::flush;
    if (tr.iteration() % c.checkpoint_every == 0) {
      save_set(run, iter_name(tr.iteration()), stamped(tr, c));
      run.put(kStateFile, tr.save_state());
    }
    if (m.iteration % 10 == 0) {
      run.say("iter " + std::to_string(m.iteration) + " steps " + std::to_string(m.env_steps) + " reward " +
              fixed(m.mean_reward, 4) + " pos_err " + fmt(m.position_error) + " base_err " + fmt(m.base_error));
    }
  }
  metrics.close();
  run.put(kStateFile, tr.save_state());
  if (!tr.finished()) {
    run.finish("interrupted", exit_code::kOk);
    return;
  }
  const assembly::PolicySet set = stamped(tr, c);
  save_set(run, "policies.ckpt", set);
  marl::EvalOptions opt;
  opt.episodes = c.eval_episodes;
  opt.seed = c.eval_seed;
  const marl::EvalSummary summary = marl::evaluate(set, setup.factory()(), opt);
  run.put("eval_summary.json", marl::summary_json(summary));
  run.put("eval_episodes.csv", marl::episodes_csv(summary));
  run.say("eval pos_err " + fmt(summary.mean_position_error) + " base_err " + fmt(summary.mean_base_error) +
          " success " + fmt(summary.success_rate));
  run.finish("completed", exit_code::kOk);
}

std::string train_impl(const RunConfig& config, const OutputSpec& out, std::int64_t stop_after_steps,
                       const Invocation& inv) {
  config.validate();
  const robot::RobotConfig rc = config.robot_config();
  const Setup setup = make_setup(config, rc);
  const std::string name = "train-" + rc.name + "-" + std::string(env::task_name(config.task)) + "-" +
                           std::string(assembly::algorithm_name(config.algorithm)) + "-seed" +
                           std::to_string(config.seed);
  Run run("train", out, name, inv);
  guarded(run, [&] {
    RunManifest& m = run.manifest();
    m.config = to_json(config);
    m.seeds = {{"seed", config.seed}, {"eval_seed", config.eval_seed}};
    set_model(m, rc, config.model_file.empty() ? config.robot : config.model_file);
    run.put("config.json", to_json(config).dump(2) + "\n");
    run.put("robot.json", robot::config_to_json_text(rc));
    marl::Trainer tr(setup.factory(), config.train, config.algorithm, config.seed, assembly::RobotStamp::of(rc));
    run.put(kMetricsFile, marl::metrics_header(tr.learner_ids()) + "\n");
    run.say("run " + run.dir());
    train_loop(run, config, setup, tr, stop_after_steps);
  });
  return run.dir();
}

// Evaluation ----------------------------------------------------------------

struct Loaded {
  robot::RobotConfig robot;  // nominal, before any mass override
  assembly::PolicySet set;
  std::vector<std::string> warnings;
};

Loaded load_checkpoint(const std::string& path, const std::string& model_file) {
  if (path.empty()) throw ConfigurationError("a checkpoint is required");
  if (!fs::exists(path)) throw ConfigurationError("checkpoint '" + path + "' does not exist");
  const assembly::PolicySet raw = assembly::deserialize_policies(read_file(path));
  Loaded l;
  if (model_file.empty()) {
    try {
      l.robot = robot::preset(raw.robot.name);
    } catch (const ConfigurationError&) {
      throw ConfigurationError("checkpoint robot '" + raw.robot.name + "' is not a preset; pass --model");
    }
  } else {
    l.robot = robot::load_robot_config(model_file);
  }
  if (raw.robot.arm_count != l.robot.arm_count || raw.robot.joints_per_arm != l.robot.joints_per_arm) {
    throw CompositionError("checkpoint '" + path + "' was trained for " + std::to_string(raw.robot.arm_count) +
                           " arms of " + std::to_string(raw.robot.joints_per_arm) + " joints, robot '" +
                           l.robot.name + "' has " + std::to_string(l.robot.arm_count) + " of " +
                           std::to_string(l.robot.joints_per_arm));
  }
  l.set = assembly::load_policies(path, assembly::RobotStamp::of(l.robot), &l.warnings);
  return l;
}

robot::RobotConfig with_mass(robot::RobotConfig rc, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("mass scale must be positive");
  rc.base_mass *= scale;
  return rc;
}

env::Environment make_env(const robot::RobotConfig& rc, const env::TaskSpec& task, env::EnvConfig ec,
                          const std::optional<env::DisturbanceSpec>& disturbance) {
  auto tree = std::make_shared<const dynamics::KinematicTree>(robot::build_space_robot(rc));
  ec.task = task;
  ec.disturbance = disturbance;
  if (disturbance) disturbance->validate(*tree, ec.horizon());
  return env::Environment(tree, assembly::divide_agents(*tree, task), ec);
}

void check_request(const EvalRequest& r) {
  if (r.episodes < 1) throw InputError("--episodes must be at least 1");
  if (!(r.mass_scale > 0.0) || !std::isfinite(r.mass_scale)) throw InputError("--mass-scale must be positive");
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

void note_eval_inputs(Run& run, const EvalRequest& r, const Loaded& l) {
  RunManifest& m = run.manifest();
  set_model(m, l.robot, r.model_file.empty() ? l.robot.name : r.model_file);
  json d = nullptr;
  if (r.disturbance) {
    const env::DisturbanceSpec& s = *r.disturbance;
    d = {{"onset", s.onset},
         {"body", s.body},
         {"force", {s.force.x(), s.force.y(), s.force.z()}},
         {"torque", {s.torque.x(), s.torque.y(), s.torque.z()}},
         {"duration", s.duration},
         {"failed_arm", s.failed_arm ? json(*s.failed_arm) : json(nullptr)}};
  }
  m.config = {{"checkpoint", r.checkpoint},
              {"checkpoint_git_blob_hash", git_blob_hash(read_file(r.checkpoint))},
              {"episodes", r.episodes},
              {"mass_scale", r.mass_scale},
              {"disturbance", d},
              {"warnings", l.warnings}};
  m.seeds = {{"eval_seed", r.seed}};
}

marl::EvalSummary run_eval(const Loaded& l, const EvalRequest& r, double mass_scale,
                           const std::optional<env::DisturbanceSpec>& disturbance) {
  marl::EvalOptions opt;
  opt.episodes = r.episodes;
  opt.seed = r.seed;
  opt.keep_series = true;
  return marl::evaluate(l.set, make_env(with_mass(l.robot, mass_scale), l.set.task, r.env, disturbance), opt);
}

/// The error a task is judged by: base attitude when any arm reorients the
/// base, end-effector position otherwise.
bool judged_by_base(const env::TaskSpec& task, int arm_count) {
  for (int arm = 0; arm < arm_count; ++arm) {
    if (task.arm_task(arm) == env::TaskKind::BaseReorientation) return true;
  }
  return false;
}

std::vector<env::TaskKind> default_assignment(int arms) {
  std::vector<env::TaskKind> a;
  for (int i = 0; i < arms; ++i) {
    a.push_back(i % 2 == 0 ? env::TaskKind::TrajectoryPlanning : env::TaskKind::BaseReorientation);
  }
  return a;
}

json parse_summary(const marl::EvalSummary& s) { return json::parse(marl::summary_json(s)); }

double ratio(double a, double b) { return b > 0.0 ? a / b : std::numeric_limits<double>::infinity(); }

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string cmd_train(const RunConfig& config, const OutputSpec& out, const Invocation& inv) {
  return train_impl(config, out, -1, inv);
}

std::string cmd_train_until(const RunConfig& config, const OutputSpec& out, std::int64_t stop_after_steps,
                            const Invocation& inv) {
  return train_impl(config, out, stop_after_steps, inv);
}

std::string cmd_resume(const std::string& run_dir, const Invocation& inv, std::int64_t stop_after_steps) {
  if (!fs::is_directory(run_dir)) throw ConfigurationError("run directory '" + run_dir + "' does not exist");
  Run run(run_dir, inv);
  if (run.manifest().command != "train") throw ConfigurationError("'" + run_dir + "' is not a training run");
  guarded(run, [&] {
    const RunConfig config = from_json(json::parse(read_file(run.path("config.json"))), RunConfig{});
    const robot::RobotConfig rc = robot::config_from_json_text(read_file(run.path("robot.json")));
    if (git_blob_hash(robot::config_to_json_text(rc)) != run.manifest().model_hash) {
      throw CompositionError("robot.json in '" + run_dir + "' no longer matches the manifest hash");
    }
    const Setup setup = make_setup(config, rc);
    marl::Trainer tr(setup.factory(), config.train, config.algorithm, config.seed, assembly::RobotStamp::of(rc));
    tr.load_state(read_file(run.path(kStateFile)));

    // Drop metrics rows written after the saved state.
    std::istringstream in(read_file(run.path(kMetricsFile)));
    std::string line, kept;
    for (int row = 0; row <= tr.iteration() && std::getline(in, line); ++row) kept += line + "\n";
    write_file(run.path(kMetricsFile), kept);

    run.manifest().resumes.push_back({{"argv", inv.argv}, {"at", utc_now()}, {"from_iteration", tr.iteration()}});
    run.manifest().write();
    run.say("resuming " + run_dir + " at iteration " + std::to_string(tr.iteration()));
    train_loop(run, config, setup, tr, stop_after_steps);
  });
  return run.dir();
}

std::string cmd_eval(const EvalRequest& r, const OutputSpec& out, const Invocation& inv) {
  check_request(r);
  const Loaded l = load_checkpoint(r.checkpoint, r.model_file);
  for (const std::string& w : l.warnings) {
    if (inv.log != nullptr) *inv.log << "warning: " << w << "\n";
  }
  Run run("eval", out, "eval-" + stem(r.checkpoint) + "-seed" + std::to_string(r.seed), inv);
  guarded(run, [&] {
    note_eval_inputs(run, r, l);
    const marl::EvalSummary s = run_eval(l, r, r.mass_scale, r.disturbance);
    run.put("summary.json", marl::summary_json(s));
    run.put("episodes.csv", marl::episodes_csv(s));
    run.put("series.csv", marl::series_csv(s));
    run.finish("completed", exit_code::kOk);
  });
  return run.dir();
}

std::string cmd_sweep_mass(const EvalRequest& r, const std::vector<double>& scales, const OutputSpec& out,
                           const Invocation& inv) {
  check_request(r);
  if (scales.empty()) throw InputError("--scales needs at least one value");
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InputError("mass scales must be positive");
  }
  const Loaded l = load_checkpoint(r.checkpoint, r.model_file);
  Run run("sweep-mass", out, "sweep-mass-" + stem(r.checkpoint) + "-seed" + std::to_string(r.seed), inv);
  guarded(run, [&] {
    note_eval_inputs(run, r, l);
    run.manifest().config["scales"] = scales;
    std::string csv =
        "mass_scale,base_mass,episodes,success_rate,mean_base_err,mean_steady_base_err,mean_pos_err,"
        "mean_steady_pos_err,collision_rate,mean_return\n";
    for (double scale : scales) {
      const marl::EvalSummary s = run_eval(l, r, scale, r.disturbance);
      csv += fmt(scale) + "," + fmt(l.robot.base_mass * scale) + "," + std::to_string(s.episodes) + "," +
             fmt(s.success_rate) + "," + fmt(s.mean_base_error) + "," + fmt(s.mean_steady_base_error) + "," +
             fmt(s.mean_position_error) + "," + fmt(s.mean_steady_position_error) + "," + fmt(s.collision_rate) +
             "," + fmt(s.mean_return) + "\n";
      run.say("mass x" + fmt(scale) + " success " + fmt(s.success_rate) + " base_err " + fmt(s.mean_base_error));
    }
    run.put("sweep.csv", csv);
    run.finish("completed", exit_code::kOk);
  });
  return run.dir();
}

std::string cmd_disturb(const EvalRequest& request, const OutputSpec& out, const Invocation& inv) {
  check_request(request);
  EvalRequest r = request;
  if (!r.disturbance) r.disturbance = env::DisturbanceSpec{};
  const Loaded l = load_checkpoint(r.checkpoint, r.model_file);
  Run run("disturb", out, "disturb-" + stem(r.checkpoint) + "-seed" + std::to_string(r.seed), inv);
  guarded(run, [&] {
    note_eval_inputs(run, r, l);
    const marl::EvalSummary nominal = run_eval(l, r, r.mass_scale, std::nullopt);
    const marl::EvalSummary disturbed = run_eval(l, r, r.mass_scale, r.disturbance);
    const bool base = judged_by_base(l.set.task, l.robot.arm_count);
    const double nominal_steady = base ? nominal.mean_steady_base_error : nominal.mean_steady_position_error;
    const double disturbed_steady = base ? disturbed.mean_steady_base_error : disturbed.mean_steady_position_error;

    // Largest per-step error after the onset, averaged over episodes.
    const double onset = r.disturbance->has_push() ? r.disturbance->onset : 0.0;
    double peak = 0.0;
    for (const marl::EpisodeReport& e : disturbed.reports) {
      const std::vector<double>& series = base ? e.base_series : e.position_series;
      double p = 0.0;
      for (std::size_t t = 0; t < series.size(); ++t) {
        if (e.time[t] > onset) p = std::max(p, series[t]);
      }
      peak += p / static_cast<double>(disturbed.reports.size());
    }
    const double rel = ratio(disturbed_steady, nominal_steady);
    json report = {{"metric", base ? "base_err" : "pos_err"},
                   {"nominal_steady", number(nominal_steady)},
                   {"disturbed_steady", number(disturbed_steady)},
                   {"disturbed_peak_after_onset", number(peak)},
                   {"steady_ratio", number(rel)},
                   {"reconverged_within_2x", rel <= 2.0},
                   {"nominal", parse_summary(nominal)},
                   {"disturbed", parse_summary(disturbed)}};
    run.put("disturb.json", report.dump(2) + "\n");
    run.put("series_nominal.csv", marl::series_csv(nominal));
    run.put("series_disturbed.csv", marl::series_csv(disturbed));
    run.say("steady " + fmt(nominal_steady) + " -> " + fmt(disturbed_steady) + " (x" + fmt(rel) + ")");
    run.finish("completed", exit_code::kOk);
  });
  return run.dir();
}

std::string cmd_reassemble_eval(const ReassembleRequest& r, const OutputSpec& out, const Invocation& inv) {
  if (r.episodes < 1) throw InputError("--episodes must be at least 1");
  const Loaded traj = load_checkpoint(r.trajectory_checkpoint, r.model_file);
  const Loaded reo = load_checkpoint(r.reorientation_checkpoint, r.model_file);
  if (traj.set.robot.name != reo.set.robot.name || traj.set.robot.hash != reo.set.robot.hash ||
      traj.set.robot.arm_count != reo.set.robot.arm_count ||
      traj.set.robot.joints_per_arm != reo.set.robot.joints_per_arm) {
    throw CompositionError("donors were trained on different robots ('" + traj.set.robot.name + "' " +
                           to_hex(traj.set.robot.hash) + " vs '" + reo.set.robot.name + "' " +
                           to_hex(reo.set.robot.hash) + ")");
  }
  const robot::RobotConfig& rc = traj.robot;
  const std::vector<env::TaskKind> assignment =
      r.assignment.empty() ? default_assignment(rc.arm_count) : r.assignment;
  if (static_cast<int>(assignment.size()) != rc.arm_count) {
    throw ConfigurationError("--assign lists " + std::to_string(assignment.size()) + " arms, robot has " +
                             std::to_string(rc.arm_count));
  }

  struct Hashes {
    std::string file;
    std::string actors;
  };
  const auto hashes = [](const std::string& path) {
    const std::string bytes = read_file(path);
    return Hashes{git_blob_hash(bytes), to_hex(assembly::deserialize_policies(bytes).actor_hash())};
  };
  const Hashes traj_before = hashes(r.trajectory_checkpoint);
  const Hashes reo_before = hashes(r.reorientation_checkpoint);

  Run run("reassemble-eval", out, "reassemble-" + rc.name + "-seed" + std::to_string(r.seed), inv);
  guarded(run, [&] {
    RunManifest& m = run.manifest();
    set_model(m, rc, r.model_file.empty() ? rc.name : r.model_file);
    json names = json::array();
    for (env::TaskKind k : assignment) names.push_back(std::string(env::task_name(k)));
    m.config = {{"trajectory_checkpoint", r.trajectory_checkpoint},
                {"reorientation_checkpoint", r.reorientation_checkpoint},
                {"assignment", names},
                {"episodes", r.episodes}};
    m.seeds = {{"eval_seed", r.seed}};

    const dynamics::KinematicTree tree = robot::build_space_robot(rc);
    std::map<int, assembly::Donor> donors;
    for (int arm = 0; arm < rc.arm_count; ++arm) {
      const env::TaskKind k = assignment[static_cast<std::size_t>(arm)];
      donors[arm] = {k == env::TaskKind::TrajectoryPlanning ? &traj.set : &reo.set, k};
    }
    const assembly::Reassembly mixed =
        assembly::reassemble(tree, assembly::RobotStamp::of(rc), donors, traj.set.task.episode_length);
    save_set(run, "mixed.ckpt", mixed.set);

    marl::EvalOptions opt;
    opt.episodes = r.episodes;
    opt.seed = r.seed;
    const auto eval_on = [&](const assembly::PolicySet& set, const env::TaskSpec& task) {
      return marl::evaluate(set, make_env(rc, task, r.env, std::nullopt), opt);
    };
    const marl::EvalSummary mixed_summary = eval_on(mixed.set, mixed.task);
    const marl::EvalSummary traj_summary = eval_on(traj.set, traj.set.task);
    const marl::EvalSummary reo_summary = eval_on(reo.set, reo.set.task);

    const Hashes traj_after = hashes(r.trajectory_checkpoint);
    const Hashes reo_after = hashes(r.reorientation_checkpoint);
    const bool unchanged = traj_before.file == traj_after.file && traj_before.actors == traj_after.actors &&
                           reo_before.file == reo_after.file && reo_before.actors == reo_after.actors;

    const bool any_traj = std::count(assignment.begin(), assignment.end(), env::TaskKind::TrajectoryPlanning) > 0;
    const bool any_reo = std::count(assignment.begin(), assignment.end(), env::TaskKind::BaseReorientation) > 0;
    const double pos_ratio =
        any_traj ? ratio(mixed_summary.mean_position_error, traj_summary.mean_position_error) : 0.0;
    const double base_ratio = any_reo ? ratio(mixed_summary.mean_base_error, reo_summary.mean_base_error) : 0.0;
    const auto hash_json = [](const Hashes& before, const Hashes& after) {
      return json{{"file_before", before.file},
                  {"file_after", after.file},
                  {"actors_before", before.actors},
                  {"actors_after", after.actors}};
    };
    json report = {{"assignment", names},
                   {"mixed", parse_summary(mixed_summary)},
                   {"single_task",
                    {{"trajectory", parse_summary(traj_summary)}, {"reorientation", parse_summary(reo_summary)}}},
                   {"position_error_ratio", number(pos_ratio)},
                   {"base_error_ratio", number(base_ratio)},
                   {"within_2x", pos_ratio <= 2.0 && base_ratio <= 2.0},
                   {"hashes",
                    {{"trajectory", hash_json(traj_before, traj_after)},
                     {"reorientation", hash_json(reo_before, reo_after)}}},
                   {"hashes_unchanged", unchanged}};
    run.put("report.json", report.dump(2) + "\n");
    run.put("mixed_episodes.csv", marl::episodes_csv(mixed_summary));
    run.say("mixed pos_err " + fmt(mixed_summary.mean_position_error) + " base_err " +
            fmt(mixed_summary.mean_base_error) + " hashes unchanged " + (unchanged ? "yes" : "no"));
    run.finish("completed", exit_code::kOk);
  });
  return run.dir();
}

std::string cmd_export_trace(const EvalRequest& r, int episode, const OutputSpec& out, const Invocation& inv) {
  check_request(r);
  if (episode < 0) throw InputError("--episode must be non-negative");
  const Loaded l = load_checkpoint(r.checkpoint, r.model_file);
  Run run("export-trace", out, "trace-" + stem(r.checkpoint) + "-ep" + std::to_string(episode), inv);
  guarded(run, [&] {
    note_eval_inputs(run, r, l);
    run.manifest().config["episode"] = episode;
    env::Environment e = make_env(with_mass(l.robot, r.mass_scale), l.set.task, r.env, r.disturbance);
    l.set.check_compatible(e);
    // Same goals as episode `episode` of an evaluation with this seed.
    std::vector<Eigen::VectorXd> obs = e.reset(Rng::derive(r.seed, {static_cast<std::uint64_t>(episode)}));
    env::TraceWriter trace(e);
    trace.record(e, std::vector<double>(static_cast<std::size_t>(e.num_agents()), 0.0), e.info());
    while (!e.done()) {
      const Eigen::VectorXd action = l.set.act(e, obs);
      env::StepResult s = e.step(std::span<const double>(action.data(), static_cast<std::size_t>(action.size())));
      trace.record(e, s.rewards, s.info);
      obs = std::move(s.observations);
    }
    std::ostringstream csv;
    trace.write(csv);
    run.put("trace.csv", csv.str());
    run.finish("completed", exit_code::kOk);
  });
  return run.dir();
}

std::string csv_columns_help() {
  return R"(Output files (CSV columns):
  train/metrics.csv        iteration, env_steps, reward_<learner id>..., mean_reward,
                           episode_return, pos_err (m), ori_err (rad), base_err (rad),
                           collision_rate, critic_loss, entropy. Learner 0 is the
                           central policy; errors are NaN when no arm has that goal.
  eval_episodes.csv,
  eval/episodes.csv        episode, goal_seed, pos_err, ori_err, base_err,
                           steady_pos_err, steady_base_err, return, success,
                           collision_rate. Errors are final-step values; steady
                           values average the last 10% of the episode.
  eval/series.csv,
  disturb/series_*.csv     episode, step, time (s), pos_err (m), base_err (rad).
  sweep-mass/sweep.csv     mass_scale, base_mass (kg), episodes, success_rate,
                           mean_base_err, mean_steady_base_err, mean_pos_err,
                           mean_steady_pos_err, collision_rate, mean_return.
  reassemble-eval/
    mixed_episodes.csv     same columns as episodes.csv.
  export-trace/trace.csv   step, time, q_<j>, qdot_<j>, pos_err_<arm>, ori_err_<arm>,
                           base_err_x, base_err_y, base_err_z, base_err,
                           reward_<agent id>, collided, lin_mom_x..z, ang_mom_x..z,
                           ext_force_x..z. Row 0 is the state after reset.
Every run directory holds manifest.json listing the files written.
Output root: --out, else $OCTO_OUTPUT_ROOT, else ./runs.
Exit codes: 0 ok, 1 I/O or corrupt file, 2 usage, 3 training divergence,
4 checkpoint does not fit the robot or task.
)";
}

// Command line ----------------------------------------------------------------

namespace {

struct DisturbFlags {
  bool push = false;
  std::vector<double> force;
  std::vector<double> torque;
  std::optional<double> onset;
  std::optional<double> duration;
  std::optional<int> body;
  std::optional<int> failed_arm;

  void add(CLI::App* cmd) {
    cmd->add_flag("--disturb", push, "Apply the default push (2 N along +y on arm 0's last link at 7.5 s for 0.1 s)");
    cmd->add_option("--force", force, "Push force fx,fy,fz in N (implies --disturb)")->delimiter(',')->expected(3);
    cmd->add_option("--torque", torque, "Push torque tx,ty,tz in N m (implies --disturb)")
        ->delimiter(',')
        ->expected(3);
    cmd->add_option("--onset", onset, "Push onset in s");
    cmd->add_option("--duration", duration, "Push duration in s");
    cmd->add_option("--body", body, "Pushed body index (0 = base, -1 = last link of arm 0)");
    cmd->add_option("--failed-arm", failed_arm, "Lock every joint of this arm (0-based)");
  }

  std::optional<env::DisturbanceSpec> spec() const {
    const bool any_push = push || !force.empty() || !torque.empty() || onset || duration || body;
    if (!any_push && !failed_arm) return std::nullopt;
    env::DisturbanceSpec d;
    if (!any_push) {
      d.force.setZero();
      d.torque.setZero();
    }
    if (!force.empty()) d.force = Eigen::Vector3d(force[0], force[1], force[2]);
    if (!torque.empty()) {
      d.torque = Eigen::Vector3d(torque[0], torque[1], torque[2]);
      if (force.empty() && !push) d.force.setZero();
    }
    if (onset) d.onset = *onset;
    if (duration) d.duration = *duration;
    if (body) d.body = *body;
    d.failed_arm = failed_arm;
    return d;
  }
};

struct EvalFlags {
  EvalRequest request;
  std::string config_file;
  DisturbFlags disturb;

  void add(CLI::App* cmd, bool checkpoint) {
    if (checkpoint) cmd->add_option("--checkpoint", request.checkpoint, "Policy checkpoint")->required();
    cmd->add_option("--episodes,-n", request.episodes, "Evaluation episodes")->capture_default_str();
    cmd->add_option("--seed", request.seed, "Goal seed; episode k uses derive(seed, k)")->capture_default_str();
    cmd->add_option("--model", request.model_file, "Robot model JSON (default: the checkpoint's preset)");
    cmd->add_option("--mass-scale", request.mass_scale, "Base mass multiplier")->capture_default_str();
    cmd->add_option("--config", config_file, "Run config JSON supplying env settings");
    disturb.add(cmd);
  }

  EvalRequest build() {
    EvalRequest r = request;
    if (!config_file.empty()) r.env = load_run_config(config_file, RunConfig{}).env;
    r.disturbance = disturb.spec();
    return r;
  }
};

struct OutFlags {
  OutputSpec spec;
  void add(CLI::App* cmd) {
    cmd->add_option("--out", spec.root, "Output root (default $OCTO_OUTPUT_ROOT or ./runs)");
    cmd->add_option("--name", spec.name, "Run directory name (a suffix is added if taken)");
  }
};

std::vector<env::TaskKind> parse_assignment(const std::string& text) {
  std::vector<env::TaskKind> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "t" || item == "trajectory") {
      out.push_back(env::TaskKind::TrajectoryPlanning);
    } else if (item == "r" || item == "reorientation") {
      out.push_back(env::TaskKind::BaseReorientation);
    } else {
      throw ConfigurationError("--assign: unknown task '" + item + "' (use trajectory|t or reorientation|r)");
    }
  }
  return out;
}

/// Reads `key` from a config file without applying it, so the preset and task
/// can pick the defaults the rest of the file is layered on.
std::optional<std::string> peek(const json& j, const char* key) {
  if (j.is_object() && j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  return std::nullopt;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Free-floating multi-arm space robot simulator and decentralized MAPPO trainer", "octo"};
  app.footer(csv_columns_help());
  app.require_subcommand(1);

  // train
  struct {
    std::string config_file, preset, model, task, algo, arm_tasks, resume;
    std::optional<std::uint64_t> seed, eval_seed;
    std::optional<std::int64_t> steps;
    std::optional<int> workers, checkpoint_every, eval_episodes;
  } t;
  OutFlags train_out;
  CLI::App* train = app.add_subcommand("train", "Train policies (writes metrics.csv and checkpoints)");
  train->add_option("--config", t.config_file, "Run config JSON");
  train->add_option("--preset", t.preset, "Robot preset: desk2 or full4");
  train->add_option("--model", t.model, "Robot model JSON (overrides --preset)");
  train->add_option("--task", t.task, "trajectory, reorientation or mixed");
  train->add_option("--arm-tasks", t.arm_tasks, "Mixed task: comma list of trajectory|reorientation per arm");
  train->add_option("--algo", t.algo, "mappo or ppo-central");
  train->add_option("--seed", t.seed, "Training seed (default 1)");
  train->add_option("--steps", t.steps, "Environment step budget");
  train->add_option("--workers", t.workers, "Rollout threads (results do not depend on it)");
  train->add_option("--checkpoint-every", t.checkpoint_every, "Iterations between checkpoints");
  train->add_option("--eval-episodes", t.eval_episodes, "Episodes of the final evaluation (default 30)");
  train->add_option("--eval-seed", t.eval_seed, "Seed of the final evaluation");
  train->add_option("--resume", t.resume, "Continue the run in this directory");
  train_out.add(train);
  train->footer(csv_columns_help());

  EvalFlags eval_flags;
  OutFlags eval_out;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint (summary.json, episodes.csv, series.csv)");
  eval_flags.add(eval, true);
  eval_out.add(eval);
  eval->footer(csv_columns_help());

  EvalFlags sweep_flags;
  OutFlags sweep_out;
  std::vector<double> scales{0.5, 0.75, 1.0, 1.25, 1.5};
  CLI::App* sweep = app.add_subcommand("sweep-mass", "Evaluate over base-mass multipliers (sweep.csv)");
  sweep_flags.add(sweep, true);
  sweep->add_option("--scales", scales, "Comma list of base mass multipliers")
      ->delimiter(',')
      ->capture_default_str();
  sweep_out.add(sweep);
  sweep->footer(csv_columns_help());

  EvalFlags disturb_flags;
  OutFlags disturb_out;
  CLI::App* disturb = app.add_subcommand("disturb", "Compare nominal and disturbed evaluations (disturb.json)");
  disturb_flags.add(disturb, true);
  disturb_out.add(disturb);
  disturb->footer(csv_columns_help());

  ReassembleRequest reassemble_req;
  std::string assign, reassemble_config;
  OutFlags reassemble_out;
  CLI::App* reassemble =
      app.add_subcommand("reassemble-eval", "Compose frozen single-task actors into a mixed task (report.json)");
  reassemble->add_option("--trajectory", reassemble_req.trajectory_checkpoint, "Trajectory checkpoint")->required();
  reassemble->add_option("--reorientation", reassemble_req.reorientation_checkpoint, "Reorientation checkpoint")
      ->required();
  reassemble->add_option("--assign", assign, "Comma list per arm: trajectory|t or reorientation|r");
  reassemble->add_option("--episodes,-n", reassemble_req.episodes, "Evaluation episodes")->capture_default_str();
  reassemble->add_option("--seed", reassemble_req.seed, "Goal seed")->capture_default_str();
  reassemble->add_option("--model", reassemble_req.model_file, "Robot model JSON");
  reassemble->add_option("--config", reassemble_config, "Run config JSON supplying env settings");
  reassemble_out.add(reassemble);
  reassemble->footer(csv_columns_help());

  EvalFlags trace_flags;
  OutFlags trace_out;
  int trace_episode = 0;
  CLI::App* trace = app.add_subcommand("export-trace", "Per-step trace of one evaluation episode (trace.csv)");
  trace_flags.add(trace, true);
  trace->add_option("--episode", trace_episode, "Evaluation episode index")->capture_default_str();
  trace_out.add(trace);
  trace->footer(csv_columns_help());

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  Invocation inv{args, &out};
  try {
    std::string dir;
    if (train->parsed()) {
      if (!t.resume.empty()) {
        dir = cmd_resume(t.resume, inv);
      } else {
        json file = json::object();
        if (!t.config_file.empty()) {
          try {
            file = json::parse(read_file(t.config_file));
          } catch (const json::parse_error& e) {
            throw ConfigurationError("config file '" + t.config_file + "' is not valid JSON: " + e.what());
          }
        }
        const std::string preset = !t.preset.empty() ? t.preset : peek(file, "robot").value_or("desk2");
        const std::string task_text = !t.task.empty() ? t.task : peek(file, "task").value_or("trajectory");
        RunConfig c = from_json(file, RunConfig::defaults(preset, env::parse_task(task_text)));
        if (!t.preset.empty()) c.robot = t.preset;
        if (!t.model.empty()) c.model_file = t.model;
        if (!t.task.empty()) c.task = env::parse_task(t.task);
        if (!t.arm_tasks.empty()) c.arm_tasks = parse_assignment(t.arm_tasks);
        if (!t.algo.empty()) c.algorithm = assembly::parse_algorithm(t.algo);
        if (t.seed) c.seed = *t.seed;
        if (t.steps) c.train.max_env_steps = *t.steps;
        if (t.workers) c.train.workers = *t.workers;
        if (t.checkpoint_every) c.checkpoint_every = *t.checkpoint_every;
        if (t.eval_episodes) c.eval_episodes = *t.eval_episodes;
        if (t.eval_seed) c.eval_seed = *t.eval_seed;
        dir = cmd_train(c, train_out.spec, inv);
      }
    } else if (eval->parsed()) {
      dir = cmd_eval(eval_flags.build(), eval_out.spec, inv);
    } else if (sweep->parsed()) {
      dir = cmd_sweep_mass(sweep_flags.build(), scales, sweep_out.spec, inv);
    } else if (disturb->parsed()) {
      dir = cmd_disturb(disturb_flags.build(), disturb_out.spec, inv);
    } else if (reassemble->parsed()) {
      if (!assign.empty()) reassemble_req.assignment = parse_assignment(assign);
      if (!reassemble_config.empty()) reassemble_req.env = load_run_config(reassemble_config, RunConfig{}).env;
      dir = cmd_reassemble_eval(reassemble_req, reassemble_out.spec, inv);
    } else if (trace->parsed()) {
      dir = cmd_export_trace(trace_flags.build(), trace_episode, trace_out.spec, inv);
    }
    out << dir << "\n";
    return exit_code::kOk;
  } catch (const std::exception& e) {
    const int code = code_for(e);
    err << "error: " << e.what() << "\n";
    if (code == exit_code::kUsage) err << "Run with --help for usage.\n";
    return code;
  }
}

}  // namespace octo::cli
