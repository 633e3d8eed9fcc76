#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "octo/cli/config.hpp"
#include "octo/cli/manifest.hpp"
#include "octo/env/task.hpp"

namespace octo::cli {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;      // I/O or corrupt input
inline constexpr int kUsage = 2;        // bad flags or config
inline constexpr int kDivergence = 3;   // non-finite training state
inline constexpr int kComposition = 4;  // checkpoint does not fit the robot or task
}  // namespace exit_code

/// Where a command puts its run directory. `root` falls back to
/// $OCTO_OUTPUT_ROOT and then "runs"; `name` defaults to a label built from
/// the command and its main arguments.
struct OutputSpec {
  std::string root;
  std::string name;
};

/// Invocation context recorded in the manifest.
struct Invocation {
  std::vector<std::string> argv;
  std::ostream* log = nullptr;  // progress lines, may be null
};

/// Trains from scratch into a fresh run directory. Writes manifest.json,
/// config.json, robot.json, metrics.csv, checkpoints/iter_<n>.ckpt every
/// checkpoint_every iterations, trainer_state.bin, policies.ckpt and a final
/// evaluation (eval_summary.json, eval_episodes.csv). On divergence saves
/// diagnostic.ckpt and rethrows the TrainingError. Returns the run directory.
std::string cmd_train(const RunConfig& config, const OutputSpec& out, const Invocation& inv = {});

/// Continues the run in `run_dir` from its last trainer_state.bin. Metrics
/// rows past the saved iteration are dropped first, so the finished run is
/// byte-identical to an uninterrupted one.
std::string cmd_resume(const std::string& run_dir, const Invocation& inv = {}, std::int64_t stop_after_steps = -1);

/// Stops training early after this many environment steps (used to simulate
/// an interrupted run); -1 runs to max_env_steps.
std::string cmd_train_until(const RunConfig& config, const OutputSpec& out, std::int64_t stop_after_steps,
                            const Invocation& inv = {});

struct EvalRequest {
  std::string checkpoint;
  int episodes = 30;
  std::uint64_t seed = 1000;
  std::string model_file;  // robot model; defaults to the preset named in the checkpoint
  std::optional<env::DisturbanceSpec> disturbance;  // push and/or failed arm
  double mass_scale = 1.0;                          // base mass multiplier
  /// Environment settings (dt, rewards, ranges, gains); task and disturbance
  /// are taken from the checkpoint and the request.
  env::EnvConfig env;
};

/// Writes summary.json, episodes.csv and series.csv. Throws InputError when
/// episodes < 1 and CompositionError when the checkpoint does not fit.
std::string cmd_eval(const EvalRequest& request, const OutputSpec& out, const Invocation& inv = {});

/// Evaluates at base masses scale * nominal and writes sweep.csv.
std::string cmd_sweep_mass(const EvalRequest& request, const std::vector<double>& scales, const OutputSpec& out,
                           const Invocation& inv = {});

/// Evaluates without and with the request's disturbance and writes
/// disturb.json plus both error series.
std::string cmd_disturb(const EvalRequest& request, const OutputSpec& out, const Invocation& inv = {});

struct ReassembleRequest {
  std::string trajectory_checkpoint;
  std::string reorientation_checkpoint;
  std::vector<env::TaskKind> assignment;  // one per arm; empty = alternate, starting with trajectory
  int episodes = 30;
  std::uint64_t seed = 1000;
  std::string model_file;
  env::EnvConfig env;
};

/// Builds the Mixed set from the two frozen donors, evaluates it next to the
/// single-task references and writes report.json, mixed.ckpt and
/// mixed_episodes.csv. The report carries the donor file and actor hashes
/// taken before and after.
std::string cmd_reassemble_eval(const ReassembleRequest& request, const OutputSpec& out,
                                const Invocation& inv = {});

/// Per-step trace of one evaluation episode (trace.csv).
std::string cmd_export_trace(const EvalRequest& request, int episode, const OutputSpec& out,
                             const Invocation& inv = {});

/// Command-line front end. `args` excludes the program name. Returns the
/// exit code; the run directory, if any, is printed on `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Help text describing every CSV the tool writes.
std::string csv_columns_help();

}  // namespace octo::cli
