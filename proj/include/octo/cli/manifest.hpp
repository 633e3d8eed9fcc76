#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace octo::cli {

/// Environment variable naming the directory that holds run directories.
inline constexpr const char* kOutputRootEnv = "OCTO_OUTPUT_ROOT";

/// manifest.json of a run directory. Every file the run writes is listed in
/// `outputs` (paths relative to the run directory).
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  std::string model_name;
  std::string model_source;  // preset name or model file path
  std::string model_hash;    // git blob hash of the model JSON
  std::string output_dir;
  std::string started_at;
  std::string finished_at;
  std::string status = "running";
  int exit_code = 0;
  std::vector<std::string> outputs;
  nlohmann::json resumes = nlohmann::json::array();  // {argv, at, from_iteration}

  /// Adds `relative_path` to the outputs once.
  void declare(const std::string& relative_path);
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  /// Writes <output_dir>/manifest.json through a temporary file.
  void write() const;
  static RunManifest read(const std::string& run_dir);
};

/// `flag` when non-empty, else $OCTO_OUTPUT_ROOT, else "runs".
std::string output_root(const std::string& flag);

/// Creates <root>/<name>, or <root>/<name>-2, -3, ... when taken, so an
/// existing run is never overwritten. Returns the new directory.
std::string create_run_dir(const std::string& root, const std::string& name);

/// Current UTC time as ISO 8601.
std::string utc_now();

std::string read_file(const std::string& path);
/// Writes through a temporary file and a rename.
void write_file(const std::string& path, const std::string& content);

}  // namespace octo::cli
