#include "octo/cli/manifest.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "octo/common/errors.hpp"

namespace octo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void RunManifest::declare(const std::string& relative_path) {
  if (std::find(outputs.begin(), outputs.end(), relative_path) == outputs.end()) outputs.push_back(relative_path);
}

json RunManifest::to_json() const {
  return {{"command", command},
          {"argv", argv},
          {"config", config},
          {"seeds", seeds},
          {"model", {{"name", model_name}, {"source", model_source}, {"git_blob_hash", model_hash}}},
          {"output_dir", output_dir},
          {"started_at", started_at},
          {"finished_at", finished_at},
          {"status", status},
          {"exit_code", exit_code},
          {"outputs", outputs},
          {"resumes", resumes}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config = j.at("config");
    m.seeds = j.at("seeds");
    m.model_name = j.at("model").at("name").get<std::string>();
    m.model_source = j.at("model").at("source").get<std::string>();
    m.model_hash = j.at("model").at("git_blob_hash").get<std::string>();
    m.output_dir = j.at("output_dir").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.status = j.at("status").get<std::string>();
    m.exit_code = j.at("exit_code").get<int>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.resumes = j.at("resumes");
  } catch (const json::exception& e) {
    throw CorruptFileError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void RunManifest::write() const { write_file((fs::path(output_dir) / "manifest.json").string(), to_json().dump(2) + "\n"); }

RunManifest RunManifest::read(const std::string& run_dir) {
  const std::string path = (fs::path(run_dir) / "manifest.json").string();
  if (!fs::exists(path)) throw ConfigurationError("'" + run_dir + "' has no manifest.json");
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw CorruptFileError("manifest '" + path + "' is not valid JSON: " + e.what());
  }
}

std::string output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
  return "runs";
}

std::string create_run_dir(const std::string& root, const std::string& name) {
  fs::create_directories(root);
  for (int k = 1;; ++k) {
    const fs::path dir = fs::path(root) / (k == 1 ? name : name + "-" + std::to_string(k));
    // create_directory reports false when the path already exists, which
    // makes the claim atomic with respect to concurrent runs.
    if (fs::create_directory(dir)) return dir.string();
  }
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigurationError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ConfigurationError("cannot write '" + path + "'");
  }
  fs::rename(tmp, path);
}

}  // namespace octo::cli
