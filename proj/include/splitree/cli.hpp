#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "splitree/levy_kernel.hpp"
#include "splitree/verify.hpp"

namespace splitree::cli {

enum ExitCode : int { kPass = 0, kStatisticalFailure = 1, kConfigError = 2, kIoError = 3 };

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
};

struct ScaleOptionsConfig {
  double x_max = 10.0;
  double h = 1e-3;
  bool extrapolate = true;
};

struct PlotOptions {
  std::optional<std::filesystem::path> tree_file;
  std::size_t replicate = 0;
  std::size_t bins = 20;
};

struct ExperimentConfig {
  LifespanSpec spec;
  double chi = 1.0;
  double tau = 3.0;
  double tau_cap = 3.0;
  std::size_t replicates = 100;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path out_dir = "splitree_out";
  std::vector<std::string> outputs{"trees", "contours", "summary"};
  ScaleOptionsConfig scale;
  VerifySettings verify;
  std::vector<std::string> suites;
  // "tree" reads profiles from trees, "contour" from their contours.
  std::string cpp_route = "tree";
  PlotOptions plot;
  // 16 hex digits identifying the effective configuration.
  std::string hash;
};

// Validates a config document. Seed precedence: override, config field,
// env_seed, 0. Relative paths inside the document resolve against base_dir.
ExperimentConfig parse_config(const nlohmann::json& doc, const Overrides& overrides,
                              const std::optional<std::string>& env_seed,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides);

// FNV-1a of the canonical dump.
std::string config_hash(const nlohmann::json& doc);

// "# schema=1,config_hash=...,seed=..." for CSV outputs.
std::string csv_header(const ExperimentConfig& cfg);
nlohmann::ordered_json jsonl_header(const ExperimentConfig& cfg, const std::string& kind);

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_scale(const ExperimentConfig& cfg, std::ostream& log);
int cmd_verify(const ExperimentConfig& cfg, std::ostream& log);
int cmd_cpp(const ExperimentConfig& cfg, std::ostream& log);
int cmd_marginal(const ExperimentConfig& cfg, std::ostream& log);
int cmd_plot(const ExperimentConfig& cfg, std::ostream& log, std::ostream& warn);

std::vector<std::string> command_names();

// Loads the config and runs a command, mapping failures to exit codes with
// a single-line reason on err.
int run(const std::string& command, const std::filesystem::path& config_path, const Overrides& overrides,
        std::ostream& out, std::ostream& err);

}  // namespace splitree::cli
