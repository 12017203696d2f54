#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bda/impute.hpp"
#include "bda/model.hpp"
#include "bda/sampler.hpp"
#include "bda/tabular.hpp"

namespace bda::cli {

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::size_t> m;
  std::optional<std::size_t> chains;
  std::optional<std::size_t> iter;
  bool strict = false;
};

struct DSeparationQuery {
  std::string x;
  std::string y;
  std::vector<std::string> given;
};

struct PriorCheckConfig {
  std::size_t n_sims = 10000;
  /// Covariate points on the model's predictor scale; predictors not named
  /// are 0. Empty means the single all-zero point.
  std::vector<std::map<std::string, double>> points;
  std::vector<double> thresholds;
  bool include_group_effect = false;
};

struct PpcConfig {
  bool enabled = true;
  std::size_t n_rep = 500;
  std::size_t n_overlays = 50;
  bool log_scale = false;
  std::size_t grid_points = 512;
};

struct RunConfig {
  std::filesystem::path config_path;
  std::filesystem::path data_path;
  Schema schema;
  CsvOptions csv;
  RowPredicate filters;

  std::vector<std::string> dag_edges;
  std::vector<std::string> dag_sources;
  std::vector<DSeparationQuery> dag_queries;

  std::vector<std::string> identify_predictors;
  double identify_threshold = 0.1;

  bool has_model = false;
  ModelSpec model;
  bool standardize = true;

  ImputationConfig impute;
  std::vector<std::string> impute_columns;

  PriorCheckConfig prior_check;
  SamplerConfig sampler;

  std::vector<std::string> probabilities;
  PpcConfig ppc;

  std::filesystem::path output;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool strict = false;

  /// Canonical JSON of every setting that affects results (not jobs or output).
  std::string effective_json;
  std::string config_hash;  // FNV-1a 64 of effective_json, hex
};

/// Reads and validates a JSON config. Relative paths resolve against the
/// config file's directory. Throws bda::Error.
RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

/// FNV-1a 64-bit hash as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Runs one subcommand and returns its exit code: 0 success, 1 validation
/// error, 2 runtime error, 3 diagnostics thresholds breached under --strict.
int run(const std::string& subcommand, const std::filesystem::path& config, const Overrides& overrides,
        std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to run().
int main(int argc, char** argv);

}  // namespace bda::cli
