#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bda/cli.hpp"
#include "bda/draws.hpp"
#include "bda/sampler.hpp"
#include "json.hpp"

namespace bda::cli {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.3.0";

/// Writes artifacts into the output directory, each with a
/// <name>.meta.json sidecar holding the config hash, seed and module versions.
class ArtifactWriter {
 public:
  ArtifactWriter(const RunConfig& cfg, std::string subcommand);

  std::filesystem::path path(const std::string& name) const { return cfg_.output / name; }
  void text(const std::string& name, const std::string& content) const;
  void json(const std::string& name, const ordered_json& value) const;
  const std::vector<std::string>& written() const noexcept { return written_; }

 private:
  const RunConfig& cfg_;
  std::string subcommand_;
  mutable std::vector<std::string> written_;
};

std::string read_text(const std::filesystem::path& path);
ordered_json read_json(const std::filesystem::path& path);

/// Throws ErrorKind::dependency naming the step that produces `name`.
void require_artifact(const RunConfig& cfg, const std::string& name, const std::string& producer);

/// Per-draw sampler statistics keyed by provenance.
struct SamplerStats {
  std::vector<DrawProvenance> provenance;
  std::vector<double> log_density;
  std::vector<double> energy;
  std::vector<double> accept_stat;
  std::vector<std::size_t> n_leapfrog;
  std::vector<std::uint8_t> divergent;
};

/// Long format: imputation,chain,iteration,parameter,value with 1-based indices.
std::string format_draws(const std::vector<ChainDraws>& runs);
PosteriorDraws parse_draws(const std::string& text);

std::string format_sampler_stats(const std::vector<ChainDraws>& runs);
SamplerStats parse_sampler_stats(const std::string& text);

/// Regroups pooled draws and their stats into one ChainDraws per imputation
/// (constrained values only).
std::vector<ChainDraws> regroup(const PosteriorDraws& draws, const SamplerStats& stats);

}  // namespace bda::cli
