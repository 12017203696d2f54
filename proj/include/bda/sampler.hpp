#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bda/model.hpp"

namespace bda {

/// Log density with gradient: writes d/dtheta into grad and returns log p.
/// A non-finite return marks the point as outside the support.
using LogDensityFn = std::function<double(std::span<const double> theta, std::span<double> grad)>;
using ConstrainFn = std::function<std::vector<double>(std::span<const double> theta)>;

struct SamplerConfig {
  std::size_t n_chains = 4;
  std::size_t n_iter = 2000;
  std::optional<std::size_t> n_warmup;  // default n_iter / 2
  double target_accept = 0.8;
  std::size_t max_leapfrog = 1024;
  std::uint64_t seed = 0;
  /// Mean trajectory length eps * E[L]. L is drawn uniformly from
  /// 1..L_max with L_max = 2 * integration_time / eps - 1, rounded up.
  double integration_time = 1.0;
  std::size_t jobs = 1;

  std::size_t warmup() const noexcept { return n_warmup ? *n_warmup : n_iter / 2; }
  std::size_t kept() const noexcept { return n_iter - warmup(); }
  /// Throws ErrorKind::config.
  void validate() const;
};

/// Position, momentum and the log density and gradient at the position.
struct PhasePoint {
  Eigen::VectorXd theta;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double log_density = 0.0;
};

/// Evaluates f at theta. log_density is non-finite when f is.
PhasePoint make_point(const Eigen::VectorXd& theta, const Eigen::VectorXd& p, const LogDensityFn& f);

/// One leapfrog step with diagonal inverse mass. Returns false when the log
/// density or gradient at the new position is non-finite.
bool leapfrog(PhasePoint& z, double eps, const Eigen::VectorXd& inv_mass, const LogDensityFn& f);

/// Sampling target on the unconstrained scale.
struct Target {
  std::size_t dim = 0;
  LogDensityFn log_density;
  std::vector<std::string> names;
  ConstrainFn constrain;  // identity when empty
  std::vector<std::string> constrained_names;

  static Target from_model(std::shared_ptr<const Model> model);
};

/// Kept draws of one chain.
struct ChainResult {
  Eigen::MatrixXd unconstrained;  // n_kept x dim
  Eigen::MatrixXd constrained;    // n_kept x constrained dim
  Eigen::VectorXd log_density;
  Eigen::VectorXd energy;
  Eigen::VectorXd accept_stat;
  std::vector<std::uint8_t> divergent;
  std::vector<std::size_t> n_leapfrog;
  double step_size = 0.0;
  Eigen::VectorXd inv_mass;
  std::size_t warmup_divergent = 0;

  std::size_t n_kept() const noexcept { return static_cast<std::size_t>(unconstrained.rows()); }
  std::size_t n_divergent() const noexcept;
};

struct ChainDraws {
  std::vector<std::string> names;
  std::vector<std::string> constrained_names;
  std::vector<ChainResult> chains;

  std::size_t n_chains() const noexcept { return chains.size(); }
  std::size_t n_kept() const noexcept { return chains.empty() ? 0 : chains.front().n_kept(); }
  std::size_t n_divergent() const noexcept;
  /// Per-chain series of the constrained parameter at column j.
  std::vector<std::vector<double>> series(std::size_t j) const;
  std::vector<std::vector<double>> energies() const;
};

/// Seed of chain c fitted on imputed dataset i.
std::uint64_t chain_seed(std::uint64_t seed, std::size_t imputation, std::size_t chain) noexcept;

/// Runs one chain from its own substream. Throws ErrorKind::runtime when no
/// finite starting point is found in 100 attempts.
ChainResult run_chain(const Target& target, const SamplerConfig& cfg, std::uint64_t seed);

/// Runs cfg.n_chains chains (up to cfg.jobs at a time) with seeds
/// chain_seed(cfg.seed, 0, c).
ChainDraws sample(const Target& target, const SamplerConfig& cfg);
ChainDraws sample(const ModelSpec& spec, const ModelData& data, const SamplerConfig& cfg);

}  // namespace bda
