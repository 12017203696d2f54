#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bda/sampler.hpp"

namespace bda {

using ChainSeries = std::vector<std::vector<double>>;

/// Classic split R-hat. Needs >= 2 chains of equal length >= 4; odd-length
/// chains drop their middle draw before splitting. Throws
/// ErrorKind::degenerate when every half-chain is constant.
double split_rhat(const ChainSeries& chains);

/// Multi-chain effective sample size with Geyer's initial monotone positive
/// pair truncation. Same preconditions as split_rhat.
double ess(const ChainSeries& chains);

/// Per-chain bin counts of the joint ranks (ties broken by chain, then index).
std::vector<std::vector<std::size_t>> rank_histogram(const ChainSeries& chains, std::size_t n_bins = 20);

/// Per-chain sum of squared successive energy differences over the sum of
/// squared deviations from the chain mean.
std::vector<double> ebfmi(const ChainSeries& energies);

struct DiagnosticThresholds {
  double max_rhat = 1.01;
  double min_ess_ratio = 0.2;
  double min_ebfmi = 0.3;
};

struct ParameterDiagnostics {
  std::string name;
  std::optional<double> rhat;  // empty when degenerate
  std::optional<double> ess;
  std::optional<double> ess_ratio;
  std::vector<std::vector<std::size_t>> rank_counts;  // per chain
};

struct DiagnosticsReport {
  std::vector<ParameterDiagnostics> parameters;
  std::vector<double> ebfmi;  // per chain
  std::vector<std::size_t> divergent;  // per chain, kept draws
  std::size_t n_divergent = 0;
  std::size_t n_draws = 0;
  std::optional<double> max_rhat;
  std::optional<double> min_ess_ratio;
  std::vector<std::string> warnings;
  /// False when R-hat or ESS ratio thresholds are breached or could not be
  /// computed.
  bool thresholds_met = true;
};

DiagnosticsReport diagnose(const ChainDraws& draws, const DiagnosticThresholds& thresholds = {},
                           std::size_t n_bins = 20);

}  // namespace bda
