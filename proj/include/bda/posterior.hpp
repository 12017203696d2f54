#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bda/draws.hpp"
#include "bda/sampler.hpp"

namespace bda {

/// Concatenates kept draws of every run (imputation index = position) and
/// chain on the constrained scale. Throws ErrorKind::spec when the runs'
/// parameter names differ.
PosteriorDraws pool(std::span<const ChainDraws> runs);
/// Concatenation of already pooled draws; provenance is kept as is.
PosteriorDraws pool(std::span<const PosteriorDraws> parts);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const noexcept { return hi - lo; }
};

/// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::span<const double> draws, double p);
double quantile_sorted(std::span<const double> sorted, double p);
/// Equal-tailed interval with the given mass.
Interval central_interval(std::span<const double> draws, double mass);
/// Narrowest window of ceil(mass * n) sorted draws; ties go to the smallest
/// lower bound.
Interval hpdi(std::span<const double> draws, double mass = 0.95);

/// Fraction of draws satisfying a predicate over parameter names, e.g.
/// "exp(beta[Enquiry]) > 1.05" or "beta[a] > 0 && !(sigma > 2)".
double prob_statement(const PosteriorDraws& draws, std::string_view expression);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  Interval hpdi50;
  Interval hpdi95;
  /// The 95% HPDI excludes zero.
  bool excludes_zero = false;
};

std::vector<ParameterSummary> summarize(const PosteriorDraws& draws);

struct PpcRow {
  double observed = 0.0;
  double median = 0.0;
  std::vector<Interval> intervals;  // one per requested mass
};

struct PpcIntervals {
  std::vector<double> probs;
  std::vector<PpcRow> rows;
};

/// y_rep is n_rep x y.size().
PpcIntervals ppc_intervals(std::span<const double> y, const Eigen::MatrixXd& y_rep,
                           std::vector<double> probs = {0.5, 0.9});

/// 0.9 * min(sd, IQR / 1.34) * n^(-1/5), falling back to whichever spread is
/// positive.
double silverman_bandwidth(std::span<const double> x);

struct PpcDensity {
  bool log_scale = false;
  std::vector<double> grid;  // on the log1p scale when log_scale
  std::vector<double> observed;
  std::vector<std::vector<double>> replicates;  // n_overlays curves
  double observed_bandwidth = 0.0;
};

/// Gaussian KDEs of y and of the first n_overlays replicate rows on a shared
/// grid spanning all values plus four bandwidths on either side.
PpcDensity ppc_density(std::span<const double> y, const Eigen::MatrixXd& y_rep, std::size_t n_overlays = 50,
                       bool log_scale = false, std::size_t grid_points = 512);

}  // namespace bda
