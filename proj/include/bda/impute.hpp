#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bda/random.hpp"
#include "bda/tabular.hpp"

namespace bda {

enum class VisitOrder { ascending_missing, declared };

struct ImputationConfig {
  std::size_t m = 5;
  std::size_t max_sweeps = 10;
  std::size_t donors = 5;
  VisitOrder visit_order = VisitOrder::ascending_missing;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  /// Numeric columns that enter every imputation model as log1p(x), both as
  /// target and as predictor. Imputed cells still hold observed donor values.
  std::vector<std::string> log_columns;

  void validate() const;
};

struct ImputationResult {
  std::vector<Dataset> completed;
  /// Incomplete variables in visit order.
  std::vector<std::string> trace_variables;
  /// trace[imputation][variable][sweep]: mean of the imputed cells after each sweep.
  std::vector<std::vector<std::vector<double>>> trace;
  std::vector<std::string> warnings;
};

/// Multiple imputation by chained equations. Imputation i draws from the
/// substream derive_seed(cfg.seed, {stream::impute, i}), so results do not depend on cfg.jobs.
ImputationResult impute_mice(const Dataset& ds, const ImputationConfig& cfg);

struct PmmDraw {
  std::vector<double> imputed;  // one value per missing target row, in row order
  bool fallback = false;        // degenerate fit: drawn from observed marginals
};

/// Type-1 predictive mean matching. `predictors` is n x q and fully observed;
/// observed target rows fit the regression, missing rows receive the observed
/// value of one of the `k` donors whose predicted mean is closest.
PmmDraw pmm_step(std::span<const double> target, std::span<const std::uint8_t> observed,
                 const Eigen::MatrixXd& predictors, std::size_t k, Rng& rng);

/// Ordered factors are imputed by PMM on their level ranks; the result holds
/// donor level codes.
PmmDraw ordered_factor_step(std::span<const double> codes, std::span<const std::uint8_t> observed,
                            const Eigen::MatrixXd& predictors, std::size_t k, Rng& rng);

}  // namespace bda
