#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bda {

struct DrawProvenance {
  std::size_t imputation = 0;
  std::size_t chain = 0;
  std::size_t iteration = 0;

  friend bool operator==(const DrawProvenance&, const DrawProvenance&) = default;
};

/// Pooled posterior draws on the constrained scale, one row per draw.
struct PosteriorDraws {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // n_draws x names.size()
  std::vector<DrawProvenance> provenance;

  std::size_t n_draws() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws ErrorKind::spec for unknown names.
  std::size_t index_of(std::string_view name) const;
  std::vector<double> column(std::string_view name) const;
  /// Draws whose provenance has the given imputation index.
  PosteriorDraws for_imputation(std::size_t imputation) const;
};

}  // namespace bda
