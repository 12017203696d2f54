#pragma once

#include <string>
#include <string_view>

#include "bda/random.hpp"

namespace bda {

/// Univariate prior. Parameters: normal(mean, sd), half_cauchy(scale) with
/// location 0, gamma(shape, rate).
struct Prior {
  enum class Family { normal, half_cauchy, gamma };

  Family family = Family::normal;
  double a = 0.0;
  double b = 1.0;

  static Prior normal(double mean, double sd);
  static Prior half_cauchy(double scale);
  static Prior gamma(double shape, double rate);
  /// "normal(5,4)", "half_cauchy(1)", "half_cauchy(0,1)", "gamma(0.5,0.5)".
  static Prior parse(std::string_view text);

  std::string to_string() const;
  bool positive_support() const noexcept { return family != Family::normal; }

  double log_density(double x) const;
  double grad_log_density(double x) const;
  double sample(Rng& rng) const;

  friend bool operator==(const Prior&, const Prior&) = default;
};

}  // namespace bda
