#include "bda/prior.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "bda/error.hpp"
#include "bda/tabular.hpp"

namespace bda {

Prior Prior::normal(double mean, double sd) {
  if (!(sd > 0.0) || !std::isfinite(mean)) fail(ErrorKind::config, "normal prior needs a finite mean and sd > 0");
  return Prior{Family::normal, mean, sd};
}

Prior Prior::half_cauchy(double scale) {
  if (!(scale > 0.0)) fail(ErrorKind::config, "half_cauchy prior needs scale > 0");
  return Prior{Family::half_cauchy, scale, 0.0};
}

Prior Prior::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) fail(ErrorKind::config, "gamma prior needs shape > 0 and rate > 0");
  return Prior{Family::gamma, shape, rate};
}

Prior Prior::parse(std::string_view text) {
  auto open = text.find('(');
  auto close = text.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open)
    fail(ErrorKind::parse, "prior '" + std::string(text) + "' is not of the form family(args)");
  std::string family;
  for (char c : text.substr(0, open))
    if (!std::isspace(static_cast<unsigned char>(c))) family.push_back(static_cast<char>(std::tolower(c)));
  std::vector<double> args;
  auto body = text.substr(open + 1, close - open - 1);
  std::size_t start = 0;
  while (start <= body.size()) {
    auto comma = body.find(',', start);
    auto part = body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!part.empty() && std::isspace(static_cast<unsigned char>(part.front()))) part.remove_prefix(1);
    while (!part.empty() && std::isspace(static_cast<unsigned char>(part.back()))) part.remove_suffix(1);
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), x);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size())
      fail(ErrorKind::parse, "prior '" + std::string(text) + "' has a non-numeric argument");
    args.push_back(x);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (family == "normal" && args.size() == 2) return normal(args[0], args[1]);
  if ((family == "half_cauchy" || family == "halfcauchy") && args.size() == 1) return half_cauchy(args[0]);
  if ((family == "half_cauchy" || family == "halfcauchy") && args.size() == 2) {
    if (args[0] != 0.0) fail(ErrorKind::config, "half_cauchy prior must have location 0");
    return half_cauchy(args[1]);
  }
  if (family == "gamma" && args.size() == 2) return gamma(args[0], args[1]);
  fail(ErrorKind::parse, "unknown prior '" + std::string(text) + "'");
}

std::string Prior::to_string() const {
  switch (family) {
    case Family::normal: return "normal(" + format_double(a) + "," + format_double(b) + ")";
    case Family::half_cauchy: return "half_cauchy(" + format_double(a) + ")";
    case Family::gamma: return "gamma(" + format_double(a) + "," + format_double(b) + ")";
  }
  return "?";
}

double Prior::log_density(double x) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (family) {
    case Family::normal: {
      const double z = (x - a) / b;
      return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(b) - 0.5 * z * z;
    }
    case Family::half_cauchy: {
      if (x < 0.0) return -inf;
      const double z = x / a;
      return std::log(2.0 / (std::numbers::pi * a)) - std::log1p(z * z);
    }
    case Family::gamma:
      if (x <= 0.0) return -inf;
      return a * std::log(b) - boost::math::lgamma(a) + (a - 1.0) * std::log(x) - b * x;
  }
  return -inf;
}

double Prior::grad_log_density(double x) const {
  switch (family) {
    case Family::normal: return -(x - a) / (b * b);
    case Family::half_cauchy: return -2.0 * x / (a * a + x * x);
    case Family::gamma: return (a - 1.0) / x - b;
  }
  return 0.0;
}

double Prior::sample(Rng& rng) const {
  switch (family) {
    case Family::normal: return std::normal_distribution<double>(a, b)(rng);
    case Family::half_cauchy: return std::abs(std::cauchy_distribution<double>(0.0, a)(rng));
    case Family::gamma: return std::gamma_distribution<double>(a, 1.0 / b)(rng);
  }
  return 0.0;
}

}  // namespace bda
