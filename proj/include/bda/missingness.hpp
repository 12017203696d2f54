#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bda/tabular.hpp"

namespace bda {

/// One distinct response vector (true = observed) and how often it occurs.
struct ResponsePattern {
  std::vector<bool> observed;
  std::size_t frequency = 0;
  std::size_t n_missing = 0;  // missing entries in one row of this pattern

  friend bool operator==(const ResponsePattern&, const ResponsePattern&) = default;
};

struct MissingnessPattern {
  std::vector<std::string> variables;
  std::vector<ResponsePattern> patterns;  // descending frequency, then observed-first lexicographic
  std::vector<std::size_t> per_variable_missing;
  std::size_t total_missing = 0;
};

MissingnessPattern pattern_table(const Dataset& ds);

struct FluxMeasure {
  std::vector<std::string> variables;
  std::vector<double> influx;
  std::vector<double> outflux;
  std::vector<double> proportion_missing;
};

/// Influx/outflux of every variable: pairs (j missing, k observed) over total
/// observed cells, and pairs (j observed, k missing) over total missing cells.
FluxMeasure flux(const Dataset& ds);

/// Rubin's relative efficiency (1 + gamma/m)^-1 of m imputations.
double relative_efficiency(double gamma, std::size_t m);

/// ceil(100 * gamma) imputations; 0 when nothing is missing.
std::size_t recommended_m(double gamma);

struct MissingnessClass {
  bool multivariate = false;
  bool connected = true;
  bool monotone = true;

  friend bool operator==(const MissingnessClass&, const MissingnessClass&) = default;
};

/// Monotone holds when the per-row missing sets are totally ordered by
/// inclusion, which is exactly when one variable order makes every missing set
/// a suffix.
MissingnessClass classify_missingness(const Dataset& ds);

}  // namespace bda
