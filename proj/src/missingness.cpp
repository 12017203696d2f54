#include "bda/missingness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bda/error.hpp"

namespace bda {

MissingnessPattern pattern_table(const Dataset& ds) {
  if (ds.n_rows() == 0) fail(ErrorKind::data, "pattern table of an empty dataset");
  const std::size_t p = ds.n_cols();
  MissingnessPattern out;
  out.variables = ds.names();
  out.per_variable_missing.assign(p, 0);

  std::map<std::vector<bool>, std::size_t> counts;
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    std::vector<bool> r(p);
    for (std::size_t j = 0; j < p; ++j) {
      r[j] = ds.observed(i, j);
      if (!r[j]) ++out.per_variable_missing[j];
    }
    ++counts[r];
  }
  for (auto& [r, f] : counts) {
    auto miss = static_cast<std::size_t>(std::count(r.begin(), r.end(), false));
    out.patterns.push_back(ResponsePattern{r, f, miss});
  }
  std::sort(out.patterns.begin(), out.patterns.end(), [](const ResponsePattern& a, const ResponsePattern& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.observed > b.observed;
  });
  out.total_missing = std::accumulate(out.per_variable_missing.begin(), out.per_variable_missing.end(), std::size_t{0});
  return out;
}

FluxMeasure flux(const Dataset& ds) {
  const std::size_t n = ds.n_rows();
  const std::size_t p = ds.n_cols();
  FluxMeasure out;
  out.variables = ds.names();
  out.influx.assign(p, 0.0);
  out.outflux.assign(p, 0.0);
  out.proportion_missing.assign(p, 0.0);

  // Per row, the number of observed cells lets each variable's pair counts be
  // accumulated in O(n p): for j missing the row contributes obs_in_row pairs,
  // for j observed it contributes (p - obs_in_row).
  std::vector<double> in_pairs(p, 0.0), out_pairs(p, 0.0);
  double total_obs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t obs = 0;
    for (std::size_t j = 0; j < p; ++j) obs += ds.observed(i, j);
    total_obs += static_cast<double>(obs);
    for (std::size_t j = 0; j < p; ++j) {
      if (ds.observed(i, j)) out_pairs[j] += static_cast<double>(p - obs);
      else in_pairs[j] += static_cast<double>(obs);
    }
  }
  const double total_cells = static_cast<double>(n * p);
  const double total_mis = total_cells - total_obs;
  for (std::size_t j = 0; j < p; ++j) {
    out.influx[j] = total_obs > 0 ? in_pairs[j] / total_obs : 0.0;
    out.outflux[j] = total_mis > 0 ? out_pairs[j] / total_mis : 1.0;
    out.proportion_missing[j] = n ? static_cast<double>(ds.column(j).n_missing()) / static_cast<double>(n) : 0.0;
  }
  if (total_mis == 0)
    for (std::size_t j = 0; j < p; ++j) out.outflux[j] = 1.0;
  return out;
}

double relative_efficiency(double gamma, std::size_t m) {
  if (m == 0) fail(ErrorKind::domain, "relative efficiency needs m >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail(ErrorKind::domain, "fraction of missing information must lie in [0, 1]");
  return 1.0 / (1.0 + gamma / static_cast<double>(m));
}

std::size_t recommended_m(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail(ErrorKind::domain, "fraction of missing information must lie in [0, 1]");
  // Round away representation noise first so 0.29 maps to 29, not 30.
  double scaled = std::round(gamma * 100.0 * 1e9) / 1e9;
  return static_cast<std::size_t>(std::ceil(scaled));
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

MissingnessClass classify_missingness(const Dataset& ds) {
  if (ds.n_rows() == 0) fail(ErrorKind::data, "classification of an empty dataset");
  const std::size_t p = ds.n_cols();
  MissingnessClass cls;

  std::size_t incomplete = 0;
  for (std::size_t j = 0; j < p; ++j) incomplete += ds.column(j).n_missing() > 0;
  cls.multivariate = incomplete >= 2;

  std::vector<std::size_t> parent(p);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    std::optional<std::size_t> first;
    for (std::size_t j = 0; j < p; ++j) {
      if (!ds.observed(i, j)) continue;
      if (!first) first = j;
      else parent[find_root(parent, j)] = find_root(parent, *first);
    }
  }
  std::optional<std::size_t> root;
  for (std::size_t j = 0; j < p; ++j) {
    if (ds.column(j).n_observed() == 0) continue;
    std::size_t r = find_root(parent, j);
    if (!root) root = r;
    else if (r != *root) cls.connected = false;
  }

  // Distinct missing sets must form a chain under inclusion.
  auto table = pattern_table(ds);
  std::vector<std::vector<bool>> missing_sets;
  for (const auto& pat : table.patterns) {
    std::vector<bool> m(p);
    for (std::size_t j = 0; j < p; ++j) m[j] = !pat.observed[j];
    missing_sets.push_back(std::move(m));
  }
  auto count = [](const std::vector<bool>& s) { return std::count(s.begin(), s.end(), true); };
  std::sort(missing_sets.begin(), missing_sets.end(),
            [&](const auto& a, const auto& b) { return count(a) < count(b); });
  for (std::size_t s = 1; s < missing_sets.size() && cls.monotone; ++s)
    for (std::size_t j = 0; j < p; ++j)
      if (missing_sets[s - 1][j] && !missing_sets[s][j]) {
        cls.monotone = false;
        break;
      }
  return cls;
}

}  // namespace bda
