#include "bda/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "bda/error.hpp"
#include "bda/expression.hpp"

namespace bda {

PosteriorDraws pool(std::span<const ChainDraws> runs) {
  PosteriorDraws out;
  if (runs.empty()) return out;
  out.names = runs.front().constrained_names;
  Eigen::Index total = 0;
  for (const auto& run : runs) {
    if (run.constrained_names != out.names) fail(ErrorKind::spec, "cannot pool runs with different parameters");
    for (const auto& c : run.chains) total += c.constrained.rows();
  }
  out.values.resize(total, static_cast<Eigen::Index>(out.names.size()));
  out.provenance.reserve(static_cast<std::size_t>(total));
  Eigen::Index at = 0;
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (std::size_t c = 0; c < runs[r].chains.size(); ++c) {
      const auto& m = runs[r].chains[c].constrained;
      out.values.middleRows(at, m.rows()) = m;
      for (Eigen::Index i = 0; i < m.rows(); ++i) out.provenance.push_back({r, c, static_cast<std::size_t>(i)});
      at += m.rows();
    }
  return out;
}

PosteriorDraws pool(std::span<const PosteriorDraws> parts) {
  PosteriorDraws out;
  if (parts.empty()) return out;
  out.names = parts.front().names;
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.names != out.names) fail(ErrorKind::spec, "cannot pool draws with different parameters");
    total += p.values.rows();
  }
  out.values.resize(total, static_cast<Eigen::Index>(out.names.size()));
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.values.middleRows(at, p.values.rows()) = p.values;
    out.provenance.insert(out.provenance.end(), p.provenance.begin(), p.provenance.end());
    at += p.values.rows();
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(ErrorKind::domain, "quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::domain, "quantile probability must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> draws, double p) {
  std::vector<double> s(draws.begin(), draws.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, p);
}

Interval central_interval(std::span<const double> draws, double mass) {
  if (!(mass > 0.0 && mass < 1.0)) fail(ErrorKind::domain, "interval mass must lie in (0, 1)");
  std::vector<double> s(draws.begin(), draws.end());
  std::sort(s.begin(), s.end());
  const double tail = 0.5 * (1.0 - mass);
  return {quantile_sorted(s, tail), quantile_sorted(s, 1.0 - tail)};
}

Interval hpdi(std::span<const double> draws, double mass) {
  if (draws.size() < 2) fail(ErrorKind::domain, "hpdi needs at least 2 draws");
  if (!(mass > 0.0 && mass < 1.0)) fail(ErrorKind::domain, "hpdi mass must lie in (0, 1)");
  std::vector<double> s(draws.begin(), draws.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  const auto w = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9)), 1, n);
  std::size_t best = 0;
  for (std::size_t i = 1; i + w <= n; ++i)
    if (s[i + w - 1] - s[i] < s[best + w - 1] - s[best]) best = i;
  return {s[best], s[best + w - 1]};
}

double prob_statement(const PosteriorDraws& draws, std::string_view expression) {
  const auto expr = Expression::parse(expression);
  if (!expr.is_predicate()) fail(ErrorKind::parse, "'" + std::string(expression) + "' is not a predicate");
  if (draws.n_draws() == 0) fail(ErrorKind::data, "probability statement over zero draws");
  std::vector<Eigen::Index> cols;
  for (const auto& v : expr.variables()) cols.push_back(static_cast<Eigen::Index>(draws.index_of(v)));
  std::vector<double> values(cols.size());
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < draws.values.rows(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) values[k] = draws.values(i, cols[k]);
    if (expr.evaluate(values) != 0.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(draws.n_draws());
}

std::vector<ParameterSummary> summarize(const PosteriorDraws& draws) {
  if (draws.n_draws() == 0) fail(ErrorKind::data, "cannot summarize zero draws");
  std::vector<ParameterSummary> out;
  for (std::size_t j = 0; j < draws.names.size(); ++j) {
    ParameterSummary s;
    s.name = draws.names[j];
    std::vector<double> x = draws.column(s.name);
    const double n = static_cast<double>(x.size());
    s.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.sd = x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.median = quantile(x, 0.5);
    if (x.size() >= 2) {
      s.hpdi50 = hpdi(x, 0.5);
      s.hpdi95 = hpdi(x, 0.95);
    } else {
      s.hpdi50 = s.hpdi95 = {x[0], x[0]};
    }
    s.excludes_zero = s.hpdi95.lo > 0.0 || s.hpdi95.hi < 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

PpcIntervals ppc_intervals(std::span<const double> y, const Eigen::MatrixXd& y_rep, std::vector<double> probs) {
  if (y_rep.cols() != static_cast<Eigen::Index>(y.size()))
    fail(ErrorKind::spec, "replicate matrix must have one column per observation");
  if (y_rep.rows() == 0) fail(ErrorKind::data, "no posterior predictive replicates");
  PpcIntervals out;
  out.probs = std::move(probs);
  std::vector<double> col(static_cast<std::size_t>(y_rep.rows()));
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (Eigen::Index r = 0; r < y_rep.rows(); ++r) col[static_cast<std::size_t>(r)] = y_rep(r, static_cast<Eigen::Index>(i));
    std::sort(col.begin(), col.end());
    PpcRow row;
    row.observed = y[i];
    row.median = quantile_sorted(col, 0.5);
    for (double p : out.probs) {
      if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::domain, "interval mass must lie in (0, 1)");
      const double tail = 0.5 * (1.0 - p);
      row.intervals.push_back({quantile_sorted(col, tail), quantile_sorted(col, 1.0 - tail)});
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

double silverman_bandwidth(std::span<const double> x) {
  if (x.size() < 2) fail(ErrorKind::domain, "bandwidth needs at least 2 values");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : s) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = (quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25)) / 1.34;
  double spread = std::min(sd, iqr);
  if (!(spread > 0.0)) spread = std::max(sd, iqr);
  if (!(spread > 0.0)) spread = 1e-3 * std::max(1.0, std::abs(mean));
  return 0.9 * spread * std::pow(n, -0.2);
}

namespace {

std::vector<double> transformed(std::span<const double> x, bool log_scale) {
  std::vector<double> out(x.begin(), x.end());
  if (log_scale)
    for (double& v : out) {
      if (!(v > -1.0)) fail(ErrorKind::domain, "log-scale density needs values > -1");
      v = std::log1p(v);
    }
  return out;
}

std::vector<double> kde(const std::vector<double>& x, double h, const std::vector<double>& grid) {
  std::vector<double> out(grid.size(), 0.0);
  const double norm = 1.0 / (static_cast<double>(x.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (double v : x) {
      const double u = (grid[g] - v) / h;
      s += std::exp(-0.5 * u * u);
    }
    out[g] = s * norm;
  }
  return out;
}

}  // namespace

PpcDensity ppc_density(std::span<const double> y, const Eigen::MatrixXd& y_rep, std::size_t n_overlays,
                       bool log_scale, std::size_t grid_points) {
  if (y_rep.cols() != static_cast<Eigen::Index>(y.size()))
    fail(ErrorKind::spec, "replicate matrix must have one column per observation");
  if (grid_points < 2) fail(ErrorKind::domain, "density grid needs at least 2 points");
  PpcDensity out;
  out.log_scale = log_scale;
  const auto obs = transformed(y, log_scale);
  out.observed_bandwidth = silverman_bandwidth(obs);
  const std::size_t k = std::min<std::size_t>(n_overlays, static_cast<std::size_t>(y_rep.rows()));
  std::vector<std::vector<double>> reps;
  std::vector<double> widths{out.observed_bandwidth};
  for (std::size_t r = 0; r < k; ++r) {
    const Eigen::RowVectorXd row = y_rep.row(static_cast<Eigen::Index>(r));
    reps.push_back(transformed(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), log_scale));
    widths.push_back(silverman_bandwidth(reps.back()));
  }
  double lo = *std::min_element(obs.begin(), obs.end());
  double hi = *std::max_element(obs.begin(), obs.end());
  for (const auto& r : reps) {
    lo = std::min(lo, *std::min_element(r.begin(), r.end()));
    hi = std::max(hi, *std::max_element(r.begin(), r.end()));
  }
  const double pad = 4.0 * *std::max_element(widths.begin(), widths.end());
  lo -= pad;
  hi += pad;
  out.grid.resize(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g)
    out.grid[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_points - 1);
  out.observed = kde(obs, out.observed_bandwidth, out.grid);
  for (std::size_t r = 0; r < k; ++r) out.replicates.push_back(kde(reps[r], widths[r + 1], out.grid));
  return out;
}

}  // namespace bda
