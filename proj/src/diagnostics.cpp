#include "bda/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bda/error.hpp"

namespace bda {

namespace {

void check_chains(const ChainSeries& chains) {
  if (chains.size() < 2) fail(ErrorKind::domain, "diagnostics need at least 2 chains");
  const std::size_t n = chains.front().size();
  if (n < 4) fail(ErrorKind::domain, "diagnostics need at least 4 draws per chain");
  for (const auto& c : chains)
    if (c.size() != n) fail(ErrorKind::domain, "chains must have equal length");
}

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

double sample_var(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// Between/within pieces shared by R-hat and ESS.
struct VarianceParts {
  double w = 0.0;         // mean within-sequence variance
  double var_plus = 0.0;  // pooled variance estimate
};

VarianceParts variance_parts(const ChainSeries& seqs) {
  const double n = static_cast<double>(seqs.front().size());
  std::vector<double> means, vars;
  for (const auto& s : seqs) {
    means.push_back(mean(s));
    vars.push_back(sample_var(s));
  }
  VarianceParts out;
  out.w = mean(vars);
  const double b_over_n = seqs.size() > 1 ? sample_var(means) : 0.0;
  out.var_plus = (n - 1.0) / n * out.w + b_over_n;
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

}  // namespace

double split_rhat(const ChainSeries& chains) {
  check_chains(chains);
  const std::size_t n = chains.front().size();
  const std::size_t half = n / 2;
  ChainSeries seqs;
  for (const auto& c : chains) {
    seqs.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    seqs.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  const auto parts = variance_parts(seqs);
  if (!(parts.w > 0.0)) fail(ErrorKind::degenerate, "split R-hat undefined: within-sequence variance is zero");
  return std::sqrt(parts.var_plus / parts.w);
}

double ess(const ChainSeries& chains) {
  check_chains(chains);
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  const auto parts = variance_parts(chains);
  if (!(parts.w > 0.0) || !(parts.var_plus > 0.0))
    fail(ErrorKind::degenerate, "ESS undefined: draws are constant");

  std::vector<std::vector<double>> centered;
  for (const auto& c : chains) {
    const double mu = mean(c);
    auto& d = centered.emplace_back(c);
    for (double& v : d) v -= mu;
  }
  // Mean over chains of the biased lag-t autocovariance.
  auto mean_acov = [&](std::size_t t) {
    double total = 0.0;
    for (const auto& d : centered) {
      double s = 0.0;
      for (std::size_t i = 0; i + t < n; ++i) s += d[i] * d[i + t];
      total += s / static_cast<double>(n);
    }
    return total / static_cast<double>(m);
  };
  auto rho = [&](std::size_t t) { return 1.0 - (parts.w - mean_acov(t)) / parts.var_plus; };

  // Pair sums Gamma_k = rho_{2k} + rho_{2k+1}, kept while positive and
  // forced to be non-increasing.
  double sum = 0.0;  // sum of rho_t for t >= 1
  double prev_pair = 1.0 + rho(1);
  if (prev_pair > 0.0) {
    sum = prev_pair - 1.0;
    for (std::size_t t = 2; t + 1 < n; t += 2) {
      double pair = rho(t) + rho(t + 1);
      if (!(pair > 0.0)) break;
      pair = std::min(pair, prev_pair);
      sum += pair;
      prev_pair = pair;
    }
  } else {
    sum = prev_pair - 1.0;
  }
  const double total = static_cast<double>(m * n);
  const double tau = 1.0 + 2.0 * sum;
  const double cap = total * std::log10(total);
  if (!(tau > 0.0)) return cap;
  return std::min(total / tau, cap);
}

std::vector<std::vector<std::size_t>> rank_histogram(const ChainSeries& chains, std::size_t n_bins) {
  if (n_bins < 1) fail(ErrorKind::domain, "rank histogram needs at least one bin");
  struct Entry {
    double value;
    std::size_t chain, index;
  };
  std::vector<Entry> all;
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t i = 0; i < chains[c].size(); ++i) all.push_back({chains[c][i], c, i});
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.chain != b.chain) return a.chain < b.chain;
    return a.index < b.index;
  });
  std::vector<std::vector<std::size_t>> counts(chains.size(), std::vector<std::size_t>(n_bins, 0));
  const std::size_t total = all.size();
  for (std::size_t r = 0; r < total; ++r) counts[all[r].chain][r * n_bins / total]++;
  return counts;
}

std::vector<double> ebfmi(const ChainSeries& energies) {
  std::vector<double> out;
  for (const auto& e : energies) {
    if (e.size() < 2) fail(ErrorKind::domain, "E-BFMI needs at least 2 energies per chain");
    const double mu = mean(e);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      den += (e[i] - mu) * (e[i] - mu);
      if (i > 0) num += (e[i] - e[i - 1]) * (e[i] - e[i - 1]);
    }
    if (!(den > 0.0)) fail(ErrorKind::degenerate, "E-BFMI undefined: energy variance is zero");
    out.push_back(num / den);
  }
  return out;
}

DiagnosticsReport diagnose(const ChainDraws& draws, const DiagnosticThresholds& thresholds, std::size_t n_bins) {
  DiagnosticsReport report;
  report.n_draws = draws.n_chains() * draws.n_kept();
  for (const auto& c : draws.chains) report.divergent.push_back(c.n_divergent());
  report.n_divergent = draws.n_divergent();
  const bool enough = draws.n_chains() >= 2 && draws.n_kept() >= 4;
  if (!enough) {
    report.warnings.push_back("R-hat and ESS need at least 2 chains with 4 kept draws");
    report.thresholds_met = false;
  }
  for (std::size_t j = 0; j < draws.constrained_names.size(); ++j) {
    ParameterDiagnostics pd;
    pd.name = draws.constrained_names[j];
    const auto series = draws.series(j);
    pd.rank_counts = rank_histogram(series, n_bins);
    if (enough) {
      try {
        pd.rhat = split_rhat(series);
        pd.ess = ess(series);
        pd.ess_ratio = *pd.ess / static_cast<double>(report.n_draws);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate) throw;
        report.warnings.push_back(pd.name + ": draws are constant, R-hat and ESS undefined");
        report.thresholds_met = false;
      }
    }
    if (pd.rhat) {
      report.max_rhat = std::max(report.max_rhat.value_or(*pd.rhat), *pd.rhat);
      report.min_ess_ratio = std::min(report.min_ess_ratio.value_or(*pd.ess_ratio), *pd.ess_ratio);
      if (*pd.rhat > thresholds.max_rhat) {
        report.warnings.push_back(pd.name + ": R-hat " + fmt(*pd.rhat) + " exceeds " + fmt(thresholds.max_rhat));
        report.thresholds_met = false;
      }
      if (*pd.ess_ratio < thresholds.min_ess_ratio) {
        report.warnings.push_back(pd.name + ": ESS ratio " + fmt(*pd.ess_ratio) + " below " +
                                  fmt(thresholds.min_ess_ratio));
        report.thresholds_met = false;
      }
    }
    report.parameters.push_back(std::move(pd));
  }
  if (draws.n_kept() >= 2) {
    try {
      report.ebfmi = ebfmi(draws.energies());
      for (std::size_t c = 0; c < report.ebfmi.size(); ++c)
        if (report.ebfmi[c] < thresholds.min_ebfmi)
          report.warnings.push_back("chain " + std::to_string(c + 1) + ": E-BFMI " + fmt(report.ebfmi[c]) +
                                    " below " + fmt(thresholds.min_ebfmi));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate) throw;
      report.warnings.push_back("E-BFMI undefined: constant energies");
    }
  }
  if (report.n_divergent > 0)
    report.warnings.push_back(std::to_string(report.n_divergent) + " divergent transitions after warmup");
  return report;
}

}  // namespace bda
