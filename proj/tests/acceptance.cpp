// Acceptance checks, one line per criterion:
//   acceptance            run all
//   acceptance --only 7   run one
// Exit status is non-zero when any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <unistd.h>

#include "CLI11.hpp"
#include "bda/causal.hpp"
#include "bda/cli.hpp"
#include "bda/diagnostics.hpp"
#include "bda/identify.hpp"
#include "bda/impute.hpp"
#include "bda/missingness.hpp"
#include "bda/model.hpp"
#include "bda/posterior.hpp"
#include "bda/sampler.hpp"
#include "oracles.hpp"

using namespace bda;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sd_of(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

Dataset from_mask(const oracle::Mask& mask) {
  std::vector<Column> cols;
  for (std::size_t j = 0; j < (mask.empty() ? 0 : mask[0].size()); ++j) {
    std::vector<double> v;
    std::vector<std::uint8_t> o;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      o.push_back(static_cast<std::uint8_t>(mask[i][j]));
      v.push_back(mask[i][j] ? 1.0 : std::nan(""));
    }
    cols.emplace_back(ColumnSchema::numeric("v" + std::to_string(j)), std::move(v), std::move(o));
  }
  return Dataset(std::move(cols));
}

Dataset numeric(const std::vector<std::string>& names, const std::vector<std::vector<double>>& cols) {
  std::vector<Column> out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    std::vector<std::uint8_t> o(cols[j].size());
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = !std::isnan(cols[j][i]);
    out.emplace_back(ColumnSchema::numeric(names[j]), cols[j], std::move(o));
  }
  return Dataset(std::move(out));
}

// Long-format draws file: parameter -> pooled values.
std::map<std::string, std::vector<double>> read_draws(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::vector<double>> out;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() == 5) out[f[3]].push_back(std::stod(f[4]));
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& tag) {
    dir = fs::temp_directory_path() / ("bda_accept_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

int run_quiet(const std::string& sub, const fs::path& cfg, const cli::Overrides& ov = {}) {
  std::ostringstream out, err;
  const int code = cli::run(sub, cfg, ov, out, err);
  if (code != 0) std::cerr << sub << ": " << err.str();
  return code;
}

// 1

Verdict rubin_efficiency() {
  struct Case {
    double gamma;
    std::size_t m;
    double want;
  };
  bool ok = true;
  std::string worst;
  for (auto c : {Case{0.2, 5, 0.9615}, Case{0.2, 10, 0.9804}, Case{0.4, 5, 0.9259}, Case{0.4, 40, 0.9901}}) {
    const double got = relative_efficiency(c.gamma, c.m);
    ok = ok && std::abs(got - c.want) < 5e-5;
    worst += fmt(" %.4f", got);
  }
  ok = ok && recommended_m(0.25) == 25 && recommended_m(0.4) == 40;
  return {ok, "efficiencies" + worst + fmt(", m(0.25)=%zu, m(0.4)=%zu", recommended_m(0.25), recommended_m(0.4))};
}

// 2

Verdict flux_oracle() {
  std::mt19937_64 rng(2024);
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng() % 50, p = 1 + rng() % 8;
    std::bernoulli_distribution miss(0.05 + 0.5 * static_cast<double>(rng() % 100) / 100.0);
    oracle::Mask mask(n, std::vector<int>(p));
    for (auto& row : mask)
      for (auto& c : row) c = miss(rng) ? 0 : 1;
    const auto got = flux(from_mask(mask));
    const auto want = oracle::flux(mask);
    for (std::size_t j = 0; j < p; ++j)
      mismatches += got.influx[j] != want.influx[j] || got.outflux[j] != want.outflux[j];
  }
  const auto hand = flux(from_mask({{1, 1, 0}, {1, 0, 0}, {1, 1, 1}}));
  const bool hand_ok = std::abs(hand.influx[0]) < 1e-15 && std::abs(hand.influx[1] - 1.0 / 6) < 1e-15 &&
                       std::abs(hand.influx[2] - 0.5) < 1e-15 && std::abs(hand.outflux[0] - 1) < 1e-15 &&
                       std::abs(hand.outflux[1] - 1.0 / 3) < 1e-15 && std::abs(hand.outflux[2]) < 1e-15;
  return {mismatches == 0 && hand_ok,
          fmt("%zu mismatching values over 200 masks, hand example %s", mismatches, hand_ok ? "ok" : "wrong")};
}

// 3

Verdict qr_screening() {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> z;
  std::size_t missed = 0;
  double worst_d = 0, worst_recon = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 10 + rng() % 190, p = 2 + rng() % 7;
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    for (std::size_t j = 0; j + 1 < p; ++j)
      for (auto& v : cols[j]) v = 3 * z(rng) + static_cast<double>(j);
    cols[p - 1] = cols[rng() % (p - 1)];
    std::vector<std::string> names;
    for (std::size_t j = 0; j < p; ++j) names.push_back("c" + std::to_string(j));
    const auto s = flag_nonidentifiable(numeric(names, cols), names);
    missed += std::find(s.flagged.begin(), s.flagged.end(), names.back()) == s.flagged.end();
    worst_d = std::max(worst_d, s.abs_diagonal.back());

    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = z(rng);
    const auto qr = householder_qr(a);
    worst_recon = std::max(worst_recon, (qr.q * qr.r - a).norm() / a.norm());
  }
  return {missed == 0 && worst_d <= 1e-10 && worst_recon <= 1e-10,
          fmt("%zu duplicates missed, max |d| of duplicate %.2e, max reconstruction error %.2e", missed, worst_d,
              worst_recon)};
}

// 4

Verdict gradients() {
  Rng rng(44);
  std::normal_distribution<double> z;
  double worst = 0;
  std::size_t points = 0;
  for (int family = 0; family < 2; ++family) {
    ModelSpec spec;
    ModelData d;
    const Eigen::Index n = 60;
    d.x.resize(n, 2);
    d.y.resize(n);
    if (family == 0) {
      spec.family = ModelFamily::gamma_poisson_mlm;
      spec.outcome = "y";
      spec.predictors = {"a", "b"};
      spec.group = "g";
      d.group_levels = {"g1", "g2", "g3", "g4"};
      for (Eigen::Index i = 0; i < n; ++i) {
        d.x(i, 0) = z(rng), d.x(i, 1) = z(rng);
        d.y(i) = sample_gamma_poisson(std::exp(2 + 0.3 * d.x(i, 0)), 2.0, rng);
        d.group.push_back(static_cast<std::size_t>(i % 4));
      }
    } else {
      spec.family = ModelFamily::normal_linear;
      spec.outcome = "y";
      spec.predictors = {"a", "b"};
      for (Eigen::Index i = 0; i < n; ++i) {
        d.x(i, 0) = z(rng), d.x(i, 1) = z(rng);
        d.y(i) = 160 + 4 * d.x(i, 0) - 2 * d.x(i, 1) + 3 * z(rng);
      }
    }
    const Model m(spec, d);
    for (int rep = 0; rep < 100; ++rep, ++points) {
      Eigen::VectorXd t(static_cast<Eigen::Index>(m.dim()));
      for (auto& v : t) v = 0.7 * z(rng);
      if (family == 1) t(0) += 160;
      Eigen::VectorXd g(t.size());
      m.log_density(std::span<const double>(t.data(), m.dim()), std::span<double>(g.data(), m.dim()));
      const auto fd = oracle::fd_gradient(
          [&](const Eigen::VectorXd& x) { return m.log_density(std::span<const double>(x.data(), m.dim())); }, t);
      for (Eigen::Index i = 0; i < t.size(); ++i)
        worst = std::max(worst, std::abs(g(i) - fd(i)) / std::max(1.0, std::abs(fd(i))));
    }
  }
  return {worst <= 1e-5, fmt("max relative gradient error %.2e over %zu points", worst, points)};
}

// 5

Verdict sampler_calibration() {
  Target t;
  t.dim = 10;
  t.log_density = [](std::span<const double> x, std::span<double> g) {
    double lp = 0;
    for (std::size_t i = 0; i < x.size(); ++i) lp -= 0.5 * x[i] * x[i], g[i] = -x[i];
    return lp;
  };
  for (int i = 0; i < 10; ++i) t.names.push_back("x" + std::to_string(i));
  t.constrained_names = t.names;
  SamplerConfig cfg;
  cfg.seed = 5;
  const auto d = sample(t, cfg);
  const auto rep = diagnose(d);
  double worst_mean = 0, worst_sd = 0;
  for (std::size_t j = 0; j < 10; ++j) {
    std::vector<double> all;
    for (const auto& s : d.series(j)) all.insert(all.end(), s.begin(), s.end());
    worst_mean = std::max(worst_mean, std::abs(mean_of(all)));
    worst_sd = std::max(worst_sd, std::abs(sd_of(all) - 1));
  }
  const double div_frac = static_cast<double>(d.n_divergent()) / static_cast<double>(d.n_chains() * d.n_kept());
  const bool ok = worst_mean <= 0.05 && worst_sd <= 0.05 && rep.max_rhat && *rep.max_rhat <= 1.01 &&
                  rep.min_ess_ratio && *rep.min_ess_ratio >= 0.2 && div_frac <= 0.001;
  return {ok, fmt("max |mean| %.4f, max |sd-1| %.4f, max R-hat %.4f, min ESS ratio %.3f, divergent %.4f%%", worst_mean,
                  worst_sd, rep.max_rhat.value_or(NAN), rep.min_ess_ratio.value_or(NAN), 100 * div_frac)};
}

// 6

Verdict conjugate() {
  Rng rng(66);
  std::normal_distribution<double> z;
  const std::size_t n = 50;
  std::vector<double> w1(n), w2(n), h(n);
  for (std::size_t i = 0; i < n; ++i) {
    w1[i] = 10 + 3 * z(rng);
    w2[i] = -4 + 0.5 * z(rng);
    h[i] = 5 + 0.8 * (w1[i] - 10) / 3 - 0.4 * (w2[i] + 4) / 0.5 + 1.5 * z(rng);
  }
  const std::vector<std::string> preds{"w1", "w2"};
  auto [scaled, info] = standardize(numeric({"h", "w1", "w2"}, {h, w1, w2}), preds);
  ModelSpec spec;
  spec.family = ModelFamily::normal_linear;
  spec.outcome = "h";
  spec.predictors = preds;
  spec.fixed_sigma = 1.5;
  spec.priors["alpha"] = Prior::normal(0, 3);
  spec.priors["beta"] = Prior::normal(0, 1);
  const auto data = ModelData::from_dataset(spec, scaled);

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
  x.col(0).setOnes();
  x.rightCols(2) = data.x;
  const auto post = oracle::conjugate_normal(x, data.y, 1.5, Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(3, 1, 1));

  SamplerConfig cfg;
  cfg.seed = 6;
  cfg.n_iter = 10000;
  const auto d = sample(spec, data, cfg);
  double worst_mean = 0, worst_sd = 0;
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> all;
    for (const auto& s : d.series(j)) all.insert(all.end(), s.begin(), s.end());
    worst_mean = std::max(worst_mean, std::abs(mean_of(all) - post.mean(static_cast<Eigen::Index>(j))));
    worst_sd = std::max(worst_sd, std::abs(sd_of(all) / post.sd(static_cast<Eigen::Index>(j)) - 1));
  }
  return {worst_mean <= 0.02 && worst_sd <= 0.02,
          fmt("max |mean - analytic| %.4f, max relative sd error %.2f%%", worst_mean, 100 * worst_sd)};
}

// 7

Verdict recovery() {
  const std::size_t n = 400;
  const double alpha = 2.0, sigma = 0.5, phi = 2.0;
  const double beta[3] = {0.5, -0.3, 0.2};
  Rng rng(7);
  std::normal_distribution<double> z;
  std::bernoulli_distribution hole(0.2);
  double offset[4];
  for (double& o : offset) o = sigma * z(rng);
  Scratch s("recovery");
  {
    std::ofstream f(s.dir / "sim.csv");
    f << "y,x1,x2,x3,g\n";
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> x(3);
      double eta = alpha + offset[i % 4];
      for (int j = 0; j < 3; ++j) x[static_cast<std::size_t>(j)] = z(rng), eta += beta[j] * x[static_cast<std::size_t>(j)];
      const double y = sample_gamma_poisson(std::exp(eta), phi, rng);
      rows.push_back({y, x[0], x[1], x[2]});
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (double v : rows[i]) f << (hole(rng) ? std::string("NA") : format_double(v)) << ",";
      f << "abcd"[i % 4] << "\n";
    }
  }
  std::ofstream(s.dir / "cfg.json") << R"({
    "seed": 7,
    "data": {"path": "sim.csv", "columns": [
      {"name": "y", "kind": "numeric"}, {"name": "x1", "kind": "numeric"},
      {"name": "x2", "kind": "numeric"}, {"name": "x3", "kind": "numeric"},
      {"name": "g", "kind": "ordered_factor", "levels": ["a", "b", "c", "d"]}]},
    "model": {"family": "gamma_poisson_mlm", "outcome": "y", "predictors": ["x1", "x2", "x3"], "group": "g"},
    "impute": {"m": 20, "log_columns": ["y"]},
    "sampler": {"chains": 4, "iter": 2000},
    "output": "out"
  })";
  const auto cfg = s.dir / "cfg.json";
  if (run_quiet("impute", cfg) != 0 || run_quiet("fit", cfg) != 0) return {false, "pipeline failed"};
  const auto draws = read_draws(s.dir / "out" / "draws.csv");
  bool ok = true;
  std::string detail;
  for (int j = 0; j < 3; ++j) {
    const auto& v = draws.at("beta[x" + std::to_string(j + 1) + "]");
    const auto h = hpdi(v, 0.95);
    const double m = mean_of(v), sd = sd_of(v);
    const bool inside = h.lo <= beta[j] && beta[j] <= h.hi;
    ok = ok && inside && std::abs(m - beta[j]) <= 3 * sd;
    detail += fmt("%sbeta%d %.2f: mean %.3f, 95%% HPDI [%.3f, %.3f], z %.2f", j ? "; " : "", j + 1, beta[j], m, h.lo,
                  h.hi, (m - beta[j]) / sd);
  }
  return {ok, detail + fmt(" (%zu pooled draws)", draws.at("alpha").size())};
}

// 8

double slope(std::span<const double> x, std::span<const double> y) {
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

Verdict imputation_vs_deletion() {
  const std::size_t n = 200, m = 25;
  int wins = 0;
  double bias_mi = 0, bias_cc = 0;
  for (int rep = 0; rep < 50; ++rep) {
    Rng rng(1000 + static_cast<std::uint64_t>(rep));
    std::normal_distribution<double> z;
    std::bernoulli_distribution hole(0.2);
    std::vector<double> x(n), y(n), cx, cy;
    for (std::size_t i = 0; i < n; ++i) x[i] = z(rng), y[i] = 2 * x[i] + z(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const bool mx = hole(rng), my = hole(rng);
      if (!mx && !my) cx.push_back(x[i]), cy.push_back(y[i]);
      if (mx) x[i] = std::nan("");
      if (my) y[i] = std::nan("");
    }
    ImputationConfig cfg;
    cfg.m = m;
    cfg.seed = static_cast<std::uint64_t>(rep);
    const auto res = impute_mice(numeric({"x", "y"}, {x, y}), cfg);
    double pooled = 0;
    for (const auto& d : res.completed) pooled += slope(d.column("x").raw(), d.column("y").raw()) / m;
    const double listwise = slope(cx, cy);
    wins += std::abs(pooled - 2) < std::abs(listwise - 2);
    bias_mi += std::abs(pooled - 2) / 50, bias_cc += std::abs(listwise - 2) / 50;
  }
  return {wins >= 40, fmt("imputation closer in %d/50 replications (need 40); mean |bias| %.4f imputed vs %.4f listwise",
                          wins, bias_mi, bias_cc)};
}

// 9

Verdict diagnostics_golden() {
  const double r = split_rhat({{1, 2, 3, 4}, {1, 2, 3, 4}});
  std::vector<double> alt(1000);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = 1.0 + static_cast<double>(i % 2);
  const double e = ebfmi({alt})[0];
  Rng rng(9);
  std::normal_distribution<double> z;
  ChainSeries ar(4, std::vector<double>(20000));
  for (auto& c : ar) {
    double v = z(rng) / std::sqrt(1 - 0.81);
    for (auto& x : c) x = v = 0.9 * v + z(rng);
  }
  const double ratio = ess(ar) / 80000;
  const double want = 0.1 / 1.9;
  return {std::abs(r - 1.7795) < 5e-5 && std::abs(e - 4) <= 0.1 && std::abs(ratio - want) <= 0.3 * want,
          fmt("split R-hat %.4f, E-BFMI %.3f, AR(1) ESS/N %.4f (target %.4f)", r, e, ratio, want)};
}

// 10

Verdict prior_predictive_check() {
  ModelSpec spec;
  spec.outcome = "Effort";
  Rng rng = make_stream(10, {stream::prior});
  const auto pp = prior_predictive(spec, Eigen::MatrixXd::Zero(1, 0), 100000, rng);
  std::vector<double> mean(pp.mean.row(0).begin(), pp.mean.row(0).end());
  const double median = quantile(mean, 0.5);
  const double tail =
      static_cast<double>(std::count_if(mean.begin(), mean.end(), [](double v) { return v > 1e5; })) / 100000.0;
  return {std::abs(median / std::exp(5.0) - 1) <= 0.05 && std::abs(tail - 0.0517) <= 0.01,
          fmt("median %.2f (e^5 = %.2f), P(mean > 100000) = %.4f", median, std::exp(5.0), tail)};
}

// 11

Verdict hpdi_oracle() {
  Rng rng(11);
  std::lognormal_distribution<double> skew(0, 0.8);
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng() % 2000;
    std::vector<double> v(n);
    for (auto& x : v) x = rep % 5 == 0 ? std::round(4 * skew(rng)) : skew(rng);
    const double mass = rep % 3 == 0 ? 0.5 : rep % 3 == 1 ? 0.89 : 0.95;
    const auto got = hpdi(v, mass);
    const auto want = oracle::hpdi_scan(v, mass);
    mismatches += got.lo != want.first || got.hi != want.second;
  }
  std::normal_distribution<double> z;
  std::vector<double> v(100000);
  for (auto& x : v) x = z(rng);
  const auto h = hpdi(v, 0.95);
  return {mismatches == 0 && std::abs(h.lo + 1.96) <= 0.05 && std::abs(h.hi - 1.96) <= 0.05,
          fmt("%zu mismatches over 200 vectors, normal 95%% HPDI [%.3f, %.3f]", mismatches, h.lo, h.hi)};
}

// 12

Verdict determinism() {
  Scratch s("determinism");
  {
    Rng rng(12);
    std::normal_distribution<double> z;
    std::ofstream f(s.dir / "d.csv");
    f << "y,x1,x2,g\n";
    for (int i = 0; i < 150; ++i) {
      const double x1 = z(rng), x2 = z(rng);
      const double y = sample_gamma_poisson(std::exp(1.5 + 0.4 * x1 - 0.2 * x2), 3.0, rng);
      f << (i % 6 == 0 ? "NA" : format_double(y)) << "," << (i % 5 == 1 ? "NA" : format_double(x1)) << ","
        << format_double(x2) << "," << "pqr"[i % 3] << "\n";
    }
  }
  std::ofstream(s.dir / "cfg.json") << R"({
    "seed": 42,
    "data": {"path": "d.csv", "columns": [
      {"name": "y", "kind": "numeric"}, {"name": "x1", "kind": "numeric"},
      {"name": "x2", "kind": "numeric"},
      {"name": "g", "kind": "ordered_factor", "levels": ["p", "q", "r"]}]},
    "model": {"family": "gamma_poisson_mlm", "outcome": "y", "predictors": ["x1", "x2"], "group": "g"},
    "impute": {"m": 3},
    "sampler": {"chains": 4, "iter": 1000},
    "output": "out"
  })";
  const auto cfg = s.dir / "cfg.json";
  const auto draws = s.dir / "out" / "draws.csv";
  if (run_quiet("impute", cfg) != 0) return {false, "impute failed"};
  std::vector<std::string> files;
  for (std::size_t jobs : {1, 1, 8}) {
    cli::Overrides ov;
    ov.jobs = jobs;
    if (run_quiet("fit", cfg, ov) != 0) return {false, "fit failed"};
    files.push_back(slurp(draws));
  }
  const bool repeat = files[0] == files[1], threads = files[0] == files[2];
  return {repeat && threads && !files[0].empty(),
          fmt("%zu-byte draws file; rerun %s, --jobs 1 vs 8 %s", files[0].size(), repeat ? "identical" : "differs",
              threads ? "identical" : "differs")};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "rubin efficiency", 1, rubin_efficiency},
      {2, "flux oracle", 1, flux_oracle},
      {3, "qr screening", 1, qr_screening},
      {4, "gradient correctness", 5, gradients},
      {5, "sampler calibration", 30, sampler_calibration},
      {6, "conjugate cross-check", 30, conjugate},
      {7, "parameter recovery", 600, recovery},
      {8, "imputation beats deletion", 120, imputation_vs_deletion},
      {9, "diagnostics golden values", 10, diagnostics_golden},
      {10, "prior predictive analytics", 5, prior_predictive_check},
      {11, "hpdi oracle", 5, hpdi_oracle},
      {12, "determinism", 600, determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    if (only && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("criterion %2d %s  %-28s %s [%.2fs of %.0fs%s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                v.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
