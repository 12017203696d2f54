#include "doctest.h"

#include <map>
#include <set>

#include "bda/impute.hpp"
#include "support.hpp"

using namespace bda;

namespace {

Eigen::MatrixXd column(std::initializer_list<double> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

// y = 1 + 2 x + noise with a factor g, with MCAR holes in y, x and g.
Dataset noisy_dataset(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  std::bernoulli_distribution hole(0.2);
  std::vector<double> x(n), y(n), g(n);
  std::vector<std::uint8_t> ox(n), oy(n), og(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = z(rng);
    y[i] = std::round(10 * (1 + 2 * x[i] + z(rng))) / 10;
    g[i] = x[i] < -0.5 ? 0 : x[i] < 0.5 ? 1 : 2;
    ox[i] = !hole(rng), oy[i] = !hole(rng), og[i] = !hole(rng);
    if (!ox[i]) x[i] = std::nan("");
    if (!oy[i]) y[i] = std::nan("");
    if (!og[i]) g[i] = std::nan("");
  }
  return Dataset({Column(ColumnSchema::numeric("x"), x, ox), Column(ColumnSchema::numeric("y"), y, oy),
                  Column(ColumnSchema::ordered_factor("g", {"lo", "mid", "hi"}), g, og)});
}

}  // namespace

TEST_SUITE("impute") {
  TEST_CASE("pmm picks the nearest donor") {
    const std::vector<double> y{2.0, 4.2, 6.0, std::nan("")};
    const std::vector<std::uint8_t> obs{1, 1, 1, 0};
    Rng rng(1);
    auto d = pmm_step(y, obs, column({1.0, 2.1, 3.0, 2.0}), 1, rng);
    REQUIRE(d.imputed.size() == 1);
    CHECK(d.imputed[0] == 4.2);
    CHECK_FALSE(d.fallback);
  }

  TEST_CASE("k equal to the donor pool draws uniformly") {
    const std::vector<double> y{1.0, 2.0, 3.0, 4.0, std::nan("")};
    const std::vector<std::uint8_t> obs{1, 1, 1, 1, 0};
    Rng rng(9);
    std::map<double, int> counts;
    for (int rep = 0; rep < 4000; ++rep)
      counts[pmm_step(y, obs, column({0.3, -1.0, 2.0, 0.5, 0.0}), 4, rng).imputed[0]]++;
    REQUIRE(counts.size() == 4);
    for (const auto& [v, c] : counts) CHECK(std::abs(c - 1000) < 120);
  }

  TEST_CASE("constant target") {
    const std::vector<double> y{7.0, 7.0, 7.0, std::nan(""), std::nan("")};
    const std::vector<std::uint8_t> obs{1, 1, 1, 0, 0};
    Rng rng(2);
    auto d = pmm_step(y, obs, column({1, 2, 3, 4, 5}), 2, rng);
    CHECK(d.imputed == std::vector<double>{7.0, 7.0});
  }

  TEST_CASE("too few donors") {
    const std::vector<double> y{1.0, std::nan("")};
    const std::vector<std::uint8_t> obs{1, 0};
    Rng rng(2);
    CHECK(kind_of([&] { pmm_step(y, obs, column({1, 2}), 3, rng); }) == ErrorKind::config);
  }

  TEST_CASE("ordered factor follows the separating predictor") {
    const std::vector<double> codes{0, 1, 2, std::nan("")};
    const std::vector<std::uint8_t> obs{1, 1, 1, 0};
    Rng rng(4);
    auto d = ordered_factor_step(codes, obs, column({1, 2, 3, 2.9}), 1, rng);
    CHECK(d.imputed == std::vector<double>{2.0});
  }

  TEST_CASE("single observed level") {
    const std::vector<double> codes{1, 1, 1, std::nan("")};
    const std::vector<std::uint8_t> obs{1, 1, 1, 0};
    Rng rng(4);
    auto d = ordered_factor_step(codes, obs, column({1, 2, 3, 4}), 2, rng);
    CHECK(d.imputed == std::vector<double>{1.0});
  }

  TEST_CASE("complete data gives identical copies") {
    Schema s{ColumnSchema::numeric("a"), ColumnSchema::numeric("b")};
    auto ds = parse_csv("a,b\n1,2\n3,4\n5,7\n", s);
    ImputationConfig cfg;
    cfg.m = 3;
    auto r = impute_mice(ds, cfg);
    REQUIRE(r.completed.size() == 3);
    for (const auto& c : r.completed) CHECK(format_csv(c) == format_csv(ds));
  }

  TEST_CASE("imputed cells come from observed values") {
    auto ds = noisy_dataset(21, 150);
    ImputationConfig cfg;
    cfg.m = 4;
    cfg.seed = 8;
    auto r = impute_mice(ds, cfg);
    REQUIRE(r.completed.size() == 4);
    for (std::size_t j = 0; j < ds.n_cols(); ++j) {
      auto v = ds.column(j).observed_values();
      std::set<double> pool(v.begin(), v.end());
      for (const auto& c : r.completed) {
        CHECK(c.complete());
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
          CHECK(pool.count(c.column(j).value(i)) == 1);
          if (ds.observed(i, j)) CHECK(c.column(j).value(i) == ds.column(j).value(i));
        }
      }
    }
    CHECK(r.trace_variables.size() == 3);
    CHECK(r.trace[0][0].size() == cfg.max_sweeps);
  }

  TEST_CASE("imputations differ but replay exactly") {
    auto ds = noisy_dataset(5, 80);
    ImputationConfig cfg;
    cfg.m = 3;
    cfg.seed = 99;
    auto a = impute_mice(ds, cfg);
    cfg.jobs = 3;
    auto b = impute_mice(ds, cfg);
    for (std::size_t i = 0; i < 3; ++i) CHECK(format_csv(a.completed[i]) == format_csv(b.completed[i]));
    CHECK(format_csv(a.completed[0]) != format_csv(a.completed[1]));
    cfg.seed = 100;
    CHECK(format_csv(impute_mice(ds, cfg).completed[0]) != format_csv(a.completed[0]));
  }

  TEST_CASE("log columns keep donor values") {
    Rng rng(3);
    std::poisson_distribution<int> pois(20);
    std::normal_distribution<double> z;
    const std::size_t n = 100;
    std::vector<double> y(n), x(n);
    std::vector<std::uint8_t> oy(n, 1), ox(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = z(rng);
      y[i] = std::round(std::exp(1 + x[i]) * pois(rng) / 20.0);
      if (i % 5 == 0) oy[i] = 0, y[i] = std::nan("");
    }
    Dataset ds({Column(ColumnSchema::numeric("y"), y, oy), Column(ColumnSchema::numeric("x"), x, ox)});
    ImputationConfig cfg;
    cfg.m = 2;
    cfg.log_columns = {"y"};
    auto r = impute_mice(ds, cfg);
    auto v = ds.column("y").observed_values();
    std::set<double> pool(v.begin(), v.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(pool.count(r.completed[1].column("y").value(i)) == 1);
  }

  TEST_CASE("config validation") {
    Schema s{ColumnSchema::numeric("a"), ColumnSchema::ordered_factor("g", {"p", "q"})};
    auto ds = parse_csv("a,g\n1,p\nNA,q\n-3,p\n", s);
    ImputationConfig cfg;
    cfg.m = 0;
    CHECK(kind_of([&] { impute_mice(ds, cfg); }) == ErrorKind::config);
    cfg = {};
    cfg.donors = 0;
    CHECK(kind_of([&] { impute_mice(ds, cfg); }) == ErrorKind::config);
    cfg = {};
    cfg.log_columns = {"g"};
    CHECK(kind_of([&] { impute_mice(ds, cfg); }) == ErrorKind::kind);
    cfg.log_columns = {"a"};
    CHECK(kind_of([&] { impute_mice(ds, cfg); }) == ErrorKind::domain);
  }
}
