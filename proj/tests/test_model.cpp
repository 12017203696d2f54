#include "doctest.h"

#include <numbers>

#include "bda/model.hpp"
#include "bda/posterior.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace bda;

namespace {

double normal_lpdf(double x, double m, double s) {
  return -0.5 * std::pow((x - m) / s, 2) - std::log(s) - 0.5 * std::log(2 * std::numbers::pi);
}
double half_cauchy_lpdf(double x, double s) { return std::log(2 / (std::numbers::pi * s)) - std::log1p(x * x / (s * s)); }
double gamma_lpdf(double x, double a, double b) { return a * std::log(b) - std::lgamma(a) + (a - 1) * std::log(x) - b * x; }

struct Synthetic {
  ModelSpec spec;
  ModelData data;
};

Synthetic counts(std::uint64_t seed, std::size_t n, bool grouped) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  Synthetic s;
  s.spec.family = ModelFamily::gamma_poisson_mlm;
  s.spec.outcome = "y";
  s.spec.predictors = {"x1", "x2"};
  if (grouped) s.spec.group = "g";
  s.data.x.resize(static_cast<Eigen::Index>(n), 2);
  s.data.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    s.data.x(k, 0) = z(rng);
    s.data.x(k, 1) = z(rng);
    s.data.y(k) = sample_gamma_poisson(std::exp(2 + 0.4 * s.data.x(k, 0)), 3.0, rng);
    if (grouped) s.data.group.push_back(i % 3);
  }
  if (grouped) s.data.group_levels = {"a", "b", "c"};
  return s;
}

Synthetic linear(std::uint64_t seed, std::size_t n, std::optional<double> fixed_sigma = {}) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  Synthetic s;
  s.spec.family = ModelFamily::normal_linear;
  s.spec.outcome = "h";
  s.spec.predictors = {"w"};
  s.spec.fixed_sigma = fixed_sigma;
  s.data.x.resize(static_cast<Eigen::Index>(n), 1);
  s.data.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    s.data.x(i, 0) = z(rng);
    s.data.y(i) = 150 + 5 * s.data.x(i, 0) + 4 * z(rng);
  }
  return s;
}

// Log posterior on the unconstrained scale written out term by term.
double reference_lp(const Synthetic& s, const Eigen::VectorXd& t) {
  const auto& d = s.data;
  const Eigen::Index p = d.x.cols();
  double lp = 0;
  if (s.spec.family == ModelFamily::normal_linear) {
    const double sigma = s.spec.fixed_sigma ? *s.spec.fixed_sigma : std::exp(t(p + 1));
    for (Eigen::Index i = 0; i < d.y.size(); ++i)
      lp += normal_lpdf(d.y(i), t(0) + d.x.row(i).dot(t.segment(1, p)), sigma);
    lp += normal_lpdf(t(0), 181, 20);
    for (Eigen::Index j = 0; j < p; ++j) lp += normal_lpdf(t(1 + j), 0, 10);
    if (!s.spec.fixed_sigma) lp += half_cauchy_lpdf(sigma, 10) + t(p + 1);
    return lp;
  }
  Eigen::Index k = 1 + p;
  double sigma = 0;
  std::vector<double> zg;
  if (s.spec.group) {
    sigma = std::exp(t(k));
    lp += half_cauchy_lpdf(sigma, 1) + t(k);
    ++k;
    for (std::size_t g = 0; g < d.group_levels.size(); ++g, ++k) {
      zg.push_back(t(k));
      lp += normal_lpdf(t(k), 0, 1);
    }
  }
  const double phi = std::exp(t(k));
  lp += gamma_lpdf(phi, 0.5, 0.5) + t(k);
  lp += normal_lpdf(t(0), 5, 4);
  for (Eigen::Index j = 0; j < p; ++j) lp += normal_lpdf(t(1 + j), 0, 0.25);
  for (Eigen::Index i = 0; i < d.y.size(); ++i) {
    double eta = t(0) + d.x.row(i).dot(t.segment(1, p));
    if (s.spec.group) eta += sigma * zg[d.group[static_cast<std::size_t>(i)]];
    lp += oracle::nb_log_pmf(d.y(i), std::exp(eta), phi);
  }
  return lp;
}

Eigen::VectorXd random_point(Rng& rng, std::size_t dim, double scale) {
  std::normal_distribution<double> z;
  Eigen::VectorXd t(static_cast<Eigen::Index>(dim));
  for (auto& v : t) v = scale * z(rng);
  return t;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("prior parsing") {
    CHECK(Prior::parse("normal(5,4)") == Prior::normal(5, 4));
    CHECK(Prior::parse(" half_cauchy(0, 1) ") == Prior::half_cauchy(1));
    CHECK(Prior::parse("gamma(0.5,0.5)") == Prior::gamma(0.5, 0.5));
    CHECK(kind_of([] { Prior::parse("normal(5)"); }) == ErrorKind::parse);
    CHECK(kind_of([] { Prior::parse("cauchy(1)"); }) == ErrorKind::parse);
    CHECK(kind_of([] { Prior::parse("normal(0,-1)"); }) == ErrorKind::config);
    CHECK(Prior::parse(Prior::gamma(2, 3).to_string()) == Prior::gamma(2, 3));
  }

  TEST_CASE("prior densities") {
    CHECK(Prior::normal(5, 4).log_density(7) == doctest::Approx(normal_lpdf(7, 5, 4)));
    CHECK(Prior::half_cauchy(2).log_density(1.5) == doctest::Approx(half_cauchy_lpdf(1.5, 2)));
    CHECK(Prior::gamma(0.5, 0.5).log_density(2) == doctest::Approx(gamma_lpdf(2, 0.5, 0.5)));
  }

  TEST_CASE("negative binomial pmf") {
    CHECK(nb_log_pmf(0, 1, 1) == doctest::Approx(-0.693147).epsilon(1e-6));
    CHECK(nb_log_pmf(2, 3, 1.5) == doctest::Approx(-1.830240).epsilon(1e-6));
    CHECK(std::abs(nb_log_pmf(3, 2, 1e8) - (-1.712318)) < 1e-6);
    for (double y : {0.0, 1.0, 7.0, 60.0, 400.0})
      for (double mu : {0.3, 4.0, 250.0})
        for (double phi : {0.2, 2.0, 50.0})
          CHECK(nb_log_pmf(y, mu, phi) == doctest::Approx(oracle::nb_log_pmf(y, mu, phi)).epsilon(1e-10));
  }

  TEST_CASE("parameter layout") {
    auto s = counts(1, 10, true);
    auto ps = make_param_space(s.spec, s.data.group_levels);
    CHECK(ps.names() == std::vector<std::string>{"alpha", "beta[x1]", "beta[x2]", "sigma", "z[a]", "z[b]", "z[c]",
                                                 "phi"});
    CHECK(ps.derived() == std::vector<std::string>{"alpha_group[a]", "alpha_group[b]", "alpha_group[c]"});
    auto l = linear(1, 5);
    CHECK(make_param_space(l.spec, {}).names() == std::vector<std::string>{"alpha", "beta[w]", "sigma"});
    l.spec.fixed_sigma = 2.0;
    CHECK(make_param_space(l.spec, {}).dim() == 2);
  }

  TEST_CASE("group intercepts are non-centered") {
    auto s = counts(2, 12, true);
    Model m(s.spec, s.data);
    std::vector<double> t{1, 0.1, 0.2, std::log(0.5), 1.0, -2.0, 0.5, std::log(3.0)};
    auto c = m.constrained(t);
    REQUIRE(c.size() == 11);
    CHECK(c[3] == doctest::Approx(0.5));
    CHECK(c[7] == doctest::Approx(3.0));
    CHECK(c[8] == doctest::Approx(0.5));
    CHECK(c[9] == doctest::Approx(-1.0));
    CHECK(c[10] == doctest::Approx(0.25));
  }

  TEST_CASE("log density agrees with the written-out posterior") {
    Rng rng(7);
    for (auto s : {counts(3, 40, true), counts(4, 30, false), linear(5, 25), linear(6, 25, 3.0)}) {
      Model m(s.spec, s.data);
      const double scale = s.spec.family == ModelFamily::normal_linear ? 1.0 : 0.5;
      auto base = random_point(rng, m.dim(), scale);
      if (s.spec.family == ModelFamily::normal_linear) base(0) += 150;
      for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd t = base + random_point(rng, m.dim(), 0.3);
        const double got = m.log_density(std::span<const double>(t.data(), m.dim())) -
                           m.log_density(std::span<const double>(base.data(), m.dim()));
        CHECK(got == doctest::Approx(reference_lp(s, t) - reference_lp(s, base)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("intercept-only reduces to a sum of pmfs") {
    auto s = counts(8, 20, false);
    s.spec.predictors.clear();
    s.data.x.resize(20, 0);
    Model m(s.spec, s.data);
    std::vector<double> t{1.7, std::log(2.5)};
    double sum = 0;
    for (Eigen::Index i = 0; i < 20; ++i) sum += oracle::nb_log_pmf(s.data.y(i), std::exp(1.7), 2.5);
    const double prior = Prior::normal(5, 4).log_density(1.7) + Prior::gamma(0.5, 0.5).log_density(2.5) + std::log(2.5);
    CHECK(m.log_density(t) == doctest::Approx(sum + prior).epsilon(1e-10));
  }

  TEST_CASE("symmetric gradient of a zero slope") {
    Synthetic s;
    s.spec.family = ModelFamily::normal_linear;
    s.spec.outcome = "h";
    s.spec.predictors = {"w"};
    s.data.x = Eigen::MatrixXd::Zero(1, 1);
    s.data.y = Eigen::VectorXd::Constant(1, 181);
    auto lp = log_posterior(s.spec, s.data, std::vector<double>{181, 0, std::log(10.0)});
    CHECK(lp.gradient(1) == 0.0);
  }

  TEST_CASE("gradients match finite differences") {
    Rng rng(12);
    for (auto s : {counts(9, 50, true), counts(10, 50, false), linear(11, 40), linear(13, 40, 4.0)}) {
      Model m(s.spec, s.data);
      const bool lin = s.spec.family == ModelFamily::normal_linear;
      for (int rep = 0; rep < 25; ++rep) {
        auto t = random_point(rng, m.dim(), lin ? 1.0 : 0.5);
        if (lin) t(0) += 150;
        Eigen::VectorXd g(static_cast<Eigen::Index>(m.dim()));
        m.log_density(std::span<const double>(t.data(), m.dim()), std::span<double>(g.data(), m.dim()));
        auto fd = oracle::fd_gradient(
            [&](const Eigen::VectorXd& x) { return m.log_density(std::span<const double>(x.data(), m.dim())); }, t);
        for (Eigen::Index i = 0; i < g.size(); ++i)
          CHECK(std::abs(g(i) - fd(i)) <= 1e-5 * std::max(1.0, std::abs(fd(i))));
      }
    }
  }

  TEST_CASE("non-finite parameters give a non-finite density") {
    auto s = counts(14, 10, true);
    Model m(s.spec, s.data);
    std::vector<double> t(m.dim(), 0.0);
    t[0] = std::nan("");
    CHECK_FALSE(std::isfinite(m.log_density(t)));
  }

  TEST_CASE("data checks") {
    ModelSpec spec;
    spec.outcome = "y";
    spec.predictors = {"x"};
    Schema sc{ColumnSchema::numeric("y"), ColumnSchema::numeric("x")};
    CHECK(kind_of([&] { ModelData::from_dataset(spec, parse_csv("y,x\n1.5,0\n", sc)); }) == ErrorKind::data);
    CHECK(kind_of([&] { ModelData::from_dataset(spec, parse_csv("y,x\n1,NA\n", sc)); }) == ErrorKind::data);
    spec.predictors = {"y"};
    CHECK(kind_of([&] { spec.validate(); }) == ErrorKind::config);
  }

  TEST_CASE("prior predictive of the effort model") {
    ModelSpec spec;
    spec.outcome = "Effort";
    Rng rng(42);
    auto pp = prior_predictive(spec, Eigen::MatrixXd::Zero(1, 0), 100000, rng);
    std::vector<double> mean(pp.mean.row(0).begin(), pp.mean.row(0).end());
    CHECK(quantile(mean, 0.5) == doctest::Approx(148.4132).epsilon(0.05));
    const double tail = static_cast<double>(std::count_if(mean.begin(), mean.end(), [](double v) { return v > 1e5; })) /
                        static_cast<double>(mean.size());
    // P(N(5, 4) > ln 1e5) = 0.051738
    CHECK(std::abs(tail - 0.051738) < 0.01);
    CHECK(std::abs(0.051738 - (1 - oracle::normal_cdf((std::log(1e5) - 5) / 4))) < 1e-6);
  }

  TEST_CASE("posterior predictive in the Poisson limit") {
    auto s = counts(15, 30, false);
    s.spec.predictors.clear();
    s.data.x.resize(30, 0);
    PosteriorDraws d;
    d.names = {"alpha", "phi"};
    d.values.resize(10, 2);
    d.values.col(0).setConstant(std::log(5.0));
    d.values.col(1).setConstant(1e9);
    d.provenance.resize(10);
    Rng rng(2);
    auto rep = posterior_predictive(s.spec, s.data, d, 2000, rng);
    CHECK(rep.rows() == 2000);
    CHECK(rep.cols() == 30);
    CHECK(rep.mean() == doctest::Approx(5.0).epsilon(0.01));
  }

  TEST_CASE("posterior predictive with vanishing residual sd") {
    auto s = linear(16, 12);
    PosteriorDraws d;
    d.names = {"alpha", "beta[w]", "sigma"};
    d.values.resize(1, 3);
    d.values << 150, 5, 1e-300;
    d.provenance.resize(1);
    Rng rng(3);
    auto rep = posterior_predictive(s.spec, s.data, d, 5, rng);
    for (Eigen::Index r = 0; r < 5; ++r)
      for (Eigen::Index i = 0; i < 12; ++i) CHECK(rep(r, i) == doctest::Approx(150 + 5 * s.data.x(i, 0)));
  }
}
