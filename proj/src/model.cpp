#include "bda/model.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bda/error.hpp"

namespace bda {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Special functions report poles and overflow as non-finite values instead of
// throwing; the sampler treats those points as outside the support.
using quiet_policy = boost::math::policies::policy<
    boost::math::policies::domain_error<boost::math::policies::ignore_error>,
    boost::math::policies::pole_error<boost::math::policies::ignore_error>,
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::evaluation_error<boost::math::policies::ignore_error>>;

double lgamma(double x) { return boost::math::lgamma(x, quiet_policy()); }
double digamma(double x) { return boost::math::digamma(x, quiet_policy()); }

// Integer counts up to this bound use exact finite sums for the
// lgamma/digamma differences; larger counts use the special functions.
constexpr double kSmallCount = 48.0;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// lgamma(y + phi) - lgamma(phi)
double lgamma_ratio(double y, double phi) {
  if (y <= kSmallCount) {
    double s = 0.0;
    for (int k = 0; k < static_cast<int>(y); ++k) s += std::log(phi + k);
    return s;
  }
  return lgamma(y + phi) - lgamma(phi);
}

// digamma(y + phi) - digamma(phi)
double digamma_ratio(double y, double phi) {
  if (y <= kSmallCount) {
    double s = 0.0;
    for (int k = 0; k < static_cast<int>(y); ++k) s += 1.0 / (phi + k);
    return s;
  }
  return digamma(y + phi) - digamma(phi);
}

bool is_count(double y) { return y >= 0.0 && std::isfinite(y) && y == std::floor(y); }

std::string beta_name(const std::string& predictor) { return "beta[" + predictor + "]"; }

}  // namespace

ModelFamily parse_model_family(std::string_view text) {
  if (text == "normal_linear") return ModelFamily::normal_linear;
  if (text == "gamma_poisson_mlm") return ModelFamily::gamma_poisson_mlm;
  fail(ErrorKind::config, "unknown model family '" + std::string(text) + "'");
}

std::string_view to_string(ModelFamily family) {
  return family == ModelFamily::normal_linear ? "normal_linear" : "gamma_poisson_mlm";
}

// ModelSpec

Prior ModelSpec::prior_for(std::string_view role) const {
  if (auto it = priors.find(std::string(role)); it != priors.end()) return it->second;
  if (role.starts_with("beta[")) return prior_for("beta");
  const bool nb = family == ModelFamily::gamma_poisson_mlm;
  if (role == "alpha") return nb ? Prior::normal(5, 4) : Prior::normal(181, 20);
  if (role == "beta") return nb ? Prior::normal(0, 0.25) : Prior::normal(0, 10);
  if (role == "sigma") return nb ? Prior::half_cauchy(1) : Prior::half_cauchy(10);
  if (role == "phi" && nb) return Prior::gamma(0.5, 0.5);
  fail(ErrorKind::spec, "model has no prior role '" + std::string(role) + "'");
}

void ModelSpec::validate() const {
  if (outcome.empty()) fail(ErrorKind::config, "model outcome is not set");
  auto sorted = predictors;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    fail(ErrorKind::config, "model lists a predictor twice");
  if (std::find(predictors.begin(), predictors.end(), outcome) != predictors.end())
    fail(ErrorKind::config, "outcome is also listed as a predictor");
  if (group && family != ModelFamily::gamma_poisson_mlm)
    fail(ErrorKind::config, "a group variable is only supported by gamma_poisson_mlm");
  if (fixed_sigma && family != ModelFamily::normal_linear)
    fail(ErrorKind::config, "fixed_sigma is only supported by normal_linear");
  if (fixed_sigma && !(*fixed_sigma > 0.0)) fail(ErrorKind::config, "fixed_sigma must be > 0");
  for (const auto& [role, prior] : priors) {
    const bool known = role == "alpha" || role == "beta" || role == "sigma" ||
                       (role == "phi" && family == ModelFamily::gamma_poisson_mlm) ||
                       (role.starts_with("beta[") &&
                        std::find(predictors.begin(), predictors.end(), role.substr(5, role.size() - 6)) != predictors.end());
    if (!known) fail(ErrorKind::config, "prior for unknown role '" + role + "'");
    const bool needs_positive = role == "sigma" || role == "phi";
    if (needs_positive && !prior.positive_support())
      fail(ErrorKind::config, "prior for '" + role + "' must have positive support");
  }
}

// ParamSpace

ParamSpace::ParamSpace(std::vector<ParamInfo> params, std::vector<std::string> derived)
    : params_(std::move(params)), derived_(std::move(derived)) {}

std::vector<std::string> ParamSpace::names() const {
  std::vector<std::string> out;
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

std::vector<std::string> ParamSpace::constrained_names() const {
  auto out = names();
  out.insert(out.end(), derived_.begin(), derived_.end());
  return out;
}

std::optional<std::size_t> ParamSpace::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  return std::nullopt;
}

std::vector<double> ParamSpace::constrain(std::span<const double> theta) const {
  if (theta.size() != dim()) fail(ErrorKind::spec, "parameter vector has the wrong dimension");
  std::vector<double> out(theta.begin(), theta.end());
  for (std::size_t i = 0; i < dim(); ++i)
    if (params_[i].constraint == Constraint::positive) out[i] = std::exp(theta[i]);
  return out;
}

std::vector<double> ParamSpace::unconstrain(std::span<const double> values) const {
  if (values.size() < dim()) fail(ErrorKind::spec, "parameter vector has the wrong dimension");
  std::vector<double> out(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(dim()));
  for (std::size_t i = 0; i < dim(); ++i)
    if (params_[i].constraint == Constraint::positive) {
      if (!(values[i] > 0.0)) fail(ErrorKind::domain, "positive parameter '" + params_[i].name + "' is not > 0");
      out[i] = std::log(values[i]);
    }
  return out;
}

ParamSpace make_param_space(const ModelSpec& spec, std::span<const std::string> group_levels) {
  std::vector<ParamInfo> params{{"alpha", Constraint::unconstrained}};
  for (const auto& p : spec.predictors) params.push_back({beta_name(p), Constraint::unconstrained});
  std::vector<std::string> derived;
  if (spec.family == ModelFamily::gamma_poisson_mlm) {
    if (spec.group) {
      params.push_back({"sigma", Constraint::positive});
      for (const auto& level : group_levels) params.push_back({"z[" + level + "]", Constraint::unconstrained});
      for (const auto& level : group_levels) derived.push_back("alpha_group[" + level + "]");
    }
    params.push_back({"phi", Constraint::positive});
  } else if (!spec.fixed_sigma) {
    params.push_back({"sigma", Constraint::positive});
  }
  return ParamSpace(std::move(params), std::move(derived));
}

// ModelData

ModelData ModelData::from_dataset(const ModelSpec& spec, const Dataset& ds) {
  spec.validate();
  ModelData d;
  const auto n = static_cast<Eigen::Index>(ds.n_rows());
  const auto& y = ds.column(spec.outcome);
  if (y.is_factor()) fail(ErrorKind::kind, "outcome '" + spec.outcome + "' is not numeric");
  d.y.resize(n);
  d.x.resize(n, static_cast<Eigen::Index>(spec.predictors.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!y.observed(static_cast<std::size_t>(i))) fail(ErrorKind::data, "outcome has missing cells; impute first");
    d.y(i) = y.value(static_cast<std::size_t>(i));
    if (spec.family == ModelFamily::gamma_poisson_mlm && !is_count(d.y(i)))
      fail(ErrorKind::data, "outcome '" + spec.outcome + "' must hold non-negative integers (row " +
                                std::to_string(i + 1) + ")");
  }
  for (std::size_t j = 0; j < spec.predictors.size(); ++j) {
    const auto& c = ds.column(spec.predictors[j]);
    if (c.is_factor()) fail(ErrorKind::kind, "predictor '" + c.name() + "' is not numeric");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!c.observed(static_cast<std::size_t>(i)))
        fail(ErrorKind::data, "predictor '" + c.name() + "' has missing cells; impute first");
      d.x(i, static_cast<Eigen::Index>(j)) = c.value(static_cast<std::size_t>(i));
    }
  }
  if (spec.group) {
    const auto& g = ds.column(*spec.group);
    if (!g.is_factor()) fail(ErrorKind::kind, "group '" + g.name() + "' must be an ordered factor");
    d.group_levels = g.schema().levels;
    d.group.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!g.observed(static_cast<std::size_t>(i))) fail(ErrorKind::data, "group has missing cells; impute first");
      d.group[static_cast<std::size_t>(i)] = g.level(static_cast<std::size_t>(i));
    }
  }
  return d;
}

// Model

Model::Model(ModelSpec spec, ModelData data) : spec_(std::move(spec)), data_(std::move(data)) {
  spec_.validate();
  if (data_.x.rows() != data_.y.size() || data_.x.cols() != static_cast<Eigen::Index>(spec_.predictors.size()))
    fail(ErrorKind::spec, "model data does not match the model's predictors");
  if (spec_.group && data_.group.size() != data_.n_rows()) fail(ErrorKind::spec, "model data lacks group indices");
  params_ = make_param_space(spec_, data_.group_levels);
  for (const auto& p : spec_.predictors) beta_priors_.push_back(spec_.prior_for(beta_name(p)));
  if (spec_.family == ModelFamily::gamma_poisson_mlm)
    for (Eigen::Index i = 0; i < data_.y.size(); ++i) log_factorial_sum_ += lgamma(data_.y(i) + 1.0);
}

double Model::log_density(std::span<const double> theta, std::span<double> grad) const {
  if (theta.size() != dim() || grad.size() != dim()) fail(ErrorKind::spec, "parameter vector has the wrong dimension");
  for (double t : theta)
    if (!std::isfinite(t)) return kNaN;
  return spec_.family == ModelFamily::normal_linear ? normal_linear(theta, grad) : gamma_poisson(theta, grad);
}

double Model::log_density(std::span<const double> theta) const {
  std::vector<double> grad(dim());
  return log_density(theta, grad);
}

std::vector<double> Model::constrained(std::span<const double> theta) const {
  auto out = params_.constrain(theta);
  if (spec_.family == ModelFamily::gamma_poisson_mlm && spec_.group) {
    const std::size_t p = spec_.predictors.size();
    const double sigma = out[1 + p];
    for (std::size_t g = 0; g < data_.group_levels.size(); ++g) out.push_back(sigma * out[2 + p + g]);
  }
  return out;
}

double Model::normal_linear(std::span<const double> theta, std::span<double> grad) const {
  const auto p = static_cast<Eigen::Index>(spec_.predictors.size());
  const auto n = data_.y.size();
  const double alpha = theta[0];
  Eigen::Map<const Eigen::VectorXd> beta(theta.data() + 1, p);
  const bool sample_sigma = !spec_.fixed_sigma;
  const double log_sigma = sample_sigma ? theta[static_cast<std::size_t>(1 + p)] : std::log(*spec_.fixed_sigma);
  const double sigma = std::exp(log_sigma);

  Eigen::VectorXd resid = data_.y - data_.x * beta;
  resid.array() -= alpha;
  const double ss = resid.squaredNorm();
  const double inv_var = 1.0 / (sigma * sigma);

  double lp = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - static_cast<double>(n) * log_sigma -
              0.5 * ss * inv_var;
  const Prior alpha_prior = spec_.prior_for("alpha");
  lp += alpha_prior.log_density(alpha);
  grad[0] = resid.sum() * inv_var + alpha_prior.grad_log_density(alpha);
  Eigen::VectorXd xr = data_.x.transpose() * resid;
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& prior = beta_priors_[static_cast<std::size_t>(j)];
    lp += prior.log_density(beta(j));
    grad[static_cast<std::size_t>(1 + j)] = xr(j) * inv_var + prior.grad_log_density(beta(j));
  }
  if (sample_sigma) {
    const Prior sigma_prior = spec_.prior_for("sigma");
    lp += sigma_prior.log_density(sigma) + log_sigma;
    grad[static_cast<std::size_t>(1 + p)] =
        -static_cast<double>(n) + ss * inv_var + sigma * sigma_prior.grad_log_density(sigma) + 1.0;
  }
  if (!std::isfinite(lp)) return kNaN;
  return lp;
}

double Model::gamma_poisson(std::span<const double> theta, std::span<double> grad) const {
  const std::size_t p = spec_.predictors.size();
  const std::size_t n_groups = spec_.group ? data_.group_levels.size() : 0;
  const double alpha = theta[0];
  Eigen::Map<const Eigen::VectorXd> beta(theta.data() + 1, static_cast<Eigen::Index>(p));
  std::size_t at = 1 + p;
  double log_sigma = 0.0, sigma = 0.0;
  std::span<const double> z;
  if (spec_.group) {
    log_sigma = theta[at++];
    sigma = std::exp(log_sigma);
    z = theta.subspan(at, n_groups);
    at += n_groups;
  }
  const std::size_t phi_at = at;
  const double log_phi = theta[phi_at];
  const double phi = std::exp(log_phi);
  if (!(phi > 0.0) || !std::isfinite(phi) || (spec_.group && !(sigma > 0.0 && std::isfinite(sigma)))) return kNaN;

  Eigen::VectorXd eta = data_.x * beta;
  eta.array() += alpha;
  if (spec_.group)
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) += sigma * z[data_.group[static_cast<std::size_t>(i)]];

  double lp = -log_factorial_sum_;
  double dphi = 0.0;
  Eigen::VectorXd deta(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double y = data_.y(i);
    const double d = eta(i) - log_phi;
    const double sp = softplus(d);  // log((phi + lambda) / phi)
    const double s = sigmoid(d);    // lambda / (phi + lambda)
    lp += lgamma_ratio(y, phi) - phi * sp + y * (d - sp);
    deta(i) = y - (phi + y) * s;
    dphi += digamma_ratio(y, phi) - sp + s - (y / phi) * std::exp(-sp);
  }

  std::fill(grad.begin(), grad.end(), 0.0);
  const Prior alpha_prior = spec_.prior_for("alpha");
  lp += alpha_prior.log_density(alpha);
  grad[0] = deta.sum() + alpha_prior.grad_log_density(alpha);
  Eigen::VectorXd xg = data_.x.transpose() * deta;
  for (std::size_t j = 0; j < p; ++j) {
    const auto& prior = beta_priors_[j];
    lp += prior.log_density(beta(static_cast<Eigen::Index>(j)));
    grad[1 + j] = xg(static_cast<Eigen::Index>(j)) + prior.grad_log_density(beta(static_cast<Eigen::Index>(j)));
  }
  if (spec_.group) {
    std::vector<double> group_sum(n_groups, 0.0);
    for (Eigen::Index i = 0; i < deta.size(); ++i) group_sum[data_.group[static_cast<std::size_t>(i)]] += deta(i);
    const Prior sigma_prior = spec_.prior_for("sigma");
    double dsigma = sigma_prior.grad_log_density(sigma);
    lp += sigma_prior.log_density(sigma) + log_sigma;
    for (std::size_t g = 0; g < n_groups; ++g) {
      lp += -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z[g] * z[g];
      grad[2 + p + g] = sigma * group_sum[g] - z[g];
      dsigma += z[g] * group_sum[g];
    }
    grad[1 + p] = sigma * dsigma + 1.0;
  }
  const Prior phi_prior = spec_.prior_for("phi");
  lp += phi_prior.log_density(phi) + log_phi;
  grad[phi_at] = phi * (dphi + phi_prior.grad_log_density(phi)) + 1.0;

  if (!std::isfinite(lp)) return kNaN;
  for (double g : grad)
    if (!std::isfinite(g)) return kNaN;
  return lp;
}

LogPosterior log_posterior(const ModelSpec& spec, const ModelData& data, std::span<const double> theta) {
  Model model(spec, data);
  LogPosterior out;
  out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.dim()));
  out.value = model.log_density(theta, std::span<double>(out.gradient.data(), model.dim()));
  out.finite = std::isfinite(out.value);
  return out;
}

double nb_log_pmf(double y, double lambda, double phi) {
  if (!is_count(y)) fail(ErrorKind::domain, "nb_log_pmf needs a non-negative integer count");
  if (!(lambda > 0.0) || !(phi > 0.0)) fail(ErrorKind::domain, "nb_log_pmf needs lambda > 0 and phi > 0");
  const double d = std::log(lambda) - std::log(phi);
  const double sp = softplus(d);
  return lgamma_ratio(y, phi) - lgamma(y + 1.0) - phi * sp + y * (d - sp);
}

double sample_gamma_poisson(double lambda, double phi, Rng& rng) {
  if (!(lambda > 0.0) || !(phi > 0.0)) return 0.0;
  const double rate = std::gamma_distribution<double>(phi, lambda / phi)(rng);
  if (!(rate > 0.0)) return 0.0;
  // Beyond this the count is indistinguishable from its rate at double precision.
  if (rate > 1e15 || !std::isfinite(rate)) return std::round(rate);
  return static_cast<double>(std::poisson_distribution<long long>(rate)(rng));
}

PriorPredictive prior_predictive(const ModelSpec& spec, const Eigen::MatrixXd& covariate_grid, std::size_t n_sims,
                                 Rng& rng, const PriorPredictiveOptions& options) {
  spec.validate();
  if (n_sims < 1) fail(ErrorKind::config, "prior predictive needs n_sims >= 1");
  const auto p = static_cast<Eigen::Index>(spec.predictors.size());
  if (covariate_grid.cols() != p) fail(ErrorKind::spec, "covariate grid must have one column per predictor");
  const auto n_points = covariate_grid.rows();
  PriorPredictive out{Eigen::MatrixXd(n_points, static_cast<Eigen::Index>(n_sims)),
                      Eigen::MatrixXd(n_points, static_cast<Eigen::Index>(n_sims))};

  const Prior alpha_prior = spec.prior_for("alpha");
  std::vector<Prior> beta_priors;
  for (const auto& x : spec.predictors) beta_priors.push_back(spec.prior_for(beta_name(x)));
  const bool nb = spec.family == ModelFamily::gamma_poisson_mlm;
  std::normal_distribution<double> std_normal;
  Eigen::VectorXd beta(p);
  for (std::size_t s = 0; s < n_sims; ++s) {
    const double alpha = alpha_prior.sample(rng);
    for (Eigen::Index j = 0; j < p; ++j) beta(j) = beta_priors[static_cast<std::size_t>(j)].sample(rng);
    double offset = 0.0, phi = 0.0, sigma = 0.0;
    if (nb) {
      if (spec.group && options.include_group_effect) offset = spec.prior_for("sigma").sample(rng) * std_normal(rng);
      phi = spec.prior_for("phi").sample(rng);
    } else {
      sigma = spec.fixed_sigma ? *spec.fixed_sigma : spec.prior_for("sigma").sample(rng);
    }
    for (Eigen::Index g = 0; g < n_points; ++g) {
      const double eta = alpha + covariate_grid.row(g).dot(beta) + offset;
      const auto col = static_cast<Eigen::Index>(s);
      if (nb) {
        out.mean(g, col) = std::exp(eta);
        out.outcome(g, col) = sample_gamma_poisson(out.mean(g, col), phi, rng);
      } else {
        out.mean(g, col) = eta;
        out.outcome(g, col) = eta + sigma * std_normal(rng);
      }
    }
  }
  return out;
}

Eigen::MatrixXd posterior_predictive(const ModelSpec& spec, const ModelData& data, const PosteriorDraws& draws,
                                     std::size_t n_rep, Rng& rng) {
  spec.validate();
  if (draws.n_draws() == 0) fail(ErrorKind::data, "posterior predictive needs at least one draw");
  const auto p = static_cast<Eigen::Index>(spec.predictors.size());
  if (data.x.cols() != p) fail(ErrorKind::spec, "model data does not match the model's predictors");
  const bool nb = spec.family == ModelFamily::gamma_poisson_mlm;

  const std::size_t alpha_col = draws.index_of("alpha");
  std::vector<std::size_t> beta_cols;
  for (const auto& x : spec.predictors) beta_cols.push_back(draws.index_of(beta_name(x)));
  std::vector<std::size_t> group_cols;
  std::optional<std::size_t> sigma_col, phi_col;
  if (nb) {
    phi_col = draws.index_of("phi");
    if (spec.group)
      for (const auto& level : data.group_levels) group_cols.push_back(draws.index_of("alpha_group[" + level + "]"));
  } else if (!spec.fixed_sigma) {
    sigma_col = draws.index_of("sigma");
  }

  const auto n = static_cast<Eigen::Index>(data.n_rows());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_rep), n);
  std::uniform_int_distribution<std::size_t> pick(0, draws.n_draws() - 1);
  std::normal_distribution<double> std_normal;
  Eigen::VectorXd beta(p);
  for (std::size_t r = 0; r < n_rep; ++r) {
    const auto d = static_cast<Eigen::Index>(pick(rng));
    for (Eigen::Index j = 0; j < p; ++j) beta(j) = draws.values(d, static_cast<Eigen::Index>(beta_cols[static_cast<std::size_t>(j)]));
    Eigen::VectorXd eta = data.x * beta;
    eta.array() += draws.values(d, static_cast<Eigen::Index>(alpha_col));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!group_cols.empty())
        eta(i) += draws.values(d, static_cast<Eigen::Index>(group_cols[data.group[static_cast<std::size_t>(i)]]));
      if (nb) {
        out(static_cast<Eigen::Index>(r), i) =
            sample_gamma_poisson(std::exp(eta(i)), draws.values(d, static_cast<Eigen::Index>(*phi_col)), rng);
      } else {
        const double sigma = sigma_col ? draws.values(d, static_cast<Eigen::Index>(*sigma_col)) : *spec.fixed_sigma;
        out(static_cast<Eigen::Index>(r), i) = eta(i) + sigma * std_normal(rng);
      }
    }
  }
  return out;
}

}  // namespace bda
