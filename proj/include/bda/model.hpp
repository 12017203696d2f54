#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bda/draws.hpp"
#include "bda/prior.hpp"
#include "bda/random.hpp"
#include "bda/tabular.hpp"

namespace bda {

enum class ModelFamily { normal_linear, gamma_poisson_mlm };

ModelFamily parse_model_family(std::string_view text);
std::string_view to_string(ModelFamily family);

/// Declarative regression model.
///
/// Prior roles: "alpha" (intercept), "beta" (every slope, overridable per
/// predictor as "beta[<name>]"), "sigma" (residual sd for normal_linear, sd of
/// the group intercepts for gamma_poisson_mlm) and "phi" (Gamma-Poisson
/// shape). Roles without an explicit prior fall back to the family defaults.
struct ModelSpec {
  ModelFamily family = ModelFamily::gamma_poisson_mlm;
  std::string outcome;
  std::vector<std::string> predictors;
  std::optional<std::string> group;
  std::map<std::string, Prior> priors;
  /// normal_linear only: hold the residual sd at this value instead of sampling it.
  std::optional<double> fixed_sigma;

  Prior prior_for(std::string_view role) const;
  void validate() const;
};

enum class Constraint { unconstrained, positive };

struct ParamInfo {
  std::string name;
  Constraint constraint = Constraint::unconstrained;
};

/// Packing order of the sampled parameters. Positive parameters are sampled
/// as their logarithm.
///
/// gamma_poisson_mlm: alpha, beta[x] for each predictor, then with a group
/// sigma and z[level] for each level, then phi. The group intercepts
/// alpha_group[level] = sigma * z[level] are reported as derived quantities.
/// normal_linear: alpha, beta[x] for each predictor, then sigma unless fixed.
class ParamSpace {
 public:
  ParamSpace() = default;
  ParamSpace(std::vector<ParamInfo> params, std::vector<std::string> derived);

  std::size_t dim() const noexcept { return params_.size(); }
  const std::vector<ParamInfo>& params() const noexcept { return params_; }
  const std::vector<std::string>& derived() const noexcept { return derived_; }
  std::vector<std::string> names() const;
  /// Sampled names followed by derived names.
  std::vector<std::string> constrained_names() const;
  std::optional<std::size_t> find(std::string_view name) const;

  std::vector<double> constrain(std::span<const double> theta) const;
  std::vector<double> unconstrain(std::span<const double> values) const;

 private:
  std::vector<ParamInfo> params_;
  std::vector<std::string> derived_;
};

ParamSpace make_param_space(const ModelSpec& spec, std::span<const std::string> group_levels);

/// Numeric view of the model's columns; rows must be complete.
struct ModelData {
  Eigen::MatrixXd x;  // n x p predictors
  Eigen::VectorXd y;
  std::vector<std::size_t> group;  // level index per row (empty without a group)
  std::vector<std::string> group_levels;

  std::size_t n_rows() const noexcept { return static_cast<std::size_t>(y.size()); }
  /// Throws ErrorKind::data on missing cells or a non-count outcome for
  /// gamma_poisson_mlm. Group levels are the factor's declared levels.
  static ModelData from_dataset(const ModelSpec& spec, const Dataset& ds);
};

/// Log-posterior density with its exact gradient. Non-finite evaluations are
/// signalled by a non-finite return value.
class Model {
 public:
  Model(ModelSpec spec, ModelData data);

  const ModelSpec& spec() const noexcept { return spec_; }
  const ModelData& data() const noexcept { return data_; }
  const ParamSpace& params() const noexcept { return params_; }
  std::size_t dim() const noexcept { return params_.dim(); }

  /// Writes d/dtheta into `grad` (size dim()) and returns the log density.
  double log_density(std::span<const double> theta, std::span<double> grad) const;
  double log_density(std::span<const double> theta) const;

  /// Constrained parameters followed by derived quantities.
  std::vector<double> constrained(std::span<const double> theta) const;

 private:
  double normal_linear(std::span<const double> theta, std::span<double> grad) const;
  double gamma_poisson(std::span<const double> theta, std::span<double> grad) const;

  ModelSpec spec_;
  ModelData data_;
  ParamSpace params_;
  std::vector<Prior> beta_priors_;
  double log_factorial_sum_ = 0.0;
};

struct LogPosterior {
  double value = 0.0;
  Eigen::VectorXd gradient;
  bool finite = true;
};

LogPosterior log_posterior(const ModelSpec& spec, const ModelData& data, std::span<const double> theta);

/// Negative binomial log pmf with mean lambda and shape phi.
double nb_log_pmf(double y, double lambda, double phi);

/// Gamma-Poisson draw: rate ~ Gamma(phi, lambda / phi), y ~ Poisson(rate).
double sample_gamma_poisson(double lambda, double phi, Rng& rng);

struct PriorPredictiveOptions {
  /// Adds the intercept offset of a new group (sigma * z, z ~ N(0,1)). Off by
  /// default: the linear predictor is the population-level one.
  bool include_group_effect = false;
};

/// Draws from the prior predictive at each grid point. mean(g, s) is the
/// linear predictor pushed through the inverse link, outcome(g, s) one draw
/// from the likelihood at that mean.
struct PriorPredictive {
  Eigen::MatrixXd mean;     // grid points x n_sims
  Eigen::MatrixXd outcome;  // grid points x n_sims
};

PriorPredictive prior_predictive(const ModelSpec& spec, const Eigen::MatrixXd& covariate_grid, std::size_t n_sims,
                                 Rng& rng, const PriorPredictiveOptions& options = {});

/// n_rep x n_rows replicate matrix; each replicate uses one uniformly chosen draw.
Eigen::MatrixXd posterior_predictive(const ModelSpec& spec, const ModelData& data, const PosteriorDraws& draws,
                                     std::size_t n_rep, Rng& rng);

}  // namespace bda
