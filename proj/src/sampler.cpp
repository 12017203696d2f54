#include "bda/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bda/error.hpp"
#include "bda/parallel.hpp"
#include "bda/random.hpp"

namespace bda {

namespace {

constexpr double kDivergence = 1000.0;
constexpr int kInitAttempts = 100;

// Step-size adaptation on log eps (Nesterov dual averaging).
class DualAveraging {
 public:
  explicit DualAveraging(double delta) : delta_(delta) {}

  void restart(double eps) {
    mu_ = std::log(10.0 * eps);
    s_bar_ = 0.0;
    x_bar_ = 0.0;
    counter_ = 0;
  }

  double update(double accept) {
    ++counter_;
    const double t = static_cast<double>(counter_);
    const double eta = 1.0 / (t + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept);
    const double x = mu_ - s_bar_ * std::sqrt(t) / kGamma;
    const double w = std::pow(t, -kKappa);
    x_bar_ = (1.0 - w) * x_bar_ + w * x;
    return std::exp(x);
  }

  double final_step() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double delta_;
  double mu_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  std::size_t counter_ = 0;
};

// Ends (exclusive) of the mass-matrix windows within warmup. Windows start
// at 15% of warmup, double from 25 iterations, and stop at 90%; a window that
// would leave too little room for its successor absorbs the remainder.
std::vector<std::size_t> window_ends(std::size_t warmup) {
  std::vector<std::size_t> ends;
  if (warmup < 20) return ends;
  const std::size_t start = static_cast<std::size_t>(0.15 * static_cast<double>(warmup));
  const std::size_t stop = warmup - static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(warmup)));
  std::size_t size = 25;
  std::size_t at = start;
  while (at < stop) {
    std::size_t end = at + size;
    if (end + 2 * size > stop) end = stop;
    ends.push_back(end);
    at = end;
    size *= 2;
  }
  return ends;
}

double kinetic(const Eigen::VectorXd& p, const Eigen::VectorXd& inv_mass) {
  return 0.5 * (p.array().square() * inv_mass.array()).sum();
}

double hamiltonian(const PhasePoint& z, const Eigen::VectorXd& inv_mass) {
  return -z.log_density + kinetic(z.p, inv_mass);
}

void draw_momentum(Eigen::VectorXd& p, const Eigen::VectorXd& inv_mass, Rng& rng) {
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = normal(rng) / std::sqrt(inv_mass(i));
}

double initial_step_size(PhasePoint z, const Eigen::VectorXd& inv_mass, const LogDensityFn& f, Rng& rng,
                         double eps) {
  const double threshold = std::log(0.8);
  const PhasePoint start = z;
  auto log_accept = [&](double step) {
    z = start;
    draw_momentum(z.p, inv_mass, rng);
    const double h0 = hamiltonian(z, inv_mass);
    if (!leapfrog(z, step, inv_mass, f)) return -std::numeric_limits<double>::infinity();
    const double h1 = hamiltonian(z, inv_mass);
    return std::isfinite(h1) ? h0 - h1 : -std::numeric_limits<double>::infinity();
  };
  const int direction = log_accept(eps) > threshold ? 1 : -1;
  for (int it = 0; it < 100; ++it) {
    const double next = direction == 1 ? 2.0 * eps : 0.5 * eps;
    const double h = log_accept(next);
    if (direction == 1 && !(h > threshold)) break;
    eps = next;
    if (direction == -1 && !(h < threshold)) break;
    if (eps < 1e-10 || eps > 1e7) break;
  }
  return eps;
}

std::size_t max_steps(double eps, const SamplerConfig& cfg) {
  const double steps = std::ceil(2.0 * cfg.integration_time / eps - 1.0);
  if (!std::isfinite(steps)) return cfg.max_leapfrog;
  return static_cast<std::size_t>(std::clamp(steps, 1.0, static_cast<double>(cfg.max_leapfrog)));
}

struct Transition {
  PhasePoint z;
  double energy = 0.0;
  double accept = 0.0;
  bool divergent = false;
  std::size_t n_leapfrog = 0;
};

Transition transition(const PhasePoint& current, double eps, std::size_t steps, const Eigen::VectorXd& inv_mass,
                      const LogDensityFn& f, Rng& rng) {
  PhasePoint z = current;
  draw_momentum(z.p, inv_mass, rng);
  const double h0 = hamiltonian(z, inv_mass);
  PhasePoint start = z;
  Transition out;
  bool finite = true;
  for (std::size_t s = 0; s < steps && finite; ++s) {
    finite = leapfrog(z, eps, inv_mass, f);
    ++out.n_leapfrog;
  }
  const double h1 = finite ? hamiltonian(z, inv_mass) : std::numeric_limits<double>::infinity();
  const double delta = h1 - h0;
  out.divergent = !std::isfinite(delta) || delta > kDivergence;
  out.accept = out.divergent ? 0.0 : std::min(1.0, std::exp(-delta));
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (!out.divergent && u < out.accept) {
    out.z = std::move(z);
    out.energy = h1;
  } else {
    out.z = std::move(start);
    out.energy = h0;
  }
  return out;
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_chains < 1) fail(ErrorKind::config, "sampler needs at least one chain");
  if (n_iter < 1) fail(ErrorKind::config, "sampler needs n_iter >= 1");
  if (warmup() >= n_iter) fail(ErrorKind::config, "n_warmup must be < n_iter");
  if (!(target_accept > 0.0 && target_accept < 1.0)) fail(ErrorKind::config, "target_accept must lie in (0, 1)");
  if (max_leapfrog < 1) fail(ErrorKind::config, "max_leapfrog must be >= 1");
  if (!(integration_time > 0.0) || !std::isfinite(integration_time))
    fail(ErrorKind::config, "integration_time must be > 0");
}

PhasePoint make_point(const Eigen::VectorXd& theta, const Eigen::VectorXd& p, const LogDensityFn& f) {
  PhasePoint z{theta, p, Eigen::VectorXd::Zero(theta.size()), 0.0};
  z.log_density = f(std::span<const double>(z.theta.data(), static_cast<std::size_t>(z.theta.size())),
                    std::span<double>(z.grad.data(), static_cast<std::size_t>(z.grad.size())));
  if (!z.grad.allFinite()) z.log_density = std::numeric_limits<double>::quiet_NaN();
  return z;
}

bool leapfrog(PhasePoint& z, double eps, const Eigen::VectorXd& inv_mass, const LogDensityFn& f) {
  const auto n = static_cast<std::size_t>(z.theta.size());
  z.p += 0.5 * eps * z.grad;
  z.theta += eps * (inv_mass.array() * z.p.array()).matrix();
  z.log_density = f(std::span<const double>(z.theta.data(), n), std::span<double>(z.grad.data(), n));
  if (!std::isfinite(z.log_density) || !z.grad.allFinite()) return false;
  z.p += 0.5 * eps * z.grad;
  return true;
}

Target Target::from_model(std::shared_ptr<const Model> model) {
  Target t;
  t.dim = model->dim();
  t.log_density = [model](std::span<const double> theta, std::span<double> grad) {
    return model->log_density(theta, grad);
  };
  t.names = model->params().names();
  t.constrain = [model](std::span<const double> theta) { return model->constrained(theta); };
  t.constrained_names = model->params().constrained_names();
  return t;
}

std::size_t ChainResult::n_divergent() const noexcept {
  return static_cast<std::size_t>(std::count(divergent.begin(), divergent.end(), std::uint8_t{1}));
}

std::size_t ChainDraws::n_divergent() const noexcept {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.n_divergent();
  return n;
}

std::vector<std::vector<double>> ChainDraws::series(std::size_t j) const {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    const auto col = c.constrained.col(static_cast<Eigen::Index>(j));
    out.emplace_back(col.data(), col.data() + col.size());
  }
  return out;
}

std::vector<std::vector<double>> ChainDraws::energies() const {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) out.emplace_back(c.energy.data(), c.energy.data() + c.energy.size());
  return out;
}

std::uint64_t chain_seed(std::uint64_t seed, std::size_t imputation, std::size_t chain) noexcept {
  return derive_seed(seed, {stream::fit, imputation, chain});
}

ChainResult run_chain(const Target& target, const SamplerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (target.dim < 1) fail(ErrorKind::spec, "sampling target has dimension 0");
  const auto dim = static_cast<Eigen::Index>(target.dim);
  const auto& f = target.log_density;
  Rng rng(seed);

  PhasePoint z;
  {
    std::normal_distribution<double> normal;
    bool found = false;
    for (int attempt = 0; attempt < kInitAttempts && !found; ++attempt) {
      Eigen::VectorXd theta(dim);
      for (Eigen::Index i = 0; i < dim; ++i) theta(i) = 0.1 * normal(rng);
      z = make_point(theta, Eigen::VectorXd::Zero(dim), f);
      found = std::isfinite(z.log_density);
    }
    if (!found) fail(ErrorKind::runtime, "sampler initialization failed: no finite log density in 100 attempts");
  }

  Eigen::VectorXd inv_mass = Eigen::VectorXd::Ones(dim);
  double eps = initial_step_size(z, inv_mass, f, rng, 1.0);
  DualAveraging adapt(cfg.target_accept);
  adapt.restart(eps);

  const std::size_t warmup = cfg.warmup();
  const auto ends = window_ends(warmup);
  std::size_t next_window = 0;
  const std::size_t slow_start = warmup < 20 ? warmup : static_cast<std::size_t>(0.15 * static_cast<double>(warmup));
  Eigen::VectorXd w_mean = Eigen::VectorXd::Zero(dim), w_m2 = Eigen::VectorXd::Zero(dim);
  std::size_t w_n = 0;

  ChainResult out;
  const auto kept = static_cast<Eigen::Index>(cfg.kept());
  const std::vector<std::string>& cnames = target.constrain ? target.constrained_names : target.names;
  out.unconstrained.resize(kept, dim);
  out.constrained.resize(kept, static_cast<Eigen::Index>(target.constrain ? cnames.size() : target.dim));
  out.log_density.resize(kept);
  out.energy.resize(kept);
  out.accept_stat.resize(kept);
  out.divergent.assign(static_cast<std::size_t>(kept), 0);
  out.n_leapfrog.assign(static_cast<std::size_t>(kept), 0);

  for (std::size_t it = 0; it < cfg.n_iter; ++it) {
    const bool adapting = it < warmup;
    if (it == warmup && warmup > 0) eps = adapt.final_step();
    Transition tr = transition(z, eps, max_steps(eps, cfg), inv_mass, f, rng);
    z = std::move(tr.z);
    if (adapting) {
      if (tr.divergent) ++out.warmup_divergent;
      eps = adapt.update(tr.accept);
      if (next_window < ends.size() && it >= slow_start) {
        ++w_n;
        const Eigen::VectorXd d = z.theta - w_mean;
        w_mean += d / static_cast<double>(w_n);
        w_m2 += (d.array() * (z.theta - w_mean).array()).matrix();
        if (it + 1 == ends[next_window]) {
          if (w_n >= 3) {
            const double n = static_cast<double>(w_n);
            const Eigen::VectorXd var = w_m2 / (n - 1.0);
            inv_mass = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
          }
          w_mean.setZero();
          w_m2.setZero();
          w_n = 0;
          ++next_window;
          eps = initial_step_size(z, inv_mass, f, rng, eps);
          adapt.restart(eps);
        }
      }
      continue;
    }
    const auto row = static_cast<Eigen::Index>(it - warmup);
    out.unconstrained.row(row) = z.theta.transpose();
    const std::span<const double> theta(z.theta.data(), target.dim);
    if (target.constrain) {
      const auto c = target.constrain(theta);
      out.constrained.row(row) = Eigen::Map<const Eigen::RowVectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    } else {
      out.constrained.row(row) = z.theta.transpose();
    }
    out.log_density(row) = z.log_density;
    out.energy(row) = tr.energy;
    out.accept_stat(row) = tr.accept;
    out.divergent[static_cast<std::size_t>(row)] = tr.divergent ? 1 : 0;
    out.n_leapfrog[static_cast<std::size_t>(row)] = tr.n_leapfrog;
  }
  out.step_size = eps;
  out.inv_mass = inv_mass;
  return out;
}

ChainDraws sample(const Target& target, const SamplerConfig& cfg) {
  cfg.validate();
  ChainDraws out;
  out.names = target.names.empty() ? std::vector<std::string>{} : target.names;
  if (out.names.empty())
    for (std::size_t i = 0; i < target.dim; ++i) out.names.push_back("theta[" + std::to_string(i + 1) + "]");
  out.constrained_names = target.constrain ? target.constrained_names : out.names;
  out.chains.resize(cfg.n_chains);
  parallel_for(cfg.n_chains, cfg.jobs,
               [&](std::size_t c) { out.chains[c] = run_chain(target, cfg, chain_seed(cfg.seed, 0, c)); });
  return out;
}

ChainDraws sample(const ModelSpec& spec, const ModelData& data, const SamplerConfig& cfg) {
  return sample(Target::from_model(std::make_shared<const Model>(spec, data)), cfg);
}

}  // namespace bda
