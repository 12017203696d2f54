#include "bda/impute.hpp"

#include <algorithm>
#include <map>
#include <cmath>
#include <numeric>

#include "bda/error.hpp"
#include "bda/missingness.hpp"
#include "bda/parallel.hpp"

namespace bda {

void ImputationConfig::validate() const {
  if (m < 1) fail(ErrorKind::config, "imputation count m must be >= 1");
  if (donors < 1) fail(ErrorKind::config, "donor count k must be >= 1");
  if (max_sweeps < 1) fail(ErrorKind::config, "max_sweeps must be >= 1");
}

namespace {

double draw_observed(const std::vector<double>& donors, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, donors.size() - 1);
  return donors[pick(rng)];
}

PmmDraw marginal_draw(std::span<const double> target, std::span<const std::uint8_t> observed, Rng& rng) {
  std::vector<double> donors;
  for (std::size_t i = 0; i < target.size(); ++i)
    if (observed[i]) donors.push_back(target[i]);
  PmmDraw out;
  out.fallback = true;
  for (std::size_t i = 0; i < target.size(); ++i)
    if (!observed[i]) out.imputed.push_back(draw_observed(donors, rng));
  return out;
}

}  // namespace

PmmDraw pmm_step(std::span<const double> target, std::span<const std::uint8_t> observed,
                 const Eigen::MatrixXd& predictors, std::size_t k, Rng& rng) {
  const std::size_t n = target.size();
  if (observed.size() != n || static_cast<std::size_t>(predictors.rows()) != n)
    fail(ErrorKind::spec, "pmm_step: target, mask and predictors differ in length");
  std::vector<std::size_t> obs_rows, mis_rows;
  for (std::size_t i = 0; i < n; ++i) (observed[i] ? obs_rows : mis_rows).push_back(i);
  if (k < 1) fail(ErrorKind::config, "pmm_step: k must be >= 1");
  if (obs_rows.size() < k) fail(ErrorKind::config, "pmm_step: fewer observed rows than donors");
  if (mis_rows.empty()) return {};

  // Intercept plus the non-constant predictors, each z-scored over all rows.
  std::vector<Eigen::VectorXd> cols{Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n))};
  for (Eigen::Index j = 0; j < predictors.cols(); ++j) {
    Eigen::VectorXd c = predictors.col(j);
    const double mean = c.mean();
    const double sd = std::sqrt((c.array() - mean).square().sum() / std::max<double>(1.0, static_cast<double>(n) - 1));
    if (sd > 0.0 && std::isfinite(sd)) cols.push_back((c.array() - mean) / sd);
  }
  Eigen::MatrixXd x_all(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) x_all.col(static_cast<Eigen::Index>(j)) = cols[j];

  const auto n_obs = static_cast<Eigen::Index>(obs_rows.size());
  Eigen::MatrixXd x_obs(n_obs, x_all.cols());
  Eigen::VectorXd y_obs(n_obs);
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    x_obs.row(i) = x_all.row(static_cast<Eigen::Index>(obs_rows[static_cast<std::size_t>(i)]));
    y_obs(i) = target[obs_rows[static_cast<std::size_t>(i)]];
  }

  // Drop predictors that are collinear on the observed rows.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted(x_obs);
  pivoted.setThreshold(1e-10);
  const Eigen::Index rank = pivoted.rank();
  if (rank < 1 || n_obs <= rank) return marginal_draw(target, observed, rng);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < rank; ++j) keep.push_back(pivoted.colsPermutation().indices()(j));
  std::sort(keep.begin(), keep.end());
  Eigen::MatrixXd xs_obs(n_obs, rank), xs_all(x_all.rows(), rank);
  for (Eigen::Index j = 0; j < rank; ++j) {
    xs_obs.col(j) = x_obs.col(keep[static_cast<std::size_t>(j)]);
    xs_all.col(j) = x_all.col(keep[static_cast<std::size_t>(j)]);
  }

  Eigen::MatrixXd gram = xs_obs.transpose() * xs_obs;
  Eigen::LLT<Eigen::MatrixXd> gram_chol(gram);
  if (gram_chol.info() != Eigen::Success) return marginal_draw(target, observed, rng);
  Eigen::VectorXd beta = gram_chol.solve(xs_obs.transpose() * y_obs);
  const double rss = (y_obs - xs_obs * beta).squaredNorm();
  const double sigma2 = rss / static_cast<double>(n_obs - rank);
  if (!beta.allFinite() || !std::isfinite(sigma2)) return marginal_draw(target, observed, rng);

  // beta* ~ N(beta, sigma2 (X'X)^-1): with X'X = L L', beta* = beta + sigma L^-T z.
  Eigen::VectorXd z(rank);
  std::normal_distribution<double> normal;
  for (Eigen::Index j = 0; j < rank; ++j) z(j) = normal(rng);
  Eigen::VectorXd beta_star = beta + std::sqrt(sigma2) * gram_chol.matrixU().solve(z);

  Eigen::VectorXd yhat_obs = xs_obs * beta;
  std::vector<std::size_t> order(obs_rows.size());
  PmmDraw out;
  out.imputed.reserve(mis_rows.size());
  std::vector<double> dist(obs_rows.size());
  for (std::size_t r : mis_rows) {
    const double pred = xs_all.row(static_cast<Eigen::Index>(r)).dot(beta_star);
    for (std::size_t d = 0; d < obs_rows.size(); ++d) dist[d] = std::abs(yhat_obs(static_cast<Eigen::Index>(d)) - pred);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto closer = [&](std::size_t a, std::size_t b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; };
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(), closer);
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), closer);
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    out.imputed.push_back(target[obs_rows[order[pick(rng)]]]);
  }
  return out;
}

PmmDraw ordered_factor_step(std::span<const double> codes, std::span<const std::uint8_t> observed,
                            const Eigen::MatrixXd& predictors, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < codes.size(); ++i)
    if (observed[i] && (codes[i] < 0 || codes[i] != std::floor(codes[i])))
      fail(ErrorKind::kind, "ordered_factor_step: codes must be non-negative integers");
  return pmm_step(codes, observed, predictors, k, rng);
}

namespace {

struct SingleImputation {
  Dataset completed;
  std::vector<std::vector<double>> trace;
  std::vector<std::string> warnings;
};

// Working-scale copy of a column: log1p for logged columns, raw otherwise.
std::vector<double> working(const Column& col, bool logged) {
  std::vector<double> v(col.raw().begin(), col.raw().end());
  if (logged)
    for (double& x : v) x = std::log1p(x);
  return v;
}

SingleImputation impute_once(const Dataset& ds, const std::vector<std::size_t>& visit,
                             const std::vector<bool>& logged, const ImputationConfig& cfg, Rng rng) {
  const auto n = static_cast<Eigen::Index>(ds.n_rows());
  const auto p = static_cast<Eigen::Index>(ds.n_cols());
  Eigen::MatrixXd current(n, p);
  std::vector<std::vector<std::size_t>> missing_rows(static_cast<std::size_t>(p));
  std::vector<std::vector<double>> targets(static_cast<std::size_t>(p));
  // Working value -> original value of each observed cell of logged columns.
  std::vector<std::map<double, double>> originals(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const auto& col = ds.column(ju);
    targets[ju] = working(col, logged[ju]);
    std::vector<double> donors;
    for (Eigen::Index i = 0; i < n; ++i)
      if (col.observed(static_cast<std::size_t>(i))) {
        donors.push_back(targets[ju][static_cast<std::size_t>(i)]);
        if (logged[ju]) originals[ju][donors.back()] = col.raw()[static_cast<std::size_t>(i)];
      }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (col.observed(static_cast<std::size_t>(i))) {
        current(i, j) = targets[ju][static_cast<std::size_t>(i)];
      } else {
        current(i, j) = draw_observed(donors, rng);
        missing_rows[static_cast<std::size_t>(j)].push_back(static_cast<std::size_t>(i));
      }
    }
  }

  SingleImputation out;
  out.trace.assign(visit.size(), {});
  for (auto& t : out.trace) t.reserve(cfg.max_sweeps);
  Eigen::MatrixXd others(n, std::max<Eigen::Index>(p - 1, 0));
  for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    for (std::size_t v = 0; v < visit.size(); ++v) {
      const auto j = static_cast<Eigen::Index>(visit[v]);
      const auto& col = ds.column(visit[v]);
      for (Eigen::Index c = 0, o = 0; c < p; ++c)
        if (c != j) others.col(o++) = current.col(c);
      const auto& target = targets[visit[v]];
      auto draw = col.is_factor() ? ordered_factor_step(target, col.mask(), others, cfg.donors, rng)
                                  : pmm_step(target, col.mask(), others, cfg.donors, rng);
      if (draw.fallback)
        out.warnings.push_back("sweep " + std::to_string(sweep + 1) + ", variable '" + col.name() +
                               "': degenerate regression, imputed from observed marginals");
      const auto& rows = missing_rows[visit[v]];
      double sum = 0.0;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        current(static_cast<Eigen::Index>(rows[r]), j) = draw.imputed[r];
        sum += logged[visit[v]] ? originals[visit[v]].at(draw.imputed[r]) : draw.imputed[r];
      }
      out.trace[v].push_back(sum / static_cast<double>(rows.size()));
    }
  }

  std::vector<Column> cols;
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> values(current.col(j).data(), current.col(j).data() + n);
    const auto& col = ds.column(static_cast<std::size_t>(j));
    // Observed cells are copied from the input, not from the working matrix.
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& v = values[static_cast<std::size_t>(i)];
      if (col.observed(static_cast<std::size_t>(i))) v = col.raw()[static_cast<std::size_t>(i)];
      else if (logged[static_cast<std::size_t>(j)]) v = originals[static_cast<std::size_t>(j)].at(v);
    }
    cols.emplace_back(col.schema(), std::move(values), std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1));
  }
  out.completed = Dataset(std::move(cols));
  return out;
}

}  // namespace

ImputationResult impute_mice(const Dataset& ds, const ImputationConfig& cfg) {
  cfg.validate();
  ImputationResult result;
  if (ds.complete()) {
    result.completed.assign(cfg.m, ds);
    result.trace.assign(cfg.m, {});
    return result;
  }
  if (!classify_missingness(ds).connected)
    fail(ErrorKind::data, "missingness pattern is not connected; chained equations cannot link the variables");

  std::vector<bool> logged(ds.n_cols(), false);
  for (const auto& name : cfg.log_columns) {
    const auto j = ds.index_of(name);
    const auto& col = ds.column(j);
    if (col.is_factor()) fail(ErrorKind::kind, "log-scale imputation needs a numeric column, '" + name + "' is a factor");
    for (double x : col.observed_values())
      if (!(x > -1.0)) fail(ErrorKind::domain, "log-scale imputation needs values > -1 in '" + name + "'");
    logged[j] = true;
  }

  std::vector<std::size_t> visit;
  for (std::size_t j = 0; j < ds.n_cols(); ++j) {
    const auto& col = ds.column(j);
    if (col.n_missing() == 0) continue;
    if (col.n_observed() < cfg.donors)
      fail(ErrorKind::config, "variable '" + col.name() + "' has " + std::to_string(col.n_observed()) +
                                  " observed values, fewer than the " + std::to_string(cfg.donors) + " donors requested");
    visit.push_back(j);
  }
  if (cfg.visit_order == VisitOrder::ascending_missing)
    std::stable_sort(visit.begin(), visit.end(),
                     [&](std::size_t a, std::size_t b) { return ds.column(a).n_missing() < ds.column(b).n_missing(); });
  for (auto j : visit) result.trace_variables.push_back(ds.column(j).name());

  std::vector<SingleImputation> runs(cfg.m);
  parallel_for(cfg.m, cfg.jobs, [&](std::size_t i) {
    runs[i] = impute_once(ds, visit, logged, cfg, Rng(derive_seed(cfg.seed, {stream::impute, i})));
  });
  for (std::size_t i = 0; i < cfg.m; ++i) {
    result.completed.push_back(std::move(runs[i].completed));
    result.trace.push_back(std::move(runs[i].trace));
    for (auto& w : runs[i].warnings) result.warnings.push_back("imputation " + std::to_string(i + 1) + ": " + w);
  }
  return result;
}

}  // namespace bda
