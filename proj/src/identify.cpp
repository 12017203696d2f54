#include "bda/identify.hpp"

#include <cmath>

#include "bda/error.hpp"

namespace bda {

HouseholderQr householder_qr(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  const Eigen::Index p = a.cols();
  if (n == 0 || p == 0) fail(ErrorKind::domain, "QR of an empty matrix");
  if (n < p) fail(ErrorKind::domain, "QR needs at least as many rows as columns");
  if (!a.allFinite()) fail(ErrorKind::domain, "QR of a matrix with non-finite entries");

  Eigen::MatrixXd r = a;
  std::vector<Eigen::VectorXd> reflectors;
  reflectors.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) {
    Eigen::VectorXd v = r.col(k).tail(n - k);
    const double norm = v.norm();
    if (norm == 0.0) {
      reflectors.emplace_back(Eigen::VectorXd::Zero(n - k));
      continue;
    }
    // Reflect onto -sign(x0) * |x| e1 to avoid cancellation.
    const double alpha = v(0) >= 0 ? -norm : norm;
    v(0) -= alpha;
    const double vnorm = v.norm();
    if (vnorm == 0.0) {
      reflectors.emplace_back(Eigen::VectorXd::Zero(n - k));
      continue;
    }
    v /= vnorm;
    auto block = r.bottomRightCorner(n - k, p - k);
    block.noalias() -= 2.0 * v * (v.transpose() * block);
    reflectors.push_back(std::move(v));
  }

  // Q = H_0 H_1 ... H_{p-1} applied to the first p columns of the identity.
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, p);
  for (Eigen::Index k = p - 1; k >= 0; --k) {
    const auto& v = reflectors[static_cast<std::size_t>(k)];
    auto block = q.bottomRows(n - k);
    block.noalias() -= 2.0 * v * (v.transpose() * block);
  }
  Eigen::MatrixXd rr = r.topRows(p).triangularView<Eigen::Upper>();
  return HouseholderQr{std::move(q), std::move(rr)};
}

std::vector<double> qr_diagonal(const DesignMatrix& m) {
  auto qr = householder_qr(m.values);
  std::vector<double> out(static_cast<std::size_t>(m.values.cols()));
  for (Eigen::Index k = 0; k < m.values.cols(); ++k) out[static_cast<std::size_t>(k)] = std::abs(qr.r(k, k));
  return out;
}

IdentifiabilityScreen flag_nonidentifiable(const Dataset& ds, std::span<const std::string> predictors,
                                           double threshold) {
  IdentifiabilityScreen screen;
  screen.predictors.assign(predictors.begin(), predictors.end());
  screen.threshold = threshold;
  if (predictors.empty()) fail(ErrorKind::spec, "no predictors to screen");
  for (const auto& name : predictors)
    if (ds.column(name).is_factor()) fail(ErrorKind::kind, "predictor '" + name + "' is not numeric");

  auto rows = ds.complete_rows(predictors);
  screen.n_complete = rows.size();
  if (rows.empty()) fail(ErrorKind::data, "no complete cases for the identifiability screen");
  if (rows.size() < predictors.size())
    fail(ErrorKind::data, "fewer complete cases than predictors in the identifiability screen");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(predictors.size());
  DesignMatrix design{screen.predictors, Eigen::MatrixXd(n, p)};
  std::vector<bool> constant(predictors.size(), false);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& col = ds.column(predictors[static_cast<std::size_t>(j)]);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = col.value(rows[static_cast<std::size_t>(i)]);
    const double mean = x.mean();
    const double sd = n > 1 ? std::sqrt((x.array() - mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
    if (!(sd > 0.0)) {
      constant[static_cast<std::size_t>(j)] = true;
      design.values.col(j).setZero();
    } else {
      design.values.col(j) = (x.array() - mean) / sd;
    }
  }

  screen.abs_diagonal = qr_diagonal(design);
  for (std::size_t j = 0; j < predictors.size(); ++j) {
    if (constant[j]) screen.abs_diagonal[j] = 0.0;
    if (screen.abs_diagonal[j] < threshold) screen.flagged.push_back(predictors[j]);
  }
  return screen;
}

}  // namespace bda
