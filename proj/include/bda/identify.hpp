#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "bda/tabular.hpp"

namespace bda {

struct DesignMatrix {
  std::vector<std::string> column_names;
  Eigen::MatrixXd values;  // complete cases, n_rows >= n_cols >= 1
};

/// Thin QR factorization A = Q R from Householder reflections, without
/// pivoting, so R's diagonal follows the column order of A.
struct HouseholderQr {
  Eigen::MatrixXd q;  // n x p, orthonormal columns
  Eigen::MatrixXd r;  // p x p, upper triangular
};

HouseholderQr householder_qr(const Eigen::MatrixXd& a);

/// |diag(R)| aligned with the columns of the matrix.
std::vector<double> qr_diagonal(const DesignMatrix& m);

struct IdentifiabilityScreen {
  std::vector<std::string> predictors;
  std::vector<double> abs_diagonal;
  std::vector<std::string> flagged;
  std::size_t n_complete = 0;
  double threshold = 0.1;
};

/// Builds a z-scored design matrix from the complete cases of `predictors` and
/// flags every column whose |R| diagonal falls below `threshold`. A column
/// with zero variance is flagged with |d| = 0.
IdentifiabilityScreen flag_nonidentifiable(const Dataset& ds, std::span<const std::string> predictors,
                                           double threshold = 0.1);

}  // namespace bda
