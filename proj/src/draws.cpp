#include "bda/draws.hpp"

#include "bda/error.hpp"

namespace bda {

std::optional<std::size_t> PosteriorDraws::find(std::string_view name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return j;
  return std::nullopt;
}

std::size_t PosteriorDraws::index_of(std::string_view name) const {
  if (auto j = find(name)) return *j;
  fail(ErrorKind::spec, "no parameter named '" + std::string(name) + "' in the draws");
}

std::vector<double> PosteriorDraws::column(std::string_view name) const {
  const auto j = static_cast<Eigen::Index>(index_of(name));
  std::vector<double> out(n_draws());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values(static_cast<Eigen::Index>(i), j);
  return out;
}

PosteriorDraws PosteriorDraws::for_imputation(std::size_t imputation) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < provenance.size(); ++i)
    if (provenance[i].imputation == imputation) rows.push_back(static_cast<Eigen::Index>(i));
  PosteriorDraws out;
  out.names = names;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.values.row(static_cast<Eigen::Index>(r)) = values.row(rows[r]);
    out.provenance.push_back(provenance[static_cast<std::size_t>(rows[r])]);
  }
  return out;
}

}  // namespace bda
