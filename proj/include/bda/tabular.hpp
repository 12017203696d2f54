#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bda {

enum class ColumnKind { numeric, ordered_factor };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> levels;  // ordered, ordered_factor only

  static ColumnSchema numeric(std::string name);
  static ColumnSchema ordered_factor(std::string name, std::vector<std::string> levels);

  bool is_factor() const noexcept { return kind == ColumnKind::ordered_factor; }
  /// Index of `level` in the declared order, or nullopt.
  std::optional<std::size_t> level_index(std::string_view level) const;

  friend bool operator==(const ColumnSchema&, const ColumnSchema&) = default;
};

using Schema = std::vector<ColumnSchema>;

/// Throws ErrorKind::schema on duplicate names or factors with < 2 distinct levels.
void validate_schema(const Schema& schema);

/// One typed column with its observed-mask. Factor cells store the 0-based
/// level index as a double.
class Column {
 public:
  Column(ColumnSchema schema, std::vector<double> values, std::vector<std::uint8_t> observed);

  const ColumnSchema& schema() const noexcept { return schema_; }
  const std::string& name() const noexcept { return schema_.name; }
  bool is_factor() const noexcept { return schema_.is_factor(); }
  std::size_t size() const noexcept { return values_.size(); }

  bool observed(std::size_t row) const { return observed_[row] != 0; }
  /// Throws ErrorKind::data when the cell is missing.
  double value(std::size_t row) const;
  std::size_t level(std::size_t row) const;

  std::span<const std::uint8_t> mask() const noexcept { return observed_; }
  /// Raw storage; missing cells hold NaN.
  std::span<const double> raw() const noexcept { return values_; }
  std::size_t n_missing() const noexcept;
  std::size_t n_observed() const noexcept { return size() - n_missing(); }
  std::vector<double> observed_values() const;

 private:
  ColumnSchema schema_;
  std::vector<double> values_;
  std::vector<std::uint8_t> observed_;
};

/// Immutable columnar table with an explicit missingness mask.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Column> columns);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return columns_.size(); }
  Schema schema() const;
  std::vector<std::string> names() const;

  const Column& column(std::size_t j) const { return columns_.at(j); }
  const Column& column(std::string_view name) const;
  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws ErrorKind::spec for unknown names.
  std::size_t index_of(std::string_view name) const;
  std::span<const Column> columns() const noexcept { return columns_; }

  bool observed(std::size_t row, std::size_t col) const { return columns_[col].observed(row); }
  std::size_t total_missing() const noexcept;
  bool complete() const noexcept { return total_missing() == 0; }

  Dataset select_rows(std::span<const std::size_t> rows) const;
  Dataset select_columns(std::span<const std::string> names) const;
  Dataset with_column(std::size_t j, std::vector<double> values,
                      std::vector<std::uint8_t> observed) const;
  /// Rows where every named column is observed.
  std::vector<std::size_t> complete_rows(std::span<const std::string> names) const;

 private:
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

struct CsvOptions {
  std::set<std::string> na_tokens{"", "NA"};
  std::string write_na = "NA";
};

/// Parses CSV text. Header names are matched to the schema in any order;
/// file columns not named in the schema are ignored. Output column order
/// follows the schema.
Dataset parse_csv(std::string_view text, const Schema& schema, const CsvOptions& options = {});
Dataset load_csv(const std::filesystem::path& path, const Schema& schema,
                 const CsvOptions& options = {});
std::string format_csv(const Dataset& ds, const CsvOptions& options = {});
void write_csv(const Dataset& ds, const std::filesystem::path& path, const CsvOptions& options = {});

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

// Row predicates.

enum class CompareOp { in, not_in, eq, ne, lt, le, gt, ge };

/// One clause of a row filter. Factor columns compare by declared level order;
/// `in`/`not_in` take a level list. A missing cell never satisfies a clause.
struct FilterClause {
  std::string column;
  CompareOp op = CompareOp::eq;
  std::vector<std::string> levels;  // in / not_in on factors
  std::string operand;              // textual right-hand side for comparisons

  /// Accepts "DQR in {A,B}", "DQR not in {D}", "Version >= 4.0", "DQR <= B".
  static FilterClause parse(std::string_view text);
  std::string to_string() const;
};

/// Conjunction of clauses.
using RowPredicate = std::vector<FilterClause>;

Dataset apply_filter(const Dataset& ds, const RowPredicate& predicate);

// Standardization.

struct ColumnScale {
  double mean = 0.0;
  double sd = 1.0;
};

struct ScalingInfo {
  std::map<std::string, ColumnScale> columns;

  double to_z(std::string_view column, double x) const;
  double from_z(std::string_view column, double z) const;
};

/// z-scores the named numeric columns using the mean and the sample sd (n-1)
/// of their observed cells. Missing cells stay missing.
std::pair<Dataset, ScalingInfo> standardize(const Dataset& ds, std::span<const std::string> columns);

/// Applies previously computed scaling to the same-named columns of `ds`.
Dataset apply_scaling(const Dataset& ds, const ScalingInfo& scaling);

/// Inverse of standardize for the columns present in `scaling`.
Dataset unstandardize(const Dataset& ds, const ScalingInfo& scaling);

}  // namespace bda
