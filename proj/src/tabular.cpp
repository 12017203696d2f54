#include "bda/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "bda/error.hpp"

namespace bda {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return x;
}

// Splits CSV text into records of fields. Supports double-quoted fields with
// "" escapes and both LF and CRLF line endings.
std::vector<std::vector<std::string>> split_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    bool blank = record.size() == 1 && trim(record[0]).empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // dropped; CRLF handled by the following '\n'
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) fail(ErrorKind::parse, "unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  return records;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace

// ColumnSchema

ColumnSchema ColumnSchema::numeric(std::string name) {
  return ColumnSchema{std::move(name), ColumnKind::numeric, {}};
}

ColumnSchema ColumnSchema::ordered_factor(std::string name, std::vector<std::string> levels) {
  return ColumnSchema{std::move(name), ColumnKind::ordered_factor, std::move(levels)};
}

std::optional<std::size_t> ColumnSchema::level_index(std::string_view level) const {
  auto it = std::find(levels.begin(), levels.end(), level);
  if (it == levels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - levels.begin());
}

void validate_schema(const Schema& schema) {
  std::set<std::string> seen;
  for (const auto& col : schema) {
    if (col.name.empty()) fail(ErrorKind::schema, "column with empty name");
    if (!seen.insert(col.name).second) fail(ErrorKind::schema, "duplicate column name '" + col.name + "'");
    if (col.is_factor()) {
      std::set<std::string> distinct(col.levels.begin(), col.levels.end());
      if (distinct.size() != col.levels.size())
        fail(ErrorKind::schema, "factor '" + col.name + "' declares a level twice");
      if (distinct.size() < 2)
        fail(ErrorKind::schema, "factor '" + col.name + "' needs at least 2 levels");
    } else if (!col.levels.empty()) {
      fail(ErrorKind::schema, "numeric column '" + col.name + "' declares levels");
    }
  }
}

// Column

Column::Column(ColumnSchema schema, std::vector<double> values, std::vector<std::uint8_t> observed)
    : schema_(std::move(schema)), values_(std::move(values)), observed_(std::move(observed)) {
  if (values_.size() != observed_.size())
    fail(ErrorKind::schema, "column '" + schema_.name + "': value and mask lengths differ");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!observed_[i]) {
      values_[i] = kMissing;
      continue;
    }
    if (!std::isfinite(values_[i]))
      fail(ErrorKind::schema, "column '" + schema_.name + "': non-finite observed value");
    if (schema_.is_factor()) {
      double code = values_[i];
      if (code < 0 || code >= static_cast<double>(schema_.levels.size()) || code != std::floor(code))
        fail(ErrorKind::schema, "column '" + schema_.name + "': factor code out of range");
    }
  }
}

double Column::value(std::size_t row) const {
  if (!observed_.at(row))
    fail(ErrorKind::data, "read of missing cell in column '" + name() + "' row " + std::to_string(row));
  return values_[row];
}

std::size_t Column::level(std::size_t row) const {
  if (!is_factor()) fail(ErrorKind::kind, "column '" + name() + "' is not a factor");
  return static_cast<std::size_t>(value(row));
}

std::size_t Column::n_missing() const noexcept {
  return static_cast<std::size_t>(std::count(observed_.begin(), observed_.end(), std::uint8_t{0}));
}

std::vector<double> Column::observed_values() const {
  std::vector<double> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i)
    if (observed_[i]) out.push_back(values_[i]);
  return out;
}

// Dataset

Dataset::Dataset(std::vector<Column> columns) : columns_(std::move(columns)) {
  Schema s;
  for (const auto& c : columns_) s.push_back(c.schema());
  validate_schema(s);
  n_rows_ = columns_.empty() ? 0 : columns_.front().size();
  for (const auto& c : columns_)
    if (c.size() != n_rows_) fail(ErrorKind::schema, "column '" + c.name() + "' has a different length");
}

Schema Dataset::schema() const {
  Schema s;
  s.reserve(columns_.size());
  for (const auto& c : columns_) s.push_back(c.schema());
  return s;
}

std::vector<std::string> Dataset::names() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) out.push_back(c.name());
  return out;
}

std::optional<std::size_t> Dataset::find(std::string_view name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].name() == name) return j;
  return std::nullopt;
}

std::size_t Dataset::index_of(std::string_view name) const {
  auto j = find(name);
  if (!j) fail(ErrorKind::spec, "unknown column '" + std::string(name) + "'");
  return *j;
}

const Column& Dataset::column(std::string_view name) const { return columns_[index_of(name)]; }

std::size_t Dataset::total_missing() const noexcept {
  std::size_t n = 0;
  for (const auto& c : columns_) n += c.n_missing();
  return n;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  std::vector<Column> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) {
    std::vector<double> v;
    std::vector<std::uint8_t> m;
    v.reserve(rows.size());
    m.reserve(rows.size());
    for (std::size_t r : rows) {
      if (r >= n_rows_) fail(ErrorKind::spec, "row index out of range");
      v.push_back(c.raw()[r]);
      m.push_back(c.mask()[r]);
    }
    out.emplace_back(c.schema(), std::move(v), std::move(m));
  }
  return Dataset(std::move(out));
}

Dataset Dataset::select_columns(std::span<const std::string> names) const {
  std::vector<Column> out;
  for (const auto& n : names) out.push_back(column(n));
  return Dataset(std::move(out));
}

Dataset Dataset::with_column(std::size_t j, std::vector<double> values,
                             std::vector<std::uint8_t> observed) const {
  auto cols = columns_;
  cols.at(j) = Column(cols[j].schema(), std::move(values), std::move(observed));
  return Dataset(std::move(cols));
}

std::vector<std::size_t> Dataset::complete_rows(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(index_of(n));
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n_rows_; ++i) {
    bool ok = std::all_of(idx.begin(), idx.end(), [&](std::size_t j) { return columns_[j].observed(i); });
    if (ok) rows.push_back(i);
  }
  return rows;
}

// CSV

Dataset parse_csv(std::string_view text, const Schema& schema, const CsvOptions& options) {
  validate_schema(schema);
  auto records = split_records(text);
  if (records.empty()) fail(ErrorKind::schema, "CSV has no header row");
  const auto& header = records.front();

  std::vector<std::size_t> source(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](const std::string& h) { return trim(h) == schema[j].name; });
    if (it == header.end()) fail(ErrorKind::schema, "CSV header lacks column '" + schema[j].name + "'");
    source[j] = static_cast<std::size_t>(it - header.begin());
  }

  const std::size_t n = records.size() - 1;
  std::vector<std::vector<double>> values(schema.size(), std::vector<double>(n, kMissing));
  std::vector<std::vector<std::uint8_t>> mask(schema.size(), std::vector<std::uint8_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = records[i + 1];
    if (rec.size() != header.size())
      fail(ErrorKind::parse, "row " + std::to_string(i + 1) + ": expected " + std::to_string(header.size()) +
                                 " fields, found " + std::to_string(rec.size()));
    for (std::size_t j = 0; j < schema.size(); ++j) {
      std::string cell(trim(rec[source[j]]));
      if (options.na_tokens.count(cell) || cell.empty()) continue;
      if (schema[j].is_factor()) {
        auto level = schema[j].level_index(cell);
        if (!level)
          fail(ErrorKind::schema, "row " + std::to_string(i + 1) + ", column '" + schema[j].name +
                                      "': undeclared level '" + cell + "'");
        values[j][i] = static_cast<double>(*level);
      } else {
        auto x = parse_number(cell);
        if (!x || !std::isfinite(*x))
          fail(ErrorKind::parse, "row " + std::to_string(i + 1) + ", column '" + schema[j].name +
                                     "': cannot parse '" + cell + "' as a number");
        values[j][i] = *x;
      }
      mask[j][i] = 1;
    }
  }
  std::vector<Column> cols;
  for (std::size_t j = 0; j < schema.size(); ++j)
    cols.emplace_back(schema[j], std::move(values[j]), std::move(mask[j]));
  return Dataset(std::move(cols));
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::spec, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema, options);
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string format_csv(const Dataset& ds, const CsvOptions& options) {
  std::string out;
  for (std::size_t j = 0; j < ds.n_cols(); ++j) {
    if (j) out += ',';
    out += quote_if_needed(ds.column(j).name());
  }
  out += '\n';
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    for (std::size_t j = 0; j < ds.n_cols(); ++j) {
      if (j) out += ',';
      const auto& c = ds.column(j);
      if (!c.observed(i)) out += quote_if_needed(options.write_na);
      else if (c.is_factor()) out += quote_if_needed(c.schema().levels[c.level(i)]);
      else out += format_double(c.value(i));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, const CsvOptions& options) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::runtime, "cannot write '" + path.string() + "'");
  out << format_csv(ds, options);
}

// Filters

namespace {

struct OpToken {
  std::string_view text;
  CompareOp op;
};

// Longest tokens first so ">=" wins over ">".
constexpr OpToken kOps[] = {
    {" not in ", CompareOp::not_in}, {" in ", CompareOp::in}, {">=", CompareOp::ge},
    {"<=", CompareOp::le},           {"!=", CompareOp::ne},   {"==", CompareOp::eq},
    {">", CompareOp::gt},            {"<", CompareOp::lt},    {"=", CompareOp::eq},
};

std::string_view op_text(CompareOp op) {
  switch (op) {
    case CompareOp::in: return "in";
    case CompareOp::not_in: return "not in";
    case CompareOp::eq: return "==";
    case CompareOp::ne: return "!=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
  }
  return "?";
}

bool compare(double lhs, CompareOp op, double rhs) {
  switch (op) {
    case CompareOp::eq: return lhs == rhs;
    case CompareOp::ne: return lhs != rhs;
    case CompareOp::lt: return lhs < rhs;
    case CompareOp::le: return lhs <= rhs;
    case CompareOp::gt: return lhs > rhs;
    case CompareOp::ge: return lhs >= rhs;
    default: return false;
  }
}

}  // namespace

FilterClause FilterClause::parse(std::string_view text) {
  for (const auto& tok : kOps) {
    auto pos = text.find(tok.text);
    if (pos == std::string_view::npos) continue;
    FilterClause clause;
    clause.column = std::string(trim(text.substr(0, pos)));
    clause.op = tok.op;
    std::string_view rhs = trim(text.substr(pos + tok.text.size()));
    if (clause.column.empty() || rhs.empty()) fail(ErrorKind::parse, "malformed filter '" + std::string(text) + "'");
    if (tok.op == CompareOp::in || tok.op == CompareOp::not_in) {
      if (rhs.front() == '{' && rhs.back() == '}') rhs = rhs.substr(1, rhs.size() - 2);
      std::size_t start = 0;
      while (start <= rhs.size()) {
        auto comma = rhs.find(',', start);
        auto part = trim(rhs.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!part.empty()) clause.levels.emplace_back(part);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (clause.levels.empty()) fail(ErrorKind::parse, "empty level set in filter '" + std::string(text) + "'");
    } else {
      clause.operand = std::string(rhs);
    }
    return clause;
  }
  fail(ErrorKind::parse, "filter '" + std::string(text) + "' has no comparison operator");
}

std::string FilterClause::to_string() const {
  std::string out = column + " " + std::string(op_text(op)) + " ";
  if (op == CompareOp::in || op == CompareOp::not_in) {
    out += "{";
    for (std::size_t i = 0; i < levels.size(); ++i) out += (i ? "," : "") + levels[i];
    out += "}";
  } else {
    out += operand;
  }
  return out;
}

Dataset apply_filter(const Dataset& ds, const RowPredicate& predicate) {
  struct Prepared {
    std::size_t col;
    CompareOp op;
    std::set<double> members;  // in / not_in, as level codes or numbers
    double rhs = 0.0;
  };
  std::vector<Prepared> prepared;
  for (const auto& clause : predicate) {
    Prepared p{ds.index_of(clause.column), clause.op, {}, 0.0};
    const auto& schema = ds.column(p.col).schema();
    auto resolve = [&](const std::string& token) -> double {
      if (schema.is_factor()) {
        auto idx = schema.level_index(token);
        if (!idx) fail(ErrorKind::spec, "filter on '" + schema.name + "' names undeclared level '" + token + "'");
        return static_cast<double>(*idx);
      }
      auto x = parse_number(token);
      if (!x) fail(ErrorKind::parse, "filter on '" + schema.name + "': '" + token + "' is not a number");
      return *x;
    };
    if (clause.op == CompareOp::in || clause.op == CompareOp::not_in) {
      for (const auto& l : clause.levels) p.members.insert(resolve(l));
    } else {
      p.rhs = resolve(clause.operand);
    }
    prepared.push_back(std::move(p));
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    bool ok = true;
    for (const auto& p : prepared) {
      const auto& c = ds.column(p.col);
      if (!c.observed(i)) {
        ok = false;
        break;
      }
      double v = c.value(i);
      bool sat = p.op == CompareOp::in       ? p.members.count(v) > 0
                 : p.op == CompareOp::not_in ? p.members.count(v) == 0
                                             : compare(v, p.op, p.rhs);
      if (!sat) {
        ok = false;
        break;
      }
    }
    if (ok) keep.push_back(i);
  }
  return ds.select_rows(keep);
}

// Standardization

double ScalingInfo::to_z(std::string_view column, double x) const {
  auto it = columns.find(std::string(column));
  if (it == columns.end()) fail(ErrorKind::spec, "no scaling recorded for '" + std::string(column) + "'");
  return (x - it->second.mean) / it->second.sd;
}

double ScalingInfo::from_z(std::string_view column, double z) const {
  auto it = columns.find(std::string(column));
  if (it == columns.end()) fail(ErrorKind::spec, "no scaling recorded for '" + std::string(column) + "'");
  return z * it->second.sd + it->second.mean;
}

namespace {

Dataset transform_columns(const Dataset& ds, const ScalingInfo& scaling, bool forward) {
  Dataset out = ds;
  for (const auto& [name, scale] : scaling.columns) {
    auto j = ds.find(name);
    if (!j) continue;
    const auto& c = ds.column(*j);
    if (c.is_factor()) fail(ErrorKind::kind, "cannot scale factor column '" + name + "'");
    std::vector<double> v(c.raw().begin(), c.raw().end());
    for (auto& x : v) x = forward ? (x - scale.mean) / scale.sd : x * scale.sd + scale.mean;
    out = out.with_column(*j, std::move(v), std::vector<std::uint8_t>(c.mask().begin(), c.mask().end()));
  }
  return out;
}

}  // namespace

std::pair<Dataset, ScalingInfo> standardize(const Dataset& ds, std::span<const std::string> columns) {
  ScalingInfo info;
  for (const auto& name : columns) {
    const auto& c = ds.column(name);
    if (c.is_factor()) fail(ErrorKind::kind, "cannot standardize factor column '" + name + "'");
    auto obs = c.observed_values();
    if (obs.size() < 2) fail(ErrorKind::degenerate, "column '" + name + "' has fewer than 2 observed values");
    double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
    double ss = 0.0;
    for (double x : obs) ss += (x - mean) * (x - mean);
    double sd = std::sqrt(ss / static_cast<double>(obs.size() - 1));
    if (!(sd > 0.0)) fail(ErrorKind::degenerate, "column '" + name + "' has zero standard deviation");
    info.columns[name] = ColumnScale{mean, sd};
  }
  return {transform_columns(ds, info, true), info};
}

Dataset apply_scaling(const Dataset& ds, const ScalingInfo& scaling) {
  return transform_columns(ds, scaling, true);
}

Dataset unstandardize(const Dataset& ds, const ScalingInfo& scaling) {
  return transform_columns(ds, scaling, false);
}

}  // namespace bda
