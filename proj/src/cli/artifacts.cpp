#include "artifacts.hpp"

#include <algorithm>
#include <limits>

#include <charconv>
#include <fstream>
#include <sstream>

#include "bda/error.hpp"
#include "bda/tabular.hpp"

namespace bda::cli {

namespace fs = std::filesystem;

namespace {

ordered_json module_versions() {
  ordered_json m;
  for (const char* name : {"tabular", "missingness", "causal", "identify", "impute", "model", "sampler",
                           "diagnostics", "posterior", "cli"})
    m[name] = kVersion;
  return m;
}

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::runtime, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) fail(ErrorKind::runtime, "failed writing '" + path.string() + "'");
}

// Splits one CSV line on commas; the files read here never quote.
std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T number(std::string_view s, std::size_t line) {
  T x{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(ErrorKind::parse, "bad number '" + std::string(s) + "' on line " + std::to_string(line));
  return x;
}

double real(std::string_view s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return number<double>(s, line);
}

template <typename Fn>
void for_each_row(const std::string& text, std::string_view header, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) fail(ErrorKind::parse, "unexpected header, wanted '" + std::string(header) + "'");
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    fn(split(line), n);
  }
}

DrawProvenance provenance(const std::vector<std::string_view>& f, std::size_t line) {
  const auto imp = number<std::size_t>(f[0], line);
  const auto chain = number<std::size_t>(f[1], line);
  const auto iter = number<std::size_t>(f[2], line);
  if (imp < 1 || chain < 1 || iter < 1) fail(ErrorKind::parse, "indices are 1-based on line " + std::to_string(line));
  return {imp - 1, chain - 1, iter - 1};
}

}  // namespace

ArtifactWriter::ArtifactWriter(const RunConfig& cfg, std::string subcommand)
    : cfg_(cfg), subcommand_(std::move(subcommand)) {}

void ArtifactWriter::text(const std::string& name, const std::string& content) const {
  write_file(path(name), content);
  ordered_json meta;
  meta["artifact"] = name;
  meta["subcommand"] = subcommand_;
  meta["config_hash"] = cfg_.config_hash;
  meta["seed"] = cfg_.seed;
  meta["modules"] = module_versions();
  write_file(path(name + ".meta.json"), meta.dump(2) + "\n");
  written_.push_back(name);
}

void ArtifactWriter::json(const std::string& name, const ordered_json& value) const {
  text(name, value.dump(2) + "\n");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::runtime, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ordered_json read_json(const fs::path& path) {
  try {
    return ordered_json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::parse, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void require_artifact(const RunConfig& cfg, const std::string& name, const std::string& producer) {
  if (!fs::exists(cfg.output / name))
    fail(ErrorKind::dependency, "'" + (cfg.output / name).string() + "' not found; run '" + producer + "' first");
}

std::string format_draws(const std::vector<ChainDraws>& runs) {
  std::string out = "imputation,chain,iteration,parameter,value\n";
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (std::size_t c = 0; c < runs[r].chains.size(); ++c) {
      const auto& m = runs[r].chains[c].constrained;
      const std::string prefix = std::to_string(r + 1) + "," + std::to_string(c + 1) + ",";
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const std::string row = prefix + std::to_string(i + 1) + ",";
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          out += row;
          out += runs[r].constrained_names[static_cast<std::size_t>(j)];
          out += ',';
          out += format_double(m(i, j));
          out += '\n';
        }
      }
    }
  return out;
}

PosteriorDraws parse_draws(const std::string& text) {
  PosteriorDraws out;
  std::vector<std::vector<double>> rows;
  std::size_t col = 0;
  bool names_fixed = false;
  for_each_row(text, "imputation,chain,iteration,parameter,value", [&](const auto& f, std::size_t line) {
    if (f.size() != 5) fail(ErrorKind::parse, "draws line " + std::to_string(line) + " needs 5 fields");
    const auto prov = provenance(f, line);
    if (out.provenance.empty() || !(out.provenance.back() == prov)) {
      if (!out.provenance.empty()) {
        if (!names_fixed) names_fixed = true;
        if (col != out.names.size()) fail(ErrorKind::parse, "draw on line " + std::to_string(line - 1) + " is incomplete");
      }
      out.provenance.push_back(prov);
      rows.emplace_back();
      col = 0;
    }
    const std::string name(f[3]);
    if (!names_fixed) {
      out.names.push_back(name);
    } else if (col >= out.names.size() || out.names[col] != name) {
      fail(ErrorKind::parse, "unexpected parameter '" + name + "' on line " + std::to_string(line));
    }
    rows.back().push_back(real(f[4], line));
    ++col;
  });
  if (!rows.empty() && rows.back().size() != out.names.size()) fail(ErrorKind::parse, "last draw is incomplete");
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return out;
}

std::string format_sampler_stats(const std::vector<ChainDraws>& runs) {
  std::string out = "imputation,chain,iteration,lp,energy,accept_stat,n_leapfrog,divergent\n";
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (std::size_t c = 0; c < runs[r].chains.size(); ++c) {
      const auto& ch = runs[r].chains[c];
      for (std::size_t i = 0; i < ch.n_kept(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        out += std::to_string(r + 1) + "," + std::to_string(c + 1) + "," + std::to_string(i + 1) + "," +
               format_double(ch.log_density(k)) + "," + format_double(ch.energy(k)) + "," +
               format_double(ch.accept_stat(k)) + "," + std::to_string(ch.n_leapfrog[i]) + "," +
               std::to_string(ch.divergent[i]) + "\n";
      }
    }
  return out;
}

SamplerStats parse_sampler_stats(const std::string& text) {
  SamplerStats s;
  for_each_row(text, "imputation,chain,iteration,lp,energy,accept_stat,n_leapfrog,divergent",
               [&](const auto& f, std::size_t line) {
                 if (f.size() != 8) fail(ErrorKind::parse, "stats line " + std::to_string(line) + " needs 8 fields");
                 s.provenance.push_back(provenance(f, line));
                 s.log_density.push_back(real(f[3], line));
                 s.energy.push_back(real(f[4], line));
                 s.accept_stat.push_back(real(f[5], line));
                 s.n_leapfrog.push_back(number<std::size_t>(f[6], line));
                 s.divergent.push_back(static_cast<std::uint8_t>(number<unsigned>(f[7], line)));
               });
  return s;
}

std::vector<ChainDraws> regroup(const PosteriorDraws& draws, const SamplerStats& stats) {
  if (stats.provenance != draws.provenance) fail(ErrorKind::data, "draws and sampler statistics do not line up");
  std::size_t n_imp = 0;
  for (const auto& p : draws.provenance) n_imp = std::max(n_imp, p.imputation + 1);
  std::vector<ChainDraws> runs(n_imp);
  std::vector<std::vector<std::vector<Eigen::Index>>> rows(n_imp);
  for (std::size_t i = 0; i < draws.provenance.size(); ++i) {
    const auto& p = draws.provenance[i];
    if (rows[p.imputation].size() <= p.chain) rows[p.imputation].resize(p.chain + 1);
    rows[p.imputation][p.chain].push_back(static_cast<Eigen::Index>(i));
  }
  for (std::size_t r = 0; r < n_imp; ++r) {
    runs[r].names = draws.names;
    runs[r].constrained_names = draws.names;
    for (const auto& idx : rows[r]) {
      ChainResult c;
      const auto n = static_cast<Eigen::Index>(idx.size());
      c.constrained.resize(n, draws.values.cols());
      c.log_density.resize(n);
      c.energy.resize(n);
      c.accept_stat.resize(n);
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto i = idx[static_cast<std::size_t>(k)];
        const auto iu = static_cast<std::size_t>(i);
        c.constrained.row(k) = draws.values.row(i);
        c.log_density(k) = stats.log_density[iu];
        c.energy(k) = stats.energy[iu];
        c.accept_stat(k) = stats.accept_stat[iu];
        c.divergent.push_back(stats.divergent[iu]);
        c.n_leapfrog.push_back(stats.n_leapfrog[iu]);
      }
      c.unconstrained = c.constrained;
      runs[r].chains.push_back(std::move(c));
    }
  }
  return runs;
}

}  // namespace bda::cli
