#include <algorithm>
#include <set>
#include <fstream>
#include <sstream>

#include "bda/cli.hpp"
#include "bda/error.hpp"
#include "json.hpp"

namespace bda::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json& section(const json& root, const char* key) {
  static const json empty = json::object();
  if (!root.contains(key)) return empty;
  const json& s = root.at(key);
  if (!s.is_object()) fail(ErrorKind::config, std::string("config section '") + key + "' must be an object");
  return s;
}

template <typename T>
T get(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::config, std::string("config key '") + key + "' has the wrong type");
  }
}

std::vector<std::string> strings(const json& obj, const char* key) {
  return get<std::vector<std::string>>(obj, key, {});
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

void require_column(const Schema& schema, const std::string& name, const char* where) {
  for (const auto& c : schema)
    if (c.name == name) return;
  fail(ErrorKind::config, std::string(where) + " references unknown column '" + name + "'");
}

Schema parse_schema(const json& data) {
  if (!data.contains("columns") || !data.at("columns").is_array())
    fail(ErrorKind::config, "data.columns must list the column schema");
  Schema schema;
  for (const auto& c : data.at("columns")) {
    const auto name = get<std::string>(c, "name", "");
    if (name.empty()) fail(ErrorKind::config, "every column needs a name");
    const auto kind = get<std::string>(c, "kind", "numeric");
    if (kind == "numeric") {
      schema.push_back(ColumnSchema::numeric(name));
    } else if (kind == "ordered_factor") {
      schema.push_back(ColumnSchema::ordered_factor(name, strings(c, "levels")));
    } else {
      fail(ErrorKind::config, "column '" + name + "' has unknown kind '" + kind + "'");
    }
  }
  validate_schema(schema);
  return schema;
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

RunConfig load_config(const fs::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot open config file '" + path.string() + "'");
  json root;
  try {
    root = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!root.is_object()) fail(ErrorKind::config, "config root must be an object");

  RunConfig cfg;
  cfg.config_path = path;
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();

  if (overrides.seed) {
    cfg.seed = *overrides.seed;
  } else if (root.contains("seed") && root.at("seed").is_number_integer()) {
    cfg.seed = root.at("seed").get<std::uint64_t>();
  } else {
    fail(ErrorKind::config, "config must set an integer 'seed'");
  }
  root["seed"] = cfg.seed;

  // Without a data section only prior-check can run; column checks are skipped.
  const bool has_data = root.contains("data");
  const json& data = section(root, "data");
  const auto data_path = get<std::string>(data, "path", "");
  if (has_data) {
    if (data_path.empty()) fail(ErrorKind::config, "data.path is required");
    cfg.data_path = resolve(base, data_path);
    cfg.schema = parse_schema(data);
  }
  auto need_column = [&](const std::string& name, const char* where) {
    if (has_data) require_column(cfg.schema, name, where);
  };
  if (data.contains("na_tokens")) {
    const auto tokens = strings(data, "na_tokens");
    cfg.csv.na_tokens = std::set<std::string>(tokens.begin(), tokens.end());
  }
  cfg.csv.write_na = get<std::string>(data, "write_na", "NA");
  for (const auto& f : strings(data, "filters")) {
    auto clause = FilterClause::parse(f);
    need_column(clause.column, "data.filters");
    cfg.filters.push_back(std::move(clause));
  }

  const json& dag = section(root, "dag");
  cfg.dag_edges = strings(dag, "edges");
  cfg.dag_sources = strings(dag, "sources");
  if (dag.contains("queries")) {
    for (const auto& q : dag.at("queries")) {
      DSeparationQuery query{get<std::string>(q, "x", ""), get<std::string>(q, "y", ""), strings(q, "given")};
      if (query.x.empty() || query.y.empty()) fail(ErrorKind::config, "every dag query needs 'x' and 'y'");
      cfg.dag_queries.push_back(std::move(query));
    }
  }

  const json& model = section(root, "model");
  if (!model.empty()) {
    cfg.has_model = true;
    cfg.model.family = parse_model_family(get<std::string>(model, "family", "gamma_poisson_mlm"));
    cfg.model.outcome = get<std::string>(model, "outcome", "");
    cfg.model.predictors = strings(model, "predictors");
    const auto group = get<std::string>(model, "group", "");
    if (!group.empty()) cfg.model.group = group;
    if (model.contains("fixed_sigma")) cfg.model.fixed_sigma = get<double>(model, "fixed_sigma", 1.0);
    if (model.contains("priors")) {
      if (!model.at("priors").is_object()) fail(ErrorKind::config, "model.priors must map roles to priors");
      for (const auto& [role, text] : model.at("priors").items()) {
        if (!text.is_string()) fail(ErrorKind::config, "prior for '" + role + "' must be a string");
        cfg.model.priors[role] = Prior::parse(text.get<std::string>());
      }
    }
    cfg.standardize = get<bool>(model, "standardize", true);
    cfg.model.validate();
    need_column(cfg.model.outcome, "model.outcome");
    for (const auto& p : cfg.model.predictors) need_column(p, "model.predictors");
    if (cfg.model.group) need_column(*cfg.model.group, "model.group");
  }

  const json& identify = section(root, "identify");
  cfg.identify_predictors = strings(identify, "predictors");
  if (cfg.identify_predictors.empty()) cfg.identify_predictors = cfg.model.predictors;
  cfg.identify_threshold = get<double>(identify, "threshold", 0.1);
  for (const auto& p : cfg.identify_predictors) need_column(p, "identify.predictors");

  const json& impute = section(root, "impute");
  cfg.impute.m = overrides.m.value_or(get<std::size_t>(impute, "m", 5));
  cfg.impute.max_sweeps = get<std::size_t>(impute, "max_sweeps", 10);
  cfg.impute.donors = get<std::size_t>(impute, "donors", 5);
  const auto order = get<std::string>(impute, "visit_order", "ascending_missing");
  if (order == "ascending_missing") cfg.impute.visit_order = VisitOrder::ascending_missing;
  else if (order == "declared") cfg.impute.visit_order = VisitOrder::declared;
  else fail(ErrorKind::config, "impute.visit_order must be ascending_missing or declared");
  cfg.impute.seed = cfg.seed;
  cfg.impute.validate();
  cfg.impute_columns = strings(impute, "columns");
  if (cfg.impute_columns.empty() && cfg.has_model) {
    cfg.impute_columns.push_back(cfg.model.outcome);
    cfg.impute_columns.insert(cfg.impute_columns.end(), cfg.model.predictors.begin(), cfg.model.predictors.end());
    if (cfg.model.group) cfg.impute_columns.push_back(*cfg.model.group);
  }
  for (const auto& c : cfg.impute_columns) need_column(c, "impute.columns");
  if (impute.contains("log_columns")) {
    for (const auto& c : strings(impute, "log_columns")) {
      need_column(c, "impute.log_columns");
      cfg.impute.log_columns.push_back(c);
    }
  }
  if (cfg.has_model) {
    auto needs = cfg.model.predictors;
    needs.push_back(cfg.model.outcome);
    if (cfg.model.group) needs.push_back(*cfg.model.group);
    for (const auto& n : needs)
      if (std::find(cfg.impute_columns.begin(), cfg.impute_columns.end(), n) == cfg.impute_columns.end())
        fail(ErrorKind::config, "impute.columns must include model variable '" + n + "'");
  }

  const json& prior_check = section(root, "prior_check");
  cfg.prior_check.n_sims = get<std::size_t>(prior_check, "n_sims", 10000);
  cfg.prior_check.thresholds = get<std::vector<double>>(prior_check, "thresholds", {});
  cfg.prior_check.include_group_effect = get<bool>(prior_check, "include_group_effect", false);
  if (prior_check.contains("points")) {
    for (const auto& pt : prior_check.at("points")) {
      if (!pt.is_object()) fail(ErrorKind::config, "prior_check.points entries must map predictors to values");
      std::map<std::string, double> point;
      for (const auto& [name, v] : pt.items()) {
        if (std::find(cfg.model.predictors.begin(), cfg.model.predictors.end(), name) == cfg.model.predictors.end())
          fail(ErrorKind::config, "prior_check point names unknown predictor '" + name + "'");
        if (!v.is_number()) fail(ErrorKind::config, "prior_check point values must be numbers");
        point[name] = v.get<double>();
      }
      cfg.prior_check.points.push_back(std::move(point));
    }
  }
  if (cfg.prior_check.n_sims < 1) fail(ErrorKind::config, "prior_check.n_sims must be >= 1");

  const json& sampler = section(root, "sampler");
  cfg.sampler.n_chains = overrides.chains.value_or(get<std::size_t>(sampler, "chains", 4));
  if (overrides.iter) {
    cfg.sampler.n_iter = *overrides.iter;
    cfg.sampler.n_warmup = *overrides.iter / 2;
  } else {
    cfg.sampler.n_iter = get<std::size_t>(sampler, "iter", 2000);
    if (sampler.contains("warmup")) cfg.sampler.n_warmup = get<std::size_t>(sampler, "warmup", 0);
  }
  cfg.sampler.target_accept = get<double>(sampler, "target_accept", 0.8);
  cfg.sampler.max_leapfrog = get<std::size_t>(sampler, "max_leapfrog", 1024);
  cfg.sampler.integration_time = get<double>(sampler, "integration_time", 1.0);
  cfg.sampler.seed = cfg.seed;
  cfg.sampler.validate();

  const json& report = section(root, "report");
  cfg.probabilities = strings(report, "probabilities");
  const json& ppc = section(report, "ppc");
  cfg.ppc.enabled = get<bool>(ppc, "enabled", true);
  cfg.ppc.n_rep = get<std::size_t>(ppc, "n_rep", 500);
  cfg.ppc.n_overlays = get<std::size_t>(ppc, "n_overlays", 50);
  cfg.ppc.log_scale = get<bool>(ppc, "log_scale", cfg.model.family == ModelFamily::gamma_poisson_mlm);
  cfg.ppc.grid_points = get<std::size_t>(ppc, "grid_points", 512);
  if (cfg.ppc.n_rep < 1) fail(ErrorKind::config, "report.ppc.n_rep must be >= 1");

  cfg.output = overrides.out ? *overrides.out : resolve(base, get<std::string>(root, "output", "out"));
  cfg.jobs = overrides.jobs.value_or(get<std::size_t>(root, "jobs", 1));
  if (cfg.jobs < 1) fail(ErrorKind::config, "jobs must be >= 1");
  cfg.impute.jobs = cfg.jobs;
  cfg.sampler.jobs = cfg.jobs;
  cfg.strict = overrides.strict || get<bool>(root, "strict", false);

  // Effective settings: the file as read with overrides applied, minus keys
  // that do not change results.
  json effective = root;
  effective.erase("output");
  effective.erase("jobs");
  effective.erase("strict");
  if (has_data) effective["data"]["path"] = data_path;
  if (overrides.m) effective["impute"]["m"] = *overrides.m;
  if (overrides.chains) effective["sampler"]["chains"] = *overrides.chains;
  if (overrides.iter) {
    effective["sampler"]["iter"] = *overrides.iter;
    effective["sampler"]["warmup"] = *overrides.iter / 2;
  }
  cfg.effective_json = effective.dump();
  cfg.config_hash = fnv1a_hex(cfg.effective_json);
  return cfg;
}

}  // namespace bda::cli
