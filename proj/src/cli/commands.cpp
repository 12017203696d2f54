#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "artifacts.hpp"
#include "bda/causal.hpp"
#include "bda/cli.hpp"
#include "bda/diagnostics.hpp"
#include "bda/error.hpp"
#include "bda/identify.hpp"
#include "bda/missingness.hpp"
#include "bda/parallel.hpp"
#include "bda/posterior.hpp"

namespace bda::cli {

namespace fs = std::filesystem;

namespace {

ordered_json nullable(std::optional<double> x) {
  if (!x || !std::isfinite(*x)) return nullptr;
  return *x;
}

ordered_json interval(const Interval& i) { return ordered_json::array({i.lo, i.hi}); }

std::string fixed(double x, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << x;
  return os.str();
}

Dataset load_data(const RunConfig& cfg) {
  if (cfg.data_path.empty()) fail(ErrorKind::config, "this subcommand needs a 'data' section");
  auto ds = load_csv(cfg.data_path, cfg.schema, cfg.csv);
  return cfg.filters.empty() ? ds : apply_filter(ds, cfg.filters);
}

const RunConfig& need_model(const RunConfig& cfg, const char* sub) {
  if (!cfg.has_model) fail(ErrorKind::config, std::string("'") + sub + "' needs a 'model' section");
  return cfg;
}

Schema impute_schema(const RunConfig& cfg) {
  Schema out;
  for (const auto& name : cfg.impute_columns)
    for (const auto& c : cfg.schema)
      if (c.name == name) out.push_back(c);
  return out;
}

// Predictor scaling from the observed cells of the filtered input data; the
// same transform applies to every imputed dataset and to posterior checks.
ScalingInfo model_scaling(const RunConfig& cfg, const Dataset& ds) {
  if (!cfg.standardize || cfg.model.predictors.empty()) return {};
  return standardize(ds, cfg.model.predictors).second;
}

ordered_json scaling_json(const ScalingInfo& s) {
  ordered_json out = ordered_json::object();
  for (const auto& [name, cs] : s.columns) out[name] = {{"mean", cs.mean}, {"sd", cs.sd}};
  return out;
}

// inspect

ordered_json column_stats(const Column& c) {
  ordered_json j;
  j["name"] = c.name();
  j["kind"] = c.is_factor() ? "ordered_factor" : "numeric";
  j["n_observed"] = c.n_observed();
  j["n_missing"] = c.n_missing();
  if (c.is_factor()) {
    ordered_json counts = ordered_json::object();
    std::vector<std::size_t> n(c.schema().levels.size(), 0);
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c.observed(i)) ++n[c.level(i)];
    for (std::size_t l = 0; l < n.size(); ++l) counts[c.schema().levels[l]] = n[l];
    j["levels"] = counts;
    return j;
  }
  auto v = c.observed_values();
  j["n_zero"] = static_cast<std::size_t>(std::count(v.begin(), v.end(), 0.0));
  if (v.empty()) {
    for (const char* k : {"mean", "median", "min", "max", "variance"}) j[k] = nullptr;
    return j;
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  j["mean"] = mean;
  j["median"] = quantile(v, 0.5);
  j["min"] = *std::min_element(v.begin(), v.end());
  j["max"] = *std::max_element(v.begin(), v.end());
  j["variance"] = v.size() > 1 ? ordered_json(ss / static_cast<double>(v.size() - 1)) : ordered_json(nullptr);
  return j;
}

int cmd_inspect(const RunConfig& cfg, std::ostream& out) {
  const auto ds = load_data(cfg);
  ArtifactWriter w(cfg, "inspect");
  ordered_json report;
  report["n_rows"] = ds.n_rows();
  report["n_columns"] = ds.n_cols();
  report["columns"] = ordered_json::array();
  for (const auto& c : ds.columns()) report["columns"].push_back(column_stats(c));

  const auto pattern = pattern_table(ds);
  std::string csv = "pattern,frequency,n_missing";
  for (const auto& v : pattern.variables) csv += "," + v;
  csv += "\n";
  for (std::size_t k = 0; k < pattern.patterns.size(); ++k) {
    const auto& p = pattern.patterns[k];
    csv += std::to_string(k + 1) + "," + std::to_string(p.frequency) + "," + std::to_string(p.n_missing);
    for (bool o : p.observed) csv += o ? ",1" : ",0";
    csv += "\n";
  }
  csv += "total,,";
  csv += std::to_string(pattern.total_missing);
  for (auto n : pattern.per_variable_missing) csv += "," + std::to_string(n);
  csv += "\n";
  w.text("pattern_table.csv", csv);

  const auto fx = flux(ds);
  std::string fcsv = "variable,proportion_missing,influx,outflux\n";
  for (std::size_t j = 0; j < fx.variables.size(); ++j)
    fcsv += fx.variables[j] + "," + format_double(fx.proportion_missing[j]) + "," + format_double(fx.influx[j]) +
            "," + format_double(fx.outflux[j]) + "\n";
  w.text("flux.csv", fcsv);

  const auto cls = classify_missingness(ds);
  report["missingness"] = {{"total_missing", pattern.total_missing},
                           {"n_patterns", pattern.patterns.size()},
                           {"multivariate", cls.multivariate},
                           {"connected", cls.connected},
                           {"monotone", cls.monotone}};
  const std::size_t complete = ds.complete_rows(ds.names()).size();
  const double gamma = ds.n_rows() ? 1.0 - static_cast<double>(complete) / static_cast<double>(ds.n_rows()) : 0.0;
  report["missingness"]["fraction_incomplete_rows"] = gamma;
  if (gamma > 0.0) {
    report["missingness"]["recommended_m"] = recommended_m(gamma);
    report["missingness"]["relative_efficiency_at_m"] = relative_efficiency(gamma, cfg.impute.m);
  }
  w.json("inspect.json", report);

  out << "rows: " << ds.n_rows() << ", columns: " << ds.n_cols() << ", missing cells: " << pattern.total_missing
      << ", patterns: " << pattern.patterns.size() << "\n";
  for (const auto& c : report["columns"]) {
    out << "  " << c["name"].get<std::string>() << ": " << c["n_missing"].get<std::size_t>() << " missing";
    if (c.contains("mean") && !c["mean"].is_null())
      out << ", mean " << fixed(c["mean"].get<double>(), 3) << ", median " << fixed(c["median"].get<double>(), 3);
    out << "\n";
  }
  out << "missingness: " << (cls.connected ? "connected" : "disconnected") << ", "
      << (cls.monotone ? "monotone" : "non-monotone") << "\n";
  return 0;
}

// dag-check

int cmd_dag_check(const RunConfig& cfg, std::ostream& out) {
  if (cfg.dag_edges.empty()) fail(ErrorKind::config, "'dag-check' needs dag.edges");
  const auto dag = Dag::from_edges(cfg.dag_edges);
  ArtifactWriter w(cfg, "dag-check");
  ordered_json report;
  report["nodes"] = dag.nodes();
  ordered_json edges = ordered_json::array();
  for (const auto& [a, b] : dag.edges()) edges.push_back(a + "->" + b);
  report["edges"] = edges;

  std::optional<std::string> outcome;
  if (cfg.has_model && dag.contains(cfg.model.outcome)) outcome = cfg.model.outcome;
  std::set<std::string> sources(cfg.dag_sources.begin(), cfg.dag_sources.end());
  if (sources.empty()) {
    auto roots = dag.roots();
    sources.insert(roots.begin(), roots.end());
  }
  for (const auto& s : sources)
    if (!dag.contains(s)) fail(ErrorKind::spec, "dag.sources names unknown node '" + s + "'");
  report["sources"] = sources;
  std::vector<std::string> warnings;
  if (outcome) {
    const auto med = mediators(dag, sources, *outcome);
    report["outcome"] = *outcome;
    report["mediators"] = med;
    ordered_json flagged = ordered_json::array();
    for (const auto& p : cfg.model.predictors)
      if (med.count(p)) {
        flagged.push_back(p);
        warnings.push_back("predictor '" + p + "' is a mediator between the sources and '" + *outcome +
                           "'; conditioning on it blocks part of their effect");
      }
    report["mediator_predictors"] = flagged;
  }
  ordered_json queries = ordered_json::array();
  for (const auto& q : cfg.dag_queries) {
    const std::set<std::string> given(q.given.begin(), q.given.end());
    const bool sep = d_separated(dag, q.x, q.y, given);
    queries.push_back({{"x", q.x}, {"y", q.y}, {"given", q.given}, {"d_separated", sep}});
    out << q.x << " _||_ " << q.y;
    if (!q.given.empty()) {
      out << " |";
      for (const auto& g : q.given) out << " " << g;
    }
    out << ": " << (sep ? "d-separated" : "d-connected") << "\n";
  }
  report["queries"] = queries;
  report["warnings"] = warnings;
  w.json("dag_check.json", report);
  if (report.contains("mediators")) {
    out << "mediators of " << *outcome << ":";
    for (const auto& m : report["mediators"]) out << " " << m.get<std::string>();
    out << "\n";
  }
  for (const auto& s : warnings) out << "warning: " << s << "\n";
  return 0;
}

// identify

int cmd_identify(const RunConfig& cfg, std::ostream& out) {
  if (cfg.identify_predictors.empty()) fail(ErrorKind::config, "'identify' needs identify.predictors or model.predictors");
  const auto ds = load_data(cfg);
  const auto screen = flag_nonidentifiable(ds, cfg.identify_predictors, cfg.identify_threshold);
  ArtifactWriter w(cfg, "identify");
  ordered_json report;
  report["threshold"] = screen.threshold;
  report["column_order"] = "declaration";
  report["standardized"] = true;
  report["n_complete"] = screen.n_complete;
  ordered_json preds = ordered_json::array();
  for (std::size_t j = 0; j < screen.predictors.size(); ++j) {
    const bool flag = std::find(screen.flagged.begin(), screen.flagged.end(), screen.predictors[j]) != screen.flagged.end();
    preds.push_back({{"name", screen.predictors[j]}, {"abs_r_diagonal", screen.abs_diagonal[j]}, {"flagged", flag}});
    out << "  " << screen.predictors[j] << ": |d| = " << fixed(screen.abs_diagonal[j]) << (flag ? "  FLAGGED" : "")
        << "\n";
  }
  report["predictors"] = preds;
  report["flagged"] = screen.flagged;
  w.json("identify.json", report);
  out << screen.flagged.size() << " of " << screen.predictors.size() << " predictors flagged (|d| < "
      << screen.threshold << ", " << screen.n_complete << " complete rows)\n";
  return 0;
}

// impute

int cmd_impute(const RunConfig& cfg, std::ostream& out) {
  if (cfg.impute_columns.empty()) fail(ErrorKind::config, "'impute' needs impute.columns or a model section");
  const auto ds = load_data(cfg).select_columns(cfg.impute_columns);
  const auto result = impute_mice(ds, cfg.impute);
  ArtifactWriter w(cfg, "impute");
  ordered_json manifest;
  manifest["m"] = result.completed.size();
  manifest["columns"] = cfg.impute_columns;
  manifest["n_rows"] = ds.n_rows();
  manifest["files"] = ordered_json::array();
  for (std::size_t i = 0; i < result.completed.size(); ++i) {
    const std::string name = "imputed_" + std::to_string(i + 1) + ".csv";
    CsvOptions opts;
    opts.write_na = cfg.csv.write_na;
    w.text(name, format_csv(result.completed[i], opts));
    manifest["files"].push_back(name);
  }
  std::string trace = "imputation,sweep,variable,mean\n";
  for (std::size_t i = 0; i < result.trace.size(); ++i)
    for (std::size_t v = 0; v < result.trace[i].size(); ++v)
      for (std::size_t s = 0; s < result.trace[i][v].size(); ++s)
        trace += std::to_string(i + 1) + "," + std::to_string(s + 1) + "," + result.trace_variables[v] + "," +
                 format_double(result.trace[i][v][s]) + "\n";
  w.text("impute_trace.csv", trace);
  manifest["incomplete_variables"] = result.trace_variables;
  manifest["warnings"] = result.warnings;
  w.json("impute.json", manifest);
  out << "wrote " << result.completed.size() << " completed datasets (" << ds.total_missing()
      << " missing cells imputed in each)\n";
  for (const auto& s : result.warnings) out << "warning: " << s << "\n";
  return 0;
}

// prior-check

int cmd_prior_check(const RunConfig& cfg, std::ostream& out) {
  need_model(cfg, "prior-check");
  const auto& spec = cfg.model;
  auto points = cfg.prior_check.points;
  if (points.empty()) points.emplace_back();
  Eigen::MatrixXd grid = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(points.size()),
                                               static_cast<Eigen::Index>(spec.predictors.size()));
  for (std::size_t g = 0; g < points.size(); ++g)
    for (std::size_t j = 0; j < spec.predictors.size(); ++j)
      if (auto it = points[g].find(spec.predictors[j]); it != points[g].end())
        grid(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(j)) = it->second;

  Rng rng = make_stream(cfg.seed, {stream::prior});
  PriorPredictiveOptions opts;
  opts.include_group_effect = cfg.prior_check.include_group_effect;
  const auto pp = prior_predictive(spec, grid, cfg.prior_check.n_sims, rng, opts);

  ArtifactWriter w(cfg, "prior-check");
  std::string csv = "point,sim,mean,outcome\n";
  for (Eigen::Index g = 0; g < pp.mean.rows(); ++g)
    for (Eigen::Index s = 0; s < pp.mean.cols(); ++s)
      csv += std::to_string(g + 1) + "," + std::to_string(s + 1) + "," + format_double(pp.mean(g, s)) + "," +
             format_double(pp.outcome(g, s)) + "\n";
  w.text("prior_pred.csv", csv);

  auto summary = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return ordered_json{{"median", quantile_sorted(v, 0.5)},
                        {"q05", quantile_sorted(v, 0.05)},
                        {"q95", quantile_sorted(v, 0.95)}};
  };
  ordered_json report;
  report["family"] = std::string(to_string(spec.family));
  report["n_sims"] = cfg.prior_check.n_sims;
  report["include_group_effect"] = opts.include_group_effect;
  ordered_json priors = ordered_json::object();
  priors["alpha"] = spec.prior_for("alpha").to_string();
  for (const auto& p : spec.predictors) priors["beta[" + p + "]"] = spec.prior_for("beta[" + p + "]").to_string();
  if (spec.family == ModelFamily::gamma_poisson_mlm) {
    if (spec.group) priors["sigma"] = spec.prior_for("sigma").to_string();
    priors["phi"] = spec.prior_for("phi").to_string();
  } else if (!spec.fixed_sigma) {
    priors["sigma"] = spec.prior_for("sigma").to_string();
  }
  report["priors"] = priors;
  report["points"] = ordered_json::array();
  for (Eigen::Index g = 0; g < pp.mean.rows(); ++g) {
    std::vector<double> mean(static_cast<std::size_t>(pp.mean.cols()));
    std::vector<double> y(mean.size());
    for (Eigen::Index s = 0; s < pp.mean.cols(); ++s) {
      mean[static_cast<std::size_t>(s)] = pp.mean(g, s);
      y[static_cast<std::size_t>(s)] = pp.outcome(g, s);
    }
    ordered_json pt;
    ordered_json at = ordered_json::object();
    for (std::size_t j = 0; j < spec.predictors.size(); ++j)
      at[spec.predictors[j]] = grid(g, static_cast<Eigen::Index>(j));
    pt["at"] = at;
    pt["mean"] = summary(mean);
    pt["outcome"] = summary(y);
    ordered_json th = ordered_json::array();
    out << "point " << g + 1 << ": median of mean " << fixed(pt["mean"]["median"].get<double>(), 2);
    for (double t : cfg.prior_check.thresholds) {
      const auto n = static_cast<double>(mean.size());
      const double pm = static_cast<double>(std::count_if(mean.begin(), mean.end(), [t](double v) { return v > t; })) / n;
      const double py = static_cast<double>(std::count_if(y.begin(), y.end(), [t](double v) { return v > t; })) / n;
      th.push_back({{"threshold", t}, {"p_mean_above", pm}, {"p_outcome_above", py}});
      out << ", P(mean > " << format_double(t) << ") = " << fixed(pm);
    }
    out << "\n";
    pt["thresholds"] = th;
    report["points"].push_back(pt);
  }
  w.json("prior_check.json", report);
  return 0;
}

// fit

std::vector<Dataset> load_imputations(const RunConfig& cfg) {
  require_artifact(cfg, "impute.json", "impute");
  const auto manifest = read_json(cfg.output / "impute.json");
  const auto schema = impute_schema(cfg);
  std::vector<Dataset> out;
  for (const auto& f : manifest.at("files")) {
    const auto name = f.get<std::string>();
    require_artifact(cfg, name, "impute");
    auto ds = load_csv(cfg.output / name, schema, cfg.csv);
    if (!ds.complete()) fail(ErrorKind::data, "'" + name + "' still has missing cells");
    out.push_back(std::move(ds));
  }
  if (out.empty()) fail(ErrorKind::dependency, "impute manifest lists no datasets; rerun 'impute'");
  return out;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  need_model(cfg, "fit");
  const auto imputed = load_imputations(cfg);
  const auto scaling = model_scaling(cfg, load_data(cfg));

  std::vector<Target> targets;
  for (const auto& ds : imputed) {
    auto data = ModelData::from_dataset(cfg.model, apply_scaling(ds, scaling));
    targets.push_back(Target::from_model(std::make_shared<const Model>(cfg.model, std::move(data))));
  }
  const auto& sc = cfg.sampler;
  const std::size_t n_chains = sc.n_chains;
  std::vector<ChainDraws> runs(targets.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    runs[i].names = targets[i].names;
    runs[i].constrained_names = targets[i].constrained_names;
    runs[i].chains.resize(n_chains);
  }
  parallel_for(targets.size() * n_chains, cfg.jobs, [&](std::size_t task) {
    const std::size_t i = task / n_chains, c = task % n_chains;
    runs[i].chains[c] = run_chain(targets[i], sc, chain_seed(cfg.seed, i, c));
  });

  ArtifactWriter w(cfg, "fit");
  w.text("draws.csv", format_draws(runs));
  w.text("sampler_stats.csv", format_sampler_stats(runs));
  ordered_json meta;
  meta["family"] = std::string(to_string(cfg.model.family));
  meta["n_imputations"] = runs.size();
  meta["n_chains"] = n_chains;
  meta["n_iter"] = sc.n_iter;
  meta["n_warmup"] = sc.warmup();
  meta["target_accept"] = sc.target_accept;
  meta["integration_time"] = sc.integration_time;
  meta["max_leapfrog"] = sc.max_leapfrog;
  meta["scaling"] = scaling_json(scaling);
  meta["chains"] = ordered_json::array();
  std::size_t divergent = 0;
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (std::size_t c = 0; c < n_chains; ++c) {
      const auto& ch = runs[i].chains[c];
      ordered_json mass = ordered_json::object();
      for (std::size_t j = 0; j < runs[i].names.size(); ++j)
        mass[runs[i].names[j]] = ch.inv_mass(static_cast<Eigen::Index>(j));
      meta["chains"].push_back({{"imputation", i + 1},
                                {"chain", c + 1},
                                {"step_size", ch.step_size},
                                {"inv_mass", mass},
                                {"divergences", ch.n_divergent()},
                                {"warmup_divergences", ch.warmup_divergent},
                                {"mean_accept_stat", ch.accept_stat.mean()}});
      divergent += ch.n_divergent();
    }
  meta["divergences"] = divergent;
  w.json("sampler.json", meta);
  out << "sampled " << runs.size() << " imputation(s) x " << n_chains << " chain(s) x " << sc.kept()
      << " kept draws = " << runs.size() * n_chains * sc.kept() << " pooled draws, " << divergent
      << " divergent\n";
  return 0;
}

// diagnose / report

struct FitArtifacts {
  PosteriorDraws draws;
  std::vector<ChainDraws> runs;
};

FitArtifacts load_fit(const RunConfig& cfg) {
  require_artifact(cfg, "draws.csv", "fit");
  require_artifact(cfg, "sampler_stats.csv", "fit");
  FitArtifacts f;
  f.draws = parse_draws(read_text(cfg.output / "draws.csv"));
  f.runs = regroup(f.draws, parse_sampler_stats(read_text(cfg.output / "sampler_stats.csv")));
  return f;
}

ordered_json diagnostics_json(const DiagnosticsReport& r, std::size_t imputation) {
  ordered_json j;
  j["imputation"] = imputation + 1;
  j["n_draws"] = r.n_draws;
  j["max_rhat"] = nullable(r.max_rhat);
  j["min_ess_ratio"] = nullable(r.min_ess_ratio);
  j["divergences"] = r.n_divergent;
  j["ebfmi"] = r.ebfmi;
  j["thresholds_met"] = r.thresholds_met;
  j["parameters"] = ordered_json::array();
  for (const auto& p : r.parameters)
    j["parameters"].push_back(
        {{"name", p.name}, {"rhat", nullable(p.rhat)}, {"ess", nullable(p.ess)}, {"ess_ratio", nullable(p.ess_ratio)}});
  j["warnings"] = r.warnings;
  return j;
}

struct DiagnosticsSummary {
  ordered_json json;
  bool thresholds_met = true;
  std::vector<std::string> warnings;
};

DiagnosticsSummary summarize_diagnostics(const std::vector<DiagnosticsReport>& reports) {
  DiagnosticsSummary s;
  std::optional<double> max_rhat, min_ratio;
  std::size_t divergent = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (r.max_rhat) max_rhat = std::max(max_rhat.value_or(*r.max_rhat), *r.max_rhat);
    if (r.min_ess_ratio) min_ratio = std::min(min_ratio.value_or(*r.min_ess_ratio), *r.min_ess_ratio);
    divergent += r.n_divergent;
    s.thresholds_met = s.thresholds_met && r.thresholds_met;
    for (const auto& w : r.warnings) s.warnings.push_back("imputation " + std::to_string(i + 1) + ": " + w);
  }
  const DiagnosticThresholds t;
  s.json = {{"max_rhat", nullable(max_rhat)},
            {"min_ess_ratio", nullable(min_ratio)},
            {"divergences", divergent},
            {"rhat_threshold", t.max_rhat},
            {"ess_ratio_threshold", t.min_ess_ratio},
            {"ebfmi_threshold", t.min_ebfmi},
            {"thresholds_met", s.thresholds_met},
            {"n_warnings", s.warnings.size()}};
  return s;
}

int cmd_diagnose(const RunConfig& cfg, std::ostream& out) {
  const auto fit = load_fit(cfg);
  std::vector<DiagnosticsReport> reports;
  for (const auto& run : fit.runs) reports.push_back(diagnose(run));
  const auto summary = summarize_diagnostics(reports);

  ArtifactWriter w(cfg, "diagnose");
  ordered_json report;
  report["summary"] = summary.json;
  report["imputations"] = ordered_json::array();
  std::string ranks = "imputation,parameter,chain,bin,count\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    report["imputations"].push_back(diagnostics_json(reports[i], i));
    for (const auto& p : reports[i].parameters)
      for (std::size_t c = 0; c < p.rank_counts.size(); ++c)
        for (std::size_t b = 0; b < p.rank_counts[c].size(); ++b)
          ranks += std::to_string(i + 1) + "," + p.name + "," + std::to_string(c + 1) + "," + std::to_string(b + 1) +
                   "," + std::to_string(p.rank_counts[c][b]) + "\n";
  }
  report["warnings"] = summary.warnings;
  w.json("diagnostics.json", report);
  w.text("rank_hist.csv", ranks);

  out << "max R-hat " << (summary.json["max_rhat"].is_null() ? std::string("n/a") : fixed(summary.json["max_rhat"].get<double>()))
      << ", min ESS ratio "
      << (summary.json["min_ess_ratio"].is_null() ? std::string("n/a") : fixed(summary.json["min_ess_ratio"].get<double>()))
      << ", divergences " << summary.json["divergences"].get<std::size_t>() << "\n";
  for (const auto& s : summary.warnings) out << "warning: " << s << "\n";
  if (cfg.strict && !summary.thresholds_met) return 3;
  return 0;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  need_model(cfg, "report");
  const auto fit = load_fit(cfg);
  const auto& draws = fit.draws;
  ArtifactWriter w(cfg, "report");
  ordered_json report;
  report["n_draws"] = draws.n_draws();
  report["n_imputations"] = fit.runs.size();

  ordered_json params = ordered_json::array();
  ordered_json significant = ordered_json::array();
  for (const auto& s : summarize(draws)) {
    params.push_back({{"name", s.name},
                      {"mean", s.mean},
                      {"median", s.median},
                      {"sd", s.sd},
                      {"hpdi50", interval(s.hpdi50)},
                      {"hpdi95", interval(s.hpdi95)},
                      {"hpdi95_excludes_zero", s.excludes_zero}});
    if (s.name.starts_with("beta[") && s.excludes_zero) significant.push_back(s.name);
    out << "  " << s.name << ": median " << fixed(s.median) << ", 95% HPDI [" << fixed(s.hpdi95.lo) << ", "
        << fixed(s.hpdi95.hi) << "]" << (s.name.starts_with("beta[") && s.excludes_zero ? " *" : "") << "\n";
  }
  report["parameters"] = params;
  report["significant"] = significant;

  ordered_json probs = ordered_json::array();
  for (const auto& e : cfg.probabilities) {
    const double p = prob_statement(draws, e);
    probs.push_back({{"expression", e}, {"probability", p}});
    out << "  P(" << e << ") = " << fixed(p) << "\n";
  }
  report["probabilities"] = probs;

  std::vector<DiagnosticsReport> reports;
  for (const auto& run : fit.runs) reports.push_back(diagnose(run));
  const auto diag = summarize_diagnostics(reports);
  report["diagnostics"] = diag.json;
  report["warnings"] = diag.warnings;
  for (const auto& s : diag.warnings) out << "warning: " << s << "\n";

  if (cfg.ppc.enabled) {
    const auto ds = load_data(cfg);
    auto vars = cfg.model.predictors;
    vars.push_back(cfg.model.outcome);
    if (cfg.model.group) vars.push_back(*cfg.model.group);
    const auto rows = ds.complete_rows(vars);
    ordered_json ppc;
    if (rows.size() < 2) {
      ppc["skipped"] = "fewer than 2 complete rows";
    } else {
      const auto scaled = apply_scaling(ds.select_rows(rows), model_scaling(cfg, ds));
      const auto data = ModelData::from_dataset(cfg.model, scaled);
      Rng rng = make_stream(cfg.seed, {stream::ppc});
      const auto y_rep = posterior_predictive(cfg.model, data, draws, cfg.ppc.n_rep, rng);
      const std::span<const double> y(data.y.data(), data.n_rows());
      const auto intervals = ppc_intervals(y, y_rep);
      std::string csv = "row,observed,median,lo50,hi50,lo90,hi90\n";
      std::size_t in50 = 0, in90 = 0;
      for (std::size_t i = 0; i < intervals.rows.size(); ++i) {
        const auto& r = intervals.rows[i];
        csv += std::to_string(rows[i] + 1) + "," + format_double(r.observed) + "," + format_double(r.median) + "," +
               format_double(r.intervals[0].lo) + "," + format_double(r.intervals[0].hi) + "," +
               format_double(r.intervals[1].lo) + "," + format_double(r.intervals[1].hi) + "\n";
        in50 += r.observed >= r.intervals[0].lo && r.observed <= r.intervals[0].hi;
        in90 += r.observed >= r.intervals[1].lo && r.observed <= r.intervals[1].hi;
      }
      w.text("ppc_intervals.csv", csv);
      const auto density = ppc_density(y, y_rep, cfg.ppc.n_overlays, cfg.ppc.log_scale, cfg.ppc.grid_points);
      std::string dcsv = "curve,x,density\n";
      for (std::size_t g = 0; g < density.grid.size(); ++g)
        dcsv += "observed," + format_double(density.grid[g]) + "," + format_double(density.observed[g]) + "\n";
      for (std::size_t r = 0; r < density.replicates.size(); ++r)
        for (std::size_t g = 0; g < density.grid.size(); ++g)
          dcsv += "rep_" + std::to_string(r + 1) + "," + format_double(density.grid[g]) + "," +
                  format_double(density.replicates[r][g]) + "\n";
      w.text("ppc_density.csv", dcsv);
      const double n = static_cast<double>(intervals.rows.size());
      ppc["n_observations"] = intervals.rows.size();
      ppc["n_rep"] = cfg.ppc.n_rep;
      ppc["coverage50"] = static_cast<double>(in50) / n;
      ppc["coverage90"] = static_cast<double>(in90) / n;
      ppc["log_scale"] = cfg.ppc.log_scale;
      ppc["bandwidth"] = density.observed_bandwidth;
      out << "  posterior predictive coverage: " << fixed(100.0 * in50 / n, 1) << "% in 50% intervals, "
          << fixed(100.0 * in90 / n, 1) << "% in 90% intervals\n";
    }
    report["ppc"] = ppc;
  }
  w.json("report.json", report);
  if (cfg.strict && !diag.thresholds_met) return 3;
  return 0;
}

}  // namespace

int run(const std::string& subcommand, const fs::path& config, const Overrides& overrides, std::ostream& out,
        std::ostream& err) {
  try {
    const auto cfg = load_config(config, overrides);
    if (subcommand == "inspect") return cmd_inspect(cfg, out);
    if (subcommand == "dag-check") return cmd_dag_check(cfg, out);
    if (subcommand == "identify") return cmd_identify(cfg, out);
    if (subcommand == "impute") return cmd_impute(cfg, out);
    if (subcommand == "prior-check") return cmd_prior_check(cfg, out);
    if (subcommand == "fit") return cmd_fit(cfg, out);
    if (subcommand == "diagnose") return cmd_diagnose(cfg, out);
    if (subcommand == "report") return cmd_report(cfg, out);
    fail(ErrorKind::config, "unknown subcommand '" + subcommand + "'");
  } catch (const Error& e) {
    err << "error[" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return e.is_validation() ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error[runtime]: " << e.what() << "\n";
    return 2;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Bayesian count-regression workbench with multiple imputation"};
  app.require_subcommand(1);
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t jobs = 0, m = 0, chains = 0, iter = 0;
  bool strict = false;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"inspect", "descriptive statistics, missingness pattern table and flux"},
      {"dag-check", "mediator and d-separation report for the causal graph"},
      {"identify", "QR screening for non-identifiable predictors"},
      {"impute", "multiple imputation by chained equations"},
      {"prior-check", "prior predictive simulation"},
      {"fit", "HMC on every imputed dataset, pooled draws"},
      {"diagnose", "R-hat, ESS, rank histograms and E-BFMI"},
      {"report", "posterior summaries, probability statements and predictive checks"}};
  std::vector<CLI::App*> subs;
  std::vector<CLI::Option*> seed_opts, jobs_opts, m_opts, chain_opts, iter_opts, out_opts;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config,-c", config, "JSON config file")->required();
    out_opts.push_back(sub->add_option("--out,-o", out_dir, "output directory (overrides config)"));
    seed_opts.push_back(sub->add_option("--seed", seed, "global seed (overrides config)"));
    jobs_opts.push_back(sub->add_option("--jobs,-j", jobs, "worker threads")->check(CLI::PositiveNumber));
    m_opts.push_back(sub->add_option("--m", m, "number of imputations")->check(CLI::PositiveNumber));
    chain_opts.push_back(sub->add_option("--chains", chains, "chains per imputed dataset")->check(CLI::PositiveNumber));
    iter_opts.push_back(sub->add_option("--iter", iter, "iterations per chain; warmup is half")->check(CLI::PositiveNumber));
    sub->add_flag("--strict", strict, "exit 3 when R-hat or ESS thresholds are breached");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  Overrides ov;
  std::string chosen;
  for (std::size_t k = 0; k < subs.size(); ++k) {
    if (!subs[k]->parsed()) continue;
    chosen = commands[k].first;
    if (out_opts[k]->count()) ov.out = fs::path(out_dir);
    if (seed_opts[k]->count()) ov.seed = seed;
    if (jobs_opts[k]->count()) ov.jobs = jobs;
    if (m_opts[k]->count()) ov.m = m;
    if (chain_opts[k]->count()) ov.chains = chains;
    if (iter_opts[k]->count()) ov.iter = iter;
  }
  ov.strict = strict;
  return run(chosen, config, ov, std::cout, std::cerr);
}

}  // namespace bda::cli
