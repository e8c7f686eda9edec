#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ssvb/csv.hpp"
#include "ssvb/diagnostics.hpp"
#include "ssvb/json_io.hpp"

namespace ssvb {

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace detail

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

// ---- fit --------------------------------------------------------------------

/// Fits X.csv / y.csv under the merged configuration and returns the result
/// document (also written to out_path when nonempty).
inline json fit_command(const std::string& x_path, const std::string& y_path,
                        const json& config, bool header = false,
                        const std::string& out_path = "") {
  const FitOptions opts = fit_options_from_json(config);
  Dataset data;
  data.X = read_csv_matrix(x_path, header);
  data.y = read_csv_vector(y_path, header);
  data.validate();

  const FitResult res = fit(data, opts.config);
  const Summary summary =
      make_summary(res.state, opts.threshold, opts.ci_level);

  json out;
  out["schema_version"] = kSchemaVersion;
  out["gamma"] = to_json(res.state.gamma);
  out["mu"] = to_json(res.state.mu);
  out["sigma"] = to_json(res.state.sigma);
  out["posterior_mean"] = to_json(summary.posterior_mean);
  json sel = json::array();
  for (Index j : summary.selected) sel.push_back(j);
  out["selected"] = sel;  // 0-based column indices
  json ivs = json::array();
  for (const auto& iv : summary.intervals) ivs.push_back({iv[0], iv[1]});
  out["intervals"] = ivs;
  out["objective_trace"] = res.objective_trace;
  out["iterations"] = res.iterations;
  out["converged"] = res.converged;
  out["wall_time_seconds"] = res.wall_time_seconds;
  out["optimizer_warnings"] = res.optimizer_warnings;
  out["config_echo"] =
      fit_config_to_json(opts.config, opts.threshold, opts.ci_level);
  if (!out_path.empty()) detail::write_text_file(out_path, out.dump(2) + "\n");
  return out;
}

// ---- simulate ----------------------------------------------------------------

inline json metrics_row_to_json(const MetricsRow& r) {
  return json{{"method", r.method},
              {"n_reps", r.n_reps},
              {"tpr_mean", r.tpr.mean},       {"tpr_sd", r.tpr.sd},
              {"fdr_mean", r.fdr.mean},       {"fdr_sd", r.fdr.sd},
              {"l2_mean", r.l2.mean},         {"l2_sd", r.l2.sd},
              {"mspe_mean", r.mspe.mean},     {"mspe_sd", r.mspe.sd},
              {"time_mean", r.runtime_s.mean}, {"time_sd", r.runtime_s.sd}};
}

inline std::string experiment_table_csv(const ExperimentTable& table) {
  std::string csv =
      "method,tpr_mean,tpr_sd,fdr_mean,fdr_sd,l2_mean,l2_sd,mspe_mean,mspe_sd,"
      "time_mean,time_sd\n";
  for (const auto& r : table.rows) {
    csv += r.method;
    for (const MeanSd* m : {&r.tpr, &r.fdr, &r.l2, &r.mspe, &r.runtime_s}) {
      csv += "," + detail::fmt_g17(m->mean) + "," + detail::fmt_g17(m->sd);
    }
    csv += "\n";
  }
  return csv;
}

/// Runs the experiment described by a design document:
///   { "design": {...}, "fit": {...}, "variants": [{"name": ..., overrides}],
///     "threshold": 0.5, "coverage_level": 0.95, "threads": 0 }
/// Writes a CSV table and a JSON document with the same rows plus coverage
/// results and per-replicate failures.
inline json simulate_command(const json& doc, const std::string& out_csv = "",
                             const std::string& out_json = "") {
  detail::reject_unknown_keys(
      doc, {"design", "fit", "variants", "threshold", "coverage_level", "threads"},
      "simulate");
  const SimDesign design = sim_design_from_json(doc.value("design", json::object()));
  const json fit_json = doc.value("fit", json::object());
  const FitOptions base = fit_options_from_json(fit_json);
  const double threshold = doc.value("threshold", base.threshold);
  const int threads = doc.value("threads", 0);

  std::vector<MethodVariant> variants;
  json variants_echo = json::array();
  if (doc.contains("variants")) {
    for (const auto& v : doc.at("variants")) {
      if (!v.contains("name"))
        throw std::runtime_error("simulate: variant without a name");
      json merged = fit_json;
      json overrides = v;
      overrides.erase("name");
      merged.update(overrides);
      const FitOptions vo = fit_options_from_json(merged);
      variants.push_back({v.at("name").get<std::string>(), vo.config});
      variants_echo.push_back(v);
    }
  } else {
    variants.push_back({to_string(base.config.prior.slab), base.config});
    variants_echo.push_back({{"name", to_string(base.config.prior.slab)}});
  }

  const ExperimentTable table =
      run_experiment(design, variants, threshold, base.ci_level, threads);

  json out;
  out["schema_version"] = kSchemaVersion;
  json rows = json::array();
  for (const auto& r : table.rows) rows.push_back(metrics_row_to_json(r));
  out["table"] = rows;
  json failures = json::array();
  for (const auto& f : table.failures)
    failures.push_back({{"method", f.method}, {"rep", f.rep}, {"message", f.message}});

  if (doc.contains("coverage_level")) {
    const double level = doc.at("coverage_level").get<double>();
    const CoverageTable cov =
        coverage_experiment(design, level, variants, threshold, threads);
    json cov_rows = json::array();
    for (const auto& r : cov.rows) {
      cov_rows.push_back({{"method", r.method},
                          {"n_reps", r.n_reps},
                          {"level", level},
                          {"zero_coverage_mean", r.zero_coverage.mean},
                          {"zero_coverage_sd", r.zero_coverage.sd},
                          {"zero_length_mean", r.zero_length.mean},
                          {"zero_length_sd", r.zero_length.sd},
                          {"nonzero_coverage_mean", r.nonzero_coverage.mean},
                          {"nonzero_coverage_sd", r.nonzero_coverage.sd},
                          {"nonzero_length_mean", r.nonzero_length.mean},
                          {"nonzero_length_sd", r.nonzero_length.sd}});
    }
    out["coverage"] = cov_rows;
    for (const auto& f : cov.failures)
      failures.push_back(
          {{"method", f.method}, {"rep", f.rep}, {"message", f.message}});
  }
  out["failures"] = failures;

  json echo;
  echo["design"] = sim_design_to_json(design);
  echo["fit"] = fit_config_to_json(base.config, threshold, base.ci_level);
  echo["variants"] = variants_echo;
  echo["threads"] = threads;
  if (doc.contains("coverage_level"))
    echo["coverage_level"] = doc.at("coverage_level").get<double>();
  out["config_echo"] = echo;

  if (!out_csv.empty()) detail::write_text_file(out_csv, experiment_table_csv(table));
  if (!out_json.empty()) detail::write_text_file(out_json, out.dump(2) + "\n");
  return out;
}

// ---- diagnose ------------------------------------------------------------------

struct DiagnoseOptions {
  Index s0 = 1;
  double alpha = 2.0;
  double L = 1.0;
  Index max_s = 3;
  SubsetOpts subsets;
  std::uint64_t cone_samples = 20000;
};

inline json diagnose_command(const std::string& x_path,
                             const std::string& theta0_path,
                             const DiagnoseOptions& opts, bool header = false,
                             const std::string& out_path = "") {
  Matrix X = read_csv_matrix(x_path, header);
  Vector theta0 = Vector::Zero(X.cols());
  if (!theta0_path.empty()) {
    theta0 = read_csv_vector(theta0_path, header);
    if (theta0.size() != X.cols())
      throw std::runtime_error("diagnose: theta0 length does not match X columns");
  }
  Dataset data;
  data.X = X;
  data.y = Vector::Zero(X.rows());  // labels are irrelevant for W
  const Vector w = w_matrix(data, theta0);

  const DesignDiagnostics d = design_diagnostics(
      X, w, opts.s0, opts.alpha, opts.L, opts.max_s, opts.subsets, opts.cone_samples);

  json out;
  out["schema_version"] = kSchemaVersion;
  out["n"] = d.n;
  out["p"] = d.p;
  out["x_norm"] = d.x_norm;
  out["x_inf"] = d.x_inf;
  out["mc"] = d.mc;
  json kb = json::array(), ks = json::array();
  for (const auto& [s, r] : d.kappa_bar)
    kb.push_back({{"s", s}, {"value", r.value}, {"exact", r.exact}});
  for (const auto& [s, r] : d.kappa_s)
    ks.push_back({{"s", s}, {"value", r.value}, {"exact", r.exact}});
  out["kappa_bar"] = kb;
  out["kappa_s"] = ks;
  out["kappa_cone_estimate"] = d.kappa_cone_estimate;
  out["kappa_cone_is_upper_bound"] = true;
  out["condition"] = {{"lhs", d.condition.lhs},
                      {"rhs", d.condition.rhs},
                      {"ok", d.condition.ok},
                      {"kappa_sparse", d.condition.kappa_sparse},
                      {"kappa_sparse_exact", d.condition.kappa_sparse_exact},
                      {"kappa_cone", d.condition.kappa_cone},
                      {"restricted_dim", d.condition.restricted_dim}};
  out["config_echo"] = {{"s0", opts.s0},
                        {"alpha", opts.alpha},
                        {"L", opts.L},
                        {"max_s", opts.max_s},
                        {"enumeration_budget", opts.subsets.enumeration_budget},
                        {"sample_count", opts.subsets.sample_count},
                        {"cone_samples", opts.cone_samples},
                        {"seed", opts.subsets.seed},
                        {"theta0", theta0_path.empty() ? "zero" : theta0_path}};
  if (!out_path.empty()) detail::write_text_file(out_path, out.dump(2) + "\n");
  return out;
}

}  // namespace ssvb
