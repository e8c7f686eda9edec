#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssvb/cavi.hpp"
#include "ssvb/data.hpp"
#include "ssvb/model.hpp"
#include "ssvb/rng.hpp"
#include "ssvb/summaries.hpp"

namespace ssvb {

struct Signal {
  enum class Kind { constant, uniform } kind = Kind::constant;
  double value = 2.0;  // constant
  double lo = -2.0;    // uniform
  double hi = 2.0;
};

/// Gaussian-design experiment: X_ij ~ N(0, sigma_x^2), theta_0 with s leading
/// nonzeros, y_i ~ Bernoulli(sigmoid(x_i'theta_0)).
struct SimDesign {
  Index n = 250;
  Index p = 500;
  double sigma_x = 1.0;
  Index s = 2;
  Signal signal;
  int n_reps = 20;
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 1 || p < 1) throw std::invalid_argument("SimDesign: need n, p >= 1");
    if (s < 0 || s > p) throw std::invalid_argument("SimDesign: need 0 <= s <= p");
    if (!(sigma_x > 0.0)) throw std::invalid_argument("SimDesign: sigma_x must be positive");
    if (n_reps < 1) throw std::invalid_argument("SimDesign: n_reps must be >= 1");
    if (signal.kind == Signal::Kind::uniform && !(signal.lo <= signal.hi))
      throw std::invalid_argument("SimDesign: uniform signal needs lo <= hi");
  }
};

/// Deterministic given (design.seed, rep): design, signal and labels use
/// independent substreams.
inline std::pair<Dataset, Vector> generate(const SimDesign& design, int rep) {
  design.validate();
  const auto r = static_cast<std::uint64_t>(rep);

  Dataset data;
  data.X.resize(design.n, design.p);
  {
    Rng rng(design.seed, r, RngPurpose::design);
    // row-major fill order, documented as part of the reproducible stream
    for (Index i = 0; i < design.n; ++i)
      for (Index j = 0; j < design.p; ++j)
        data.X(i, j) = design.sigma_x * rng.normal();
  }

  Vector theta0 = Vector::Zero(design.p);
  if (design.signal.kind == Signal::Kind::constant) {
    theta0.head(design.s).setConstant(design.signal.value);
  } else {
    Rng rng(design.seed, r, RngPurpose::signal);
    for (Index j = 0; j < design.s; ++j)
      theta0[j] = design.signal.lo +
                  (design.signal.hi - design.signal.lo) * rng.uniform01();
  }

  data.y.resize(design.n);
  {
    Rng rng(design.seed, r, RngPurpose::labels);
    const Vector u = data.X * theta0;
    for (Index i = 0; i < design.n; ++i)
      data.y[i] = rng.bernoulli(sigmoid(u[i])) ? 1.0 : 0.0;
  }
  return {std::move(data), std::move(theta0)};
}

struct RepMetrics {
  double tpr = 0.0;
  double fdr = 0.0;
  double l2 = 0.0;
  double mspe = 0.0;
};

/// TPR = s^-1 sum_{j: theta0_j != 0} 1{selected_j};
/// FDR = #{selected with theta0_j = 0} / #selected, 0 when nothing selected;
/// l2 = ||theta_hat - theta0||_2 for theta_hat the posterior mean;
/// MSPE = sqrt(n^-1 sum_i (sigmoid(x_i'theta_hat) - sigmoid(x_i'theta0))^2).
inline RepMetrics metrics(const Vector& theta0, const Summary& summary,
                          const Dataset& data) {
  if (theta0.size() != data.p() || summary.posterior_mean.size() != data.p())
    throw std::invalid_argument("metrics: shape mismatch");
  RepMetrics out;
  Index true_support = 0;
  for (Index j = 0; j < theta0.size(); ++j)
    if (theta0[j] != 0.0) ++true_support;

  Index hits = 0, false_pos = 0;
  for (Index j : summary.selected) {
    if (theta0[j] != 0.0)
      ++hits;
    else
      ++false_pos;
  }
  out.tpr = true_support > 0
                ? static_cast<double>(hits) / static_cast<double>(true_support)
                : 0.0;
  out.fdr = summary.selected.empty()
                ? 0.0
                : static_cast<double>(false_pos) /
                      static_cast<double>(summary.selected.size());
  out.l2 = (summary.posterior_mean - theta0).norm();

  const Vector u_hat = data.X * summary.posterior_mean;
  const Vector u0 = data.X * theta0;
  double acc = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const double d = sigmoid(u_hat[i]) - sigmoid(u0[i]);
    acc += d * d;
  }
  out.mspe = std::sqrt(acc / static_cast<double>(data.n()));
  return out;
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

inline MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

struct MetricsRow {
  std::string method;
  MeanSd tpr, fdr, l2, mspe, runtime_s;
  int n_reps = 0;
};

struct MethodVariant {
  std::string name;
  FitConfig config;
};

struct RepFailure {
  std::string method;
  int rep = 0;
  std::string message;
};

struct ExperimentTable {
  std::vector<MetricsRow> rows;
  std::vector<RepFailure> failures;
};

/// Per-replicate raw results, kept so acceptance checks can reuse one batch
/// of fits for several criteria.
struct RepRecord {
  RepMetrics metrics;
  double runtime_s = 0.0;
  std::size_t model_size = 0;
  // coverage bookkeeping at the summary's ci_level
  double zero_cov = 0.0, zero_len = 0.0;
  double nonzero_cov = 0.0, nonzero_len = 0.0;
  Index n_zero = 0, n_nonzero = 0;
};

inline RepRecord run_replicate(const SimDesign& design, int rep,
                               const FitConfig& fit_config, double threshold,
                               double ci_level) {
  auto [data, theta0] = generate(design, rep);
  FitConfig cfg = fit_config;
  cfg.seed = substream_seed(design.seed, static_cast<std::uint64_t>(rep),
                            RngPurpose::sweep_order);
  const FitResult fit_res = fit(data, cfg);
  const Summary summary = make_summary(fit_res.state, threshold, ci_level);

  RepRecord rec;
  rec.metrics = metrics(theta0, summary, data);
  rec.runtime_s = fit_res.wall_time_seconds;
  rec.model_size = summary.selected.size();
  for (Index j = 0; j < theta0.size(); ++j) {
    const auto& iv = summary.intervals[static_cast<std::size_t>(j)];
    const bool covered = iv[0] <= theta0[j] && theta0[j] <= iv[1];
    const double len = iv[1] - iv[0];
    if (theta0[j] == 0.0) {
      rec.zero_cov += covered ? 1.0 : 0.0;
      rec.zero_len += len;
      ++rec.n_zero;
    } else {
      rec.nonzero_cov += covered ? 1.0 : 0.0;
      rec.nonzero_len += len;
      ++rec.n_nonzero;
    }
  }
  if (rec.n_zero > 0) {
    rec.zero_cov /= static_cast<double>(rec.n_zero);
    rec.zero_len /= static_cast<double>(rec.n_zero);
  }
  if (rec.n_nonzero > 0) {
    rec.nonzero_cov /= static_cast<double>(rec.n_nonzero);
    rec.nonzero_len /= static_cast<double>(rec.n_nonzero);
  }
  return rec;
}

/// Runs every variant over the replicates and aggregates mean +/- sd of the
/// selection and error metrics. Replicate failures are recorded, not fatal.
inline ExperimentTable run_experiment(const SimDesign& design,
                                      const std::vector<MethodVariant>& variants,
                                      double threshold = 0.5,
                                      double ci_level = 0.95,
                                      int threads = 0) {
  design.validate();
  ExperimentTable table;
  for (const auto& variant : variants) {
    const FitConfig& cfg = variant.config;

    std::vector<RepRecord> records(static_cast<std::size_t>(design.n_reps));
    std::vector<std::string> errors(static_cast<std::size_t>(design.n_reps));
    detail::parallel_for(design.n_reps, threads, [&](Index rep) {
      try {
        records[static_cast<std::size_t>(rep)] = run_replicate(
            design, static_cast<int>(rep), cfg, threshold, ci_level);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(rep)] = e.what();
      }
    });

    std::vector<double> tpr, fdr, l2, mspe, rt;
    for (int rep = 0; rep < design.n_reps; ++rep) {
      const auto& err = errors[static_cast<std::size_t>(rep)];
      if (!err.empty()) {
        table.failures.push_back({variant.name, rep, err});
        continue;
      }
      const auto& rec = records[static_cast<std::size_t>(rep)];
      tpr.push_back(rec.metrics.tpr);
      fdr.push_back(rec.metrics.fdr);
      l2.push_back(rec.metrics.l2);
      mspe.push_back(rec.metrics.mspe);
      rt.push_back(rec.runtime_s);
    }
    MetricsRow row;
    row.method = variant.name;
    row.tpr = mean_sd(tpr);
    row.fdr = mean_sd(fdr);
    row.l2 = mean_sd(l2);
    row.mspe = mean_sd(mspe);
    row.runtime_s = mean_sd(rt);
    row.n_reps = static_cast<int>(tpr.size());
    table.rows.push_back(std::move(row));
  }
  return table;
}

struct CoverageRow {
  std::string method;
  MeanSd zero_coverage, zero_length, nonzero_coverage, nonzero_length;
  int n_reps = 0;
};

struct CoverageTable {
  std::vector<CoverageRow> rows;
  std::vector<RepFailure> failures;
};

/// Marginal credible-interval coverage and length per replicate, split by
/// whether the true coefficient is zero.
inline CoverageTable coverage_experiment(const SimDesign& design, double level,
                                         const std::vector<MethodVariant>& variants,
                                         double threshold = 0.5,
                                         int threads = 0) {
  design.validate();
  CoverageTable table;
  for (const auto& variant : variants) {
    const FitConfig& cfg = variant.config;

    std::vector<RepRecord> records(static_cast<std::size_t>(design.n_reps));
    std::vector<std::string> errors(static_cast<std::size_t>(design.n_reps));
    detail::parallel_for(design.n_reps, threads, [&](Index rep) {
      try {
        records[static_cast<std::size_t>(rep)] =
            run_replicate(design, static_cast<int>(rep), cfg, threshold, level);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(rep)] = e.what();
      }
    });

    std::vector<double> zc, zl, nc, nl;
    int ok_reps = 0;
    for (int rep = 0; rep < design.n_reps; ++rep) {
      const auto& err = errors[static_cast<std::size_t>(rep)];
      if (!err.empty()) {
        table.failures.push_back({variant.name, rep, err});
        continue;
      }
      ++ok_reps;
      const auto& rec = records[static_cast<std::size_t>(rep)];
      if (rec.n_zero > 0) {
        zc.push_back(rec.zero_cov);
        zl.push_back(rec.zero_len);
      }
      if (rec.n_nonzero > 0) {
        nc.push_back(rec.nonzero_cov);
        nl.push_back(rec.nonzero_len);
      }
    }
    CoverageRow row;
    row.method = variant.name;
    row.zero_coverage = mean_sd(zc);
    row.zero_length = mean_sd(zl);
    row.nonzero_coverage = mean_sd(nc);
    row.nonzero_length = mean_sd(nl);
    row.n_reps = ok_reps;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace ssvb
