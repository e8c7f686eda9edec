#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>

#include "ssvb/commands.hpp"

namespace {

struct FitFlags {
  std::string slab, update_order, init;
  double lambda = 0, nu = 0, sigma0 = 0, a0 = 0, b0 = 0, tol = 0, threshold = 0,
         ci_level = 0;
  int max_iter = 0, threads = 0;
  std::uint64_t seed = 0;
  bool shuffle = false;
};

/// Registers the flags that mirror fit-config keys; returns a filler that
/// copies only the flags the user actually passed into a JSON override.
std::function<ssvb::json()> add_fit_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--slab", f.slab, "slab family: laplace|gauss");
  cmd->add_option("--lambda", f.lambda, "Laplace slab rate");
  cmd->add_option("--nu", f.nu, "Laplace slab location");
  cmd->add_option("--sigma0", f.sigma0, "Gaussian slab sd");
  cmd->add_option("--a0", f.a0, "Beta prior a0");
  cmd->add_option("--b0", f.b0, "Beta prior b0");
  cmd->add_option("--tol", f.tol, "convergence tolerance");
  cmd->add_option("--max-iter", f.max_iter, "iteration cap");
  cmd->add_option("--update-order", f.update_order,
                  "sequential|parallel_snapshot");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--init", f.init, "initialization: default|ridge");
  cmd->add_flag("--shuffle-sweep", f.shuffle,
                "random coordinate order per sweep");
  cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  cmd->add_option("--threshold", f.threshold, "selection threshold on gamma");
  cmd->add_option("--ci-level", f.ci_level, "credible-interval level");
  return [cmd, &f]() {
    ssvb::json o = ssvb::json::object();
    if (cmd->count("--slab")) o["slab"] = f.slab;
    if (cmd->count("--lambda")) o["lambda"] = f.lambda;
    if (cmd->count("--nu")) o["nu"] = f.nu;
    if (cmd->count("--sigma0")) o["sigma0"] = f.sigma0;
    if (cmd->count("--a0")) o["a0"] = f.a0;
    if (cmd->count("--b0")) o["b0"] = f.b0;
    if (cmd->count("--tol")) o["tol"] = f.tol;
    if (cmd->count("--max-iter")) o["max_iter"] = f.max_iter;
    if (cmd->count("--update-order")) o["update_order"] = f.update_order;
    if (cmd->count("--seed")) o["seed"] = f.seed;
    if (cmd->count("--init")) o["init"] = f.init;
    if (cmd->count("--shuffle-sweep")) o["shuffle_sweep"] = true;
    if (cmd->count("--threads")) o["threads"] = f.threads;
    if (cmd->count("--threshold")) o["threshold"] = f.threshold;
    if (cmd->count("--ci-level")) o["ci_level"] = f.ci_level;
    return o;
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spike-and-slab variational Bayes for sparse logistic regression"};
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a dataset from CSV files");
  std::string x_path, y_path, config_path, out_path = "fit.json";
  bool header = false;
  fit_cmd->add_option("X", x_path, "design matrix CSV")->required();
  fit_cmd->add_option("y", y_path, "binary label CSV")->required();
  fit_cmd->add_option("--config", config_path, "fit configuration JSON");
  fit_cmd->add_option("--out", out_path, "output JSON path");
  fit_cmd->add_flag("--header", header, "skip one CSV header line");
  FitFlags fit_flags;
  auto fit_overrides = add_fit_flags(fit_cmd, fit_flags);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run a simulation experiment");
  std::string design_path, out_csv = "table.csv", out_json = "table.json";
  int reps_override = 0;
  sim_cmd->add_option("design", design_path, "experiment design JSON")->required();
  sim_cmd->add_option("--out-csv", out_csv, "metrics table CSV path");
  sim_cmd->add_option("--out-json", out_json, "full results JSON path");
  sim_cmd->add_option("--reps", reps_override, "override the design replicate count");
  sim_cmd->add_option("--threads", fit_flags.threads, "worker threads");

  // diagnose
  auto* diag_cmd = app.add_subcommand("diagnose", "design-matrix diagnostics");
  std::string diag_x, theta0_path, diag_out = "diagnostics.json";
  bool diag_header = false;
  ssvb::DiagnoseOptions diag_opts;
  diag_cmd->add_option("X", diag_x, "design matrix CSV")->required();
  diag_cmd->add_option("--theta0", theta0_path,
                       "true coefficients CSV (default: zero vector)");
  diag_cmd->add_option("--s0", diag_opts.s0, "assumed sparsity level");
  diag_cmd->add_option("--alpha", diag_opts.alpha, "slab-rate constant alpha");
  diag_cmd->add_option("--L", diag_opts.L, "condition constant L");
  diag_cmd->add_option("--max-s", diag_opts.max_s,
                       "largest subset size for kappa tables");
  diag_cmd->add_option("--budget", diag_opts.subsets.enumeration_budget,
                       "exact enumeration budget (subsets)");
  diag_cmd->add_option("--samples", diag_opts.subsets.sample_count,
                       "sampled subsets beyond the budget");
  diag_cmd->add_option("--cone-samples", diag_opts.cone_samples,
                       "Monte Carlo samples for the compatibility constant");
  diag_cmd->add_option("--seed", diag_opts.subsets.seed, "RNG seed");
  diag_cmd->add_flag("--header", diag_header, "skip one CSV header line");
  diag_cmd->add_option("--out", diag_out, "output JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) {
      ssvb::json config = ssvb::json::object();
      if (!config_path.empty()) config = ssvb::load_json_file(config_path);
      config.update(fit_overrides());
      const ssvb::json out =
          ssvb::fit_command(x_path, y_path, config, header, out_path);
      std::cout << "wrote " << out_path << " (converged="
                << (out.at("converged").get<bool>() ? "true" : "false")
                << ", iterations=" << out.at("iterations").get<int>()
                << ", selected=" << out.at("selected").size() << ")\n";
    } else if (*sim_cmd) {
      ssvb::json doc = ssvb::load_json_file(design_path);
      if (sim_cmd->count("--reps")) doc["design"]["n_reps"] = reps_override;
      if (sim_cmd->count("--threads")) doc["threads"] = fit_flags.threads;
      const ssvb::json out = ssvb::simulate_command(doc, out_csv, out_json);
      for (const auto& row : out.at("table")) {
        std::cout << row.at("method").get<std::string>()
                  << ": tpr=" << row.at("tpr_mean").get<double>()
                  << " fdr=" << row.at("fdr_mean").get<double>()
                  << " l2=" << row.at("l2_mean").get<double>()
                  << " mspe=" << row.at("mspe_mean").get<double>() << "\n";
      }
      std::cout << "wrote " << out_csv << " and " << out_json;
      if (!out.at("failures").empty())
        std::cout << " (" << out.at("failures").size() << " replicate failures)";
      std::cout << "\n";
    } else if (*diag_cmd) {
      ssvb::diagnose_command(diag_x, theta0_path, diag_opts, diag_header, diag_out);
      std::cout << "wrote " << diag_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
