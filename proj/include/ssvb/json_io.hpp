#pragma once

#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "ssvb/cavi.hpp"
#include "ssvb/prior.hpp"
#include "ssvb/simulate.hpp"
#include "ssvb/summaries.hpp"

namespace ssvb {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key()))
      throw std::runtime_error(where + ": unknown key '" + item.key() + "'");
  }
}

}  // namespace detail

inline json to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

// ---- fit configuration -----------------------------------------------------

inline json fit_config_to_json(const FitConfig& c, double threshold,
                               double ci_level) {
  json j;
  j["slab"] = to_string(c.prior.slab);
  j["lambda"] = c.prior.lambda;
  j["nu"] = c.prior.nu;
  j["sigma0"] = c.prior.sigma0;
  j["a0"] = c.prior.a0;
  j["b0"] = c.prior.b0;
  j["max_iter"] = c.max_iter;
  j["tol"] = c.tol;
  j["update_order"] =
      c.update_order == UpdateOrder::sequential ? "sequential" : "parallel_snapshot";
  j["seed"] = c.seed;
  j["init"] = c.init == InitKind::zero ? "default" : "ridge";
  j["shuffle_sweep"] = c.shuffle_sweep;
  j["threads"] = c.threads;
  j["early_stop"] = c.early_stop;
  j["early_stop_ratio"] = c.early_stop_ratio;
  j["threshold"] = threshold;
  j["ci_level"] = ci_level;
  j["opt"] = {{"grad_tol", c.opt.grad_tol},
              {"max_evals", c.opt.max_evals},
              {"history", c.opt.history},
              {"wolfe_c1", c.opt.wolfe_c1},
              {"wolfe_c2", c.opt.wolfe_c2}};
  return j;
}

struct FitOptions {
  FitConfig config;
  double threshold = 0.5;
  double ci_level = 0.95;
};

/// Parses a fit configuration object; unknown keys are rejected so typos do
/// not silently fall back to defaults.
inline FitOptions fit_options_from_json(const json& j) {
  detail::reject_unknown_keys(
      j,
      {"slab", "lambda", "nu", "sigma0", "a0", "b0", "max_iter", "tol",
       "update_order", "seed", "init", "shuffle_sweep", "threads", "threshold",
       "ci_level", "opt", "early_stop", "early_stop_ratio"},
      "fit config");
  FitOptions fo;
  FitConfig& c = fo.config;
  if (j.contains("slab")) c.prior.slab = slab_from_string(j.at("slab").get<std::string>());
  if (j.contains("lambda")) c.prior.lambda = j.at("lambda").get<double>();
  if (j.contains("nu")) c.prior.nu = j.at("nu").get<double>();
  if (j.contains("sigma0")) c.prior.sigma0 = j.at("sigma0").get<double>();
  if (j.contains("a0")) c.prior.a0 = j.at("a0").get<double>();
  if (j.contains("b0")) c.prior.b0 = j.at("b0").get<double>();
  if (j.contains("max_iter")) c.max_iter = j.at("max_iter").get<int>();
  if (j.contains("tol")) c.tol = j.at("tol").get<double>();
  if (j.contains("update_order")) {
    const std::string s = j.at("update_order").get<std::string>();
    if (s == "sequential")
      c.update_order = UpdateOrder::sequential;
    else if (s == "parallel_snapshot")
      c.update_order = UpdateOrder::parallel_snapshot;
    else
      throw std::runtime_error("fit config: unknown update_order '" + s + "'");
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("init")) {
    const std::string s = j.at("init").get<std::string>();
    if (s == "default")
      c.init = InitKind::zero;
    else if (s == "ridge")
      c.init = InitKind::ridge;
    else
      throw std::runtime_error("fit config: unknown init '" + s + "'");
  }
  if (j.contains("shuffle_sweep")) c.shuffle_sweep = j.at("shuffle_sweep").get<bool>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  if (j.contains("early_stop")) c.early_stop = j.at("early_stop").get<bool>();
  if (j.contains("early_stop_ratio"))
    c.early_stop_ratio = j.at("early_stop_ratio").get<double>();
  if (j.contains("threshold")) fo.threshold = j.at("threshold").get<double>();
  if (j.contains("ci_level")) fo.ci_level = j.at("ci_level").get<double>();
  if (j.contains("opt")) {
    const json& o = j.at("opt");
    detail::reject_unknown_keys(
        o, {"grad_tol", "max_evals", "history", "wolfe_c1", "wolfe_c2"},
        "fit config opt");
    if (o.contains("grad_tol")) c.opt.grad_tol = o.at("grad_tol").get<double>();
    if (o.contains("max_evals")) c.opt.max_evals = o.at("max_evals").get<int>();
    if (o.contains("history")) c.opt.history = o.at("history").get<int>();
    if (o.contains("wolfe_c1")) c.opt.wolfe_c1 = o.at("wolfe_c1").get<double>();
    if (o.contains("wolfe_c2")) c.opt.wolfe_c2 = o.at("wolfe_c2").get<double>();
  }
  c.validate();
  if (!(fo.threshold > 0.0 && fo.threshold < 1.0))
    throw std::runtime_error("fit config: threshold must lie in (0,1)");
  if (!(fo.ci_level > 0.0 && fo.ci_level < 1.0))
    throw std::runtime_error("fit config: ci_level must lie in (0,1)");
  return fo;
}

// ---- simulation design ------------------------------------------------------

inline json sim_design_to_json(const SimDesign& d) {
  json sig;
  if (d.signal.kind == Signal::Kind::constant) {
    sig = {{"type", "constant"}, {"value", d.signal.value}};
  } else {
    sig = {{"type", "uniform"}, {"lo", d.signal.lo}, {"hi", d.signal.hi}};
  }
  return json{{"n", d.n},         {"p", d.p},           {"sigma_x", d.sigma_x},
              {"s", d.s},         {"signal", sig},      {"n_reps", d.n_reps},
              {"seed", d.seed}};
}

inline SimDesign sim_design_from_json(const json& j) {
  detail::reject_unknown_keys(
      j, {"n", "p", "sigma_x", "s", "signal", "n_reps", "seed"}, "design");
  SimDesign d;
  if (j.contains("n")) d.n = j.at("n").get<Index>();
  if (j.contains("p")) d.p = j.at("p").get<Index>();
  if (j.contains("sigma_x")) d.sigma_x = j.at("sigma_x").get<double>();
  if (j.contains("s")) d.s = j.at("s").get<Index>();
  if (j.contains("n_reps")) d.n_reps = j.at("n_reps").get<int>();
  if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("signal")) {
    const json& sig = j.at("signal");
    detail::reject_unknown_keys(sig, {"type", "value", "lo", "hi"}, "signal");
    const std::string type = sig.at("type").get<std::string>();
    if (type == "constant") {
      d.signal.kind = Signal::Kind::constant;
      if (sig.contains("value")) d.signal.value = sig.at("value").get<double>();
    } else if (type == "uniform") {
      d.signal.kind = Signal::Kind::uniform;
      if (sig.contains("lo")) d.signal.lo = sig.at("lo").get<double>();
      if (sig.contains("hi")) d.signal.hi = sig.at("hi").get<double>();
    } else {
      throw std::runtime_error("design: unknown signal type '" + type + "'");
    }
  }
  d.validate();
  return d;
}

}  // namespace ssvb
