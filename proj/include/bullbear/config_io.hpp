#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "densities.hpp"
#include "model.hpp"
#include "montecarlo.hpp"
#include "pide.hpp"

// JSON configuration ingestion. A run is described by one document:
//
//   {
//     "regime":  {"a1": .., "a2": ..},
//     "market":  {"mu1": .., "mu2": .., "sigma": .., "r": ..},
//     "signal":  {"lambda": .., "family": "gaussian", "params": {..},
//                 "support": [lo, hi]},          // support optional
//     "utility": {"kappa": ..},
//     "horizon": .., "x0": .., "v0": ..,
//     "true_p0": ..,                              // optional, see below
//     "grid":    {"nx": .., "nt": .., ..},        // optional solver overrides
//     "mc":      {"paths": .., "dt": .., "seed": ..}  // optional
//   }
//
// Families and their "params" keys:
//   gaussian          mean1, var1, mean2, var2
//   gaussian_mixture  weights[], means[], vars[], mean2, var2
//   mixture_gamma     shape, weight
//   tabulated         grid[], f1[], f2[]
//
// Unknown keys are rejected so a typo cannot silently fall back to a
// default. All validation failures throw std::invalid_argument with the
// dotted path of the offending key; the CLI maps that to exit code 1.

namespace bullbear {

struct RunConfig {
  Problem problem;
  SignalDensityPair densities;
  PideConfig pide;
  McConfig mc;
  double true_p0 = -1.0;  // optional true initial-regime probability; < 0
                          // means "use x0", keeping the filter well matched
  nlohmann::json echo;    // resolved document the run actually used
};

namespace cfgdetail {

[[noreturn]] inline void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

inline std::string join(const std::string& scope, const std::string& key) {
  return scope.empty() ? key : scope + "." + key;
}

inline const nlohmann::json& require_key(const nlohmann::json& obj, const std::string& scope,
                                         const std::string& key) {
  if (!obj.is_object()) fail("'" + scope + "' must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail("missing required key '" + join(scope, key) + "'");
  return *it;
}

inline double require_number(const nlohmann::json& obj, const std::string& scope, const std::string& key) {
  const auto& v = require_key(obj, scope, key);
  if (!v.is_number()) fail("'" + join(scope, key) + "' must be a number");
  return v.get<double>();
}

inline double optional_number(const nlohmann::json& obj, const std::string& scope, const std::string& key,
                              double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) fail("'" + join(scope, key) + "' must be a number");
  return it->get<double>();
}

inline long optional_integer(const nlohmann::json& obj, const std::string& scope, const std::string& key,
                             long fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_integer()) fail("'" + join(scope, key) + "' must be an integer");
  return it->get<long>();
}

inline bool optional_bool(const nlohmann::json& obj, const std::string& scope, const std::string& key,
                          bool fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) fail("'" + join(scope, key) + "' must be a boolean");
  return it->get<bool>();
}

inline std::vector<double> require_number_array(const nlohmann::json& obj, const std::string& scope,
                                                const std::string& key) {
  const auto& v = require_key(obj, scope, key);
  if (!v.is_array()) fail("'" + join(scope, key) + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) fail("'" + join(scope, key) + "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline void reject_unknown(const nlohmann::json& obj, const std::string& scope,
                           std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) return;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known) fail("unknown key '" + join(scope, it.key()) + "'");
  }
}

// "support": [lo, hi] with "-inf"/"inf" strings allowed for open ends.
inline double support_end(const nlohmann::json& v, const std::string& scope) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  fail("'" + scope + ".support' entries must be numbers or \"inf\"/\"-inf\"");
}

inline void check_support(const nlohmann::json& sig, const std::string& scope) {
  auto it = sig.find("support");
  if (it == sig.end()) return;
  if (!it->is_array() || it->size() != 2) fail("'" + scope + ".support' must be [lo, hi]");
  const double lo = support_end((*it)[0], scope);
  const double hi = support_end((*it)[1], scope);
  if (!(lo < hi)) fail("'" + scope + ".support' must satisfy lo < hi");
}

inline SignalDensityPair parse_signal_params(const nlohmann::json& sig) {
  const std::string scope = "signal";
  const auto& fam = require_key(sig, scope, "family");
  if (!fam.is_string()) fail("'signal.family' must be a string");
  const std::string family = fam.get<std::string>();
  const auto& params = require_key(sig, scope, "params");
  const std::string ps = "signal.params";

  if (family == "gaussian") {
    reject_unknown(params, ps, {"mean1", "var1", "mean2", "var2"});
    GaussianSpec g;
    g.mean1 = require_number(params, ps, "mean1");
    g.var1 = require_number(params, ps, "var1");
    g.mean2 = require_number(params, ps, "mean2");
    g.var2 = require_number(params, ps, "var2");
    return SignalDensityPair(g);
  }
  if (family == "gaussian_mixture") {
    reject_unknown(params, ps, {"weights", "means", "vars", "mean2", "var2"});
    GaussianMixtureSpec g;
    g.weights = require_number_array(params, ps, "weights");
    g.means = require_number_array(params, ps, "means");
    g.vars = require_number_array(params, ps, "vars");
    g.mean2 = require_number(params, ps, "mean2");
    g.var2 = require_number(params, ps, "var2");
    return SignalDensityPair(g);
  }
  if (family == "mixture_gamma") {
    reject_unknown(params, ps, {"shape", "weight"});
    MixtureGammaSpec g;
    g.shape = require_number(params, ps, "shape");
    g.weight = require_number(params, ps, "weight");
    return SignalDensityPair(g);
  }
  if (family == "tabulated") {
    reject_unknown(params, ps, {"grid", "f1", "f2"});
    TabulatedSpec t;
    t.grid = require_number_array(params, ps, "grid");
    t.f1 = require_number_array(params, ps, "f1");
    t.f2 = require_number_array(params, ps, "f2");
    return SignalDensityPair(t);
  }
  fail("'signal.family' must be one of gaussian, gaussian_mixture, mixture_gamma, tabulated (got '" +
       family + "')");
}

}  // namespace cfgdetail

inline RunConfig parse_config(const nlohmann::json& doc) {
  using namespace cfgdetail;
  if (!doc.is_object()) fail("document root must be an object");
  reject_unknown(doc, "",
                 {"regime", "market", "signal", "utility", "horizon", "x0", "v0", "true_p0", "grid", "mc"});

  Problem p;
  const auto& regime = require_key(doc, "", "regime");
  reject_unknown(regime, "regime", {"a1", "a2"});
  p.regime.a1 = require_number(regime, "regime", "a1");
  p.regime.a2 = require_number(regime, "regime", "a2");

  const auto& market = require_key(doc, "", "market");
  reject_unknown(market, "market", {"mu1", "mu2", "sigma", "r"});
  p.market.mu1 = require_number(market, "market", "mu1");
  p.market.mu2 = require_number(market, "market", "mu2");
  p.market.sigma = require_number(market, "market", "sigma");
  p.market.r = require_number(market, "market", "r");

  const auto& utility = require_key(doc, "", "utility");
  reject_unknown(utility, "utility", {"kappa"});
  p.utility.kappa = require_number(utility, "utility", "kappa");

  const auto& signal = require_key(doc, "", "signal");
  reject_unknown(signal, "signal", {"lambda", "family", "params", "support"});
  p.lambda = require_number(signal, "signal", "lambda");
  check_support(signal, "signal");
  SignalDensityPair densities = parse_signal_params(signal);

  p.horizon = require_number(doc, "", "horizon");
  p.x0 = require_number(doc, "", "x0");
  p.v0 = require_number(doc, "", "v0");
  p.validate();

  PideConfig pc;
  if (auto it = doc.find("grid"); it != doc.end()) {
    reject_unknown(*it, "grid",
                   {"nx", "nt", "n_q", "tail_eps", "m_clamp", "d0_linear_theta", "bound_slack", "check_bounds"});
    pc.nx = static_cast<int>(optional_integer(*it, "grid", "nx", pc.nx));
    pc.nt = static_cast<int>(optional_integer(*it, "grid", "nt", pc.nt));
    pc.n_q = static_cast<int>(optional_integer(*it, "grid", "n_q", pc.n_q));
    pc.tail_eps = optional_number(*it, "grid", "tail_eps", pc.tail_eps);
    pc.m_clamp = optional_number(*it, "grid", "m_clamp", pc.m_clamp);
    pc.d0_linear_theta = optional_bool(*it, "grid", "d0_linear_theta", pc.d0_linear_theta);
    pc.bound_slack = optional_number(*it, "grid", "bound_slack", pc.bound_slack);
    pc.check_bounds = optional_bool(*it, "grid", "check_bounds", pc.check_bounds);
  }

  McConfig mc;
  if (auto it = doc.find("mc"); it != doc.end()) {
    reject_unknown(*it, "mc",
                   {"paths", "dt", "seed", "eval_time", "calib_paths", "max_halvings"});
    mc.paths = optional_integer(*it, "mc", "paths", mc.paths);
    mc.dt = optional_number(*it, "mc", "dt", mc.dt);
    mc.seed = static_cast<std::uint64_t>(optional_integer(*it, "mc", "seed", static_cast<long>(mc.seed)));
    mc.eval_time = optional_number(*it, "mc", "eval_time", mc.eval_time);
    mc.calib_paths = optional_integer(*it, "mc", "calib_paths", mc.calib_paths);
    mc.max_halvings = static_cast<int>(optional_integer(*it, "mc", "max_halvings", mc.max_halvings));
  }

  double true_p0 = -1.0;
  if (auto it = doc.find("true_p0"); it != doc.end()) {
    if (!it->is_number()) fail("'true_p0' must be a number");
    true_p0 = it->get<double>();
    if (!(true_p0 >= 0.0 && true_p0 <= 1.0)) fail("'true_p0' must lie in [0, 1]");
  }

  return RunConfig{std::move(p), std::move(densities), pc, mc, true_p0, doc};
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) cfgdetail::fail("cannot open file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    cfgdetail::fail("'" + path + "' is not valid JSON: " + e.what());
  }
  return doc;
}

inline RunConfig load_config(const std::string& path) { return parse_config(load_json_file(path)); }

// Sets doc[a][b]... = value for a dotted path "a.b...", creating objects
// along the way. Used to fold command-line overrides into the document
// before parsing, so the echoed config is exactly what the run used.
inline void set_by_path(nlohmann::json& doc, const std::string& dotted, const nlohmann::json& value) {
  if (dotted.empty()) cfgdetail::fail("override path must be non-empty");
  nlohmann::json* cur = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) cfgdetail::fail("override path '" + dotted + "' has an empty segment");
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    if (!cur->contains(key) || !(*cur)[key].is_object()) (*cur)[key] = nlohmann::json::object();
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

}  // namespace bullbear
