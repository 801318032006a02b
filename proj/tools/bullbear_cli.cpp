// Command-line front end: configuration in, CSV/JSON artifacts out.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical
// diagnostic (value-envelope breach, structurally violated likelihood-ratio
// condition, ...). A run manifest is written last, after every artifact it
// lists, so a manifest's presence certifies a complete run.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include <bullbear/bullbear.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  long paths = -1;
  double dt = -1.0;
  int grid_nx = -1;
  int grid_nt = -1;
  bool seed_given = false;
};

// Accumulates artifacts and stage timings; the manifest goes out last.
class RunWriter {
 public:
  RunWriter(fs::path dir, std::string subcommand) : dir_(std::move(dir)), sub_(std::move(subcommand)) {
    fs::create_directories(dir_);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open output file '" + (dir_ / name).string() + "'");
    outputs_.push_back(name);
    return f;
  }

  void write_json(const std::string& name, const json& doc) {
    auto f = open(name);
    f << doc.dump(2) << "\n";
  }

  template <class F>
  void stage(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    timings_.emplace_back(name, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }

  void finish(const json& config_echo, std::uint64_t seed) {
    json m;
    m["subcommand"] = sub_;
    m["seed"] = seed;
    m["version"] = bullbear::kVersion;
    m["config"] = config_echo;
    m["outputs"] = outputs_;
    json t = json::object();
    for (const auto& [name, ms] : timings_) t[name] = ms;
    m["timings_ms"] = t;
    std::ofstream f(dir_ / "manifest.json", std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open output file 'manifest.json'");
    f << m.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  std::string sub_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, double>> timings_;
};

bullbear::RunConfig load_with_overrides(const GlobalArgs& g) {
  if (g.config_path.empty()) throw std::invalid_argument("config: --config is required");
  json doc = bullbear::load_json_file(g.config_path);
  if (g.seed_given) bullbear::set_by_path(doc, "mc.seed", g.seed);
  if (g.paths >= 0) bullbear::set_by_path(doc, "mc.paths", g.paths);
  if (g.dt > 0.0) bullbear::set_by_path(doc, "mc.dt", g.dt);
  if (g.grid_nx > 0) bullbear::set_by_path(doc, "grid.nx", g.grid_nx);
  if (g.grid_nt > 0) bullbear::set_by_path(doc, "grid.nt", g.grid_nt);
  return bullbear::parse_config(doc);
}

json report_to_json(const bullbear::MCReport& r) {
  json extra = json::object();
  for (const auto& [k, v] : r.extra) extra[k] = v;
  return json{{"name", r.name},       {"mean", r.mean},
              {"stderr", r.stderr_},  {"paths", r.paths},
              {"dt", r.dt},           {"seed", r.seed},
              {"target", r.target},   {"tolerance", r.tolerance},
              {"pass", r.pass},       {"extra", extra}};
}

json blr_to_json(const bullbear::BlrReport& rep) {
  return json{{"passes", rep.passes},
              {"b_min", rep.bounds.b_min},
              {"b_max", rep.bounds.b_max_finite ? json(rep.bounds.b_max) : json("inf")},
              {"b_max_finite", rep.bounds.b_max_finite},
              {"ratio_argmax", rep.bounds.argmax},
              {"closed_form", rep.bounds.closed_form},
              {"ratio_hits_zero", rep.bounds.ratio_hits_zero},
              {"scan", json{{"points", rep.bounds.scan_points},
                            {"b_min", rep.bounds.b_min_scan},
                            {"b_max", rep.bounds.b_max_scan}}},
              {"d3", rep.d3_finite ? json(rep.d3) : json("inf")},
              {"d3_finite", rep.d3_finite},
              {"flags", rep.flags},
              {"quadrature", json{{"nodes", rep.quad_nodes}, {"lo", rep.quad_lo}, {"hi", rep.quad_hi}}}};
}

int cmd_solve(const GlobalArgs& g) {
  RunWriter out(g.out_dir, "solve");
  auto cfg = load_with_overrides(g);
  std::optional<bullbear::LambdaSolution> sol;
  out.stage("solve", [&] { sol.emplace(bullbear::solve_lambda(cfg.problem, cfg.densities, cfg.pide)); });
  out.stage("write", [&] {
    auto f = out.open("surface.csv");
    bullbear::csv::write_surface(f, sol->surface);
    const auto env = sol->envelope0;
    out.write_json("bounds.json",
                   json{{"m_clamp", sol->m_clamp},
                        {"clamp_activations", sol->clamp_activations},
                        {"worst_lo_slack", sol->worst_lo_slack},
                        {"worst_hi_slack", sol->worst_hi_slack},
                        {"envelope_t0", json{{"lo", env.lo}, {"hi", env.hi}}},
                        {"d0_linear_theta", sol->d0_linear_theta},
                        {"config", cfg.echo}});
  });
  out.finish(cfg.echo, cfg.mc.seed);
  return 0;
}

int cmd_simulate(const GlobalArgs& g, bool with_mean_curve) {
  RunWriter out(g.out_dir, with_mean_curve ? "filter" : "simulate");
  auto cfg = load_with_overrides(g);
  const long n_paths = g.paths >= 0 ? g.paths : 1;
  if (n_paths <= 0) throw std::invalid_argument("config: paths must be positive");

  bullbear::SimulationInputs in;
  in.regime = cfg.problem.regime;
  in.market = cfg.problem.market;
  in.lambda = cfg.problem.lambda;
  in.horizon = cfg.problem.horizon;
  in.x0 = cfg.problem.x0;
  in.true_p0 = cfg.true_p0;

  out.stage("simulate", [&] {
    for (long i = 0; i < n_paths; ++i) {
      const auto w = bullbear::simulate_world(in, cfg.densities, cfg.mc.dt, cfg.mc.seed,
                                              static_cast<std::uint64_t>(i));
      const auto fp = bullbear::run_filter(w, cfg.problem.regime, cfg.problem.market, cfg.densities,
                                           cfg.problem.x0);
      char suffix[24];
      std::snprintf(suffix, sizeof suffix, "_%03ld", i);
      {
        auto f = out.open(std::string("world") + suffix + ".csv");
        bullbear::csv::write_world(f, w, fp.pi);
      }
      auto f = out.open(std::string("events") + suffix + ".csv");
      bullbear::csv::write_events(f, w.events);
    }
  });

  if (with_mean_curve) {
    out.stage("mean_curve", [&] {
      const std::size_t n = bullbear::grid_steps(cfg.problem.horizon, cfg.mc.dt);
      std::vector<double> t(n + 1), m(n + 1);
      for (std::size_t k = 0; k <= n; ++k) {
        t[k] = static_cast<double>(k) * cfg.mc.dt;
        m[k] = bullbear::mean_filter_ode(cfg.problem.regime, cfg.problem.x0, t[k]);
      }
      auto f = out.open("mean_ode.csv");
      bullbear::csv::write_curve(f, "mean_pi", t, m);
    });
  }

  out.finish(cfg.echo, cfg.mc.seed);
  return 0;
}

int cmd_blr(const GlobalArgs& g) {
  RunWriter out(g.out_dir, "blr-check");
  auto cfg = load_with_overrides(g);
  bullbear::BlrReport rep;
  out.stage("blr", [&] { rep = bullbear::check_blr(cfg.densities); });
  const json doc = blr_to_json(rep);
  out.write_json("blr_report.json", doc);
  std::cout << doc.dump(2) << "\n";
  out.finish(cfg.echo, cfg.mc.seed);
  return 0;
}

int cmd_strategy(const GlobalArgs& g) {
  RunWriter out(g.out_dir, "strategy");
  auto cfg = load_with_overrides(g);
  std::optional<bullbear::LambdaSolution> sol;
  out.stage("solve", [&] { sol.emplace(bullbear::solve_lambda(cfg.problem, cfg.densities, cfg.pide)); });
  out.stage("write", [&] {
    const bullbear::StrategyField field(*sol);
    auto f = out.open("strategy.csv");
    bullbear::csv::write_strategy(f, field, sol->surface);
  });
  out.finish(cfg.echo, cfg.mc.seed);
  return 0;
}

// Closed-form reference for the regime-free market; refuses configs whose
// value actually depends on the belief.
int cmd_oracle(const GlobalArgs& g) {
  RunWriter out(g.out_dir, "oracle");
  auto cfg = load_with_overrides(g);
  const auto& m = cfg.problem.market;
  if (!cfg.densities.identical() || m.theta1() != m.theta2())
    throw std::invalid_argument(
        "config: oracle requires a degenerate model (mu1 == mu2 and identical signal densities)");
  const double beta = cfg.problem.utility.beta();
  const double d0 = bullbear::d_zero(m, beta, 0.5, cfg.pide.d0_linear_theta);
  const int nt = cfg.pide.nt;
  std::vector<double> t(static_cast<std::size_t>(nt) + 1), v(static_cast<std::size_t>(nt) + 1);
  for (int k = 0; k <= nt; ++k) {
    t[static_cast<std::size_t>(k)] = cfg.problem.horizon * k / nt;
    v[static_cast<std::size_t>(k)] =
        bullbear::merton_oracle(d0, cfg.problem.horizon - t[static_cast<std::size_t>(k)]);
  }
  auto f = out.open("oracle.csv");
  bullbear::csv::write_curve(f, "lambda", t, v);
  out.finish(cfg.echo, cfg.mc.seed);
  return 0;
}

int cmd_verify(const GlobalArgs& g, const std::string& checks) {
  static const std::vector<std::string> kSets = {"martingale", "dual", "primal", "filter-mean", "all"};
  bool known = false;
  for (const auto& s : kSets) known = known || s == checks;
  if (!known) {
    std::string names;
    for (const auto& s : kSets) names += (names.empty() ? "" : ", ") + s;
    throw std::invalid_argument("config: unknown check set '" + checks + "' (valid: " + names + ")");
  }

  RunWriter out(g.out_dir, "verify");
  auto cfg = load_with_overrides(g);
  if (cfg.mc.paths <= 0) throw std::invalid_argument("config: paths must be positive");

  const bool do_mart = checks == "martingale" || checks == "all";
  const bool do_dual = checks == "dual" || checks == "all";
  const bool do_primal = checks == "primal" || checks == "all";
  const bool do_filter = checks == "filter-mean" || checks == "all";

  std::optional<bullbear::LambdaSolution> sol;
  std::optional<bullbear::DualFields> fields;
  if (do_mart || do_dual || do_primal) {
    out.stage("solve", [&] {
      sol.emplace(bullbear::solve_lambda(cfg.problem, cfg.densities, cfg.pide));
      fields.emplace(*sol, cfg.densities);
    });
  }

  std::vector<bullbear::MCReport> reports;
  if (do_mart)
    out.stage("martingale", [&] { reports.push_back(bullbear::martingale_check(*sol, *fields, cfg.densities, cfg.mc)); });
  if (do_dual)
    out.stage("dual", [&] {
      reports.push_back(bullbear::dual_estimate_direct(*sol, *fields, cfg.densities, cfg.mc));
      reports.push_back(bullbear::dual_estimate_weighted(*sol, *fields, cfg.densities, cfg.mc));
      reports.push_back(bullbear::dual_estimate_direct(*sol, *fields, cfg.densities, cfg.mc,
                                                       bullbear::DualControl::zero));
    });
  if (do_primal)
    out.stage("primal", [&] {
      const bullbear::StrategyField field(*sol);
      reports.push_back(bullbear::primal_objective(*sol, &field, cfg.densities, cfg.mc));
      reports.push_back(bullbear::primal_objective(*sol, &field, cfg.densities, cfg.mc, 1.5));
      reports.push_back(bullbear::primal_objective(*sol, nullptr, cfg.densities, cfg.mc));
    });
  if (do_filter)
    out.stage("filter-mean", [&] {
      const std::pair<double, const char*> probes[] = {{0.25, "quarter"}, {0.5, "half"}, {1.0, "end"}};
      for (const auto& [frac, label] : probes) {
        auto r = bullbear::filter_mean_check(cfg.problem, cfg.densities, frac * cfg.problem.horizon, cfg.mc);
        r.name += std::string("_") + label;
        reports.push_back(std::move(r));
      }
    });

  out.stage("write", [&] {
    std::map<std::string, int> seen;
    for (const auto& r : reports) {
      const int k = seen[r.name]++;
      const std::string file = "check_" + r.name + (k ? "_" + std::to_string(k + 1) : "") + ".json";
      out.write_json(file, report_to_json(r));
    }
    auto f = out.open("summary.csv");
    bullbear::csv::prepare(f);
    f << "check,mean,stderr,target,tolerance,pass\n";
    for (const auto& r : reports)
      f << r.name << "," << r.mean << "," << r.stderr_ << "," << r.target << "," << r.tolerance << ","
        << (r.pass ? 1 : 0) << "\n";
  });

  out.finish(cfg.echo, cfg.mc.seed);
  bool all_pass = true;
  for (const auto& r : reports) all_pass = all_pass && r.pass;
  if (!all_pass) throw bullbear::numerical_error("verify: at least one check failed; see summary.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regime-switching consumption and investment toolkit"};
  app.fallthrough();
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_option("--out-dir", g.out_dir, "output directory")->envname("BULLBEAR_OUT_DIR");
  auto* seed_opt = app.add_option("--seed", g.seed, "root RNG seed (overrides mc.seed)");
  app.add_option("--paths", g.paths, "Monte Carlo paths / exported path count");
  app.add_option("--dt", g.dt, "simulation step (overrides mc.dt)");
  app.add_option("--grid-nx", g.grid_nx, "spatial nodes (overrides grid.nx)");
  app.add_option("--grid-nt", g.grid_nt, "time steps (overrides grid.nt)");

  auto* c_solve = app.add_subcommand("solve", "solve the dual value surface");
  auto* c_sim = app.add_subcommand("simulate", "simulate market, signal, and filter paths");
  auto* c_filter = app.add_subcommand("filter", "simulate paths plus the analytic mean curve");
  auto* c_blr = app.add_subcommand("blr-check", "check the likelihood-ratio conditions");
  auto* c_verify = app.add_subcommand("verify", "run Monte Carlo verification checks");
  auto* c_strategy = app.add_subcommand("strategy", "export feedback controls per unit wealth");
  auto* c_oracle = app.add_subcommand("oracle", "closed-form value curve for a degenerate model");

  std::string checks = "all";
  c_verify->add_option("checks", checks, "check set: martingale, dual, primal, filter-mean, all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 1;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (c_solve->parsed()) return cmd_solve(g);
    if (c_sim->parsed()) return cmd_simulate(g, false);
    if (c_filter->parsed()) return cmd_simulate(g, true);
    if (c_blr->parsed()) return cmd_blr(g);
    if (c_verify->parsed()) return cmd_verify(g, checks);
    if (c_strategy->parsed()) return cmd_strategy(g);
    if (c_oracle->parsed()) return cmd_oracle(g);
  } catch (const bullbear::numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
