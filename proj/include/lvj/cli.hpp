#pragma once

// Command-line front end. Exit codes: 0 success, 1 verification failure,
// 2 usage or configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lvj/config.hpp"
#include "lvj/io.hpp"
#include "lvj/lyapunov.hpp"
#include "lvj/scenarios.hpp"
#include "lvj/simulate.hpp"
#include "lvj/stats.hpp"
#include "lvj/theorems.hpp"

namespace lvj::cli {

enum ExitCode : int { kOk = 0, kVerificationFailed = 1, kUsage = 2 };

/// Everything needed to reproduce a run. Flags override config values.
struct RunConfig {
  std::string config_path;
  std::string scenario;
  std::size_t paths = 1000;
  double horizon = 10.0;
  std::uint64_t seed = 7;
  double p = 0.5;
  std::vector<double> pvec;
  std::string out = "out";
  std::size_t threads = 1;
  double dt_max = 1e-3;
  std::size_t grid = 101;
  std::size_t dump_paths = 0;
  double alpha = 1.0;
  double beta = 2.0;
  std::string g_kind = "constant";
  std::vector<double> g_values{1.0};
  std::string h_kind = "constant";
  std::vector<double> h_values;
  std::vector<std::string> only;
  double scale = 1.0;

  nlohmann::json to_json() const {
    return {{"config", config_path}, {"scenario", scenario}, {"paths", paths},   {"horizon", horizon},
            {"seed", seed},          {"p", p},               {"pvec", pvec},     {"threads", threads},
            {"dt_max", dt_max},      {"grid", grid},         {"alpha", alpha},   {"beta", beta},
            {"g_kind", g_kind},      {"g_values", g_values}, {"h_kind", h_kind}, {"h_values", h_values}};
  }
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Model load_model(const RunConfig& rc) {
  if (!rc.config_path.empty() && !rc.scenario.empty())
    throw UsageError("use either --config or --scenario, not both");
  if (!rc.config_path.empty()) return load_model_file(rc.config_path);
  if (!rc.scenario.empty()) {
    try {
      return scenario(rc.scenario);
    } catch (const ModelError& e) {
      throw UsageError(e.what());
    }
  }
  throw UsageError("a model is required: pass --config FILE or --scenario NAME");
}

inline std::filesystem::path out_dir(const RunConfig& rc) {
  std::filesystem::path dir(rc.out);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

inline PathConfig path_config(const RunConfig& rc) {
  if (rc.paths == 0) throw UsageError("--paths must be positive");
  if (!(rc.horizon > 0.0)) throw UsageError("--horizon must be positive");
  if (!(rc.dt_max > 0.0)) throw UsageError("--dt must be positive");
  PathConfig cfg;
  cfg.horizon = rc.horizon;
  cfg.dt_max = std::min(rc.dt_max, rc.horizon);
  cfg.seed = rc.seed;
  return cfg;
}

inline Integrand integrand(const std::string& kind, const std::vector<double>& values) {
  if (kind == "constant") return Integrand::constant(values);
  if (kind == "norm") return Integrand::norm_scaled(values);
  throw UsageError("integrand kind must be constant or norm");
}

inline void write_run_config(const std::filesystem::path& dir, const RunConfig& rc, const Model& m,
                             const std::string& command) {
  nlohmann::json j = rc.to_json();
  j["command"] = command;
  j["model"] = model_to_json(m);
  auto f = open_out(dir / "run_config.json");
  f << j.dump(2) << '\n';
}

}  // namespace detail

inline int cmd_validate(const RunConfig& rc, std::ostream& out) {
  const auto model = detail::load_model(rc);
  const auto rep = validate_model(model);
  const auto dir = detail::out_dir(rc);
  auto f = detail::open_out(dir / "validation.json");
  f << io::validation_json(rep).dump(2) << '\n';
  out << "h2_holds=" << (rep.h2_holds ? "true" : "false") << " h1_pointwise_ok="
      << (rep.h1_pointwise_ok ? "true" : "false") << " x0_positive=" << (rep.x0_positive ? "true" : "false")
      << '\n';
  return rep.x0_positive ? kOk : kVerificationFailed;
}

inline int cmd_verify(const RunConfig& rc, std::ostream& out) {
  if (!(rc.p > 0.0 && rc.p < 1.0)) throw UsageError("--p must lie in (0,1) for verify");
  const auto model = detail::load_model(rc);
  std::vector<double> pvec = rc.pvec;
  if (pvec.empty()) pvec.assign(model.n, 0.5 / static_cast<double>(model.n));
  double s = 0.0;
  for (double v : pvec) s += v;
  if (pvec.size() != model.n || s >= 1.0)
    throw UsageError("--pvec needs n positive entries summing below 1");
  const auto rep = check_conditions(model, rc.p, pvec);
  const auto dir = detail::out_dir(rc);
  auto f = detail::open_out(dir / "conditions.csv");
  io::write_conditions(f, rep);
  io::write_conditions(out, rep);
  return kOk;
}

inline int cmd_simulate(const RunConfig& rc, std::ostream& out) {
  const auto model = detail::load_model(rc);
  if (!all_positive(model.x0)) throw UsageError("x0 must be strictly positive to simulate");
  if (!(rc.p > 0.0)) throw UsageError("--p must be positive");
  const auto cfg = detail::path_config(rc);
  const auto grid = uniform_grid(cfg.horizon, std::max<std::size_t>(rc.grid, 2));
  const auto sum = simulate_ensemble(model, cfg, rc.paths, grid, rc.threads);
  const auto dir = detail::out_dir(rc);

  const auto pos = positivity_report(sum);
  {
    // With every path exploded there is nothing to average: header only.
    auto f = detail::open_out(dir / "moments.csv");
    auto g = detail::open_out(dir / "time_avg_moments.csv");
    if (pos.exploded < sum.n_paths) {
      io::write_moments(f, estimate_moment(sum, rc.p));
      io::write_moments(g, time_avg_moment(sum, rc.p + 2.0));
    } else {
      io::write_moments(f, MomentCurve{});
      io::write_moments(g, MomentCurve{});
      out << "note: all paths exploded; moment files are empty\n";
    }
  }
  {
    auto f = detail::open_out(dir / "exponents.csv");
    io::write_exponents(f, sum);
  }
  {
    auto f = detail::open_out(dir / "statuses.csv");
    io::write_statuses(f, sum);
  }
  for (std::size_t i = 0; i < std::min(rc.dump_paths, rc.paths); ++i) {
    PathConfig pc = cfg;
    const auto path = simulate_path(model, pc, i);
    auto f = detail::open_out(dir / ("path_" + std::to_string(i) + ".csv"));
    io::write_path(f, path);
  }
  detail::write_run_config(dir, rc, model, "simulate");
  out << "paths=" << sum.n_paths << " completed=" << pos.completed << " exploded=" << pos.exploded
      << " hit_zero=" << pos.hit_zero << " nonpositive_states=" << pos.nonpositive_states << '\n';
  return kOk;
}

inline int cmd_martingale(const RunConfig& rc, std::ostream& out) {
  const auto model = detail::load_model(rc);
  if (!(rc.alpha > 0.0) || !(rc.beta > 0.0)) throw UsageError("--alpha and --beta must be positive");
  const auto cfg = detail::path_config(rc);
  const auto g = detail::integrand(rc.g_kind, rc.g_values);
  const auto h = detail::integrand(rc.h_kind, rc.h_values);
  if (g.values.size() > 1) throw UsageError("--g-value takes one number");
  if (!h.values.empty() && h.values.size() != 1 && h.values.size() != model.kernel.size())
    throw UsageError("--h-value takes one number or one per mark");
  const auto r = martingale_exceedance_test(model, cfg, rc.paths, rc.alpha, rc.beta, g, h, rc.threads);
  const auto dir = detail::out_dir(rc);
  auto f = detail::open_out(dir / "martingale.csv");
  io::write_martingale_header(f);
  io::write_martingale_row(f, r);
  detail::write_run_config(dir, rc, model, "martingale");
  io::write_martingale_header(out);
  io::write_martingale_row(out, r);
  return r.pass ? kOk : kVerificationFailed;
}

inline int cmd_theorems(const RunConfig& rc, std::ostream& out) {
  for (const auto& row : rc.only)
    if (std::find(theorem_rows().begin(), theorem_rows().end(), row) == theorem_rows().end())
      throw UsageError("unknown theorem row '" + row + "'");
  if (!(rc.scale > 0.0)) throw UsageError("--scale must be positive");
  BatteryOptions opt;
  opt.scale = rc.scale;
  opt.threads = rc.threads;
  opt.seed = rc.seed;
  TheoremBattery battery(opt);
  const auto verdicts = battery.run_all(rc.only);
  const auto dir = detail::out_dir(rc);
  auto f = detail::open_out(dir / "theorems.csv");
  f << "row,pass,detail\n";
  bool all = true;
  for (const auto& v : verdicts) {
    all = all && v.pass;
    f << v.row << ',' << (v.pass ? "true" : "false") << ",\"" << v.detail << "\"\n";
    out << (v.pass ? "[PASS] " : "[FAIL] ") << v.row << ": " << v.detail << '\n';
  }
  return all ? kOk : kVerificationFailed;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Stochastic Lotka-Volterra with jumps: simulation and condition verification"};
  app.require_subcommand(1);
  RunConfig rc;

  auto common = [&rc](CLI::App* sub) {
    sub->add_option("--config", rc.config_path, "model document (JSON)");
    sub->add_option("--scenario", rc.scenario, "built-in scenario name");
    sub->add_option("--out", rc.out, "output directory");
    sub->add_option("--seed", rc.seed, "random seed");
    sub->add_option("--threads", rc.threads, "worker threads (never changes output)");
    sub->add_option("--p", rc.p, "moment / Lyapunov exponent p");
  };
  auto sim_opts = [&rc](CLI::App* sub) {
    sub->add_option("--paths", rc.paths, "number of paths");
    sub->add_option("--horizon", rc.horizon, "time horizon T");
    sub->add_option("--dt", rc.dt_max, "base step dt_max");
  };

  auto* validate = app.add_subcommand("validate", "check model structure, (H1) and (H2)");
  common(validate);
  auto* verify = app.add_subcommand("verify", "fit the growth conditions and write conditions.csv");
  common(verify);
  verify->add_option("--pvec", rc.pvec, "product weights (sum < 1)")->delimiter(',');
  auto* simulate = app.add_subcommand("simulate", "run an ensemble and write moment/exponent/status CSVs");
  common(simulate);
  sim_opts(simulate);
  simulate->add_option("--grid", rc.grid, "number of grid points on [0, T]");
  simulate->add_option("--dump-paths", rc.dump_paths, "write path_<i>.csv for the first N paths");
  auto* martingale = app.add_subcommand("martingale", "exponential martingale exceedance test");
  common(martingale);
  sim_opts(martingale);
  martingale->add_option("--alpha", rc.alpha);
  martingale->add_option("--beta", rc.beta);
  martingale->add_option("--g-kind", rc.g_kind, "constant | norm");
  martingale->add_option("--g-value", rc.g_values);
  martingale->add_option("--h-kind", rc.h_kind, "constant | norm");
  martingale->add_option("--h-value", rc.h_values, "one value or one per mark")->delimiter(',');
  auto* theorems = app.add_subcommand("theorems", "run the verification battery");
  common(theorems);
  theorems->add_option("--only", rc.only, "restrict to these rows");
  theorems->add_option("--scale", rc.scale, "path-count multiplier");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(rc, out);
    if (*verify) return cmd_verify(rc, out);
    if (*simulate) return cmd_simulate(rc, out);
    if (*martingale) return cmd_martingale(rc, out);
    if (*theorems) return cmd_theorems(rc, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kVerificationFailed;
  }
  return kUsage;
}

}  // namespace lvj::cli
