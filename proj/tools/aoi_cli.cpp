// Command-line driver: closed-form solves, threshold optimization,
// simulation, figure sweeps as CSV, and simulation-vs-analytic validation.
//
// Exit codes: 0 ok, 1 solver/simulation failure, 2 usage error,
// 3 validation FAIL.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "aoi/aoi.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitValidationFail = 3;

constexpr std::uint64_t kDefaultSimEpochs = 100000;

struct Flags {
  std::string q, m, setting, gamma, epochs, seed, replications, out, config;
  bool trace = false;
  bool gains = false;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw aoi::InvalidParameter("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Config file first, then every flag given on the command line.
aoi::ExperimentSpec build_spec(const std::string& command, const Flags& f, const CLI::App& app) {
  aoi::ExperimentSpec spec;
  if (command == "validate") spec = aoi::default_validation_grid();
  if (!f.config.empty()) spec = aoi::parse_config_text(slurp(f.config), spec);
  spec.command = command;
  const std::pair<const char*, const std::string*> keyed[] = {
      {"q", &f.q},           {"m", &f.m},         {"setting", &f.setting},
      {"gamma", &f.gamma},   {"epochs", &f.epochs}, {"seed", &f.seed},
      {"replications", &f.replications},          {"out", &f.out}};
  for (const auto& [key, value] : keyed)
    if (app.count(std::string("--") + key) > 0) aoi::apply_setting(spec, key, *value);
  if (app.count("--trace") > 0) spec.trace = f.trace;
  if (app.count("--gains") > 0) spec.gains = f.gains;
  return spec;
}

double single_q(const aoi::ExperimentSpec& s) {
  aoi::require(s.q.size() == 1, "this command expects exactly one --q value");
  aoi::check_erasure(s.q.front());
  return s.q.front();
}

int single_m(const aoi::ExperimentSpec& s) {
  if (s.m.empty()) return 1;
  aoi::require(s.m.size() == 1, "this command expects exactly one --m value");
  aoi::require(s.m.front() >= 1, "M must be >= 1");
  return s.m.front();
}

aoi::Feedback single_setting(const aoi::ExperimentSpec& s) {
  aoi::require(s.settings.size() == 1, "this command expects exactly one --setting value");
  return s.settings.front();
}

aoi::Time resolve_gamma(const aoi::ExperimentSpec& s, double q, int m, aoi::Feedback fb) {
  if (s.gamma.empty() || s.gamma.front().optimal) return aoi::optimize_gamma(q, m, fb).gamma_star;
  aoi::require(s.gamma.size() == 1, "this command expects exactly one --gamma value");
  return s.gamma.front().value;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

void warn_if_near_singular(const std::vector<double>& qs) {
  for (double q : qs)
    if (aoi::near_singular(q)) warn("q = " + aoi::fmt6(q) + " is close to 1; results are ill-conditioned");
}

// Writes to --out when given, stdout otherwise.
template <class F>
void with_output(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write output file '" + path + "'");
  write(os);
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

int cmd_solve(const aoi::ExperimentSpec& s) {
  const double q = single_q(s);
  const auto fb = single_setting(s);
  const auto sol = fb == aoi::Feedback::None ? aoi::solve_nofb(q) : aoi::solve_wfb(q);
  std::cout << "setting: " << aoi::to_string(fb) << '\n'
            << "q: " << aoi::fmt6(q) << '\n'
            << "regime: " << aoi::to_string(sol.regime) << '\n'
            << "lambda_star: " << aoi::fmt6(sol.lambda_star) << '\n'
            << "threshold: " << aoi::fmt6(sol.threshold) << '\n';
  return kExitOk;
}

int cmd_eval(const aoi::ExperimentSpec& s) {
  const double q = single_q(s);
  const int m = single_m(s);
  const auto fb = single_setting(s);
  const auto gamma = resolve_gamma(s, q, m, fb);
  std::cout << "gamma: " << aoi::fmt6(gamma) << '\n'
            << "aoi: " << aoi::fmt6(aoi::aoi_closed_form(q, m, fb, gamma)) << '\n'
            << "baseline_inf_battery: " << aoi::fmt6(aoi::baseline_infinite_battery(q, fb)) << '\n';
  return kExitOk;
}

int cmd_optimize(const aoi::ExperimentSpec& s) {
  const double q = single_q(s);
  const int m = single_m(s);
  const auto fb = single_setting(s);
  const auto opt = aoi::optimize_gamma(q, m, fb);
  std::cout << "gamma_star: " << aoi::fmt6(opt.gamma_star) << '\n' << "aoi: " << aoi::fmt6(opt.aoi) << '\n';
  return kExitOk;
}

int cmd_simulate(const aoi::ExperimentSpec& s) {
  const double q = single_q(s);
  const int m = single_m(s);
  const auto fb = single_setting(s);
  const auto gamma = resolve_gamma(s, q, m, fb);
  auto cfg = aoi::make_sim_config(q, m, fb, gamma, s.epochs > 0 ? s.epochs : kDefaultSimEpochs, s.seed);
  cfg.trace = s.trace;
  const auto out = aoi::run_simulation(cfg);
  const auto& r = out.result;
  for (const auto& w : r.warnings) warn(w);
  if (out.log) with_output(s.out, [&](std::ostream& os) { aoi::write_event_log(os, *out.log); });

  std::ostream& os = out.log && s.out.empty() ? std::cerr : std::cout;
  os << "gamma: " << aoi::fmt6(gamma) << '\n'
     << "mean_aoi: " << aoi::fmt6(r.mean) << '\n'
     << "ci_half_width: " << aoi::fmt6(r.ci) << '\n'
     << "analytic_aoi: " << aoi::fmt6(aoi::aoi_closed_form(q, m, fb, gamma)) << '\n';
  for (int j = 0; j < m; ++j)
    os << "source " << j + 1 << ": " << aoi::fmt6(r.source_mean[j]) << " +- " << aoi::fmt6(r.source_ci[j])
       << " (" << r.epochs_per_source[j] << " epochs)\n";
  os << "energy_arrivals: " << r.counters.energy_arrivals << '\n'
     << "overflows: " << r.counters.overflows << '\n'
     << "attempts: " << r.counters.attempts << '\n'
     << "successes: " << r.counters.successes << '\n'
     << "seed: " << r.seed << '\n';
  return kExitOk;
}

aoi::ExperimentSpec with_sweep_defaults(aoi::ExperimentSpec s) {
  if (s.m.empty()) s.m = {1};
  if (s.settings.empty()) s.settings = {aoi::Feedback::None, aoi::Feedback::Perfect};
  if (s.gamma.empty()) s.gamma = {aoi::GammaChoice::best()};
  return s;
}

int cmd_sweep(aoi::ExperimentSpec s) {
  s = with_sweep_defaults(std::move(s));
  warn_if_near_singular(s.q);
  if (s.gains) {
    std::ostringstream buf;
    aoi::write_gains_csv(buf, s);
    with_output(s.out, [&](std::ostream& os) { os << buf.str(); });
    return kExitOk;
  }
  const auto rows = aoi::run_sweep(s);
  with_output(s.out, [&](std::ostream& os) { aoi::write_sweep_csv(os, rows); });
  return kExitOk;
}

int cmd_validate(aoi::ExperimentSpec s) {
  s = with_sweep_defaults(std::move(s));
  aoi::require(s.epochs > 0, "validate needs --epochs > 0");
  warn_if_near_singular(s.q);
  const auto rows = aoi::run_sweep(s);
  with_output(s.out, [&](std::ostream& os) { aoi::write_sweep_csv(os, rows); });

  int failed = 0;
  bool wide = false;
  for (const auto& r : rows) {
    if (r.pass && !*r.pass) ++failed;
    if (r.sim_ci && *r.sim_ci > aoi::kDefaultRelTol * r.analytic) wide = true;
  }
  if (wide) warn("CI too wide: some cells have a half-width above 1% of the analytic value; raise --epochs");
  std::cerr << rows.size() - failed << "/" << rows.size() << " cells PASS\n";
  return failed == 0 ? kExitOk : kExitValidationFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-of-information analytics and simulation for an energy harvesting sensor"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--q", f.q, "erasure probability, comma-separated list for grids");
  app.add_option("--m", f.m, "number of sources, comma-separated list for grids (default 1)");
  app.add_option("--setting", f.setting, "nofb | wfb, comma-separated (sweep default: both)");
  app.add_option("--gamma", f.gamma, "threshold value(s) or 'optimal' (default optimal)");
  app.add_option("--epochs", f.epochs,
                 "successful epochs per source (simulate default 100000; sweep default 0 = no simulation; "
                 "validate default 100000)");
  app.add_option("--seed", f.seed, "RNG seed (default 1)");
  app.add_option("--replications", f.replications, "independent runs pooled per cell (default 1)");
  app.add_option("--out", f.out, "output path (default stdout)");
  app.add_option("--config", f.config, "key = value configuration file; flags override it");
  app.add_flag("--trace", f.trace, "simulate: dump the event log (to --out or stdout)");
  app.add_flag("--gains", f.gains, "sweep: emit the feedback-gain table instead");

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"solve", "optimal single-source threshold and AoI"},
      {"eval", "closed-form AoI at a given threshold"},
      {"optimize", "optimal threshold for M sources"},
      {"simulate", "discrete-event simulation of one configuration"},
      {"sweep", "CSV over a parameter grid"},
      {"validate", "simulation vs closed form over a grid; exit 3 on any FAIL"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return e.get_exit_code() == 0 ? rc : kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto spec = build_spec(command, f, app);
    if (command == "solve") return cmd_solve(spec);
    if (command == "eval") return cmd_eval(spec);
    if (command == "optimize") return cmd_optimize(spec);
    if (command == "simulate") return cmd_simulate(spec);
    if (command == "sweep") return cmd_sweep(spec);
    if (command == "validate") return cmd_validate(spec);
  } catch (const aoi::InvalidParameter& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
