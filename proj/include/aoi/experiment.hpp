#pragma once

// Experiment descriptions, their flat key = value config format, and the
// sweep / validate drivers that turn a parameter grid into CSV rows.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "aoi/analytic.hpp"
#include "aoi/simulator.hpp"
#include "aoi/stats.hpp"
#include "aoi/validation.hpp"

namespace aoi {

struct GammaChoice {
  bool optimal = false;
  Time value = 0.0;

  static GammaChoice fixed(Time g) { return {false, g}; }
  static GammaChoice best() { return {true, 0.0}; }
  bool operator==(const GammaChoice&) const = default;
};

struct ExperimentSpec {
  std::string command = "sweep";
  std::vector<double> q;
  std::vector<int> m;
  std::vector<Feedback> settings;
  std::vector<GammaChoice> gamma;
  std::uint64_t epochs = 0;  // 0 disables simulation columns in a sweep
  std::uint64_t seed = 1;
  int replications = 1;
  std::string out;
  bool trace = false;
  bool gains = false;

  bool operator==(const ExperimentSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Formatting

inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Shortest text that parses back to the same double.
inline std::string exact(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    auto item = trim(s.substr(start, end - start));
    if (!item.empty()) items.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw InvalidParameter("not a number: '" + s + "'");
  return v;
}

template <class Int>
Int parse_int(const std::string& s) {
  Int v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw InvalidParameter("not an integer: '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InvalidParameter("not a boolean: '" + s + "'");
}

inline GammaChoice parse_gamma(const std::string& s) {
  if (s == "optimal") return GammaChoice::best();
  const double g = parse_double(s);
  require(g >= 0.0, "gamma must be >= 0");
  return GammaChoice::fixed(g);
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += f(v[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Config file: one `key = value` per line, lists comma-separated, '#' starts
// a comment line.

inline std::string to_config_text(const ExperimentSpec& e) {
  std::ostringstream os;
  os << "command = " << e.command << '\n'
     << "q = " << join(e.q, [](double v) { return exact(v); }) << '\n'
     << "m = " << join(e.m, [](int v) { return std::to_string(v); }) << '\n'
     << "setting = " << join(e.settings, [](Feedback f) { return std::string(to_string(f)); }) << '\n'
     << "gamma = "
     << join(e.gamma, [](const GammaChoice& g) { return g.optimal ? std::string("optimal") : exact(g.value); })
     << '\n'
     << "epochs = " << e.epochs << '\n'
     << "seed = " << e.seed << '\n'
     << "replications = " << e.replications << '\n'
     << "out = " << e.out << '\n'
     << "trace = " << (e.trace ? "true" : "false") << '\n'
     << "gains = " << (e.gains ? "true" : "false") << '\n';
  return os.str();
}

// Applies one key to the spec; unknown keys are an error.
inline void apply_setting(ExperimentSpec& e, const std::string& key, const std::string& value) {
  if (key == "command") {
    e.command = value;
  } else if (key == "q") {
    e.q.clear();
    for (const auto& s : split_list(value)) e.q.push_back(parse_double(s));
  } else if (key == "m") {
    e.m.clear();
    for (const auto& s : split_list(value)) e.m.push_back(parse_int<int>(s));
  } else if (key == "setting") {
    e.settings.clear();
    for (const auto& s : split_list(value)) e.settings.push_back(parse_feedback(s));
  } else if (key == "gamma") {
    e.gamma.clear();
    for (const auto& s : split_list(value)) e.gamma.push_back(parse_gamma(s));
  } else if (key == "epochs") {
    e.epochs = parse_int<std::uint64_t>(value);
  } else if (key == "seed") {
    e.seed = parse_int<std::uint64_t>(value);
  } else if (key == "replications") {
    e.replications = parse_int<int>(value);
  } else if (key == "out") {
    e.out = value;
  } else if (key == "trace") {
    e.trace = parse_bool(value);
  } else if (key == "gains") {
    e.gains = parse_bool(value);
  } else {
    throw InvalidParameter("unknown config key '" + key + "'");
  }
}

inline ExperimentSpec parse_config_text(std::string_view text, ExperimentSpec base = {}) {
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidParameter("config line " + std::to_string(lineno) + ": expected 'key = value'");
    apply_setting(base, trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
  return base;
}

inline void validate_grid(const ExperimentSpec& e) {
  require(!e.q.empty(), "q grid is empty");
  require(!e.m.empty(), "M grid is empty");
  require(!e.settings.empty(), "setting list is empty");
  require(!e.gamma.empty(), "gamma list is empty");
  for (double q : e.q) check_erasure(q);
  for (int m : e.m) require(m >= 1, "M must be >= 1");
  require(e.replications >= 1, "replications must be >= 1");
}

// The default validation grid: q x M x both settings at gamma in {0, gamma*}.
inline ExperimentSpec default_validation_grid() {
  ExperimentSpec e;
  e.command = "validate";
  e.q = {0.1, 0.3, 0.5, 0.7};
  e.m = {1, 2, 4, 8};
  e.settings = {Feedback::None, Feedback::Perfect};
  e.gamma = {GammaChoice::fixed(0.0), GammaChoice::best()};
  e.epochs = 100000;
  return e;
}

// ---------------------------------------------------------------------------
// Parallel evaluation with deterministic output order.

template <class Cell, class Fn>
auto parallel_map(const std::vector<Cell>& cells, Fn&& fn) {
  using R = decltype(fn(cells.front()));
  std::vector<R> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = std::min<std::size_t>(hw, cells.size());
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        results[i] = fn(cells[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  return results;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepCell {
  double q = 0.0;
  int sources = 1;
  Feedback setting = Feedback::None;
  GammaChoice gamma;
};

struct SweepRow {
  SweepCell cell;
  Time gamma = 0.0;
  double analytic = 0.0;
  Time gamma_star = 0.0;
  double baseline = 0.0;
  std::optional<double> sim_mean;
  std::optional<double> sim_ci;
  std::optional<bool> pass;
};

inline constexpr std::string_view kSweepHeader =
    "q,M,setting,gamma,analytic_aoi,gamma_star,baseline_inf_battery,sim_mean,sim_ci,verdict";

// Cells in q, then M, then setting (nofb first), then gamma list order.
inline std::vector<SweepCell> expand_grid(const ExperimentSpec& e) {
  auto qs = e.q;
  auto ms = e.m;
  std::sort(qs.begin(), qs.end());
  std::sort(ms.begin(), ms.end());
  auto settings = e.settings;
  std::stable_sort(settings.begin(), settings.end());
  std::vector<SweepCell> cells;
  for (double q : qs)
    for (int m : ms)
      for (Feedback f : settings)
        for (const auto& g : e.gamma) cells.push_back({q, m, f, g});
  return cells;
}

// Pools the epochs of `replications` runs seeded seed, seed+1, ...
inline SimResult simulate_replicated(SimConfig cfg, int replications) {
  if (replications <= 1) return run_simulation(cfg).result;
  std::vector<std::vector<EpochRecord>> per_source(cfg.sources);
  SimResult pooled;
  const std::uint64_t base = cfg.seed;
  for (int r = 0; r < replications; ++r) {
    cfg.seed = base + static_cast<std::uint64_t>(r);
    auto out = run_simulation(cfg);
    for (const auto& ep : out.epochs) per_source[ep.source_id].push_back(ep);
    pooled.counters.energy_arrivals += out.result.counters.energy_arrivals;
    pooled.counters.overflows += out.result.counters.overflows;
    pooled.counters.attempts += out.result.counters.attempts;
    pooled.counters.successes += out.result.counters.successes;
    for (auto& w : out.result.warnings) pooled.warnings.push_back(std::move(w));
  }
  pooled.seed = base;
  for (const auto& eps : per_source) {
    const auto est = renewal_estimate(eps);
    pooled.source_mean.push_back(est.point);
    pooled.source_ci.push_back(est.ci_half_width);
    pooled.epochs_per_source.push_back(eps.size());
    pooled.mean += est.point / cfg.sources;
    pooled.ci += est.ci_half_width / cfg.sources;
  }
  return pooled;
}

inline SweepRow evaluate_cell(const SweepCell& c, const ExperimentSpec& e, double rel_tol = kDefaultRelTol) {
  SweepRow row;
  row.cell = c;
  const auto opt = optimize_gamma(c.q, c.sources, c.setting);
  row.gamma_star = opt.gamma_star;
  row.gamma = c.gamma.optimal ? opt.gamma_star : c.gamma.value;
  row.analytic = aoi_closed_form(c.q, c.sources, c.setting, row.gamma);
  row.baseline = baseline_infinite_battery(c.q, c.setting);
  if (e.epochs > 0) {
    const auto cfg = make_sim_config(c.q, c.sources, c.setting, row.gamma, e.epochs, e.seed);
    const auto res = simulate_replicated(cfg, e.replications);
    row.sim_mean = res.mean;
    row.sim_ci = res.ci;
    row.pass = within_tolerance(res.mean, res.ci, row.analytic, rel_tol);
  }
  return row;
}

inline std::string to_csv_row(const SweepRow& r) {
  std::string s = fmt6(r.cell.q) + ',' + std::to_string(r.cell.sources) + ',' +
                  std::string(to_string(r.cell.setting)) + ',' + fmt6(r.gamma) + ',' + fmt6(r.analytic) +
                  ',' + fmt6(r.gamma_star) + ',' + fmt6(r.baseline) + ',';
  s += r.sim_mean ? fmt6(*r.sim_mean) : "";
  s += ',';
  s += r.sim_ci ? fmt6(*r.sim_ci) : "";
  s += ',';
  if (r.pass) s += *r.pass ? "PASS" : "FAIL";
  return s;
}

inline std::vector<SweepRow> run_sweep(const ExperimentSpec& e) {
  validate_grid(e);
  const auto cells = expand_grid(e);
  return parallel_map(cells, [&](const SweepCell& c) { return evaluate_cell(c, e); });
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kSweepHeader << '\n';
  for (const auto& r : rows) os << to_csv_row(r) << '\n';
}

// Feedback gain table: optimal AoI in both settings, their difference and
// the percentage gain.
inline constexpr std::string_view kGainsHeader = "q,M,aoi_nofb,aoi_wfb,gain,percentage_gain";

inline void write_gains_csv(std::ostream& os, const ExperimentSpec& e) {
  require(!e.q.empty() && !e.m.empty(), "gains table needs q and M grids");
  auto qs = e.q;
  auto ms = e.m;
  std::sort(qs.begin(), qs.end());
  std::sort(ms.begin(), ms.end());
  struct Cell {
    double q;
    int m;
  };
  std::vector<Cell> cells;
  for (double q : qs)
    for (int m : ms) {
      check_erasure(q);
      require(m >= 1, "M must be >= 1");
      cells.push_back({q, m});
    }
  const auto lines = parallel_map(cells, [](const Cell& c) {
    const auto n = optimize_gamma(c.q, c.m, Feedback::None);
    const auto w = optimize_gamma(c.q, c.m, Feedback::Perfect);
    return fmt6(c.q) + ',' + std::to_string(c.m) + ',' + fmt6(n.aoi) + ',' + fmt6(w.aoi) + ',' +
           fmt6(n.aoi - w.aoi) + ',' + fmt6((1.0 - w.aoi / n.aoi) * 100.0);
  });
  os << kGainsHeader << '\n';
  for (const auto& l : lines) os << l << '\n';
}

}  // namespace aoi
