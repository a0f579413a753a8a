#pragma once

// Cross-checks between the closed forms and the simulator, and a
// brute-force grid search over the threshold.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "aoi/analytic.hpp"
#include "aoi/simulator.hpp"
#include "aoi/stats.hpp"

namespace aoi {

inline constexpr double kDefaultRelTol = 0.01;

struct Verdict {
  double q = 0.0;
  int sources = 1;
  Feedback setting = Feedback::None;
  Time gamma = 0.0;
  double analytic = 0.0;
  double sim_mean = 0.0;
  double sim_ci = 0.0;
  std::uint64_t epochs = 0;
  bool pass = false;
};

inline SimConfig make_sim_config(double q, int sources, Feedback setting, Time gamma,
                                 std::uint64_t epochs_per_source, std::uint64_t seed) {
  SimConfig cfg;
  cfg.channel.q = q;
  cfg.sources = sources;
  cfg.policy = PolicySpec::for_setting(setting, sources, gamma);
  cfg.stop = EpochTarget{epochs_per_source};
  cfg.seed = seed;
  return cfg;
}

// PASS iff |sim - analytic| <= max(3 * ci, rel_tol * analytic).
inline bool within_tolerance(double sim, double ci, double analytic, double rel_tol) {
  return std::abs(sim - analytic) <= std::max(3.0 * ci, rel_tol * analytic);
}

inline Verdict validate(double q, int sources, Feedback setting, Time gamma, std::uint64_t n_epochs,
                        std::uint64_t seed, double rel_tol = kDefaultRelTol) {
  const auto out = run_simulation(make_sim_config(q, sources, setting, gamma, n_epochs, seed));
  Verdict v;
  v.q = q;
  v.sources = sources;
  v.setting = setting;
  v.gamma = gamma;
  v.analytic = aoi_closed_form(q, sources, setting, gamma);
  v.sim_mean = out.result.mean;
  v.sim_ci = out.result.ci;
  v.epochs = n_epochs;
  v.pass = within_tolerance(v.sim_mean, v.sim_ci, v.analytic, rel_tol);
  return v;
}

inline constexpr Time kGridOracleUpper = 5.0;

inline std::vector<Time> gamma_grid(Time step, Time upper = kGridOracleUpper) {
  require(step > 0.0, "grid step must be > 0");
  std::vector<Time> g;
  const auto n = static_cast<long>(std::floor(upper / step + 1e-9));
  g.reserve(n + 1);
  for (long i = 0; i <= n; ++i) g.push_back(i * step);
  return g;
}

// Grid argmin of the closed form on {0, step, ..., 5}.
inline Time grid_oracle_gamma(double q, int sources, Feedback setting, Time step) {
  const auto grid = gamma_grid(step);
  Time best = grid.front();
  double best_val = aoi_closed_form(q, sources, setting, best);
  for (Time g : grid) {
    const double v = aoi_closed_form(q, sources, setting, g);
    if (v < best_val) {
      best_val = v;
      best = g;
    }
  }
  return best;
}

struct SimGridSearch {
  std::vector<Time> gamma;
  std::vector<double> mean;
  std::vector<double> ci;
  std::size_t argmin = 0;

  // Grid points statistically indistinguishable from the empirical minimum:
  // their lower CI bound does not exceed the minimum's upper bound.
  bool in_min_band(std::size_t i) const { return mean[i] - ci[i] <= mean[argmin] + ci[argmin]; }

  std::size_t nearest(Time g) const {
    std::size_t k = 0;
    for (std::size_t i = 1; i < gamma.size(); ++i)
      if (std::abs(gamma[i] - g) < std::abs(gamma[k] - g)) k = i;
    return k;
  }
};

// Simulation-backed grid search. Every grid point reuses `seed`, so the
// comparison runs on common random numbers.
inline SimGridSearch grid_oracle_gamma_sim(double q, int sources, Feedback setting, Time step,
                                           std::uint64_t n_epochs, std::uint64_t seed,
                                           Time upper = kGridOracleUpper) {
  SimGridSearch s;
  s.gamma = gamma_grid(step, upper);
  for (Time g : s.gamma) {
    const auto out = run_simulation(make_sim_config(q, sources, setting, g, n_epochs, seed));
    s.mean.push_back(out.result.mean);
    s.ci.push_back(out.result.ci);
  }
  for (std::size_t i = 1; i < s.mean.size(); ++i)
    if (s.mean[i] < s.mean[s.argmin]) s.argmin = i;
  return s;
}

}  // namespace aoi
