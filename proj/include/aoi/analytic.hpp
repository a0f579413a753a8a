#pragma once

// Closed-form long-term average AoI for the unit-battery erasure channel,
// the optimal-threshold solvers for one source, and the multi-source
// round-robin / max-age-first expressions.
//
// Notation used below: k = q/(1-q) is the expected number of erased
// attempts before a success, and (m1, m2) are the first two moments of
// max{gamma, tau} for tau ~ exp(1).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

#include "aoi/model.hpp"

namespace aoi {

struct RootSolverConfig {
  Time bracket_lo = 0.0;
  Time bracket_hi = 50.0;
  double tol = 1e-12;
  int max_iter = 200;

  void validate() const {
    require(bracket_lo < bracket_hi, "root solver bracket must satisfy lo < hi");
    require(tol > 0.0, "root solver tolerance must be > 0");
    require(max_iter > 0, "root solver max_iter must be > 0");
  }
};

struct MaxMoments {
  double m1 = 0.0;  // E[max{gamma, tau}]
  double m2 = 0.0;  // E[max{gamma, tau}^2]
};

// Bisection on a bracket with a sign change. f(lo) and f(hi) may be zero.
template <class F>
Time bisect(F&& f, Time lo, Time hi, const RootSolverConfig& cfg) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw SolverError("bisection bracket [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "] does not straddle a sign change");
  for (int it = 0; it < cfg.max_iter; ++it) {
    const Time mid = 0.5 * (lo + hi);
    if (hi - lo <= cfg.tol || mid == lo || mid == hi) return mid;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  throw SolverError("bisection did not converge within max_iter");
}

// Golden-section minimization of a unimodal f on [lo, hi].
template <class F>
Time golden_section_min(F&& f, Time lo, Time hi, double tol, int max_iter) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  Time c = hi - inv_phi * (hi - lo);
  Time d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter; ++it) {
    if (hi - lo <= tol) return 0.5 * (lo + hi);
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  if (hi - lo <= tol) return 0.5 * (lo + hi);
  throw SolverError("golden-section search did not converge within max_iter");
}

inline MaxMoments exp_max_moments(Time gamma) {
  require(gamma >= 0.0, "gamma must be >= 0");
  const double e = std::exp(-gamma);
  return {gamma + e, gamma * gamma + 2.0 * (gamma + 1.0) * e};
}

// Auxiliary objective without feedback, as a function of the threshold
// lambda'. Its zero gives the optimal threshold for q < 1/2.
inline double p_nofb(Time lambda_prime, double q) {
  require(lambda_prime >= 0.0, "lambda' must be >= 0");
  check_erasure(q);
  const double e = std::exp(-lambda_prime);
  const double m1 = lambda_prime + e;
  return ((1.0 - q) * (e - 0.5 * lambda_prime * lambda_prime) - q * m1 * m1) /
         ((1.0 - q) * (1.0 - q));
}

// Right-hand side of the lambda <-> lambda' relation without feedback.
inline Time nofb_aoi_from_threshold(Time lambda_prime, double q) {
  return (1.0 + q) / (1.0 - q) * lambda_prime + 2.0 * q / (1.0 - q) * std::exp(-lambda_prime);
}

inline AnalyticSolution solve_nofb(double q, const RootSolverConfig& cfg = {}) {
  check_erasure(q);
  cfg.validate();
  AnalyticSolution sol;
  sol.q = q;
  if (q >= 0.5) {
    sol.regime = Regime::Greedy;
    sol.threshold = 0.0;
    sol.lambda_star = 1.0 / (1.0 - q);
    return sol;
  }
  const Time lp = bisect([q](Time l) { return p_nofb(l, q); }, cfg.bracket_lo, cfg.bracket_hi, cfg);
  sol.regime = Regime::Threshold;
  sol.threshold = lp;
  sol.lambda_star = nofb_aoi_from_threshold(lp, q);
  return sol;
}

// Auxiliary objective with feedback (threshold-greedy policies). The two
// branches meet continuously at lambda = q/(1-q).
inline double p_wfb(Time lambda, double q) {
  require(lambda >= 0.0, "lambda must be >= 0");
  check_erasure(q);
  const double k = q / (1.0 - q);
  const double c = (2.0 * q - q * q) / ((1.0 - q) * (1.0 - q));
  if (lambda < k) return 1.0 - lambda / (1.0 - q) + c;
  return std::exp(-(lambda - k)) - 0.5 * lambda * lambda + 0.5 * c;
}

// Residual of the fixed-point equation for lambda* with feedback.
inline double wfb_residual(Time lambda, double q) {
  const double k = q / (1.0 - q);
  const double c = (2.0 * q - q * q) / (2.0 * (1.0 - q) * (1.0 - q));
  return std::exp(-(lambda - k)) + c - 0.5 * lambda * lambda;
}

// The root lies above q/(1-q), which itself grows without bound as q -> 1,
// so the bracket is applied to the threshold gamma = lambda - q/(1-q).
inline AnalyticSolution solve_wfb(double q, const RootSolverConfig& cfg = {}) {
  check_erasure(q);
  cfg.validate();
  const double k = q / (1.0 - q);
  const double c = (2.0 * q - q * q) / (2.0 * (1.0 - q) * (1.0 - q));
  const auto h = [k, c](Time g) { return std::exp(-g) + c - 0.5 * (g + k) * (g + k); };
  const Time gamma = bisect(h, std::max(cfg.bracket_lo, 0.0), cfg.bracket_hi, cfg);
  AnalyticSolution sol;
  sol.q = q;
  sol.regime = gamma > 0.0 ? Regime::Threshold : Regime::Greedy;
  sol.threshold = gamma;
  sol.lambda_star = gamma + k;
  return sol;
}

// Round robin + gamma-threshold, no feedback.
inline Time aoi_rr_nofb(double q, int sources, Time gamma) {
  check_erasure(q);
  require(sources >= 1, "number of sources must be >= 1");
  const auto [m1, m2] = exp_max_moments(gamma);
  const double M = sources;
  return m2 / (2.0 * m1) + ((M - 1.0) / 2.0 + M * q / (1.0 - q)) * m1;
}

// Max-age-first + gamma-threshold-greedy, with feedback. Built from the
// per-turn service time alpha = max{gamma, tau_1} + (greedy retries):
//   a = E[alpha], s = E[alpha^2], AoI = s/(2a) + (M-1)a/2.
inline Time aoi_maf_wfb(double q, int sources, Time gamma) {
  check_erasure(q);
  require(sources >= 1, "number of sources must be >= 1");
  const auto [m1, m2] = exp_max_moments(gamma);
  const double k = q / (1.0 - q);
  const double a = m1 + k;
  const double s = m2 + 2.0 * m1 * k + 2.0 * q / ((1.0 - q) * (1.0 - q));
  return s / (2.0 * a) + (sources - 1.0) * a / 2.0;
}

inline Time aoi_closed_form(double q, int sources, Feedback fb, Time gamma) {
  return fb == Feedback::None ? aoi_rr_nofb(q, sources, gamma) : aoi_maf_wfb(q, sources, gamma);
}

struct GammaOptimum {
  Time gamma_star = 0.0;
  Time aoi = 0.0;
};

// Points in the coarse scan that seeds the golden-section refinement. The
// objective can have a local minimum at gamma = 0 and another in the
// interior, so a single unimodal search over the whole bracket is unsafe.
inline constexpr int kGammaScanPoints = 2000;
// Relative slack under which gamma = 0 wins a tie against the interior.
inline constexpr double kBoundaryTieRel = 1e-13;

inline GammaOptimum optimize_gamma(double q, int sources, Feedback fb, const RootSolverConfig& cfg = {}) {
  check_erasure(q);
  require(sources >= 1, "number of sources must be >= 1");
  cfg.validate();
  const Time lo = std::max(cfg.bracket_lo, 0.0);
  const Time hi = cfg.bracket_hi;
  const auto f = [&](Time g) { return aoi_closed_form(q, sources, fb, g); };

  const Time step = (hi - lo) / kGammaScanPoints;
  int best = 0;
  double best_val = f(lo);
  for (int i = 1; i <= kGammaScanPoints; ++i) {
    const double v = f(lo + i * step);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const Time a = lo + std::max(best - 1, 0) * step;
  const Time b = lo + std::min(best + 1, kGammaScanPoints) * step;
  const Time g = golden_section_min(f, a, b, cfg.tol, cfg.max_iter);

  const double f0 = f(0.0);
  const double fg = f(g);
  if (f0 <= fg + kBoundaryTieRel * std::abs(fg)) return {0.0, f0};
  return {g, fg};
}

inline Time baseline_infinite_battery(double q, Feedback fb) {
  check_erasure(q);
  return fb == Feedback::None ? (1.0 + q) / (2.0 * (1.0 - q)) : 1.0 / (2.0 * (1.0 - q));
}

// Single-source AoI reduction obtained from feedback.
inline Time feedback_gain(double q, const RootSolverConfig& cfg = {}) {
  return solve_nofb(q, cfg).lambda_star - solve_wfb(q, cfg).lambda_star;
}

// (1 - wFB/noFB) * 100 with both settings at their optimal thresholds.
inline double percentage_gain(double q, int sources, const RootSolverConfig& cfg = {}) {
  const auto nofb = optimize_gamma(q, sources, Feedback::None, cfg);
  const auto wfb = optimize_gamma(q, sources, Feedback::Perfect, cfg);
  return (1.0 - wfb.aoi / nofb.aoi) * 100.0;
}

}  // namespace aoi
