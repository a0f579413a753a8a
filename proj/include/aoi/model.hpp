#pragma once

// Domain types shared by the closed-form analytics and the simulator.
//
// Time is measured in units of the mean energy inter-arrival time (the
// harvesting rate is normalized to 1), so every quantity here is a plain
// double in those units.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aoi {

using Time = double;

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Erasure probabilities at or above this make every 1/(1-q)^2 term explode.
inline constexpr double kNearSingularErasure = 0.999;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidParameter(msg);
}

inline void check_erasure(double q) {
  require(!std::isnan(q), "q must be a number");
  require(q >= 0.0, "q must be >= 0");
  require(q < 1.0, "q must be < 1");
}

inline bool near_singular(double q) { return q >= kNearSingularErasure; }

struct ChannelSpec {
  double q = 0.0;     // per-attempt erasure probability
  double rate = 1.0;  // energy arrivals per unit time, fixed

  void validate() const {
    check_erasure(q);
    require(rate == 1.0, "energy arrival rate is normalized to 1");
  }
};

// Unit-capacity battery. level is 0 or 1; extra arrivals are lost.
class BatteryState {
 public:
  int level() const { return level_; }
  bool full() const { return level_ == 1; }

  // Returns false when the unit is discarded (battery already full).
  bool harvest() {
    if (level_ == 1) return false;
    level_ = 1;
    return true;
  }

  // Energy causality: an attempt needs a stored unit.
  void spend() {
    if (level_ != 1) throw SimulationError("transmission attempted with empty battery");
    level_ = 0;
  }

 private:
  int level_ = 0;
};

struct SourceState {
  int source_id = 0;          // 0-based internally, printed 1-based
  Time last_success = 0.0;    // u_j
  std::uint64_t successes = 0;

  Time age(Time t) const { return t - last_success; }
};

enum class Feedback { None, Perfect };
enum class Scheduler { Single, RoundRobin, MaxAgeFirst };
enum class Regime { Threshold, Greedy };

inline std::string_view to_string(Feedback f) { return f == Feedback::None ? "nofb" : "wfb"; }

inline std::string_view to_string(Scheduler s) {
  switch (s) {
    case Scheduler::Single: return "single";
    case Scheduler::RoundRobin: return "rr";
    case Scheduler::MaxAgeFirst: return "maf";
  }
  return "?";
}

inline std::string_view to_string(Regime r) { return r == Regime::Greedy ? "greedy" : "threshold"; }

inline Feedback parse_feedback(std::string_view s) {
  if (s == "nofb") return Feedback::None;
  if (s == "wfb") return Feedback::Perfect;
  throw InvalidParameter("setting must be 'nofb' or 'wfb', got '" + std::string(s) + "'");
}

struct PolicySpec {
  Feedback feedback = Feedback::None;
  Scheduler scheduler = Scheduler::Single;
  Time gamma = 0.0;  // 0 encodes greedy

  // The natural pairing: RR without feedback, MAF with it.
  static PolicySpec for_setting(Feedback fb, int sources, Time gamma) {
    Scheduler s = Scheduler::Single;
    if (sources > 1) s = fb == Feedback::None ? Scheduler::RoundRobin : Scheduler::MaxAgeFirst;
    return {fb, s, gamma};
  }

  void validate(int sources) const {
    require(sources >= 1, "number of sources must be >= 1");
    require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be >= 0");
    require((scheduler == Scheduler::Single) == (sources == 1),
            "single-source scheduler is used iff M = 1");
    if (feedback == Feedback::None)
      require(scheduler != Scheduler::MaxAgeFirst, "MAF scheduling needs erasure feedback");
    else
      require(scheduler != Scheduler::RoundRobin, "feedback runs use MAF scheduling");
  }
};

// One renewal cycle of a source: from one successful delivery to the next.
struct EpochRecord {
  int source_id = 0;
  Time y = 0.0;            // epoch length
  double R = 0.0;          // AoI area accumulated in the epoch
  std::uint32_t attempts = 0;
  Time first_wait = 0.0;   // epoch start (or turn start) to first attempt
};

struct AnalyticSolution {
  Regime regime = Regime::Threshold;
  Time lambda_star = 0.0;  // optimal long-term average AoI
  Time threshold = 0.0;    // lambda' without feedback, gamma* with it
  double q = 0.0;
  int sources = 1;
};

struct SimCounters {
  std::uint64_t energy_arrivals = 0;
  std::uint64_t overflows = 0;
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
};

struct SimResult {
  std::vector<double> source_mean;
  std::vector<double> source_ci;
  double mean = 0.0;  // cumulative average across sources
  double ci = 0.0;
  SimCounters counters;
  std::vector<std::uint64_t> epochs_per_source;
  std::uint64_t seed = 0;
  Time end_time = 0.0;
  std::vector<std::string> warnings;
};

// Area under a unit-slope age segment that starts at a_start and lasts
// duration: the trapezoid a_start*d + d^2/2.
inline double aoi_area_increment(Time a_start, Time duration) {
  require(a_start >= 0.0, "aoi_area_increment: starting age must be >= 0");
  require(duration >= 0.0, "aoi_area_increment: duration must be >= 0");
  return a_start * duration + 0.5 * duration * duration;
}

}  // namespace aoi
