#pragma once

// Discrete-event simulation of a unit-battery energy harvesting sensor
// updating M sources over an erasure channel.
//
// Each attempt empties the battery, so the engine only needs the first
// energy arrival after the previous attempt. Two arrival models provide it:
//  - FreshArrivals draws a new exp(1) wait after every attempt (memoryless
//    shortcut, used for untraced runs);
//  - PoissonStream walks a literal Poisson stream and reports the units
//    that hit a full battery as overflows (used for traced runs).
// Both produce the same process in distribution.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "aoi/model.hpp"
#include "aoi/rng.hpp"
#include "aoi/stats.hpp"

namespace aoi {

// Runs whose expected attempts per epoch exceed 1e4 are refused.
inline constexpr double kMaxSimErasure = 0.9999;

struct EpochTarget {
  std::uint64_t per_source = 100000;
};

struct Horizon {
  Time end = 0.0;
};

using StopRule = std::variant<EpochTarget, Horizon>;

struct SimConfig {
  ChannelSpec channel;
  int sources = 1;
  PolicySpec policy;
  StopRule stop = EpochTarget{};
  std::uint64_t seed = 1;
  // Reseeds only the erasure substream; arrivals stay tied to `seed`.
  std::optional<std::uint64_t> erasure_seed;
  bool trace = false;

  void validate() const {
    channel.validate();
    require(channel.q <= kMaxSimErasure, "q > 0.9999 needs more than 1e4 attempts per epoch; refusing to simulate");
    policy.validate(sources);
    if (const auto* e = std::get_if<EpochTarget>(&stop)) require(e->per_source >= 1, "target epochs must be >= 1");
    if (const auto* h = std::get_if<Horizon>(&stop)) require(h->end > 0.0, "horizon must be > 0");
  }
};

enum class EventKind { EnergyArrival, Overflow, Attempt, Erasure, Success };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::EnergyArrival: return "EnergyArrival";
    case EventKind::Overflow: return "Overflow";
    case EventKind::Attempt: return "Attempt";
    case EventKind::Erasure: return "Erasure";
    case EventKind::Success: return "Success";
  }
  return "?";
}

struct Event {
  Time time = 0.0;
  EventKind kind = EventKind::EnergyArrival;
  int source = -1;  // 0-based; -1 for energy events

  bool operator==(const Event&) const = default;
};

using EventLog = std::vector<Event>;

// time<TAB>kind<TAB>source_id, 9 decimals, sources printed 1-based and
// energy events with source 0.
inline void write_event_log(std::ostream& os, std::span<const Event> log) {
  char buf[96];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%.9f\t%s\t%d\n", e.time, to_string(e.kind), e.source + 1);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Policy rules

// Without feedback: the next attempt is gamma after the previous one, or at
// the first energy arrival if that comes later.
inline Time next_attempt_nofb(Time prev_attempt, Time fill, Time gamma) {
  return std::max(prev_attempt + gamma, fill);
}

// With feedback: threshold after a success, greedy after an erasure.
inline Time next_attempt_wfb(Time prev_attempt, bool prev_success, Time fill, Time gamma) {
  return prev_success ? std::max(prev_attempt + gamma, fill) : fill;
}

class RoundRobinScheduler {
 public:
  explicit RoundRobinScheduler(int sources) : sources_(sources) {}

  int next() {
    const int s = next_;
    next_ = (next_ + 1) % sources_;
    return s;
  }

 private:
  int sources_;
  int next_ = 0;
};

// Oldest last-success time means the largest age. Lowest index wins ties.
inline int max_age_first(std::span<const Time> last_success) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(last_success.size()); ++j)
    if (last_success[j] < last_success[best]) best = j;
  return best;
}

// ---------------------------------------------------------------------------
// Arrival models

class FreshArrivals {
 public:
  explicit FreshArrivals(RandomStream rng) : rng_(rng) {}

  Time first_after(Time t) { return t + rng_.exponential(); }

  template <class OnOverflow>
  void drain_before(Time, OnOverflow&&) {}

 private:
  RandomStream rng_;
};

class PoissonStream {
 public:
  explicit PoissonStream(RandomStream rng) : rng_(rng) { next_ = rng_.exponential(); }

  // The caller has drained every arrival strictly before t.
  Time first_after(Time t) {
    while (next_ < t) next_ += rng_.exponential();
    const Time a = next_;
    next_ += rng_.exponential();
    return a;
  }

  // Arrivals strictly before t find the battery full.
  template <class OnOverflow>
  void drain_before(Time t, OnOverflow&& on_overflow) {
    while (next_ < t) {
      on_overflow(next_);
      next_ += rng_.exponential();
    }
  }

 private:
  RandomStream rng_;
  Time next_ = 0.0;
};

// ---------------------------------------------------------------------------
// Engine

struct SimOutput {
  SimResult result;
  std::vector<EpochRecord> epochs;
  std::optional<EventLog> log;
};

namespace detail {

struct SourceTrack {
  Time last_success = 0.0;
  Time mark = 0.0;     // time up to which area has been accumulated
  double area = 0.0;   // area of the open epoch so far
  std::uint32_t attempts = 0;
  Time first_wait = 0.0;
  std::uint64_t epochs = 0;
};

template <class Arrivals>
SimOutput run_engine(const SimConfig& cfg, Arrivals arrivals, RandomStream erasures) {
  const int M = cfg.sources;
  const double q = cfg.channel.q;
  const Time gamma = cfg.policy.gamma;
  const bool feedback = cfg.policy.feedback == Feedback::Perfect;
  const auto* target = std::get_if<EpochTarget>(&cfg.stop);
  const auto* horizon = std::get_if<Horizon>(&cfg.stop);

  SimOutput out;
  if (cfg.trace) out.log.emplace();
  auto emit = [&](Time t, EventKind k, int s) {
    if (out.log) out.log->push_back({t, k, s});
  };

  std::vector<SourceTrack> track(M);
  std::vector<Time> last_success(M, 0.0);
  SimCounters& counters = out.result.counters;
  BatteryState battery;
  RoundRobinScheduler rr(M);

  Time t = 0.0;  // previous attempt; battery is empty right after it
  bool prev_success = true;
  int current = feedback ? max_age_first(last_success) : rr.next();
  int sources_done = 0;

  for (;;) {
    const Time fill = arrivals.first_after(t);
    const Time attempt =
        feedback ? next_attempt_wfb(t, prev_success, fill, gamma) : next_attempt_nofb(t, fill, gamma);

    if (horizon && attempt > horizon->end) {
      if (fill <= horizon->end) {
        ++counters.energy_arrivals;
        emit(fill, EventKind::EnergyArrival, -1);
        arrivals.drain_before(horizon->end, [&](Time a) {
          ++counters.energy_arrivals;
          ++counters.overflows;
          emit(a, EventKind::Overflow, -1);
        });
      }
      break;
    }

    ++counters.energy_arrivals;
    battery.harvest();
    emit(fill, EventKind::EnergyArrival, -1);
    arrivals.drain_before(attempt, [&](Time a) {
      ++counters.energy_arrivals;
      ++counters.overflows;
      battery.harvest();
      emit(a, EventKind::Overflow, -1);
    });

    battery.spend();
    ++counters.attempts;
    emit(attempt, EventKind::Attempt, current);

    SourceTrack& s = track[current];
    s.area += aoi_area_increment(s.mark - s.last_success, attempt - s.mark);
    s.mark = attempt;
    if (s.attempts++ == 0) s.first_wait = attempt - t;

    const bool success = !erasures.bernoulli(q);
    if (success) {
      ++counters.successes;
      emit(attempt, EventKind::Success, current);
      out.epochs.push_back({current, attempt - s.last_success, s.area, s.attempts, s.first_wait});
      s.last_success = attempt;
      s.area = 0.0;
      s.attempts = 0;
      last_success[current] = attempt;
      if (target && ++s.epochs == target->per_source) ++sources_done;
    } else {
      emit(attempt, EventKind::Erasure, current);
    }

    t = attempt;
    prev_success = success;
    if (!feedback)
      current = rr.next();
    else if (success)
      current = max_age_first(last_success);

    if (target && sources_done == M) break;
  }

  // Aggregate per-source estimates.
  SimResult& res = out.result;
  res.seed = cfg.seed;
  res.end_time = horizon ? horizon->end : t;
  res.source_mean.assign(M, 0.0);
  res.source_ci.assign(M, 0.0);
  res.epochs_per_source.assign(M, 0);
  for (int j = 0; j < M; ++j) {
    const auto mine = epochs_of(out.epochs, j);
    res.epochs_per_source[j] = mine.size();
    if (horizon) {
      // Time-windowed estimator: closed epochs plus the open tail to T.
      const SourceTrack& s = track[j];
      double area = s.area + aoi_area_increment(s.mark - s.last_success, horizon->end - s.mark);
      for (const auto& e : mine) area += e.R;
      res.source_mean[j] = area / horizon->end;
      res.source_ci[j] = batch_means_half_width(mine);
      if (mine.empty()) res.warnings.push_back("horizon too short to record a single epoch for source " +
                                               std::to_string(j + 1));
    } else {
      const auto est = renewal_estimate(mine);
      res.source_mean[j] = est.point;
      res.source_ci[j] = est.ci_half_width;
      if (est.small_sample) res.warnings.push_back("fewer than 30 epochs; CI is unreliable");
    }
  }
  // The cross-source mean of correlated estimates has a half-width no larger
  // than the mean of the per-source half-widths.
  for (int j = 0; j < M; ++j) {
    res.mean += res.source_mean[j] / M;
    res.ci += res.source_ci[j] / M;
  }
  return out;
}

}  // namespace detail

inline SimOutput run_simulation(const SimConfig& cfg) {
  cfg.validate();
  RandomStream arrivals(cfg.seed, StreamId::Arrivals);
  RandomStream erasures(cfg.erasure_seed.value_or(cfg.seed), StreamId::Erasures);
  if (cfg.trace) return detail::run_engine(cfg, PoissonStream(arrivals), erasures);
  return detail::run_engine(cfg, FreshArrivals(arrivals), erasures);
}

// ---------------------------------------------------------------------------
// Event-log audit

struct LogAudit {
  bool ok = true;
  std::string first_violation;
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
};

// Replays the battery from the log and checks ordering, energy causality,
// and that each attempt resolves at the same instant.
inline LogAudit audit_event_log(std::span<const Event> log) {
  LogAudit a;
  auto fail = [&](std::size_t i, const std::string& why) {
    if (a.ok) a.first_violation = "event " + std::to_string(i) + ": " + why;
    a.ok = false;
  };
  int level = 0;
  Time prev = -std::numeric_limits<Time>::infinity();
  for (std::size_t i = 0; i < log.size(); ++i) {
    const Event& e = log[i];
    if (e.time < prev) fail(i, "time went backwards");
    prev = e.time;
    switch (e.kind) {
      case EventKind::EnergyArrival:
        if (level != 0) fail(i, "arrival stored into a full battery");
        level = 1;
        break;
      case EventKind::Overflow:
        if (level != 1) fail(i, "overflow with a non-full battery");
        break;
      case EventKind::Attempt:
        ++a.attempts;
        if (level != 1) fail(i, "attempt without stored energy");
        level = 0;
        if (i + 1 >= log.size()) {
          fail(i, "attempt without outcome");
        } else {
          const Event& o = log[i + 1];
          if ((o.kind != EventKind::Erasure && o.kind != EventKind::Success) || o.time != e.time ||
              o.source != e.source)
            fail(i, "attempt not followed by its outcome at the same instant");
        }
        break;
      case EventKind::Success:
        ++a.successes;
        [[fallthrough]];
      case EventKind::Erasure:
        if (i == 0 || log[i - 1].kind != EventKind::Attempt) fail(i, "outcome without attempt");
        break;
    }
    if (level < 0 || level > 1) fail(i, "battery level out of range");
  }
  return a;
}

}  // namespace aoi
