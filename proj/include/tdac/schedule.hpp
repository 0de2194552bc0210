#pragma once

#include <cmath>
#include <string>

#include "tdac/errors.hpp"

namespace tdac {

// Role of a step-size schedule.  The critic-eta role carries a fixed 0.95
// multiplier relative to its critic-w sibling, matching the benchmark
// configuration this library reproduces.
enum class ScheduleKind { single, critic_w, critic_eta, actor };

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::single: return "single";
    case ScheduleKind::critic_w: return "critic_w";
    case ScheduleKind::critic_eta: return "critic_eta";
    case ScheduleKind::actor: return "actor";
  }
  return "?";
}

// gamma_n = factor(kind) * c0 / (c1 + n^p), defined for step index n >= 1.
// The exponent window (1/2, 1] keeps the schedule square-summable-vs-not in
// the standard stochastic-approximation sense.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::single;
  double c0 = 100.0;
  double c1 = 1000.0;
  double p = 2.0 / 3.0;

  void validate() const {
    if (!(c0 > 0.0)) throw parameter_error("ScheduleSpec: c0 must be > 0");
    if (!(c1 >= 0.0)) throw parameter_error("ScheduleSpec: c1 must be >= 0");
    if (!(p > 0.5 && p <= 1.0))
      throw parameter_error("ScheduleSpec: exponent must lie in (1/2, 1]");
  }

  bool operator==(const ScheduleSpec&) const = default;
};

inline double step_size(const ScheduleSpec& spec, long long n) {
  if (n < 1) throw parameter_error("step_size: step index must be >= 1");
  const double factor = spec.kind == ScheduleKind::critic_eta ? 0.95 : 1.0;
  return factor * spec.c0 /
         (spec.c1 + std::pow(static_cast<double>(n), spec.p));
}

// Benchmark presets.  The small problem family (30 states) runs
// 100/(1000 + n^(2/3)) critic schedules with a 1000/(1e5 + n) actor; the
// large family (100 states) runs 1e5/(1e6 + n^(2/3)) and 1e6/(1e8 + n).
struct SchedulePreset {
  ScheduleSpec single;      // the common schedule of the single-time-scale run
  ScheduleSpec critic_w;    // two-time-scale baseline, w iterate
  ScheduleSpec critic_eta;  // two-time-scale baseline, eta iterate (0.95x)
  ScheduleSpec actor;       // two-time-scale baseline, theta iterate
};

inline SchedulePreset preset_small() {
  SchedulePreset preset;
  preset.single = {ScheduleKind::single, 100.0, 1000.0, 2.0 / 3.0};
  preset.critic_w = {ScheduleKind::critic_w, 100.0, 1000.0, 2.0 / 3.0};
  preset.critic_eta = {ScheduleKind::critic_eta, 100.0, 1000.0, 2.0 / 3.0};
  preset.actor = {ScheduleKind::actor, 1000.0, 1e5, 1.0};
  return preset;
}

inline SchedulePreset preset_large() {
  SchedulePreset preset;
  preset.single = {ScheduleKind::single, 1e5, 1e6, 2.0 / 3.0};
  preset.critic_w = {ScheduleKind::critic_w, 1e5, 1e6, 2.0 / 3.0};
  preset.critic_eta = {ScheduleKind::critic_eta, 1e5, 1e6, 2.0 / 3.0};
  preset.actor = {ScheduleKind::actor, 1e6, 1e8, 1.0};
  return preset;
}

}  // namespace tdac
