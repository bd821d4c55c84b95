#include "badm/schedule.hpp"

#include <cmath>

namespace badm {

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "cosine") return ScheduleKind::cosine;
  if (name == "linear") return ScheduleKind::linear;
  fail(ErrorKind::validation, "BadScheduleKind", "unknown schedule '", name,
       "' (expected cosine or linear)");
}

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::cosine ? "cosine" : "linear";
}

DiffusionSchedule make_schedule(int T, ScheduleKind kind) {
  if (T < 1) fail(ErrorKind::validation, "BadT", "schedule needs T >= 1, got ", T);
  DiffusionSchedule s;
  s.T = T;
  s.alpha_bar.resize(size_t(T) + 1);
  s.alpha_bar[0] = 1;
  if (kind == ScheduleKind::cosine) {
    // Squared-cosine signal decay, normalized so the level at t = 0 is 1.
    constexpr Scalar kOffset = 0.008;
    const auto f = [](Scalar u) {
      const Scalar c = std::cos((u + kOffset) / (1 + kOffset) * (kPi / 2));
      return c * c;
    };
    const Scalar f0 = f(0);
    for (int t = 1; t <= T; ++t) s.alpha_bar[size_t(t)] = f(Scalar(t) / T) / f0;
  } else {
    // Linear signal decay down to 1e-4, which keeps alpha_bar[T] < 1e-3 for
    // every T (a beta-linear schedule would not for small T).
    constexpr Scalar kFloor = 1e-4;
    for (int t = 1; t <= T; ++t)
      s.alpha_bar[size_t(t)] = 1 - Scalar(t) / T * (1 - kFloor);
  }
  return s;
}

}  // namespace badm
