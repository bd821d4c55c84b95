#pragma once

#include <string>
#include <vector>

#include "badm/common.hpp"

namespace badm {

enum class ScheduleKind { cosine, linear };

ScheduleKind parse_schedule_kind(const std::string& name);
std::string to_string(ScheduleKind kind);

// Cumulative signal levels ᾱ_t for t = 0..T: alpha_bar[0] = 1 exactly,
// strictly decreasing, alpha_bar[T] < 1e-3.
struct DiffusionSchedule {
  int T = 0;
  std::vector<Scalar> alpha_bar;
};

DiffusionSchedule make_schedule(int T, ScheduleKind kind);

}  // namespace badm
