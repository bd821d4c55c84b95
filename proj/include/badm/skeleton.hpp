#pragma once

#include "badm/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace badm {

// Rigid skeleton: a parent tree plus rest-pose bone offsets (meters, Y up).
// foot_points are the joints used for contact labels and the foot losses,
// ordered [left heel, left toe, right heel, right toe].
struct Skeleton {
  std::vector<std::string> joint_names;
  std::vector<int> parents;       // parents[0] == -1, parents[j] < j
  std::vector<Vec3> rest_offsets; // offset from parent, in the parent frame
  std::array<int, 4> foot_points{};

  int n_joints() const { return int(parents.size()); }

  // Throws BadTopology on malformed trees, zero-length bones, or bad
  // foot point indices.
  void validate() const;
};

// The skeleton this project ships: 24 joints, pelvis-rooted, heels are the
// ankle joints and toes are the foot-tip joints. The same table lives in
// data/skeleton.json (version 1); a test keeps the two in sync.
Skeleton canonical_skeleton();

Skeleton load_skeleton(const std::string& path);
void save_skeleton(const Skeleton& s, const std::string& path);

}  // namespace badm
