#include "badm/skeleton.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace badm {

void Skeleton::validate() const {
  const int n = n_joints();
  if (n < 2) fail(ErrorKind::validation, "BadTopology", "need at least 2 joints, got ", n);
  if (int(rest_offsets.size()) != n || int(joint_names.size()) != n)
    fail(ErrorKind::validation, "BadTopology", "field lengths disagree: ", n, " parents, ",
         rest_offsets.size(), " offsets, ", joint_names.size(), " names");
  if (parents[0] != -1)
    fail(ErrorKind::validation, "BadTopology", "joint 0 must be the root, parent is ", parents[0]);
  for (int j = 1; j < n; ++j) {
    if (parents[j] < 0 || parents[j] >= j)
      fail(ErrorKind::validation, "BadTopology", "parent of joint ", j, " is ", parents[j],
           "; parents must precede children");
    if (rest_offsets[j].norm() <= 0)
      fail(ErrorKind::validation, "BadTopology", "joint ", j, " has a zero-length rest offset");
  }
  std::set<int> feet;
  for (int f : foot_points) {
    if (f < 0 || f >= n)
      fail(ErrorKind::validation, "BadTopology", "foot point ", f, " out of range");
    feet.insert(f);
  }
  if (feet.size() != 4)
    fail(ErrorKind::validation, "BadTopology", "foot points must be 4 distinct joints");
}

Skeleton canonical_skeleton() {
  Skeleton s;
  // name, parent, offset (x: left, y: up, z: forward), meters
  struct Row {
    const char* name;
    int parent;
    Scalar x, y, z;
  };
  static const Row kTable[] = {
      {"pelvis", -1, 0.000, 0.000, 0.000},
      {"left_hip", 0, 0.090, -0.060, 0.000},
      {"right_hip", 0, -0.090, -0.060, 0.000},
      {"spine1", 0, 0.000, 0.110, 0.000},
      {"left_knee", 1, 0.020, -0.400, 0.000},
      {"right_knee", 2, -0.020, -0.400, 0.000},
      {"spine2", 3, 0.000, 0.130, 0.000},
      {"left_ankle", 4, 0.000, -0.420, 0.000},
      {"right_ankle", 5, 0.000, -0.420, 0.000},
      {"spine3", 6, 0.000, 0.050, 0.000},
      {"left_toe", 7, 0.000, -0.060, 0.130},
      {"right_toe", 8, 0.000, -0.060, 0.130},
      {"neck", 9, 0.000, 0.220, 0.000},
      {"left_collar", 9, 0.070, 0.120, 0.000},
      {"right_collar", 9, -0.070, 0.120, 0.000},
      {"head", 12, 0.000, 0.120, 0.000},
      {"left_shoulder", 13, 0.100, 0.040, 0.000},
      {"right_shoulder", 14, -0.100, 0.040, 0.000},
      {"left_elbow", 16, 0.260, 0.000, 0.000},
      {"right_elbow", 17, -0.260, 0.000, 0.000},
      {"left_wrist", 18, 0.250, 0.000, 0.000},
      {"right_wrist", 19, -0.250, 0.000, 0.000},
      {"left_hand", 20, 0.080, 0.000, 0.000},
      {"right_hand", 21, -0.080, 0.000, 0.000},
  };
  for (const Row& r : kTable) {
    s.joint_names.emplace_back(r.name);
    s.parents.push_back(r.parent);
    s.rest_offsets.emplace_back(r.x, r.y, r.z);
  }
  s.foot_points = {7, 10, 8, 11};  // left heel, left toe, right heel, right toe
  s.validate();
  return s;
}

Skeleton load_skeleton(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "FileNotFound", "cannot open skeleton file ", path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::io, "BadFormat", "skeleton file ", path, " is not valid JSON: ", e.what());
  }
  if (!j.is_object() || j.value("format", "") != std::string("badm.skeleton"))
    fail(ErrorKind::io, "BadFormat", path, ": missing format tag badm.skeleton");
  if (j.value("version", 0) != 1)
    fail(ErrorKind::io, "BadVersion", path, ": unsupported skeleton version ", j.value("version", 0));
  Skeleton s;
  try {
    s.joint_names = j.at("joint_names").get<std::vector<std::string>>();
    s.parents = j.at("parents").get<std::vector<int>>();
    for (const auto& o : j.at("rest_offsets")) {
      if (!o.is_array() || o.size() != 3)
        fail(ErrorKind::io, "BadFormat", path, ": rest offsets must be [x, y, z] triples");
      s.rest_offsets.emplace_back(o[0].get<Scalar>(), o[1].get<Scalar>(), o[2].get<Scalar>());
    }
    const auto feet = j.at("foot_points").get<std::vector<int>>();
    if (feet.size() != 4)
      fail(ErrorKind::validation, "BadTopology", path, ": foot_points must list 4 joints");
    std::copy(feet.begin(), feet.end(), s.foot_points.begin());
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorKind::io, "BadFormat", path, ": ", e.what());
  }
  s.validate();
  return s;
}

void save_skeleton(const Skeleton& s, const std::string& path) {
  nlohmann::json j;
  j["format"] = "badm.skeleton";
  j["version"] = 1;
  j["joint_names"] = s.joint_names;
  j["parents"] = s.parents;
  auto offsets = nlohmann::json::array();
  for (const Vec3& o : s.rest_offsets) offsets.push_back({o.x(), o.y(), o.z()});
  j["rest_offsets"] = offsets;
  j["foot_points"] = std::vector<int>(s.foot_points.begin(), s.foot_points.end());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "FileNotFound", "cannot write skeleton file ", path);
  out << j.dump(2) << "\n";
}

}  // namespace badm
